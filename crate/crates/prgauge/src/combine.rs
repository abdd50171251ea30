//! Combining score columns across a corpus of models.
//!
//! All methods operate on a [`ScoreMatrix`]: one row per model, one named
//! column per measure. Because Gi and Pal-scores are anti-correlated, any
//! combination that mixes the two families first negates the Pal columns so
//! every combined column points the same way ([`orient`]). Methods:
//!
//! * PCA / NPCA — project onto the first principal component of the column
//!   covariance (NPCA standardizes columns first);
//! * AVG / PROD / PROD+AVG — elementwise mean, product, product plus mean;
//! * AVG RANK — replace each column by ranks 1..m (ties averaged), then
//!   average the rank columns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scores::Orientation;
use crate::stats;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreColumn {
    pub name: String,
    pub values: Vec<f64>,
    pub orientation: Orientation,
}

/// Score columns over a fixed model roster; every column is complete
/// (models with missing values must be excluded before construction).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub model_ids: Vec<String>,
    pub columns: Vec<ScoreColumn>,
    /// Set once [`orient`] has run; a second orientation is then a no-op.
    #[serde(default)]
    pub oriented: bool,
}

impl ScoreMatrix {
    pub fn new(model_ids: Vec<String>, columns: Vec<ScoreColumn>) -> Result<Self> {
        if model_ids.len() < 2 {
            return Err(Error::ScoreMatrix("need at least 2 models".into()));
        }
        if columns.is_empty() {
            return Err(Error::ScoreMatrix("need at least one column".into()));
        }
        for col in &columns {
            if col.values.len() != model_ids.len() {
                return Err(Error::ScoreMatrix(format!(
                    "column `{}` has {} values for {} models",
                    col.name,
                    col.values.len(),
                    model_ids.len()
                )));
            }
            if col.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::ScoreMatrix(format!(
                    "column `{}` has missing or non-finite values",
                    col.name
                )));
            }
        }
        let mut names: Vec<&str> = columns.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != columns.len() {
            return Err(Error::ScoreMatrix("duplicate column names".into()));
        }
        Ok(ScoreMatrix { model_ids, columns, oriented: false })
    }

    pub fn num_models(&self) -> usize {
        self.model_ids.len()
    }

    pub fn column(&self, name: &str) -> Result<&ScoreColumn> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::ScoreMatrix(format!("no column named `{name}`")))
    }

    /// Submatrix with exactly the requested columns, in the requested order.
    pub fn select(&self, names: &[&str]) -> Result<ScoreMatrix> {
        let columns = names
            .iter()
            .map(|n| self.column(n).cloned())
            .collect::<Result<Vec<_>>>()?;
        Ok(ScoreMatrix { model_ids: self.model_ids.clone(), columns, oriented: self.oriented })
    }
}

/// Score family for the Pal-negation rule, read from the name prefix.
fn family(name: &str) -> &str {
    name.split('_').next().unwrap_or(name)
}

/// Applies the sign convention for mixed-family matrices: when Gi and Pal
/// columns are combined, Pal columns are negated so both share Gi's
/// direction. Already-oriented matrices pass through unchanged.
pub fn orient(matrix: &ScoreMatrix) -> ScoreMatrix {
    if matrix.oriented {
        return matrix.clone();
    }
    let has_gi = matrix.columns.iter().any(|c| family(&c.name) == "gi");
    let has_pal = matrix.columns.iter().any(|c| family(&c.name) == "pal");
    let mut out = matrix.clone();
    if has_gi && has_pal {
        for col in &mut out.columns {
            if family(&col.name) == "pal" {
                for v in &mut col.values {
                    *v = -*v;
                }
                col.orientation = Orientation::HigherBetter;
            }
        }
    }
    out.oriented = true;
    out
}

fn require_columns(matrix: &ScoreMatrix, at_least: usize) -> Result<()> {
    if matrix.columns.len() < at_least {
        return Err(Error::ScoreMatrix(format!(
            "combination needs at least {at_least} columns, got {}",
            matrix.columns.len()
        )));
    }
    Ok(())
}

const POWER_ITER_MAX: usize = 10_000;
const POWER_ITER_TOL: f64 = 1e-14;

/// Projects the rows onto the first principal component of the column
/// covariance.
///
/// Columns are centered (and standardized when `standardize` is set — the
/// NPCA variant). The component is found by power iteration on the p×p
/// covariance and its sign is fixed so the projection correlates
/// non-negatively with the first input column.
pub fn pca_combine(matrix: &ScoreMatrix, standardize: bool) -> Result<Vec<f64>> {
    require_columns(matrix, 2)?;
    let m = matrix.num_models();
    let p = matrix.columns.len();

    // center, optionally standardize
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(p);
    for col in &matrix.columns {
        let mu = stats::mean(&col.values);
        let mut v: Vec<f64> = col.values.iter().map(|x| x - mu).collect();
        if standardize {
            let sd = stats::std_dev(&col.values);
            if sd == 0.0 {
                return Err(Error::ZeroVariance { name: col.name.clone() });
            }
            for x in &mut v {
                *x /= sd;
            }
        }
        cols.push(v);
    }

    // p×p covariance (sample, n−1 denominator)
    let mut cov = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in i..p {
            let s: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
            cov[i][j] = s / (m - 1) as f64;
            cov[j][i] = cov[i][j];
        }
    }

    // power iteration from the uniform direction
    let mut v = vec![1.0 / (p as f64).sqrt(); p];
    let mut converged = false;
    for _ in 0..POWER_ITER_MAX {
        let mut w = vec![0.0; p];
        for i in 0..p {
            for j in 0..p {
                w[i] += cov[i][j] * v[j];
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(Error::ScoreMatrix(
                "covariance is zero; columns carry no variance to project".into(),
            ));
        }
        for x in &mut w {
            *x /= norm;
        }
        let delta = w.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = w;
        if delta < POWER_ITER_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::PowerIterationFailed { steps: POWER_ITER_MAX });
    }

    // project rows, then fix the sign against the first column
    let mut proj = vec![0.0; m];
    for (j, col) in cols.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            proj[i] += x * v[j];
        }
    }
    let corr: f64 = proj.iter().zip(&cols[0]).map(|(a, b)| a * b).sum();
    if corr < 0.0 {
        for x in &mut proj {
            *x = -*x;
        }
    }
    Ok(proj)
}

/// Elementwise mean across columns.
pub fn avg(matrix: &ScoreMatrix) -> Result<Vec<f64>> {
    require_columns(matrix, 2)?;
    let m = matrix.num_models();
    let p = matrix.columns.len() as f64;
    Ok((0..m)
        .map(|i| matrix.columns.iter().map(|c| c.values[i]).sum::<f64>() / p)
        .collect())
}

/// Elementwise product across columns.
pub fn prod(matrix: &ScoreMatrix) -> Result<Vec<f64>> {
    require_columns(matrix, 2)?;
    let m = matrix.num_models();
    Ok((0..m)
        .map(|i| matrix.columns.iter().map(|c| c.values[i]).product::<f64>())
        .collect())
}

/// Elementwise product plus mean across columns.
pub fn prod_plus_avg(matrix: &ScoreMatrix) -> Result<Vec<f64>> {
    let products = prod(matrix)?;
    let means = avg(matrix)?;
    Ok(products.iter().zip(&means).map(|(p, a)| p + a).collect())
}

/// Rank-transform every column (smallest value gets rank 1, ties share the
/// average rank), then average the rank columns.
pub fn avg_rank(matrix: &ScoreMatrix) -> Result<Vec<f64>> {
    require_columns(matrix, 2)?;
    let m = matrix.num_models();
    let p = matrix.columns.len() as f64;
    let ranked: Vec<Vec<f64>> =
        matrix.columns.iter().map(|c| stats::average_ranks(&c.values)).collect();
    Ok((0..m)
        .map(|i| ranked.iter().map(|r| r[i]).sum::<f64>() / p)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineMethod {
    Pca,
    Npca,
    Avg,
    Prod,
    ProdPlusAvg,
    AvgRank,
}

impl CombineMethod {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "pca" => CombineMethod::Pca,
            "npca" => CombineMethod::Npca,
            "avg" => CombineMethod::Avg,
            "prod" => CombineMethod::Prod,
            "prod_avg" | "prod_plus_avg" => CombineMethod::ProdPlusAvg,
            "avg_rank" => CombineMethod::AvgRank,
            other => return Err(Error::invalid(format!("unknown combination method `{other}`"))),
        })
    }

    pub fn tag(self) -> &'static str {
        match self {
            CombineMethod::Pca => "pca",
            CombineMethod::Npca => "npca",
            CombineMethod::Avg => "avg",
            CombineMethod::Prod => "prod",
            CombineMethod::ProdPlusAvg => "prod_avg",
            CombineMethod::AvgRank => "avg_rank",
        }
    }
}

/// Orients the matrix, then applies the method.
pub fn combine(matrix: &ScoreMatrix, method: CombineMethod) -> Result<Vec<f64>> {
    let oriented = orient(matrix);
    match method {
        CombineMethod::Pca => pca_combine(&oriented, false),
        CombineMethod::Npca => pca_combine(&oriented, true),
        CombineMethod::Avg => avg(&oriented),
        CombineMethod::Prod => prod(&oriented),
        CombineMethod::ProdPlusAvg => prod_plus_avg(&oriented),
        CombineMethod::AvgRank => avg_rank(&oriented),
    }
}
