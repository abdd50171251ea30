//! Conditional Mutual Information between a measure's pairwise orderings and
//! the generalization-gap orderings.
//!
//! For every unordered model pair within a conditioning group, two sign
//! variables are formed: `V_g = sign(g_f − g_f′)` and `V_μ = sign(μ_f − μ_f′)`
//! with the pair oriented by canonical model-id order. Pairs where either
//! difference is exactly zero are dropped as ties (the variables are
//! Bernoulli). Within each group the joint and marginal probabilities come
//! from pair counts; groups are weighted uniformly (`p_c = 1/#contributing
//! groups`, empty cells contribute nothing). Mutual information is then
//! normalized by the conditional entropy of `V_g`:
//!
//! `Î = ℐ(V_g, V_μ | 𝒪) / ℋ(V_g | 𝒪)`
//!
//! and the final score is the minimum of `Î` over conditioning subsets of
//! hyperparameter axes (all subsets up to a size cap, plus the full axis
//! set). Logs are natural; the ratio is base-invariant. `0·log 0 = 0`.
//!
//! Subsets that yield no usable pair cannot define probabilities at all;
//! they are reported as skipped and excluded from the minimum. Subsets where
//! the gap ordering is constant within every group (`ℋ = 0`) are defined to
//! score 0 and carry a diagnostic flag.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A trained corpus entry: hyperparameter assignment plus measured
/// accuracies. The generalization gap is always the exact difference.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelRecord {
    pub id: String,
    pub hyperparams: BTreeMap<String, String>,
    pub train_acc: f64,
    pub test_acc: f64,
}

impl ModelRecord {
    pub fn gap(&self) -> f64 {
        self.train_acc - self.test_acc
    }
}

/// Serializes a corpus manifest: a JSON array of [`ModelRecord`].
pub fn manifest_to_json(records: &[ModelRecord]) -> Result<String> {
    Ok(serde_json::to_string_pretty(records)?)
}

pub fn manifest_from_json(text: &str) -> Result<Vec<ModelRecord>> {
    Ok(serde_json::from_str(text)?)
}

/// Sign pair (V_g, V_μ) for one non-tied model pair; +1 or −1 each.
pub type SignPair = (i8, i8);

/// Enumerates unordered pairs in the given (canonical) order and returns the
/// sign pairs; pairs with a zero difference in either coordinate are dropped
/// and counted.
pub fn pair_signs(gaps: &[f64], values: &[f64]) -> (Vec<SignPair>, usize) {
    debug_assert_eq!(gaps.len(), values.len());
    let mut pairs = Vec::new();
    let mut ties = 0usize;
    for i in 0..gaps.len() {
        for j in (i + 1)..gaps.len() {
            let dg = gaps[i] - gaps[j];
            let dm = values[i] - values[j];
            if dg == 0.0 || dm == 0.0 {
                ties += 1;
                continue;
            }
            pairs.push((sign(dg), sign(dm)));
        }
    }
    (pairs, ties)
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else {
        -1
    }
}

/// Per-subset evaluation details.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubsetReport {
    /// Conditioning axes, sorted.
    pub axes: Vec<String>,
    /// Groups that produced at least one usable pair.
    pub contributing_groups: usize,
    /// Groups skipped for holding fewer than 2 models or only tied pairs.
    pub skipped_groups: usize,
    pub pairs: usize,
    pub dropped_ties: usize,
    /// ℐ(V_g, V_μ | 𝒪), natural log.
    pub mi: f64,
    /// ℋ(V_g | 𝒪), natural log.
    pub entropy: f64,
    /// Î = ℐ/ℋ; `None` when the subset yielded no usable pairs at all
    /// (excluded from the minimum).
    pub normalized: Option<f64>,
    /// Set when ℋ = 0: hyperparameters already determine the gap ordering,
    /// and Î is defined as 0.
    pub degenerate_entropy: bool,
}

/// Full evaluation of one measure over a corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CmiReport {
    pub measure: String,
    pub axes: Vec<String>,
    pub subsets: Vec<SubsetReport>,
    /// `min` over every subset that reported a value.
    pub cmi: f64,
    /// True when no subset could be evaluated; `cmi` is then 0.
    pub degenerate: bool,
}

impl CmiReport {
    /// Plain-text table: one row per conditioning subset.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("measure: {}\n", self.measure));
        out.push_str("conditioning             groups pairs    I        H        I_hat\n");
        for s in &self.subsets {
            let axes = s.axes.join("+");
            let ih = match s.normalized {
                Some(v) => format!("{v:.6}"),
                None => "skipped".to_string(),
            };
            let flag = if s.degenerate_entropy { " [H=0]" } else { "" };
            out.push_str(&format!(
                "{:<24} {:>6} {:>5} {:>9.6} {:>9.6} {}{}\n",
                axes, s.contributing_groups, s.pairs, s.mi, s.entropy, ih, flag
            ));
        }
        out.push_str(&format!(
            "CMI = {:.6}{}\n",
            self.cmi,
            if self.degenerate { "  [degenerate: no usable subset]" } else { "" }
        ));
        out
    }
}

/// ℐ, ℋ and Î for one conditioning subset.
///
/// `records` and `values` must be parallel; grouping uses the values of the
/// axes named in `subset`.
pub fn conditional_mi(
    records: &[ModelRecord],
    values: &[f64],
    subset: &[String],
) -> Result<SubsetReport> {
    if records.len() != values.len() {
        return Err(Error::invalid("records and measure values differ in length"));
    }
    // canonical order: sort by model id once, carry values along
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| records[a].id.cmp(&records[b].id));

    let mut groups: BTreeMap<Vec<&str>, Vec<usize>> = BTreeMap::new();
    for &i in &order {
        let key: Vec<&str> = subset
            .iter()
            .map(|axis| {
                records[i]
                    .hyperparams
                    .get(axis)
                    .map(|v| v.as_str())
                    .ok_or_else(|| Error::invalid(format!("model {} lacks axis `{axis}`", records[i].id)))
            })
            .collect::<Result<_>>()?;
        groups.entry(key).or_default().push(i);
    }

    #[derive(Default)]
    struct GroupCounts {
        // joint counts indexed by (V_g, V_μ) ∈ {+1, −1}²
        npp: usize,
        npm: usize,
        nmp: usize,
        nmm: usize,
    }
    impl GroupCounts {
        fn total(&self) -> usize {
            self.npp + self.npm + self.nmp + self.nmm
        }
    }

    let mut contributing: Vec<GroupCounts> = Vec::new();
    let mut skipped = 0usize;
    let mut dropped_ties = 0usize;
    for members in groups.values() {
        if members.len() < 2 {
            skipped += 1;
            continue;
        }
        let gaps: Vec<f64> = members.iter().map(|&i| records[i].gap()).collect();
        let vals: Vec<f64> = members.iter().map(|&i| values[i]).collect();
        let (pairs, ties) = pair_signs(&gaps, &vals);
        dropped_ties += ties;
        if pairs.is_empty() {
            skipped += 1;
            continue;
        }
        let mut counts = GroupCounts::default();
        for (vg, vm) in pairs {
            match (vg, vm) {
                (1, 1) => counts.npp += 1,
                (1, -1) => counts.npm += 1,
                (-1, 1) => counts.nmp += 1,
                _ => counts.nmm += 1,
            }
        }
        contributing.push(counts);
    }

    let axes_sorted = {
        let mut a = subset.to_vec();
        a.sort();
        a
    };
    let total_pairs: usize = contributing.iter().map(|c| c.total()).sum();
    if contributing.is_empty() {
        return Ok(SubsetReport {
            axes: axes_sorted,
            contributing_groups: 0,
            skipped_groups: skipped,
            pairs: 0,
            dropped_ties,
            mi: 0.0,
            entropy: 0.0,
            normalized: None,
            degenerate_entropy: false,
        });
    }

    let p_c = 1.0 / contributing.len() as f64;
    let xlogx = |p: f64| if p > 0.0 { p * p.ln() } else { 0.0 };
    let mut mi = 0.0;
    let mut entropy = 0.0;
    for c in &contributing {
        let n = c.total() as f64;
        let joint = [
            c.npp as f64 / n,
            c.npm as f64 / n,
            c.nmp as f64 / n,
            c.nmm as f64 / n,
        ];
        let pg_plus = joint[0] + joint[1];
        let pm_plus = joint[0] + joint[2];
        let marg = [
            pg_plus * pm_plus,
            pg_plus * (1.0 - pm_plus),
            (1.0 - pg_plus) * pm_plus,
            (1.0 - pg_plus) * (1.0 - pm_plus),
        ];
        let mut group_mi = 0.0;
        for (j, m) in joint.iter().zip(&marg) {
            if *j > 0.0 && *m > 0.0 {
                group_mi += j * (j / m).ln();
            }
        }
        mi += p_c * group_mi;
        entropy += p_c * (-(xlogx(pg_plus) + xlogx(1.0 - pg_plus)));
    }

    let (normalized, degenerate_entropy) = if entropy > 0.0 {
        (Some(mi / entropy), false)
    } else {
        (Some(0.0), true)
    };
    Ok(SubsetReport {
        axes: axes_sorted,
        contributing_groups: contributing.len(),
        skipped_groups: skipped,
        pairs: total_pairs,
        dropped_ties,
        mi,
        entropy,
        normalized,
        degenerate_entropy,
    })
}

/// Evaluates Î over every non-empty axis subset of size ≤ `max_subset_size`
/// plus the full axis set, and returns the minimum.
pub fn cmi_score(
    records: &[ModelRecord],
    values: &[f64],
    measure: &str,
    max_subset_size: usize,
) -> Result<CmiReport> {
    if records.is_empty() {
        return Err(Error::EmptyData);
    }
    if records.len() != values.len() {
        return Err(Error::invalid("records and measure values differ in length"));
    }
    let axes: Vec<String> = records[0].hyperparams.keys().cloned().collect();
    if axes.is_empty() {
        return Err(Error::invalid("corpus has no hyperparameter axes"));
    }
    for r in records {
        let keys: Vec<String> = r.hyperparams.keys().cloned().collect();
        if keys != axes {
            return Err(Error::invalid(format!(
                "model {} carries axes {:?}, corpus uses {:?}",
                r.id, keys, axes
            )));
        }
    }

    let mut subsets = enumerate_subsets(&axes, max_subset_size.max(1));
    // always include the full axis set
    if !subsets.iter().any(|s| s.len() == axes.len()) {
        subsets.push(axes.clone());
    }

    let mut reports = Vec::with_capacity(subsets.len());
    for subset in &subsets {
        reports.push(conditional_mi(records, values, subset)?);
    }
    let min = reports
        .iter()
        .filter_map(|r| r.normalized)
        .fold(f64::INFINITY, f64::min);
    let degenerate = !min.is_finite();
    Ok(CmiReport {
        measure: measure.to_string(),
        axes,
        subsets: reports,
        cmi: if degenerate { 0.0 } else { min },
        degenerate,
    })
}

/// Non-empty subsets of `axes` of size ≤ `max_size`, ordered by size then
/// lexicographically.
fn enumerate_subsets(axes: &[String], max_size: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let n = axes.len();
    for mask in 1u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if size > max_size {
            continue;
        }
        let subset: Vec<String> = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| axes[i].clone())
            .collect();
        out.push(subset);
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}
