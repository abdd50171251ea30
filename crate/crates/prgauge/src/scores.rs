//! Scalar generalization predictors extracted from a PR curve.
//!
//! The Gi-score is a Gini-coefficient analogue: the PCD curve of the actual
//! network is compared against the idealized network's 45° line, and the
//! area between the two is divided by the total area under the idealized
//! line. 0 means fully invariant, 1 means accuracy 0 everywhere.
//!
//! The Pal-score is a Palma-ratio analogue: the trapezoid segment area at
//! the 60% magnitude position divided by the segment area at the 10%
//! position. The literal per-segment form is the default; a cumulative mode
//! instead ratios the accuracy mass integrated over the top-60% and
//! bottom-10% magnitude ranges. Pal assumes a roughly monotone PR curve and
//! is refused for signed-range perturbations unless forced.
//!
//! Both consume normalized magnitudes only, so they are invariant to affine
//! rescaling of the raw grid.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::Network;
use crate::perturb::{self, PerturbationSpec};
use crate::prcurve::{self, PrCurve};
use crate::rng::{self, TAG_MEASURE};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    HigherBetter,
    LowerBetter,
}

impl Orientation {
    pub fn tag(self) -> &'static str {
        match self {
            Orientation::HigherBetter => "higher_better",
            Orientation::LowerBetter => "lower_better",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "higher_better" => Ok(Orientation::HigherBetter),
            "lower_better" => Ok(Orientation::LowerBetter),
            other => Err(Error::invalid(format!("unknown orientation `{other}`"))),
        }
    }
}

/// One named measurement for one model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureValue {
    pub name: String,
    pub value: f64,
    pub orientation: Orientation,
}

/// Measure naming: `gi_intra_l0`, `pal_inter_l1`, `mean_pr_rotate_l0`, …
/// The single-magnitude interpolation accuracy keeps its conventional short
/// name `mixup_l{layer}`.
pub fn measure_name(stat: &str, spec: &PerturbationSpec) -> String {
    if stat == "mixup" {
        return format!("mixup_l{}", spec.layer);
    }
    format!("{stat}_{}", spec.tag())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PalMode {
    /// Algorithm-literal: single trapezoid segment at each index.
    Literal,
    /// Accuracy mass integrated over the top-60% vs bottom-10% ranges.
    Cumulative,
}

impl Default for PalMode {
    fn default() -> Self {
        PalMode::Literal
    }
}

/// Gi-score of a normalized curve; lies in [0, 1] for accuracies in [0, 1].
///
/// With `x` the normalized grid and `a_t` the cumulative trapezoid of the
/// accuracies, the score is `∫ (x − a_t) dx / (x_n²/2)`.
pub fn gi_score(curve: &PrCurve) -> Result<f64> {
    curve.validate()?;
    let x = curve.norm()?;
    let a_t = stats::cumulative_trapezoid(x, &curve.accuracies);
    let d: Vec<f64> = x.iter().zip(&a_t).map(|(xi, ai)| xi - ai).collect();
    let last = *x.last().unwrap();
    Ok(stats::trapezoid(x, &d) / (0.5 * last * last))
}

/// Pal-score in the literal per-segment form; see [`pal_score_opts`] for the
/// cumulative mode and the signed-range override.
pub fn pal_score(curve: &PrCurve) -> Result<f64> {
    pal_score_opts(curve, PalMode::Literal, false)
}

pub fn pal_score_opts(curve: &PrCurve, mode: PalMode, force: bool) -> Result<f64> {
    curve.validate()?;
    if curve.spec.is_signed_range() && !force {
        return Err(Error::PalRefused { kind: curve.spec.kind.to_string() });
    }
    let x = curve.norm()?;
    let acc = &curve.accuracies;
    let n = x.len();
    if n < 11 {
        return Err(Error::invalid(format!(
            "Pal-score needs at least 11 grid points, got {n}"
        )));
    }
    match mode {
        PalMode::Literal => {
            // per-segment trapezoid areas, no cumulative sum
            let mut a_t = vec![0.0; n];
            for i in 0..n - 1 {
                a_t[i + 1] = 0.5 * (x[i + 1] - x[i]) * (acc[i] + acc[i + 1]);
            }
            // integer arithmetic keeps floor(p·(n−1)) exact
            let top_idx = 6 * (n - 1) / 10;
            let bottom_idx = ((n - 1) / 10).max(1);
            if a_t[bottom_idx] == 0.0 {
                return Err(Error::DegeneratePal);
            }
            Ok(a_t[top_idx] / a_t[bottom_idx])
        }
        PalMode::Cumulative => {
            let top = range_area(x, acc, 0.4, 1.0);
            let bottom = range_area(x, acc, 0.0, 0.1);
            if bottom == 0.0 {
                return Err(Error::DegeneratePal);
            }
            Ok(top / bottom)
        }
    }
}

/// Trapezoidal accuracy mass over `[lo, hi]` in normalized magnitude, with
/// linear interpolation at the cut points.
fn range_area(x: &[f64], acc: &[f64], lo: f64, hi: f64) -> f64 {
    let value_at = |t: f64| -> f64 {
        if t <= x[0] {
            return acc[0];
        }
        for i in 0..x.len() - 1 {
            if t <= x[i + 1] {
                let f = (t - x[i]) / (x[i + 1] - x[i]);
                return acc[i] + f * (acc[i + 1] - acc[i]);
            }
        }
        *acc.last().unwrap()
    };
    let mut xs = vec![lo];
    let mut ys = vec![value_at(lo)];
    for (xi, ai) in x.iter().zip(acc) {
        if *xi > lo && *xi < hi {
            xs.push(*xi);
            ys.push(*ai);
        }
    }
    xs.push(hi);
    ys.push(value_at(hi));
    stats::trapezoid(&xs, &ys)
}

/// The single stored accuracy at grid magnitude `alpha0`.
pub fn point_score(curve: &PrCurve, alpha0: f64) -> Result<f64> {
    curve.validate()?;
    curve
        .alphas
        .iter()
        .position(|&a| (a - alpha0).abs() <= 1e-12)
        .map(|i| curve.accuracies[i])
        .ok_or_else(|| {
            Error::invalid(format!(
                "magnitude {alpha0} is not on the curve grid; evaluate it directly with a model"
            ))
        })
}

/// Evaluates `𝒜_{α₀}` directly on sampled batches when the magnitude is not
/// on any stored grid.
pub fn point_accuracy(
    net: &Network,
    dataset: &Dataset,
    spec: &PerturbationSpec,
    alpha0: f64,
    n_b: usize,
    b_s: usize,
    seed: u64,
) -> Result<f64> {
    if b_s < 2 || dataset.len() < b_s {
        return Err(Error::invalid("batch size must be >= 2 and fit the dataset"));
    }
    let mut stream = rng::stream(seed, &[TAG_MEASURE, 1]);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    crate::data::shuffle(&mut order, &mut stream);
    let effective = n_b.max(1).min(dataset.len() / b_s);
    let mut correct = 0usize;
    let mut kept = 0usize;
    for b in 0..effective {
        let slice = &order[b * b_s..(b + 1) * b_s];
        let xs: Vec<Vec<f64>> = slice.iter().map(|&j| dataset.inputs[j].clone()).collect();
        let ys: Vec<u16> = slice.iter().map(|&j| dataset.labels[j]).collect();
        let (c, k) = prcurve::batch_perturbed_accuracy(net, &xs, &ys, spec, alpha0, &mut stream)?;
        correct += c;
        kept += k;
    }
    if kept == 0 {
        return Err(Error::AllBatchesDropped { alpha: alpha0 });
    }
    Ok(correct as f64 / kept as f64)
}

/// Arithmetic mean of the curve's accuracies: `(1/n_p) Σ 𝒜_{α_i}`.
pub fn mean_pr_accuracy(curve: &PrCurve) -> f64 {
    stats::mean(&curve.accuracies)
}

/// Accuracy on a random subset whose every sample is perturbed with an
/// independent uniform magnitude from the full raw range.
pub fn augmented_subset_accuracy(
    net: &Network,
    dataset: &Dataset,
    spec: &PerturbationSpec,
    subset_fraction: f64,
    seed: u64,
) -> Result<f64> {
    if !(subset_fraction > 0.0 && subset_fraction <= 1.0) {
        return Err(Error::invalid("subset fraction must lie in (0, 1]"));
    }
    if spec.kind.is_mixup() {
        return Err(Error::invalid(
            "augmented-subset accuracy applies elementwise perturbations, not interpolation",
        ));
    }
    if dataset.is_empty() {
        return Err(Error::EmptyData);
    }
    let n_sub = (((dataset.len() as f64) * subset_fraction).round() as usize).max(1);
    let mut stream = rng::stream(seed, &[TAG_MEASURE, 2]);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    crate::data::shuffle(&mut order, &mut stream);
    let tap = net.tap_for_level(spec.layer)?;
    let shape = net.shape_at(tap)?;
    let mut correct = 0usize;
    for &i in order.iter().take(n_sub) {
        let magnitude = if spec.alpha_min == spec.alpha_max {
            spec.alpha_min
        } else {
            stream.random_range(spec.alpha_min..=spec.alpha_max)
        };
        let h = net.forward_tap(&dataset.inputs[i], tap)?;
        let perturbed = perturb::apply_elementwise(spec.kind, &h, &shape, magnitude, &mut stream)?;
        let out = net.forward_from(tap, &perturbed)?;
        if crate::nn::argmax(&out) == dataset.labels[i] as usize {
            correct += 1;
        }
    }
    Ok(correct as f64 / n_sub as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prcurve::synthetic_curve;
    use crate::rng;

    fn uniform_curve(acc: Vec<f64>) -> PrCurve {
        let n = acc.len();
        let alphas: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        synthetic_curve(alphas, acc).unwrap()
    }

    #[test]
    fn gi_idealized_is_zero() {
        let c = uniform_curve(vec![1.0; 11]);
        assert_eq!(gi_score(&c).unwrap(), 0.0);
    }

    #[test]
    fn gi_worst_case_is_one() {
        let c = uniform_curve(vec![0.0; 11]);
        assert!((gi_score(&c).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gi_three_point_hand_oracle() {
        // a_t = [0, 0.375, 0.5]; d = [0, 0.125, 0.5]; ∫d = 0.1875; /0.5 = 0.375
        let c = synthetic_curve(vec![0.0, 0.5, 1.0], vec![1.0, 0.5, 0.0]).unwrap();
        assert!((gi_score(&c).unwrap() - 0.375).abs() < 1e-12);
    }

    #[test]
    fn gi_dense_linear_converges_to_third() {
        let n = 1001;
        let alphas: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let acc: Vec<f64> = alphas.iter().map(|&a| 1.0 - a).collect();
        let c = synthetic_curve(alphas, acc).unwrap();
        assert!((gi_score(&c).unwrap() - 1.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn gi_affine_rescale_invariant() {
        let acc = vec![1.0, 0.9, 0.85, 0.6, 0.5, 0.45, 0.3, 0.3, 0.2, 0.1, 0.05];
        let a = uniform_curve(acc.clone());
        let degrees: Vec<f64> = (0..11).map(|i| -90.0 + 18.0 * i as f64).collect();
        let b = synthetic_curve(degrees, acc).unwrap();
        assert!((gi_score(&a).unwrap() - gi_score(&b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn gi_requires_normalization() {
        let mut c = uniform_curve(vec![1.0; 11]);
        c.norm_alphas = None;
        assert!(matches!(gi_score(&c), Err(Error::UnnormalizedCurve)));
    }

    #[test]
    fn pal_constant_curve_is_one() {
        let c = uniform_curve(vec![0.7; 11]);
        assert_eq!(pal_score(&c).unwrap(), 1.0);
        // cumulative mode ratios range masses: (0.6·0.7)/(0.1·0.7) = 6
        let cum = pal_score_opts(&c, PalMode::Cumulative, false).unwrap();
        assert!((cum - 6.0).abs() < 1e-12);
    }

    #[test]
    fn pal_linear_hand_oracle() {
        // n = 11 uniform grid, A = 1 − α: a_t[6] = 0.045, a_t[1] = 0.095
        let acc: Vec<f64> = (0..11).map(|i| 1.0 - i as f64 / 10.0).collect();
        let c = uniform_curve(acc);
        assert!((pal_score(&c).unwrap() - 9.0 / 19.0).abs() < 1e-12);
    }

    #[test]
    fn pal_monotone_at_most_one_on_uniform_grids() {
        let mut r = rng::stream(17, &[1]);
        for _ in 0..500 {
            let mut acc: Vec<f64> = (0..11).map(|_| r.random_range(0.05..1.0)).collect();
            acc.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let c = uniform_curve(acc);
            let pal = pal_score(&c).unwrap();
            assert!(pal <= 1.0 + 1e-12, "monotone non-increasing curve gave pal {pal}");
        }
    }

    #[test]
    fn pal_too_few_points_and_degenerate() {
        let c = uniform_curve(vec![1.0; 5]);
        assert!(pal_score(&c).is_err());
        let mut acc = vec![0.0; 11];
        acc[7] = 0.5;
        acc[8] = 0.9;
        let c = uniform_curve(acc);
        assert!(matches!(pal_score(&c), Err(Error::DegeneratePal)));
    }

    #[test]
    fn pal_refused_on_signed_ranges() {
        let degrees: Vec<f64> = (0..11).map(|i| -90.0 + 18.0 * i as f64).collect();
        let mut c = synthetic_curve(degrees, vec![0.5; 11]).unwrap();
        c.spec = PerturbationSpec::rotate_narrow();
        assert!(matches!(pal_score(&c), Err(Error::PalRefused { .. })));
        assert!(pal_score_opts(&c, PalMode::Literal, true).is_ok());
    }

    #[test]
    fn point_score_on_grid() {
        let acc: Vec<f64> = (0..11).map(|i| 1.0 - 0.05 * i as f64).collect();
        let c = uniform_curve(acc.clone());
        assert_eq!(point_score(&c, 0.0).unwrap(), acc[0]);
        assert_eq!(point_score(&c, 1.0).unwrap(), acc[10]);
        assert_eq!(point_score(&c, 0.5).unwrap(), acc[5]);
        assert!(point_score(&c, 0.33).is_err());
    }

    #[test]
    fn mean_pr_examples() {
        assert_eq!(mean_pr_accuracy(&uniform_curve(vec![0.4; 7])), 0.4);
        let c = synthetic_curve(vec![0.0, 1.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(mean_pr_accuracy(&c), 0.5);
        let acc = vec![0.9, 0.1, 0.5, 0.7, 0.2];
        let c = synthetic_curve((0..5).map(|i| i as f64).collect(), acc.clone()).unwrap();
        let manual: f64 = acc.iter().sum::<f64>() / acc.len() as f64;
        assert!((mean_pr_accuracy(&c) - manual).abs() < 1e-15);
    }

    #[test]
    fn measure_names() {
        assert_eq!(measure_name("gi", &PerturbationSpec::mixup_intra(0)), "gi_intra_l0");
        assert_eq!(measure_name("pal", &PerturbationSpec::mixup_inter(1)), "pal_inter_l1");
        assert_eq!(measure_name("mixup", &PerturbationSpec::mixup_intra(1)), "mixup_l1");
        assert_eq!(measure_name("mean_pr", &PerturbationSpec::rotate_narrow()), "mean_pr_rotate_l0");
    }
}
