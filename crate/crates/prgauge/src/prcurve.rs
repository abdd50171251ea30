//! Perturbation-response (PR) curves and their cumulative (PCD) form.
//!
//! A PR curve samples a trained network's accuracy at an evenly spaced grid
//! of perturbation magnitudes. For each magnitude the dataset is reshuffled,
//! `n_b` consecutive batches of size `b_s` are drawn, and the batch counts
//! are pooled as `Σ correct / Σ kept` — kept-count weighting, because mixup
//! pairing can drop label-mismatched pairs and shrink a batch's effective
//! size.
//!
//! The PCD curve is the running trapezoidal integral of accuracy over
//! normalized magnitude. An idealized network (accuracy 1 everywhere) has
//! the 45° line as its PCD; the Gi and Pal statistics in [`crate::scores`]
//! compare against it.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::Network;
use crate::perturb::{self, PerturbationKind, PerturbationSpec};
use crate::rng::{self, TAG_CURVE};
use crate::stats;

/// Accuracy samples along a magnitude grid for one model and spec.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrCurve {
    pub alphas: Vec<f64>,
    /// Present after [`normalize`]; maps the grid onto [0, 1].
    pub norm_alphas: Option<Vec<f64>>,
    pub accuracies: Vec<f64>,
    pub kept_counts: Vec<usize>,
    pub spec: PerturbationSpec,
    pub model_id: String,
    pub seed: u64,
    pub n_b: usize,
    pub b_s: usize,
}

impl PrCurve {
    pub fn validate(&self) -> Result<()> {
        let n = self.alphas.len();
        if n < 2 {
            return Err(Error::invalid("curve needs at least 2 grid points"));
        }
        if self.accuracies.len() != n || self.kept_counts.len() != n {
            return Err(Error::invalid("curve arrays differ in length"));
        }
        if self.alphas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("magnitudes must be strictly increasing"));
        }
        if self.accuracies.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::invalid("accuracies must lie in [0, 1]"));
        }
        if let Some(na) = &self.norm_alphas {
            if na.len() != n || na[0] != 0.0 || na[n - 1] != 1.0 {
                return Err(Error::invalid("normalized magnitudes must span [0, 1]"));
            }
        }
        Ok(())
    }

    /// Normalized grid, or an error if [`normalize`] has not run.
    pub fn norm(&self) -> Result<&[f64]> {
        self.norm_alphas.as_deref().ok_or(Error::UnnormalizedCurve)
    }

    /// Largest binomial standard error across grid points.
    pub fn max_standard_error(&self) -> f64 {
        self.accuracies
            .iter()
            .zip(&self.kept_counts)
            .map(|(&p, &n)| {
                if n == 0 {
                    0.0
                } else {
                    (p * (1.0 - p) / n as f64).sqrt()
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Cumulative accuracy mass against normalized magnitude.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcdCurve {
    pub norm_alphas: Vec<f64>,
    pub cumulative: Vec<f64>,
}

/// Accuracy counts for one batch under perturbation `𝒯_α` applied at the
/// spec's layer: tap `x⁽ℓ⁾`, perturb (pairing first for interpolation kinds),
/// resume the network, and count argmax-correct predictions.
///
/// Returns `(correct, kept)` rather than a ratio so callers can pool batches
/// weighted by effective batch size. An interpolation batch whose pairs all
/// drop returns `(0, 0)`.
pub fn batch_perturbed_accuracy<R: Rng>(
    net: &Network,
    inputs: &[Vec<f64>],
    labels: &[u16],
    spec: &PerturbationSpec,
    alpha: f64,
    rng: &mut R,
) -> Result<(usize, usize)> {
    if inputs.is_empty() || inputs.len() != labels.len() {
        return Err(Error::EmptyData);
    }
    spec.validate()?;
    let tap = net.tap_for_level(spec.layer)?;
    let tapped: Vec<Vec<f64>> = inputs
        .iter()
        .map(|x| net.forward_tap(x, tap))
        .collect::<Result<_>>()?;
    let shape = net.shape_at(tap)?;

    let (reps, targets): (Vec<Vec<f64>>, Vec<u16>) = match spec.kind {
        PerturbationKind::MixupIntra | PerturbationKind::MixupInter => {
            let paired = if spec.kind == PerturbationKind::MixupIntra {
                perturb::pair_intra(&tapped, labels)
            } else {
                perturb::pair_inter(&tapped, labels, rng)
            };
            let paired = match paired {
                Ok(p) => p,
                Err(Error::EmptyPairing) => return Ok((0, 0)),
                Err(e) => return Err(e),
            };
            let mixed = paired
                .x1
                .iter()
                .zip(&paired.x2)
                .map(|(a, b)| perturb::interpolate(a, b, alpha))
                .collect::<Result<Vec<_>>>()?;
            // accuracy is judged against y₁, the (1−α)-weighted endpoint
            (mixed, paired.y1)
        }
        kind => {
            let perturbed = tapped
                .iter()
                .map(|h| perturb::apply_elementwise(kind, h, &shape, alpha, rng))
                .collect::<Result<Vec<_>>>()?;
            (perturbed, labels.to_vec())
        }
    };

    let mut correct = 0usize;
    for (h, &y) in reps.iter().zip(&targets) {
        let out = net.forward_from(tap, h)?;
        if crate::nn::argmax(&out) == y as usize {
            correct += 1;
        }
    }
    Ok((correct, reps.len()))
}

/// Builds the PR curve for `net` on `dataset` under `spec`.
///
/// Per magnitude: reshuffle the dataset, take `n_b` consecutive batches of
/// `b_s` samples (capped at the number of full batches available), pool the
/// counts, and record `Σ correct / Σ kept`. Each magnitude runs on its own
/// RNG substream keyed by `(seed, model_id, grid index)`, so magnitudes may
/// be evaluated in parallel with schedule-independent results.
pub fn build_pr_curve(
    net: &Network,
    dataset: &Dataset,
    spec: &PerturbationSpec,
    model_id: &str,
    n_p: usize,
    n_b: usize,
    b_s: usize,
    seed: u64,
) -> Result<PrCurve> {
    if n_b == 0 {
        return Err(Error::invalid("need at least one batch"));
    }
    if b_s < 2 {
        return Err(Error::invalid("batch size must be at least 2"));
    }
    if dataset.len() < b_s {
        return Err(Error::invalid(format!(
            "dataset of {} samples cannot fill a batch of {b_s}",
            dataset.len()
        )));
    }
    let grid = spec.grid(n_p)?;
    let effective_n_b = n_b.min(dataset.len() / b_s);
    let model_key = rng::hash_str(model_id);

    let results: Vec<Result<(f64, usize)>> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let mut stream = rng::stream(seed, &[TAG_CURVE, model_key, i as u64]);
            let mut order: Vec<usize> = (0..dataset.len()).collect();
            crate::data::shuffle(&mut order, &mut stream);
            let mut correct = 0usize;
            let mut kept = 0usize;
            for b in 0..effective_n_b {
                let slice = &order[b * b_s..(b + 1) * b_s];
                let xs: Vec<Vec<f64>> = slice.iter().map(|&j| dataset.inputs[j].clone()).collect();
                let ys: Vec<u16> = slice.iter().map(|&j| dataset.labels[j]).collect();
                let (c, k) = batch_perturbed_accuracy(net, &xs, &ys, spec, alpha, &mut stream)?;
                correct += c;
                kept += k;
            }
            if kept == 0 {
                return Err(Error::AllBatchesDropped { alpha });
            }
            Ok((correct as f64 / kept as f64, kept))
        })
        .collect();

    let mut accuracies = Vec::with_capacity(grid.len());
    let mut kept_counts = Vec::with_capacity(grid.len());
    for r in results {
        let (acc, kept) = r?;
        accuracies.push(acc);
        kept_counts.push(kept);
    }
    let curve = PrCurve {
        alphas: grid,
        norm_alphas: None,
        accuracies,
        kept_counts,
        spec: *spec,
        model_id: model_id.to_string(),
        seed,
        n_b: effective_n_b,
        b_s,
    };
    curve.validate()?;
    Ok(curve)
}

/// Maps the magnitude grid onto [0, 1] using its first and last values.
pub fn normalize(curve: &PrCurve) -> Result<PrCurve> {
    curve.validate()?;
    let lo = curve.alphas[0];
    let hi = *curve.alphas.last().unwrap();
    if hi <= lo {
        return Err(Error::DegenerateRange { min: lo, max: hi });
    }
    let width = hi - lo;
    let mut norm: Vec<f64> = curve.alphas.iter().map(|&a| (a - lo) / width).collect();
    // pin the endpoints exactly
    norm[0] = 0.0;
    *norm.last_mut().unwrap() = 1.0;
    let mut out = curve.clone();
    out.norm_alphas = Some(norm);
    Ok(out)
}

/// Cumulative trapezoidal integral of the PR curve over normalized magnitude.
pub fn pcd(curve: &PrCurve) -> Result<PcdCurve> {
    curve.validate()?;
    let x = curve.norm()?;
    let cumulative = stats::cumulative_trapezoid(x, &curve.accuracies);
    Ok(PcdCurve { norm_alphas: x.to_vec(), cumulative })
}

const CSV_HEADER: &str = "alpha,norm_alpha,accuracy,kept_count";

/// Serializes a normalized curve to CSV with a `#`-prefixed metadata header.
pub fn curve_to_csv(curve: &PrCurve) -> Result<String> {
    curve.validate()?;
    let norm = curve.norm()?;
    let mut out = String::new();
    out.push_str("# prgauge-curve v1\n");
    out.push_str(&format!("# model_id: {}\n", curve.model_id));
    out.push_str(&format!(
        "# spec: kind={} min={} max={} layer={} closure={}\n",
        curve.spec.kind,
        curve.spec.alpha_min,
        curve.spec.alpha_max,
        curve.spec.layer,
        match curve.spec.closure {
            crate::perturb::RangeClosure::Closed => "closed",
            crate::perturb::RangeClosure::HalfOpenUpper => "half_open_upper",
        }
    ));
    out.push_str(&format!(
        "# seed: {} n_b: {} b_s: {}\n",
        curve.seed, curve.n_b, curve.b_s
    ));
    out.push_str(&format!("# stderr_max: {}\n", curve.max_standard_error()));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for i in 0..curve.alphas.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            curve.alphas[i], norm[i], curve.accuracies[i], curve.kept_counts[i]
        ));
    }
    Ok(out)
}

/// Parses [`curve_to_csv`] output; errors carry 1-based line numbers.
pub fn curve_from_csv(text: &str) -> Result<PrCurve> {
    let mut model_id = String::new();
    let mut spec: Option<PerturbationSpec> = None;
    let mut seed = 0u64;
    let mut n_b = 0usize;
    let mut b_s = 0usize;
    let mut alphas = Vec::new();
    let mut norm = Vec::new();
    let mut accuracies = Vec::new();
    let mut kept = Vec::new();
    let mut saw_header = false;

    let bad = |line: usize, msg: String| Error::Malformed { format: "curve CSV", line, msg };

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("model_id:") {
                model_id = v.trim().to_string();
            } else if let Some(v) = comment.strip_prefix("spec:") {
                spec = Some(parse_spec_header(v.trim(), lineno)?);
            } else if let Some(v) = comment.strip_prefix("seed:") {
                // "seed: S n_b: B b_s: C"
                let parts: Vec<&str> = v.split_whitespace().collect();
                if parts.len() != 5 {
                    return Err(bad(lineno, "expected `seed: S n_b: B b_s: C`".into()));
                }
                seed = parts[0].parse().map_err(|e| bad(lineno, format!("seed: {e}")))?;
                n_b = parts[2].parse().map_err(|e| bad(lineno, format!("n_b: {e}")))?;
                b_s = parts[4].parse().map_err(|e| bad(lineno, format!("b_s: {e}")))?;
            }
            continue;
        }
        if line == CSV_HEADER {
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad(lineno, format!("expected 4 fields, got {}", fields.len())));
        }
        alphas.push(fields[0].parse::<f64>().map_err(|e| bad(lineno, format!("alpha: {e}")))?);
        norm.push(fields[1].parse::<f64>().map_err(|e| bad(lineno, format!("norm_alpha: {e}")))?);
        accuracies
            .push(fields[2].parse::<f64>().map_err(|e| bad(lineno, format!("accuracy: {e}")))?);
        kept.push(fields[3].parse::<usize>().map_err(|e| bad(lineno, format!("kept: {e}")))?);
    }
    if !saw_header {
        return Err(bad(0, "missing column header".into()));
    }
    let spec = spec.ok_or_else(|| bad(0, "missing spec header".into()))?;
    let curve = PrCurve {
        alphas,
        norm_alphas: Some(norm),
        accuracies,
        kept_counts: kept,
        spec,
        model_id,
        seed,
        n_b,
        b_s,
    };
    curve.validate()?;
    Ok(curve)
}

fn parse_spec_header(text: &str, lineno: usize) -> Result<PerturbationSpec> {
    let bad = |msg: String| Error::Malformed { format: "curve CSV", line: lineno, msg };
    let mut kind = None;
    let mut min = None;
    let mut max = None;
    let mut layer = None;
    let mut closure = None;
    for part in text.split_whitespace() {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| bad(format!("bad spec field `{part}`")))?;
        match key {
            "kind" => {
                kind = Some(
                    serde_json::from_str::<PerturbationKind>(&format!("\"{value}\""))
                        .map_err(|_| bad(format!("unknown kind `{value}`")))?,
                )
            }
            "min" => min = Some(value.parse::<f64>().map_err(|e| bad(format!("min: {e}")))?),
            "max" => max = Some(value.parse::<f64>().map_err(|e| bad(format!("max: {e}")))?),
            "layer" => layer = Some(value.parse::<usize>().map_err(|e| bad(format!("layer: {e}")))?),
            "closure" => {
                closure = Some(match value {
                    "closed" => crate::perturb::RangeClosure::Closed,
                    "half_open_upper" => crate::perturb::RangeClosure::HalfOpenUpper,
                    other => return Err(bad(format!("unknown closure `{other}`"))),
                })
            }
            other => return Err(bad(format!("unknown spec key `{other}`"))),
        }
    }
    let spec = PerturbationSpec {
        kind: kind.ok_or_else(|| bad("missing kind".into()))?,
        alpha_min: min.ok_or_else(|| bad("missing min".into()))?,
        alpha_max: max.ok_or_else(|| bad("missing max".into()))?,
        layer: layer.ok_or_else(|| bad("missing layer".into()))?,
        closure: closure.ok_or_else(|| bad("missing closure".into()))?,
    };
    spec.validate()?;
    Ok(spec)
}

/// Builds a synthetic normalized curve directly from arrays; used by tests
/// and by tools that score idealized or hand-made curves.
pub fn synthetic_curve(alphas: Vec<f64>, accuracies: Vec<f64>) -> Result<PrCurve> {
    let n = alphas.len();
    let spec = PerturbationSpec::mixup_intra(0);
    let curve = PrCurve {
        alphas,
        norm_alphas: None,
        accuracies,
        kept_counts: vec![0; n],
        spec,
        model_id: String::from("synthetic"),
        seed: 0,
        n_b: 0,
        b_s: 0,
    };
    normalize(&curve)
}
