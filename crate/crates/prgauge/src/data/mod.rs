//! Synthetic labeled datasets: Gaussian vector blobs and small rendered RGB
//! glyph images, plus train/test splitting and training-time augmentation.

mod augment;
mod io;

pub use augment::{augment, AugmentLevel, AugmentRegime};
pub use io::{export_csv, load_dataset, save_dataset};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, TAG_DATA};
use crate::shape::Shape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// A labeled dataset with a fixed sample shape.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub shape: Shape,
    pub num_classes: usize,
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<u16>,
    pub split: Split,
    pub seed: u64,
}

impl Dataset {
    pub fn new(
        shape: Shape,
        num_classes: usize,
        inputs: Vec<Vec<f64>>,
        labels: Vec<u16>,
        split: Split,
        seed: u64,
    ) -> Result<Dataset> {
        if inputs.is_empty() {
            return Err(Error::EmptyData);
        }
        if inputs.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} inputs but {} labels",
                inputs.len(),
                labels.len()
            )));
        }
        for (i, x) in inputs.iter().enumerate() {
            if x.len() != shape.len() {
                return Err(Error::shape(
                    format!("{} values for {shape}", shape.len()),
                    format!("{} values at sample {i}", x.len()),
                ));
            }
            if shape.is_image() && x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::invalid(format!("sample {i} has pixel values outside [0, 1]")));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&y| y as usize >= num_classes) {
            return Err(Error::invalid(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(Dataset { shape, num_classes, inputs, labels, split, seed })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Deterministic disjoint split; the two parts partition the dataset.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(0.0..1.0).contains(&train_fraction) || train_fraction == 0.0 {
            return Err(Error::invalid("train fraction must lie in (0, 1)"));
        }
        let n = self.len();
        let n_train = ((n as f64) * train_fraction).round() as usize;
        if n_train == 0 || n_train == n {
            return Err(Error::invalid(format!(
                "split of {n} samples at {train_fraction} leaves one side empty"
            )));
        }
        let mut idx: Vec<usize> = (0..n).collect();
        let mut r = rng::stream(seed, &[TAG_DATA, 1]);
        shuffle(&mut idx, &mut r);
        let pick = |range: &[usize], split| {
            Dataset {
                shape: self.shape,
                num_classes: self.num_classes,
                inputs: range.iter().map(|&i| self.inputs[i].clone()).collect(),
                labels: range.iter().map(|&i| self.labels[i]).collect(),
                split,
                seed: self.seed,
            }
        };
        Ok((pick(&idx[..n_train], Split::Train), pick(&idx[n_train..], Split::Test)))
    }
}

pub(crate) fn shuffle<R: Rng>(idx: &mut [usize], rng: &mut R) {
    for i in (1..idx.len()).rev() {
        let j = rng.random_range(0..=i);
        idx.swap(i, j);
    }
}

/// Class labels balanced to within one sample, then shuffled.
fn balanced_labels<R: Rng>(k: usize, n: usize, rng: &mut R) -> Vec<u16> {
    let labels: Vec<u16> = (0..n).map(|i| (i % k) as u16).collect();
    let mut idx: Vec<usize> = (0..n).collect();
    shuffle(&mut idx, rng);
    idx.into_iter().map(|i| labels[i]).collect()
}

/// `k` Gaussian clusters in `d` dimensions with per-class spread.
///
/// Cluster centers are drawn uniformly from [−1, 1]^d; each sample is its
/// class center plus `spread · N(0, I)`. Class counts are balanced to ±1.
pub fn gen_blobs(k: usize, n: usize, d: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if k < 2 || n < k || d == 0 {
        return Err(Error::invalid(format!(
            "blobs need k >= 2, n >= k, d >= 1 (got k={k}, n={n}, d={d})"
        )));
    }
    if spread < 0.0 {
        return Err(Error::invalid("spread must be non-negative"));
    }
    let mut r = rng::stream(seed, &[TAG_DATA, 2]);
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect())
        .collect();
    let labels = balanced_labels(k, n, &mut r);
    let inputs = labels
        .iter()
        .map(|&y| {
            centers[y as usize]
                .iter()
                .map(|&c| {
                    let eps: f64 = r.sample(StandardNormal);
                    c + spread * eps
                })
                .collect()
        })
        .collect();
    Dataset::new(Shape::Flat(d), k, inputs, labels, Split::Train, seed)
}

/// Glyph shapes available to [`gen_glyphs`], in class order.
///
/// The first four remain mutually distinguishable under arbitrary rotation,
/// which matters for rotation-invariance corpora.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlyphShape {
    Disk,
    Cross,
    Ring,
    SquareOutline,
    Triangle,
    DiagonalCross,
    HorizontalBar,
    VerticalBar,
}

pub const GLYPH_SHAPES: [GlyphShape; 8] = [
    GlyphShape::Disk,
    GlyphShape::Cross,
    GlyphShape::Ring,
    GlyphShape::SquareOutline,
    GlyphShape::Triangle,
    GlyphShape::DiagonalCross,
    GlyphShape::HorizontalBar,
    GlyphShape::VerticalBar,
];

/// Binary coverage mask for a glyph centered at `(cy, cx)` with the given
/// radius, on an `size × size` grid. 1.0 inside the glyph, 0.0 outside.
pub(crate) fn glyph_mask(
    shape: GlyphShape,
    size: usize,
    cy: f64,
    cx: f64,
    radius: f64,
) -> Vec<f64> {
    let stroke = (radius * 0.38).max(0.9);
    let mut mask = vec![0.0; size * size];
    for row in 0..size {
        for col in 0..size {
            let dy = row as f64 - cy;
            let dx = col as f64 - cx;
            let dist = (dx * dx + dy * dy).sqrt();
            let inside = match shape {
                GlyphShape::Disk => dist <= radius,
                GlyphShape::Cross => {
                    (dx.abs() <= stroke && dy.abs() <= radius)
                        || (dy.abs() <= stroke && dx.abs() <= radius)
                }
                GlyphShape::Ring => (dist - radius).abs() <= stroke * 0.75,
                GlyphShape::SquareOutline => {
                    let cheb = dx.abs().max(dy.abs());
                    cheb <= radius && cheb >= radius - stroke
                }
                GlyphShape::Triangle => {
                    dy >= -radius && dy <= radius && dx.abs() <= 0.95 * (dy + radius) / 2.0
                }
                GlyphShape::DiagonalCross => {
                    (dx.abs() - dy.abs()).abs() <= stroke && dx.abs().max(dy.abs()) <= radius
                }
                GlyphShape::HorizontalBar => dy.abs() <= stroke && dx.abs() <= radius,
                GlyphShape::VerticalBar => dx.abs() <= stroke && dy.abs() <= radius,
            };
            if inside {
                mask[row * size + col] = 1.0;
            }
        }
    }
    mask
}

/// Small RGB images, one glyph shape per class, rendered at jittered
/// position and scale over a random dark background tint.
pub fn gen_glyphs(k: usize, n: usize, size: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyData);
    }
    if k < 2 || k > GLYPH_SHAPES.len() {
        return Err(Error::invalid(format!(
            "glyph classes must lie in 2..={}, got {k}",
            GLYPH_SHAPES.len()
        )));
    }
    if size < 8 {
        return Err(Error::invalid("glyph images need size >= 8"));
    }
    let mut r = rng::stream(seed, &[TAG_DATA, 3]);
    let labels = balanced_labels(k, n, &mut r);
    let npix = size * size;
    let inputs = labels
        .iter()
        .map(|&y| {
            let jitter = size as f64 * 0.06;
            let cy = (size as f64 - 1.0) / 2.0 + r.random_range(-jitter..jitter);
            let cx = (size as f64 - 1.0) / 2.0 + r.random_range(-jitter..jitter);
            let radius = size as f64 * r.random_range(0.24..0.36);
            let mask = glyph_mask(GLYPH_SHAPES[y as usize], size, cy, cx, radius);
            let bg: Vec<f64> = (0..3).map(|_| r.random_range(0.0..0.35)).collect();
            let fg: Vec<f64> = (0..3).map(|_| r.random_range(0.55..1.0)).collect();
            let mut img = vec![0.0; 3 * npix];
            for ch in 0..3 {
                for p in 0..npix {
                    img[ch * npix + p] = bg[ch] + (fg[ch] - bg[ch]) * mask[p];
                }
            }
            img
        })
        .collect();
    Dataset::new(Shape::Image { c: 3, h: size, w: size }, k, inputs, labels, Split::Train, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_deterministic_and_balanced() {
        let a = gen_blobs(3, 300, 4, 0.2, 42).unwrap();
        let b = gen_blobs(3, 300, 4, 0.2, 42).unwrap();
        assert_eq!(a.inputs, b.inputs);
        assert_eq!(a.labels, b.labels);
        let mut counts = [0usize; 3];
        for &y in &a.labels {
            counts[y as usize] += 1;
        }
        assert_eq!(counts, [100, 100, 100]);
    }

    #[test]
    fn blobs_zero_spread_collapses_classes() {
        let ds = gen_blobs(2, 20, 3, 0.0, 7).unwrap();
        for y in 0..2u16 {
            let points: Vec<&Vec<f64>> = ds
                .inputs
                .iter()
                .zip(&ds.labels)
                .filter(|(_, &l)| l == y)
                .map(|(x, _)| x)
                .collect();
            for p in &points[1..] {
                assert_eq!(*p, points[0]);
            }
        }
    }

    #[test]
    fn blobs_invalid_sizes() {
        assert!(gen_blobs(1, 10, 2, 0.1, 0).is_err());
        assert!(gen_blobs(3, 2, 2, 0.1, 0).is_err());
    }

    #[test]
    fn glyphs_empty_and_too_many_classes() {
        assert!(gen_glyphs(4, 0, 12, 0).is_err());
        assert!(gen_glyphs(9, 10, 12, 0).is_err());
    }

    #[test]
    fn glyph_circle_mask_geometry() {
        let size = 16;
        let c = (size as f64 - 1.0) / 2.0;
        let radius = 5.0;
        let mask = glyph_mask(GlyphShape::Disk, size, c, c, radius);
        for row in 0..size {
            for col in 0..size {
                let dy = row as f64 - c;
                let dx = col as f64 - c;
                let dist = (dx * dx + dy * dy).sqrt();
                let v = mask[row * size + col];
                if dist <= radius {
                    assert_eq!(v, 1.0, "expected glyph coverage at ({row},{col})");
                } else {
                    assert_eq!(v, 0.0, "expected background at ({row},{col})");
                }
            }
        }
    }

    #[test]
    fn glyph_intensity_regression_bound() {
        let ds = gen_glyphs(4, 1000, 12, 5).unwrap();
        let mut total = 0.0;
        let mut count = 0usize;
        for x in &ds.inputs {
            total += x.iter().sum::<f64>();
            count += x.len();
        }
        let mean = total / count as f64;
        assert!((0.05..=0.6).contains(&mean), "mean intensity {mean}");
    }

    #[test]
    fn glyphs_in_unit_range() {
        let ds = gen_glyphs(8, 64, 10, 3).unwrap();
        for x in &ds.inputs {
            assert!(x.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn split_is_disjoint_partition() {
        let ds = gen_blobs(3, 101, 4, 0.3, 9).unwrap();
        let (train, test) = ds.split(0.8, 1).unwrap();
        assert_eq!(train.len() + test.len(), ds.len());
        assert_eq!(train.split, Split::Train);
        assert_eq!(test.split, Split::Test);
        // every original sample appears exactly once across the two parts
        let mut seen: Vec<Vec<f64>> = train.inputs.clone();
        seen.extend(test.inputs.clone());
        let mut orig = ds.inputs.clone();
        let key = |v: &Vec<f64>| {
            v.iter().map(|x| x.to_bits()).collect::<Vec<u64>>()
        };
        seen.sort_by_key(key);
        orig.sort_by_key(key);
        assert_eq!(seen, orig);
    }
}
