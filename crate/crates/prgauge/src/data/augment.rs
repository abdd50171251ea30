//! Training-time augmentation regimes.
//!
//! A regime couples a perturbation spec with a level: `none` applies nothing,
//! `partial` draws magnitudes from the half-scaled range `[α_min/2, α_max/2]`
//! (50% of the range about the identity magnitude), and `full` draws from the
//! whole raw range. Every sample in a batch gets an independently drawn
//! magnitude.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturb::{self, PerturbationSpec};
use crate::shape::Shape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentLevel {
    None,
    Partial,
    Full,
}

impl AugmentLevel {
    pub fn tag(self) -> &'static str {
        match self {
            AugmentLevel::None => "none",
            AugmentLevel::Partial => "partial",
            AugmentLevel::Full => "full",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentRegime {
    pub level: AugmentLevel,
    pub spec: PerturbationSpec,
}

impl AugmentRegime {
    pub fn new(level: AugmentLevel, spec: PerturbationSpec) -> Result<Self> {
        if spec.kind.is_mixup() {
            return Err(Error::invalid(
                "interpolation perturbations are evaluation-time only, not augmentation",
            ));
        }
        spec.validate()?;
        Ok(AugmentRegime { level, spec })
    }

    /// Magnitude range magnitudes are drawn from; `None` for the no-op level.
    pub fn magnitude_range(&self) -> Option<(f64, f64)> {
        match self.level {
            AugmentLevel::None => None,
            AugmentLevel::Partial => Some((self.spec.alpha_min / 2.0, self.spec.alpha_max / 2.0)),
            AugmentLevel::Full => Some((self.spec.alpha_min, self.spec.alpha_max)),
        }
    }
}

/// Perturbs each sample in place with an independently drawn magnitude.
/// The `none` level leaves the batch bitwise untouched.
pub fn augment<R: Rng>(
    inputs: &mut [Vec<f64>],
    shape: &Shape,
    regime: &AugmentRegime,
    rng: &mut R,
) -> Result<()> {
    let Some((lo, hi)) = regime.magnitude_range() else {
        return Ok(());
    };
    for x in inputs.iter_mut() {
        let magnitude = if lo == hi { lo } else { rng.random_range(lo..=hi) };
        *x = perturb::apply_elementwise(regime.spec.kind, x, shape, magnitude, rng)?;
    }
    Ok(())
}
