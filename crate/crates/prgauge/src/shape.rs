//! Sample/activation shapes flowing between layers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of a sample or intermediate activation.
///
/// Everything is stored as a flat `[f64]` buffer; `Shape` carries the logical
/// layout. Images are channel-major (`c`, then rows, then columns).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Shape {
    Flat(usize),
    Image { c: usize, h: usize, w: usize },
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Flat(d) => d,
            Shape::Image { c, h, w } => c * h * w,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_image(&self) -> bool {
        matches!(self, Shape::Image { .. })
    }

    pub fn dims(&self) -> Vec<usize> {
        match *self {
            Shape::Flat(d) => vec![d],
            Shape::Image { c, h, w } => vec![c, h, w],
        }
    }

    pub fn from_dims(dims: &[usize]) -> Result<Shape> {
        match *dims {
            [d] => Ok(Shape::Flat(d)),
            [c, h, w] => Ok(Shape::Image { c, h, w }),
            _ => Err(Error::invalid(format!(
                "expected 1 or 3 dims, got {}",
                dims.len()
            ))),
        }
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Shape::Flat(d) => write!(f, "[{d}]"),
            Shape::Image { c, h, w } => write!(f, "[{c}x{h}x{w}]"),
        }
    }
}
