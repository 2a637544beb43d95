use crate::error::{Error, Result};

/// Uniform grid on `[-X, X]` with spacing `h = 1/(2K)`.
///
/// Shifts by 1/2 and 1 are exact index offsets of `K` and `2K` nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    half_width: f64,
    k: usize,
}

impl Grid {
    pub const MIN_HALF_WIDTH: f64 = 4.0;
    pub const MIN_K: usize = 32;

    pub fn new(half_width: f64, k: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width >= Self::MIN_HALF_WIDTH) {
            return Err(Error::InvalidInput(format!(
                "grid half-width must be at least {}, got {half_width}",
                Self::MIN_HALF_WIDTH
            )));
        }
        if (2.0 * half_width).fract() != 0.0 {
            return Err(Error::InvalidInput(format!(
                "grid half-width must be a multiple of 1/2, got {half_width}"
            )));
        }
        if k < Self::MIN_K {
            return Err(Error::InvalidInput(format!(
                "K must be at least {}, got {k}",
                Self::MIN_K
            )));
        }
        Ok(Self { half_width, k })
    }

    /// Builds the grid from a spacing `h`, which must be `1/(2K)`.
    pub fn from_spacing(half_width: f64, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidInput(format!(
                "spacing must be positive, got {h}"
            )));
        }
        let k = (0.5 / h).round();
        if ((0.5 / h) - k).abs() > 1e-9 * k.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "spacing {h} is not of the form 1/(2K)"
            )));
        }
        Self::new(half_width, k as usize)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn h(&self) -> f64 {
        0.5 / self.k as f64
    }

    pub fn len(&self) -> usize {
        2 * self.center() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the node at x = 0.
    pub fn center(&self) -> usize {
        (2.0 * self.half_width).round() as usize * self.k
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - self.center() as f64) * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    /// The same grid with half the spacing.
    pub fn refined(&self) -> Self {
        Self {
            half_width: self.half_width,
            k: 2 * self.k,
        }
    }

    /// Nearest node index to `x`, if `x` lies on the grid.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let pos = x / self.h() + self.center() as f64;
        let i = pos.round();
        (i >= 0.0 && (i as usize) < self.len()).then_some(i as usize)
    }
}
