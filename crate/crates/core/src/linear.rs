//! Weighted straight-line least squares.

use crate::error::{finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Weighted sum of squared residuals at the optimum.
    pub residual: f64,
}

impl LineFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Fit `y = intercept + slope·x` minimising `Σ wₖ (yₖ − ŷₖ)²`.
///
/// Weights default to 1. Sums are taken about the weighted centroid, which
/// keeps the fit exact on collinear input.
pub fn linear_fit(points: &[(f64, f64)], weights: Option<&[f64]>) -> Result<LineFit> {
    if let Some(w) = weights {
        if w.len() != points.len() {
            return Err(Error::InsufficientData {
                needed: points.len(),
                found: w.len(),
                what: "weights",
            });
        }
    }
    let weight = |k: usize| weights.map_or(1.0, |w| w[k]);
    let mut sw = 0.0;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for (k, &(x, y)) in points.iter().enumerate() {
        finite("x", x)?;
        finite("y", y)?;
        let w = finite("weight", weight(k))?;
        if w < 0.0 {
            return Err(Error::Domain {
                name: "weight",
                value: w,
                expected: ">= 0",
            });
        }
        sw += w;
        sx += w * x;
        sy += w * y;
    }
    if points.len() < 2 || !(sw > 0.0) {
        return Err(Error::DegenerateDesign);
    }
    let mx = sx / sw;
    let my = sy / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (k, &(x, y)) in points.iter().enumerate() {
        let w = weight(k);
        sxx += w * (x - mx) * (x - mx);
        sxy += w * (x - mx) * (y - my);
    }
    if !(sxx > 0.0) {
        return Err(Error::DegenerateDesign);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = points
        .iter()
        .enumerate()
        .map(|(k, &(x, y))| {
            let r = y - (intercept + slope * x);
            weight(k) * r * r
        })
        .sum();
    Ok(LineFit {
        slope,
        intercept,
        residual,
    })
}
