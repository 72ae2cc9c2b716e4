//! Photon-number decisions from a fitted mixture.
//!
//! Decision `i` covers the half-open area interval `(tᵢ, tᵢ₊₁]` with
//! `t₀ = −∞` and `t_K = +∞`; an area equal to a threshold is assigned to
//! the lower photon number.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gauss;
use crate::mixture::{GaussianPeak, MixtureModel};

/// Relative variance difference below which two peaks are treated as equally wide.
const EQUAL_VARIANCE: f64 = 1e-12;

/// Crossing point of two equal-weight normal densities between their means.
///
/// This is the root of `ln φ₁ = ln φ₂` obtained by solving the quadratic,
/// written in the rationalised form
///
/// ```text
/// t = x₁ + σ₁ (D² + 2σ₂² L) / (σ₂ √R + σ₁ D),
/// D = x₂ − x₁,  L = ln(σ₂/σ₁),  R = D² + 2(σ₂² − σ₁²) L
/// ```
///
/// which is algebraically the usual closed form but does not cancel when the
/// variances are close. Equal variances give the midpoint.
pub fn threshold(x_i: f64, sigma_i: f64, x_next: f64, sigma_next: f64) -> Result<f64> {
    for (name, v) in [
        ("x_i", x_i),
        ("sigma_i", sigma_i),
        ("x_next", x_next),
        ("sigma_next", sigma_next),
    ] {
        crate::error::finite(name, v)?;
    }
    if !(sigma_i > 0.0) || !(sigma_next > 0.0) {
        return Err(Error::Domain {
            name: "sigma",
            value: sigma_i.min(sigma_next),
            expected: "> 0",
        });
    }
    if !(x_next > x_i) {
        return Err(Error::InvalidModel("peak means must be strictly increasing"));
    }
    let d = x_next - x_i;
    let dv = sigma_next * sigma_next - sigma_i * sigma_i;
    if libm::fabs(dv) < EQUAL_VARIANCE * sigma_i * sigma_i {
        return Ok(0.5 * (x_i + x_next));
    }
    let l = libm::log(sigma_next / sigma_i);
    let radicand = d * d + 2.0 * dv * l;
    if !(radicand >= 0.0) {
        return Err(Error::NoInteriorIntersection { lower: 0 });
    }
    let t =
        x_i + sigma_i * (d * d + 2.0 * sigma_next * sigma_next * l) / (sigma_next * libm::sqrt(radicand) + sigma_i * d);
    if !(t > x_i && t < x_next) {
        return Err(Error::NoInteriorIntersection { lower: 0 });
    }
    Ok(t)
}

/// Crossing of `a.weight·φ_a` and `b.weight·φ_b` between the means, by
/// bisection on the log-density difference.
pub fn weighted_threshold(a: &GaussianPeak, prior_a: f64, b: &GaussianPeak, prior_b: f64) -> Result<f64> {
    let g = |x: f64| {
        libm::log(prior_a) + gauss::ln_pdf(x, a.mean, a.std_dev)
            - libm::log(prior_b)
            - gauss::ln_pdf(x, b.mean, b.std_dev)
    };
    let (mut lo, mut hi) = (a.mean, b.mean);
    if !(g(lo) > 0.0 && g(hi) < 0.0) {
        return Err(Error::NoInteriorIntersection { lower: a.index });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Priors {
    /// Every modelled photon number equally likely a priori.
    Equal,
    /// The fitted peak weights.
    FromWeights,
    Explicit(Vec<f64>),
}

impl Priors {
    /// Normalised prior vector for `peaks`.
    pub fn resolve(&self, peaks: &[GaussianPeak]) -> Result<Vec<f64>> {
        let k = peaks.len();
        let raw: Vec<f64> = match self {
            Priors::Equal => alloc::vec![1.0; k],
            Priors::FromWeights => peaks.iter().map(|p| p.weight).collect(),
            Priors::Explicit(p) => {
                if p.len() != k {
                    return Err(Error::InsufficientData {
                        needed: k,
                        found: p.len(),
                        what: "priors",
                    });
                }
                p.clone()
            }
        };
        if raw.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::Domain {
                name: "prior",
                value: raw.iter().copied().fold(f64::NAN, f64::min),
                expected: "finite and >= 0",
            });
        }
        let s: f64 = raw.iter().sum();
        if !(s > 0.0) {
            return Err(Error::InvalidModel("priors must not all be zero"));
        }
        Ok(raw.into_iter().map(|p| p / s).collect())
    }
}

/// Thresholds, the priors they were built for, and per-number error rates.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecisionScheme {
    pub thresholds: Vec<f64>,
    pub priors: Vec<f64>,
    pub error_per_number: Vec<f64>,
}

impl DecisionScheme {
    /// Photon number assigned to `area`. Total: NaN maps to 0.
    pub fn classify(&self, area: f64) -> usize {
        self.thresholds.partition_point(|&t| t < area)
    }

    pub fn n_classes(&self) -> usize {
        self.thresholds.len() + 1
    }

    /// Region of decision `i` as `(lower, upper]`.
    pub fn region(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 {
            f64::NEG_INFINITY
        } else {
            self.thresholds[i - 1]
        };
        let hi = self.thresholds.get(i).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }
}

/// Free-function form of [`DecisionScheme::classify`].
pub fn classify(area: f64, scheme: &DecisionScheme) -> usize {
    scheme.classify(area)
}

fn check_ordered(peaks: &[GaussianPeak]) -> Result<()> {
    if peaks.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            found: peaks.len(),
            what: "peaks",
        });
    }
    if peaks.iter().any(|p| !(p.std_dev > 0.0) || !p.mean.is_finite()) {
        return Err(Error::InvalidModel("peaks need finite means and positive widths"));
    }
    if peaks.windows(2).any(|w| !(w[1].mean > w[0].mean)) {
        return Err(Error::InvalidModel("peak means must be strictly increasing"));
    }
    Ok(())
}

fn all_equal(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}

/// Adjacent-peak thresholds for the given normalised priors.
pub fn thresholds_for(peaks: &[GaussianPeak], priors: &[f64]) -> Result<Vec<f64>> {
    check_ordered(peaks)?;
    let equal = all_equal(priors);
    peaks
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let t = if equal {
                threshold(w[0].mean, w[0].std_dev, w[1].mean, w[1].std_dev)
            } else {
                weighted_threshold(&w[0], priors[i], &w[1], priors[i + 1])
            };
            t.map_err(|e| match e {
                Error::NoInteriorIntersection { .. } => Error::NoInteriorIntersection { lower: i },
                other => other,
            })
        })
        .collect()
}

/// Mass of each peak (unit normalised) in each decision region:
/// `mass[i][j] = P(decide j | true i)`.
fn region_masses(peaks: &[GaussianPeak], thresholds: &[f64]) -> Vec<Vec<f64>> {
    let k = peaks.len();
    peaks
        .iter()
        .map(|p| {
            (0..k)
                .map(|j| {
                    let lo = if j == 0 { f64::NEG_INFINITY } else { thresholds[j - 1] };
                    let hi = if j + 1 == k { f64::INFINITY } else { thresholds[j] };
                    p.mass_between(lo, hi)
                })
                .collect()
        })
        .collect()
}

/// Decision scheme for an arbitrary ordered peak set.
///
/// The error of decision `i` is the mass the other peaks put inside region
/// `i`, each weighted by its prior relative to the prior of `i`:
/// `Σ_{j≠i} (π_j/π_i) ∫_{region i} φ_j`. Under equal priors this is the plain
/// sum of foreign peak areas in the region. Values are capped at 1.
pub fn build_scheme_for_peaks(peaks: &[GaussianPeak], priors: &Priors) -> Result<DecisionScheme> {
    check_ordered(peaks)?;
    let pi = priors.resolve(peaks)?;
    if !matches!(priors, Priors::Equal) && pi.contains(&0.0) {
        return Err(Error::InvalidModel(
            "prior-weighted thresholds need every prior to be positive",
        ));
    }
    let thresholds = thresholds_for(peaks, &pi)?;
    let mass = region_masses(peaks, &thresholds);
    let k = peaks.len();
    let error_per_number = (0..k)
        .map(|i| {
            let foreign: f64 = (0..k).filter(|&j| j != i).map(|j| pi[j] / pi[i] * mass[j][i]).sum();
            foreign.min(1.0)
        })
        .collect();
    Ok(DecisionScheme {
        thresholds,
        priors: pi,
        error_per_number,
    })
}

pub fn build_scheme(model: &MixtureModel, priors: &Priors) -> Result<DecisionScheme> {
    build_scheme_for_peaks(model.peaks(), priors)
}

/// Misclassification probability between "exactly one" and "more than one"
/// detection, using the equal-prior thresholds.
///
/// `priors` weights the true photon numbers; the prior of peak 0 is ignored
/// and the rest are renormalised over peaks `1..K`.
pub fn one_vs_many_error_for_peaks(peaks: &[GaussianPeak], priors: &[f64]) -> Result<f64> {
    if peaks.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            found: peaks.len(),
            what: "peaks",
        });
    }
    let pi = Priors::Explicit(priors.to_vec()).resolve(peaks)?;
    let thresholds = thresholds_for(peaks, &alloc::vec![1.0; peaks.len()])?;
    let split = thresholds[1];
    let norm: f64 = pi[1..].iter().sum();
    if !(norm > 0.0) {
        return Err(Error::InvalidModel(
            "priors of photon numbers >= 1 must not all be zero",
        ));
    }
    let one_as_many = peaks[1].mass_between(split, f64::INFINITY);
    let many_as_one: f64 = peaks[2..]
        .iter()
        .zip(&pi[2..])
        .map(|(p, w)| w * p.mass_between(thresholds[0], split))
        .sum();
    Ok(((pi[1] * one_as_many + many_as_one) / norm).clamp(0.0, 1.0))
}

pub fn one_vs_many_error(model: &MixtureModel, priors: &[f64]) -> Result<f64> {
    one_vs_many_error_for_peaks(model.peaks(), priors)
}

/// `matrix[i][j] = P(decide j | true i)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfusionMatrix {
    pub matrix: Vec<Vec<f64>>,
    pub priors: Vec<f64>,
}

impl ConfusionMatrix {
    /// Prior-weighted probability of a wrong decision.
    pub fn total_error(&self) -> f64 {
        self.matrix
            .iter()
            .enumerate()
            .map(|(i, row)| self.priors[i] * (1.0 - row[i]))
            .sum()
    }
}

pub fn confusion_for_peaks(peaks: &[GaussianPeak], priors: &Priors) -> Result<ConfusionMatrix> {
    check_ordered(peaks)?;
    let pi = priors.resolve(peaks)?;
    let thresholds = thresholds_for(peaks, &pi)?;
    Ok(ConfusionMatrix {
        matrix: region_masses(peaks, &thresholds),
        priors: pi,
    })
}

pub fn confusion(model: &MixtureModel, priors: &Priors) -> Result<ConfusionMatrix> {
    confusion_for_peaks(model.peaks(), priors)
}
