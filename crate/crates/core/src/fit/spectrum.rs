//! Binned weighted least-squares objective for a constrained mixture.
//!
//! Unconstrained coordinates: positions `x0, Δ` (and `α` when at least three
//! peaks are modelled), log-widths or log-variances, softmax logits for free
//! weights (logit of peak 0 pinned to zero) or `ln μ` for Poisson weights.

use alloc::vec::Vec;

use super::lm::LeastSquares;
use crate::gauss::{std_interval, std_pdf};
use crate::histogram::Histogram;
use crate::mixture::{ladder_mean, linear_variance_at, truncated_poisson, ConstraintKind, MixtureModel};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Layout {
    pub kind: ConstraintKind,
    pub k: usize,
    pub fit_sat: bool,
}

impl Layout {
    fn widths_at(&self) -> usize {
        if self.fit_sat {
            3
        } else {
            2
        }
    }

    fn n_widths(&self) -> usize {
        match self.kind {
            ConstraintKind::LinearVariance => 3,
            _ => self.k,
        }
    }

    fn weights_at(&self) -> usize {
        self.widths_at() + self.n_widths()
    }

    fn n_weights(&self) -> usize {
        match self.kind {
            ConstraintKind::PoissonWeights => 1,
            _ => self.k - 1,
        }
    }

    pub fn n_params(&self) -> usize {
        self.weights_at() + self.n_weights()
    }
}

/// Parameters mapped back to model space.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Decoded {
    pub x0: f64,
    pub spacing: f64,
    pub sat: f64,
    pub sigmas: Vec<f64>,
    pub weights: Vec<f64>,
    pub mu: f64,
    pub variances: [f64; 3],
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let mx = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| libm::exp(z - mx)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

const WEIGHT_FLOOR: f64 = 1e-6;

impl Layout {
    pub fn decode(&self, p: &[f64], fixed_sat: f64) -> Decoded {
        let x0 = p[0];
        let spacing = p[1];
        let sat = if self.fit_sat { p[2] } else { fixed_sat };
        let w0 = self.widths_at();
        let mut variances = [0.0; 3];
        let sigmas: Vec<f64> = match self.kind {
            ConstraintKind::LinearVariance => {
                variances = [libm::exp(p[w0]), libm::exp(p[w0 + 1]), libm::exp(p[w0 + 2])];
                (0..self.k)
                    .map(|i| libm::sqrt(linear_variance_at(i, variances[0], variances[1], variances[2])))
                    .collect()
            }
            _ => p[w0..w0 + self.k].iter().map(|v| libm::exp(*v)).collect(),
        };
        let wa = self.weights_at();
        let (weights, mu) = match self.kind {
            ConstraintKind::PoissonWeights => {
                let mu = libm::exp(p[wa]);
                (truncated_poisson(mu, self.k), mu)
            }
            _ => {
                let mut logits = alloc::vec![0.0; self.k];
                logits[1..].copy_from_slice(&p[wa..wa + self.k - 1]);
                (softmax(&logits), f64::NAN)
            }
        };
        Decoded {
            x0,
            spacing,
            sat,
            sigmas,
            weights,
            mu,
            variances,
        }
    }

    /// Unconstrained coordinates for `model`, converted into this layout's
    /// regime where the model was built under a different one.
    pub fn encode(&self, model: &MixtureModel) -> Vec<f64> {
        let mut p = alloc::vec![model.x0(), model.spacing()];
        if self.fit_sat {
            p.push(model.sat());
        }
        let sigmas = model.sigmas();
        let weights = model.weights();
        let spacing = libm::fabs(model.spacing()).max(f64::MIN_POSITIVE);
        match self.kind {
            ConstraintKind::LinearVariance => {
                let v = match model.constraint() {
                    crate::Constraint::LinearVariance {
                        elec_var,
                        extra_var,
                        mult_var,
                    } => [elec_var, extra_var, mult_var],
                    _ => variance_law_guess(&sigmas),
                };
                let floor = 1e-2 * spacing * spacing;
                p.extend(v.iter().map(|x| libm::log(x.max(floor))));
            }
            _ => p.extend(sigmas.iter().map(|s| libm::log(*s))),
        }
        match self.kind {
            ConstraintKind::PoissonWeights => {
                let mu = model
                    .poisson_mu()
                    .unwrap_or_else(|| weights.iter().enumerate().map(|(i, w)| i as f64 * w).sum());
                p.push(libm::log(mu.max(1e-3)));
            }
            _ => {
                let base = libm::log(weights[0].max(WEIGHT_FLOOR));
                p.extend(weights[1..].iter().map(|w| libm::log(w.max(WEIGHT_FLOOR)) - base));
            }
        }
        p
    }
}

/// Linear-law variances read off a set of widths: the zero peak gives the
/// electronic term, a line through the remaining variances the others.
fn variance_law_guess(sigmas: &[f64]) -> [f64; 3] {
    let v: Vec<f64> = sigmas.iter().map(|s| s * s).collect();
    let elec = v[0];
    if v.len() < 3 {
        let first = v.get(1).copied().unwrap_or(elec);
        return [elec, 0.0, first - elec];
    }
    let pts: Vec<(f64, f64)> = v[1..]
        .iter()
        .enumerate()
        .map(|(k, x)| ((k + 1) as f64, x - elec))
        .collect();
    match crate::linear::linear_fit(&pts, None) {
        Ok(line) => [elec, line.intercept, line.slope],
        Err(_) => [elec, 0.0, 0.0],
    }
}

pub(crate) struct SpectrumProblem<'a> {
    pub layout: Layout,
    pub edges: &'a [f64],
    pub counts: &'a [u64],
    pub scale: Vec<f64>,
    pub total: f64,
    pub fixed_sat: f64,
}

impl<'a> SpectrumProblem<'a> {
    pub fn new(layout: Layout, hist: &'a Histogram, fixed_sat: f64) -> Self {
        let scale = hist
            .counts()
            .iter()
            .map(|&c| 1.0 / libm::sqrt((c.max(1)) as f64))
            .collect();
        SpectrumProblem {
            layout,
            edges: hist.edges(),
            counts: hist.counts(),
            scale,
            total: hist.total_pulses() as f64,
            fixed_sat,
        }
    }

    /// Expected counts per bin.
    pub fn expected(&self, d: &Decoded) -> Vec<f64> {
        let k = self.layout.k;
        let nb = self.counts.len();
        let mut total = alloc::vec![0.0; nb];
        for i in 0..k {
            let mean = ladder_mean(d.x0, d.spacing, d.sat, i);
            let s = d.sigmas[i];
            let amp = self.total * d.weights[i];
            for b in 0..nb {
                total[b] += amp * std_interval((self.edges[b] - mean) / s, (self.edges[b + 1] - mean) / s);
            }
        }
        total
    }

    /// Peak 0 inside the histogram, means strictly increasing, widths no
    /// wider than the histogram itself and weights finite.
    fn in_domain(&self, d: &Decoded) -> bool {
        let lo = self.edges[0];
        let hi = self.edges[self.edges.len() - 1];
        if !(d.x0 >= lo && d.x0 <= hi) || !(d.spacing > 0.0) || !d.sat.is_finite() {
            return false;
        }
        // successive gaps are Δ − (2i−1)α, smallest at one end of the ladder
        let k = self.layout.k as f64;
        if !(d.spacing - d.sat > 0.0 && d.spacing - (2.0 * k - 3.0) * d.sat > 0.0) {
            return false;
        }
        let span = hi - lo;
        d.sigmas.iter().all(|s| *s > 0.0 && *s <= span) && d.weights.iter().all(|w| w.is_finite())
    }

    pub fn model(&self, p: &[f64]) -> Result<MixtureModel> {
        let d = self.layout.decode(p, self.fixed_sat);
        match self.layout.kind {
            ConstraintKind::FreeWeightsFreeSigmas => MixtureModel::free(d.x0, d.spacing, d.sat, &d.sigmas, &d.weights),
            ConstraintKind::PoissonWeights => MixtureModel::poisson(d.x0, d.spacing, d.sat, &d.sigmas, d.mu),
            ConstraintKind::LinearVariance => MixtureModel::linear_variance(
                d.x0,
                d.spacing,
                d.sat,
                d.variances[0],
                d.variances[1],
                d.variances[2],
                &d.weights,
            ),
        }
    }
}

impl LeastSquares for SpectrumProblem<'_> {
    fn n_params(&self) -> usize {
        self.layout.n_params()
    }

    fn n_residuals(&self) -> usize {
        self.counts.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) -> bool {
        let d = self.layout.decode(p, self.fixed_sat);
        if !self.in_domain(&d) {
            return false;
        }
        let expected = self.expected(&d);
        for b in 0..out.len() {
            out[b] = self.scale[b] * (expected[b] - self.counts[b] as f64);
        }
        out.iter().all(|v| v.is_finite())
    }

    fn jacobian(&self, p: &[f64], out: &mut [f64]) {
        let lay = self.layout;
        let n = lay.n_params();
        let k = lay.k;
        let d = lay.decode(p, self.fixed_sat);
        let nb = self.counts.len();
        out.iter_mut().for_each(|v| *v = 0.0);

        // per-peak bin probabilities and their derivatives w.r.t. mean and σ
        let mut prob = alloc::vec![0.0; k];
        let mut d_mean = alloc::vec![0.0; k];
        let mut d_sigma = alloc::vec![0.0; k];
        let wa = lay.weights_at();
        let w0 = lay.widths_at();
        let ibar: f64 = d.weights.iter().enumerate().map(|(i, w)| i as f64 * w).sum();

        for b in 0..nb {
            let row = &mut out[b * n..(b + 1) * n];
            let s_b = self.scale[b] * self.total;
            let mut mix = 0.0;
            for i in 0..k {
                let mean = ladder_mean(d.x0, d.spacing, d.sat, i);
                let s = d.sigmas[i];
                let zl = (self.edges[b] - mean) / s;
                let zh = (self.edges[b + 1] - mean) / s;
                let (pl, ph) = (std_pdf(zl), std_pdf(zh));
                prob[i] = std_interval(zl, zh);
                d_mean[i] = -(ph - pl) / s;
                d_sigma[i] = -(ph * zh - pl * zl) / s;
                mix += d.weights[i] * prob[i];
            }
            for i in 0..k {
                let x = i as f64;
                let g = s_b * d.weights[i] * d_mean[i];
                row[0] += g;
                row[1] += x * g;
                if lay.fit_sat {
                    row[2] -= x * x * g;
                }
                let gs = s_b * d.weights[i] * d_sigma[i];
                match lay.kind {
                    ConstraintKind::LinearVariance => {
                        let half = 0.5 / d.sigmas[i];
                        row[w0] += gs * d.variances[0] * half;
                        if i > 0 {
                            row[w0 + 1] += gs * d.variances[1] * half;
                        }
                        row[w0 + 2] += gs * x * d.variances[2] * half;
                    }
                    _ => row[w0 + i] += gs * d.sigmas[i],
                }
            }
            match lay.kind {
                ConstraintKind::PoissonWeights => {
                    row[wa] = s_b * (0..k).map(|i| d.weights[i] * (i as f64 - ibar) * prob[i]).sum::<f64>();
                }
                _ => {
                    for j in 1..k {
                        row[wa + j - 1] = s_b * d.weights[j] * (prob[j] - mix);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn histogram() -> Histogram {
        let model = MixtureModel::free(10.0, 100.0, 1.0, &[8.0, 15.0, 20.0, 24.0], &[0.2, 0.35, 0.3, 0.15]).unwrap();
        let edges: Vec<f64> = (0..=60).map(|k| -40.0 + 8.0 * k as f64).collect();
        let counts = edges
            .windows(2)
            .map(|w| libm::round(20_000.0 * model.mass_between(w[0], w[1])) as u64)
            .collect();
        Histogram::new(edges, counts).unwrap()
    }

    fn check_jacobian(kind: ConstraintKind) {
        let hist = histogram();
        let layout = Layout {
            kind,
            k: 4,
            fit_sat: true,
        };
        let problem = SpectrumProblem::new(layout, &hist, 0.0);
        let start = MixtureModel::free(12.0, 97.0, 0.5, &[9.0, 14.0, 22.0, 25.0], &[0.25, 0.3, 0.3, 0.15]).unwrap();
        let p = layout.encode(&start);
        let n = p.len();
        let m = problem.n_residuals();
        let mut jac = alloc::vec![0.0; m * n];
        problem.jacobian(&p, &mut jac);
        let mut rp = alloc::vec![0.0; m];
        let mut rm = alloc::vec![0.0; m];
        for j in 0..n {
            let h = 1e-6 * (1.0 + libm::fabs(p[j]));
            let mut pp = p.clone();
            pp[j] += h;
            let mut pm = p.clone();
            pm[j] -= h;
            assert!(problem.residuals(&pp, &mut rp));
            assert!(problem.residuals(&pm, &mut rm));
            for b in 0..m {
                let fd = (rp[b] - rm[b]) / (2.0 * h);
                let an = jac[b * n + j];
                assert!(
                    (fd - an).abs() <= 1e-5 * (1.0 + an.abs()),
                    "{kind:?} param {j} bin {b}: analytic {an} vs fd {fd}"
                );
            }
        }
    }

    #[test]
    fn jacobian_free() {
        check_jacobian(ConstraintKind::FreeWeightsFreeSigmas);
    }

    #[test]
    fn jacobian_poisson() {
        check_jacobian(ConstraintKind::PoissonWeights);
    }

    #[test]
    fn jacobian_linear_variance() {
        check_jacobian(ConstraintKind::LinearVariance);
    }

    #[test]
    fn encode_decode_roundtrip() {
        let m = MixtureModel::free(3.0, 50.0, 0.2, &[4.0, 6.0, 7.0], &[0.5, 0.3, 0.2]).unwrap();
        let layout = Layout {
            kind: ConstraintKind::FreeWeightsFreeSigmas,
            k: 3,
            fit_sat: true,
        };
        let d = layout.decode(&layout.encode(&m), 0.0);
        for (a, b) in d.weights.iter().zip(m.weights()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in d.sigmas.iter().zip(m.sigmas()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(layout.n_params(), 3 + 3 + 2);
    }
}
