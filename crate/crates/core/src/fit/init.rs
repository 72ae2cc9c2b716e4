//! Starting model from the raw spectrum.

use alloc::vec::Vec;

use super::PeakCount;
use crate::error::{Error, Result};
use crate::histogram::Histogram;
use crate::linalg::SquareMatrix;
use crate::mixture::{ladder_mean, MixtureModel};

/// Fraction of the global smoothed maximum a local maximum must exceed.
pub const PROMINENCE: f64 = 0.02;
const SMOOTHING: usize = 5;

/// Centred moving average; windows are truncated at the ends.
pub fn smooth(counts: &[u64]) -> Vec<f64> {
    let half = SMOOTHING / 2;
    (0..counts.len())
        .map(|b| {
            let lo = b.saturating_sub(half);
            let hi = (b + half).min(counts.len() - 1);
            counts[lo..=hi].iter().sum::<u64>() as f64 / (hi - lo + 1) as f64
        })
        .collect()
}

/// Bin-centre positions of the prominent maxima of the smoothed spectrum.
///
/// A run of equal smoothed values counts as one maximum, located at the
/// run's centre, when it is strictly higher than the bins on both sides
/// and above `PROMINENCE` of the global maximum.
pub fn prominent_maxima(hist: &Histogram) -> Vec<f64> {
    let s = smooth(hist.counts());
    let centers: Vec<f64> = hist.centers().collect();
    let peak = s.iter().copied().fold(0.0, f64::max);
    let floor = PROMINENCE * peak;
    let mut out = Vec::new();
    let mut a = 1;
    while a + 1 < s.len() {
        let mut c = a;
        while c + 1 < s.len() && s[c + 1] == s[a] {
            c += 1;
        }
        if c + 1 < s.len() && s[a - 1] < s[a] && s[c + 1] < s[a] && s[a] > floor {
            out.push(0.5 * (centers[a] + centers[c]));
        }
        a = c + 1;
    }
    out
}

/// Initial free-regime mixture.
///
/// The maxima are numbered by the median gap between successive maxima,
/// and with three or more of them the quadratic ladder is fitted through
/// their positions; otherwise `x0` sits on the first maximum, the spacing
/// is the median gap and the ladder is straight. Widths start at a quarter
/// spacing and weights from the counts nearest each ladder mean. With
/// [`PeakCount::Auto`] two peaks beyond the last numbered maximum are
/// modelled.
pub fn init_guess(hist: &Histogram, n_peaks: PeakCount) -> Result<MixtureModel> {
    if hist.in_range() == 0 {
        return Err(Error::InvalidHistogram("histogram is empty"));
    }
    let maxima = prominent_maxima(hist);
    if maxima.len() < 2 {
        return Err(Error::NeedsExplicitInit { maxima: maxima.len() });
    }
    let mut gaps: Vec<f64> = maxima.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(f64::total_cmp);
    let mid = gaps.len() / 2;
    let spacing = if gaps.len() % 2 == 1 {
        gaps[mid]
    } else {
        0.5 * (gaps[mid - 1] + gaps[mid])
    };
    let numbers = number_maxima(&maxima, spacing);
    let k = match n_peaks {
        PeakCount::Auto => numbers[numbers.len() - 1] + 3,
        PeakCount::Fixed(k) => k,
    };
    if k < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            found: k,
            what: "peaks",
        });
    }

    let (x0, spacing, sat) = quadratic_ladder(&maxima, &numbers, k).unwrap_or((maxima[0], spacing, 0.0));

    let means: Vec<f64> = (0..k).map(|i| ladder_mean(x0, spacing, sat, i)).collect();
    let mut weights = alloc::vec![0.0; k];
    for (center, &count) in hist.centers().zip(hist.counts()) {
        let nearest = means.partition_point(|m| *m < center);
        let i = if nearest == k || (nearest > 0 && center - means[nearest - 1] < means[nearest] - center) {
            nearest - 1
        } else {
            nearest
        };
        weights[i] += count as f64;
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w = (*w / total).max(1e-4);
    }
    let sigmas = alloc::vec![spacing / 4.0; k];
    MixtureModel::free(x0, spacing, sat, &sigmas, &weights)
}

/// Photon number of each maximum: the previous one's plus its gap in units
/// of `gap`, rounded. Counting gap by gap keeps the numbering right when
/// the spacing drifts along the ladder, and noise splitting one peak into
/// two nearby maxima gives both the same number.
fn number_maxima(maxima: &[f64], gap: f64) -> Vec<usize> {
    let mut numbers = alloc::vec![0];
    for w in maxima.windows(2) {
        let prev = numbers[numbers.len() - 1];
        numbers.push(prev + libm::round((w[1] - w[0]) / gap) as usize);
    }
    numbers
}

/// Least-squares `(x0, spacing, sat)` through the numbered maxima. `None`
/// with fewer than three distinct numbers or when the ladder would not
/// increase over `k` peaks.
fn quadratic_ladder(maxima: &[f64], numbers: &[usize], k: usize) -> Option<(f64, f64, f64)> {
    let mut normal = SquareMatrix::zeros(3);
    let mut rhs = [0.0; 3];
    for (&m, &n) in maxima.iter().zip(numbers) {
        let i = n as f64;
        let basis = [1.0, i, -i * i];
        for r in 0..3 {
            rhs[r] += basis[r] * m;
            for c in 0..3 {
                normal.add(r, c, basis[r] * basis[c]);
            }
        }
    }
    let mut distinct = numbers.to_vec();
    distinct.dedup();
    if distinct.len() < 3 || normal.cholesky().is_none() {
        return None;
    }
    let p = normal.cholesky_solve(&rhs);
    let (x0, spacing, sat) = (p[0], p[1], p[2]);
    // successive gaps are spacing − (2i−1)·sat
    let increasing = spacing - sat > 0.0 && spacing - (2.0 * k as f64 - 3.0) * sat > 0.0;
    (increasing && x0.is_finite()).then_some((x0, spacing, sat))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bimodal() -> Histogram {
        // triangular bumps centred on the bins containing 450 and 585
        let edges: Vec<f64> = (0..=80).map(|k| 300.0 + 5.0 * k as f64 - 2.5).collect();
        let centers: Vec<f64> = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let counts = centers
            .iter()
            .map(|&c| {
                let a = (100.0 - (c - 450.0).abs() * 2.0).max(0.0);
                let b = (80.0 - (c - 585.0).abs() * 2.0).max(0.0);
                (a + b) as u64
            })
            .collect();
        Histogram::new(edges, counts).unwrap()
    }

    #[test]
    fn bimodal_peaks_placed_by_construction() {
        let h = bimodal();
        assert_eq!(prominent_maxima(&h), [450.0, 585.0]);
        let m = init_guess(&h, PeakCount::Auto).unwrap();
        assert_eq!(m.x0(), 450.0);
        assert_eq!(m.spacing(), 135.0);
        assert_eq!(m.sat(), 0.0);
        assert_eq!(m.n_peaks(), 4);
        assert!(m.sigmas().iter().all(|&s| s == 135.0 / 4.0));
        let w = m.weights();
        assert!(w[0] > w[1] && w[1] > w[2]);
    }

    #[test]
    fn curved_ladder_is_numbered_gap_by_gap() {
        // gaps grow from 136 to 160: distance from the first maximum alone
        // would number the last one 9
        let maxima: Vec<f64> = (0..9).map(|i| ladder_mean(0.0, 135.0, -1.5, i)).collect();
        let gaps: Vec<f64> = maxima.windows(2).map(|w| w[1] - w[0]).collect();
        let numbers = number_maxima(&maxima, gaps[4]);
        assert_eq!(numbers, (0..9).collect::<Vec<_>>());
        let (x0, spacing, sat) = quadratic_ladder(&maxima, &numbers, 11).unwrap();
        assert!(x0.abs() < 1e-9 && (spacing - 135.0).abs() < 1e-9 && (sat + 1.5).abs() < 1e-9);
    }

    #[test]
    fn split_maximum_shares_a_number() {
        let numbers = number_maxima(&[0.0, 135.0, 270.0, 395.0, 420.0, 540.0], 135.0);
        assert_eq!(numbers, [0, 1, 2, 3, 3, 4]);
        assert_eq!(quadratic_ladder(&[0.0, 135.0, 140.0], &[0, 1, 1], 4), None);
    }

    #[test]
    fn flat_histogram_needs_explicit_init() {
        let h = Histogram::new((0..=20).map(f64::from).collect(), alloc::vec![7; 20]).unwrap();
        assert_eq!(
            init_guess(&h, PeakCount::Auto),
            Err(Error::NeedsExplicitInit { maxima: 0 })
        );
        let empty = Histogram::new((0..=20).map(f64::from).collect(), alloc::vec![0; 20]).unwrap();
        assert!(matches!(
            init_guess(&empty, PeakCount::Auto),
            Err(Error::InvalidHistogram(_))
        ));
    }

    #[test]
    fn smoothing_window_truncates_at_edges() {
        let s = smooth(&[5, 0, 0, 0, 0, 0, 10]);
        assert_eq!(s[0], 5.0 / 3.0);
        assert_eq!(s[3], 0.0);
        assert_eq!(s[6], 10.0 / 3.0);
    }

    #[test]
    fn small_bumps_are_not_prominent() {
        let mut counts = alloc::vec![0u64; 60];
        counts[10] = 1000;
        counts[30] = 1000;
        counts[50] = 10; // below 2% after smoothing
        let h = Histogram::new((0..=60).map(f64::from).collect(), counts).unwrap();
        assert_eq!(prominent_maxima(&h).len(), 2);
    }
}
