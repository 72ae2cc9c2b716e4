//! Binned pulse-area spectra.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Counts over contiguous bins `[edgeₖ, edgeₖ₊₁)`. Samples outside the
/// edges are tallied in `underflow`/`overflow` and still count towards
/// `total_pulses`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    edges: Vec<f64>,
    counts: Vec<u64>,
    underflow: u64,
    overflow: u64,
}

impl Histogram {
    pub fn new(edges: Vec<f64>, counts: Vec<u64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::InvalidHistogram("need at least two bin edges"));
        }
        if counts.len() + 1 != edges.len() {
            return Err(Error::InvalidHistogram("counts must have one fewer entry than edges"));
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidHistogram("bin edges must be finite"));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidHistogram("bin edges must be strictly increasing"));
        }
        Ok(Histogram {
            edges,
            counts,
            underflow: 0,
            overflow: 0,
        })
    }

    /// Empty histogram of `n_bins` bins of equal width starting at `lo`.
    pub fn uniform(lo: f64, width: f64, n_bins: usize) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::InvalidHistogram("bin width must be positive"));
        }
        if n_bins == 0 {
            return Err(Error::InvalidHistogram("need at least one bin"));
        }
        let edges = (0..=n_bins).map(|k| lo + k as f64 * width).collect();
        Histogram::new(edges, alloc::vec![0; n_bins])
    }

    /// Equal-width histogram just covering `samples`, with edges on the
    /// grid `k·width`. Fails on an empty or non-finite sample set.
    pub fn covering(samples: impl Iterator<Item = f64> + Clone, width: f64) -> Result<Self> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for x in samples.clone() {
            if !x.is_finite() {
                return Err(Error::InvalidHistogram("samples must be finite"));
            }
            lo = lo.min(x);
            hi = hi.max(x);
        }
        if lo > hi {
            return Err(Error::InvalidHistogram("no samples"));
        }
        let start = libm::floor(lo / width) * width;
        let n_bins = libm::floor((hi - start) / width) as usize + 1;
        let mut h = Histogram::uniform(start, width, n_bins)?;
        for x in samples {
            h.fill(x);
        }
        Ok(h)
    }

    /// Add one sample. Samples on an interior edge go to the upper bin.
    pub fn fill(&mut self, x: f64) {
        let last = self.edges.len() - 1;
        if x.is_nan() || x < self.edges[0] {
            self.underflow += 1;
        } else if x > self.edges[last] {
            self.overflow += 1;
        } else {
            // index of the first edge strictly greater than x, minus one
            let k = self.edges.partition_point(|&e| e <= x);
            self.counts[k.saturating_sub(1).min(last - 1)] += 1;
        }
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn underflow(&self) -> u64 {
        self.underflow
    }

    pub fn overflow(&self) -> u64 {
        self.overflow
    }

    pub fn in_range(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn total_pulses(&self) -> u64 {
        self.in_range() + self.underflow + self.overflow
    }

    pub fn bin(&self, k: usize) -> (f64, f64) {
        (self.edges[k], self.edges[k + 1])
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1]))
    }

    pub fn nonempty_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Same counts with every edge moved by `offset`.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        let mut h = Histogram::new(self.edges.iter().map(|e| e + offset).collect(), self.counts.clone())?;
        h.underflow = self.underflow;
        h.overflow = self.overflow;
        Ok(h)
    }
}
