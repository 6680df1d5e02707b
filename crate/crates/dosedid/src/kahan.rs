//! Compensated (Kahan-Neumaier) summation.
//!
//! Score averages, variance terms, and Monte Carlo summaries are accumulated
//! with a running compensation term so that results are reproducible to near
//! machine precision regardless of how many terms are summed, and so that
//! reordering rows within a fold perturbs an estimate by no more than the
//! compensation error (~1e-16 relative) instead of plain-summation drift.

/// A running compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add one term (Neumaier's variant, which stays accurate even when the
    /// incoming term is larger than the running sum).
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// The compensated total.
    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of a slice.
pub fn sum(values: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for &v in values {
        acc.add(v);
    }
    acc.total()
}

/// Compensated mean of a slice (0.0 for an empty slice).
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    sum(values) / values.len() as f64
}

/// Compensated mean of `f` mapped over an index set.
pub fn mean_by<F: FnMut(usize) -> f64>(indices: &[usize], mut f: F) -> f64 {
    if indices.is_empty() {
        return 0.0;
    }
    let mut acc = KahanSum::new();
    for &i in indices {
        acc.add(f(i));
    }
    acc.total() / indices.len() as f64
}
