//! Kernel functions, the scaled kernel `K_h`, the rule-of-thumb bandwidth,
//! and kernel density estimation for the marginal dose density.
//!
//! A kernel here is a symmetric second-order density: `∫K = 1`, `∫uK = 0`,
//! `0 < ∫u²K < ∞`. Smoothing by `K_h(u) = K(u/h)/h` turns conditioning on the
//! exact dose `D = d` into a weighted neighborhood around `d`, which is what
//! makes a continuous treatment estimable at all; the price is an `O(h²)`
//! smoothing bias that the bandwidth rule keeps asymptotically negligible.

use crate::kahan::KahanSum;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Supported kernel families.
///
/// Gaussian is the default; Epanechnikov is the compactly supported
/// alternative, handy when exact zero weights outside `|u| <= 1` matter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Gaussian,
    Epanechnikov,
}

impl KernelFamily {
    /// The unscaled kernel `K(u)`.
    ///
    /// Gaussian: `exp(-u²/2)/√(2π)`. Epanechnikov: `0.75(1-u²)` on `|u| <= 1`,
    /// zero outside.
    #[inline]
    pub fn value(self, u: f64) -> f64 {
        match self {
            KernelFamily::Gaussian => (-0.5 * u * u).exp() / std::f64::consts::TAU.sqrt(),
            KernelFamily::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }

    /// Second moment `∫u²K(u)du` of the family (1 for Gaussian, 1/5 for
    /// Epanechnikov); the constant that multiplies `h²` in the smoothing bias.
    pub fn second_moment(self) -> f64 {
        match self {
            KernelFamily::Gaussian => 1.0,
            KernelFamily::Epanechnikov => 0.2,
        }
    }
}

/// A kernel family together with a bandwidth: everything needed to evaluate
/// `K`, `K_h`, and kernel density estimates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub bandwidth: f64,
}

impl KernelSpec {
    /// Build a spec, rejecting non-finite or nonpositive bandwidths.
    pub fn new(family: KernelFamily, bandwidth: f64) -> Result<Self> {
        if !bandwidth.is_finite() || bandwidth <= 0.0 {
            return Err(Error::Config(format!(
                "bandwidth must be a positive finite number, got {bandwidth}"
            )));
        }
        Ok(Self { family, bandwidth })
    }

    /// The unscaled kernel `K(u)`.
    #[inline]
    pub fn kernel_value(&self, u: f64) -> f64 {
        self.family.value(u)
    }

    /// The scaled kernel `K_h(u) = K(u/h)/h`.
    #[inline]
    pub fn scaled_kernel(&self, u: f64) -> f64 {
        self.family.value(u / self.bandwidth) / self.bandwidth
    }
}

/// Rule-of-thumb bandwidth `1.06 · sd(positive doses) · n_total^(-1/4)`.
///
/// The standard deviation is taken over the positive (treated) doses with the
/// unbiased `n-1` denominator, while the sample-size factor uses the total
/// number of rows, controls included. The `N^(-1/4)` rate undersmooths
/// relative to the density-estimation optimum so the smoothing bias vanishes
/// faster than the standard error.
pub fn rule_of_thumb_bandwidth(positive_doses: &[f64], n_total: usize) -> Result<f64> {
    if positive_doses.len() < 2 {
        return Err(Error::Data(format!(
            "bandwidth rule needs at least 2 positive doses, got {}",
            positive_doses.len()
        )));
    }
    if n_total < 2 {
        return Err(Error::Data(format!(
            "bandwidth rule needs a total sample of at least 2, got {n_total}"
        )));
    }
    let n = positive_doses.len() as f64;
    let mean = crate::kahan::mean(positive_doses);
    let mut ss = KahanSum::new();
    for &d in positive_doses {
        let c = d - mean;
        ss.add(c * c);
    }
    let sd = (ss.total() / (n - 1.0)).sqrt();
    if sd <= 0.0 {
        return Err(Error::Data(
            "positive doses have zero variance; bandwidth rule is undefined".into(),
        ));
    }
    Ok(1.06 * sd * (n_total as f64).powf(-0.25))
}

/// Kernel density estimate of the dose density at `d`:
/// the average of `K_h(D_i - d)` over every row.
///
/// All observations enter, including controls at dose zero, because the
/// relevant density is the mixture over the whole population; with a small
/// bandwidth the controls' kernel weight at an interior `d` is negligible,
/// but it is not artificially removed.
pub fn kde_density(spec: &KernelSpec, doses: &[f64], d: f64) -> f64 {
    if doses.is_empty() {
        return 0.0;
    }
    let mut acc = KahanSum::new();
    for &di in doses {
        acc.add(spec.scaled_kernel(di - d));
    }
    acc.total() / doses.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

    #[test]
    fn gaussian_values() {
        let spec = KernelSpec::new(KernelFamily::Gaussian, 1.0).unwrap();
        assert!((spec.kernel_value(0.0) - INV_SQRT_2PI).abs() < 1e-15);
        assert!((spec.kernel_value(1.0) - 0.241_970_724_519_143_37).abs() < 1e-15);
    }

    #[test]
    fn epanechnikov_support() {
        let spec = KernelSpec::new(KernelFamily::Epanechnikov, 1.0).unwrap();
        assert_eq!(spec.kernel_value(1.5), 0.0);
        assert_eq!(spec.kernel_value(-1.0001), 0.0);
        assert!((spec.kernel_value(0.0) - 0.75).abs() < 1e-15);
        assert!((spec.kernel_value(0.5) - 0.5625).abs() < 1e-15);
    }

    #[test]
    fn scaled_kernel_examples() {
        let spec = KernelSpec::new(KernelFamily::Gaussian, 0.5).unwrap();
        // K_h(0) = K(0)/h = 2 * K(0).
        assert!((spec.scaled_kernel(0.0) - 2.0 * INV_SQRT_2PI).abs() < 1e-15);
        // h = 1 reduces the scaled kernel to the plain kernel.
        for family in [KernelFamily::Gaussian, KernelFamily::Epanechnikov] {
            let unit = KernelSpec::new(family, 1.0).unwrap();
            for u in [-2.0, -0.3, 0.0, 0.7, 1.2] {
                assert_eq!(unit.scaled_kernel(u), unit.kernel_value(u));
            }
        }
    }

    #[test]
    fn bandwidth_rule_arithmetic() {
        // sd = 1 exactly for {1,2,3} (n-1 denominator): 1.06 * 1 * 256^(-1/4) = 1.06/4.
        let h = rule_of_thumb_bandwidth(&[1.0, 2.0, 3.0], 256).unwrap();
        assert!((h - 1.06 / 4.0).abs() < 1e-12);
        // N = 10000 gives the factor 0.1.
        let h = rule_of_thumb_bandwidth(&[1.0, 2.0, 3.0], 10_000).unwrap();
        assert!((h - 0.106).abs() < 1e-12);
    }

    #[test]
    fn bandwidth_rule_rejects_degenerate_input() {
        assert!(rule_of_thumb_bandwidth(&[1.0], 100).is_err());
        assert!(rule_of_thumb_bandwidth(&[2.0, 2.0, 2.0], 100).is_err());
    }

    #[test]
    fn kde_point_mass() {
        let spec = KernelSpec::new(KernelFamily::Gaussian, 1.0).unwrap();
        // All mass at the evaluation point: density = K_h(0) = K(0).
        let d = kde_density(&spec, &[0.0, 0.0, 0.0], 0.0);
        assert!((d - INV_SQRT_2PI).abs() < 1e-15);
        let spec = KernelSpec::new(KernelFamily::Gaussian, 0.5).unwrap();
        let d = kde_density(&spec, &[1.0], 1.0);
        assert!((d - 2.0 * INV_SQRT_2PI).abs() < 1e-15);
    }

    #[test]
    fn bandwidth_must_be_positive() {
        assert!(KernelSpec::new(KernelFamily::Gaussian, 0.0).is_err());
        assert!(KernelSpec::new(KernelFamily::Gaussian, -1.0).is_err());
        assert!(KernelSpec::new(KernelFamily::Gaussian, f64::NAN).is_err());
    }
}
