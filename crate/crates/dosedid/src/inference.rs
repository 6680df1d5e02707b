//! Multiplier-bootstrap inference: pointwise confidence intervals and
//! uniform confidence bands over the dose grid.
//!
//! The bootstrap never refits a nuisance. Each replicate reweights the frozen
//! per-row scores with i.i.d. N(1, 1) multipliers drawn from a counter-based
//! stream, so replicate b is the same numbers no matter how many threads run
//! or in what order replicates finish. The uniform critical value is the
//! empirical (1−α) quantile of the sup-t statistic
//! max_d |θ̂(d) − θ̂*_b(d)| / se(d).

use crate::dataset::DoseGrid;
use crate::estimator::{freeze_scores, replicate_point, AttCurveEstimate, ScoreData};
use crate::kernel::KernelSpec;
use crate::nuisance::FoldNuisances;
use crate::rng::{derive_rng, Stream};
use crate::{Error, Result};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use std::path::Path;

/// Quantile of the standard normal distribution.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Config(format!(
            "normal quantile needs a probability strictly inside (0, 1), got {p}"
        )));
    }
    let standard = Normal::new(0.0, 1.0).expect("unit normal is well-defined");
    Ok(standard.inverse_cdf(p))
}

/// Multiplier weights for bootstrap replicate `replicate`: n i.i.d. draws
/// from N(1, 1). The stream is keyed by (seed, replicate), so any replicate
/// can be regenerated on its own.
pub fn draw_multipliers(n: usize, replicate: u64, seed: u64) -> Vec<f64> {
    let mut rng = derive_rng(seed, &[Stream::Multiplier as u64, replicate]);
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            1.0 + z
        })
        .collect()
}

/// The ⌈q·B⌉-th order statistic (1-based) of the values, with a guard so a
/// q·B that is an integer up to float noise is not bumped to the next rank.
fn empirical_quantile(values: &[f64], q: f64) -> f64 {
    debug_assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let t = q * sorted.len() as f64;
    let rank = if (t - t.round()).abs() < 1e-9 { t.round() } else { t.ceil() };
    let rank = (rank as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Pointwise normal intervals att ± z_{1−α/2}·se for every grid point.
pub fn pointwise_ci_normal(curve: &AttCurveEstimate, alpha: f64) -> Result<Vec<(f64, f64)>> {
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    Ok(curve
        .estimates
        .iter()
        .map(|e| (e.att_hat - z * e.se, e.att_hat + z * e.se))
        .collect())
}

/// Pointwise bootstrap interval at one dose from the replicate draws: with
/// δ_b = θ̂*_b − θ̂ and ĉ_q the ⌈q·B⌉-th order statistic of the δ_b, the
/// interval is [θ̂ − ĉ_{1−α/2}, θ̂ − ĉ_{α/2}].
pub fn pointwise_ci_bootstrap(
    estimate: f64,
    replicates: &[f64],
    alpha: f64,
) -> Result<(f64, f64)> {
    if replicates.len() < 2 {
        return Err(Error::Config(format!(
            "bootstrap interval needs at least two replicates, got {}",
            replicates.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!(
            "alpha must lie strictly inside (0, 1), got {alpha}"
        )));
    }
    let deltas: Vec<f64> = replicates.iter().map(|r| r - estimate).collect();
    let hi_cut = empirical_quantile(&deltas, 1.0 - alpha / 2.0);
    let lo_cut = empirical_quantile(&deltas, alpha / 2.0);
    Ok((estimate - hi_cut, estimate - lo_cut))
}

/// A uniform confidence band: center ± half_width covers the whole curve
/// simultaneously with probability ≈ 1−α.
#[derive(Debug, Clone)]
pub struct UniformBand {
    pub grid: Vec<f64>,
    pub center: Vec<f64>,
    pub half_width: Vec<f64>,
    /// Bootstrap critical value ĉ(1−α); half_width = ĉ·se pointwise.
    pub critical_value: f64,
    pub alpha: f64,
    pub n_boot: usize,
    /// Master seed of the multiplier streams.
    pub seed: u64,
}

impl UniformBand {
    pub fn lower(&self) -> Vec<f64> {
        self.center
            .iter()
            .zip(&self.half_width)
            .map(|(c, h)| c - h)
            .collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.center
            .iter()
            .zip(&self.half_width)
            .map(|(c, h)| c + h)
            .collect()
    }

    /// True when the band covers `truth` at every grid point.
    pub fn covers(&self, truth: impl Fn(f64) -> f64) -> bool {
        self.grid.iter().enumerate().all(|(g, &d)| {
            let t = truth(d);
            (self.center[g] - self.half_width[g]) <= t && t <= (self.center[g] + self.half_width[g])
        })
    }

    /// Write the band as CSV alongside the pointwise normal interval at the
    /// same level.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            dose: f64,
            center: f64,
            lo_uniform: f64,
            hi_uniform: f64,
            lo_pointwise: f64,
            hi_pointwise: f64,
            critical_value: f64,
        }
        let z = normal_quantile(1.0 - self.alpha / 2.0)?;
        let file = std::fs::File::create(path).map_err(|source| Error::IoWrite {
            path: path.display().to_string(),
            source,
        })?;
        let mut w = csv::Writer::from_writer(file);
        for (g, &dose) in self.grid.iter().enumerate() {
            let se = self.half_width[g] / self.critical_value;
            let row = Row {
                dose,
                center: self.center[g],
                lo_uniform: self.center[g] - self.half_width[g],
                hi_uniform: self.center[g] + self.half_width[g],
                lo_pointwise: self.center[g] - z * se,
                hi_pointwise: self.center[g] + z * se,
                critical_value: self.critical_value,
            };
            w.serialize(row)
                .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))?;
        }
        w.flush().map_err(|source| Error::IoWrite {
            path: path.display().to_string(),
            source,
        })?;
        Ok(())
    }

    /// Write the band's metadata (level, replicate count, seed, critical
    /// value) as pretty-printed JSON.
    pub fn write_json(&self, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct Meta<'a> {
            alpha: f64,
            n_boot: usize,
            seed: u64,
            critical_value: f64,
            grid: &'a [f64],
        }
        let meta = Meta {
            alpha: self.alpha,
            n_boot: self.n_boot,
            seed: self.seed,
            critical_value: self.critical_value,
            grid: &self.grid,
        };
        let json = serde_json::to_string_pretty(&meta)
            .map_err(|e| Error::Data(format!("cannot serialize band: {e}")))?;
        std::fs::write(path, json + "\n").map_err(|source| Error::IoWrite {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Uniform confidence band for the fitted curve by multiplier bootstrap.
///
/// Scores are frozen once from the supplied nuisances (which must be the
/// ones the curve was fit with); replicates differ only in their multiplier
/// weights. Requires a strictly positive standard error at every grid point
/// and at least 100 replicates.
pub fn uniform_band<D: ScoreData>(
    curve: &AttCurveEstimate,
    data: &D,
    nuisances: &[FoldNuisances],
    kspec: &KernelSpec,
    n_boot: usize,
    alpha: f64,
    seed: u64,
) -> Result<UniformBand> {
    if n_boot < 100 {
        return Err(Error::Config(format!(
            "uniform band needs at least 100 bootstrap replicates, got {n_boot}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!(
            "alpha must lie strictly inside (0, 1), got {alpha}"
        )));
    }
    let folds = curve.folds.as_ref().ok_or_else(|| {
        Error::Data("uniform band needs a cross-fitted curve with a fold assignment".into())
    })?;
    for e in &curve.estimates {
        if !(e.se > 0.0) {
            return Err(Error::Numeric(format!(
                "uniform band needs a positive standard error at every grid point; \
                 se at dose {} is {}",
                e.dose, e.se
            )));
        }
    }
    let grid = DoseGrid::new(curve.grid.points().to_vec())?;
    let frozen = freeze_scores(data, &grid, folds, nuisances, kspec)?;
    let n = data.n_rows();
    let maxima: Vec<f64> = (0..n_boot)
        .into_par_iter()
        .map(|b| {
            let xi = draw_multipliers(n, b as u64, seed);
            let mut max_t = 0.0f64;
            for (g, e) in curve.estimates.iter().enumerate() {
                let rep = replicate_point(&frozen, g, &xi);
                max_t = max_t.max((e.att_hat - rep).abs() / e.se);
            }
            max_t
        })
        .collect();
    let critical_value = empirical_quantile(&maxima, 1.0 - alpha);
    Ok(UniformBand {
        grid: curve.grid.points().to_vec(),
        center: curve.att_hats(),
        half_width: curve.estimates.iter().map(|e| critical_value * e.se).collect(),
        critical_value,
        alpha,
        n_boot,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::PanelDataset;
    use crate::estimator::{bootstrap_replicate, estimate_att_with, FoldAssignment};
    use crate::kahan;
    use crate::kernel::KernelFamily;
    use crate::nuisance::FittedRegressor;
    use ndarray::Array2;
    use proptest::prelude::*;

    #[test]
    fn normal_quantile_reference_values() {
        assert!((normal_quantile(0.975).unwrap() - 1.959963984540054).abs() < 1e-9);
        assert!((normal_quantile(0.84).unwrap() - 0.994457883209753).abs() < 1e-9);
        assert!((normal_quantile(0.5).unwrap()).abs() < 1e-12);
        let p = 0.123;
        let a = normal_quantile(p).unwrap();
        let b = normal_quantile(1.0 - p).unwrap();
        assert!((a + b).abs() < 1e-12);
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn multipliers_center_on_one_with_unit_variance() {
        let n = 20_000;
        let xi = draw_multipliers(n, 0, 42);
        assert_eq!(xi.len(), n);
        let rows: Vec<usize> = (0..n).collect();
        let mean = kahan::mean_by(&rows, |i| xi[i]);
        let var = kahan::mean_by(&rows, |i| (xi[i] - mean) * (xi[i] - mean));
        let tol = 6.0 / (n as f64).sqrt();
        assert!((mean - 1.0).abs() < tol, "mean {mean}");
        assert!((var - 1.0).abs() < tol * std::f64::consts::SQRT_2, "var {var}");
        // Distinct replicates get distinct draws; the same key reproduces.
        assert_ne!(draw_multipliers(4, 0, 42), draw_multipliers(4, 1, 42));
        assert_eq!(draw_multipliers(4, 3, 42), draw_multipliers(4, 3, 42));
    }

    #[test]
    fn bootstrap_interval_worked_example() {
        // Deltas are (-2, -1, 1, 2); with α = 0.5 the cut ranks are ⌈0.75·4⌉ = 3
        // and ⌈0.25·4⌉ = 1, so the interval is [10 - 1, 10 + 2].
        let (lo, hi) = pointwise_ci_bootstrap(10.0, &[8.0, 9.0, 11.0, 12.0], 0.5).unwrap();
        assert_eq!((lo, hi), (9.0, 12.0));
        assert!(pointwise_ci_bootstrap(10.0, &[], 0.5).is_err());
        assert!(pointwise_ci_bootstrap(10.0, &[1.0], 0.5).is_err());
        assert!(pointwise_ci_bootstrap(10.0, &[1.0, 2.0], 1.5).is_err());
        // All replicates at the estimate collapse the interval onto it.
        let (lo, hi) = pointwise_ci_bootstrap(3.0, &[3.0, 3.0, 3.0], 0.1).unwrap();
        assert_eq!((lo, hi), (3.0, 3.0));
    }

    fn toy_curve_inputs() -> (
        PanelDataset,
        crate::dataset::DoseGrid,
        KernelSpec,
        FoldAssignment,
        Vec<FoldNuisances>,
    ) {
        let data = PanelDataset::new(
            vec![0.0, 0.2, -0.1, 0.4, 0.3, -0.2, 0.1, 0.0],
            vec![1.0, 0.7, 0.2, 1.9, 0.8, 0.1, 0.6, 0.9],
            vec![0.0, 0.9, 0.0, 1.1, 0.0, 1.0, 0.0, 0.8],
            Array2::from_shape_fn((8, 2), |(i, j)| (i as f64 - 3.0) * 0.25 + j as f64 * 0.1),
        )
        .unwrap();
        let grid = crate::dataset::DoseGrid::new(vec![0.85, 1.0]).unwrap();
        let kspec = KernelSpec::new(KernelFamily::Gaussian, 0.4).unwrap();
        let folds = FoldAssignment::from_fold_of(vec![0, 1, 0, 1, 0, 1, 0, 1], 2).unwrap();
        let make = || {
            FoldNuisances::new(
                FittedRegressor::from_fn(|x| 0.4 + 0.1 * x[0].sin()),
                vec![FittedRegressor::from_fn(|x| 0.25 + 0.05 * x[1].cos()); 2],
                FittedRegressor::from_fn(|x| 0.1 * x[0] - 0.2 * x[1]),
                vec![0.35, 0.36],
                None,
                0.01,
                1e-3,
            )
            .unwrap()
        };
        (data, grid, kspec, folds, vec![make(), make()])
    }

    #[test]
    fn uniform_band_matches_manual_bootstrap() {
        let (data, grid, kspec, folds, nuis) = toy_curve_inputs();
        let curve = estimate_att_with(&data, &grid, &folds, &nuis, &kspec).unwrap();
        let band = uniform_band(&curve, &data, &nuis, &kspec, 120, 0.10, 7).unwrap();

        // Rebuild every replicate through the public one-replicate API and
        // recompute the critical value by hand.
        let mut maxima = Vec::new();
        for b in 0..120u64 {
            let xi = draw_multipliers(data.n(), b, 7);
            let rep = bootstrap_replicate(&data, &grid, &folds, &nuis, &kspec, &xi).unwrap();
            let mut m = 0.0f64;
            for (g, e) in curve.estimates.iter().enumerate() {
                m = m.max((e.att_hat - rep[g]).abs() / e.se);
            }
            maxima.push(m);
        }
        maxima.sort_unstable_by(f64::total_cmp);
        let rank = (0.90f64 * 120.0).ceil() as usize;
        let manual = maxima[rank - 1];
        assert_eq!(band.critical_value.to_bits(), manual.to_bits());
        for (g, e) in curve.estimates.iter().enumerate() {
            assert_eq!(band.half_width[g], band.critical_value * e.se);
            assert_eq!(band.center[g], e.att_hat);
        }
        assert!(band.covers(|d| {
            let g = if d == 0.85 { 0 } else { 1 };
            curve.estimates[g].att_hat
        }));
        assert_eq!(band.lower()[0], band.center[0] - band.half_width[0]);
        assert_eq!(band.upper()[1], band.center[1] + band.half_width[1]);
    }

    #[test]
    fn uniform_band_validates_inputs() {
        let (data, grid, kspec, folds, nuis) = toy_curve_inputs();
        let curve = estimate_att_with(&data, &grid, &folds, &nuis, &kspec).unwrap();
        assert!(uniform_band(&curve, &data, &nuis, &kspec, 99, 0.10, 7).is_err());
        assert!(uniform_band(&curve, &data, &nuis, &kspec, 120, 0.0, 7).is_err());
        let mut degenerate = curve.clone();
        degenerate.estimates[0].se = 0.0;
        assert!(uniform_band(&degenerate, &data, &nuis, &kspec, 120, 0.10, 7).is_err());
    }

    #[test]
    fn pointwise_normal_arithmetic() {
        let (data, grid, kspec, folds, nuis) = toy_curve_inputs();
        let curve = estimate_att_with(&data, &grid, &folds, &nuis, &kspec).unwrap();
        let cis = pointwise_ci_normal(&curve, 0.05).unwrap();
        let z = normal_quantile(0.975).unwrap();
        for (g, e) in curve.estimates.iter().enumerate() {
            assert!((cis[g].0 - (e.att_hat - z * e.se)).abs() < 1e-15);
            assert!((cis[g].1 - (e.att_hat + z * e.se)).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn bootstrap_interval_is_ordered_and_anchored(
            est in -5.0f64..5.0,
            reps in proptest::collection::vec(-10.0f64..10.0, 2..60),
            alpha in 0.01f64..0.5,
        ) {
            let (lo, hi) = pointwise_ci_bootstrap(est, &reps, alpha).unwrap();
            prop_assert!(lo <= hi);
            // The cuts are order statistics of the deltas, so the interval
            // endpoints stay within est - [min, max] of the deltas.
            let min_d = reps.iter().map(|r| r - est).fold(f64::INFINITY, f64::min);
            let max_d = reps.iter().map(|r| r - est).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo >= est - max_d - 1e-12);
            prop_assert!(hi <= est - min_d + 1e-12);
        }
    }
}
