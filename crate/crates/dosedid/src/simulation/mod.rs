//! Monte Carlo harness: repeatedly draw data from the benchmark process,
//! run the full cross-fitted estimator at a target dose, and summarize the
//! sampling distribution (bias, dispersion, average standard error, coverage)
//! against the known effect curve.

mod dgp;
pub mod probe;

pub use dgp::{generate_panel, generate_rcs, DgpSpec};

use crate::dataset::{Design, DoseGrid, HasDoses};
use crate::estimator::{estimate_att_panel, estimate_att_rcs};
use crate::inference::normal_quantile;
use crate::kahan;
use crate::kernel::{rule_of_thumb_bandwidth, KernelFamily, KernelSpec};
use crate::nuisance::LearnerSpec;
use crate::rng::{derive_seed, Stream};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

/// Estimation settings applied to every replication.
#[derive(Debug, Clone)]
pub struct McConfig {
    pub k_folds: usize,
    pub learners: LearnerSpec,
    pub family: KernelFamily,
    /// Fixed bandwidth; `None` applies the rule of thumb to each draw.
    pub bandwidth: Option<f64>,
    /// Confidence level 1−α for the coverage column.
    pub alpha: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            k_folds: 5,
            learners: LearnerSpec::default(),
            family: KernelFamily::Gaussian,
            bandwidth: None,
            alpha: 0.05,
        }
    }
}

/// One replication's estimate at the target dose.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McRep {
    pub estimate: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Sampling-distribution summary across replications.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McSummary {
    /// mean(estimate) − ATT(target_dose).
    pub bias: f64,
    /// Standard deviation of the estimates (n−1 denominator).
    pub std: f64,
    /// √(bias² + std²·(R−1)/R), i.e. the root of the mean squared error
    /// around the truth.
    pub rmse: f64,
    /// Average of the estimated standard errors.
    pub avse: f64,
    /// Fraction of normal confidence intervals containing the truth.
    pub coverage: f64,
    pub n_reps: usize,
    pub target_dose: f64,
}

/// Full Monte Carlo output: the summary plus every replication.
#[derive(Debug, Clone)]
pub struct McResult {
    pub summary: McSummary,
    pub reps: Vec<McRep>,
}

/// Summarize per-replication (estimate, se) pairs against the true effect.
fn summarize(
    pairs: &[(f64, f64)],
    target_dose: f64,
    truth: f64,
    alpha: f64,
) -> Result<McResult> {
    if pairs.len() < 2 {
        return Err(Error::Config(format!(
            "Monte Carlo summary needs at least 2 replications, got {}",
            pairs.len()
        )));
    }
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    let reps: Vec<McRep> = pairs
        .iter()
        .map(|&(estimate, se)| McRep {
            estimate,
            se,
            ci_lo: estimate - z * se,
            ci_hi: estimate + z * se,
        })
        .collect();
    let idx: Vec<usize> = (0..reps.len()).collect();
    let r = reps.len() as f64;
    let mean_est = kahan::mean_by(&idx, |i| reps[i].estimate);
    let bias = mean_est - truth;
    let var = kahan::mean_by(&idx, |i| {
        let dev = reps[i].estimate - mean_est;
        dev * dev
    }) * r
        / (r - 1.0);
    let std = var.sqrt();
    let rmse = (bias * bias + var * (r - 1.0) / r).sqrt();
    let avse = kahan::mean_by(&idx, |i| reps[i].se);
    let covered = reps
        .iter()
        .filter(|rep| rep.ci_lo <= truth && truth <= rep.ci_hi)
        .count();
    Ok(McResult {
        summary: McSummary {
            bias,
            std,
            rmse,
            avse,
            coverage: covered as f64 / r,
            n_reps: reps.len(),
            target_dose,
        },
        reps,
    })
}

fn fit_replication<D: HasDoses>(
    data: &D,
    n_total: usize,
    config: &McConfig,
    rep_seed: u64,
    target_dose: f64,
    fit: impl Fn(&DoseGrid, usize, &LearnerSpec, &KernelSpec, u64) -> Result<(f64, f64)>,
) -> Result<(f64, f64)> {
    let grid = DoseGrid::new(vec![target_dose])?;
    let h = match config.bandwidth {
        Some(h) => h,
        None => {
            let positive: Vec<f64> =
                data.doses().iter().copied().filter(|&d| d > 0.0).collect();
            rule_of_thumb_bandwidth(&positive, n_total)?
        }
    };
    let kspec = KernelSpec::new(config.family, h)?;
    fit(&grid, config.k_folds, &config.learners, &kspec, rep_seed)
}

/// Run `n_reps` independent replications: draw a dataset of size `n` from the
/// benchmark process, estimate ATT at `target_dose` with full cross-fitting,
/// and summarize. Replications run in parallel with per-replication derived
/// seeds, so the result does not depend on thread count.
pub fn run_monte_carlo(
    design: Design,
    spec: &DgpSpec,
    n: usize,
    n_reps: usize,
    target_dose: f64,
    config: &McConfig,
    seed: u64,
) -> Result<McResult> {
    if n_reps < 2 {
        return Err(Error::Config(format!(
            "Monte Carlo needs at least 2 replications, got {n_reps}"
        )));
    }
    spec.validate()?;
    config.learners.validate()?;
    let pairs: Vec<(f64, f64)> = (0..n_reps)
        .into_par_iter()
        .map(|rep| -> Result<(f64, f64)> {
            let rep_seed = derive_seed(seed, &[Stream::Replication as u64, rep as u64]);
            match design {
                Design::Panel => {
                    let data = generate_panel(spec, n, rep_seed)?;
                    fit_replication(&data, n, config, rep_seed, target_dose, |g, k, l, ks, s| {
                        let curve = estimate_att_panel(&data, g, k, l, ks, s)?;
                        Ok((curve.estimates[0].att_hat, curve.estimates[0].se))
                    })
                }
                Design::Rcs => {
                    let data = generate_rcs(spec, n, rep_seed)?;
                    fit_replication(&data, n, config, rep_seed, target_dose, |g, k, l, ks, s| {
                        let curve = estimate_att_rcs(&data, g, k, l, ks, s)?;
                        Ok((curve.estimates[0].att_hat, curve.estimates[0].se))
                    })
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    summarize(&pairs, target_dose, spec.true_att(target_dose), config.alpha)
}

impl McResult {
    /// Write one CSV row per replication: estimate, se, ci_lo, ci_hi.
    pub fn write_reps_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|source| Error::IoWrite {
            path: path.display().to_string(),
            source,
        })?;
        let mut w = csv::Writer::from_writer(file);
        for rep in &self.reps {
            w.serialize(rep)
                .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))?;
        }
        w.flush().map_err(|source| Error::IoWrite {
            path: path.display().to_string(),
            source,
        })?;
        Ok(())
    }

    /// Write the summary as pretty-printed JSON.
    pub fn write_summary_json(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.summary)
            .map_err(|e| Error::Data(format!("cannot serialize summary: {e}")))?;
        std::fs::write(path, json + "\n").map_err(|source| Error::IoWrite {
            path: path.display().to_string(),
            source,
        })
    }

    /// Write a histogram of the replication estimates: equal-width bins with
    /// columns bin_lo, bin_hi, count.
    pub fn write_histogram_csv(&self, path: &Path, n_bins: usize) -> Result<()> {
        if n_bins == 0 {
            return Err(Error::Config("histogram needs at least one bin".into()));
        }
        let lo = self.reps.iter().map(|r| r.estimate).fold(f64::INFINITY, f64::min);
        let hi = self
            .reps
            .iter()
            .map(|r| r.estimate)
            .fold(f64::NEG_INFINITY, f64::max);
        // Degenerate spread still produces one usable bin.
        let hi = if hi > lo { hi } else { lo + 1e-12 };
        let width = (hi - lo) / n_bins as f64;
        let mut counts = vec![0usize; n_bins];
        for rep in &self.reps {
            let bin = (((rep.estimate - lo) / width) as usize).min(n_bins - 1);
            counts[bin] += 1;
        }
        #[derive(Serialize)]
        struct Row {
            bin_lo: f64,
            bin_hi: f64,
            count: usize,
        }
        let file = std::fs::File::create(path).map_err(|source| Error::IoWrite {
            path: path.display().to_string(),
            source,
        })?;
        let mut w = csv::Writer::from_writer(file);
        for (b, &count) in counts.iter().enumerate() {
            w.serialize(Row {
                bin_lo: lo + b as f64 * width,
                bin_hi: lo + (b + 1) as f64 * width,
                count,
            })
            .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))?;
        }
        w.flush().map_err(|source| Error::IoWrite {
            path: path.display().to_string(),
            source,
        })?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stubbed_estimator_recovers_truth() {
        // An estimator that always returns the truth with se = 1 must show
        // zero bias and full coverage.
        let truth = -0.405;
        let pairs = vec![(truth, 1.0); 20];
        let result = summarize(&pairs, 0.9, truth, 0.05).unwrap();
        // The mean of twenty copies of the truth is within an ulp of it.
        assert!(result.summary.bias.abs() < 1e-15, "bias {}", result.summary.bias);
        assert_eq!(result.summary.coverage, 1.0);
        assert!(result.summary.std < 1e-14, "std {}", result.summary.std);
        assert_eq!(result.summary.n_reps, 20);
        assert!((result.summary.avse - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rmse_identity_holds() {
        let pairs: Vec<(f64, f64)> = (0..25)
            .map(|i| (-0.4 + 0.01 * i as f64, 0.2 + 0.001 * i as f64))
            .collect();
        let result = summarize(&pairs, 0.9, -0.405, 0.05).unwrap();
        let s = result.summary;
        let r = s.n_reps as f64;
        let lhs = s.rmse * s.rmse;
        let rhs = s.bias * s.bias + s.std * s.std * (r - 1.0) / r;
        assert!((lhs - rhs).abs() < 1e-10);
        // Direct check against the mean squared deviation from the truth.
        let direct = pairs
            .iter()
            .map(|(e, _)| (e + 0.405) * (e + 0.405))
            .sum::<f64>()
            / r;
        assert!((lhs - direct).abs() < 1e-10);
    }

    #[test]
    fn summarize_rejects_tiny_runs() {
        assert!(summarize(&[(0.0, 1.0)], 0.9, 0.0, 0.05).is_err());
    }

    #[test]
    fn small_monte_carlo_end_to_end() {
        let spec = DgpSpec { p: 10, ..Default::default() };
        let config = McConfig {
            k_folds: 2,
            learners: LearnerSpec::ridge(),
            ..Default::default()
        };
        let result =
            run_monte_carlo(Design::Panel, &spec, 300, 3, 0.9, &config, 99).unwrap();
        assert_eq!(result.reps.len(), 3);
        assert!(result.summary.bias.is_finite());
        assert!(result.summary.std > 0.0);
        assert!(result.summary.avse > 0.0);
        // Determinism across calls.
        let again =
            run_monte_carlo(Design::Panel, &spec, 300, 3, 0.9, &config, 99).unwrap();
        assert_eq!(result.summary.bias.to_bits(), again.summary.bias.to_bits());
    }

    #[test]
    fn histogram_counts_cover_all_reps() {
        let pairs: Vec<(f64, f64)> = (0..40).map(|i| (i as f64 * 0.1, 1.0)).collect();
        let result = summarize(&pairs, 0.9, 0.0, 0.05).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hist.csv");
        result.write_histogram_csv(&path, 8).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let total: usize = text
            .lines()
            .skip(1)
            .map(|line| line.rsplit(',').next().unwrap().parse::<usize>().unwrap())
            .sum();
        assert_eq!(total, 40);
    }
}
