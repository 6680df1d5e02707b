//! Cross-fitted estimation of ATT(d): fold partitioning, the orthogonal
//! score, the dose-response point estimates with their cross-fitted variance,
//! and a naive plug-in estimator kept around for bias comparisons.
//!
//! The estimator splits rows into K folds, fits every nuisance on each fold's
//! complement, and averages the orthogonal score over held-out rows:
//!
//! ```text
//! score_i(d) = [K_h(D_i−d)·ĝ(X_i) − 1{D_i=0}·f̂_h(d|X_i)]
//!              / (f̂_D(d)·ĝ(X_i)) · (ΔY_i − Ê[ΔY|X_i, D=0])
//! ```
//!
//! The reported curve is the average of the per-fold score means. All
//! reductions use compensated summation in a fixed order (ascending row index
//! within a fold, then fold index), so results are bit-identical regardless
//! of thread count, and shuffling rows within a fold moves the estimate by at
//! most summation noise.

use crate::dataset::{Design, DoseGrid, PanelDataset, RcsDataset};
use crate::inference::normal_quantile;
use crate::kahan::{self, KahanSum};
use crate::kernel::{kde_density, KernelSpec};
use crate::nuisance::{
    fit_control_propensity, fit_fold_nuisances_panel, fit_fold_nuisances_rcs,
    fit_smoothed_conditional_density, FoldNuisances, LearnerSpec, DEFAULT_CLIP_KAPPA,
    DEFAULT_DENSITY_FLOOR,
};
use crate::rng::{derive_rng, derive_seed, Stream};
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

/// A disjoint partition of row indices into K folds of near-equal size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    fold_of: Vec<usize>,
    k: usize,
}

impl FoldAssignment {
    /// Build an assignment from an explicit fold-index vector (tests and
    /// oracle injection). Validates the partition invariants.
    pub fn from_fold_of(fold_of: Vec<usize>, k: usize) -> Result<Self> {
        if k < 2 || k > fold_of.len() {
            return Err(Error::Config(format!(
                "fold count must satisfy 2 <= k <= n, got k={k} with n={}",
                fold_of.len()
            )));
        }
        let mut sizes = vec![0usize; k];
        for &f in &fold_of {
            if f >= k {
                return Err(Error::Config(format!(
                    "fold index {f} out of range for k={k}"
                )));
            }
            sizes[f] += 1;
        }
        let (lo, hi) = (
            sizes.iter().copied().min().unwrap(),
            sizes.iter().copied().max().unwrap(),
        );
        if lo == 0 || hi - lo > 1 {
            return Err(Error::Config(format!(
                "fold sizes must differ by at most 1, got {sizes:?}"
            )));
        }
        Ok(Self { fold_of, k })
    }

    pub fn n(&self) -> usize {
        self.fold_of.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    /// Rows in fold `k`, ascending.
    pub fn members(&self, k: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.fold_of[i] == k).collect()
    }

    /// Rows outside fold `k` (the auxiliary sample), ascending.
    pub fn aux_members(&self, k: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.fold_of[i] != k).collect()
    }
}

/// Shuffle 0..n with a seeded permutation and deal the result round-robin
/// into k folds, so sizes differ by at most one.
pub fn assign_folds(n: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 || k > n {
        return Err(Error::Config(format!(
            "fold count must satisfy 2 <= k <= n, got k={k} with n={n}"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = derive_rng(seed, &[Stream::Folds as u64]);
    perm.shuffle(&mut rng);
    let mut fold_of = vec![0usize; n];
    for (pos, &row) in perm.iter().enumerate() {
        fold_of[row] = pos % k;
    }
    Ok(FoldAssignment { fold_of, k })
}

/// One grid point of the estimated dose-response curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttPointEstimate {
    pub dose: f64,
    pub att_hat: f64,
    /// Standard error σ̂_N(d)/√N; zero for estimators without a variance.
    pub se: f64,
    /// Kernel mass at this dose, Σ_i K_h(D_i−d)·h. Small values flag grid
    /// points with little local data.
    pub n_effective: f64,
}

/// The estimated curve with everything needed to reproduce or extend it.
#[derive(Debug, Clone)]
pub struct AttCurveEstimate {
    pub grid: DoseGrid,
    pub estimates: Vec<AttPointEstimate>,
    pub bandwidth: f64,
    /// Fold partition used for cross-fitting; `None` for the naive estimator.
    pub folds: Option<FoldAssignment>,
    pub design: Design,
    /// Master seed of the fit; `None` when nuisances were injected.
    pub seed: Option<u64>,
}

impl AttCurveEstimate {
    pub fn att_hats(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.att_hat).collect()
    }

    pub fn ses(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.se).collect()
    }
}

/// Row-level access the estimation core needs from a dataset. Implemented by
/// both designs; the score formula is the same up to the outcome residual.
pub trait ScoreData: sealed::Sealed + Sync {
    fn n_rows(&self) -> usize;
    fn dose_at(&self, i: usize) -> f64;
    fn design_kind(&self) -> Design;
    /// The orthogonal score of row `i` at grid point `grid_idx` (dose `d`).
    fn score_at(
        &self,
        i: usize,
        d: f64,
        grid_idx: usize,
        nuis: &FoldNuisances,
        kspec: &KernelSpec,
    ) -> Result<f64>;
    /// Fit all fold nuisances on the auxiliary rows.
    fn fit_fold(
        &self,
        aux_idx: &[usize],
        grid: &DoseGrid,
        kspec: &KernelSpec,
        spec: &LearnerSpec,
        master_seed: u64,
        fold: usize,
    ) -> Result<FoldNuisances>;
}

mod sealed {
    pub trait Sealed {}
    impl Sealed for super::PanelDataset {}
    impl Sealed for super::RcsDataset {}
}

fn check_score(value: f64, i: usize, d: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numeric(format!(
            "score for row {} at dose {d} is {value}; nuisance clipping is misconfigured",
            i + 1
        )))
    }
}

/// The shared score weight: [K_h(D−d)·ĝ − 1{D=0}·f̂_h] / (f̂_D·ĝ).
fn score_weight(
    dose_i: f64,
    x_i: &[f64],
    d: f64,
    grid_idx: usize,
    nuis: &FoldNuisances,
    kspec: &KernelSpec,
) -> f64 {
    let kh = kspec.scaled_kernel(dose_i - d);
    let g = nuis.g(x_i);
    let numerator = if dose_i == 0.0 {
        kh * g - nuis.f_h(grid_idx, x_i)
    } else {
        kh * g
    };
    numerator / (nuis.f_d(grid_idx) * g)
}

/// Orthogonal score for one panel row.
pub fn score_panel(
    delta_y: f64,
    dose_i: f64,
    x_i: &[f64],
    d: f64,
    grid_idx: usize,
    nuis: &FoldNuisances,
    kspec: &KernelSpec,
) -> Result<f64> {
    let weight = score_weight(dose_i, x_i, d, grid_idx, nuis, kspec);
    check_score(weight * (delta_y - nuis.drift(x_i)), 0, d).map_err(|_| {
        Error::Numeric(format!(
            "panel score at dose {d} is non-finite; nuisance clipping is misconfigured"
        ))
    })
}

/// Orthogonal score for one repeated-cross-section row: the outcome change is
/// replaced with the period-reweighted (T−λ̂)Y/(λ̂(1−λ̂)).
#[allow(clippy::too_many_arguments)] // row-level score: the argument list is the formula's signature
pub fn score_rcs(
    y: f64,
    t: u8,
    dose_i: f64,
    x_i: &[f64],
    d: f64,
    grid_idx: usize,
    nuis: &FoldNuisances,
    kspec: &KernelSpec,
) -> Result<f64> {
    let lambda = nuis.lambda_hat().ok_or_else(|| {
        Error::Data("repeated-cross-section score needs lambda_hat in the fold nuisances".into())
    })?;
    let transformed = (f64::from(t) - lambda) * y / (lambda * (1.0 - lambda));
    let weight = score_weight(dose_i, x_i, d, grid_idx, nuis, kspec);
    check_score(weight * (transformed - nuis.drift(x_i)), 0, d).map_err(|_| {
        Error::Numeric(format!(
            "cross-section score at dose {d} is non-finite; nuisance clipping is misconfigured"
        ))
    })
}

impl ScoreData for PanelDataset {
    fn n_rows(&self) -> usize {
        self.n()
    }

    fn dose_at(&self, i: usize) -> f64 {
        self.dose()[i]
    }

    fn design_kind(&self) -> Design {
        Design::Panel
    }

    fn score_at(
        &self,
        i: usize,
        d: f64,
        grid_idx: usize,
        nuis: &FoldNuisances,
        kspec: &KernelSpec,
    ) -> Result<f64> {
        let delta_y = self.y_post()[i] - self.y_pre()[i];
        score_panel(delta_y, self.dose()[i], self.x_row(i), d, grid_idx, nuis, kspec)
    }

    fn fit_fold(
        &self,
        aux_idx: &[usize],
        grid: &DoseGrid,
        kspec: &KernelSpec,
        spec: &LearnerSpec,
        master_seed: u64,
        fold: usize,
    ) -> Result<FoldNuisances> {
        fit_fold_nuisances_panel(self, aux_idx, grid, kspec, spec, master_seed, fold)
    }
}

impl ScoreData for RcsDataset {
    fn n_rows(&self) -> usize {
        self.n()
    }

    fn dose_at(&self, i: usize) -> f64 {
        self.dose()[i]
    }

    fn design_kind(&self) -> Design {
        Design::Rcs
    }

    fn score_at(
        &self,
        i: usize,
        d: f64,
        grid_idx: usize,
        nuis: &FoldNuisances,
        kspec: &KernelSpec,
    ) -> Result<f64> {
        score_rcs(
            self.y()[i],
            self.period()[i],
            self.dose()[i],
            self.x_row(i),
            d,
            grid_idx,
            nuis,
            kspec,
        )
    }

    fn fit_fold(
        &self,
        aux_idx: &[usize],
        grid: &DoseGrid,
        kspec: &KernelSpec,
        spec: &LearnerSpec,
        master_seed: u64,
        fold: usize,
    ) -> Result<FoldNuisances> {
        fit_fold_nuisances_rcs(self, aux_idx, grid, kspec, spec, master_seed, fold)
    }
}

/// Per-row scores and kernel weights, evaluated once so that estimation,
/// variance, and every bootstrap replicate reuse identical numbers.
pub(crate) struct FrozenScores {
    /// `summands[g][i]`: score of row i at grid point g under its own fold's
    /// nuisances.
    pub summands: Vec<Vec<f64>>,
    /// `kh[g][i]`: kernel weight K_h(D_i − d_g).
    pub kh: Vec<Vec<f64>>,
    /// `f_d[g][k]`: marginal density at grid point g from fold k's nuisances.
    pub f_d: Vec<Vec<f64>>,
    /// Rows of each fold in ascending order.
    pub fold_members: Vec<Vec<usize>>,
}

pub(crate) fn freeze_scores<D: ScoreData>(
    data: &D,
    grid: &DoseGrid,
    folds: &FoldAssignment,
    nuisances: &[FoldNuisances],
    kspec: &KernelSpec,
) -> Result<FrozenScores> {
    let n = data.n_rows();
    if folds.n() != n {
        return Err(Error::Data(format!(
            "fold assignment covers {} rows, dataset has {n}",
            folds.n()
        )));
    }
    if nuisances.len() != folds.k() {
        return Err(Error::Data(format!(
            "{} fold nuisances supplied for k={} folds",
            nuisances.len(),
            folds.k()
        )));
    }
    for (k, nuis) in nuisances.iter().enumerate() {
        if nuis.n_grid() != grid.len() {
            return Err(Error::Data(format!(
                "fold {k} nuisances cover {} grid points, grid has {}",
                nuis.n_grid(),
                grid.len()
            )));
        }
    }
    let points = grid.points();
    // Rows are independent: evaluate them in parallel, collect in row order.
    let per_row: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<(Vec<f64>, Vec<f64>)> {
            let nuis = &nuisances[folds.fold_of[i]];
            let mut s = Vec::with_capacity(points.len());
            let mut w = Vec::with_capacity(points.len());
            for (g, &d) in points.iter().enumerate() {
                s.push(data.score_at(i, d, g, nuis, kspec)?);
                w.push(kspec.scaled_kernel(data.dose_at(i) - d));
            }
            Ok((s, w))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut summands = vec![vec![0.0; n]; points.len()];
    let mut kh = vec![vec![0.0; n]; points.len()];
    for (i, (s, w)) in per_row.into_iter().enumerate() {
        for g in 0..points.len() {
            summands[g][i] = s[g];
            kh[g][i] = w[g];
        }
    }
    let f_d = (0..points.len())
        .map(|g| nuisances.iter().map(|nu| nu.f_d(g)).collect())
        .collect();
    let fold_members = (0..folds.k()).map(|k| folds.members(k)).collect();
    Ok(FrozenScores {
        summands,
        kh,
        f_d,
        fold_members,
    })
}

/// Point estimate at grid index g: mean over folds of the per-fold score
/// means (ascending row order inside a fold, fold order outside).
pub(crate) fn curve_point(frozen: &FrozenScores, g: usize) -> f64 {
    let fold_means: Vec<f64> = frozen
        .fold_members
        .iter()
        .map(|members| kahan::mean_by(members, |i| frozen.summands[g][i]))
        .collect();
    kahan::mean(&fold_means)
}

/// Multiplier-bootstrap replicate at grid index g: the same mean of fold
/// means with each row's score weighted by ξ_i. Weights of exactly 1
/// reproduce `curve_point` bit for bit.
pub(crate) fn replicate_point(frozen: &FrozenScores, g: usize, xi: &[f64]) -> f64 {
    let fold_means: Vec<f64> = frozen
        .fold_members
        .iter()
        .map(|members| kahan::mean_by(members, |i| xi[i] * frozen.summands[g][i]))
        .collect();
    kahan::mean(&fold_means)
}

/// Cross-fitted variance σ̂²_N(d_g): the average over folds of the fold mean
/// of squared corrected scores. The correction recenters the score at the
/// pooled estimate and subtracts the density-estimation contribution
/// (θ̂/f̂_k)·(K_h(D−d) − f̂_k).
pub(crate) fn variance_point(frozen: &FrozenScores, g: usize, theta: f64) -> f64 {
    let fold_means: Vec<f64> = frozen
        .fold_members
        .iter()
        .enumerate()
        .map(|(k, members)| {
            let fd = frozen.f_d[g][k];
            kahan::mean_by(members, |i| {
                let psi = frozen.summands[g][i] - theta;
                let correction = theta / fd * (frozen.kh[g][i] - fd);
                (psi - correction) * (psi - correction)
            })
        })
        .collect();
    kahan::mean(&fold_means)
}

fn n_effective(frozen: &FrozenScores, g: usize, bandwidth: f64) -> f64 {
    let mut sum = KahanSum::new();
    for &w in &frozen.kh[g] {
        sum.add(w);
    }
    sum.total() * bandwidth
}

fn curve_from_frozen(
    frozen: &FrozenScores,
    grid: &DoseGrid,
    kspec: &KernelSpec,
    folds: FoldAssignment,
    design: Design,
    seed: Option<u64>,
) -> Result<AttCurveEstimate> {
    let n = folds.n();
    let estimates: Vec<AttPointEstimate> = (0..grid.len())
        .into_par_iter()
        .map(|g| -> Result<AttPointEstimate> {
            let att_hat = curve_point(frozen, g);
            let variance = variance_point(frozen, g, att_hat);
            let se = (variance / n as f64).sqrt();
            let point = AttPointEstimate {
                dose: grid.points()[g],
                att_hat,
                se,
                n_effective: n_effective(frozen, g, kspec.bandwidth),
            };
            if !(point.att_hat.is_finite() && point.se.is_finite()) {
                return Err(Error::Numeric(format!(
                    "estimate at dose {} is not finite (att_hat={}, se={})",
                    point.dose, point.att_hat, point.se
                )));
            }
            Ok(point)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AttCurveEstimate {
        grid: grid.clone(),
        estimates,
        bandwidth: kspec.bandwidth,
        folds: Some(folds),
        design,
        seed,
    })
}

fn estimate_att<D: ScoreData>(
    data: &D,
    grid: &DoseGrid,
    k: usize,
    learners: &LearnerSpec,
    kspec: &KernelSpec,
    seed: u64,
) -> Result<AttCurveEstimate> {
    Ok(estimate_att_keeping_nuisances(data, grid, k, learners, kspec, seed)?.0)
}

/// Cross-fitted estimate plus the per-fold nuisance fits it used, for callers
/// that go on to bootstrap from the same frozen fit (the uniform band).
pub fn estimate_att_keeping_nuisances<D: ScoreData>(
    data: &D,
    grid: &DoseGrid,
    k: usize,
    learners: &LearnerSpec,
    kspec: &KernelSpec,
    seed: u64,
) -> Result<(AttCurveEstimate, Vec<FoldNuisances>)> {
    learners.validate()?;
    let folds = assign_folds(data.n_rows(), k, seed)?;
    let nuisances = fit_all_folds(data, grid, &folds, kspec, learners, seed)?;
    let frozen = freeze_scores(data, grid, &folds, &nuisances, kspec)?;
    let curve = curve_from_frozen(&frozen, grid, kspec, folds, data.design_kind(), Some(seed))?;
    Ok((curve, nuisances))
}

pub(crate) fn fit_all_folds<D: ScoreData>(
    data: &D,
    grid: &DoseGrid,
    folds: &FoldAssignment,
    kspec: &KernelSpec,
    learners: &LearnerSpec,
    seed: u64,
) -> Result<Vec<FoldNuisances>> {
    (0..folds.k())
        .map(|fold| data.fit_fold(&folds.aux_members(fold), grid, kspec, learners, seed, fold))
        .collect()
}

/// Cross-fitted ATT(d) over the grid for a two-period panel.
pub fn estimate_att_panel(
    data: &PanelDataset,
    grid: &DoseGrid,
    k: usize,
    learners: &LearnerSpec,
    kspec: &KernelSpec,
    seed: u64,
) -> Result<AttCurveEstimate> {
    estimate_att(data, grid, k, learners, kspec, seed)
}

/// Cross-fitted ATT(d) over the grid for repeated cross-sections.
pub fn estimate_att_rcs(
    data: &RcsDataset,
    grid: &DoseGrid,
    k: usize,
    learners: &LearnerSpec,
    kspec: &KernelSpec,
    seed: u64,
) -> Result<AttCurveEstimate> {
    estimate_att(data, grid, k, learners, kspec, seed)
}

/// Estimate with externally supplied folds and nuisances (oracle injection;
/// also the refit-free path behind the bootstrap).
pub fn estimate_att_with<D: ScoreData>(
    data: &D,
    grid: &DoseGrid,
    folds: &FoldAssignment,
    nuisances: &[FoldNuisances],
    kspec: &KernelSpec,
) -> Result<AttCurveEstimate> {
    let frozen = freeze_scores(data, grid, folds, nuisances, kspec)?;
    curve_from_frozen(&frozen, grid, kspec, folds.clone(), data.design_kind(), None)
}

/// Cross-fitted variance σ̂²_N(d) at every grid point, recomputed from the
/// fitted nuisances. `curve` must come from the same folds and nuisances.
pub fn variance_panel(
    data: &PanelDataset,
    grid: &DoseGrid,
    curve: &AttCurveEstimate,
    nuisances: &[FoldNuisances],
    kspec: &KernelSpec,
) -> Result<Vec<f64>> {
    variance_any(data, grid, curve, nuisances, kspec)
}

/// Repeated-cross-section counterpart of [`variance_panel`].
pub fn variance_rcs(
    data: &RcsDataset,
    grid: &DoseGrid,
    curve: &AttCurveEstimate,
    nuisances: &[FoldNuisances],
    kspec: &KernelSpec,
) -> Result<Vec<f64>> {
    variance_any(data, grid, curve, nuisances, kspec)
}

fn variance_any<D: ScoreData>(
    data: &D,
    grid: &DoseGrid,
    curve: &AttCurveEstimate,
    nuisances: &[FoldNuisances],
    kspec: &KernelSpec,
) -> Result<Vec<f64>> {
    let folds = curve.folds.as_ref().ok_or_else(|| {
        Error::Data("variance needs a cross-fitted curve with a fold assignment".into())
    })?;
    let frozen = freeze_scores(data, grid, folds, nuisances, kspec)?;
    Ok((0..grid.len())
        .map(|g| variance_point(&frozen, g, curve.estimates[g].att_hat))
        .collect())
}

/// One multiplier-bootstrap replicate of the curve: scores are recomputed
/// from the frozen nuisances (never refit) and averaged with weights ξ.
pub fn bootstrap_replicate<D: ScoreData>(
    data: &D,
    grid: &DoseGrid,
    folds: &FoldAssignment,
    nuisances: &[FoldNuisances],
    kspec: &KernelSpec,
    xi: &[f64],
) -> Result<Vec<f64>> {
    if xi.len() != data.n_rows() {
        return Err(Error::Data(format!(
            "{} multiplier weights supplied for {} rows",
            xi.len(),
            data.n_rows()
        )));
    }
    let frozen = freeze_scores(data, grid, folds, nuisances, kspec)?;
    Ok((0..grid.len())
        .map(|g| replicate_point(&frozen, g, xi))
        .collect())
}

/// Naive plug-in estimate of ATT(d) on a panel: a kernel-weighted outcome
/// mean at d minus the plug-in adjustment expectation, with nuisances fit on
/// the full sample and no orthogonalization or cross-fitting. Its first-order
/// bias is what the orthogonal estimator removes; `se` is reported as zero.
pub fn naive_plugin_att(
    data: &PanelDataset,
    grid: &DoseGrid,
    learners: &LearnerSpec,
    kspec: &KernelSpec,
    seed: u64,
) -> Result<AttCurveEstimate> {
    learners.validate()?;
    let x = data.covariates();
    let dose = data.dose();
    let g_hat = fit_control_propensity(
        x,
        dose,
        learners,
        DEFAULT_CLIP_KAPPA,
        derive_seed(seed, &[Stream::Propensity as u64, 0]),
    )?;
    let f_h_hat = fit_smoothed_conditional_density(
        x,
        dose,
        grid,
        kspec,
        learners,
        DEFAULT_DENSITY_FLOOR,
        derive_seed(seed, &[Stream::Density as u64, 0]),
    )?;
    let delta_y = data.delta_y();
    let n = data.n();
    let rows: Vec<usize> = (0..n).collect();
    let estimates = grid
        .points()
        .iter()
        .enumerate()
        .map(|(g, &d)| -> Result<AttPointEstimate> {
            let f_d = kde_density(kspec, dose, d);
            if !(f_d > 0.0) {
                return Err(Error::Numeric(format!(
                    "dose density vanishes at grid point {d}; widen the bandwidth or trim the grid"
                )));
            }
            // Kernel-weighted outcome mean at d, normalized through the same
            // KDE so that it equals the usual locally weighted average.
            let outcome_term = kahan::mean_by(&rows, |i| {
                kspec.scaled_kernel(dose[i] - d) * delta_y[i]
            }) / f_d;
            let adjustment_term = kahan::mean_by(&rows, |i| {
                if dose[i] == 0.0 {
                    let fh = f_h_hat[g].predict(data.x_row(i));
                    fh * delta_y[i] / (f_d * g_hat.predict(data.x_row(i)))
                } else {
                    0.0
                }
            });
            let att_hat = outcome_term - adjustment_term;
            if !att_hat.is_finite() {
                return Err(Error::Numeric(format!(
                    "naive estimate at dose {d} is not finite"
                )));
            }
            let mut weight_sum = KahanSum::new();
            for &di in dose {
                weight_sum.add(kspec.scaled_kernel(di - d));
            }
            Ok(AttPointEstimate {
                dose: d,
                att_hat,
                se: 0.0,
                n_effective: weight_sum.total() * kspec.bandwidth,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AttCurveEstimate {
        grid: grid.clone(),
        estimates,
        bandwidth: kspec.bandwidth,
        folds: None,
        design: Design::Panel,
        seed: Some(seed),
    })
}

#[derive(Serialize)]
struct CurveMetadata<'a> {
    design: Design,
    bandwidth: f64,
    k_folds: Option<usize>,
    seed: Option<u64>,
    n_rows: Option<usize>,
    alpha: f64,
    estimates: Vec<CsvRow<'a>>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    dose: f64,
    att_hat: f64,
    se: f64,
    ci_lo: f64,
    ci_hi: f64,
    n_effective: f64,
    #[serde(skip)]
    _marker: std::marker::PhantomData<&'a ()>,
}

fn csv_rows(curve: &AttCurveEstimate, alpha: f64) -> Result<Vec<CsvRow<'static>>> {
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    Ok(curve
        .estimates
        .iter()
        .map(|e| CsvRow {
            dose: e.dose,
            att_hat: e.att_hat,
            se: e.se,
            ci_lo: e.att_hat - z * e.se,
            ci_hi: e.att_hat + z * e.se,
            n_effective: e.n_effective,
            _marker: std::marker::PhantomData,
        })
        .collect())
}

impl AttCurveEstimate {
    /// Write the curve as CSV with pointwise normal confidence intervals at
    /// level 1−α.
    pub fn write_csv(&self, path: &Path, alpha: f64) -> Result<()> {
        let rows = csv_rows(self, alpha)?;
        let file = std::fs::File::create(path).map_err(|source| Error::IoWrite {
            path: path.display().to_string(),
            source,
        })?;
        let mut w = csv::Writer::from_writer(file);
        for row in rows {
            w.serialize(row)
                .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))?;
        }
        w.flush().map_err(|source| Error::IoWrite {
            path: path.display().to_string(),
            source,
        })?;
        Ok(())
    }

    /// Write the curve plus fit metadata as pretty-printed JSON.
    pub fn write_json(&self, path: &Path, alpha: f64) -> Result<()> {
        let meta = CurveMetadata {
            design: self.design,
            bandwidth: self.bandwidth,
            k_folds: self.folds.as_ref().map(|f| f.k()),
            seed: self.seed,
            n_rows: self.folds.as_ref().map(|f| f.n()),
            alpha,
            estimates: csv_rows(self, alpha)?,
        };
        let json = serde_json::to_string_pretty(&meta)
            .map_err(|e| Error::Data(format!("cannot serialize curve: {e}")))?;
        std::fs::write(path, json + "\n").map_err(|source| Error::IoWrite {
            path: path.display().to_string(),
            source,
        })
    }
}
