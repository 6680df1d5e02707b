//! Nuisance functions and the learners that fit them.
//!
//! The orthogonal scores need four fitted objects per fold, each trained on
//! the fold's complement (the auxiliary sample):
//!
//! * `g_hat` — control propensity P(D=0 | X), clipped away from 0 and 1;
//! * `f_h_hat` — the smoothed conditional dose density E[K_h(D−d) | X], one
//!   regression per grid point, floored at a small positive constant;
//! * `drift_hat` — the untreated outcome drift: E[ΔY | X, D=0] for panels, or
//!   the period-reweighted E[(T−λ)Y/(λ(1−λ)) | X, D=0] for repeated
//!   cross-sections;
//! * `f_d_hat` — the marginal dose density at each grid point, a kernel
//!   density estimate over the auxiliary doses.
//!
//! Any learner satisfying the [`FittedRegressor`] contract can fill the
//! regression roles; built in are a random forest (the workhorse), ridge
//! regression, and logistic regression for the propensity. Closed-form
//! functions can be injected through [`FittedRegressor::from_fn`], which is
//! how the oracle tests bypass the learners entirely.

mod forest;
mod linear;

use crate::dataset::{DoseGrid, PanelDataset, RcsDataset};
use crate::kernel::{kde_density, KernelSpec};
use crate::rng::{derive_seed, Stream};
use crate::{Error, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Default clip bound κ for the control propensity: ĝ ∈ [κ, 1−κ].
pub const DEFAULT_CLIP_KAPPA: f64 = 0.01;

/// Default lower floor for the smoothed conditional density predictions.
pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-3;

/// Which learner fills the regression roles.
///
/// `Logistic` uses logistic regression for the (binary) propensity and ridge
/// for the continuous targets; a logistic link makes no sense for those.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    RandomForest,
    Ridge,
    Logistic,
}

/// Learner choice plus hyperparameters. Forest fields are ignored by the
/// linear learners and vice versa.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features tried per split; `None` means all p features (the usual
    /// regression-forest default). Set ⌈√p⌉-style values explicitly for
    /// faster, more decorrelated trees.
    pub mtry: Option<usize>,
    pub ridge_penalty: f64,
}

impl Default for LearnerSpec {
    fn default() -> Self {
        Self {
            kind: LearnerKind::RandomForest,
            n_trees: 200,
            max_depth: 20,
            min_leaf: 5,
            mtry: None,
            ridge_penalty: 1.0,
        }
    }
}

impl LearnerSpec {
    pub fn random_forest() -> Self {
        Self::default()
    }

    pub fn ridge() -> Self {
        Self {
            kind: LearnerKind::Ridge,
            ..Self::default()
        }
    }

    pub fn logistic() -> Self {
        Self {
            kind: LearnerKind::Logistic,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("learner needs at least 1 tree".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        if self.min_leaf == 0 {
            return Err(Error::Config("min_leaf must be at least 1".into()));
        }
        if self.mtry == Some(0) {
            return Err(Error::Config("mtry must be at least 1".into()));
        }
        if !(self.ridge_penalty > 0.0 && self.ridge_penalty.is_finite()) {
            return Err(Error::Config(format!(
                "ridge_penalty must be a positive finite number, got {}",
                self.ridge_penalty
            )));
        }
        Ok(())
    }

    /// Features tried per split for a p-column design.
    pub fn effective_mtry(&self, p: usize) -> usize {
        self.mtry.unwrap_or(p).clamp(1, p.max(1))
    }
}

/// Arbitrary prediction rule, used for closed-form (oracle) injections.
type DynPredict = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Inner {
    Forest(forest::Forest),
    Linear(linear::LinearModel),
    Logistic(linear::LogisticModel),
    Func(DynPredict),
    Clipped {
        inner: Box<FittedRegressor>,
        lo: f64,
        hi: f64,
    },
    Floored {
        inner: Box<FittedRegressor>,
        floor: f64,
    },
}

/// A fitted prediction function over covariate rows.
///
/// Predictions are deterministic given the training data and seed, whatever
/// the thread count. The `from_fn` constructor injects an arbitrary function,
/// which tests and probes use to supply exact nuisances without any learner.
#[derive(Clone)]
pub struct FittedRegressor {
    inner: Inner,
}

impl std::fmt::Debug for FittedRegressor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match &self.inner {
            Inner::Forest(_) => "Forest",
            Inner::Linear(_) => "Linear",
            Inner::Logistic(_) => "Logistic",
            Inner::Func(_) => "Func",
            Inner::Clipped { .. } => "Clipped",
            Inner::Floored { .. } => "Floored",
        };
        write!(f, "FittedRegressor({name})")
    }
}

impl FittedRegressor {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match &self.inner {
            Inner::Forest(m) => m.predict(x),
            Inner::Linear(m) => m.predict(x),
            Inner::Logistic(m) => m.predict(x),
            Inner::Func(f) => f(x),
            Inner::Clipped { inner, lo, hi } => inner.predict(x).clamp(*lo, *hi),
            Inner::Floored { inner, floor } => inner.predict(x).max(*floor),
        }
    }

    /// Wrap an arbitrary function as a regressor (oracle injection).
    pub fn from_fn(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            inner: Inner::Func(Arc::new(f)),
        }
    }

    pub fn constant(value: f64) -> Self {
        Self::from_fn(move |_| value)
    }

    /// Restrict predictions to [lo, hi]. Idempotent for equal bounds.
    pub fn clipped(self, lo: f64, hi: f64) -> Self {
        Self {
            inner: Inner::Clipped {
                inner: Box::new(self),
                lo,
                hi,
            },
        }
    }

    /// Restrict predictions to [floor, ∞). Idempotent for an equal floor.
    pub fn floored(self, floor: f64) -> Self {
        Self {
            inner: Inner::Floored {
                inner: Box::new(self),
                floor,
            },
        }
    }
}

fn check_training(features: &Array2<f64>, targets: &[f64], min_rows: usize) -> Result<()> {
    if features.nrows() == 0 {
        return Err(Error::Data("empty training set".into()));
    }
    if features.nrows() != targets.len() {
        return Err(Error::Data(format!(
            "features have {} rows, targets {}",
            features.nrows(),
            targets.len()
        )));
    }
    if features.nrows() < min_rows {
        return Err(Error::Data(format!(
            "training set has {} rows, need at least {min_rows}",
            features.nrows()
        )));
    }
    Ok(())
}

/// Fit a bootstrap ensemble of variance-reduction regression trees.
pub fn fit_regression_forest(
    features: &Array2<f64>,
    targets: &[f64],
    spec: &LearnerSpec,
    seed: u64,
) -> Result<FittedRegressor> {
    spec.validate()?;
    check_training(features, targets, spec.min_leaf)?;
    let design = forest::BinnedDesign::new(features);
    let model = forest::grow_forest(
        &design,
        targets,
        spec.n_trees,
        spec.max_depth,
        spec.min_leaf,
        spec.effective_mtry(features.ncols()),
        seed,
    );
    Ok(FittedRegressor {
        inner: Inner::Forest(model),
    })
}

/// Fit a continuous-target regression with the learner `spec` selects.
/// The `Logistic` kind falls back to ridge here; its link is propensity-only.
pub fn fit_regressor(
    features: &Array2<f64>,
    targets: &[f64],
    spec: &LearnerSpec,
    seed: u64,
) -> Result<FittedRegressor> {
    match spec.kind {
        LearnerKind::RandomForest => fit_regression_forest(features, targets, spec, seed),
        LearnerKind::Ridge | LearnerKind::Logistic => {
            spec.validate()?;
            check_training(features, targets, 1)?;
            let model = linear::fit_ridge(features, targets, spec.ridge_penalty)?;
            Ok(FittedRegressor {
                inner: Inner::Linear(model),
            })
        }
    }
}

/// Fit the control propensity P(D=0 | X) as a regression of the indicator
/// 1{D=0} on X, with predictions clipped to [κ, 1−κ].
pub fn fit_control_propensity(
    features: &Array2<f64>,
    dose: &[f64],
    spec: &LearnerSpec,
    kappa: f64,
    seed: u64,
) -> Result<FittedRegressor> {
    if !(0.0..0.5).contains(&kappa) || kappa == 0.0 {
        return Err(Error::Config(format!(
            "propensity clip must lie in (0, 0.5), got {kappa}"
        )));
    }
    let targets: Vec<f64> = dose.iter().map(|&d| f64::from(d == 0.0)).collect();
    let n_controls = targets.iter().filter(|&&t| t == 1.0).count();
    if n_controls == 0 || n_controls == targets.len() {
        return Err(Error::Data(
            "propensity fit needs both control and treated rows in the auxiliary sample".into(),
        ));
    }
    let model = match spec.kind {
        LearnerKind::RandomForest => fit_regression_forest(features, &targets, spec, seed)?,
        LearnerKind::Ridge => fit_regressor(features, &targets, spec, seed)?,
        LearnerKind::Logistic => {
            spec.validate()?;
            check_training(features, &targets, 1)?;
            FittedRegressor {
                inner: Inner::Logistic(linear::fit_logistic(
                    features,
                    &targets,
                    spec.ridge_penalty,
                )?),
            }
        }
    };
    Ok(model.clipped(kappa, 1.0 - kappa))
}

/// Fit E[K_h(D−d) | X] for each grid point d: one regression per point, with
/// the constructed target K_h(D_i − d) over every auxiliary row (controls
/// included, since the expectation is over the whole mixture including the
/// point mass at zero). Predictions are floored at `floor`.
pub fn fit_smoothed_conditional_density(
    features: &Array2<f64>,
    dose: &[f64],
    grid: &DoseGrid,
    kspec: &KernelSpec,
    spec: &LearnerSpec,
    floor: f64,
    seed: u64,
) -> Result<Vec<FittedRegressor>> {
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::Config(format!(
            "density floor must be a positive finite number, got {floor}"
        )));
    }
    spec.validate()?;
    let targets_at = |d: f64| -> Vec<f64> {
        dose.iter().map(|&di| kspec.scaled_kernel(di - d)).collect()
    };
    let mut fitted = Vec::with_capacity(grid.len());
    match spec.kind {
        LearnerKind::RandomForest => {
            check_training(features, dose, spec.min_leaf)?;
            let design = forest::BinnedDesign::new(features);
            for (g, &d) in grid.points().iter().enumerate() {
                let model = forest::grow_forest(
                    &design,
                    &targets_at(d),
                    spec.n_trees,
                    spec.max_depth,
                    spec.min_leaf,
                    spec.effective_mtry(features.ncols()),
                    derive_seed(seed, &[g as u64]),
                );
                fitted.push(FittedRegressor {
                    inner: Inner::Forest(model),
                });
            }
        }
        LearnerKind::Ridge | LearnerKind::Logistic => {
            check_training(features, dose, 1)?;
            let solver = linear::RidgeSolver::new(features, spec.ridge_penalty)?;
            for &d in grid.points() {
                fitted.push(FittedRegressor {
                    inner: Inner::Linear(solver.solve(&targets_at(d))?),
                });
            }
        }
    }
    Ok(fitted.into_iter().map(|m| m.floored(floor)).collect())
}

fn control_rows(features: &Array2<f64>, dose: &[f64]) -> (Array2<f64>, Vec<usize>) {
    let idx: Vec<usize> = (0..dose.len()).filter(|&i| dose[i] == 0.0).collect();
    let x = Array2::from_shape_fn((idx.len(), features.ncols()), |(r, c)| {
        features[(idx[r], c)]
    });
    (x, idx)
}

/// Fit the untreated drift E[ΔY | X, D=0]: a regression of the outcome change
/// on covariates over control rows only.
pub fn fit_control_drift_panel(
    features: &Array2<f64>,
    dose: &[f64],
    delta_y: &[f64],
    spec: &LearnerSpec,
    seed: u64,
) -> Result<FittedRegressor> {
    let (x_ctrl, idx) = control_rows(features, dose);
    if idx.len() < spec.min_leaf {
        return Err(Error::Data(format!(
            "drift fit needs at least {} control rows, found {}",
            spec.min_leaf,
            idx.len()
        )));
    }
    let y_ctrl: Vec<f64> = idx.iter().map(|&i| delta_y[i]).collect();
    fit_regressor(&x_ctrl, &y_ctrl, spec, seed)
}

/// Fit the repeated-cross-section drift E[(T−λ)Y/(λ(1−λ)) | X, D=0] over
/// control rows. The constructed target telescopes to the per-period outcome
/// change in expectation.
pub fn fit_control_drift_rcs(
    features: &Array2<f64>,
    dose: &[f64],
    period: &[u8],
    y: &[f64],
    lambda_hat: f64,
    spec: &LearnerSpec,
    seed: u64,
) -> Result<FittedRegressor> {
    if !(0.0 < lambda_hat && lambda_hat < 1.0) {
        return Err(Error::Data(format!(
            "lambda_hat must lie strictly inside (0, 1), got {lambda_hat}"
        )));
    }
    let (x_ctrl, idx) = control_rows(features, dose);
    if idx.len() < spec.min_leaf {
        return Err(Error::Data(format!(
            "drift fit needs at least {} control rows, found {}",
            spec.min_leaf,
            idx.len()
        )));
    }
    let scale = lambda_hat * (1.0 - lambda_hat);
    let targets: Vec<f64> = idx
        .iter()
        .map(|&i| (f64::from(period[i]) - lambda_hat) * y[i] / scale)
        .collect();
    fit_regressor(&x_ctrl, &targets, spec, seed)
}

/// Share of post-period rows, λ̂ = mean of the period indicator.
pub fn estimate_lambda(period: &[u8]) -> Result<f64> {
    if period.is_empty() {
        return Err(Error::Data("cannot estimate lambda from no rows".into()));
    }
    if period.iter().all(|&t| t == 1) {
        return Err(Error::SinglePeriod(1));
    }
    if period.iter().all(|&t| t == 0) {
        return Err(Error::SinglePeriod(0));
    }
    Ok(crate::kahan::mean_by(
        &(0..period.len()).collect::<Vec<_>>(),
        |i| f64::from(period[i]),
    ))
}

/// Everything the scores need from one fold's auxiliary fit. Construction
/// bakes the clip and floor into the stored functions, so the accessors
/// always satisfy κ ≤ g ≤ 1−κ and f_h ≥ floor.
pub struct FoldNuisances {
    g_hat: FittedRegressor,
    f_h_hat: Vec<FittedRegressor>,
    drift_hat: FittedRegressor,
    f_d_hat: Vec<f64>,
    lambda_hat: Option<f64>,
    clip_kappa: f64,
    density_floor: f64,
}

impl std::fmt::Debug for FoldNuisances {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FoldNuisances")
            .field("n_grid", &self.f_d_hat.len())
            .field("f_d_hat", &self.f_d_hat)
            .field("lambda_hat", &self.lambda_hat)
            .field("clip_kappa", &self.clip_kappa)
            .finish()
    }
}

impl FoldNuisances {
    /// Assemble fold nuisances from fitted (or injected) parts.
    ///
    /// `f_h_hat` and `f_d_hat` must have one entry per grid point; every
    /// marginal density value must be strictly positive.
    pub fn new(
        g_hat: FittedRegressor,
        f_h_hat: Vec<FittedRegressor>,
        drift_hat: FittedRegressor,
        f_d_hat: Vec<f64>,
        lambda_hat: Option<f64>,
        clip_kappa: f64,
        density_floor: f64,
    ) -> Result<Self> {
        if !(clip_kappa > 0.0 && clip_kappa < 0.5) {
            return Err(Error::Config(format!(
                "clip_kappa must lie in (0, 0.5), got {clip_kappa}"
            )));
        }
        if !(density_floor > 0.0 && density_floor.is_finite()) {
            return Err(Error::Config(format!(
                "density_floor must be a positive finite number, got {density_floor}"
            )));
        }
        if f_h_hat.len() != f_d_hat.len() || f_d_hat.is_empty() {
            return Err(Error::Data(format!(
                "per-grid nuisances disagree: {} conditional densities, {} marginal values",
                f_h_hat.len(),
                f_d_hat.len()
            )));
        }
        for (g, &v) in f_d_hat.iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Numeric(format!(
                    "marginal dose density is {v} at grid index {g}; the grid point sits \
                     outside the effective dose support (widen the bandwidth or trim the grid)"
                )));
            }
        }
        if let Some(l) = lambda_hat {
            if !(0.0 < l && l < 1.0) {
                return Err(Error::Data(format!(
                    "lambda_hat must lie strictly inside (0, 1), got {l}"
                )));
            }
        }
        Ok(Self {
            g_hat: g_hat.clipped(clip_kappa, 1.0 - clip_kappa),
            f_h_hat: f_h_hat
                .into_iter()
                .map(|m| m.floored(density_floor))
                .collect(),
            drift_hat,
            f_d_hat,
            lambda_hat,
            clip_kappa,
            density_floor,
        })
    }

    pub fn n_grid(&self) -> usize {
        self.f_d_hat.len()
    }

    /// Clipped control propensity ĝ(x) ∈ [κ, 1−κ].
    pub fn g(&self, x: &[f64]) -> f64 {
        self.g_hat.predict(x)
    }

    /// Floored smoothed conditional density f̂_h(d_g | x).
    pub fn f_h(&self, grid_idx: usize, x: &[f64]) -> f64 {
        self.f_h_hat[grid_idx].predict(x)
    }

    /// Untreated drift prediction.
    pub fn drift(&self, x: &[f64]) -> f64 {
        self.drift_hat.predict(x)
    }

    /// Marginal dose density f̂_D(d_g) on the auxiliary sample.
    pub fn f_d(&self, grid_idx: usize) -> f64 {
        self.f_d_hat[grid_idx]
    }

    pub fn lambda_hat(&self) -> Option<f64> {
        self.lambda_hat
    }

    pub fn clip_kappa(&self) -> f64 {
        self.clip_kappa
    }

    pub fn density_floor(&self) -> f64 {
        self.density_floor
    }
}

fn subset_rows(features: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    Array2::from_shape_fn((idx.len(), features.ncols()), |(r, c)| {
        features[(idx[r], c)]
    })
}

/// Fit all panel nuisances for one fold on its auxiliary rows `aux_idx`.
/// Learner seeds are derived structurally from (master seed, role, fold), so
/// results do not depend on evaluation order.
pub fn fit_fold_nuisances_panel(
    data: &PanelDataset,
    aux_idx: &[usize],
    grid: &DoseGrid,
    kspec: &KernelSpec,
    spec: &LearnerSpec,
    master_seed: u64,
    fold: usize,
) -> Result<FoldNuisances> {
    let x_aux = subset_rows(data.covariates(), aux_idx);
    let dose_aux: Vec<f64> = aux_idx.iter().map(|&i| data.dose()[i]).collect();
    let delta_y = data.delta_y();
    let dy_aux: Vec<f64> = aux_idx.iter().map(|&i| delta_y[i]).collect();
    let k = fold as u64;
    let g_hat = fit_control_propensity(
        &x_aux,
        &dose_aux,
        spec,
        DEFAULT_CLIP_KAPPA,
        derive_seed(master_seed, &[Stream::Propensity as u64, k]),
    )?;
    let f_h_hat = fit_smoothed_conditional_density(
        &x_aux,
        &dose_aux,
        grid,
        kspec,
        spec,
        DEFAULT_DENSITY_FLOOR,
        derive_seed(master_seed, &[Stream::Density as u64, k]),
    )?;
    let drift_hat = fit_control_drift_panel(
        &x_aux,
        &dose_aux,
        &dy_aux,
        spec,
        derive_seed(master_seed, &[Stream::Drift as u64, k]),
    )?;
    let f_d_hat: Vec<f64> = grid
        .points()
        .iter()
        .map(|&d| kde_density(kspec, &dose_aux, d))
        .collect();
    FoldNuisances::new(
        g_hat,
        f_h_hat,
        drift_hat,
        f_d_hat,
        None,
        DEFAULT_CLIP_KAPPA,
        DEFAULT_DENSITY_FLOOR,
    )
}

/// Fit all repeated-cross-section nuisances for one fold.
pub fn fit_fold_nuisances_rcs(
    data: &RcsDataset,
    aux_idx: &[usize],
    grid: &DoseGrid,
    kspec: &KernelSpec,
    spec: &LearnerSpec,
    master_seed: u64,
    fold: usize,
) -> Result<FoldNuisances> {
    let x_aux = subset_rows(data.covariates(), aux_idx);
    let dose_aux: Vec<f64> = aux_idx.iter().map(|&i| data.dose()[i]).collect();
    let period_aux: Vec<u8> = aux_idx.iter().map(|&i| data.period()[i]).collect();
    let y_aux: Vec<f64> = aux_idx.iter().map(|&i| data.y()[i]).collect();
    let lambda_hat = estimate_lambda(&period_aux)?;
    let k = fold as u64;
    let g_hat = fit_control_propensity(
        &x_aux,
        &dose_aux,
        spec,
        DEFAULT_CLIP_KAPPA,
        derive_seed(master_seed, &[Stream::Propensity as u64, k]),
    )?;
    let f_h_hat = fit_smoothed_conditional_density(
        &x_aux,
        &dose_aux,
        grid,
        kspec,
        spec,
        DEFAULT_DENSITY_FLOOR,
        derive_seed(master_seed, &[Stream::Density as u64, k]),
    )?;
    let drift_hat = fit_control_drift_rcs(
        &x_aux,
        &dose_aux,
        &period_aux,
        &y_aux,
        lambda_hat,
        spec,
        derive_seed(master_seed, &[Stream::Drift as u64, k]),
    )?;
    let f_d_hat: Vec<f64> = grid
        .points()
        .iter()
        .map(|&d| kde_density(kspec, &dose_aux, d))
        .collect();
    FoldNuisances::new(
        g_hat,
        f_h_hat,
        drift_hat,
        f_d_hat,
        Some(lambda_hat),
        DEFAULT_CLIP_KAPPA,
        DEFAULT_DENSITY_FLOOR,
    )
}
