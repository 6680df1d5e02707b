//! The benchmark data-generating process: high-dimensional confounding with
//! a known quadratic effect curve, so every estimator run can be scored
//! against the truth.
//!
//! Per unit: covariates X ~ N(0, Σ) with unit variances and constant
//! correlation ρ; control status Bernoulli with P(D=0|X) = 1/(1+exp(−X'γ));
//! treated doses D = |X'α + V| · E with V ~ N(0,1) and E a standard
//! exponential draw (so |X'α + V| is the conditional mean dose); untreated
//! outcomes Y_pre = ε₁ and Y_post(0) = Y_pre + X'β + 1 + ε₂; treated
//! post-period outcomes subtract 0.5·D² and add ε₃. The implied effect is
//! ATT(d) = −0.5·d² at every dose.
//!
//! Coefficients decay so that only a few covariates matter: γ_j = 0.5·j⁻²,
//! α_j = 0.3·j⁻², and β_j = 0.5/j for the first six coordinates, zero after.

use crate::dataset::{PanelDataset, RcsDataset};
use crate::rng::{derive_rng, Stream};
use crate::{Error, Result};
use nalgebra::{Cholesky, DMatrix};
use ndarray::Array2;
use rand::RngExt;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Conditional dose means below this are redrawn to keep doses finite.
const MIN_DOSE_SCALE: f64 = 1e-8;

/// Parameters of the benchmark process. The coefficient rules and the effect
/// curve are fixed; dimension, correlation, and the period-sampling rate are
/// configurable.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DgpSpec {
    /// Covariate dimension.
    pub p: usize,
    /// Common off-diagonal correlation of the covariates.
    pub rho: f64,
    /// P(T=1) when pooling into repeated cross-sections.
    pub lambda_t: f64,
}

impl Default for DgpSpec {
    fn default() -> Self {
        Self {
            p: 100,
            rho: 0.1,
            lambda_t: 0.5,
        }
    }
}

impl DgpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::Config("covariate dimension must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::Config(format!(
                "covariate correlation must lie in [0, 1), got {}",
                self.rho
            )));
        }
        if !(self.lambda_t > 0.0 && self.lambda_t < 1.0) {
            return Err(Error::Config(format!(
                "period probability must lie strictly inside (0, 1), got {}",
                self.lambda_t
            )));
        }
        Ok(())
    }

    /// Control-propensity coefficients γ_j = 0.5·j⁻² (j starting at 1).
    pub fn gamma(&self) -> Vec<f64> {
        (1..=self.p).map(|j| 0.5 / (j * j) as f64).collect()
    }

    /// Dose-scale coefficients α_j = 0.3·j⁻².
    pub fn alpha(&self) -> Vec<f64> {
        (1..=self.p).map(|j| 0.3 / (j * j) as f64).collect()
    }

    /// Outcome-drift coefficients β_j = 0.5/j for j ≤ 6, zero beyond.
    pub fn beta(&self) -> Vec<f64> {
        (1..=self.p)
            .map(|j| if j <= 6 { 0.5 / j as f64 } else { 0.0 })
            .collect()
    }

    /// The true effect curve ATT(d) = −0.5·d².
    pub fn true_att(&self, d: f64) -> f64 {
        -0.5 * d * d
    }
}

/// Lower Cholesky factor of the equicorrelation covariance matrix.
fn covariance_factor(spec: &DgpSpec) -> Result<DMatrix<f64>> {
    let p = spec.p;
    let sigma = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { spec.rho });
    Cholesky::new(sigma)
        .map(|c| c.l())
        .ok_or_else(|| Error::Numeric("covariance matrix is not positive definite".into()))
}

struct UnitDraw {
    x: Vec<f64>,
    dose: f64,
    y_pre: f64,
    y_post: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

fn draw_unit(
    spec: &DgpSpec,
    chol: &DMatrix<f64>,
    gamma: &[f64],
    alpha: &[f64],
    beta: &[f64],
    seed: u64,
    unit: usize,
) -> UnitDraw {
    let mut rng = derive_rng(seed, &[Stream::Dgp as u64, unit as u64]);
    let p = spec.p;
    let z: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut x = vec![0.0; p];
    // Column-major walk over the lower-triangular factor: x = L·z.
    for (j, &zj) in z.iter().enumerate() {
        let col = chol.column(j);
        for i in j..p {
            x[i] += col[i] * zj;
        }
    }
    let control = rng.random::<f64>() < sigmoid(dot(&x, gamma));
    let dose = if control {
        0.0
    } else {
        let x_alpha = dot(&x, alpha);
        let scale = loop {
            let v: f64 = StandardNormal.sample(&mut rng);
            let s = (x_alpha + v).abs();
            if s >= MIN_DOSE_SCALE {
                break s;
            }
        };
        let e: f64 = Exp1.sample(&mut rng);
        scale * e
    };
    let e1: f64 = StandardNormal.sample(&mut rng);
    let e2: f64 = StandardNormal.sample(&mut rng);
    let y_pre = e1;
    let y_post_untreated = y_pre + dot(&x, beta) + 1.0 + e2;
    let y_post = if dose > 0.0 {
        let e3: f64 = StandardNormal.sample(&mut rng);
        y_post_untreated - 0.5 * dose * dose + e3
    } else {
        y_post_untreated
    };
    UnitDraw {
        x,
        dose,
        y_pre,
        y_post,
    }
}

fn sigmoid(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

fn draw_units(spec: &DgpSpec, n: usize, seed: u64) -> Result<Vec<UnitDraw>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Config("cannot generate an empty dataset".into()));
    }
    let chol = covariance_factor(spec)?;
    let (gamma, alpha, beta) = (spec.gamma(), spec.alpha(), spec.beta());
    Ok((0..n)
        .into_par_iter()
        .map(|i| draw_unit(spec, &chol, &gamma, &alpha, &beta, seed, i))
        .collect())
}

fn covariate_matrix(units: &[UnitDraw], p: usize) -> Array2<f64> {
    Array2::from_shape_fn((units.len(), p), |(i, j)| units[i].x[j])
}

/// Draw a two-period panel of n units.
pub fn generate_panel(spec: &DgpSpec, n: usize, seed: u64) -> Result<PanelDataset> {
    let units = draw_units(spec, n, seed)?;
    let x = covariate_matrix(&units, spec.p);
    PanelDataset::new(
        units.iter().map(|u| u.y_pre).collect(),
        units.iter().map(|u| u.y_post).collect(),
        units.iter().map(|u| u.dose).collect(),
        x,
    )
}

/// Draw n units and observe each in a single random period: T ~ Bern(λ_t),
/// Y = T·Y_post + (1−T)·Y_pre. Shares the per-unit draws with
/// [`generate_panel`], so a T=0 row's outcome equals the panel's Y_pre for
/// the same seed and row.
pub fn generate_rcs(spec: &DgpSpec, n: usize, seed: u64) -> Result<RcsDataset> {
    let units = draw_units(spec, n, seed)?;
    let x = covariate_matrix(&units, spec.p);
    let period: Vec<u8> = (0..n)
        .map(|i| {
            let mut rng = derive_rng(seed, &[Stream::Period as u64, i as u64]);
            u8::from(rng.random::<f64>() < spec.lambda_t)
        })
        .collect();
    let y = units
        .iter()
        .zip(&period)
        .map(|(u, &t)| if t == 1 { u.y_post } else { u.y_pre })
        .collect();
    RcsDataset::new(
        y,
        period,
        units.iter().map(|u| u.dose).collect(),
        x,
    )
}
