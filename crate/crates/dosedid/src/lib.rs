//! Difference-in-differences estimation of dose-response effects when the
//! treatment is a continuous intensity rather than an on/off switch.
//!
//! The target parameter is `ATT(d)`: the average effect of receiving dose `d`
//! (versus no treatment) among units that actually received dose `d`. Under
//! conditional parallel trends the parameter is identified from observed
//! outcome changes, and this crate implements a double/debiased machine
//! learning (DML) estimator for it:
//!
//! * conditioning on the continuous dose is smoothed with a kernel of
//!   bandwidth `h`, so the estimand is approached through `ATT_h(d)` with an
//!   `O(h^2)` smoothing bias;
//! * the influence of the nuisance functions (control propensity, smoothed
//!   conditional dose density, control outcome drift) is removed to first
//!   order by a Neyman-orthogonal score;
//! * nuisances are fit by cross-fitting: the sample is split into `K` folds,
//!   each fold is scored with nuisances trained on the other folds, and the
//!   fold averages are combined;
//! * standard errors come from a cross-fitted variance estimator, and uniform
//!   confidence bands over a dose grid come from a multiplier bootstrap that
//!   reweights the frozen scores with `N(1,1)` draws.
//!
//! Two sampling designs are supported: a balanced two-period panel (each unit
//! observed before and after) and repeated cross-sections (each unit observed
//! in one period, indicated by `T`).
//!
//! The crate also ships a simulation harness (a benchmark data-generating
//! process with a known effect curve, Monte Carlo summaries, and quadrature
//! probes that verify orthogonality and the `O(h^2)` bias rate empirically)
//! and a CLI exposing estimation, band construction, simulation, and the
//! probes as subcommands.
//!
//! # Example
//!
//! ```
//! use dosedid::dataset::{make_dose_grid, PanelDataset};
//! use dosedid::estimator::estimate_att_panel;
//! use dosedid::kernel::{rule_of_thumb_bandwidth, KernelFamily, KernelSpec};
//! use dosedid::nuisance::LearnerSpec;
//! use ndarray::Array2;
//! use rand::{RngExt, SeedableRng};
//!
//! // A small synthetic panel: half the rows are untreated controls.
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let n = 200;
//! let x = Array2::from_shape_fn((n, 2), |_| rng.random::<f64>() - 0.5);
//! let dose: Vec<f64> = (0..n)
//!     .map(|i| if i % 2 == 0 { 0.0 } else { 0.5 + rng.random::<f64>() })
//!     .collect();
//! let y_pre: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
//! let y_post: Vec<f64> = (0..n)
//!     .zip(&dose)
//!     .map(|(i, d)| y_pre[i] + x[[i, 0]] - 0.25 * d * d)
//!     .collect();
//! let data = PanelDataset::new(y_pre, y_post, dose, x)?;
//!
//! let grid = make_dose_grid(&data, 5, 0.1)?;
//! let h = rule_of_thumb_bandwidth(&data.positive_doses(), data.n())?;
//! let kspec = KernelSpec::new(KernelFamily::Gaussian, h)?;
//! let curve = estimate_att_panel(&data, &grid, 2, &LearnerSpec::ridge(), &kspec, 42)?;
//! assert_eq!(curve.estimates.len(), 5);
//! # Ok::<(), dosedid::Error>(())
//! ```

pub mod cli;
pub mod dataset;
pub mod estimator;
pub mod inference;
pub mod kahan;
pub mod kernel;
pub mod nuisance;
pub mod rng;
pub mod simulation;

mod error;

pub use error::{Error, Result};

// The user guide chapters double as doc-tests so the book's code snippets
// cannot drift out of sync with the library.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            #[allow(unused)]
            mod $name {}
        };
    }

    chapter!(introduction, "../book/src/introduction.md");
    chapter!(data_designs, "../book/src/data-designs.md");
    chapter!(kernel_smoothing, "../book/src/kernel-smoothing.md");
    chapter!(nuisance_learners, "../book/src/nuisance-learners.md");
    chapter!(cross_fitting, "../book/src/cross-fitting.md");
    chapter!(inference_chapter, "../book/src/inference.md");
    chapter!(simulation_harness, "../book/src/simulation-harness.md");
    chapter!(cli_guide, "../book/src/cli-guide.md");
}
