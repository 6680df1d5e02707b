//! Command-line front end: estimation on user CSVs, uniform confidence
//! bands, the Monte Carlo benchmark, and the analytic probes.
//!
//! Every run is described by a [`RunConfig`], assembled in three layers:
//! built-in defaults, then an optional `--config` JSON file, then individual
//! flags, each layer overriding the one below. The effective configuration is
//! written to `<out>/run_config.json`, so any run can be reproduced later
//! with `--config <out>/run_config.json` alone. Given a fixed seed, every
//! command produces byte-identical artifacts regardless of `--threads`.
//!
//! Exit codes: 0 on success (for `probe`, both diagnostics passing), 1 for a
//! failed probe verdict, 2 for configuration errors, 3 for data errors, and
//! 4 for numeric failures.

use crate::dataset::{
    load_panel_csv, load_rcs_csv, make_dose_grid, Design, DoseGrid, HasDoses, PanelSchema,
    RcsSchema,
};
use crate::estimator::{
    estimate_att_keeping_nuisances, AttCurveEstimate,
};
use crate::inference::{normal_quantile, uniform_band, UniformBand};
use crate::kernel::{rule_of_thumb_bandwidth, KernelFamily, KernelSpec};
use crate::nuisance::{LearnerKind, LearnerSpec};
use crate::simulation::probe::{
    bias_rate_probe, log_log_slope, orthogonality_passes, orthogonality_probe,
    DEFAULT_H_VALUES, DEFAULT_R_VALUES,
};
use crate::simulation::{run_monte_carlo, DgpSpec, McConfig};
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Bins of the replication histogram emitted by `simulate`.
const HISTOGRAM_BINS: usize = 30;
/// Tree and replication caps applied by `--fast`.
const FAST_TREES: usize = 100;
const FAST_REPS: usize = 100;

/// Full description of one run. Serializable so that a dumped config file
/// reproduces the run exactly; CLI flags override file values field by field.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Which subcommand dumped this file. Informational; the invoked
    /// subcommand always wins.
    pub command: Option<String>,
    pub design: Design,
    /// Input CSV for `estimate` and `band`.
    pub input: Option<PathBuf>,
    /// Inline column-name map for the input CSV (the parsed content of
    /// `--schema`), so a dumped config reproduces the run without the
    /// original schema file.
    pub schema: Option<serde_json::Value>,
    /// Evaluation grid size when `doses` is not given.
    pub grid_points: usize,
    /// Quantile trimmed off each end of the positive-dose range when
    /// building the grid.
    pub trim: f64,
    /// Explicit evaluation doses; overrides `grid_points`/`trim`.
    pub doses: Option<Vec<f64>>,
    pub k_folds: usize,
    pub learner: LearnerSpec,
    pub kernel: KernelFamily,
    /// Fixed bandwidth; `None` applies the rule of thumb.
    pub bandwidth: Option<f64>,
    pub alpha: f64,
    /// Bootstrap replicates for `band`.
    pub n_boot: usize,
    pub seed: u64,
    /// Output directory. Never serialized, so dumped configs are
    /// location-independent; set it per run with `--out`.
    #[serde(skip_serializing)]
    pub out: PathBuf,
    /// Cap trees and replications at desk scale (100 each).
    pub fast: bool,
    /// Sample size per replication for `simulate`.
    pub n: usize,
    /// Replication count for `simulate`.
    pub n_reps: usize,
    /// Dose at which `simulate` evaluates the estimator.
    pub target_dose: f64,
    /// Perturbation scales for the orthogonality probe.
    pub r_values: Vec<f64>,
    /// Bandwidths for the bias-rate probe.
    pub h_values: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            design: Design::Panel,
            input: None,
            schema: None,
            grid_points: 25,
            trim: 0.05,
            doses: None,
            k_folds: 5,
            learner: LearnerSpec::default(),
            kernel: KernelFamily::Gaussian,
            bandwidth: None,
            alpha: 0.05,
            n_boot: 1000,
            seed: 0,
            out: PathBuf::from("."),
            fast: false,
            n: 2000,
            n_reps: 200,
            target_dose: 0.9,
            r_values: DEFAULT_R_VALUES.to_vec(),
            h_values: DEFAULT_H_VALUES.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DesignArg {
    Panel,
    Rcs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KernelArg {
    Gaussian,
    Epanechnikov,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LearnerArg {
    #[value(alias = "rf")]
    RandomForest,
    Ridge,
    Logistic,
}

impl From<DesignArg> for Design {
    fn from(arg: DesignArg) -> Self {
        match arg {
            DesignArg::Panel => Design::Panel,
            DesignArg::Rcs => Design::Rcs,
        }
    }
}

impl From<KernelArg> for KernelFamily {
    fn from(arg: KernelArg) -> Self {
        match arg {
            KernelArg::Gaussian => KernelFamily::Gaussian,
            KernelArg::Epanechnikov => KernelFamily::Epanechnikov,
        }
    }
}

impl From<LearnerArg> for LearnerKind {
    fn from(arg: LearnerArg) -> Self {
        match arg {
            LearnerArg::RandomForest => LearnerKind::RandomForest,
            LearnerArg::Ridge => LearnerKind::Ridge,
            LearnerArg::Logistic => LearnerKind::Logistic,
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON config file; flags given alongside override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory for artifacts (created if missing).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads; the default uses every core. Artifacts do not depend
    /// on this.
    #[arg(long)]
    threads: Option<usize>,

    /// Master seed; fixes folds, learners, multipliers, and simulated data.
    #[arg(long)]
    seed: Option<u64>,

    /// Kernel family for smoothing.
    #[arg(long)]
    kernel: Option<KernelArg>,

    /// Significance level (confidence = 1 - alpha).
    #[arg(long)]
    alpha: Option<f64>,

    /// Desk-scale run: cap forest trees and simulation replications at 100.
    #[arg(long)]
    fast: bool,
}

/// Flags shared by the dataset-consuming subcommands (`estimate`, `band`).
#[derive(Debug, Args)]
struct DataArgs {
    /// Input CSV.
    #[arg(long)]
    input: Option<PathBuf>,

    /// Sampling design of the input.
    #[arg(long)]
    design: Option<DesignArg>,

    /// JSON file mapping column roles to CSV column names.
    #[arg(long)]
    schema: Option<PathBuf>,

    /// Number of evaluation doses (ignored when --doses is given).
    #[arg(long)]
    grid_points: Option<usize>,

    /// Quantile trimmed off each end of the positive-dose range.
    #[arg(long)]
    trim: Option<f64>,

    /// Explicit comma-separated evaluation doses, strictly increasing.
    #[arg(long, value_delimiter = ',')]
    doses: Option<Vec<f64>>,

    /// Cross-fitting folds.
    #[arg(long)]
    k_folds: Option<usize>,

    /// Nuisance learner; hyperparameters beyond the default need a config
    /// file.
    #[arg(long)]
    learner: Option<LearnerArg>,

    /// Fixed kernel bandwidth; the default is the rule of thumb
    /// 1.06·sd(positive doses)·N^(-1/4).
    #[arg(long)]
    bandwidth: Option<f64>,
}

#[derive(Debug, Parser)]
#[command(
    name = "dosedid",
    version,
    about = "Difference-in-differences estimation of dose-response effects for continuous treatments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the effect curve on a CSV; writes curve.csv and curve.json.
    Estimate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Estimate plus a bootstrap uniform confidence band; adds band.csv and
    /// band.json.
    Band {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        data: DataArgs,
        /// Bootstrap replicates for the band's critical value.
        #[arg(long)]
        n_boot: Option<usize>,
    },
    /// Monte Carlo benchmark on the built-in data-generating process; writes
    /// replications.csv, summary.json, and histogram.csv.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Sampling design to simulate.
        #[arg(long)]
        design: Option<DesignArg>,
        /// Sample size per replication.
        #[arg(long)]
        n: Option<usize>,
        /// Replication count.
        #[arg(long)]
        reps: Option<usize>,
        /// Dose at which the estimator is evaluated.
        #[arg(long)]
        target_dose: Option<f64>,
        /// Cross-fitting folds.
        #[arg(long)]
        k_folds: Option<usize>,
        /// Nuisance learner.
        #[arg(long)]
        learner: Option<LearnerArg>,
        /// Fixed kernel bandwidth (default: rule of thumb per replication).
        #[arg(long)]
        bandwidth: Option<f64>,
    },
    /// Analytic diagnostics by quadrature: score orthogonality and the
    /// smoothing-bias rate; writes orthogonality.csv and bias_rate.csv.
    Probe {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated perturbation scales (at least three, in [0, 0.5]).
        #[arg(long, value_delimiter = ',')]
        r_values: Option<Vec<f64>>,
        /// Comma-separated bandwidths for the bias-rate table (at least two).
        #[arg(long, value_delimiter = ',')]
        h_values: Option<Vec<f64>>,
    },
}

/// Parse the process arguments, execute, and map errors to exit codes.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Estimate { common, data } => {
            let cfg = build_config("estimate", &common, Some(&data))?;
            cmd_estimate(&cfg)
        }
        Command::Band { common, data, n_boot } => {
            let mut cfg = build_config("band", &common, Some(&data))?;
            if let Some(b) = n_boot {
                cfg.n_boot = b;
            }
            cmd_band(&cfg)
        }
        Command::Simulate {
            common,
            design,
            n,
            reps,
            target_dose,
            k_folds,
            learner,
            bandwidth,
        } => {
            let mut cfg = build_config("simulate", &common, None)?;
            if let Some(d) = design {
                cfg.design = d.into();
            }
            if let Some(n) = n {
                cfg.n = n;
            }
            if let Some(reps) = reps {
                cfg.n_reps = reps;
            }
            if let Some(d) = target_dose {
                cfg.target_dose = d;
            }
            if let Some(k) = k_folds {
                cfg.k_folds = k;
            }
            if let Some(l) = learner {
                cfg.learner.kind = l.into();
            }
            if let Some(h) = bandwidth {
                cfg.bandwidth = Some(h);
            }
            cmd_simulate(&cfg)
        }
        Command::Probe { common, r_values, h_values } => {
            let mut cfg = build_config("probe", &common, None)?;
            if let Some(r) = r_values {
                cfg.r_values = r;
            }
            if let Some(h) = h_values {
                cfg.h_values = h;
            }
            cmd_probe(&cfg)
        }
    }
}

/// Layer defaults, config file, and flags into the effective `RunConfig`;
/// set up the thread pool.
fn build_config(
    command: &str,
    common: &CommonArgs,
    data: Option<&DataArgs>,
) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    cfg.command = Some(command.to_string());
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(kernel) = common.kernel {
        cfg.kernel = kernel.into();
    }
    if let Some(alpha) = common.alpha {
        cfg.alpha = alpha;
    }
    if common.fast {
        cfg.fast = true;
    }
    if let Some(args) = data {
        if let Some(input) = &args.input {
            cfg.input = Some(input.clone());
        }
        if let Some(design) = args.design {
            cfg.design = design.into();
        }
        if let Some(path) = &args.schema {
            cfg.schema = Some(read_schema_file(path)?);
        }
        if let Some(g) = args.grid_points {
            cfg.grid_points = g;
        }
        if let Some(t) = args.trim {
            cfg.trim = t;
        }
        if let Some(doses) = &args.doses {
            cfg.doses = Some(doses.clone());
        }
        if let Some(k) = args.k_folds {
            cfg.k_folds = k;
        }
        if let Some(l) = args.learner {
            cfg.learner.kind = l.into();
        }
        if let Some(h) = args.bandwidth {
            cfg.bandwidth = Some(h);
        }
    }
    if cfg.fast && cfg.learner.kind == LearnerKind::RandomForest {
        cfg.learner.n_trees = cfg.learner.n_trees.min(FAST_TREES);
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::Config(format!(
            "alpha must lie strictly inside (0, 1), got {}",
            cfg.alpha
        )));
    }
    if let Some(threads) = common.threads {
        configure_threads(threads)?;
    }
    Ok(cfg)
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))
}

fn read_schema_file(path: &Path) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read schema {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("invalid schema {}: {e}", path.display())))
}

fn configure_threads(threads: usize) -> Result<()> {
    if threads == 0 {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot configure {threads} threads: {e}")))
}

/// Create the output directory and record the effective configuration.
fn prepare_out(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out).map_err(|source| Error::IoWrite {
        path: cfg.out.display().to_string(),
        source,
    })?;
    let json = serde_json::to_string_pretty(cfg)
        .map_err(|e| Error::Config(format!("cannot serialize config: {e}")))?;
    let path = cfg.out.join("run_config.json");
    std::fs::write(&path, json + "\n").map_err(|source| Error::IoWrite {
        path: path.display().to_string(),
        source,
    })
}

fn panel_schema(cfg: &RunConfig) -> Result<PanelSchema> {
    match &cfg.schema {
        None => Ok(PanelSchema::default()),
        Some(value) => serde_json::from_value(value.clone())
            .map_err(|e| Error::Config(format!("schema does not fit the panel design: {e}"))),
    }
}

fn rcs_schema(cfg: &RunConfig) -> Result<RcsSchema> {
    match &cfg.schema {
        None => Ok(RcsSchema::default()),
        Some(value) => serde_json::from_value(value.clone()).map_err(|e| {
            Error::Config(format!("schema does not fit the repeated cross-section design: {e}"))
        }),
    }
}

fn require_input(cfg: &RunConfig) -> Result<&Path> {
    cfg.input
        .as_deref()
        .ok_or_else(|| Error::Config("this command needs an input CSV (--input or config.input)".into()))
}

/// Evaluation grid and kernel for a loaded dataset.
fn grid_and_kernel<T: HasDoses>(cfg: &RunConfig, data: &T, n_total: usize) -> Result<(DoseGrid, KernelSpec)> {
    let grid = match &cfg.doses {
        Some(doses) => DoseGrid::new(doses.clone())?,
        None => make_dose_grid(data, cfg.grid_points, cfg.trim)?,
    };
    let bandwidth = match cfg.bandwidth {
        Some(h) => h,
        None => {
            let positive: Vec<f64> = data.doses().iter().copied().filter(|&d| d > 0.0).collect();
            rule_of_thumb_bandwidth(&positive, n_total)?
        }
    };
    Ok((grid, KernelSpec::new(cfg.kernel, bandwidth)?))
}

/// Stderr log of what the fit used: bandwidth, fold sizes, and the
/// kernel-effective sample size at each evaluation dose.
fn log_curve(curve: &AttCurveEstimate) {
    eprintln!("bandwidth h = {:.6}", curve.bandwidth);
    if let Some(folds) = &curve.folds {
        let sizes: Vec<usize> = (0..folds.k()).map(|k| folds.members(k).len()).collect();
        eprintln!("fold sizes: {sizes:?}");
    }
    for point in &curve.estimates {
        eprintln!(
            "dose {:.4}: att = {:.6}, se = {:.6}, n_eff = {:.1}",
            point.dose, point.att_hat, point.se, point.n_effective
        );
    }
}

fn write_curve(cfg: &RunConfig, curve: &AttCurveEstimate) -> Result<()> {
    curve.write_csv(&cfg.out.join("curve.csv"), cfg.alpha)?;
    curve.write_json(&cfg.out.join("curve.json"), cfg.alpha)
}

fn cmd_estimate(cfg: &RunConfig) -> Result<i32> {
    let input = require_input(cfg)?;
    prepare_out(cfg)?;
    let curve = match cfg.design {
        Design::Panel => {
            let data = load_panel_csv(input, &panel_schema(cfg)?)?;
            let (grid, kspec) = grid_and_kernel(cfg, &data, data.n())?;
            estimate_att_keeping_nuisances(&data, &grid, cfg.k_folds, &cfg.learner, &kspec, cfg.seed)?.0
        }
        Design::Rcs => {
            let data = load_rcs_csv(input, &rcs_schema(cfg)?)?;
            let (grid, kspec) = grid_and_kernel(cfg, &data, data.n())?;
            estimate_att_keeping_nuisances(&data, &grid, cfg.k_folds, &cfg.learner, &kspec, cfg.seed)?.0
        }
    };
    log_curve(&curve);
    write_curve(cfg, &curve)?;
    Ok(0)
}

fn cmd_band(cfg: &RunConfig) -> Result<i32> {
    let input = require_input(cfg)?;
    prepare_out(cfg)?;
    let (curve, band) = match cfg.design {
        Design::Panel => {
            let data = load_panel_csv(input, &panel_schema(cfg)?)?;
            let (grid, kspec) = grid_and_kernel(cfg, &data, data.n())?;
            let (curve, nuisances) =
                estimate_att_keeping_nuisances(&data, &grid, cfg.k_folds, &cfg.learner, &kspec, cfg.seed)?;
            let band =
                uniform_band(&curve, &data, &nuisances, &kspec, cfg.n_boot, cfg.alpha, cfg.seed)?;
            (curve, band)
        }
        Design::Rcs => {
            let data = load_rcs_csv(input, &rcs_schema(cfg)?)?;
            let (grid, kspec) = grid_and_kernel(cfg, &data, data.n())?;
            let (curve, nuisances) =
                estimate_att_keeping_nuisances(&data, &grid, cfg.k_folds, &cfg.learner, &kspec, cfg.seed)?;
            let band =
                uniform_band(&curve, &data, &nuisances, &kspec, cfg.n_boot, cfg.alpha, cfg.seed)?;
            (curve, band)
        }
    };
    log_curve(&curve);
    write_curve(cfg, &curve)?;
    band.write_csv(&cfg.out.join("band.csv"))?;
    band.write_json(&cfg.out.join("band.json"))?;
    report_band(&band)?;
    Ok(0)
}

/// Stdout report: the bootstrap critical value next to its pointwise
/// (normal) counterpart.
fn report_band(band: &UniformBand) -> Result<()> {
    let z = normal_quantile(1.0 - band.alpha / 2.0)?;
    println!(
        "uniform critical value c({}) = {:.6} (pointwise z = {:.6}, {} bootstrap replicates)",
        1.0 - band.alpha,
        band.critical_value,
        z,
        band.n_boot
    );
    Ok(())
}

fn cmd_simulate(cfg: &RunConfig) -> Result<i32> {
    prepare_out(cfg)?;
    let n_reps = if cfg.fast { cfg.n_reps.min(FAST_REPS) } else { cfg.n_reps };
    let mc_config = McConfig {
        k_folds: cfg.k_folds,
        learners: cfg.learner.clone(),
        family: cfg.kernel,
        bandwidth: cfg.bandwidth,
        alpha: cfg.alpha,
    };
    eprintln!(
        "running {n_reps} replications: design = {}, n = {}, dose = {}, learner = {:?}",
        cfg.design, cfg.n, cfg.target_dose, cfg.learner.kind
    );
    let result = run_monte_carlo(
        cfg.design,
        &DgpSpec::default(),
        cfg.n,
        n_reps,
        cfg.target_dose,
        &mc_config,
        cfg.seed,
    )?;
    result.write_reps_csv(&cfg.out.join("replications.csv"))?;
    result.write_summary_json(&cfg.out.join("summary.json"))?;
    result.write_histogram_csv(&cfg.out.join("histogram.csv"), HISTOGRAM_BINS)?;
    let s = &result.summary;
    println!(
        "bias = {:.4}, std = {:.4}, rmse = {:.4}, avse = {:.4}, coverage = {:.4} ({} reps at dose {})",
        s.bias, s.std, s.rmse, s.avse, s.coverage, s.n_reps, s.target_dose
    );
    Ok(0)
}

fn cmd_probe(cfg: &RunConfig) -> Result<i32> {
    if cfg.r_values.len() < 3 {
        return Err(Error::Config(
            "the orthogonality probe needs at least three perturbation scales so the \
             linear term has a settling tail to check"
                .into(),
        ));
    }
    if cfg.h_values.len() < 2 {
        return Err(Error::Config(
            "the bias-rate probe needs at least two bandwidths".into(),
        ));
    }
    prepare_out(cfg)?;
    let ortho = orthogonality_probe(cfg.kernel, &cfg.r_values)?;
    let rate = bias_rate_probe(cfg.kernel, &cfg.h_values)?;
    let slope = log_log_slope(&rate)?;
    write_csv_rows(&cfg.out.join("orthogonality.csv"), &ortho)?;
    write_csv_rows(&cfg.out.join("bias_rate.csv"), &rate)?;
    let ortho_pass = orthogonality_passes(&ortho);
    let rate_pass = (slope - 2.0).abs() <= 0.3;
    println!(
        "orthogonality: {}, bias-rate slope {:.2} (2.0±0.3): {}",
        verdict(ortho_pass),
        slope,
        verdict(rate_pass)
    );
    Ok(if ortho_pass && rate_pass { 0 } else { 1 })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| Error::IoWrite {
        path: path.display().to_string(),
        source,
    })?;
    let mut writer = csv::Writer::from_writer(file);
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))?;
    }
    writer.flush().map_err(|source| Error::IoWrite {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_json() {
        let cfg = RunConfig {
            command: Some("estimate".into()),
            input: Some(PathBuf::from("data.csv")),
            doses: Some(vec![0.5, 0.9, 1.3]),
            bandwidth: Some(0.25),
            learner: LearnerSpec::ridge(),
            seed: 42,
            ..RunConfig::default()
        };
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.command.as_deref(), Some("estimate"));
        assert_eq!(back.input, cfg.input);
        assert_eq!(back.doses, cfg.doses);
        assert_eq!(back.bandwidth, cfg.bandwidth);
        assert_eq!(back.learner, cfg.learner);
        assert_eq!(back.seed, 42);
        // `out` is never serialized: reloads fall back to the default.
        assert!(!json.contains("\"out\""));
        assert_eq!(back.out, PathBuf::from("."));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>("{\"k_fodls\": 5}").unwrap_err();
        assert!(err.to_string().contains("k_fodls"));
    }

    #[test]
    fn schema_values_must_fit_the_design() {
        let mut cfg = RunConfig {
            schema: Some(serde_json::json!({"y": "outcome", "period": "t"})),
            ..RunConfig::default()
        };
        // Legal for repeated cross-sections, not for panels.
        assert!(rcs_schema(&cfg).is_ok());
        assert!(panel_schema(&cfg).is_err());
        cfg.schema = Some(serde_json::json!({"y_pre": "y0", "y_post": "y1"}));
        assert!(panel_schema(&cfg).is_ok());
        assert!(rcs_schema(&cfg).is_err());
        cfg.schema = None;
        assert_eq!(panel_schema(&cfg).unwrap(), PanelSchema::default());
    }

    #[test]
    fn probe_rejects_degenerate_lists() {
        let mut cfg = RunConfig {
            r_values: vec![0.1],
            ..RunConfig::default()
        };
        let err = cmd_probe(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        cfg.r_values = DEFAULT_R_VALUES.to_vec();
        cfg.h_values = vec![0.4];
        let err = cmd_probe(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn missing_input_is_a_config_error() {
        let cfg = RunConfig::default();
        let err = cmd_estimate(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn cli_parses_the_documented_flags() {
        let cli = Cli::try_parse_from([
            "dosedid", "band", "--input", "d.csv", "--design", "rcs", "--doses", "0.5,0.9",
            "--k-folds", "3", "--learner", "ridge", "--kernel", "epanechnikov", "--bandwidth",
            "0.3", "--alpha", "0.1", "--n-boot", "250", "--seed", "9", "--out", "results",
            "--fast",
        ])
        .unwrap();
        match cli.command {
            Command::Band { common, data, n_boot } => {
                assert_eq!(data.doses, Some(vec![0.5, 0.9]));
                assert_eq!(data.k_folds, Some(3));
                assert_eq!(n_boot, Some(250));
                assert_eq!(common.seed, Some(9));
                assert!(common.fast);
            }
            other => panic!("parsed into {other:?}"),
        }
        assert!(Cli::try_parse_from(["dosedid", "orchestrate"]).is_err());
        assert!(Cli::try_parse_from(["dosedid", "simulate", "--reps", "ten"]).is_err());
    }

    #[test]
    fn fast_flag_caps_trees() {
        let cli = Cli::try_parse_from(["dosedid", "estimate", "--input", "d.csv", "--fast"]).unwrap();
        match cli.command {
            Command::Estimate { common, data } => {
                let cfg = build_config("estimate", &common, Some(&data)).unwrap();
                assert_eq!(cfg.learner.n_trees, FAST_TREES);
                assert!(cfg.fast);
            }
            other => panic!("parsed into {other:?}"),
        }
    }
}
