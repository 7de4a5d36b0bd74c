//! `helion` command line front end.
//!
//! Every subcommand reads one JSON document (`--config`), writes its outputs
//! into `--out`, and echoes the effective configuration to `run.json` so a
//! run can be repeated exactly. Relative paths inside a config file are
//! resolved against the directory holding that file.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 numeric failure,
//! 4 I/O failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::acquire::{acquisition_study, AcquisitionConfig, ProbeBasis};
use crate::bounds::{
    binomial_ci, effective_photons, gaussian_receiver_error, helstrom_bound, PhotonBudget, Priors,
    DEFAULT_N_REP, DEFAULT_SIGMA_SQ,
};
use crate::discrim::{
    average_state, build_discrimination_operator, optimal_state, spectrum, ProbeState,
};
use crate::linalg::write_cmx;
use crate::persist::{self, fmt_f64, CsvTable};
use crate::receiver::{
    fit_decay_constant, photon_sweep, run_trials, sweep_table, MeanStrategy, PhotonGrid,
    SweepProbe, TrialConfig,
};
use crate::rng::GENERATOR_ID;
use crate::scatter::{gen_system, load_pair, save_pair, ScatteringPair, SystemConfig};
use crate::{Error, Result};

pub const RUN_SCHEMA: &str = "helion.run/1";
pub const BOUNDS_SCHEMA: &str = "helion.bounds/1";
pub const THREADS_ENV: &str = "HELION_THREADS";

#[derive(Debug, Parser)]
#[command(name = "helion", version, about = "Optimal probe states for target detection through scattering media")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Format of tabular outputs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a scattering pair and write it as a pair directory.
    Synth,
    /// Eigenvalues of the discrimination operator plus optimal and average states.
    Spectrum,
    /// Closed-form Helstrom and Gaussian-receiver error probabilities.
    Bounds,
    /// One Monte Carlo batch of homodyne detections.
    Trials,
    /// Monte Carlo batches over a photon grid for several probe states.
    Sweep,
    /// Virtual transmission-matrix acquisition and fidelity study.
    Acquire,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateChoice {
    Optimal,
    Average,
}

impl StateChoice {
    fn label(self) -> &'static str {
        match self {
            StateChoice::Optimal => "optimal",
            StateChoice::Average => "average",
        }
    }
}

fn default_sigma_sq() -> f64 {
    DEFAULT_SIGMA_SQ
}

fn default_n_rep() -> usize {
    DEFAULT_N_REP
}

fn default_states() -> Vec<StateChoice> {
    vec![StateChoice::Optimal, StateChoice::Average]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub pair: PathBuf,
    #[serde(default)]
    pub save_eigenstates: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub d12sq: Vec<f64>,
    #[serde(default)]
    pub photons: Vec<f64>,
    /// Converted to photon numbers and appended to `photons`.
    #[serde(default)]
    pub budgets: Vec<PhotonBudget>,
    #[serde(default)]
    pub priors: Priors,
    #[serde(default = "default_sigma_sq")]
    pub sigma_sq: f64,
    #[serde(default = "default_n_rep")]
    pub n_rep: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialsConfig {
    pub pair: PathBuf,
    pub state: StateChoice,
    pub photons: f64,
    #[serde(default)]
    pub priors: Priors,
    #[serde(default = "default_sigma_sq")]
    pub sigma_sq: f64,
    #[serde(default = "default_n_rep")]
    pub n_rep: usize,
    pub mean_strategy: MeanStrategy,
    pub seed: u64,
    #[serde(default)]
    pub fixed_split: bool,
    #[serde(default)]
    pub leave_one_out: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub pair: PathBuf,
    #[serde(default = "default_states")]
    pub states: Vec<StateChoice>,
    pub grid: PhotonGrid,
    #[serde(default)]
    pub priors: Priors,
    #[serde(default = "default_sigma_sq")]
    pub sigma_sq: f64,
    #[serde(default = "default_n_rep")]
    pub n_rep: usize,
    pub mean_strategy: MeanStrategy,
    pub seed: u64,
    #[serde(default)]
    pub fixed_split: bool,
    #[serde(default)]
    pub leave_one_out: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquireConfig {
    pub pair: PathBuf,
    pub n0_per_column: f64,
    #[serde(default)]
    pub probe_basis: ProbeBasis,
    #[serde(default = "default_sigma_sq")]
    pub sigma_sq: f64,
    pub seed: u64,
    #[serde(default)]
    pub phase_jitter_rad: f64,
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Validation(_) | Error::Dimension(_) | Error::Precondition(_) | Error::Json { .. } => 2,
        Error::Numeric(_) | Error::Convergence { .. } | Error::Consistency(_) => 3,
        Error::Io { .. } | Error::Format { .. } => 4,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    configure_threads();
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("helion: {e}");
            exit_code(&e)
        }
    }
}

/// Caps the global rayon pool at `HELION_THREADS` when set.
pub fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        // The pool can only be configured once per process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let config = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Validation("--config <path> is required".into()))?;
    let base = config.parent().unwrap_or(Path::new("")).to_path_buf();
    let ctx = Ctx { base, out: cli.out.clone(), format: cli.format };
    match cli.command {
        Command::Synth => {
            let mut cfg: SystemConfig = persist::read_json(config)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            cmd_synth(&ctx, &cfg)
        }
        Command::Spectrum => cmd_spectrum(&ctx, &persist::read_json(config)?),
        Command::Bounds => cmd_bounds(&ctx, &persist::read_json(config)?),
        Command::Trials => {
            let mut cfg: TrialsConfig = persist::read_json(config)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            cmd_trials(&ctx, &cfg)
        }
        Command::Sweep => {
            let mut cfg: SweepConfig = persist::read_json(config)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            cmd_sweep(&ctx, &cfg)
        }
        Command::Acquire => {
            let mut cfg: AcquireConfig = persist::read_json(config)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            cmd_acquire(&ctx, &cfg)
        }
    }
}

struct Ctx {
    base: PathBuf,
    out: PathBuf,
    format: Format,
}

impl Ctx {
    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn load_pair(&self, p: &Path) -> Result<ScatteringPair> {
        load_pair(&self.resolve(p))
    }

    fn write_table(&self, stem: &str, table: &CsvTable) -> Result<PathBuf> {
        let (name, text) = match self.format {
            Format::Csv => (format!("{stem}.csv"), table.to_csv()),
            Format::Json => (format!("{stem}.json"), table.to_json()),
        };
        let path = self.out.join(name);
        persist::write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }

    fn echo<T: Serialize>(&self, command: &str, config: &T) -> Result<()> {
        let doc = serde_json::json!({
            "schema": RUN_SCHEMA,
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "generator": GENERATOR_ID,
            "format": self.format,
            "config": config,
        });
        persist::write_json(&self.out.join("run.json"), &doc)
    }
}

fn cmd_synth(ctx: &Ctx, cfg: &SystemConfig) -> Result<()> {
    let pair = gen_system(cfg)?;
    save_pair(&ctx.out, &pair)?;
    ctx.echo("synth", cfg)?;
    println!(
        "S1, S2: {}x{}  sigma_max = {:.12}  unitary = {}",
        pair.n_out(),
        pair.m_in(),
        pair.sigma_max(),
        pair.is_unitary()
    );
    println!("wrote {}", ctx.out.display());
    Ok(())
}

fn state_for(choice: StateChoice, pair: &ScatteringPair, photons: f64) -> Result<ProbeState> {
    let spec = spectrum(&build_discrimination_operator(pair))?;
    match choice {
        StateChoice::Optimal => optimal_state(&spec, photons),
        StateChoice::Average => average_state(&spec, photons),
    }
}

fn cmd_spectrum(ctx: &Ctx, cfg: &SpectrumConfig) -> Result<()> {
    let pair = ctx.load_pair(&cfg.pair)?;
    let spec = spectrum(&build_discrimination_operator(&pair))?;
    let table_path = ctx.write_table("spectrum", &spec.to_table())?;
    write_cmx(ctx.out.join("optimal_state.cmx"), &optimal_state(&spec, 1.0)?.amplitudes().as_column())?;
    write_cmx(ctx.out.join("average_state.cmx"), &average_state(&spec, 1.0)?.amplitudes().as_column())?;
    if cfg.save_eigenstates {
        write_cmx(ctx.out.join("eigenstates.cmx"), spec.eigenstates())?;
    }
    let summary = serde_json::json!({
        "m": spec.dim(),
        "leading_eigenvalue": spec.leading_eigenvalue(),
        "mean_eigenvalue": spec.mean_eigenvalue(),
        "enhancement": spec.enhancement(),
        "eigenvalues_above_1e-9": spec.count_above(1e-9),
    });
    persist::write_json(&ctx.out.join("spectrum_summary.json"), &summary)?;
    ctx.echo("spectrum", cfg)?;
    match spec.enhancement() {
        Some(r) => println!("Lambda_1 / mean = {r:.6}"),
        None => println!("Lambda_1 / mean = undefined (all eigenvalues are zero)"),
    }
    println!("wrote {}", table_path.display());
    Ok(())
}

fn cmd_bounds(ctx: &Ctx, cfg: &BoundsConfig) -> Result<()> {
    cfg.priors.validate()?;
    if cfg.n_rep == 0 {
        return Err(Error::Validation("n_rep must be at least 1".into()));
    }
    let mut photons = cfg.photons.clone();
    for b in &cfg.budgets {
        b.validate()?;
        photons.push(effective_photons(b));
    }
    if photons.is_empty() || cfg.d12sq.is_empty() {
        return Err(Error::Validation("bounds needs at least one d12sq and one photon level".into()));
    }
    let mut table = CsvTable::new(BOUNDS_SCHEMA, &["n", "d12sq", "P_H", "P_G", "ci_lo", "ci_hi"]);
    for &d in &cfg.d12sq {
        for &n in &photons {
            let ph = helstrom_bound(n, d, &cfg.priors)?;
            let pg = gaussian_receiver_error(n, d, cfg.sigma_sq, &cfg.priors)?;
            let (lo, hi) = binomial_ci(pg, cfg.n_rep);
            table.push(vec![fmt_f64(n), fmt_f64(d), fmt_f64(ph), fmt_f64(pg), fmt_f64(lo), fmt_f64(hi)]);
        }
    }
    let path = ctx.write_table("bounds", &table)?;
    ctx.echo("bounds", cfg)?;
    println!("{} points, wrote {}", table.rows.len(), path.display());
    Ok(())
}

fn cmd_trials(ctx: &Ctx, cfg: &TrialsConfig) -> Result<()> {
    let pair = ctx.load_pair(&cfg.pair)?;
    let state = state_for(cfg.state, &pair, cfg.photons)?;
    let trial_cfg = TrialConfig {
        priors: cfg.priors,
        sigma_sq: cfg.sigma_sq,
        n_rep: cfg.n_rep,
        mean_strategy: cfg.mean_strategy,
        seed: cfg.seed,
        fixed_split: cfg.fixed_split,
        leave_one_out: cfg.leave_one_out,
    };
    let batch = run_trials(&pair, &state, &trial_cfg)?;
    let p_g = gaussian_receiver_error(cfg.photons, batch.d12sq, cfg.sigma_sq, &cfg.priors)?;
    let p_h = helstrom_bound(cfg.photons, batch.d12sq, &cfg.priors)?;
    let path = ctx.write_table("trials", &batch.to_table())?;
    let summary = serde_json::json!({
        "schema": "helion.trials-summary/1",
        "error_rate": batch.error_rate,
        "errors": batch.errors(),
        "ci": [batch.ci.0, batch.ci.1],
        "d12sq": batch.d12sq,
        "P_G": p_g,
        "P_H": p_h,
        "config": cfg,
    });
    persist::write_json(&ctx.out.join("summary.json"), &summary)?;
    ctx.echo("trials", cfg)?;
    println!(
        "{} state, n = {}: error rate {:.5} [{:.5}, {:.5}], P_G = {:.5}, P_H = {:.5}",
        cfg.state.label(),
        cfg.photons,
        batch.error_rate,
        batch.ci.0,
        batch.ci.1,
        p_g,
        p_h
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_sweep(ctx: &Ctx, cfg: &SweepConfig) -> Result<()> {
    let pair = ctx.load_pair(&cfg.pair)?;
    let d12 = build_discrimination_operator(&pair);
    let spec = spectrum(&d12)?;
    let probes = cfg
        .states
        .iter()
        .map(|&choice| {
            let state = match choice {
                StateChoice::Optimal => optimal_state(&spec, 0.0)?,
                StateChoice::Average => average_state(&spec, 0.0)?,
            };
            Ok(SweepProbe { label: choice.label().to_string(), state })
        })
        .collect::<Result<Vec<_>>>()?;
    let trial_cfg = TrialConfig {
        priors: cfg.priors,
        sigma_sq: cfg.sigma_sq,
        n_rep: cfg.n_rep,
        mean_strategy: cfg.mean_strategy,
        seed: cfg.seed,
        fixed_split: cfg.fixed_split,
        leave_one_out: cfg.leave_one_out,
    };
    let rows = photon_sweep(&pair, &d12, &probes, &cfg.grid, &trial_cfg)?;
    let path = ctx.write_table("sweep", &sweep_table(&rows))?;
    ctx.echo("sweep", cfg)?;
    for probe in &probes {
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.label == probe.label)
            .map(|r| (r.photons, r.error_rate))
            .collect();
        match fit_decay_constant(&points) {
            Some(k) => println!("{}: fitted decay constant {k:.6e}", probe.label),
            None => println!("{}: too few informative points for a decay fit", probe.label),
        }
    }
    println!("{} rows, wrote {}", rows.len(), path.display());
    Ok(())
}

fn cmd_acquire(ctx: &Ctx, cfg: &AcquireConfig) -> Result<()> {
    let pair = ctx.load_pair(&cfg.pair)?;
    let acq = AcquisitionConfig {
        n0_per_column: cfg.n0_per_column,
        probe_basis: cfg.probe_basis,
        sigma_sq: cfg.sigma_sq,
        seed: cfg.seed,
        phase_jitter_rad: cfg.phase_jitter_rad,
    };
    let report = acquisition_study(&pair, &acq)?;
    save_pair(&ctx.out, &report.measured)?;
    let path = ctx.write_table("spectrum", &report.spectrum.to_table())?;
    let summary = serde_json::json!({
        "schema": "helion.acquisition/1",
        "config": acq,
        "predicted_d12sq": report.predicted_d12sq,
        "realized_d12sq": report.realized_d12sq,
        "eta_d": report.eta_d,
        "fidelity_h1": report.fidelity[0],
        "fidelity_h2": report.fidelity[1],
        "enhancement": report.spectrum.enhancement(),
    });
    persist::write_json(&ctx.out.join("acquisition.json"), &summary)?;
    ctx.echo("acquire", cfg)?;
    println!(
        "eta_d = {:.6}  (predicted {:.6e}, realized {:.6e})",
        report.eta_d, report.predicted_d12sq, report.realized_d12sq
    );
    println!("wrote {}", path.display());
    Ok(())
}
