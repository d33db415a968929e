//! Command-line front end: TOML configuration, the five subcommands, CSV and
//! JSON artifact emission, and a JSON run manifest written next to the primary
//! output even when the command itself fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::attacks::{imbalanced_centered, optimal_phi, pccm_attack, pccm_fidelities, NoiseScaling};
use crate::bb84::{monte_carlo_protocol, FidelityReport, Scenario};
use crate::channels::NoiseChannel;
use crate::collective::{train_collective, CollectiveConfig};
use crate::error::{Error, Result};
use crate::qcl::{train, LossConfig, TrainConfig};

/// Simulates and trains eavesdropping attacks on the BB84 protocol.
#[derive(Parser, Debug)]
#[command(name = "bb84sim", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandKind,
    /// TOML config file; built-in defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Primary output path; each subcommand has a default in the working directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master RNG seed; overrides the config file value.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Suppress the summary line printed to stdout.
    #[arg(long, global = true)]
    pub quiet: bool,
}

/// The available subcommands.
#[derive(Subcommand, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    /// Sweep the cloning-attack angle and emit simulated fidelity pairs.
    PccmSweep,
    /// Train individual attacks on a clean channel, one CSV row per step.
    TrainIndividual,
    /// Train individual attacks on a noisy channel plus matching theory curves.
    TrainNoisy,
    /// Train and score the two-copy collective measurement attack.
    Collective,
    /// Sample full protocol rounds and compare rates to analytic values.
    ProtocolSim,
}

impl CommandKind {
    /// The subcommand name as typed on the command line.
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::PccmSweep => "pccm-sweep",
            CommandKind::TrainIndividual => "train-individual",
            CommandKind::TrainNoisy => "train-noisy",
            CommandKind::Collective => "collective",
            CommandKind::ProtocolSim => "protocol-sim",
        }
    }

    fn default_out(self) -> PathBuf {
        PathBuf::from(match self {
            CommandKind::PccmSweep => "pccm_sweep.csv",
            CommandKind::TrainIndividual => "train_individual.csv",
            CommandKind::TrainNoisy => "train_noisy.csv",
            CommandKind::Collective => "collective.json",
            CommandKind::ProtocolSim => "protocol_sim.json",
        })
    }
}

/// Full run configuration. Every field has a default, so an empty file and a
/// missing `--config` flag both mean "run with the standard settings".
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Master seed; round seeds and target draws derive from it.
    pub seed: u64,
    pub training: TrainingSection,
    pub individual: IndividualSection,
    pub noisy: NoisySection,
    /// Channel noise, applied only by `train-noisy`.
    pub noise: Vec<NoiseChannel>,
    pub pccm: PccmSection,
    pub collective: CollectiveSection,
    pub protocol: ProtocolSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            training: TrainingSection::default(),
            individual: IndividualSection::default(),
            noisy: NoisySection::default(),
            noise: Vec::new(),
            pccm: PccmSection::default(),
            collective: CollectiveSection::default(),
            protocol: ProtocolSection::default(),
        }
    }
}

/// Optimizer knobs shared by every training subcommand.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub n_steps: usize,
    pub learning_rate: f64,
    /// Weight of the squared target-fidelity miss in the loss.
    pub alpha: f64,
    /// Standard deviation of the Gaussian parameter initialization.
    pub init_std: f64,
}

impl Default for TrainingSection {
    fn default() -> Self {
        Self { n_steps: 100, learning_rate: 0.1, alpha: 10.0, init_std: 0.1 }
    }
}

/// Settings for `train-individual`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndividualSection {
    pub rounds: usize,
    /// Fixed target fidelity; when absent each round draws one from [0.5, 1).
    pub target_f_ab: Option<f64>,
}

impl Default for IndividualSection {
    fn default() -> Self {
        Self { rounds: 8, target_f_ab: None }
    }
}

/// Settings for `train-noisy`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoisySection {
    pub rounds: usize,
    /// Number of sweep points in the emitted theory curve.
    pub theory_points: usize,
    /// Fixed target fidelity; when absent each round draws one from [0.5, 1).
    pub target_f_ab: Option<f64>,
}

impl Default for NoisySection {
    fn default() -> Self {
        Self { rounds: 25, theory_points: 60, target_f_ab: None }
    }
}

/// Settings for `pccm-sweep`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PccmSection {
    pub points: usize,
    pub theta_min: f64,
    pub theta_max: f64,
}

impl Default for PccmSection {
    fn default() -> Self {
        Self { points: 41, theta_min: 0.0, theta_max: PI }
    }
}

/// Settings for `collective`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollectiveSection {
    /// Alice/Bob fidelity the attack is calibrated to.
    pub f_ab: f64,
}

impl Default for CollectiveSection {
    fn default() -> Self {
        Self { f_ab: 0.892 }
    }
}

/// Settings for `protocol-sim`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub n_rounds: u64,
    /// Cloning-attack angle used for the sampled rounds.
    pub theta: f64,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self { n_rounds: 100_000, theta: FRAC_PI_2 }
    }
}

/// Loads and validates a config file, or returns the defaults for `None`.
pub fn load_config(path: Option<&Path>) -> Result<Config> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let config: Config = toml::from_str(&text)
        .map_err(|e| Error::Config(one_line(&format!("{}: {e}", path.display()))))?;
    validate(&config)?;
    Ok(config)
}

fn validate(config: &Config) -> Result<()> {
    for ch in &config.noise {
        NoiseChannel::new(ch.kind, ch.strength, ch.target, ch.placement)?;
    }
    if config.pccm.points == 0 {
        return Err(Error::NotPositiveCount("pccm points"));
    }
    if config.individual.rounds == 0 {
        return Err(Error::NotPositiveCount("individual rounds"));
    }
    if config.noisy.rounds == 0 {
        return Err(Error::NotPositiveCount("noisy rounds"));
    }
    if config.noisy.theory_points == 0 {
        return Err(Error::NotPositiveCount("noisy theory points"));
    }
    Ok(())
}

/// Record of one command invocation, written as `<out stem>.manifest.json`
/// next to the primary output. Written even when the run fails, with the
/// failure in `error`; `artifacts` then lists whatever was completed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Config,
    pub seed: u64,
    /// Per-round seeds derived from the master seed, in round order.
    pub round_seeds: Vec<u64>,
    /// Every output file this run produced, manifest excluded.
    pub artifacts: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
    pub library_version: String,
    pub error: Option<String>,
}

/// Artifacts and derived seeds accumulated while a command runs. Kept by
/// mutable reference so a failing command still reports partial output.
#[derive(Clone, Debug, Default)]
pub struct CommandOutcome {
    pub artifacts: Vec<PathBuf>,
    pub round_seeds: Vec<u64>,
}

/// Manifest path for a given primary output path.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

/// Theory-curve path for a given results path: `x.csv` becomes `x_theory.csv`.
pub fn theory_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    let ext = out
        .extension()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".to_string());
    out.with_file_name(format!("{stem}_theory.{ext}"))
}

// 12 significant digits, locale-free, round-trips through f64 parsing.
fn fmt_float(x: f64) -> String {
    format!("{x:.11e}")
}

fn csv(header: &str, rows: &[String]) -> String {
    let mut text = String::with_capacity(header.len() + 1 + rows.len() * 56);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    text
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|_| Error::Internal("json serialization failed"))?;
    text.push('\n');
    Ok(text)
}

fn write_artifact(path: &Path, text: &str, outcome: &mut CommandOutcome) -> Result<()> {
    fs::write(path, text)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    outcome.artifacts.push(path.to_path_buf());
    Ok(())
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn theta_grid(section: &PccmSection) -> Vec<f64> {
    if section.points == 1 {
        return vec![section.theta_min];
    }
    let span = section.theta_max - section.theta_min;
    (0..section.points)
        .map(|i| section.theta_min + span * i as f64 / (section.points - 1) as f64)
        .collect()
}

fn round_seed(master: u64, round: usize) -> u64 {
    // Master seed itself feeds the target draws; rounds start one past it.
    master.wrapping_add(round as u64).wrapping_add(1)
}

fn round_targets(master: u64, rounds: usize, fixed: Option<f64>) -> Vec<f64> {
    match fixed {
        Some(f) => vec![f; rounds],
        None => {
            let mut rng = ChaCha12Rng::seed_from_u64(master);
            (0..rounds).map(|_| rng.random_range(0.5..1.0)).collect()
        }
    }
}

fn six_column_row(report: &FidelityReport) -> String {
    format!(
        "{},{},{},{},{},{}",
        fmt_float(report.f_ab_z),
        fmt_float(report.f_ae_z),
        fmt_float(report.f_ab_x),
        fmt_float(report.f_ae_x),
        fmt_float(report.f_ab),
        fmt_float(report.f_ae)
    )
}

const SIX_COLUMN_HEADER: &str = "f_ab_Z,f_ae_Z,f_ab_X,f_ae_X,f_ab,f_ae";

/// Sweeps the cloning-attack angle over the configured grid and writes one
/// `theta,f_ab,f_ae` row per grid point. Each simulated pair is checked
/// against the closed form to one part in a billion before being emitted.
pub fn cmd_pccm_sweep(config: &Config, out: &Path, outcome: &mut CommandOutcome) -> Result<()> {
    let mut rows = Vec::with_capacity(config.pccm.points);
    for theta in theta_grid(&config.pccm) {
        let scenario = pccm_attack(theta, Vec::new())?;
        let report = scenario.evaluate(&[])?;
        let (f_ab, f_ae) = pccm_fidelities(theta);
        if (report.f_ab - f_ab).abs() > 1e-9 || (report.f_ae - f_ae).abs() > 1e-9 {
            return Err(Error::Internal("swept fidelities diverge from closed form"));
        }
        rows.push(format!(
            "{},{},{}",
            fmt_float(theta),
            fmt_float(report.f_ab),
            fmt_float(report.f_ae)
        ));
    }
    write_artifact(out, &csv("theta,f_ab,f_ae", &rows), outcome)
}

/// Trains the two-qubit ansatz attack on a clean channel for the configured
/// number of rounds and writes one `f_ab,f_ae,step` row per optimizer step,
/// round-major. Step 0 (the random initialization) is not a row.
pub fn cmd_train_individual(
    config: &Config,
    out: &Path,
    outcome: &mut CommandOutcome,
) -> Result<()> {
    let scenario = Scenario::standard_individual(Vec::new())?;
    let targets = round_targets(config.seed, config.individual.rounds, config.individual.target_f_ab);
    let mut rows = Vec::with_capacity(config.individual.rounds * config.training.n_steps);
    for (round, target) in targets.iter().enumerate() {
        let seed = round_seed(config.seed, round);
        outcome.round_seeds.push(seed);
        let cfg = TrainConfig {
            loss: LossConfig { alpha: config.training.alpha, target_f_ab: *target },
            n_steps: config.training.n_steps,
            learning_rate: config.training.learning_rate,
            init_std: config.training.init_std,
            seed,
        };
        let trace = train(&scenario, &cfg)?;
        for step in trace.steps.iter().filter(|s| s.step > 0) {
            rows.push(format!("{},{},{}", fmt_float(step.f_ab), fmt_float(step.f_ae), step.step));
        }
    }
    write_artifact(out, &csv("f_ab,f_ae,step", &rows), outcome)
}

/// Trains the two-qubit ansatz attack on the configured noisy channel and
/// writes two files: the final per-basis fidelities of each round, and the
/// matching theory curve swept over the cloner family with the second angle
/// chosen optimally for the channel's per-basis scaling factors.
pub fn cmd_train_noisy(config: &Config, out: &Path, outcome: &mut CommandOutcome) -> Result<()> {
    let scenario = Scenario::standard_individual(config.noise.clone())?;
    let scaling = NoiseScaling::from_channels(&config.noise)?;
    let targets = round_targets(config.seed, config.noisy.rounds, config.noisy.target_f_ab);
    let mut result_rows = Vec::with_capacity(config.noisy.rounds);
    for (round, target) in targets.iter().enumerate() {
        let seed = round_seed(config.seed, round);
        outcome.round_seeds.push(seed);
        let cfg = TrainConfig {
            loss: LossConfig { alpha: config.training.alpha, target_f_ab: *target },
            n_steps: config.training.n_steps,
            learning_rate: config.training.learning_rate,
            init_std: config.training.init_std,
            seed,
        };
        let trace = train(&scenario, &cfg)?;
        result_rows.push(six_column_row(&trace.final_report));
    }
    let n = config.noisy.theory_points;
    let mut theory_rows = Vec::with_capacity(n);
    for i in 1..=n {
        let psi = FRAC_PI_2 * i as f64 / n as f64;
        let phi = optimal_phi(psi, &scaling)?;
        let report = imbalanced_centered(psi, phi).scaled(&scaling).to_report();
        theory_rows.push(six_column_row(&report));
    }
    write_artifact(out, &csv(SIX_COLUMN_HEADER, &result_rows), outcome)?;
    write_artifact(&theory_path(out), &csv(SIX_COLUMN_HEADER, &theory_rows), outcome)
}

/// Trains the two-copy collective measurement at the configured Alice/Bob
/// fidelity and writes the resulting report as JSON.
pub fn cmd_collective(config: &Config, out: &Path, outcome: &mut CommandOutcome) -> Result<()> {
    let cfg = CollectiveConfig {
        f_ab: config.collective.f_ab,
        n_steps: config.training.n_steps,
        learning_rate: config.training.learning_rate,
        init_std: config.training.init_std,
        seed: config.seed,
    };
    // One parity trains from the master seed, the other from the next one.
    outcome.round_seeds.push(config.seed);
    outcome.round_seeds.push(config.seed.wrapping_add(1));
    let result = train_collective(&cfg)?;
    write_artifact(out, &to_json(&result.report)?, outcome)
}

/// Sampled-protocol summary: Monte Carlo estimates next to the analytic
/// values they should approach.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ProtocolSimReport {
    pub qber_hat: f64,
    pub eve_match_hat: f64,
    pub n_sifted: u64,
    pub seed: u64,
    pub n_rounds: u64,
    pub qber_expected: f64,
    pub eve_match_expected: f64,
}

/// Samples full protocol rounds under the configured cloning attack and
/// writes observed QBER, Eve match rate, and sift count as JSON alongside
/// their analytic expectations.
pub fn cmd_protocol_sim(config: &Config, out: &Path, outcome: &mut CommandOutcome) -> Result<()> {
    let scenario = pccm_attack(config.protocol.theta, Vec::new())?;
    let sample = monte_carlo_protocol(&scenario, &[], config.protocol.n_rounds, config.seed)?;
    let (f_ab, f_ae) = pccm_fidelities(config.protocol.theta);
    let report = ProtocolSimReport {
        qber_hat: sample.qber_hat,
        eve_match_hat: sample.eve_match_hat,
        n_sifted: sample.n_sifted,
        seed: sample.seed,
        n_rounds: sample.n_rounds,
        qber_expected: 1.0 - f_ab,
        eve_match_expected: f_ae,
    };
    outcome.round_seeds.push(config.seed);
    write_artifact(out, &to_json(&report)?, outcome)
}

fn dispatch(
    command: CommandKind,
    config: &Config,
    out: &Path,
    outcome: &mut CommandOutcome,
) -> Result<()> {
    match command {
        CommandKind::PccmSweep => cmd_pccm_sweep(config, out, outcome),
        CommandKind::TrainIndividual => cmd_train_individual(config, out, outcome),
        CommandKind::TrainNoisy => cmd_train_noisy(config, out, outcome),
        CommandKind::Collective => cmd_collective(config, out, outcome),
        CommandKind::ProtocolSim => cmd_protocol_sim(config, out, outcome),
    }
}

/// Runs one parsed invocation end to end and returns the summary line.
/// The manifest is written in every case; the original command error wins
/// over a manifest write error when both occur.
pub fn execute(cli: &Cli) -> Result<String> {
    let started = Instant::now();
    let out = cli.out.clone().unwrap_or_else(|| cli.command.default_out());
    let mut outcome = CommandOutcome::default();
    let (config, run_result) = match load_config(cli.config.as_deref()) {
        Ok(mut config) => {
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            let result = dispatch(cli.command, &config, &out, &mut outcome);
            (config, result)
        }
        Err(e) => {
            let mut config = Config::default();
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            (config, Err(e))
        }
    };
    let seed = config.seed;
    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        config,
        seed,
        round_seeds: outcome.round_seeds.clone(),
        artifacts: outcome.artifacts.clone(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        error: run_result.as_ref().err().map(|e| one_line(&e.to_string())),
    };
    let manifest_out = manifest_path(&out);
    let manifest_result = to_json(&manifest).and_then(|text| {
        fs::write(&manifest_out, text).map_err(|e| {
            Error::Io(io::Error::new(e.kind(), format!("{}: {e}", manifest_out.display())))
        })
    });
    run_result?;
    manifest_result?;
    let written: Vec<String> = outcome
        .artifacts
        .iter()
        .map(|p| p.display().to_string())
        .collect();
    Ok(format!("{}: wrote {}", cli.command.name(), written.join(", ")))
}

/// Parses the process arguments, runs the command, and returns the exit code.
/// Errors go to stderr as a single `error: ...` line.
pub fn run() -> u8 {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(summary) => {
            if !cli.quiet {
                println!("{summary}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {}", one_line(&e.to_string()));
            1
        }
    }
}
