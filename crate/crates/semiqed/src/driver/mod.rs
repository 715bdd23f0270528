//! Experiment driver: config ingestion, command dispatch, deterministic
//! artifact emission.
//!
//! Commands read one structured config file; only the output directory and
//! the seed may be overridden on the command line. All numeric output is
//! printed with 17 significant digits so that a fixed config and seed
//! reproduce byte-identical CSV/JSON artifacts (wall-clock timing goes to
//! its own file).

pub mod commands;
pub mod report;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{ModeModel, ModelConfig};
use crate::phasespace::PhasePoint;

pub use report::{CheckResult, RunReport};

/// Which experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandName {
    BuildModes,
    Expand,
    Compare,
    Transition,
    Checks,
}

impl CommandName {
    pub fn as_str(&self) -> &'static str {
        match self {
            CommandName::BuildModes => "build_modes",
            CommandName::Expand => "expand",
            CommandName::Compare => "compare",
            CommandName::Transition => "transition",
            CommandName::Checks => "checks",
        }
    }
}

/// Where the mode model comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    File { file: PathBuf },
    Inline { inline: ModelConfig },
}

impl ModelSource {
    pub fn load(&self) -> Result<ModeModel> {
        match self {
            ModelSource::File { file } => {
                let text = std::fs::read_to_string(file)?;
                ModeModel::from_json(&text)
            }
            ModelSource::Inline { inline } => crate::modes::build_mode_model(inline),
        }
    }
}

/// Fock truncation parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Truncation {
    pub n_max: usize,
    pub interior_margin: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation {
            n_max: 8,
            interior_margin: 2,
        }
    }
}

/// A phase point in the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointConfig {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PointConfig {
    pub fn to_point(&self) -> Result<PhasePoint> {
        if self.q.len() != self.p.len() {
            return Err(Error::Config("phase point q/p length mismatch".into()));
        }
        Ok(PhasePoint::new(
            ndarray::Array1::from_vec(self.q.clone()),
            ndarray::Array1::from_vec(self.p.clone()),
        ))
    }
}

/// Transition-scan parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct TransitionConfig {
    /// Number of sampled target points (≥ 25).
    pub y_samples: usize,
    /// Half-width of the sampling box around `χ_t(X)`.
    pub y_radius: f64,
    /// Spin basis indices of the prepared and detected states.
    pub spin_a: usize,
    pub spin_b: usize,
}

impl Default for TransitionConfig {
    fn default() -> Self {
        TransitionConfig {
            y_samples: 30,
            y_radius: 0.5,
            spin_a: 0,
            spin_b: 0,
        }
    }
}

/// Pass/fail thresholds. Every field must be finite and nonnegative;
/// tightening one to zero makes the corresponding check fail and shows up
/// isolated in the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub solver: f64,
    /// Zero-coupling exactness (Larmor, Gaussian control).
    pub exactness: f64,
    pub ccr: f64,
    pub flow: f64,
    /// `modulus ≥ 1 - deficit · tail` for coherent transport.
    pub transport_modulus_deficit: f64,
    pub conjugation: f64,
    pub cocycle: f64,
    pub sensitivity: f64,
    pub commutator_rel: f64,
    pub beals_shell: f64,
    pub frame_zero: f64,
    pub frame_full: f64,
    pub frame_algebra: f64,
    pub fit_noise: f64,
    pub truncation_budget: f64,
    pub order0_window: [f64; 2],
    pub order1_window: [f64; 2],
    pub beals_slope_window: [f64; 2],
    pub maxwell_order_window: [f64; 2],
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            solver: 1e-10,
            exactness: 1e-9,
            ccr: 1e-12,
            flow: 1e-12,
            transport_modulus_deficit: 10.0,
            conjugation: 1e-8,
            cocycle: 1e-8,
            sensitivity: 1e-6,
            commutator_rel: 0.05,
            beals_shell: 0.1,
            frame_zero: 1e-8,
            frame_full: 1e-6,
            frame_algebra: 1e-12,
            fit_noise: 1e-6,
            truncation_budget: 0.1,
            order0_window: [0.8, 1.2],
            order1_window: [1.7, 2.3],
            beals_slope_window: [0.8, 1.2],
            maxwell_order_window: [1.7, 2.3],
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let scalars = [
            self.solver,
            self.exactness,
            self.ccr,
            self.flow,
            self.transport_modulus_deficit,
            self.conjugation,
            self.cocycle,
            self.sensitivity,
            self.commutator_rel,
            self.beals_shell,
            self.frame_zero,
            self.frame_full,
            self.frame_algebra,
            self.fit_noise,
            self.truncation_budget,
        ];
        if scalars.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config(
                "tolerances must be finite and nonnegative".into(),
            ));
        }
        if self.solver == 0.0 {
            return Err(Error::Config("solver tolerance must be positive".into()));
        }
        for w in [
            self.order0_window,
            self.order1_window,
            self.beals_slope_window,
            self.maxwell_order_window,
        ] {
            if !(w[0] < w[1]) {
                return Err(Error::Config("slope windows need lo < hi".into()));
            }
        }
        Ok(())
    }
}

/// One experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandName,
    pub model: ModelSource,
    #[serde(default)]
    pub truncation: Truncation,
    #[serde(default)]
    pub h_grid: Vec<f64>,
    #[serde(default)]
    pub t_grid: Vec<f64>,
    #[serde(default)]
    pub phase_points: Vec<PointConfig>,
    /// Expansion order for `expand`/`compare` (≤ 2).
    #[serde(default = "default_order")]
    pub expansion_order: usize,
    #[serde(default)]
    pub transition: TransitionConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

fn default_order() -> usize {
    1
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: RunConfig = serde_json::from_str(&text)?;
        config.tolerances.validate()?;
        Ok(config)
    }
}

/// Serialize any value as JSON with 17-significant-digit floats.
pub fn to_stable_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut out, crate::modes::SigDigitFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("JSON output is UTF-8"))
}

/// Fixed-format float for CSV cells: 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Output directory with atomic file writes (temp + rename) and an artifact
/// list.
pub struct OutputWriter {
    dir: PathBuf,
    artifacts: Vec<String>,
}

impl OutputWriter {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(OutputWriter {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let tmp = self.dir.join(format!("{name}.tmp"));
        let target = self.dir.join(name);
        std::fs::write(&tmp, contents)?;
        std::fs::rename(&tmp, &target)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn artifacts(&self) -> &[String] {
        &self.artifacts
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

/// Configure the global thread pool from `SEMIQED_THREADS` (best effort;
/// later calls are no-ops once a pool exists).
pub fn init_threads() {
    if let Ok(value) = std::env::var("SEMIQED_THREADS") {
        if let Ok(n) = value.trim().parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
}

/// Run a command end to end: dispatch, write `report.json` and
/// `timing.json`, and return the report. A report is written even when the
/// command fails; the failure stage is recorded inside it.
pub fn run(
    config: &RunConfig,
    out_override: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<RunReport> {
    init_threads();
    let started = std::time::Instant::now();
    let seed = seed_override.unwrap_or(config.seed);
    let out_dir = out_override
        .map(Path::to_path_buf)
        .or_else(|| config.out_dir.clone())
        .ok_or_else(|| {
            Error::Config("no output directory (config `out_dir` or --out)".into())
        })?;
    let mut writer = OutputWriter::new(&out_dir)?;

    let echo = serde_json::to_value(config)?;
    let mut report = RunReport::new(config.command.as_str(), seed, echo);

    let outcome = match config.command {
        CommandName::BuildModes => {
            commands::cmd_build_modes(config, seed, &mut writer, &mut report)
        }
        CommandName::Expand => commands::cmd_expand(config, seed, &mut writer, &mut report),
        CommandName::Compare => commands::cmd_compare(config, seed, &mut writer, &mut report),
        CommandName::Transition => {
            commands::cmd_transition(config, seed, &mut writer, &mut report)
        }
        CommandName::Checks => commands::cmd_checks(config, seed, &mut writer, &mut report),
    };
    if let Err(err) = outcome {
        report.fail_stage(err.to_string());
    }
    report.artifacts = writer.artifacts().to_vec();
    report.artifacts.push("report.json".to_string());
    report.wall_clock_seconds = started.elapsed().as_secs_f64();

    let report_json = to_stable_json(&report)?;
    writer.write("report.json", &report_json)?;
    Ok(report)
}
