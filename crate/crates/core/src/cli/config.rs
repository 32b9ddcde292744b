use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{QuadratureRule, DEFAULT_HALF_WIDTH, DEFAULT_PANELS, DEFAULT_POINTS_PER_PANEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    MiCurve,
    MmseCurve,
    Amp,
    Se,
    OracleSuite,
    SbmSample,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::MiCurve => "mi-curve",
            Command::MmseCurve => "mmse-curve",
            Command::Amp => "amp",
            Command::Se => "se",
            Command::OracleSuite => "oracle-suite",
            Command::SbmSample => "sbm-sample",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Sweep {
    Lambda,
    Theta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Spiked,
    Sbm,
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub steps: usize,
    pub eps: f64,
    pub n: usize,
    pub pbar: f64,
    pub seed: u64,
    /// Panels of the composite Gauss–Legendre rule.
    pub quad_order: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub mc_samples: usize,
    pub iters: usize,
    pub format: Format,
    pub out: PathBuf,
    pub sweep: Sweep,
    pub model: Model,
}

/// Optional overrides, shared by the command line and the TOML file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Smallest λ (or θ) of the sweep.
    #[arg(long)]
    pub lambda_min: Option<f64>,
    /// Largest λ (or θ) of the sweep; the operating point of `amp`, `se`,
    /// `oracle-suite` and `sbm-sample`.
    #[arg(long)]
    pub lambda_max: Option<f64>,
    /// Sets both ends of the λ range.
    #[arg(long, conflicts_with_all = ["lambda_min", "lambda_max"])]
    #[serde(skip)]
    pub lambda: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Probability that a label is revealed.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Average edge density of the block model.
    #[arg(long)]
    pub pbar: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Panels of the composite quadrature rule (8 nodes each).
    #[arg(long)]
    pub quad_order: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub mc_samples: Option<usize>,
    /// AMP / state-evolution iterations.
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output data file; the manifest goes to `<out>.manifest.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sweep variable of `mi-curve`.
    #[arg(long, value_enum)]
    pub sweep: Option<Sweep>,
    /// Input model of `amp`.
    #[arg(long, value_enum)]
    pub model: Option<Model>,
}

#[derive(Debug, Parser)]
#[command(name = "sbminfo", version, about = "Information limits of two-community detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Per-vertex mutual information curve with metric bounds.
    MiCurve(CommandArgs),
    /// Asymptotic estimation-error curves, optionally with exact finite-n values.
    MmseCurve(CommandArgs),
    /// AMP trajectory against state evolution.
    Amp(CommandArgs),
    /// State-evolution recursion.
    Se(CommandArgs),
    /// Exact small-n identity checks.
    OracleSuite(CommandArgs),
    /// Sample a block-model graph.
    SbmSample(CommandArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommandArgs {
    /// TOML file with defaults; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

impl CliCommand {
    pub fn split(self) -> (Command, CommandArgs) {
        match self {
            CliCommand::MiCurve(a) => (Command::MiCurve, a),
            CliCommand::MmseCurve(a) => (Command::MmseCurve, a),
            CliCommand::Amp(a) => (Command::Amp, a),
            CliCommand::Se(a) => (Command::Se, a),
            CliCommand::OracleSuite(a) => (Command::OracleSuite, a),
            CliCommand::SbmSample(a) => (Command::SbmSample, a),
        }
    }
}

impl Overrides {
    /// Fields set in `self` win over those in `base`.
    fn over(self, base: Overrides) -> Overrides {
        let (lambda_min, lambda_max) = match self.lambda {
            Some(l) => (Some(l), Some(l)),
            None => (self.lambda_min, self.lambda_max),
        };
        Overrides {
            lambda_min: lambda_min.or(base.lambda_min),
            lambda_max: lambda_max.or(base.lambda_max),
            lambda: None,
            steps: self.steps.or(base.steps),
            eps: self.eps.or(base.eps),
            n: self.n.or(base.n),
            pbar: self.pbar.or(base.pbar),
            seed: self.seed.or(base.seed),
            quad_order: self.quad_order.or(base.quad_order),
            tol: self.tol.or(base.tol),
            max_iter: self.max_iter.or(base.max_iter),
            mc_samples: self.mc_samples.or(base.mc_samples),
            iters: self.iters.or(base.iters),
            format: self.format.or(base.format),
            out: self.out.or(base.out),
            sweep: self.sweep.or(base.sweep),
            model: self.model.or(base.model),
        }
    }
}

pub fn read_overrides(path: &Path) -> Result<Overrides> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::param("config", format!("{}: {e}", path.display())))
}

impl ExperimentConfig {
    /// Merges flags over the optional config file over per-command defaults,
    /// then validates.
    pub fn resolve(command: Command, args: CommandArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => read_overrides(p)?,
            None => Overrides::default(),
        };
        Self::from_overrides(command, args.overrides.over(file))
    }

    pub fn from_overrides(command: Command, o: Overrides) -> Result<Self> {
        let single_point = matches!(command, Command::Amp | Command::Se | Command::OracleSuite | Command::SbmSample);
        let (lmin_default, lmax_default) = match command {
            Command::MiCurve | Command::MmseCurve => (0.0, 4.0),
            Command::OracleSuite => (2.0, 2.0),
            _ => (4.0, 4.0),
        };
        let lambda_max = o.lambda_max.unwrap_or(lmax_default);
        let lambda_min = o
            .lambda_min
            .unwrap_or(if single_point { lambda_max } else { lmin_default });
        let format = o.format.unwrap_or(Format::Csv);
        let cfg = Self {
            command,
            lambda_min,
            lambda_max,
            steps: o
                .steps
                .unwrap_or(if single_point || lambda_min == lambda_max { 1 } else { 81 }),
            eps: o.eps.unwrap_or(match command {
                Command::Amp | Command::Se => 0.05,
                Command::OracleSuite => 0.1,
                _ => 0.0,
            }),
            n: o.n.unwrap_or(match command {
                Command::OracleSuite => 10,
                Command::Amp => 2000,
                _ => 1000,
            }),
            pbar: o.pbar.unwrap_or(0.5),
            seed: o.seed.unwrap_or(0),
            quad_order: o.quad_order.unwrap_or(DEFAULT_PANELS),
            tol: o.tol.unwrap_or(1e-12),
            max_iter: o.max_iter.unwrap_or(100_000),
            mc_samples: o.mc_samples.unwrap_or(2000),
            iters: o.iters.unwrap_or(if command == Command::Amp { 10 } else { 25 }),
            format,
            out: o
                .out
                .unwrap_or_else(|| PathBuf::from(format!("{}.{}", command.name(), format.extension()))),
            sweep: o.sweep.unwrap_or(Sweep::Lambda),
            model: o.model.unwrap_or(Model::Spiked),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be finite, got {v}")))
            }
        };
        finite("lambda_min", self.lambda_min)?;
        finite("lambda_max", self.lambda_max)?;
        if self.lambda_min < 0.0 {
            return Err(Error::param("lambda_min", format!("must be >= 0, got {}", self.lambda_min)));
        }
        if self.lambda_min > self.lambda_max {
            return Err(Error::param(
                "lambda_min",
                format!("exceeds lambda_max ({} > {})", self.lambda_min, self.lambda_max),
            ));
        }
        if self.steps == 0 {
            return Err(Error::param("steps", "must be at least 1"));
        }
        if self.steps > 1 && self.lambda_min == self.lambda_max {
            return Err(Error::param("steps", "several grid points need lambda_min < lambda_max"));
        }
        if !(0.0..=1.0).contains(&self.eps) {
            return Err(Error::param("eps", format!("must lie in [0, 1], got {}", self.eps)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("tol", format!("must be positive, got {}", self.tol)));
        }
        if self.quad_order == 0 {
            return Err(Error::param("quad_order", "must be at least 1"));
        }
        if self.max_iter == 0 || self.iters == 0 || self.mc_samples < 2 {
            return Err(Error::param("max_iter, iters, mc_samples", "must be positive (mc_samples >= 2)"));
        }
        if !(self.pbar > 0.0 && self.pbar < 1.0) {
            return Err(Error::param("pbar", format!("must lie in (0, 1), got {}", self.pbar)));
        }
        match self.command {
            Command::Amp if self.eps <= 0.0 => Err(Error::param(
                "eps",
                "AMP needs eps > 0: with no revealed labels the first iterate is identically zero",
            )),
            Command::Amp | Command::Se if self.lambda_max <= 0.0 => {
                Err(Error::param("lambda", "must be > 0"))
            }
            Command::Amp | Command::SbmSample if self.n < 2 => {
                Err(Error::param("n", "need at least 2 vertices"))
            }
            _ => Ok(()),
        }
    }

    pub fn rule(&self) -> Result<QuadratureRule> {
        QuadratureRule::composite(DEFAULT_HALF_WIDTH, self.quad_order, DEFAULT_POINTS_PER_PANEL)
    }

    /// Grid `lambda_min + k·(lambda_max − lambda_min)/(steps − 1)`.
    pub fn grid(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lambda_min];
        }
        let h = (self.lambda_max - self.lambda_min) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| if k + 1 == self.steps { self.lambda_max } else { self.lambda_min + k as f64 * h })
            .collect()
    }

    pub fn manifest_path(&self) -> PathBuf {
        let mut s = self.out.clone().into_os_string();
        s.push(".manifest.json");
        PathBuf::from(s)
    }
}
