//! Experiment configuration: `[section]` headers with `key = value` pairs.
//!
//! A file only needs the keys it overrides. Parsing merges it onto the
//! defaults of its command and mode; the merged result is what runs and what
//! the manifest echoes, so a manifest parses back to the identical config.

use std::fmt;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use stablekern::drift_flow::DriftSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    DensityEval,
    CertifyKernelBounds,
    RateKernel,
    ParametrixBuild,
    RateSde,
    RateInvariant,
    InvariantMoments,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::DensityEval => "density-eval",
            Command::CertifyKernelBounds => "certify-kernel-bounds",
            Command::RateKernel => "rate-kernel",
            Command::ParametrixBuild => "parametrix-build",
            Command::RateSde => "rate-sde",
            Command::RateInvariant => "rate-invariant",
            Command::InvariantMoments => "invariant-moments",
        }
    }

    /// Accepted values of `experiment.mode`; the first is the default.
    pub fn modes(&self) -> &'static [&'static str] {
        match self {
            Command::DensityEval => &["oracle", "scaling"],
            Command::CertifyKernelBounds => &["uniform", "inequalities"],
            Command::RateKernel => &["density", "generator"],
            Command::ParametrixBuild => &["build"],
            Command::RateSde => &["continuity"],
            Command::RateInvariant => &["exact", "monte-carlo"],
            Command::InvariantMoments => &["sweep"],
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::value_variants().iter().copied().find(|c| c.name() == s)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub command: Command,
    pub mode: String,
    pub alphas: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSection {
    /// One of `zero`, `constant`, `ou`, `sin`, `bump`.
    pub name: String,
    /// Perturbation amplitude (or the constant for `constant`).
    pub a: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub times: Vec<f64>,
    pub x_max: f64,
    pub n_x: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametrixSection {
    pub horizon: f64,
    /// `0` picks `10·max(T^{1/α}, 1)` for the smallest α.
    pub half_width: f64,
    pub n_x: usize,
    pub n_t: usize,
    pub n_max: usize,
    pub tail_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantSection {
    pub t_burn: f64,
    pub t_sample: f64,
    pub n_steps: usize,
    pub n_chains: usize,
    pub x_max: f64,
    pub n_x: usize,
    /// Exponent of the weight `1 + |x|^p`.
    pub p: f64,
    /// Moment order for `invariant-moments`.
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    /// Random draws for property sweeps (scaling triples, (3P) draws).
    pub draws: usize,
    /// Monte Carlo sample size for moment identities.
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub oracle_rel: f64,
    pub fourier_abs: f64,
    pub scaling_rel: f64,
    pub ratio_spread: f64,
    pub slope_tol: f64,
    pub r_squared_min: f64,
    pub generator_slope_tol: f64,
    pub spectral_abs: f64,
    pub quadrature: f64,
    pub kernel_l1: f64,
    pub chapman_kolmogorov: f64,
    pub sde_slope_min: f64,
    pub lower_bound_abs: f64,
    pub invariant_l1: f64,
    pub moment_spread: f64,
    pub mc_sigmas: f64,
    pub power_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Write plot-ready CSV slices.
    pub slices: bool,
    /// Write binary kernel panels (parametrix commands).
    pub panels: bool,
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub drift: DriftSection,
    pub grid: GridSection,
    pub parametrix: ParametrixSection,
    pub invariant: InvariantSection,
    pub sampling: SamplingSection,
    pub tolerances: Tolerances,
    pub output: OutputSection,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("config key `{key}`: {msg}")]
    Key { key: String, msg: String },
}

fn key_err(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Key {
        key: key.to_string(),
        msg: msg.into(),
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            oracle_rel: 1e-8,
            fourier_abs: 1e-15,
            scaling_rel: 1e-10,
            ratio_spread: 3.0,
            slope_tol: 0.05,
            r_squared_min: 0.99,
            generator_slope_tol: 0.1,
            spectral_abs: 1e-6,
            quadrature: 1e-10,
            kernel_l1: 1e-2,
            chapman_kolmogorov: 2e-2,
            sde_slope_min: 0.8,
            lower_bound_abs: 1e-10,
            invariant_l1: 0.03,
            moment_spread: 4.0,
            mc_sigmas: 4.0,
            power_rel: 1e-6,
        }
    }
}

impl ExperimentConfig {
    /// Defaults for a command and mode (mode `""` means the command's first).
    pub fn defaults(command: Command, mode: &str) -> Self {
        let mode = if mode.is_empty() { command.modes()[0] } else { mode };
        let alphas: Vec<f64> = match (command, mode) {
            (Command::DensityEval, "scaling") => vec![0.5, 1.0, 1.5, 1.9, 2.0],
            (Command::DensityEval, _) => vec![1.0, 2.0],
            (Command::CertifyKernelBounds, "inequalities") => vec![1.0, 1.5],
            (Command::CertifyKernelBounds, _) => vec![0.5, 1.0, 1.5, 1.9, 1.99, 2.0],
            (Command::RateKernel, _) => vec![1.90, 1.95, 1.98, 1.99, 1.995],
            (Command::ParametrixBuild, _) => vec![1.9, 2.0],
            (Command::RateSde, _) => vec![1.90, 1.95, 1.98],
            (Command::RateInvariant, "monte-carlo") => vec![1.9],
            (Command::RateInvariant, _) => vec![1.90, 1.95, 1.98, 1.99, 1.995],
            (Command::InvariantMoments, _) => vec![1.25, 1.5, 1.9, 2.0],
        };
        let grid = match (command, mode) {
            (Command::DensityEval, _) => GridSection {
                times: vec![0.1, 1.0, 10.0],
                x_max: 20.0,
                n_x: 401,
            },
            (Command::CertifyKernelBounds, _) => GridSection {
                times: vec![0.1, 1.0],
                x_max: 50.0,
                n_x: 1001,
            },
            (Command::RateKernel, "generator") => GridSection {
                times: vec![1.0],
                x_max: 4.0,
                n_x: 81,
            },
            _ => GridSection {
                times: vec![1.0],
                x_max: 50.0,
                n_x: 501,
            },
        };
        let drift = match command {
            Command::RateSde => DriftSection {
                name: "bump".into(),
                a: 0.5,
                beta: 0.5,
            },
            _ => DriftSection {
                name: "ou".into(),
                a: 0.5,
                beta: 0.5,
            },
        };
        let (x_max, n_x) = match (command, mode) {
            (Command::RateInvariant, "exact") => (100.0, 20001),
            _ => (20.0, 801),
        };
        Self {
            experiment: ExperimentSection {
                command,
                mode: mode.to_string(),
                alphas,
                seed: 1,
            },
            drift,
            grid,
            parametrix: ParametrixSection {
                horizon: 0.5,
                half_width: 0.0,
                n_x: stablekern::parametrix::DEFAULT_NX,
                n_t: stablekern::parametrix::DEFAULT_NT,
                n_max: 30,
                tail_tol: 1e-4,
            },
            invariant: InvariantSection {
                t_burn: 20.0,
                t_sample: 200.0,
                n_steps: 128,
                n_chains: 64,
                x_max,
                n_x,
                p: 0.5,
                gamma: 0.5,
            },
            sampling: SamplingSection {
                draws: if command == Command::CertifyKernelBounds { 10_000 } else { 1000 },
                samples: 200_000,
            },
            tolerances: Tolerances::default(),
            output: OutputSection {
                slices: true,
                panels: true,
            },
        }
    }

    /// Parses a config file, merging it onto the defaults of its command.
    /// `cli_command` is the command named on the command line, if any.
    pub fn parse(text: &str, cli_command: Option<Command>) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        table.remove("manifest");
        let exp = match table.get("experiment") {
            None => None,
            Some(toml::Value::Table(t)) => Some(t.clone()),
            Some(_) => return Err(key_err("experiment", "must be a [section]")),
        };
        let file_command = match exp.as_ref().and_then(|t| t.get("command")) {
            None => None,
            Some(toml::Value::String(s)) => {
                Some(Command::parse(s).ok_or_else(|| key_err("experiment.command", format!("unknown command `{s}`")))?)
            }
            Some(_) => return Err(key_err("experiment.command", "must be a string")),
        };
        let command = match (file_command, cli_command) {
            (Some(f), Some(c)) if f != c => {
                return Err(key_err(
                    "experiment.command",
                    format!("config is for `{f}` but `{c}` was requested"),
                ))
            }
            (Some(f), _) => f,
            (None, Some(c)) => c,
            (None, None) => return Err(key_err("experiment.command", "missing")),
        };
        let mode = match exp.as_ref().and_then(|t| t.get("mode")) {
            None => String::new(),
            Some(toml::Value::String(s)) => s.clone(),
            Some(_) => return Err(key_err("experiment.mode", "must be a string")),
        };
        if !mode.is_empty() && !command.modes().contains(&mode.as_str()) {
            return Err(key_err(
                "experiment.mode",
                format!("`{mode}` is not a mode of `{command}` (expected one of {:?})", command.modes()),
            ));
        }
        let defaults = Self::defaults(command, &mode);
        let mut merged = toml::Table::try_from(&defaults).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        for (section, value) in table {
            let toml::Value::Table(entries) = value else {
                return Err(key_err(&section, "top-level keys must be [sections]"));
            };
            let Some(toml::Value::Table(target)) = merged.get_mut(&section) else {
                return Err(key_err(&section, "unknown section"));
            };
            for (k, v) in entries {
                if !target.contains_key(&k) {
                    return Err(key_err(&format!("{section}.{k}"), "unknown key"));
                }
                target.insert(k, v);
            }
        }
        let cfg: Self = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn drift_spec(&self) -> Result<DriftSpec, ConfigError> {
        let d = &self.drift;
        DriftSpec::from_name(&d.name, d.a, d.beta).map_err(|e| key_err("drift.name", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let command = self.experiment.command;
        let alphas = &self.experiment.alphas;
        if alphas.is_empty() {
            return Err(key_err("experiment.alphas", "empty alpha list"));
        }
        let (lo, hi, lo_open, hi_open) = match command {
            Command::RateKernel => (0.0, 2.0, true, true),
            Command::RateSde => (12.0 / 7.0, 2.0, true, true),
            Command::ParametrixBuild => (1.0, 2.0, true, false),
            _ => (0.0, 2.0, true, false),
        };
        for &a in alphas {
            let above = if lo_open { a > lo } else { a >= lo };
            let below = if hi_open { a < hi } else { a <= hi };
            if !(above && below) {
                let l = if lo_open { "(" } else { "[" };
                let r = if hi_open { ")" } else { "]" };
                return Err(key_err(
                    "experiment.alphas",
                    format!("alpha {a} outside {l}{lo}, {hi}{r} required by `{command}`"),
                ));
            }
        }
        if matches!(command, Command::RateInvariant | Command::RateKernel) && self.experiment.mode != "monte-carlo" {
            if alphas.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(key_err("experiment.alphas", "rate sweeps need strictly increasing alphas"));
            }
        }
        let drift = self.drift_spec()?;
        if matches!(command, Command::RateInvariant | Command::InvariantMoments) && drift.dissipative.is_none() {
            return Err(key_err(
                "drift.name",
                format!("`{}` has no dissipativity certificate", self.drift.name),
            ));
        }
        if command == Command::RateInvariant && self.experiment.mode == "exact" && drift.affine() != Some((-1.0, 0.0)) {
            return Err(key_err("drift.name", "exact invariant rates need the OU drift `ou`"));
        }
        let g = &self.grid;
        if g.times.is_empty() || g.times.iter().any(|t| !(*t > 0.0)) {
            return Err(key_err("grid.times", "need positive times"));
        }
        if !(g.x_max > 0.0) || g.n_x < 3 {
            return Err(key_err("grid", "need x_max > 0 and n_x >= 3"));
        }
        let p = &self.parametrix;
        if !(p.horizon > 0.0) || p.n_x < 5 || p.n_t < 3 || (p.n_t - 1) % 2 != 0 {
            return Err(key_err("parametrix", "need horizon > 0, n_x >= 5 and odd n_t >= 3"));
        }
        if !(p.half_width >= 0.0) || !(p.tail_tol > 0.0) {
            return Err(key_err("parametrix", "half_width must be >= 0 and tail_tol > 0"));
        }
        let inv = &self.invariant;
        if !(inv.p > 0.0 && inv.p < 2.0) {
            return Err(key_err("invariant.p", "must lie in (0, 2)"));
        }
        if !(inv.gamma > 0.0 && inv.gamma < 2.0) {
            return Err(key_err("invariant.gamma", "must lie in (0, 2)"));
        }
        if inv.n_chains < 2 || inv.n_steps == 0 || !(inv.t_sample > 0.0) || !(inv.t_burn >= 0.0) {
            return Err(key_err("invariant", "need n_chains >= 2, n_steps >= 1 and positive times"));
        }
        if !(inv.x_max > 0.0) || inv.n_x < 3 {
            return Err(key_err("invariant", "need x_max > 0 and n_x >= 3"));
        }
        if self.sampling.draws == 0 || self.sampling.samples < 1000 {
            return Err(key_err("sampling", "need draws >= 1 and samples >= 1000"));
        }
        Ok(())
    }

    /// Manifest text: the resolved config plus a `[manifest]` section.
    pub fn manifest(&self, timestamp: u64) -> String {
        let body = toml::to_string(self).expect("config serializes");
        format!(
            "{body}\n[manifest]\nversion = \"{}\"\ntimestamp = {timestamp}\n",
            version_string()
        )
    }
}

/// `stablekern-v<crate version>`.
pub fn version_string() -> String {
    format!("stablekern-v{}", env!("CARGO_PKG_VERSION"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_resolves_defaults() {
        let cfg = ExperimentConfig::parse("[experiment]\ncommand = \"rate-kernel\"\n", None).unwrap();
        assert_eq!(cfg, ExperimentConfig::defaults(Command::RateKernel, ""));
        assert_eq!(cfg.experiment.mode, "density");
    }

    #[test]
    fn command_mismatch_is_rejected() {
        let err = ExperimentConfig::parse("[experiment]\ncommand = \"rate-sde\"\n", Some(Command::RateKernel)).unwrap_err();
        assert!(err.to_string().contains("experiment.command"));
    }

    #[test]
    fn unknown_keys_name_the_key() {
        let err = ExperimentConfig::parse("[grid]\nx_mx = 3.0\n", Some(Command::DensityEval)).unwrap_err();
        assert!(err.to_string().contains("grid.x_mx"), "{err}");
        let err = ExperimentConfig::parse("[gird]\nx_max = 3.0\n", Some(Command::DensityEval)).unwrap_err();
        assert!(err.to_string().contains("gird"), "{err}");
    }

    #[test]
    fn empty_alpha_list_is_a_usage_error() {
        let err = ExperimentConfig::parse("[experiment]\nalphas = []\n", Some(Command::RateInvariant)).unwrap_err();
        assert!(err.to_string().contains("experiment.alphas"));
    }

    #[test]
    fn alpha_ranges_per_command() {
        assert!(ExperimentConfig::parse("[experiment]\nalphas = [1.5, 1.9]\n", Some(Command::RateSde)).is_err());
        assert!(ExperimentConfig::parse("[experiment]\nalphas = [1.9, 2.0]\n", Some(Command::RateKernel)).is_err());
        assert!(ExperimentConfig::parse("[experiment]\nalphas = [0.5, 1.0]\n", Some(Command::DensityEval)).is_ok());
    }

    #[test]
    fn invariant_commands_need_dissipative_drift() {
        let err = ExperimentConfig::parse("[drift]\nname = \"zero\"\n", Some(Command::InvariantMoments)).unwrap_err();
        assert!(err.to_string().contains("dissipativity"));
    }
}
