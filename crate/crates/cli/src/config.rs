use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use steklov_core::optimizer::OptimizerConfig;
use steklov_core::FunctionalParams;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Spectrum,
    Optimize,
    Sweep,
    Testfamily,
    Ellipse,
    Thetastar,
    Export,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Optimize => "optimize",
            Command::Sweep => "sweep",
            Command::Testfamily => "testfamily",
            Command::Ellipse => "ellipse",
            Command::Thetastar => "thetastar",
            Command::Export => "export",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Obj,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub s: f64,
    pub t: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params { s: 1.0, t: 8.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    pub epsilon: Vec<f64>,
    pub t: Vec<f64>,
    pub p: Vec<f64>,
}

impl Default for Grids {
    fn default() -> Self {
        Grids { epsilon: vec![0.003, 0.01, 0.03], t: vec![5.0, 8.0, 12.0, 20.0, 40.0], p: vec![0.4, 0.6, 0.8] }
    }
}

/// Density w = sum cos[k] cos k theta + sin[k] sin k theta.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightSpec {
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec { cos: vec![1.0], sin: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub params: Params,
    pub optimizer: OptimizerConfig,
    pub grids: Grids,
    /// spectrum input
    pub weight: WeightSpec,
    /// starting v = sum c_k cos 2k theta for optimize, sweep and export
    pub initial_log_coeffs: Vec<f64>,
    pub solver_n: usize,
    pub k_max: usize,
    pub theta_star_tolerance: f64,
    pub export_resolution: usize,
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            params: Params::default(),
            optimizer: OptimizerConfig::default(),
            grids: Grids::default(),
            weight: WeightSpec::default(),
            initial_log_coeffs: vec![0.2],
            solver_n: 64,
            k_max: 8,
            theta_star_tolerance: 0.05,
            export_resolution: 64,
            output_dir: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json, Format::Obj],
        }
    }
}

fn strictly_increasing(name: &str, g: &[f64]) -> Result<(), CliError> {
    if g.is_empty() {
        return Err(CliError::Config(format!("grids.{name} is empty")));
    }
    if g.iter().any(|x| !x.is_finite()) || g.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CliError::Config(format!("grids.{name} must be strictly increasing")));
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn functional_params(&self) -> Result<FunctionalParams, CliError> {
        FunctionalParams::new(self.params.s, self.params.t).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Schema checks that do not depend on running an experiment.
    pub fn validate(&self, command: Command) -> Result<(), CliError> {
        if let Some(c) = self.command {
            if c != command {
                return Err(CliError::Config(format!(
                    "config is for `{}` but `{}` was requested",
                    c.name(),
                    command.name()
                )));
            }
        }
        self.functional_params()?;
        self.optimizer.validate().map_err(|e| CliError::Config(e.to_string()))?;
        match command {
            Command::Sweep => strictly_increasing("t", &self.grids.t)?,
            Command::Testfamily => {
                strictly_increasing("epsilon", &self.grids.epsilon)?;
                if self.grids.epsilon.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
                    return Err(CliError::Config("grids.epsilon must lie in (0, 1)".into()));
                }
            }
            Command::Ellipse => {
                strictly_increasing("p", &self.grids.p)?;
                if self.grids.p.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
                    return Err(CliError::Config("grids.p must lie in (0, 1]".into()));
                }
            }
            Command::Thetastar => {
                if !(self.theta_star_tolerance > 0.0) {
                    return Err(CliError::Config("theta_star_tolerance must be positive".into()));
                }
            }
            Command::Spectrum => {
                if self.weight.cos.is_empty() {
                    return Err(CliError::Config("weight.cos needs at least the constant term".into()));
                }
            }
            Command::Export if self.export_resolution == 0 => {
                return Err(CliError::Config("export_resolution must be positive".into()));
            }
            _ => {}
        }
        if self.formats.is_empty() {
            return Err(CliError::Config("formats is empty".into()));
        }
        Ok(())
    }

    /// SHA-256 of the resolved experiment, output location excluded.
    pub fn hash(&self, command: Command) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        let obj = v.as_object_mut().expect("config is an object");
        obj.shift_remove("output_dir");
        obj.insert("command".into(), serde_json::Value::String(command.name().into()));
        obj.insert("version".into(), serde_json::Value::String(crate::VERSION.into()));
        format!("{:x}", Sha256::digest(v.to_string().as_bytes()))
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}
