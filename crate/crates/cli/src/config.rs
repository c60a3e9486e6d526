//! Job configuration: a JSON file merged with command-line flags.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use qhardy::hardy::{Exponent, QuadratureSpec};
use qhardy::{ImaginaryUnit, Quaternion};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Eval,
    Norm,
    Zeros,
    Blaschke,
    Factor,
    Trace,
}

/// How `blaschke` treats its zero sequence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BlaschkeMode {
    /// Plain left-to-right product of the factors.
    #[default]
    Product,
    /// Centers moved so that the product vanishes at every target.
    Prescribed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub command: Command,
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub points: Vec<Quaternion>,
    #[serde(default)]
    pub p: Option<Exponent>,
    #[serde(default)]
    pub unit: Option<ImaginaryUnit>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub truncation: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: BlaschkeMode,
}

/// Flags shared by every subcommand; each one overrides the config file.
#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// JSON job configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input file (a series, or a zero list for `blaschke`)
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output file; standard output when absent
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Exponent, a positive number or `inf`
    #[arg(long)]
    pub p: Option<Exponent>,
    /// Imaginary unit as `w,x,y,z`
    #[arg(long, allow_hyphen_values = true)]
    pub unit: Option<String>,
    /// Evaluation point as `w,x,y,z` (repeatable)
    #[arg(long = "at", allow_hyphen_values = true)]
    pub at: Vec<String>,
    /// Trapezoid nodes per circle
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Comma-separated radii in `[0, 1)`
    #[arg(long)]
    pub rgrid: Option<String>,
    /// Truncation degree for infinite products and inverses
    #[arg(long)]
    pub truncation: Option<usize>,
    /// Seed for sampled units
    #[arg(long)]
    pub seed: Option<u64>,
    /// Blaschke construction
    #[arg(long, value_enum)]
    pub mode: Option<BlaschkeMode>,
}

pub fn parse_quaternion(text: &str, what: &str) -> Result<Quaternion, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(CliError::Input(format!("{what}: expected w,x,y,z, got {text:?}")));
    }
    let mut v = [0.0; 4];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part.parse().map_err(|_| CliError::Input(format!("{what}: {part:?} is not a number")))?;
    }
    Ok(Quaternion::from_array(v))
}

fn parse_rgrid(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().map_err(|_| CliError::Input(format!("rgrid: {s:?} is not a number"))))
        .collect()
}

impl JobConfig {
    pub fn new(command: Command) -> Self {
        JobConfig {
            command,
            input: None,
            output: None,
            points: Vec::new(),
            p: None,
            unit: None,
            quadrature: QuadratureSpec::default(),
            truncation: None,
            seed: 0,
            mode: BlaschkeMode::default(),
        }
    }

    /// Loads the config file if given, then applies the flags.
    pub fn resolve(command: Command, args: &CommonArgs) -> Result<Self, CliError> {
        let mut cfg = match &args.config {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                let cfg: JobConfig =
                    qhardy::io::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                if cfg.command != command {
                    return Err(CliError::Input(format!(
                        "{}: config is for {:?}, not {:?}",
                        path.display(),
                        cfg.command,
                        command
                    )));
                }
                cfg
            }
            None => JobConfig::new(command),
        };
        if let Some(v) = &args.input {
            cfg.input = Some(v.clone());
        }
        if let Some(v) = &args.output {
            cfg.output = Some(v.clone());
        }
        if let Some(v) = args.p {
            cfg.p = Some(v);
        }
        if let Some(v) = &args.unit {
            let q = parse_quaternion(v, "unit")?;
            cfg.unit = Some(ImaginaryUnit::new(q).map_err(|e| CliError::Input(format!("unit: {e}")))?);
        }
        for a in &args.at {
            cfg.points.push(parse_quaternion(a, "at")?);
        }
        if let Some(v) = args.nodes {
            cfg.quadrature.circle_nodes = v;
        }
        if let Some(v) = &args.rgrid {
            cfg.quadrature.r_grid = parse_rgrid(v)?;
        }
        if let Some(v) = args.truncation {
            cfg.truncation = Some(v);
        }
        if let Some(v) = args.seed {
            cfg.seed = v;
        }
        if let Some(v) = args.mode {
            cfg.mode = v;
        }
        cfg.quadrature.seed = cfg.seed;
        cfg.quadrature.validate().map_err(|e| CliError::Input(format!("quadrature: {e}")))?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_the_file_and_unknown_fields_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("job.json");
        std::fs::write(&path, r#"{"command": "norm", "p": 4, "seed": 3, "quadrature": {"circle_nodes": 64}}"#).unwrap();
        let args = CommonArgs { config: Some(path.clone()), p: Some(Exponent::Infinity), ..Default::default() };
        let cfg = JobConfig::resolve(Command::Norm, &args).unwrap();
        assert_eq!(cfg.p, Some(Exponent::Infinity));
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.quadrature.circle_nodes, 64);
        assert_eq!(cfg.quadrature.r_grid, QuadratureSpec::default().r_grid);

        std::fs::write(&path, r#"{"command": "norm", "colour": 1}"#).unwrap();
        let err =
            JobConfig::resolve(Command::Norm, &CommonArgs { config: Some(path), ..Default::default() }).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
    }

    #[test]
    fn empty_rgrid_is_a_config_error() {
        let args = CommonArgs { rgrid: Some(String::new()), ..Default::default() };
        assert!(matches!(JobConfig::resolve(Command::Trace, &args), Err(CliError::Input(_))));
    }

    #[test]
    fn quaternion_flags() {
        assert_eq!(parse_quaternion("0, 1, 0, 0", "unit").unwrap(), Quaternion::I);
        assert!(parse_quaternion("0,1,0", "unit").is_err());
        let args = CommonArgs { unit: Some("0,2,0,0".into()), ..Default::default() };
        assert!(JobConfig::resolve(Command::Trace, &args).is_err());
    }
}
