//! Run configuration: per-command defaults, a flat `key = value` file, and
//! command-line flags, applied in that order.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use magband::kernel::GeneratingKernel;
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, UsageError> {
    Err(UsageError(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Butterfly,
    Edges,
    Gaptrack,
    Verify,
    Heatcheck,
    Resolventdecay,
    Continuum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Harper,
    Expdecay,
    Powerdecay,
    Staggered,
    Bdependent,
}

impl FromStr for Family {
    type Err = UsageError;

    fn from_str(s: &str) -> Result<Self, UsageError> {
        Ok(match s {
            "harper" => Family::Harper,
            "expdecay" => Family::Expdecay,
            "powerdecay" => Family::Powerdecay,
            "staggered" => Family::Staggered,
            "bdependent" => Family::Bdependent,
            _ => return usage(format!("unknown model family '{s}'")),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Linear,
    Geometric,
}

impl FromStr for GridKind {
    type Err = UsageError;

    fn from_str(s: &str) -> Result<Self, UsageError> {
        match s {
            "linear" => Ok(GridKind::Linear),
            "geometric" => Ok(GridKind::Geometric),
            _ => usage(format!("unknown grid kind '{s}' (linear or geometric)")),
        }
    }
}

/// Fully resolved configuration. Field order is the serialization order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub model: Family,
    pub base: Family,
    pub mass: f64,
    pub rate: f64,
    pub exponent: f64,
    pub modulation_scale: f64,
    pub n_side: usize,
    pub amplitude: f64,
    pub seed: u64,
    pub grid: GridKind,
    pub flux_min: f64,
    pub flux_max: f64,
    pub flux_steps: usize,
    pub b0: f64,
    pub geometric_k_min: u32,
    pub geometric_k_max: u32,
    pub gap_min_width: Option<f64>,
    pub bound_factor: f64,
    pub quadrature_nodes: usize,
    pub grid_n: usize,
    pub spacing: f64,
    pub strength: f64,
    pub period: f64,
    pub out: PathBuf,
    pub svg: Option<PathBuf>,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let mut c = RunConfig {
            command,
            model: Family::Harper,
            base: Family::Harper,
            mass: 1.0,
            rate: 1.0,
            exponent: 6.0,
            modulation_scale: 0.5,
            n_side: 60,
            amplitude: 0.0,
            seed: 11,
            grid: GridKind::Geometric,
            flux_min: 0.0,
            flux_max: 0.1,
            flux_steps: 11,
            b0: 0.0,
            geometric_k_min: 3,
            geometric_k_max: 9,
            gap_min_width: None,
            bound_factor: 3.0,
            quadrature_nodes: 64,
            grid_n: 64,
            spacing: 0.25,
            strength: 10.0,
            period: 4.0,
            out: PathBuf::from("."),
            svg: None,
        };
        match command {
            Command::Butterfly => {
                c.n_side = 40;
                c.grid = GridKind::Linear;
                c.flux_max = 2.0 * std::f64::consts::PI;
                c.flux_steps = 101;
            }
            Command::Gaptrack => {
                c.model = Family::Staggered;
                c.grid = GridKind::Linear;
            }
            Command::Resolventdecay => {
                c.model = Family::Expdecay;
                c.n_side = 20;
            }
            _ => {}
        }
        c
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), UsageError> {
        let v = value.trim();
        match key {
            "model" => self.model = v.parse()?,
            "base" => self.base = v.parse()?,
            "mass" => self.mass = number(key, v)?,
            "rate" => self.rate = number(key, v)?,
            "exponent" => self.exponent = number(key, v)?,
            "modulation_scale" => self.modulation_scale = number(key, v)?,
            "n_side" => self.n_side = number(key, v)?,
            "amplitude" => self.amplitude = number(key, v)?,
            "seed" => self.seed = number(key, v)?,
            "grid" => self.grid = v.parse()?,
            "flux_min" => self.flux_min = number(key, v)?,
            "flux_max" => self.flux_max = number(key, v)?,
            "flux_steps" => self.flux_steps = number(key, v)?,
            "b0" => self.b0 = number(key, v)?,
            "geometric_k_min" => self.geometric_k_min = number(key, v)?,
            "geometric_k_max" => self.geometric_k_max = number(key, v)?,
            "gap_min_width" => self.gap_min_width = optional(key, v)?,
            "bound_factor" => self.bound_factor = number(key, v)?,
            "quadrature_nodes" => self.quadrature_nodes = number(key, v)?,
            "grid_n" => self.grid_n = number(key, v)?,
            "spacing" => self.spacing = number(key, v)?,
            "strength" => self.strength = number(key, v)?,
            "period" => self.period = number(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "svg" => {
                self.svg = if v == "none" {
                    None
                } else {
                    Some(PathBuf::from(v))
                }
            }
            "command" => {
                let named = serde_json::to_value(self.command).expect("enum serializes");
                if named != Value::String(v.to_string()) {
                    return usage(format!("config file is for command '{v}', not {named}"));
                }
            }
            _ => return usage(format!("unknown configuration key '{key}'")),
        }
        Ok(())
    }

    /// Applies a flat `key = value` file. `#` starts a comment line.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return usage(format!(
                    "{}:{}: expected key = value",
                    path.display(),
                    lineno + 1
                ));
            };
            self.set(key.trim(), value)
                .map_err(|e| UsageError(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), UsageError> {
        let finite = [
            ("mass", self.mass),
            ("flux_min", self.flux_min),
            ("flux_max", self.flux_max),
            ("b0", self.b0),
            ("modulation_scale", self.modulation_scale),
        ];
        for (k, v) in finite {
            if !v.is_finite() {
                return usage(format!("{k} must be finite"));
            }
        }
        if self.n_side == 0 {
            return usage("n_side must be at least 1");
        }
        if self.flux_steps == 0 {
            return usage("flux_steps must be at least 1");
        }
        if self.grid == GridKind::Linear && self.flux_steps > 1 && !(self.flux_max > self.flux_min)
        {
            return usage("flux_max must exceed flux_min");
        }
        if self.geometric_k_min > self.geometric_k_max {
            return usage("geometric_k_min must not exceed geometric_k_max");
        }
        if !(0.0..0.5).contains(&self.amplitude) {
            return usage("amplitude must lie in [0, 0.5)");
        }
        if !(self.rate > 0.0) || !(self.exponent > 0.0) {
            return usage("rate and exponent must be positive");
        }
        if !(self.bound_factor >= 1.0) {
            return usage("bound_factor must be at least 1");
        }
        if let Some(w) = self.gap_min_width {
            if !(w > 0.0) {
                return usage("gap_min_width must be positive");
            }
        }
        if self.quadrature_nodes < 8 {
            return usage("quadrature_nodes must be at least 8");
        }
        if self.grid_n < 2
            || !(self.spacing > 0.0)
            || !(self.period > 0.0)
            || !self.strength.is_finite()
        {
            return usage("continuum needs grid_n >= 2 and positive spacing and period");
        }
        if self.model == Family::Bdependent && self.base == Family::Bdependent {
            return usage("base of a bdependent model cannot itself be bdependent");
        }
        Ok(())
    }

    pub fn generator(&self) -> GeneratingKernel {
        let simple = |f: Family| match f {
            Family::Harper | Family::Bdependent => GeneratingKernel::HarperNN,
            Family::Expdecay => GeneratingKernel::ExpDecay { rate: self.rate },
            Family::Powerdecay => GeneratingKernel::PowerDecay {
                exponent: self.exponent,
            },
            Family::Staggered => GeneratingKernel::StaggeredMassHarper { mass: self.mass },
        };
        match self.model {
            Family::Bdependent => {
                GeneratingKernel::b_dependent(simple(self.base), self.modulation_scale)
            }
            f => simple(f),
        }
    }

    /// `(key, value)` pairs in field order, in the same syntax [`set`] reads.
    ///
    /// [`set`]: RunConfig::set
    pub fn entries(&self) -> Vec<(String, String)> {
        let Value::Object(map) = serde_json::to_value(self).expect("config serializes") else {
            unreachable!("struct serializes to an object")
        };
        map.into_iter()
            .map(|(k, v)| {
                let text = match v {
                    Value::Null => "none".to_string(),
                    Value::String(s) => s,
                    other => other.to_string(),
                };
                (k, text)
            })
            .collect()
    }
}

fn number<T: FromStr>(key: &str, v: &str) -> Result<T, UsageError> {
    v.parse()
        .map_err(|_| UsageError(format!("invalid value '{v}' for {key}")))
}

fn optional(key: &str, v: &str) -> Result<Option<f64>, UsageError> {
    if v == "none" {
        Ok(None)
    } else {
        number(key, v).map(Some)
    }
}
