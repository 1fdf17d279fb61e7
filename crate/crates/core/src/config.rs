//! Line-oriented `key = value` configuration for sweeps.
//!
//! ```text
//! # units: m, kg, W, K; every frequency in Hz (converted to rad/s on load)
//! cavity_length         = 1e-3
//! mass                  = 5e-12
//! mechanical_freq_hz    = 10e6
//! mechanical_damping_hz = 100
//! cavity_decay_hz       = 14e6
//! wavelength            = 810e-9
//! power                 = 0.05
//! detuning_hz           = 10e6
//! temperature           = 0.4
//! linewidth_hz          = 10
//! correlation_rate_hz   = 1e6        # required
//! axis1                 = power 1e-3 0.3 300 log
//! axis2                 = detuning_hz 0 50e6 101 linear
//! branch_policy         = all        # all | lowest | continuity
//! format                = csv        # csv | json
//! output                = sweep.csv  # stdout when absent
//! workers               = 8
//! ```
//!
//! Keys other than `correlation_rate_hz` default to the benchmark cavity
//! with zero detuning, zero temperature and zero linewidth.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::params::{hz, SystemParams};

pub const KEYS: &[&str] = &[
    "cavity_length",
    "mass",
    "mechanical_freq_hz",
    "mechanical_damping_hz",
    "cavity_decay_hz",
    "wavelength",
    "power",
    "detuning_hz",
    "temperature",
    "linewidth_hz",
    "correlation_rate_hz",
    "axis1",
    "axis2",
    "branch_policy",
    "format",
    "output",
    "workers",
];

/// Parameters that can be swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AxisName {
    Power,
    Detuning,
    Linewidth,
    CorrelationRate,
    Temperature,
}

impl AxisName {
    pub fn key(self) -> &'static str {
        match self {
            AxisName::Power => "power",
            AxisName::Detuning => "detuning_hz",
            AxisName::Linewidth => "linewidth_hz",
            AxisName::CorrelationRate => "correlation_rate_hz",
            AxisName::Temperature => "temperature",
        }
    }

    /// Writes `value`, given in configuration units, into the inputs.
    pub fn apply(self, value: f64, params: &mut SystemParams, noise: &mut NoiseModel) {
        match self {
            AxisName::Power => params.input_power = value,
            AxisName::Detuning => params.detuning = hz(value),
            AxisName::Linewidth => noise.linewidth = hz(value),
            AxisName::CorrelationRate => noise.correlation_rate = hz(value),
            AxisName::Temperature => params.bath_temperature = value,
        }
    }
}

impl FromStr for AxisName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            AxisName::Power,
            AxisName::Detuning,
            AxisName::Linewidth,
            AxisName::CorrelationRate,
            AxisName::Temperature,
        ]
        .into_iter()
        .find(|a| a.key() == s)
        .ok_or_else(|| Error::Config(format!("unknown axis parameter `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub name: AxisName,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Axis {
    pub fn new(name: AxisName, start: f64, stop: f64, count: usize, spacing: Spacing) -> Result<Self> {
        let axis = Axis {
            name,
            start,
            stop,
            count,
            spacing,
        };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        let name = self.name.key();
        if self.count == 0 {
            return Err(Error::Config(format!("axis {name}: count must be at least 1")));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::Config(format!("axis {name}: range must be finite")));
        }
        if self.spacing == Spacing::Log && !(self.start > 0.0 && self.stop > 0.0) {
            return Err(Error::Config(format!("axis {name}: log spacing needs a positive range")));
        }
        Ok(())
    }

    /// Grid values in configuration units; endpoints are reproduced exactly.
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i == 0 {
                    return self.start;
                }
                if i == self.count - 1 {
                    return self.stop;
                }
                let t = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.start + t * (self.stop - self.start),
                    Spacing::Log => (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect()
    }
}

impl FromStr for Axis {
    type Err = Error;

    /// `name start stop count [linear|log]`
    fn from_str(s: &str) -> Result<Self> {
        let fields: Vec<&str> = s.split_whitespace().collect();
        if !(4..=5).contains(&fields.len()) {
            return Err(Error::Config(format!(
                "axis `{s}`: expected `name start stop count [linear|log]`"
            )));
        }
        let spacing = match fields.get(4).copied().unwrap_or("linear") {
            "linear" => Spacing::Linear,
            "log" => Spacing::Log,
            other => return Err(Error::Config(format!("axis `{s}`: unknown spacing `{other}`"))),
        };
        let count = fields[3]
            .parse()
            .map_err(|_| Error::Config(format!("axis `{s}`: count `{}` is not an integer", fields[3])))?;
        Axis::new(fields[0].parse()?, number("axis start", fields[1])?, number("axis stop", fields[2])?, count, spacing)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let spacing = match self.spacing {
            Spacing::Linear => "linear",
            Spacing::Log => "log",
        };
        write!(f, "{} {:e} {:e} {} {}", self.name.key(), self.start, self.stop, self.count, spacing)
    }
}

/// Which steady-state branches a sweep reports at each grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchPolicy {
    /// Every branch, stable or not.
    All,
    /// The branch with the fewest photons.
    Lowest,
    /// Along the first axis, the branch closest in photon number to the one
    /// reported at the previous point, starting from the lowest.
    Continuity,
}

impl FromStr for BranchPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(BranchPolicy::All),
            "lowest" => Ok(BranchPolicy::Lowest),
            "continuity" => Ok(BranchPolicy::Continuity),
            other => Err(Error::Config(format!("unknown branch_policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub params: SystemParams,
    pub noise: NoiseModel,
    /// At most two; the first varies slowest in the output.
    pub axes: Vec<Axis>,
    pub branch_policy: BranchPolicy,
    pub format: OutputFormat,
    pub output: Option<PathBuf>,
    /// Worker threads; 1 runs serially on the calling thread.
    pub workers: usize,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.noise.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.axes.len() > 2 {
            return Err(Error::Config("at most two sweep axes are supported".into()));
        }
        for axis in &self.axes {
            axis.validate()?;
        }
        if self.axes.len() == 2 && self.axes[0].name == self.axes[1].name {
            return Err(Error::Config(format!("axis {} given twice", self.axes[0].name.key())));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }
}

fn number(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("{key}: `{value}` is not a number")))
}

/// Raw key/value pairs, before interpretation. Later insertions win, which
/// is how command-line flags override a file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = ConfigMap::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            if map.entries.contains_key(key) {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            map.set(key, value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        ConfigMap::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn number_or(&self, key: &str, default: f64) -> Result<f64> {
        self.get(key).map_or(Ok(default), |v| number(key, v))
    }

    pub fn build(&self) -> Result<SweepConfig> {
        let base = SystemParams::benchmark();
        let params = SystemParams {
            cavity_length: self.number_or("cavity_length", base.cavity_length)?,
            mirror_mass: self.number_or("mass", base.mirror_mass)?,
            mechanical_freq: hz(self.number_or("mechanical_freq_hz", base.mechanical_freq / hz(1.0))?),
            mechanical_damping: hz(self.number_or("mechanical_damping_hz", base.mechanical_damping / hz(1.0))?),
            cavity_decay: hz(self.number_or("cavity_decay_hz", base.cavity_decay / hz(1.0))?),
            laser_wavelength: self.number_or("wavelength", base.laser_wavelength)?,
            input_power: self.number_or("power", base.input_power)?,
            detuning: hz(self.number_or("detuning_hz", 0.0)?),
            bath_temperature: self.number_or("temperature", 0.0)?,
        };
        let correlation = self
            .get("correlation_rate_hz")
            .ok_or_else(|| Error::Config("correlation_rate_hz is required".into()))?;
        let noise = NoiseModel {
            linewidth: hz(self.number_or("linewidth_hz", 0.0)?),
            correlation_rate: hz(number("correlation_rate_hz", correlation)?),
        };
        let axes = ["axis1", "axis2"]
            .iter()
            .filter_map(|k| self.get(k))
            .map(str::parse)
            .collect::<Result<Vec<Axis>>>()?;
        if self.contains("axis2") && !self.contains("axis1") {
            return Err(Error::Config("axis2 given without axis1".into()));
        }
        let workers = match self.get("workers") {
            Some(w) => w
                .parse()
                .map_err(|_| Error::Config(format!("workers: `{w}` is not an integer")))?,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        let cfg = SweepConfig {
            params,
            noise,
            axes,
            branch_policy: self.get("branch_policy").unwrap_or("all").parse()?,
            format: self.get("format").unwrap_or("csv").parse()?,
            output: self.get("output").map(PathBuf::from),
            workers,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_file_parses() {
        let text = "\
# comment line
cavity_length = 2e-3
power = 0.1   # trailing comment
detuning_hz = 10e6
correlation_rate_hz = 1e6
linewidth_hz = 30
axis1 = power 1e-3 0.3 5 log
axis2 = detuning_hz 0 5e7 3
branch_policy = lowest
format = json
workers = 2
";
        let cfg = ConfigMap::parse(text).unwrap().build().unwrap();
        assert_eq!(cfg.params.cavity_length, 2e-3);
        assert_eq!(cfg.params.input_power, 0.1);
        assert_eq!(cfg.params.detuning, hz(10e6));
        assert_eq!(cfg.noise.linewidth, hz(30.0));
        assert_eq!(cfg.axes.len(), 2);
        assert_eq!(cfg.axes[0].spacing, Spacing::Log);
        assert_eq!(cfg.axes[1].spacing, Spacing::Linear);
        assert_eq!(cfg.branch_policy, BranchPolicy::Lowest);
        assert_eq!(cfg.format, OutputFormat::Json);
        assert_eq!(cfg.workers, 2);
        assert_eq!(cfg.output, None);
    }

    #[test]
    fn defaults_are_benchmark_cavity() {
        let cfg = ConfigMap::parse("correlation_rate_hz = 100").unwrap().build().unwrap();
        let b = SystemParams::benchmark();
        assert_eq!(cfg.params.cavity_length, b.cavity_length);
        assert!((cfg.params.mechanical_freq - b.mechanical_freq).abs() <= 1e-9 * b.mechanical_freq);
        assert!((cfg.params.cavity_decay - b.cavity_decay).abs() <= 1e-9 * b.cavity_decay);
        assert_eq!(cfg.params.detuning, 0.0);
        assert_eq!(cfg.noise.linewidth, 0.0);
        assert!(cfg.axes.is_empty());
    }

    #[test]
    fn flags_override_file() {
        let mut map = ConfigMap::parse("correlation_rate_hz = 100\npower = 0.1").unwrap();
        map.set("power", "0.2").unwrap();
        assert_eq!(map.build().unwrap().params.input_power, 0.2);
    }

    #[test]
    fn errors_are_reported() {
        let bad = [
            "power = 0.1",
            "correlation_rate_hz = 1\nbogus = 3",
            "correlation_rate_hz = 1\npower = abc",
            "correlation_rate_hz = 1\npower",
            "correlation_rate_hz = 1\npower = 1\npower = 2",
            "correlation_rate_hz = 1\naxis1 = power 0 1 0",
            "correlation_rate_hz = 1\naxis1 = power 0 1 3 log",
            "correlation_rate_hz = 1\naxis1 = mass 0 1 3",
            "correlation_rate_hz = 1\naxis2 = power 0 1 3",
            "correlation_rate_hz = 1\naxis1 = power 0 1 3\naxis2 = power 0 1 3",
            "correlation_rate_hz = 1\nformat = xml",
            "correlation_rate_hz = 1\nworkers = 0",
            "correlation_rate_hz = 0",
            "correlation_rate_hz = 1\nmass = -1",
        ];
        for text in bad {
            let result = ConfigMap::parse(text).and_then(|m| m.build());
            assert!(matches!(result, Err(Error::Config(_))), "accepted: {text:?}");
        }
    }

    #[test]
    fn axis_values() {
        let lin: Axis = "power 0 1 5".parse().unwrap();
        assert_eq!(lin.values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let log: Axis = "power 1e-3 1e-1 3 log".parse().unwrap();
        let v = log.values();
        assert_eq!(v[0], 1e-3);
        assert!((v[1] - 1e-2).abs() < 1e-15);
        assert_eq!(v[2], 1e-1);
        let one: Axis = "temperature 4 9 1".parse().unwrap();
        assert_eq!(one.values(), vec![4.0]);
        assert_eq!(one.to_string().parse::<Axis>().unwrap(), one);
    }
}
