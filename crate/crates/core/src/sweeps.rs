//! One-parameter sweeps of the correlation coefficient.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::config::{RunConfig, Simulation};
use crate::error::{Error, Result};
use crate::phasematch::Process;
use crate::stats::{bootstrap_sigma, pearson};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepParam {
    #[serde(rename = "width")]
    SlitWidth,
    #[serde(rename = "pitch")]
    SlitPitch,
    #[serde(rename = "Lz")]
    CrystalLz,
    #[serde(rename = "sigma")]
    Sigma,
    #[serde(rename = "process")]
    Process,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::SlitWidth => "width",
            SweepParam::SlitPitch => "pitch",
            SweepParam::CrystalLz => "Lz",
            SweepParam::Sigma => "sigma",
            SweepParam::Process => "process",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            SweepParam::SlitWidth | SweepParam::SlitPitch | SweepParam::Sigma => "um",
            SweepParam::CrystalLz => "mm",
            SweepParam::Process => "",
        }
    }

    pub fn parse_value(self, text: &str) -> Result<SweepValue> {
        let text = text.trim();
        match self {
            SweepParam::Process => {
                let p = match text {
                    "type1" | "1" | "I" => Process::TypeIEoo,
                    "type2" | "2" | "II" => Process::TypeIIEoe,
                    other => return Err(Error::Config(format!("unknown process '{other}'"))),
                };
                Ok(SweepValue::Process(p))
            }
            _ => text
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(SweepValue::Number)
                .ok_or_else(|| Error::Config(format!("'{text}' is not a number"))),
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "width" | "slit_width" | "w" => SweepParam::SlitWidth,
            "pitch" | "slit_pitch" | "d" => SweepParam::SlitPitch,
            "Lz" | "lz" | "crystal_Lz" | "length_z" => SweepParam::CrystalLz,
            "sigma" => SweepParam::Sigma,
            "process" => SweepParam::Process,
            other => {
                return Err(Error::Config(format!(
                    "unknown sweep parameter '{other}' (width, pitch, Lz, sigma, process)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepValue {
    /// In the parameter's unit.
    Number(f64),
    Process(Process),
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Number(v) => write!(f, "{v}"),
            SweepValue::Process(p) => write!(f, "{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<SweepValue>,
    pub base: RunConfig,
    /// Resamples per row; `None` leaves sigma_rho empty.
    pub bootstrap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: SweepValue,
    pub rho: Option<f64>,
    pub sigma_rho: Option<f64>,
    pub seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("a sweep needs at least one value".into()));
        }
        for v in &self.values {
            let ok = matches!(
                (self.param, v),
                (SweepParam::Process, SweepValue::Process(_)) | (SweepParam::SlitWidth | SweepParam::SlitPitch | SweepParam::CrystalLz | SweepParam::Sigma, SweepValue::Number(_))
            );
            if !ok {
                return Err(Error::Config(format!(
                    "value {v} does not fit parameter {}",
                    self.param.name()
                )));
            }
        }
        self.base.validate()
    }

    /// Base configuration with the swept parameter set to `value`.
    pub fn config_for(&self, value: SweepValue) -> Result<RunConfig> {
        let mut cfg = self.base.clone();
        match (self.param, value) {
            (SweepParam::SlitWidth, SweepValue::Number(v)) => cfg.slits.width_um = v,
            (SweepParam::SlitPitch, SweepValue::Number(v)) => cfg.slits.pitch_um = v,
            (SweepParam::CrystalLz, SweepValue::Number(v)) => cfg.crystal.length_z_mm = v,
            (SweepParam::Sigma, SweepValue::Number(v)) => cfg.pump.sigma_um = v,
            (SweepParam::Process, SweepValue::Process(p)) => cfg.crystal.process = p,
            (param, value) => {
                return Err(Error::Config(format!(
                    "value {value} does not fit parameter {}",
                    param.name()
                )))
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run_value(spec: &SweepSpec, value: SweepValue) -> Result<(f64, Option<f64>)> {
    let cfg = spec.config_for(value)?;
    let map = Simulation::from_config(&cfg)?.run()?;
    let rho = pearson(&map, cfg.stats.centering)?;
    let sigma = match spec.bootstrap {
        Some(n) => bootstrap_sigma(&map, cfg.stats.counts_total, n, cfg.seed, cfg.stats.centering)?.sigma_rho,
        None => None,
    };
    Ok((rho, sigma))
}

/// Runs every value in order; a failing value is recorded in its row and the
/// sweep continues.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let rows = spec
        .values
        .iter()
        .map(|&value| {
            let start = Instant::now();
            let outcome = run_value(spec, value);
            let seconds = start.elapsed().as_secs_f64();
            match outcome {
                Ok((rho, sigma_rho)) => SweepRow {
                    value,
                    rho: Some(rho),
                    sigma_rho,
                    seconds,
                    error: None,
                },
                Err(e) => SweepRow {
                    value,
                    rho: None,
                    sigma_rho: None,
                    seconds,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(SweepResult {
        param: spec.param,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_names() {
        assert_eq!("pitch".parse::<SweepParam>().unwrap(), SweepParam::SlitPitch);
        assert_eq!("Lz".parse::<SweepParam>().unwrap(), SweepParam::CrystalLz);
        assert!("height".parse::<SweepParam>().is_err());
    }

    #[test]
    fn value_parsing() {
        assert_eq!(SweepParam::SlitWidth.parse_value(" 5 ").unwrap(), SweepValue::Number(5.0));
        assert_eq!(
            SweepParam::Process.parse_value("type2").unwrap(),
            SweepValue::Process(Process::TypeIIEoe)
        );
        assert!(SweepParam::SlitWidth.parse_value("wide").is_err());
        assert!(SweepParam::SlitWidth.parse_value("nan").is_err());
    }

    #[test]
    fn empty_and_mismatched_values_rejected() {
        let mut spec = SweepSpec {
            param: SweepParam::SlitPitch,
            values: vec![],
            base: RunConfig::default(),
            bootstrap: None,
        };
        assert!(run_sweep(&spec).is_err());
        spec.values = vec![SweepValue::Process(Process::TypeIEoo)];
        assert!(run_sweep(&spec).is_err());
    }

    #[test]
    fn bad_value_is_recorded_not_fatal() {
        let mut base = RunConfig::default();
        base.detectors.half_width_um = Some(15.0);
        base.crystal.length_z_mm = 1.0;
        base.integration.z_planes = 3;
        let spec = SweepSpec {
            param: SweepParam::SlitWidth,
            values: vec![SweepValue::Number(-3.0), SweepValue::Number(30.0)],
            base,
            bootstrap: None,
        };
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.rows.len(), 2);
        assert!(result.rows[0].error.is_some() && result.rows[0].rho.is_none());
        assert!(result.rows[1].rho.is_some());
        assert_eq!(result.failures(), 1);
    }
}
