//! Run configuration in laboratory units (um, mm, nm, deg) and the pipeline
//! that turns it into a coincidence map.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::biphoton::{coincidence_map, CoincidenceMap, DetectorScan, Integration, IntegrationMode};
use crate::dispersion::SellmeierSet;
use crate::error::{Error, Result};
use crate::imaging::{field_through_crystal, LensSpec};
use crate::phasematch::{CrystalSpec, OpticAxisPlane, PhaseMatcher, Process, SincConvention};
use crate::pump::{
    analytic_profile, load_measured_profile, Axis, PumpSource, PumpSpec, SampledField,
    SigmaConvention, SlitSpec,
};
use crate::stats::Centering;

/// Margin added around the slit pattern by the default detector window.
pub const SCAN_MARGIN_UM: f64 = 150.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub crystal: CrystalConfig,
    pub pump: PumpConfig,
    pub slits: SlitConfig,
    pub lens: LensConfig,
    pub detectors: DetectorConfig,
    pub phasematch: PhasematchConfig,
    pub integration: IntegrationConfig,
    pub stats: StatsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            output_dir: PathBuf::from("out"),
            crystal: CrystalConfig::default(),
            pump: PumpConfig::default(),
            slits: SlitConfig::default(),
            lens: LensConfig::default(),
            detectors: DetectorConfig::default(),
            phasematch: PhasematchConfig::default(),
            integration: IntegrationConfig::default(),
            stats: StatsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrystalConfig {
    pub cut_angle_deg: f64,
    pub length_x_mm: f64,
    pub length_y_mm: f64,
    pub length_z_mm: f64,
    pub process: Process,
    /// Absent: tilt the crystal so the pump is collinearly phase matched.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tilt_deg: Option<f64>,
    pub optic_axis_plane: OpticAxisPlane,
    /// TOML file with `[[row]]` Sellmeier entries; absent: built-in BBO set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sellmeier_file: Option<PathBuf>,
}

impl Default for CrystalConfig {
    fn default() -> Self {
        CrystalConfig {
            cut_angle_deg: 29.3,
            length_x_mm: 5.0,
            length_y_mm: 5.0,
            length_z_mm: 10.0,
            process: Process::TypeIEoo,
            tilt_deg: None,
            optic_axis_plane: OpticAxisPlane::default(),
            sellmeier_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PumpConfig {
    pub wavelength_nm: f64,
    pub sigma_um: f64,
    pub sigma_convention: SigmaConvention,
    pub source: PumpSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured_file: Option<PathBuf>,
    /// Multiplies the positions of a measured profile.
    pub measured_calibration: f64,
    pub grid_step_um: f64,
}

impl Default for PumpConfig {
    fn default() -> Self {
        PumpConfig {
            wavelength_nm: 405.0,
            sigma_um: 300.0,
            sigma_convention: SigmaConvention::Amplitude,
            source: PumpSource::Analytic,
            measured_file: None,
            measured_calibration: 1.0,
            grid_step_um: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SlitConfig {
    pub width_um: f64,
    pub pitch_um: f64,
    pub count: usize,
    pub height_um: f64,
}

impl Default for SlitConfig {
    fn default() -> Self {
        SlitConfig {
            width_um: 30.0,
            pitch_um: 100.0,
            count: 3,
            height_um: 300.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LensConfig {
    pub focal_mm: f64,
    pub aperture_radius_mm: f64,
    /// Absent: twice the focal length.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub object_distance_mm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image_distance_mm: Option<f64>,
    pub quadrature_order: usize,
}

impl Default for LensConfig {
    fn default() -> Self {
        LensConfig {
            focal_mm: 146.0,
            aperture_radius_mm: 12.7,
            object_distance_mm: None,
            image_distance_mm: None,
            quadrature_order: crate::imaging::DEFAULT_ORDER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub step_um: f64,
    /// Absent: slit pattern half-extent plus a margin.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width_um: Option<f64>,
    pub aperture_half_width_um: f64,
    /// Signed distance from the plane conjugate to the crystal centre.
    pub distance_mm: f64,
    pub subaperture_points: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            step_um: 3.0,
            half_width_um: None,
            aperture_half_width_um: 0.0,
            distance_mm: 0.0,
            subaperture_points: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhasematchConfig {
    pub sinc_convention: SincConvention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegrationConfig {
    pub mode: IntegrationMode,
    pub z_planes: usize,
    /// Transverse crystal step of the grid mode.
    pub grid_step_um: f64,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            mode: IntegrationMode::Resolved,
            z_planes: 21,
            grid_step_um: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatsConfig {
    pub centering: Centering,
    pub counts_total: f64,
    pub resamples: usize,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            centering: Centering::Centered,
            counts_total: 1e6,
            resamples: 100_000,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Parses `text` (may be empty), applies `key.path=value` overrides, then validates.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text)?;
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let cfg: RunConfig = table.try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// SHA-256 of the canonical TOML serialization, hex encoded.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn validate(&self) -> Result<()> {
        self.crystal_spec()?.validate()?;
        self.pump_spec().validate()?;
        self.lens_spec().validate()?;
        self.integration().validate()?;
        if self.pump.source == PumpSource::Measured && self.pump.measured_file.is_none() {
            return Err(Error::Config("pump.source = \"measured\" needs pump.measured_file".into()));
        }
        if !(self.pump.grid_step_um > 0.0) {
            return Err(Error::Config("pump.grid_step_um must be positive".into()));
        }
        if !(self.detectors.step_um > 0.0) {
            return Err(Error::Config("detectors.step_um must be positive".into()));
        }
        if let Some(h) = self.detectors.half_width_um {
            if !(h >= 0.0) {
                return Err(Error::Config("detectors.half_width_um must be non-negative".into()));
            }
        }
        if self.lens.quadrature_order == 0 {
            return Err(Error::Config("lens.quadrature_order must be at least 1".into()));
        }
        if !(self.stats.counts_total > 0.0) {
            return Err(Error::Config("stats.counts_total must be positive".into()));
        }
        Ok(())
    }

    pub fn sellmeier(&self) -> Result<SellmeierSet> {
        match &self.crystal.sellmeier_file {
            Some(path) => SellmeierSet::from_path(path),
            None => Ok(SellmeierSet::bbo()),
        }
    }

    pub fn pump_wavelength(&self) -> f64 {
        self.pump.wavelength_nm * 1e-9
    }

    /// Crystal with the configured tilt (zero if unset).
    pub fn crystal_spec(&self) -> Result<CrystalSpec> {
        let c = &self.crystal;
        Ok(CrystalSpec {
            cut_angle: c.cut_angle_deg.to_radians(),
            length_x: c.length_x_mm * 1e-3,
            length_y: c.length_y_mm * 1e-3,
            length_z: c.length_z_mm * 1e-3,
            process: c.process,
            tilt: c.tilt_deg.unwrap_or(0.0).to_radians(),
            optic_axis_plane: c.optic_axis_plane,
        })
    }

    /// Crystal as simulated: tilted to the collinear angle unless a tilt is given.
    pub fn oriented_crystal(&self, set: &SellmeierSet) -> Result<CrystalSpec> {
        let crystal = self.crystal_spec()?;
        match self.crystal.tilt_deg {
            Some(_) => Ok(crystal),
            None => crystal.tilted_to_collinear(set, self.pump_wavelength()),
        }
    }

    pub fn pump_spec(&self) -> PumpSpec {
        PumpSpec {
            wavelength: self.pump_wavelength(),
            sigma: self.pump.sigma_um * 1e-6,
            sigma_convention: self.pump.sigma_convention,
            slits: SlitSpec {
                width: self.slits.width_um * 1e-6,
                pitch: self.slits.pitch_um * 1e-6,
                count: self.slits.count,
                height: self.slits.height_um * 1e-6,
            },
            source: self.pump.source,
        }
    }

    pub fn lens_spec(&self) -> LensSpec {
        let f = self.lens.focal_mm * 1e-3;
        LensSpec {
            focal_length: f,
            aperture_radius: self.lens.aperture_radius_mm * 1e-3,
            object_distance: self.lens.object_distance_mm.map_or(2.0 * f, |d| d * 1e-3),
            image_distance: self.lens.image_distance_mm.map_or(2.0 * f, |d| d * 1e-3),
            wavelength: self.pump_wavelength(),
        }
    }

    pub fn integration(&self) -> Integration {
        Integration {
            mode: self.integration.mode,
            z_planes: self.integration.z_planes,
            grid_step: self.integration.grid_step_um * 1e-6,
            sinc_convention: self.phasematch.sinc_convention,
        }
    }

    pub fn pump_grid(&self) -> Result<Axis> {
        self.pump_spec().default_grid(self.pump.grid_step_um * 1e-6)
    }

    pub fn detector_scan(&self) -> Result<DetectorScan> {
        let d = &self.detectors;
        let half = match d.half_width_um {
            Some(h) => h,
            None => {
                let extent = self.pump_spec().slits.half_extent() * 1e6 + SCAN_MARGIN_UM;
                (extent / d.step_um).ceil() * d.step_um
            }
        };
        let mut scan = DetectorScan::symmetric(half * 1e-6, d.step_um * 1e-6)?;
        scan.aperture_half_width = d.aperture_half_width_um * 1e-6;
        scan.distance = d.distance_mm * 1e-3;
        scan.subaperture_points = d.subaperture_points;
        scan.validate()?;
        Ok(scan)
    }

    /// Pump amplitude at the crystal for the configured source, peak-normalized.
    pub fn pump_field(&self) -> Result<SampledField> {
        let spec = self.pump_spec();
        match self.pump.source {
            PumpSource::Analytic => analytic_profile(&spec, &self.pump_grid()?),
            PumpSource::Measured => {
                let path = self
                    .pump
                    .measured_file
                    .as_ref()
                    .ok_or_else(|| Error::Config("pump.measured_file is not set".into()))?;
                Ok(load_measured_profile(path, self.pump.measured_calibration)?.peak_normalized())
            }
            PumpSource::Imaged => {
                let grid = self.pump_grid()?;
                let object = analytic_profile(&spec, &grid)?;
                let crystal = self.crystal_spec()?;
                let planes = self.integration().planes(crystal.length_z);
                let z = if planes.len() > 1 {
                    Axis::new(planes[0], planes[1] - planes[0], planes.len())?
                } else {
                    Axis::new(0.0, 1.0, 1)?
                };
                let field =
                    field_through_crystal(&object, &self.lens_spec(), &grid, &z, self.lens.quadrature_order)?;
                Ok(field.peak_normalized())
            }
        }
    }
}

/// Sets `a.b.c = value` in `table`; the value is parsed as TOML, or taken as a string.
fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{item}' is not of the form key=value")))?;
    let key = key.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {}", raw.trim())) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts
        .pop()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::Config(format!("empty override key in '{item}'")))?;
    let mut node = table;
    for part in parts {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("'{part}' in '{key}' is not a table")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

/// Everything derived from a configuration that a map needs.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub set: SellmeierSet,
    pub crystal: CrystalSpec,
    pub matcher: PhaseMatcher,
    pub pump: SampledField,
    pub scan: DetectorScan,
    pub integration: Integration,
}

impl Simulation {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let set = cfg.sellmeier()?;
        let crystal = cfg.oriented_crystal(&set)?;
        let matcher = PhaseMatcher::for_crystal(&set, &crystal, cfg.pump_wavelength())?;
        Ok(Simulation {
            pump: cfg.pump_field()?,
            scan: cfg.detector_scan()?,
            integration: cfg.integration(),
            set,
            crystal,
            matcher,
        })
    }

    pub fn run(&self) -> Result<CoincidenceMap> {
        coincidence_map(&self.pump, self.matcher, &self.crystal, &self.scan, self.integration)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let (p, q) = (cfg.pump_spec(), PumpSpec::default());
        assert!((p.slits.width - q.slits.width).abs() < 1e-18);
        assert!((p.slits.pitch - q.slits.pitch).abs() < 1e-18);
        assert!((p.wavelength - q.wavelength).abs() < 1e-20);
        assert_eq!((p.sigma, p.slits.count), (q.sigma, q.slits.count));
        let (c, d) = (cfg.crystal_spec().unwrap(), CrystalSpec::default());
        assert!((c.cut_angle - d.cut_angle).abs() < 1e-15);
        assert!((c.length_z - d.length_z).abs() < 1e-18);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml_str("[slits]\nwidht_um = 3").is_err());
        assert!(RunConfig::from_toml_str("colour = 1").is_err());
    }

    #[test]
    fn round_trip_and_hash() {
        let mut cfg = RunConfig::default();
        cfg.crystal.tilt_deg = Some(-0.5);
        let text = cfg.to_toml().unwrap();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash().unwrap(), cfg.hash().unwrap());
        assert_eq!(cfg.hash().unwrap().len(), 64);
        assert_ne!(cfg.hash().unwrap(), RunConfig::default().hash().unwrap());
    }

    #[test]
    fn overrides_win() {
        let cfg = RunConfig::from_toml_with_overrides(
            "[slits]\npitch_um = 50\n",
            &["slits.pitch_um=200".into(), "crystal.process=type2".into(), "output_dir=/tmp/x".into()],
        )
        .unwrap();
        assert_eq!(cfg.slits.pitch_um, 200.0);
        assert_eq!(cfg.crystal.process, Process::TypeIIEoe);
        assert_eq!(cfg.output_dir, PathBuf::from("/tmp/x"));
        assert!(RunConfig::from_toml_with_overrides("", &["slits.bogus=1".into()]).is_err());
        assert!(RunConfig::from_toml_with_overrides("", &["novalue".into()]).is_err());
    }

    #[test]
    fn default_scan_window() {
        let scan = RunConfig::default().detector_scan().unwrap();
        // 100 + 15 + 150 um, rounded up to a multiple of 3 um
        assert_eq!(scan.signal.len, 179);
        assert!((scan.signal.start + 267e-6).abs() < 1e-15);
        assert_eq!(scan.signal, scan.idler);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(RunConfig::from_toml_str("[slits]\ncount = 0").is_err());
        assert!(RunConfig::from_toml_str("[pump]\nsigma_um = -1").is_err());
        assert!(RunConfig::from_toml_str("[pump]\nsource = \"measured\"").is_err());
        assert!(RunConfig::from_toml_str("[detectors]\nstep_um = 0").is_err());
    }
}
