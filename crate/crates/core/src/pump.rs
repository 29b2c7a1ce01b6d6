//! Pump amplitude at the crystal: slit boxes under a Gaussian envelope, or a
//! measured intensity profile.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlitSpec {
    pub width: f64,
    /// Centre-to-centre distance.
    pub pitch: f64,
    pub count: usize,
    /// Unused by the two-dimensional model.
    pub height: f64,
}

impl Default for SlitSpec {
    fn default() -> Self {
        SlitSpec {
            width: 30e-6,
            pitch: 100e-6,
            count: 3,
            height: 300e-6,
        }
    }
}

impl SlitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0) {
            return Err(Error::Config(format!("slit width {} must be positive", self.width)));
        }
        if self.count == 0 {
            return Err(Error::Config("slit count must be at least 1".into()));
        }
        if self.count > 1 && !(self.pitch > self.width) {
            return Err(Error::Config(format!(
                "slit pitch {} must exceed the width {}",
                self.pitch, self.width
            )));
        }
        Ok(())
    }

    /// Slit centres, symmetric about the middle slit.
    pub fn centers(&self) -> Vec<f64> {
        let mid = (self.count as f64 - 1.0) / 2.0;
        (0..self.count)
            .map(|j| (j as f64 - mid) * self.pitch)
            .collect()
    }

    /// Half-width of the region covered by the slits.
    pub fn half_extent(&self) -> f64 {
        (self.count as f64 - 1.0) / 2.0 * self.pitch + self.width / 2.0
    }

    /// Half-open box membership, [c - w/2, c + w/2).
    pub fn transmits(&self, x: f64) -> bool {
        let hw = self.width / 2.0;
        self.centers().iter().any(|&c| x >= c - hw && x < c + hw)
    }
}

/// Whether the quoted Gaussian width is the RMS of the amplitude or of the intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaConvention {
    #[default]
    Amplitude,
    Intensity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PumpSource {
    #[default]
    Analytic,
    Imaged,
    Measured,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PumpSpec {
    pub wavelength: f64,
    pub sigma: f64,
    pub sigma_convention: SigmaConvention,
    pub slits: SlitSpec,
    pub source: PumpSource,
}

impl Default for PumpSpec {
    fn default() -> Self {
        PumpSpec {
            wavelength: 405e-9,
            sigma: 300e-6,
            sigma_convention: SigmaConvention::Amplitude,
            slits: SlitSpec::default(),
            source: PumpSource::Analytic,
        }
    }
}

impl PumpSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::Config(format!("pump sigma {} must be positive", self.sigma)));
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::Config(format!(
                "pump wavelength {} must be positive",
                self.wavelength
            )));
        }
        self.slits.validate()
    }

    /// Gaussian amplitude envelope.
    pub fn envelope(&self, x: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        match self.sigma_convention {
            SigmaConvention::Amplitude => (-x * x / (2.0 * s2)).exp(),
            SigmaConvention::Intensity => (-x * x / (4.0 * s2)).exp(),
        }
    }

    /// Cell-centred grid spanning at least +-(count * pitch) and the slit support.
    pub fn default_grid(&self, step: f64) -> Result<Axis> {
        let half = (self.slits.count as f64 * self.slits.pitch)
            .max(self.slits.half_extent() + self.slits.width);
        Axis::centered_cells(half, step)
    }
}

/// Uniform, strictly increasing coordinate axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Axis {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(step > 0.0) || !start.is_finite() {
            return Err(Error::Domain(format!("axis step {step} must be positive")));
        }
        if len == 0 {
            return Err(Error::Domain("axis must have at least one point".into()));
        }
        Ok(Axis { start, step, len })
    }

    /// Points (k + 1/2) * step for k in -n..n, covering [-half, half].
    pub fn centered_cells(half: f64, step: f64) -> Result<Self> {
        if !(half > 0.0) {
            return Err(Error::Domain(format!("half-width {half} must be positive")));
        }
        let n = (half / step).ceil() as usize;
        Axis::new(-(n as f64 - 0.5) * step, step, 2 * n)
    }

    /// Points k * step for k in -n..=n with n * step >= half.
    pub fn symmetric_nodes(half: f64, step: f64) -> Result<Self> {
        if !(half >= 0.0) {
            return Err(Error::Domain(format!("half-width {half} must be non-negative")));
        }
        let n = (half / step - 1e-9).ceil().max(0.0) as usize;
        Axis::new(-(n as f64) * step, step, 2 * n + 1)
    }

    pub fn value(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.value(i)).collect()
    }

    pub fn end(&self) -> f64 {
        self.value(self.len - 1)
    }

    /// Index below `x` and the fractional offset toward the next sample.
    pub fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let t = (x - self.start) / self.step;
        let last = (self.len - 1) as f64;
        if !(t >= -1e-9 && t <= last + 1e-9) {
            return None;
        }
        let t = t.clamp(0.0, last);
        let i = (t.floor() as usize).min(self.len.saturating_sub(2));
        Some((i, t - i as f64))
    }
}

/// Complex amplitude sampled on an x grid, optionally stacked over z planes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub x: Axis,
    pub z: Option<Axis>,
    /// Row-major over (z, x).
    pub values: Vec<Complex64>,
}

impl SampledField {
    pub fn new(x: Axis, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != x.len {
            return Err(Error::Domain(format!(
                "{} values for an axis of {} points",
                values.len(),
                x.len
            )));
        }
        Ok(SampledField { x, z: None, values })
    }

    pub fn with_planes(x: Axis, z: Axis, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != x.len * z.len {
            return Err(Error::Domain(format!(
                "{} values for a {}x{} grid",
                values.len(),
                z.len,
                x.len
            )));
        }
        Ok(SampledField {
            x,
            z: Some(z),
            values,
        })
    }

    pub fn real(x: Axis, values: impl IntoIterator<Item = f64>) -> Result<Self> {
        Self::new(x, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    pub fn planes(&self) -> usize {
        self.z.map_or(1, |z| z.len)
    }

    pub fn plane(&self, k: usize) -> &[Complex64] {
        &self.values[k * self.x.len..(k + 1) * self.x.len]
    }

    fn interpolate_plane(&self, k: usize, x: f64) -> Option<Complex64> {
        let row = self.plane(k);
        if self.x.len == 1 {
            return ((x - self.x.start).abs() < 1e-15).then_some(row[0]);
        }
        let (i, t) = self.x.locate(x)?;
        Some(row[i] * (1.0 - t) + row[i + 1] * t)
    }

    /// Linear interpolation in x (and between z planes). `None` outside the grid.
    /// A field without z planes is taken as independent of z.
    pub fn amplitude_at(&self, x: f64, z: f64) -> Option<Complex64> {
        match self.z {
            None => self.interpolate_plane(0, x),
            Some(zaxis) if zaxis.len == 1 => self.interpolate_plane(0, x),
            Some(zaxis) => {
                let (k, t) = zaxis.locate(z)?;
                let a = self.interpolate_plane(k, x)?;
                let b = self.interpolate_plane(k + 1, x)?;
                Some(a * (1.0 - t) + b * t)
            }
        }
    }

    pub fn intensity_at(&self, x: f64, z: f64) -> Option<f64> {
        self.amplitude_at(x, z).map(|a| a.norm_sqr())
    }

    pub fn peak_amplitude(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Scales so the largest |amplitude| is 1; an all-zero field is returned unchanged.
    pub fn peak_normalized(mut self) -> Self {
        let peak = self.peak_amplitude();
        if peak > 0.0 {
            for v in &mut self.values {
                *v /= peak;
            }
        }
        self
    }

    /// sum |A|^2 dx over the first plane.
    pub fn integrated_intensity(&self) -> f64 {
        self.plane(0).iter().map(|v| v.norm_sqr()).sum::<f64>() * self.x.step
    }

    /// Smallest x-step check used before coincidence integration.
    pub fn check_resolution(&self, feature: f64) -> Result<()> {
        check_resolution(feature, self.x.step)
    }
}

pub(crate) fn check_resolution(feature: f64, step: f64) -> Result<()> {
    let samples = feature / step;
    if samples < 2.0 {
        return Err(Error::Resolution {
            samples_per_feature: samples,
            feature_um: feature * 1e6,
        });
    }
    Ok(())
}

/// Slit boxes times the Gaussian envelope, sampled on `grid`.
pub fn analytic_profile(spec: &PumpSpec, grid: &Axis) -> Result<SampledField> {
    spec.validate()?;
    check_resolution(spec.slits.width, grid.step)?;
    let extent = spec.slits.half_extent();
    if grid.start > -extent || grid.end() < extent {
        return Err(Error::Domain(format!(
            "pump grid [{:.1}, {:.1}] um does not cover the slits at +-{:.1} um",
            grid.start * 1e6,
            grid.end() * 1e6,
            extent * 1e6
        )));
    }
    let values = grid.values().into_iter().map(|x| {
        if spec.slits.transmits(x) {
            spec.envelope(x)
        } else {
            0.0
        }
    });
    SampledField::real(*grid, values)
}

/// Reads a two-column `x_um,intensity` CSV and returns amplitudes sqrt(I / I_max).
///
/// `calibration` multiplies the recorded positions, e.g. to undo a relay
/// magnification; 1.0 keeps them as crystal-plane micrometres.
pub fn load_measured_profile(path: impl AsRef<Path>, calibration: f64) -> Result<SampledField> {
    let path = path.as_ref();
    if !(calibration > 0.0) {
        return Err(Error::Config(format!("calibration {calibration} must be positive")));
    }
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => parse_err(1, format!("{other:?}")),
        })?;
    let headers = reader.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "x_um" || &headers[1] != "intensity" {
        return Err(parse_err(1, format!("expected header 'x_um,intensity', got '{}'", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut xs = Vec::new();
    let mut intensities = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let line = k + 2;
        let record = record.map_err(|e| parse_err(line, e.to_string()))?;
        let field = |i: usize| -> Result<f64> {
            record
                .get(i)
                .ok_or_else(|| parse_err(line, "missing column".into()))?
                .parse::<f64>()
                .map_err(|e| parse_err(line, e.to_string()))
        };
        let x = field(0)?;
        let intensity = field(1)?;
        if !x.is_finite() || !intensity.is_finite() {
            return Err(parse_err(line, "non-finite value".into()));
        }
        if intensity < 0.0 {
            return Err(Error::Validation(format!(
                "{}:{line}: negative intensity {intensity}",
                path.display()
            )));
        }
        xs.push(x);
        intensities.push(intensity);
    }
    if xs.len() < 2 {
        return Err(Error::Validation(format!(
            "{}: need at least two samples",
            path.display()
        )));
    }
    let step = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::Validation(format!(
            "{}: positions must be strictly increasing",
            path.display()
        )));
    }
    for (k, w) in xs.windows(2).enumerate() {
        let d = w[1] - w[0];
        if !(d > 0.0) || (d - step).abs() > 1e-6 * step {
            return Err(Error::Validation(format!(
                "{}:{}: non-uniform spacing {d} um (expected {step} um)",
                path.display(),
                k + 3
            )));
        }
    }
    let peak = intensities.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(Error::Validation(format!(
            "{}: profile has no positive intensity",
            path.display()
        )));
    }
    let axis = Axis::new(xs[0] * 1e-6 * calibration, step * 1e-6 * calibration, xs.len())?;
    SampledField::real(axis, intensities.into_iter().map(|i| (i / peak).sqrt()))
}
