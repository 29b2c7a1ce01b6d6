//! Coincidence maps from incoherent summation over emission points in the crystal.
//!
//! Each emission point (x_c, z_c) contributes |A_p|^2 times the sinc^2 weight of
//! the phase mismatch for the two directions pointing from it to the detector
//! points (x_s, D) and (x_i, D). Detector coordinates are crystal-equivalent:
//! D = 0 is the plane conjugate to the crystal centre, and photons are always
//! forward-propagating, so for D - z_c < 0 the direction is the one whose
//! backward extension meets the detector point.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phasematch::{
    sinc, CrystalSpec, Direction, PhaseMatcher, PhaseMismatch, Process, SincConvention,
};
use crate::pump::{Axis, SampledField};

const MIN_LEVER: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegrationMode {
    /// Transverse sinc^2 peak integrated in closed form around its root.
    #[default]
    Resolved,
    /// Literal sum over a uniform crystal grid.
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integration {
    pub mode: IntegrationMode,
    pub z_planes: usize,
    /// Transverse crystal step of the grid mode.
    pub grid_step: f64,
    pub sinc_convention: SincConvention,
}

impl Default for Integration {
    fn default() -> Self {
        Integration {
            mode: IntegrationMode::Resolved,
            z_planes: 21,
            grid_step: 1e-6,
            sinc_convention: SincConvention::Full,
        }
    }
}

impl Integration {
    pub fn validate(&self) -> Result<()> {
        if self.z_planes == 0 {
            return Err(Error::Config("need at least one z plane".into()));
        }
        if !(self.grid_step > 0.0) {
            return Err(Error::Config(format!("grid step {} must be positive", self.grid_step)));
        }
        Ok(())
    }

    /// Midpoints of `z_planes` equal slabs across the crystal.
    pub fn planes(&self, length_z: f64) -> Vec<f64> {
        let dz = length_z / self.z_planes as f64;
        (0..self.z_planes)
            .map(|k| -0.5 * length_z + (k as f64 + 0.5) * dz)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorScan {
    pub signal: Axis,
    pub idler: Axis,
    /// 0 for point detectors.
    pub aperture_half_width: f64,
    /// Signed distance of the detector plane from the crystal centre.
    pub distance: f64,
    pub subaperture_points: usize,
}

impl DetectorScan {
    /// Identical signal and idler axes at k * step, |k * step| <= half_width.
    pub fn symmetric(half_width: f64, step: f64) -> Result<Self> {
        let axis = Axis::symmetric_nodes(half_width, step)?;
        Ok(DetectorScan {
            signal: axis,
            idler: axis,
            aperture_half_width: 0.0,
            distance: 0.0,
            subaperture_points: 1,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.signal.len == 0 || self.idler.len == 0 {
            return Err(Error::Config("detector scan is empty".into()));
        }
        if !(self.signal.step > 0.0 && self.idler.step > 0.0) {
            return Err(Error::Config("detector step must be positive".into()));
        }
        if !(self.aperture_half_width >= 0.0) {
            return Err(Error::Config(format!(
                "aperture half-width {} must be non-negative",
                self.aperture_half_width
            )));
        }
        if !self.distance.is_finite() {
            return Err(Error::Config("detector distance must be finite".into()));
        }
        if self.subaperture_points == 0 {
            return Err(Error::Config("need at least one sub-aperture point".into()));
        }
        Ok(())
    }

    /// Midpoint offsets across the aperture.
    pub fn offsets(&self) -> Vec<f64> {
        let m = self.subaperture_points;
        let a = self.aperture_half_width;
        if a == 0.0 {
            return vec![0.0];
        }
        (0..m)
            .map(|j| a * ((2 * j + 1) as f64 / m as f64 - 1.0))
            .collect()
    }
}

/// Snapshot of the inputs that produced a map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapMetadata {
    pub process: Process,
    pub pump_angle_deg: f64,
    pub length_x_mm: f64,
    pub length_z_mm: f64,
    pub sinc_convention: SincConvention,
    pub mode: IntegrationMode,
    pub z_planes: usize,
    pub grid_step_um: f64,
    pub pump_step_um: f64,
    pub detector_distance_mm: f64,
    pub aperture_half_width_um: f64,
    pub subaperture_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceMap {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    /// Row-major over x1 then x2.
    pub rates: Vec<f64>,
    pub metadata: Option<MapMetadata>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detector {
    Signal,
    Idler,
}

impl CoincidenceMap {
    pub fn new(x1: Vec<f64>, x2: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if rates.len() != x1.len() * x2.len() {
            return Err(Error::Domain(format!(
                "{} rates for a {}x{} map",
                rates.len(),
                x1.len(),
                x2.len()
            )));
        }
        if let Some(bad) = rates.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
            return Err(Error::Domain(format!("map entry {bad} is not a finite non-negative rate")));
        }
        Ok(CoincidenceMap {
            x1,
            x2,
            rates,
            metadata: None,
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rates[i * self.x2.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.x2.len();
        &self.rates[i * n..(i + 1) * n]
    }

    pub fn total(&self) -> f64 {
        self.rates.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.rates.iter().copied().fold(0.0, f64::max)
    }
}

/// Row sums (signal) or column sums (idler) of the map.
pub fn singles_profile(map: &CoincidenceMap, which: Detector) -> Vec<f64> {
    match which {
        Detector::Signal => (0..map.x1.len()).map(|i| map.row(i).iter().sum()).collect(),
        Detector::Idler => {
            let mut out = vec![0.0; map.x2.len()];
            for i in 0..map.x1.len() {
                for (o, r) in out.iter_mut().zip(map.row(i)) {
                    *o += r;
                }
            }
            out
        }
    }
}

/// Forward direction from (x_c, z_c) whose line meets x_det on the detector plane.
fn direction(offset: f64, lever: f64) -> Direction {
    let r = offset.hypot(lever);
    Direction {
        sin: lever.signum() * offset / r,
        cos: lever.abs() / r,
    }
}

/// Everything fixed for one map.
#[derive(Debug, Clone, Copy)]
pub struct Engine<'a> {
    pub matcher: PhaseMatcher,
    pub crystal: &'a CrystalSpec,
    pub pump: &'a SampledField,
    pub integration: Integration,
    pub distance: f64,
}

impl Engine<'_> {
    fn mismatch(&self, x_c: f64, lever: f64, x_s: f64, x_i: f64) -> PhaseMismatch {
        self.matcher
            .delta_k(direction(x_s - x_c, lever), direction(x_i - x_c, lever))
    }

    fn scales(&self) -> (f64, f64) {
        let s = self.integration.sinc_convention.scale();
        (self.crystal.length_x * s, self.crystal.length_z * s)
    }

    /// |A_p(x_c, z_c)|^2 sinc^2(dk_x S_x) sinc^2(dk_z S_z).
    pub fn point_weight(&self, x_c: f64, z_c: f64, x_s: f64, x_i: f64) -> Result<f64> {
        if x_c.abs() > 0.5 * self.crystal.length_x || z_c.abs() > 0.5 * self.crystal.length_z {
            return Err(Error::Domain(format!(
                "crystal point ({:.3} um, {:.3} mm) lies outside the crystal",
                x_c * 1e6,
                z_c * 1e3
            )));
        }
        let intensity = self.pump.intensity_at(x_c, z_c).ok_or_else(|| {
            Error::Domain(format!("crystal point x = {:.3} um is outside the pump grid", x_c * 1e6))
        })?;
        let lever = self.distance - z_c;
        if lever.abs() < MIN_LEVER {
            return Err(Error::Domain(format!(
                "emission point at z = {:.6} mm lies on the detector plane",
                z_c * 1e3
            )));
        }
        let dk = self.mismatch(x_c, lever, x_s, x_i);
        let (sx, sz) = self.scales();
        let v = sinc(dk.dk_x * sx) * sinc(dk.dk_z * sz);
        Ok(intensity * v * v)
    }

    /// d(dk_x)/d(x_c) at fixed detector points.
    fn transverse_slope(&self, x_c: f64, lever: f64, x_s: f64, x_i: f64) -> f64 {
        let s = direction(x_s - x_c, lever);
        let i = direction(x_i - x_c, lever);
        let rs2 = (x_s - x_c).powi(2) + lever * lever;
        let ri2 = (x_i - x_c).powi(2) + lever * lever;
        let (k_i, dk_i) = self.matcher.idler_wavenumber(i.angle());
        self.matcher.k_signal * s.cos * lever / rs2 + (k_i * i.cos + dk_i * i.sin) * lever / ri2
    }

    /// Root of dk_x in x_c between the two detector points.
    fn transverse_root(&self, lever: f64, x_s: f64, x_i: f64) -> Option<f64> {
        if self.matcher.is_isotropic() {
            return Some(0.5 * (x_s + x_i));
        }
        let g = |x: f64| self.mismatch(x, lever, x_s, x_i).dk_x;
        let (mut lo, mut hi) = (x_s.min(x_i), x_s.max(x_i));
        if lo == hi {
            return Some(lo);
        }
        let limit = 0.5 * self.crystal.length_x;
        let mut g_lo = g(lo);
        let mut g_hi = g(hi);
        while g_lo.signum() == g_hi.signum() && g_lo != 0.0 && g_hi != 0.0 {
            let width = hi - lo;
            if lo < -limit && hi > limit {
                return None;
            }
            lo -= width;
            hi += width;
            g_lo = g(lo);
            g_hi = g(hi);
        }
        if g_lo == 0.0 {
            return Some(lo);
        }
        if g_hi == 0.0 {
            return Some(hi);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let gm = g(mid);
            if gm == 0.0 {
                return Some(mid);
            }
            if gm.signum() == g_lo.signum() {
                lo = mid;
                g_lo = gm;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Integral over x_c of the point weight at one plane, resolving the
    /// transverse sinc^2 as a delta of weight pi / (S_x |d dk_x / d x_c|).
    fn resolved_plane(&self, z_c: f64, x_s: f64, x_i: f64) -> f64 {
        let lever = self.distance - z_c;
        if lever.abs() < MIN_LEVER {
            return 0.0;
        }
        let Some(x_c) = self.transverse_root(lever, x_s, x_i) else {
            return 0.0;
        };
        if x_c.abs() > 0.5 * self.crystal.length_x {
            return 0.0;
        }
        let intensity = match self.pump.intensity_at(x_c, z_c) {
            Some(v) if v > 0.0 => v,
            _ => return 0.0,
        };
        let dk = self.mismatch(x_c, lever, x_s, x_i);
        let (sx, sz) = self.scales();
        let slope = self.transverse_slope(x_c, lever, x_s, x_i).abs();
        if slope == 0.0 {
            return 0.0;
        }
        let w = sinc(dk.dk_z * sz);
        intensity * w * w * PI / (sx * slope)
    }

    fn grid_points(&self) -> Vec<(f64, f64)> {
        let step = self.integration.grid_step;
        let half = 0.5 * self.crystal.length_x;
        let (lo, hi) = (self.pump.x.start.max(-half), self.pump.x.end().min(half));
        let first = ((lo / step) - 0.5).ceil() as i64;
        let last = ((hi / step) - 0.5).floor() as i64;
        (first..=last)
            .map(|k| (k as f64 + 0.5) * step)
            .filter_map(|x| {
                let a = self.pump.intensity_at(x, 0.0)?;
                Some((x, a))
            })
            .filter(|&(_, a)| a > 0.0 || self.pump.z.is_some())
            .collect()
    }

    fn grid_plane(&self, points: &[(f64, f64)], z_c: f64, x_s: f64, x_i: f64) -> f64 {
        let lever = self.distance - z_c;
        if lever.abs() < MIN_LEVER {
            return 0.0;
        }
        let (sx, sz) = self.scales();
        let mut sum = 0.0;
        for &(x_c, _) in points {
            let intensity = self.pump.intensity_at(x_c, z_c).unwrap_or(0.0);
            if intensity == 0.0 {
                continue;
            }
            let dk = self.mismatch(x_c, lever, x_s, x_i);
            let v = sinc(dk.dk_x * sx) * sinc(dk.dk_z * sz);
            sum += intensity * v * v;
        }
        sum * self.integration.grid_step
    }
}

/// Rate for every (x1, x2) pair of `scan`; rows run in parallel, each entry
/// sums planes, aperture points and crystal points in a fixed order.
pub fn coincidence_map(
    pump: &SampledField,
    matcher: PhaseMatcher,
    crystal: &CrystalSpec,
    scan: &DetectorScan,
    integration: Integration,
) -> Result<CoincidenceMap> {
    crystal.validate()?;
    scan.validate()?;
    integration.validate()?;
    let engine = Engine {
        matcher,
        crystal,
        pump,
        integration,
        distance: scan.distance,
    };
    let planes = integration.planes(crystal.length_z);
    let dz = crystal.length_z / integration.z_planes as f64;
    let offsets = scan.offsets();
    let norm = dz / (offsets.len() * offsets.len()) as f64;
    let grid = match integration.mode {
        IntegrationMode::Grid => engine.grid_points(),
        IntegrationMode::Resolved => Vec::new(),
    };
    let x1 = scan.signal.values();
    let x2 = scan.idler.values();
    let rates: Vec<f64> = x1
        .par_iter()
        .flat_map_iter(|&xs| {
            let engine = &engine;
            let planes = &planes;
            let offsets = &offsets;
            let grid = &grid;
            x2.iter().map(move |&xi| {
                let mut sum = 0.0;
                for &os in offsets {
                    for &oi in offsets {
                        for &z in planes {
                            sum += match integration.mode {
                                IntegrationMode::Resolved => engine.resolved_plane(z, xs + os, xi + oi),
                                IntegrationMode::Grid => engine.grid_plane(grid, z, xs + os, xi + oi),
                            };
                        }
                    }
                }
                sum * norm
            })
        })
        .collect();
    let mut map = CoincidenceMap::new(x1, x2.clone(), rates)?;
    map.metadata = Some(MapMetadata {
        process: crystal.process,
        pump_angle_deg: crystal.pump_angle().to_degrees(),
        length_x_mm: crystal.length_x * 1e3,
        length_z_mm: crystal.length_z * 1e3,
        sinc_convention: integration.sinc_convention,
        mode: integration.mode,
        z_planes: integration.z_planes,
        grid_step_um: integration.grid_step * 1e6,
        pump_step_um: pump.x.step * 1e6,
        detector_distance_mm: scan.distance * 1e3,
        aperture_half_width_um: scan.aperture_half_width * 1e6,
        subaperture_points: scan.subaperture_points,
    });
    Ok(map)
}
