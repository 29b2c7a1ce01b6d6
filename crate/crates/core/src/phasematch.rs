//! Phase mismatch between pump, signal and idler plane waves and the sinc
//! intensity weight of a finite crystal.
//!
//! Geometry is two-dimensional: the pump propagates along +z, transverse
//! positions run along x. Directions are unit vectors in the x-z plane.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::dispersion::{index_ellipse, SellmeierSet};
use crate::error::{Error, Result};

/// Maximum residual |dk_z| accepted at a collinear root, rad/m.
pub const COLLINEAR_TOLERANCE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Process {
    /// e -> o + o
    #[serde(rename = "type1")]
    TypeIEoo,
    /// e -> o + e
    #[serde(rename = "type2")]
    TypeIIEoe,
}

impl std::fmt::Display for Process {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Process::TypeIEoo => "type1",
            Process::TypeIIEoe => "type2",
        })
    }
}

/// Plane containing the optic axis and the pump.
///
/// Only matters for an extraordinary daughter photon: `Perpendicular`
/// places the optic axis in the y-z plane so the idler's angle to it depends
/// on its x-z deflection only at second order; `Scan` tilts the axis toward +x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OpticAxisPlane {
    #[default]
    #[serde(rename = "yz")]
    Perpendicular,
    #[serde(rename = "xz")]
    Scan,
}

/// Length scaling inside the sinc arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SincConvention {
    /// sinc(dk L)
    #[default]
    Full,
    /// sinc(dk L / 2)
    Half,
}

impl SincConvention {
    pub fn scale(self) -> f64 {
        match self {
            SincConvention::Full => 1.0,
            SincConvention::Half => 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrystalSpec {
    /// Angle between optic axis and face normal, rad.
    pub cut_angle: f64,
    pub length_x: f64,
    /// Recorded for completeness; the y sinc factor is fixed at 1.
    pub length_y: f64,
    pub length_z: f64,
    pub process: Process,
    /// Pump angle to the optic axis is `cut_angle + tilt`.
    pub tilt: f64,
    pub optic_axis_plane: OpticAxisPlane,
}

impl Default for CrystalSpec {
    fn default() -> Self {
        CrystalSpec {
            cut_angle: 29.3f64.to_radians(),
            length_x: 5e-3,
            length_y: 5e-3,
            length_z: 10e-3,
            process: Process::TypeIEoo,
            tilt: 0.0,
            optic_axis_plane: OpticAxisPlane::default(),
        }
    }
}

impl CrystalSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.length_x > 0.0 && self.length_z > 0.0 && self.length_y >= 0.0) {
            return Err(Error::Config(format!(
                "crystal lengths must be positive (L_x = {}, L_z = {})",
                self.length_x, self.length_z
            )));
        }
        if !(self.cut_angle > 0.0 && self.cut_angle < FRAC_PI_2) {
            return Err(Error::Config(format!(
                "cut angle {} rad outside (0, pi/2)",
                self.cut_angle
            )));
        }
        let alpha = self.pump_angle();
        if !(0.0..=FRAC_PI_2).contains(&alpha) {
            return Err(Error::Config(format!(
                "pump angle to the optic axis {alpha} rad outside [0, pi/2]"
            )));
        }
        Ok(())
    }

    pub fn pump_angle(&self) -> f64 {
        self.cut_angle + self.tilt
    }

    /// Returns a copy tilted so the pump sits at the collinear phase-matching angle.
    pub fn tilted_to_collinear(&self, set: &SellmeierSet, pump_wavelength: f64) -> Result<Self> {
        let alpha = find_collinear_angle(set, pump_wavelength, self.process)?;
        Ok(CrystalSpec {
            tilt: alpha - self.cut_angle,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseMismatch {
    pub dk_x: f64,
    /// Always zero in the two-dimensional reduction.
    pub dk_y: f64,
    pub dk_z: f64,
}

/// Unit vector in the x-z plane, stored as (sin, cos) of the angle from +z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub sin: f64,
    pub cos: f64,
}

impl Direction {
    pub const AXIAL: Direction = Direction { sin: 0.0, cos: 1.0 };

    pub fn from_angle(theta: f64) -> Self {
        let (sin, cos) = theta.sin_cos();
        Direction { sin, cos }
    }

    /// `(x, z)` components; must already be normalized.
    pub fn from_unit(x: f64, z: f64) -> Result<Self> {
        let norm = (x * x + z * z).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "direction ({x}, {z}) has norm {norm}, expected a unit vector"
            )));
        }
        Ok(Direction { sin: x, cos: z })
    }

    pub fn angle(&self) -> f64 {
        self.sin.atan2(self.cos)
    }
}

/// Wave vector of magnitude 2 pi n / lambda along `direction`, as (k_x, k_z).
pub fn wave_vector(wavelength: f64, index: f64, direction: Direction) -> Result<[f64; 2]> {
    if !(wavelength > 0.0) {
        return Err(Error::Domain(format!("wavelength {wavelength} must be positive")));
    }
    let direction = Direction::from_unit(direction.sin, direction.cos)?;
    let k = 2.0 * PI * index / wavelength;
    Ok([k * direction.sin, k * direction.cos])
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum IdlerIndex {
    Ordinary { k: f64 },
    Extraordinary { k_vacuum: f64, no: f64, ne: f64 },
}

/// Precomputed wave numbers for degenerate down-conversion at a fixed pump angle.
///
/// Signal and idler wavelengths are both twice the pump wavelength. The pump
/// is extraordinary at `alpha` from the optic axis, the signal ordinary, and
/// the idler ordinary (type I) or extraordinary (type II).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMatcher {
    pub k_pump: f64,
    pub k_signal: f64,
    idler: IdlerIndex,
    alpha: f64,
    plane: OpticAxisPlane,
}

impl PhaseMatcher {
    pub fn new(
        set: &SellmeierSet,
        process: Process,
        plane: OpticAxisPlane,
        alpha: f64,
        pump_wavelength: f64,
    ) -> Result<Self> {
        let daughter = 2.0 * pump_wavelength;
        let k_pump = 2.0 * PI * set.n_e_angle(pump_wavelength, alpha)? / pump_wavelength;
        let no = set.n_ordinary(daughter)?;
        let k_signal = 2.0 * PI * no / daughter;
        let idler = match process {
            Process::TypeIEoo => IdlerIndex::Ordinary { k: k_signal },
            Process::TypeIIEoe => IdlerIndex::Extraordinary {
                k_vacuum: 2.0 * PI / daughter,
                no,
                ne: set.n_extraordinary_principal(daughter)?,
            },
        };
        Ok(PhaseMatcher {
            k_pump,
            k_signal,
            idler,
            alpha,
            plane,
        })
    }

    pub fn for_crystal(set: &SellmeierSet, crystal: &CrystalSpec, pump_wavelength: f64) -> Result<Self> {
        Self::new(
            set,
            crystal.process,
            crystal.optic_axis_plane,
            crystal.pump_angle(),
            pump_wavelength,
        )
    }

    /// True when the idler wave number does not depend on direction.
    pub fn is_isotropic(&self) -> bool {
        matches!(self.idler, IdlerIndex::Ordinary { .. })
    }

    /// Angle between a direction at `theta` from +z and the optic axis, with
    /// d(axis angle)/d(theta).
    fn axis_angle(&self, theta: f64) -> (f64, f64) {
        match self.plane {
            OpticAxisPlane::Scan => {
                let t = self.alpha - theta;
                (t.abs(), -t.signum())
            }
            OpticAxisPlane::Perpendicular => {
                let c = (self.alpha.cos() * theta.cos()).clamp(-1.0, 1.0);
                let t = c.acos();
                let s = t.sin();
                let dt = if s > 0.0 {
                    self.alpha.cos() * theta.sin() / s
                } else {
                    0.0
                };
                (t, dt)
            }
        }
    }

    /// Idler wave number at `theta` from +z, with its derivative in theta.
    pub fn idler_wavenumber(&self, theta: f64) -> (f64, f64) {
        match self.idler {
            IdlerIndex::Ordinary { k } => (k, 0.0),
            IdlerIndex::Extraordinary { k_vacuum, no, ne } => {
                let (t, dt) = self.axis_angle(theta);
                let t = t.min(FRAC_PI_2);
                let n = index_ellipse(no, ne, t);
                let dn = -0.5 * n.powi(3) * (2.0 * t).sin() * (1.0 / (ne * ne) - 1.0 / (no * no));
                (k_vacuum * n, k_vacuum * dn * dt)
            }
        }
    }

    pub fn delta_k(&self, signal: Direction, idler: Direction) -> PhaseMismatch {
        let (k_idler, _) = self.idler_wavenumber(idler.angle());
        PhaseMismatch {
            dk_x: -self.k_signal * signal.sin - k_idler * idler.sin,
            dk_y: 0.0,
            dk_z: self.k_pump - self.k_signal * signal.cos - k_idler * idler.cos,
        }
    }
}

/// dk = k_p - k_s - k_i for a pump along z at `alpha` from the optic axis.
pub fn delta_k(
    set: &SellmeierSet,
    crystal: &CrystalSpec,
    alpha: f64,
    signal: Direction,
    idler: Direction,
    pump_wavelength: f64,
) -> Result<PhaseMismatch> {
    let signal = Direction::from_unit(signal.sin, signal.cos)?;
    let idler = Direction::from_unit(idler.sin, idler.cos)?;
    let matcher = PhaseMatcher::new(
        set,
        crystal.process,
        crystal.optic_axis_plane,
        alpha,
        pump_wavelength,
    )?;
    Ok(matcher.delta_k(signal, idler))
}

fn collinear_mismatch(set: &SellmeierSet, pump_wavelength: f64, process: Process, alpha: f64) -> Result<f64> {
    let m = PhaseMatcher::new(set, process, OpticAxisPlane::Scan, alpha, pump_wavelength)?;
    Ok(m.delta_k(Direction::AXIAL, Direction::AXIAL).dk_z)
}

/// Collinear degenerate phase-matching angle, bracketing on a 0.5 degree grid.
pub fn find_collinear_angle(set: &SellmeierSet, pump_wavelength: f64, process: Process) -> Result<f64> {
    find_collinear_angle_with_step(set, pump_wavelength, process, 0.5f64.to_radians())
}

pub fn find_collinear_angle_with_step(
    set: &SellmeierSet,
    pump_wavelength: f64,
    process: Process,
    step: f64,
) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::Domain(format!("bracketing step {step} must be positive")));
    }
    let f = |alpha: f64| collinear_mismatch(set, pump_wavelength, process, alpha);
    let mut lo = step.min(FRAC_PI_2 / 2.0);
    let mut f_lo = f(lo)?;
    let bracket = loop {
        let hi = (lo + step).min(FRAC_PI_2);
        let f_hi = f(hi)?;
        if f_lo == 0.0 {
            return Ok(lo);
        }
        if f_lo.signum() != f_hi.signum() {
            break (lo, hi, f_lo);
        }
        if hi >= FRAC_PI_2 {
            return Err(Error::NoSolution(format!(
                "dk_z keeps one sign for {process} at {:.1} nm over (0, 90) deg",
                pump_wavelength * 1e9
            )));
        }
        lo = hi;
        f_lo = f_hi;
    };
    let (mut a, mut b, mut fa) = bracket;
    while b - a > 1e-15 {
        let mid = 0.5 * (a + b);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    let root = 0.5 * (a + b);
    let residual = f(root)?;
    if residual.abs() >= COLLINEAR_TOLERANCE {
        return Err(Error::NoSolution(format!(
            "bisection stalled with |dk_z| = {residual} rad/m"
        )));
    }
    Ok(root)
}

/// Unnormalized sin(x)/x.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// |sinc(dk_x S_x) sinc(dk_z S_z)|^2 with S = L (full) or L/2 (half).
pub fn sinc_weight(dk: PhaseMismatch, crystal: &CrystalSpec, convention: SincConvention) -> f64 {
    let s = convention.scale();
    let v = sinc(dk.dk_x * crystal.length_x * s) * sinc(dk.dk_z * crystal.length_z * s);
    v * v
}

#[cfg(test)]
mod tests {
    use super::*;

    // 30-digit root of n_e(405 nm, a) = n_o(810 nm) for the default set.
    const TYPE_I_DEG: f64 = 28.670_403_834_812;
    // 2 n_e(405, a) = n_o(810) + n_e(810, a)
    const TYPE_II_DEG: f64 = 41.421_132_726_649;

    fn bbo() -> SellmeierSet {
        SellmeierSet::bbo()
    }

    #[test]
    fn vacuum_wave_vector() {
        let k = wave_vector(810e-9, 1.0, Direction::AXIAL).unwrap();
        assert_eq!(k[0], 0.0);
        assert!((k[1] - 2.0 * PI / 810e-9).abs() < 1e-6);
    }

    #[test]
    fn wave_vector_scales_with_index() {
        let n = bbo().n_ordinary(810e-9).unwrap();
        let d = Direction::from_angle(0.3);
        let k = wave_vector(810e-9, n, d).unwrap();
        let mag = (k[0] * k[0] + k[1] * k[1]).sqrt();
        assert!((mag / (2.0 * PI * n / 810e-9) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unnormalized_direction_rejected() {
        let err = wave_vector(810e-9, 1.0, Direction { sin: 1.0, cos: 1.0 }).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn collinear_type_one_matches_golden_root() {
        let a = find_collinear_angle(&bbo(), 405e-9, Process::TypeIEoo).unwrap();
        assert!((a.to_degrees() - TYPE_I_DEG).abs() < 1e-9);
        assert!((a.to_degrees() - 28.81).abs() < 0.25);
    }

    #[test]
    fn collinear_type_two_is_larger() {
        let set = bbo();
        let a1 = find_collinear_angle(&set, 405e-9, Process::TypeIEoo).unwrap();
        let a2 = find_collinear_angle(&set, 405e-9, Process::TypeIIEoe).unwrap();
        assert!((a2.to_degrees() - TYPE_II_DEG).abs() < 1e-9);
        assert!(a2 > a1);
        // brute-force scan: the only sign change of dk_z lies next to a2
        let mut changes = Vec::new();
        let mut prev = collinear_mismatch(&set, 405e-9, Process::TypeIIEoe, 0.001).unwrap();
        for i in 1..=8900 {
            let a = (i as f64 * 0.01).to_radians();
            let cur = collinear_mismatch(&set, 405e-9, Process::TypeIIEoe, a).unwrap();
            if cur.signum() != prev.signum() {
                changes.push(a);
            }
            prev = cur;
        }
        assert_eq!(changes.len(), 1);
        assert!((changes[0] - a2).abs() < 0.011f64.to_radians());
    }

    #[test]
    fn collinear_residual_below_tolerance() {
        let set = bbo();
        let a = find_collinear_angle(&set, 405e-9, Process::TypeIEoo).unwrap();
        let crystal = CrystalSpec::default();
        let dk = delta_k(&set, &crystal, a, Direction::AXIAL, Direction::AXIAL, 405e-9).unwrap();
        assert!(dk.dk_z.abs() < COLLINEAR_TOLERANCE);
        assert_eq!(dk.dk_x, 0.0);
    }

    #[test]
    fn bracketing_refinement_is_stable() {
        let set = bbo();
        let coarse = find_collinear_angle_with_step(&set, 405e-9, Process::TypeIEoo, 2f64.to_radians()).unwrap();
        let fine = find_collinear_angle_with_step(&set, 405e-9, Process::TypeIEoo, 0.05f64.to_radians()).unwrap();
        assert!((coarse - fine).abs() < 1e-12);
    }

    #[test]
    fn no_bracket_is_reported() {
        // too little birefringence: n_e(405) stays above n_o(810) at every angle
        let weak = include_str!("../data/bbo_eimerl.toml").replace("a = 2.3730", "a = 2.70");
        let set = SellmeierSet::from_toml_str(&weak).unwrap();
        let err = find_collinear_angle(&set, 405e-9, Process::TypeIEoo).unwrap_err();
        assert!(matches!(err, Error::NoSolution(_)), "{err}");
    }

    #[test]
    fn daughters_out_of_range_propagate() {
        let err = find_collinear_angle(&bbo(), 1064e-9, Process::TypeIEoo).unwrap_err();
        assert!(matches!(err, Error::WavelengthOutOfRange { .. }));
    }

    #[test]
    fn symmetric_pair_has_no_transverse_mismatch() {
        let set = bbo();
        let a = find_collinear_angle(&set, 405e-9, Process::TypeIEoo).unwrap();
        let eps = 0.01;
        let dk = delta_k(
            &set,
            &CrystalSpec::default(),
            a,
            Direction::from_angle(eps),
            Direction::from_angle(-eps),
            405e-9,
        )
        .unwrap();
        assert!(dk.dk_x.abs() < 1e-6);
    }

    #[test]
    fn pump_index_falls_past_collinear() {
        let set = bbo();
        let a = find_collinear_angle(&set, 405e-9, Process::TypeIEoo).unwrap();
        let dk = delta_k(
            &set,
            &CrystalSpec::default(),
            a + 1f64.to_radians(),
            Direction::AXIAL,
            Direction::AXIAL,
            405e-9,
        )
        .unwrap();
        // independent evaluation straight from the index ellipse
        let kp = 2.0 * PI * set.n_e_angle(405e-9, a + 1f64.to_radians()).unwrap() / 405e-9;
        let ks = 2.0 * PI * set.n_ordinary(810e-9).unwrap() / 810e-9;
        assert!(dk.dk_z < 0.0);
        assert!((dk.dk_z - (kp - 2.0 * ks)).abs() < 1e-6);
    }

    #[test]
    fn type_one_exchange_leaves_mismatch_unchanged() {
        let set = bbo();
        let a = find_collinear_angle(&set, 405e-9, Process::TypeIEoo).unwrap();
        let s = Direction::from_angle(0.004);
        let i = Direction::from_angle(-0.001);
        let c = CrystalSpec::default();
        let d1 = delta_k(&set, &c, a, s, i, 405e-9).unwrap();
        let d2 = delta_k(&set, &c, a, i, s, 405e-9).unwrap();
        assert_eq!(d1, d2);
    }

    #[test]
    fn idler_derivative_matches_finite_difference() {
        let set = bbo();
        let a = find_collinear_angle(&set, 405e-9, Process::TypeIIEoe).unwrap();
        for plane in [OpticAxisPlane::Scan, OpticAxisPlane::Perpendicular] {
            let m = PhaseMatcher::new(&set, Process::TypeIIEoe, plane, a, 405e-9).unwrap();
            for theta in [-0.02f64, -0.003, 0.001, 0.015] {
                let h = 1e-7;
                let fd = (m.idler_wavenumber(theta + h).0 - m.idler_wavenumber(theta - h).0) / (2.0 * h);
                let an = m.idler_wavenumber(theta).1;
                assert!((fd - an).abs() < 1e-4 * an.abs().max(1.0), "{plane:?} {theta}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn sinc_weight_basics() {
        let c = CrystalSpec::default();
        assert_eq!(sinc_weight(PhaseMismatch::default(), &c, SincConvention::Full), 1.0);
        let first_zero = PhaseMismatch {
            dk_z: PI / c.length_z,
            ..Default::default()
        };
        assert!(sinc_weight(first_zero, &c, SincConvention::Full) < 1e-30);
        assert!(sinc_weight(first_zero, &c, SincConvention::Half) > 0.3);
    }

    #[test]
    fn sinc_small_argument_branch_is_continuous() {
        for x in [9.9e-5f64, 1.0e-4, 1.01e-4] {
            assert!((sinc(x) - x.sin() / x).abs() < 1e-15);
        }
    }

    #[test]
    fn sidelobes_can_exceed_a_shorter_crystal() {
        // sinc^2 is not monotone past its first zero
        let dk = PhaseMismatch { dk_x: 0.0, dk_y: 0.0, dk_z: 600.0 };
        let short = CrystalSpec { length_z: 4.35e-3, ..Default::default() };
        let long = CrystalSpec { length_z: 7.5e-3, ..Default::default() };
        assert!(sinc_weight(dk, &long, SincConvention::Full) > sinc_weight(dk, &short, SincConvention::Full));
    }

    proptest::proptest! {
        #[test]
        fn sinc_weight_bounded_and_even(dkx in -1e5f64..1e5, dkz in -1e5f64..1e5) {
            let c = CrystalSpec::default();
            for conv in [SincConvention::Full, SincConvention::Half] {
                let w = sinc_weight(PhaseMismatch { dk_x: dkx, dk_y: 0.0, dk_z: dkz }, &c, conv);
                proptest::prop_assert!((0.0..=1.0).contains(&w));
                let m = sinc_weight(PhaseMismatch { dk_x: -dkx, dk_y: 0.0, dk_z: -dkz }, &c, conv);
                proptest::prop_assert_eq!(w, m);
            }
        }

        #[test]
        fn longer_crystal_narrows_main_lobe(x in 0.01f64..std::f64::consts::PI, lz in 1e-3f64..0.1, stretch in 1.0f64..3.0) {
            // dk chosen so the longer crystal still sits inside its main lobe
            let long = CrystalSpec { length_z: lz, ..Default::default() };
            let short = CrystalSpec { length_z: lz / stretch, ..Default::default() };
            let dk = PhaseMismatch { dk_x: 0.0, dk_y: 0.0, dk_z: x / lz };
            let w_long = sinc_weight(dk, &long, SincConvention::Full);
            let w_short = sinc_weight(dk, &short, SincConvention::Full);
            proptest::prop_assert!(w_long <= w_short + 1e-15);
        }
    }
}
