//! Scalar thin-lens image transfer in one transverse dimension.
//!
//! The kernel is
//! H(x_i; x_o) = exp(i k x_o^2 / (2 z_o)) / (lambda^2 z_o z_i) * I(q, b),
//! I(q, b) = int_{-R}^{R} exp(i q x^2 - i b x) dx,
//! with q = k/2 (1/z_o + 1/z_i - 1/f) and b = k (x_o/z_o + x_i/z_i).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fresnel::fresnel_segment;
use crate::pump::{Axis, SampledField};
use crate::quadrature::GaussLegendre;

/// Below this |q| R^2 (rad) the aperture integral is expanded around the sinc.
pub const SMALL_QUADRATIC: f64 = 1e-3;

/// Default Gauss-Legendre order of the object-plane integral.
pub const DEFAULT_ORDER: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LensSpec {
    pub focal_length: f64,
    pub aperture_radius: f64,
    pub object_distance: f64,
    pub image_distance: f64,
    pub wavelength: f64,
}

impl LensSpec {
    /// Object and image both at twice the focal length.
    pub fn two_f(focal_length: f64, aperture_radius: f64, wavelength: f64) -> Self {
        LensSpec {
            focal_length,
            aperture_radius,
            object_distance: 2.0 * focal_length,
            image_distance: 2.0 * focal_length,
            wavelength,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("focal length", self.focal_length),
            ("aperture radius", self.aperture_radius),
            ("object distance", self.object_distance),
            ("image distance", self.image_distance),
            ("wavelength", self.wavelength),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("lens {name} {v} must be positive")));
            }
        }
        Ok(())
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Coefficient q of the quadratic aperture phase.
    pub fn quadratic(&self) -> f64 {
        let defocus = if self.object_distance == self.image_distance
            && self.object_distance == 2.0 * self.focal_length
        {
            0.0
        } else {
            1.0 / self.object_distance + 1.0 / self.image_distance - 1.0 / self.focal_length
        };
        0.5 * self.wavenumber() * defocus
    }

    pub fn with_image_distance(&self, image_distance: f64) -> Self {
        LensSpec {
            image_distance,
            ..*self
        }
    }
}

/// int_{-R}^{R} exp(i q x^2 - i b x) dx
pub fn aperture_integral(q: f64, b: f64, r: f64) -> Complex64 {
    if q.abs() * r * r < SMALL_QUADRATIC {
        return small_quadratic(q, b, r);
    }
    if q < 0.0 {
        return aperture_integral(-q, -b, r).conj();
    }
    // q (x - x0)^2 - b^2 / (4q), then t = sqrt(2q/pi) (x - x0)
    let x0 = b / (2.0 * q);
    let s = (2.0 * q / PI).sqrt();
    let seg = fresnel_segment(s * (-r - x0), s * (r - x0));
    let phase = Complex64::from_polar(1.0, -b * b / (4.0 * q));
    seg * phase * (PI / (2.0 * q)).sqrt()
}

/// sum_m (i q)^m / m! int x^{2m} exp(-i b x) dx; the m = 0 term is 2R sinc(bR).
fn small_quadratic(q: f64, b: f64, r: f64) -> Complex64 {
    let beta = b * r;
    let qr2 = q * r * r;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut coeff = Complex64::new(1.0, 0.0);
    for m in 0..12 {
        if m > 0 {
            coeff = coeff * Complex64::new(0.0, qr2) / m as f64;
        }
        // int_{-R}^{R} x^{2m} e^{-i b x} dx = 2 R^{2m+1} int_0^1 s^{2m} cos(beta s) ds
        let term = coeff * (2.0 * r * cosine_moment(2 * m, beta));
        sum += term;
        if qr2 == 0.0 || coeff.norm() < 1e-17 {
            break;
        }
    }
    sum
}

/// int_0^1 s^n cos(beta s) ds
fn cosine_moment(n: usize, beta: f64) -> f64 {
    let beta = beta.abs();
    if beta > 8.0 {
        // J_n = sin(b)/b - n/b K_{n-1},  K_n = -cos(b)/b + n/b J_{n-1}
        let (sb, cb) = beta.sin_cos();
        let mut j = sb / beta;
        let mut k = (1.0 - cb) / beta;
        for m in 1..=n {
            let mf = m as f64;
            let j_next = sb / beta - mf / beta * k;
            let k_next = -cb / beta + mf / beta * j;
            j = j_next;
            k = k_next;
        }
        j
    } else {
        // sum_j (-1)^j beta^{2j} / (2j)! / (n + 2j + 1)
        let b2 = beta * beta;
        let mut term = 1.0;
        let mut sum = 1.0 / (n as f64 + 1.0);
        for j in 1..200 {
            let jf = j as f64;
            term *= -b2 / ((2.0 * jf - 1.0) * (2.0 * jf));
            let add = term / (n as f64 + 2.0 * jf + 1.0);
            sum += add;
            if add.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum
    }
}

/// H(x_i; x_o) for `lens`.
pub fn transfer_kernel(lens: &LensSpec, x_image: f64, x_object: f64) -> Complex64 {
    let k = lens.wavenumber();
    let (zo, zi) = (lens.object_distance, lens.image_distance);
    let q = lens.quadratic();
    let b = k * (x_object / zo + x_image / zi);
    let lead = Complex64::from_polar(1.0, 0.5 * k * x_object * x_object / zo);
    let norm = 1.0 / (lens.wavelength * lens.wavelength * zo * zi);
    lead * aperture_integral(q, b, lens.aperture_radius) * norm
}

/// Every run of consecutive non-zero samples must span at least two samples.
fn check_object_resolution(field: &SampledField) -> Result<()> {
    for k in 0..field.planes() {
        let mut run = 0usize;
        let row = field.plane(k);
        for (i, v) in row.iter().enumerate() {
            if v.norm() > 0.0 {
                run += 1;
            }
            let closes = v.norm() == 0.0 || i + 1 == row.len();
            if closes && run > 0 {
                if run < 2 {
                    return Err(Error::Resolution {
                        samples_per_feature: run as f64,
                        feature_um: run as f64 * field.x.step * 1e6,
                    });
                }
                run = 0;
            }
        }
    }
    Ok(())
}

/// Range of x where the first plane of `field` is non-zero, padded by one sample.
fn support(field: &SampledField) -> Option<(f64, f64)> {
    let row = field.plane(0);
    let first = row.iter().position(|v| v.norm() > 0.0)?;
    let last = row.iter().rposition(|v| v.norm() > 0.0)?;
    let lo = field.x.value(first.saturating_sub(1));
    let hi = field.x.value((last + 1).min(row.len() - 1));
    Some((lo, hi))
}

/// U(x_i) = int U(x_o) H(x_i; x_o) dx_o by Gauss-Legendre over the object support,
/// linearly interpolating the object samples.
pub fn transfer_field(
    field: &SampledField,
    lens: &LensSpec,
    image_grid: &Axis,
    order: usize,
) -> Result<SampledField> {
    lens.validate()?;
    if order == 0 {
        return Err(Error::Config("quadrature order must be at least 1".into()));
    }
    check_object_resolution(field)?;
    let Some((lo, hi)) = support(field) else {
        return SampledField::new(*image_grid, vec![Complex64::new(0.0, 0.0); image_grid.len]);
    };
    let rule = GaussLegendre::new(order);
    let nodes: Vec<(f64, Complex64)> = rule
        .mapped(lo, hi)
        .map(|(x, w)| (x, field.amplitude_at(x, 0.0).unwrap_or_default() * w))
        .filter(|(_, a)| a.norm() > 0.0)
        .collect();
    let values = image_grid
        .values()
        .par_iter()
        .map(|&xi| {
            nodes
                .iter()
                .fold(Complex64::new(0.0, 0.0), |acc, &(xo, a)| acc + a * transfer_kernel(lens, xi, xo))
        })
        .collect();
    SampledField::new(*image_grid, values)
}

/// Image fields at `lens.image_distance + z` for each offset z, stacked as planes.
pub fn field_through_crystal(
    field: &SampledField,
    lens: &LensSpec,
    image_grid: &Axis,
    z_offsets: &Axis,
    order: usize,
) -> Result<SampledField> {
    let mut values = Vec::with_capacity(image_grid.len * z_offsets.len);
    for z in z_offsets.values() {
        let plane_lens = lens.with_image_distance(lens.image_distance + z);
        values.extend(transfer_field(field, &plane_lens, image_grid, order)?.values);
    }
    SampledField::with_planes(*image_grid, *z_offsets, values)
}

/// (centroid, RMS width) of the intensity of the first plane.
pub fn intensity_moments(field: &SampledField) -> Option<(f64, f64)> {
    let xs = field.x.values();
    let row = field.plane(0);
    let total: f64 = row.iter().map(|v| v.norm_sqr()).sum();
    if !(total > 0.0) {
        return None;
    }
    let mean = xs.iter().zip(row).map(|(x, v)| x * v.norm_sqr()).sum::<f64>() / total;
    let var = xs
        .iter()
        .zip(row)
        .map(|(x, v)| (x - mean).powi(2) * v.norm_sqr())
        .sum::<f64>()
        / total;
    Some((mean, var.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle(q: f64, b: f64, r: f64) -> Complex64 {
        GaussLegendre::new(20).integrate_composite(-r, r, 500, |x| Complex64::from_polar(1.0, q * x * x - b * x))
    }

    #[test]
    fn zero_quadratic_is_sinc() {
        let r = 0.0127;
        for b in [0.0, 10.0, 1234.5, -5e4] {
            let got = aperture_integral(0.0, b, r);
            let sinc = if b == 0.0 { 2.0 * r } else { 2.0 * (b * r).sin() / b };
            assert!((got.re - sinc).abs() < 1e-15 && got.im.abs() < 1e-15, "{b}: {got}");
        }
    }

    #[test]
    fn two_f_quadratic_vanishes_exactly() {
        let lens = LensSpec::two_f(0.146, 0.0127, 405e-9);
        assert_eq!(lens.quadratic(), 0.0);
    }

    #[test]
    fn branches_match_quadrature() {
        let r = 1e-3;
        for (q, b) in [(1e3, 0.0), (5e2, 2e4), (-3e5, 1e5), (2e7, -3e4), (5e-3 / 1e-6 / 10.0, 7e3), (1e-6, 3e4)] {
            let got = aperture_integral(q, b, r);
            let want = oracle(q, b, r);
            assert!((got - want).norm() < 1e-9 * want.norm().max(1e-6), "q={q} b={b}: {got} vs {want}");
        }
    }

    #[test]
    fn kernel_parity() {
        let lens = LensSpec {
            focal_length: 0.15,
            aperture_radius: 2e-3,
            object_distance: 0.31,
            image_distance: 0.29,
            wavelength: 810e-9,
        };
        for (xi, xo) in [(1e-4, -3e-4), (5e-5, 2e-5)] {
            let a = transfer_kernel(&lens, xi, xo).norm();
            let b = transfer_kernel(&lens, -xi, -xo).norm();
            assert!((a - b).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn moments_small_branch_both_regimes() {
        for beta in [0.5, 7.9, 8.1, 40.0] {
            for n in [0usize, 2, 6, 12] {
                let want: f64 = GaussLegendre::new(40)
                    .integrate_composite(0.0, 1.0, 20, |s| s.powi(n as i32) * (beta * s).cos());
                let got = cosine_moment(n, beta);
                assert!((got - want).abs() < 1e-12, "n={n} beta={beta}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn zero_object_gives_zero_image() {
        let x = Axis::centered_cells(100e-6, 1e-6).unwrap();
        let f = SampledField::real(x, vec![0.0; x.len]).unwrap();
        let lens = LensSpec::two_f(0.146, 0.0127, 405e-9);
        let out = transfer_field(&f, &lens, &x, 64).unwrap();
        assert!(out.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn single_sample_feature_rejected() {
        let x = Axis::centered_cells(10e-6, 1e-6).unwrap();
        let mut vals = vec![0.0; x.len];
        vals[5] = 1.0;
        let f = SampledField::real(x, vals).unwrap();
        let lens = LensSpec::two_f(0.146, 0.0127, 405e-9);
        assert!(matches!(transfer_field(&f, &lens, &x, 64), Err(Error::Resolution { .. })));
    }
}
