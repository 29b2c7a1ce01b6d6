//! Refractive indices of a negative uniaxial crystal from a two-row Sellmeier set.
//!
//! Coefficients are stored per polarization row in the conventional
//! micrometre form `n^2 = a + b / (lambda^2 - c) - d * lambda^2`. Every public
//! function takes wavelengths in metres and converts internally.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_SET: &str = include_str!("../data/bbo_eimerl.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarization {
    #[serde(rename = "o")]
    Ordinary,
    #[serde(rename = "e")]
    Extraordinary,
}

/// One row of Sellmeier coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SellmeierRow {
    pub material: String,
    pub row: Polarization,
    pub a: f64,
    /// um^2
    pub b: f64,
    /// um^2
    pub c: f64,
    /// um^-2
    pub d: f64,
    pub lambda_min_um: f64,
    pub lambda_max_um: f64,
    pub source: String,
}

impl SellmeierRow {
    fn index_squared_um(&self, lambda_um: f64) -> f64 {
        let l2 = lambda_um * lambda_um;
        self.a + self.b / (l2 - self.c) - self.d * l2
    }

    fn check_range(&self, lambda_um: f64) -> Result<()> {
        if !(self.lambda_min_um..=self.lambda_max_um).contains(&lambda_um) {
            return Err(Error::WavelengthOutOfRange {
                wavelength_um: lambda_um,
                min_um: self.lambda_min_um,
                max_um: self.lambda_max_um,
                source_label: self.source.clone(),
            });
        }
        Ok(())
    }

    /// Refractive index at `wavelength` (metres).
    pub fn index(&self, wavelength: f64) -> Result<f64> {
        let lambda_um = wavelength * 1e6;
        self.check_range(lambda_um)?;
        let n2 = self.index_squared_um(lambda_um);
        if !(n2 > 1.0) || !n2.is_finite() {
            return Err(Error::Domain(format!(
                "Sellmeier row '{:?}' gives n^2 = {n2} at {lambda_um} um",
                self.row
            )));
        }
        Ok(n2.sqrt())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SellmeierFile {
    row: Vec<SellmeierRow>,
}

/// Ordinary and principal extraordinary dispersion of one uniaxial material.
#[derive(Debug, Clone, PartialEq)]
pub struct SellmeierSet {
    pub ordinary: SellmeierRow,
    pub extraordinary: SellmeierRow,
}

impl Default for SellmeierSet {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_SET).expect("embedded Sellmeier data is valid")
    }
}

impl SellmeierSet {
    /// BBO coefficients of Eimerl et al. (1987), the default set.
    pub fn bbo() -> Self {
        Self::default()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SellmeierFile = toml::from_str(text)?;
        let mut ordinary = None;
        let mut extraordinary = None;
        for row in file.row {
            let slot = match row.row {
                Polarization::Ordinary => &mut ordinary,
                Polarization::Extraordinary => &mut extraordinary,
            };
            if slot.is_some() {
                return Err(Error::Validation(format!("duplicate '{:?}' row", row.row)));
            }
            *slot = Some(row);
        }
        let (Some(ordinary), Some(extraordinary)) = (ordinary, extraordinary) else {
            return Err(Error::Validation(
                "a Sellmeier set needs one 'o' and one 'e' row".into(),
            ));
        };
        let set = SellmeierSet {
            ordinary,
            extraordinary,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Checks n^2 > 1 on both rows and n_o > n_e across the shared range.
    fn validate(&self) -> Result<()> {
        if self.ordinary.material != self.extraordinary.material {
            return Err(Error::Validation(format!(
                "rows describe different materials: {} and {}",
                self.ordinary.material, self.extraordinary.material
            )));
        }
        let (lo, hi) = self.valid_range_um();
        if !(lo < hi) {
            return Err(Error::Validation("rows have no common wavelength range".into()));
        }
        const SAMPLES: usize = 64;
        for k in 0..=SAMPLES {
            let lambda_um = lo + (hi - lo) * k as f64 / SAMPLES as f64;
            let no2 = self.ordinary.index_squared_um(lambda_um);
            let ne2 = self.extraordinary.index_squared_um(lambda_um);
            if !(ne2 > 1.0 && no2.is_finite()) {
                return Err(Error::Validation(format!(
                    "non-physical index n^2 = ({no2}, {ne2}) at {lambda_um} um"
                )));
            }
            if no2 <= ne2 {
                return Err(Error::Validation(format!(
                    "expected a negative uniaxial material, got n_o = {} <= n_e = {} at {lambda_um} um",
                    no2.sqrt(),
                    ne2.sqrt()
                )));
            }
        }
        Ok(())
    }

    pub fn material(&self) -> &str {
        &self.ordinary.material
    }

    pub fn source(&self) -> &str {
        &self.ordinary.source
    }

    /// Interval where both rows are valid, in micrometres.
    pub fn valid_range_um(&self) -> (f64, f64) {
        (
            self.ordinary.lambda_min_um.max(self.extraordinary.lambda_min_um),
            self.ordinary.lambda_max_um.min(self.extraordinary.lambda_max_um),
        )
    }

    pub fn n_ordinary(&self, wavelength: f64) -> Result<f64> {
        self.ordinary.index(wavelength)
    }

    pub fn n_extraordinary_principal(&self, wavelength: f64) -> Result<f64> {
        self.extraordinary.index(wavelength)
    }

    /// Extraordinary index for propagation at `theta` radians from the optic axis.
    pub fn n_e_angle(&self, wavelength: f64, theta: f64) -> Result<f64> {
        check_axis_angle(theta)?;
        let no = self.n_ordinary(wavelength)?;
        let ne = self.n_extraordinary_principal(wavelength)?;
        Ok(index_ellipse(no, ne, theta))
    }

    /// d n_e(theta) / d theta.
    pub fn n_e_angle_derivative(&self, wavelength: f64, theta: f64) -> Result<f64> {
        check_axis_angle(theta)?;
        let no = self.n_ordinary(wavelength)?;
        let ne = self.n_extraordinary_principal(wavelength)?;
        let n = index_ellipse(no, ne, theta);
        Ok(-0.5 * n.powi(3) * (2.0 * theta).sin() * (1.0 / (ne * ne) - 1.0 / (no * no)))
    }
}

fn check_axis_angle(theta: f64) -> Result<()> {
    const SLACK: f64 = 1e-12;
    if !(-SLACK..=std::f64::consts::FRAC_PI_2 + SLACK).contains(&theta) {
        return Err(Error::Domain(format!(
            "angle to the optic axis {theta} rad is outside [0, pi/2]"
        )));
    }
    Ok(())
}

/// 1/n^2(theta) = cos^2/n_o^2 + sin^2/n_e^2
pub fn index_ellipse(no: f64, ne: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    (c * c / (no * no) + s * s / (ne * ne)).sqrt().recip()
}
