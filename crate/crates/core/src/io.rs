//! CSV output in micrometre units.

use std::fs::File;
use std::path::Path;

use crate::biphoton::CoincidenceMap;
use crate::error::{Error, Result};
use crate::pump::SampledField;
use crate::stats::CorrelationResult;
use crate::sweeps::SweepResult;

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// `x1_um,x2_um,rate`, row-major over x1 then x2.
pub fn write_map_csv(path: impl AsRef<Path>, map: &CoincidenceMap) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(["x1_um", "x2_um", "rate"])?;
    for (i, x1) in map.x1.iter().enumerate() {
        for (j, x2) in map.x2.iter().enumerate() {
            w.serialize((x1 * 1e6, x2 * 1e6, map.get(i, j)))?;
        }
    }
    finish(w, path)
}

/// Reads a map written by [`write_map_csv`].
pub fn read_map_csv(path: impl AsRef<Path>) -> Result<CoincidenceMap> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x1_um", "x2_um", "rate"] {
        return Err(Error::Validation(format!(
            "{}: expected header x1_um,x2_um,rate",
            path.display()
        )));
    }
    let mut x1: Vec<f64> = Vec::new();
    let mut x2: Vec<f64> = Vec::new();
    let mut rates = Vec::new();
    for (line, record) in reader.deserialize::<(f64, f64, f64)>().enumerate() {
        let (a, b, r) = record?;
        let (a, b) = (a * 1e-6, b * 1e-6);
        if x1.last() != Some(&a) {
            x1.push(a);
        }
        if x1.len() == 1 {
            x2.push(b);
        } else if x2.get(line % x2.len()) != Some(&b) {
            return Err(Error::Validation(format!(
                "{}: row {} breaks the x1-major grid layout",
                path.display(),
                line + 2
            )));
        }
        rates.push(r);
    }
    CoincidenceMap::new(x1, x2, rates)
}

/// `x_um,rate`
pub fn write_profile_csv(path: impl AsRef<Path>, x: &[f64], rate: &[f64]) -> Result<()> {
    let path = path.as_ref();
    if x.len() != rate.len() {
        return Err(Error::Domain(format!("{} positions for {} rates", x.len(), rate.len())));
    }
    let mut w = writer(path)?;
    w.write_record(["x_um", "rate"])?;
    for (x, r) in x.iter().zip(rate) {
        w.serialize((x * 1e6, r))?;
    }
    finish(w, path)
}

/// `x_um,re,im`, or `x_um,z_mm,re,im` for a field with z planes.
pub fn write_field_csv(path: impl AsRef<Path>, field: &SampledField) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    let xs = field.x.values();
    match field.z {
        None => {
            w.write_record(["x_um", "re", "im"])?;
            for (x, v) in xs.iter().zip(&field.values) {
                w.serialize((x * 1e6, v.re, v.im))?;
            }
        }
        Some(z) => {
            w.write_record(["x_um", "z_mm", "re", "im"])?;
            for (k, zk) in z.values().into_iter().enumerate() {
                for (x, v) in xs.iter().zip(field.plane(k)) {
                    w.serialize((x * 1e6, zk * 1e3, v.re, v.im))?;
                }
            }
        }
    }
    finish(w, path)
}

/// `x_um,intensity`, the measured-profile input format.
pub fn write_intensity_csv(path: impl AsRef<Path>, field: &SampledField) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(["x_um", "intensity"])?;
    for (x, v) in field.x.values().iter().zip(field.plane(0)) {
        w.serialize((x * 1e6, v.norm_sqr()))?;
    }
    finish(w, path)
}

/// `param,value,rho,sigma_rho,seconds`; failed rows leave rho empty.
pub fn write_sweep_csv(path: impl AsRef<Path>, result: &SweepResult) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(["param", "value", "rho", "sigma_rho", "seconds"])?;
    for row in &result.rows {
        w.serialize((
            result.param.name(),
            row.value.to_string(),
            row.rho,
            row.sigma_rho,
            row.seconds,
        ))?;
    }
    finish(w, path)
}

/// `rho,sigma_rho,n_resamples,seed,counts_total,config_hash`
pub fn write_result_csv(
    path: impl AsRef<Path>,
    result: &CorrelationResult,
    counts_total: f64,
    config_hash: &str,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(["rho", "sigma_rho", "n_resamples", "seed", "counts_total", "config_hash"])?;
    w.serialize((
        result.rho,
        result.sigma_rho,
        result.n_resamples,
        result.seed,
        counts_total,
        config_hash,
    ))?;
    finish(w, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pump::{analytic_profile, load_measured_profile, PumpSpec};

    #[test]
    fn map_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let map = CoincidenceMap::new(vec![-1e-6, 1e-6], vec![0.0, 2e-6], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let path = dir.path().join("map.csv");
        write_map_csv(&path, &map).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x1_um,x2_um,rate");
        assert_eq!(lines[1], "-1.0,0.0,1.0");
        assert_eq!(lines[2], "-1.0,2.0,2.0");
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn map_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let map = CoincidenceMap::new(vec![-3e-6, 0.0, 3e-6], vec![-1e-6, 1e-6], vec![1.0, 0.5, 0.0, 2.0, 0.25, 1e-9]).unwrap();
        let path = dir.path().join("map.csv");
        write_map_csv(&path, &map).unwrap();
        let back = read_map_csv(&path).unwrap();
        assert_eq!(back.rates, map.rates);
        assert_eq!(back.x2.len(), 2);
        for (a, b) in back.x1.iter().zip(&map.x1) {
            assert!((a - b).abs() < 1e-18);
        }
    }

    #[test]
    fn scrambled_map_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.csv");
        std::fs::write(&path, "x1_um,x2_um,rate\n0,0,1\n0,1,1\n1,1,1\n1,0,1\n").unwrap();
        assert!(matches!(read_map_csv(&path), Err(Error::Validation(_))));
        std::fs::write(&path, "x,y,rate\n0,0,1\n").unwrap();
        assert!(read_map_csv(&path).is_err());
    }

    #[test]
    fn analytic_intensity_round_trips() {
        let spec = PumpSpec::default();
        let field = analytic_profile(&spec, &spec.default_grid(1e-6).unwrap()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("profile.csv");
        write_intensity_csv(&path, &field).unwrap();
        let back = load_measured_profile(&path, 1.0).unwrap();
        let field = field.peak_normalized();
        assert_eq!(back.x.len, field.x.len);
        assert!((back.x.step - field.x.step).abs() < 1e-15);
        for (a, b) in back.values.iter().zip(&field.values) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let map = CoincidenceMap::new(vec![0.0], vec![0.0], vec![1.0]).unwrap();
        let err = write_map_csv("/nonexistent-dir/map.csv", &map).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
