//! Pearson correlation of a coincidence map and its Poisson bootstrap spread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::biphoton::CoincidenceMap;
use crate::error::{Error, Result};

/// Recorded alongside bootstrap results.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha), stream = resample index";

/// Largest tolerated fraction of skipped (degenerate) resamples.
pub const MAX_SKIPPED_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Centering {
    /// Cov(x1, x2) / sqrt(Var x1 Var x2)
    #[default]
    Centered,
    /// <x1 x2> / sqrt(<x1^2> <x2^2>)
    Uncentered,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub rho: f64,
    pub sigma_rho: Option<f64>,
    pub n_resamples: usize,
    pub seed: Option<u64>,
    pub skipped: usize,
}

/// Weighted first and second moments of the two coordinates.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    w: f64,
    x1: f64,
    x2: f64,
    x11: f64,
    x22: f64,
    x12: f64,
}

impl Moments {
    fn add(&mut self, w: f64, a: f64, b: f64) {
        self.w += w;
        self.x1 += w * a;
        self.x2 += w * b;
        self.x11 += w * a * a;
        self.x22 += w * b * b;
        self.x12 += w * a * b;
    }

    fn rho(&self, centering: Centering) -> Result<f64> {
        if !(self.w > 0.0) {
            return Err(Error::UndefinedCorrelation);
        }
        let (m1, m2) = match centering {
            Centering::Centered => (self.x1 / self.w, self.x2 / self.w),
            Centering::Uncentered => (0.0, 0.0),
        };
        let v1 = self.x11 / self.w - m1 * m1;
        let v2 = self.x22 / self.w - m2 * m2;
        let c = self.x12 / self.w - m1 * m2;
        if !(v1 > 1e-14 * self.x11 / self.w) {
            return Err(Error::DegenerateDistribution("x1"));
        }
        if !(v2 > 1e-14 * self.x22 / self.w) {
            return Err(Error::DegenerateDistribution("x2"));
        }
        Ok((c / (v1 * v2).sqrt()).clamp(-1.0, 1.0))
    }
}

/// Coordinates and weights of the non-zero map entries, shifted by the axis
/// midpoints so the moment sums stay well conditioned.
fn entries(map: &CoincidenceMap, centering: Centering) -> Vec<(f64, f64, f64)> {
    let (s1, s2) = match centering {
        Centering::Centered => (midpoint(&map.x1), midpoint(&map.x2)),
        Centering::Uncentered => (0.0, 0.0),
    };
    let n2 = map.x2.len();
    map.rates
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(k, &w)| (w, map.x1[k / n2] - s1, map.x2[k % n2] - s2))
        .collect()
}

fn midpoint(x: &[f64]) -> f64 {
    match (x.first(), x.last()) {
        (Some(a), Some(b)) => 0.5 * (a + b),
        _ => 0.0,
    }
}

/// Pearson coefficient of P / sum(P) as a joint distribution over (x1, x2).
pub fn pearson(map: &CoincidenceMap, centering: Centering) -> Result<f64> {
    let mut m = Moments::default();
    for (w, a, b) in entries(map, centering) {
        m.add(w, a, b);
    }
    m.rho(centering)
}

/// Correlation coefficients of `n_resamples` Poisson redraws of the map scaled
/// to `counts_total` expected counts. Degenerate redraws are `None`.
pub fn bootstrap_samples(
    map: &CoincidenceMap,
    counts_total: f64,
    n_resamples: usize,
    seed: u64,
    centering: Centering,
) -> Result<Vec<Option<f64>>> {
    pearson(map, centering)?;
    if !(counts_total > 0.0 && counts_total.is_finite()) {
        return Err(Error::Config(format!("counts_total {counts_total} must be positive")));
    }
    let cells = entries(map, centering);
    let total: f64 = cells.iter().map(|c| c.0).sum();
    let scale = counts_total / total;
    let cells: Vec<(Poisson<f64>, f64, f64)> = cells
        .into_iter()
        .filter_map(|(w, a, b)| Poisson::new(w * scale).ok().map(|p| (p, a, b)))
        .collect();
    Ok((0..n_resamples)
        .into_par_iter()
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let mut m = Moments::default();
            for (dist, a, b) in &cells {
                let n = dist.sample(&mut rng);
                if n > 0.0 {
                    m.add(n, *a, *b);
                }
            }
            m.rho(centering).ok()
        })
        .collect())
}

/// Sample standard deviation of bootstrap coefficients.
pub fn bootstrap_sigma(
    map: &CoincidenceMap,
    counts_total: f64,
    n_resamples: usize,
    seed: u64,
    centering: Centering,
) -> Result<CorrelationResult> {
    if n_resamples < 2 {
        return Err(Error::Config(format!("need at least 2 resamples, got {n_resamples}")));
    }
    let rho = pearson(map, centering)?;
    let samples = bootstrap_samples(map, counts_total, n_resamples, seed, centering)?;
    let valid: Vec<f64> = samples.iter().flatten().copied().collect();
    let skipped = n_resamples - valid.len();
    if skipped as f64 > MAX_SKIPPED_FRACTION * n_resamples as f64 || valid.len() < 2 {
        return Err(Error::TooManyDegenerateResamples {
            skipped,
            total: n_resamples,
        });
    }
    let n = valid.len() as f64;
    let mean = valid.iter().sum::<f64>() / n;
    let var = valid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(CorrelationResult {
        rho,
        sigma_rho: Some(var.sqrt()),
        n_resamples,
        seed: Some(seed),
        skipped,
    })
}
