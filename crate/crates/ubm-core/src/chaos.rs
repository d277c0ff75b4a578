//! The cylinder free field (as a truncated Fourier-mode
//! Ornstein-Uhlenbeck system), its covariance, and Gaussian multiplicative
//! chaos measures built either from a matrix trajectory's
//! characteristic-polynomial field or from the Gaussian reference field.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::Error;
use crate::field::FieldSample;
use crate::rng::{standard_normal, SeedTree};
use crate::special::keating_snaith_log;
use crate::Result;

/// Where the field samples came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// `h_N(t, theta)` of an eigenangle trajectory.
    MatrixBorn,
    /// Truncated-mode Gaussian field with the cylinder covariance.
    GaussianReference,
}

/// Field values on a (times x angles) grid.
#[derive(Debug, Clone)]
pub struct CylinderField {
    pub kind: FieldKind,
    pub k_max: usize,
    pub times: Vec<f64>,
    pub angles: Vec<f64>,
    /// Time-major values.
    pub values: Vec<f64>,
}

impl CylinderField {
    pub fn value(&self, ti: usize, ai: usize) -> f64 {
        self.values[ti * self.angles.len() + ai]
    }

    pub fn slice(&self, ti: usize) -> &[f64] {
        &self.values[ti * self.angles.len()..(ti + 1) * self.angles.len()]
    }

    pub fn from_field_sample(sample: &FieldSample, k_max: usize) -> Self {
        CylinderField {
            kind: FieldKind::MatrixBorn,
            k_max,
            times: sample.times.clone(),
            angles: sample.angles.clone(),
            values: sample.values.clone(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest positive field value (0 for a nonpositive field).
    pub fn max_positive(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, &v| m.max(v))
    }
}

/// Stationary variance of the truncated reference field:
/// `(1/2) sum_{k <= k_max} 1/k`.
pub fn gaussian_truncated_variance(k_max: usize) -> f64 {
    0.5 * (1..=k_max).map(|k| 1.0 / k as f64).sum::<f64>()
}

/// Truncated covariance `(1/2) sum_{k <= k_max} cos(k dx) e^{-k dt} / k`.
pub fn gaussian_truncated_covariance(k_max: usize, dt: f64, dx: f64) -> f64 {
    (1..=k_max)
        .map(|k| {
            let kf = k as f64;
            0.5 * libm::cos(kf * dx) * libm::exp(-kf * dt) / kf
        })
        .sum()
}

/// The cylinder free-field covariance
/// `E h(z) h(w) = (1/2) log( max(|e^z|, |e^w|) / |e^z - e^w| )`
/// for `z = t + i x`, `w = s + i y`; equals `P_{|t-s|} C(x-y)`.
pub fn cylinder_covariance(z: (f64, f64), w: (f64, f64)) -> Result<f64> {
    let (t, x) = z;
    let (s, y) = w;
    let a = Complex64::from_polar(libm::exp(t), x);
    let b = Complex64::from_polar(libm::exp(s), y);
    let dist = (a - b).norm();
    if dist == 0.0 {
        return Err(Error::invalid(
            "cylinder covariance diverges at coincident points",
        ));
    }
    Ok(0.5 * libm::log(libm::exp(t.max(s)) / dist))
}

/// Sample the reference field: modes `A_k, B_k` are independent stationary
/// Ornstein-Uhlenbeck paths with variance `1/(2k)` and relaxation rate `k`
/// (matching the beta = 2 covariance `P_{|t-s|} C`), advanced between grid
/// times by their exact Gaussian transition - no Euler error.
pub fn sample_gaussian_field(
    k_max: usize,
    times: &[f64],
    angles: &[f64],
    seed: &SeedTree,
) -> Result<CylinderField> {
    sample_gaussian_field_mollified(k_max, times, angles, 0.0, seed)
}

/// Same sampler with the modes damped by `e^{-k eps}` (the Poisson
/// mollification applied in law).
pub fn sample_gaussian_field_mollified(
    k_max: usize,
    times: &[f64],
    angles: &[f64],
    eps: f64,
    seed: &SeedTree,
) -> Result<CylinderField> {
    if k_max == 0 {
        return Err(Error::invalid("need k_max >= 1"));
    }
    if times.is_empty() || angles.is_empty() {
        return Err(Error::invalid("need a nonempty grid"));
    }
    for w in times.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid("times must be strictly increasing"));
        }
    }
    let mut rng = seed.rng();
    let mut a: Vec<f64> = (0..k_max)
        .map(|k| standard_normal(&mut rng) / libm::sqrt(2.0 * (k + 1) as f64))
        .collect();
    let mut b: Vec<f64> = (0..k_max)
        .map(|k| standard_normal(&mut rng) / libm::sqrt(2.0 * (k + 1) as f64))
        .collect();
    let mut values = Vec::with_capacity(times.len() * angles.len());
    let mut prev_t = times[0];
    for (ti, &t) in times.iter().enumerate() {
        if ti > 0 {
            let dt = t - prev_t;
            for k in 1..=k_max {
                let kf = k as f64;
                let decay = libm::exp(-kf * dt);
                let noise_sd = libm::sqrt((1.0 - decay * decay) / (2.0 * kf));
                a[k - 1] = decay * a[k - 1] + noise_sd * standard_normal(&mut rng);
                b[k - 1] = decay * b[k - 1] + noise_sd * standard_normal(&mut rng);
            }
            prev_t = t;
        }
        for &theta in angles {
            let mut h = 0.0;
            for k in 1..=k_max {
                let kf = k as f64;
                let damp = libm::exp(-kf * eps);
                h += damp * (a[k - 1] * libm::cos(kf * theta) + b[k - 1] * libm::sin(kf * theta));
            }
            values.push(h);
        }
    }
    Ok(CylinderField {
        kind: FieldKind::GaussianReference,
        k_max,
        times: times.to_vec(),
        angles: angles.to_vec(),
        values,
    })
}

/// Per-cell normalizer source for the chaos measure.
#[derive(Debug, Clone, Copy)]
pub enum Normalization {
    /// Matrix-born fields: the exact `E |det|^gamma` of Keating-Snaith.
    KeatingSnaith { n: usize },
    /// Gaussian fields: `e^{gamma^2 Var / 2}` with the truncated variance.
    GaussianVariance { variance: f64 },
}

impl Normalization {
    pub fn log_normalizer(&self, gamma: f64) -> Result<f64> {
        match self {
            Normalization::KeatingSnaith { n } => keating_snaith_log(*n, gamma),
            Normalization::GaussianVariance { variance } => Ok(0.5 * gamma * gamma * variance),
        }
    }
}

/// One grid cell of a chaos measure.
#[derive(Debug, Clone, Copy)]
pub struct GmcCell {
    pub t_lo: f64,
    pub t_hi: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub mass: f64,
}

/// A renormalized `e^{gamma h} dt dtheta` measure on grid cells.
#[derive(Debug, Clone)]
pub struct ChaosMeasure {
    pub gamma: f64,
    pub cells: Vec<GmcCell>,
}

impl ChaosMeasure {
    pub fn total_mass(&self) -> f64 {
        self.cells.iter().map(|c| c.mass).sum()
    }

    /// Midpoint integral of `f` against the measure.
    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.cells
            .iter()
            .map(|c| f(0.5 * (c.t_lo + c.t_hi), 0.5 * (c.theta_lo + c.theta_hi)) * c.mass)
            .sum()
    }
}

/// Upper end of the chaos range (`gamma < 2 sqrt{2}` for the half-log field).
pub const GAMMA_SUP: f64 = 2.0 * core::f64::consts::SQRT_2;

/// Start of the L^1 phase, where runs carry no quantitative acceptance.
pub fn l1_phase(gamma: f64) -> bool {
    gamma >= 2.0
}

/// Chaos measure from field samples taken at cell centers on uniform grids:
/// `mass = area * e^{gamma h(center)} / normalizer`.
pub fn gmc_measure(
    field: &CylinderField,
    gamma: f64,
    normalization: Normalization,
) -> Result<ChaosMeasure> {
    if !(gamma > 0.0 && gamma < GAMMA_SUP) {
        return Err(Error::invalid("gamma must lie in (0, 2 sqrt 2)"));
    }
    let dt = uniform_spacing(&field.times).ok_or_else(|| {
        Error::invalid("gmc_measure needs uniformly spaced cell-center times")
    })?;
    let dth = uniform_spacing(&field.angles).ok_or_else(|| {
        Error::invalid("gmc_measure needs uniformly spaced cell-center angles")
    })?;
    let log_norm = normalization.log_normalizer(gamma)?;
    let area = dt * dth;
    let mut cells = Vec::with_capacity(field.values.len());
    for (ti, &t) in field.times.iter().enumerate() {
        for (ai, &th) in field.angles.iter().enumerate() {
            let h = field.value(ti, ai);
            let mass = area * libm::exp(gamma * h - log_norm);
            if !mass.is_finite() {
                return Err(Error::NonFinite(alloc::string::String::from(
                    "chaos cell mass overflowed",
                )));
            }
            cells.push(GmcCell {
                t_lo: t - 0.5 * dt,
                t_hi: t + 0.5 * dt,
                theta_lo: th - 0.5 * dth,
                theta_hi: th + 0.5 * dth,
                mass,
            });
        }
    }
    Ok(ChaosMeasure { gamma, cells })
}

fn uniform_spacing(grid: &[f64]) -> Option<f64> {
    if grid.len() < 2 {
        return None;
    }
    let d = grid[1] - grid[0];
    if d <= 0.0 {
        return None;
    }
    for w in grid.windows(2) {
        if ((w[1] - w[0]) - d).abs() > 1e-9 * d.max(1.0) {
            return None;
        }
    }
    Some(d)
}

/// `max h / log n` over the field's window (positive part).
///
/// The matrix-born field dives logarithmically at every eigenangle, so on
/// any grid fine enough to resolve the window the magnitude of those dips
/// scales like 2 log n and says nothing about the field's envelope; the
/// maximum itself is the statistic with the slow sqrt-2 limit, and a zero
/// field reports 0.
pub fn max_field_statistic(field: &CylinderField, n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    field.max_positive() / libm::log(n as f64)
}
