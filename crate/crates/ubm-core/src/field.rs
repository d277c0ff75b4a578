//! The characteristic-polynomial field
//! `h_N(t, theta) = sum_k log |e^{i theta_k(t)} - e^{i theta}|`
//! on a space-time grid, with clipping at eigenangle hits, a
//! singularity-aware spatial quadrature, and the Poisson-mollified variant
//! evaluated through traces of powers.

use alloc::{vec, vec::Vec};

use crate::dyson::{wrap_angle, PhaseTrajectory};
use crate::quadrature::PanelRule;
use crate::{Result, TWO_PI};

/// Distance below which a grid point counts as sitting on an eigenangle.
pub const CLIP_DISTANCE: f64 = 1e-12;

/// Field samples on a (times x angles) grid.
#[derive(Debug, Clone)]
pub struct FieldSample {
    pub times: Vec<f64>,
    pub angles: Vec<f64>,
    /// Time-major values.
    pub values: Vec<f64>,
    /// Per-value clip flags (grid point hit an eigenangle).
    pub clipped: Vec<bool>,
}

impl FieldSample {
    pub fn value(&self, ti: usize, ai: usize) -> f64 {
        self.values[ti * self.angles.len() + ai]
    }

    pub fn slice(&self, ti: usize) -> &[f64] {
        &self.values[ti * self.angles.len()..(ti + 1) * self.angles.len()]
    }

    pub fn any_clipped(&self) -> bool {
        self.clipped.iter().any(|&c| c)
    }
}

/// `log |e^{i a} - e^{i b}| = log(2 |sin((a-b)/2)|)`, clipped below
/// [`CLIP_DISTANCE`]; the bool reports whether clipping happened.
#[inline]
pub fn log_distance(a: f64, b: f64) -> (f64, bool) {
    let d = 2.0 * libm::fabs(libm::sin(0.5 * (a - b)));
    if d < CLIP_DISTANCE {
        (libm::log(CLIP_DISTANCE), true)
    } else {
        (libm::log(d), false)
    }
}

/// Field value at one point from a phase slice.
pub fn field_value(phases: &[f64], theta: f64) -> (f64, bool) {
    let mut acc = 0.0;
    let mut clip = false;
    for &p in phases {
        let (v, c) = log_distance(p, theta);
        acc += v;
        clip |= c;
    }
    (acc, clip)
}

/// Evaluate `h_N` on the trajectory's recorded times and the given angles.
pub fn field_from_trajectory(traj: &PhaseTrajectory, angles: &[f64]) -> FieldSample {
    let nt = traj.num_slices();
    let na = angles.len();
    let mut values = vec![0.0; nt * na];
    let mut clipped = vec![false; nt * na];
    for ti in 0..nt {
        let slice = traj.slice(ti);
        for (ai, &theta) in angles.iter().enumerate() {
            let (v, c) = field_value(slice, theta);
            values[ti * na + ai] = v;
            clipped[ti * na + ai] = c;
        }
    }
    FieldSample {
        times: traj.times().to_vec(),
        angles: angles.to_vec(),
        values,
        clipped,
    }
}

/// `(1/2pi) \int h_N(t, .)` for one phase slice, by Gauss-Legendre panels
/// between consecutive eigenangles, geometrically graded into the
/// logarithmic endpoints. Exactly zero in exact arithmetic.
pub fn slice_spatial_mean(phases: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = phases.iter().map(|&p| wrap_angle(p)).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let rule = PanelRule::new(12);
    let mut acc = 0.0;
    for k in 0..n {
        let a = sorted[k];
        let b = if k + 1 == n {
            sorted[0] + TWO_PI
        } else {
            sorted[k + 1]
        };
        if b - a < 1e-13 {
            continue;
        }
        // Dyadic layers down to 1e-12 of the interval toward each singular
        // endpoint; each layer sees the logarithm vary by O(1) only.
        let mid = 0.5 * (a + b);
        let mut edges = vec![a + (b - a) * 1e-12];
        for lvl in (1..=42).rev() {
            edges.push(a + (mid - a) * libm::exp2(-(lvl as f64)));
        }
        edges.push(mid);
        for lvl in 1..=42 {
            edges.push(b - (b - mid) * libm::exp2(-(lvl as f64)));
        }
        edges.push(b - (b - a) * 1e-12);
        for w in edges.windows(2) {
            acc += rule.integrate(w[0], w[1], 1, |theta| field_value(phases, theta).0);
        }
    }
    acc / TWO_PI
}

/// Poisson-mollified field `P_eps h_N (t, theta)` from a phase slice:
/// `-sum_{k >= 1} (e^{-k eps} / k) Re( Tr U^k e^{-i k theta} )`,
/// truncated once the mode bound `n e^{-k eps} / k` drops below 1e-14.
pub fn mollified_field_value(phases: &[f64], theta: f64, eps: f64) -> f64 {
    assert!(eps > 0.0, "mollification scale must be positive");
    let n = phases.len() as f64;
    let mut powers: Vec<num_complex::Complex64> = phases
        .iter()
        .map(|&p| num_complex::Complex64::from_polar(1.0, p))
        .collect();
    let units = powers.clone();
    let rot = num_complex::Complex64::from_polar(1.0, -theta);
    let mut e = num_complex::Complex64::ONE;
    let mut acc = 0.0;
    let mut k = 1usize;
    loop {
        e *= rot;
        let trace: num_complex::Complex64 = powers.iter().sum();
        let damp = libm::exp(-(k as f64) * eps);
        acc -= damp / k as f64 * (trace * e).re;
        if n * damp / (k as f64) < 1e-14 {
            break;
        }
        for (p, u) in powers.iter_mut().zip(&units) {
            *p *= u;
        }
        k += 1;
        if k > 2_000_000 {
            break;
        }
    }
    acc
}

/// Exact variance of `h_N(t, theta)` at CUE equilibrium:
/// `(1/2) sum_{k >= 1} min(k, n) / k^2`, with the tail summed through the
/// trigamma asymptotic.
pub fn equilibrium_field_variance(n: usize) -> f64 {
    let nf = n as f64;
    let mut head = 0.0;
    for k in 1..=n {
        head += 1.0 / k as f64;
    }
    // sum_{k > n} 1/k^2 = psi'(n + 1).
    let x = nf + 1.0;
    let trigamma = 1.0 / x + 1.0 / (2.0 * x * x) + 1.0 / (6.0 * x * x * x)
        - 1.0 / (30.0 * libm::pow(x, 5.0))
        + 1.0 / (42.0 * libm::pow(x, 7.0));
    0.5 * (head + nf * trigamma)
}

/// Exact variance of the centered counting statistic
/// `pi (N(0, theta] - E N)` at CUE equilibrium:
/// `sum_k min(k, n) (1 - cos k theta) / k^2`.
pub fn equilibrium_counting_variance(n: usize, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < TWO_PI) {
        return Err(crate::error::Error::invalid("theta must lie in (0, 2 pi)"));
    }
    let nf = n as f64;
    let cutoff = 200_000usize.max(100 * n);
    let mut acc = 0.0;
    for k in 1..=cutoff {
        let kf = k as f64;
        acc += kf.min(nf) * (1.0 - libm::cos(kf * theta)) / (kf * kf);
    }
    // Tail: n sum_{k > cutoff} (1 - cos k theta)/k^2 ~ n / cutoff up to an
    // oscillatory remainder that is O(n / cutoff^2) after Abel summation.
    acc += nf / cutoff as f64;
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyson::cue_eigenphases;
    use crate::rng::SeedTree;

    #[test]
    fn single_particle_value() {
        // N = 1, eigenangle 0, theta = pi: log |1 - e^{i pi}| = log 2.
        let (v, clip) = field_value(&[0.0], core::f64::consts::PI);
        assert!(!clip);
        assert!((v - core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn grid_hit_is_clipped_and_flagged() {
        let (v, clip) = field_value(&[1.0, 2.0], 1.0);
        assert!(clip);
        assert!(v <= libm::log(CLIP_DISTANCE) + 2.0);
    }

    #[test]
    fn spatial_mean_vanishes() {
        // Each term integrates to zero; the graded quadrature should see
        // that to 1e-8.
        let phases = cue_eigenphases(8, &SeedTree::new(42)).unwrap();
        let mean = slice_spatial_mean(&phases);
        assert!(mean.abs() < 1e-8, "spatial mean {mean}");
    }

    #[test]
    fn field_variance_matches_exact_covariance_oracle() {
        // Var h_N(0, theta) = (1/2) sum min(k, n)/k^2 exactly at equilibrium
        // (from the same-time covariance of linear statistics applied to the
        // log kernel); empirical agreement at N = 32 within 10%.
        let n = 32;
        let exact = equilibrium_field_variance(n);
        let samples = 3000;
        let tree = SeedTree::new(50);
        let theta = 2.1;
        let mut vals = Vec::with_capacity(samples);
        for i in 0..samples {
            let phases = cue_eigenphases(n, &tree.child("s", i as u64)).unwrap();
            vals.push(field_value(&phases, theta).0);
        }
        let m = vals.iter().sum::<f64>() / samples as f64;
        let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (samples as f64 - 1.0);
        assert!(
            (var / exact - 1.0).abs() < 0.1,
            "empirical {var} vs exact {exact}"
        );
        // The exact value sits near (1/2) log N + (1 + gamma_E)/2.
        let rough = 0.5 * libm::log(n as f64) + 0.5 * (1.0 + crate::special::EULER_GAMMA);
        assert!((exact - rough).abs() < 0.02);
    }

    #[test]
    fn counting_variance_matches_exact_oracle() {
        let n = 32;
        let theta = core::f64::consts::PI;
        let exact = equilibrium_counting_variance(n, theta).unwrap();
        let samples = 3000;
        let tree = SeedTree::new(51);
        let mut vals = Vec::with_capacity(samples);
        for i in 0..samples {
            let phases = cue_eigenphases(n, &tree.child("s", i as u64)).unwrap();
            vals.push(crate::dyson::counting_statistic(&phases, theta).unwrap());
        }
        let m = vals.iter().sum::<f64>() / samples as f64;
        let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (samples as f64 - 1.0);
        assert!(
            (var / exact - 1.0).abs() < 0.12,
            "empirical {var} vs exact {exact}"
        );
    }

    #[test]
    fn mollified_field_is_smooth_version() {
        // For a single particle the mollified value has the closed form
        // -sum e^{-k eps} cos(k (theta - p))/k = log|1 - e^{-eps+i(theta-p)}|.
        let p = 0.7;
        let theta = 2.9;
        let eps = 0.05;
        let got = mollified_field_value(&[p], theta, eps);
        let z = num_complex::Complex64::from_polar(libm::exp(-eps), theta - p);
        let expect = libm::log((num_complex::Complex64::ONE - z).norm());
        assert!((got - expect).abs() < 1e-10, "{got} vs {expect}");
    }

    #[test]
    fn field_from_trajectory_shapes() {
        let traj = PhaseTrajectory::new(2, 2.0, alloc::vec![0.0, 0.1], alloc::vec![0., 3.0, 0.01, 3.01]);
        let angles = crate::quadrature::periodic_grid(8);
        let f = field_from_trajectory(&traj, &angles);
        assert_eq!(f.values.len(), 16);
        assert_eq!(f.slice(1).len(), 8);
    }
}
