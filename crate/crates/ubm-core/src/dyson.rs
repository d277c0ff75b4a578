//! Circular Dyson dynamics of the eigenangles,
//! `d theta_j = (beta/2N) sum_{i != j} cot((theta_j - theta_i)/2) dt
//!            + sqrt(2/N) dB_j`,
//! whose beta = 2 case is the spectrum of the unitary Brownian motion in the
//! same clock. Angles are lifted (windings tracked); they are only reduced
//! mod 2 pi at reporting time.

use alloc::{vec, vec::Vec};
use num_complex::Complex64;
use rand_chacha::ChaCha12Rng;

use crate::error::Error;
use crate::rng::{standard_normal, uniform, SeedTree};
use crate::unitary::haar_with_rng;
use crate::{Result, TWO_PI};

/// Two angles closer than this (mod 2 pi) count as a collision.
pub const COLLISION_TOL: f64 = 1e-12;
const MAX_HALVINGS: u32 = 20;

/// Ordered eigenangle paths of `n` particles over a time grid.
#[derive(Debug, Clone)]
pub struct PhaseTrajectory {
    n: usize,
    beta: f64,
    times: Vec<f64>,
    /// Time-major, lifted (not wrapped) angles.
    phases: Vec<f64>,
}

impl PhaseTrajectory {
    pub fn new(n: usize, beta: f64, times: Vec<f64>, phases: Vec<f64>) -> Self {
        assert_eq!(times.len() * n, phases.len());
        PhaseTrajectory {
            n,
            beta,
            times,
            phases,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn num_slices(&self) -> usize {
        self.times.len()
    }

    /// Lifted angles at the i-th recorded time.
    pub fn slice(&self, i: usize) -> &[f64] {
        &self.phases[i * self.n..(i + 1) * self.n]
    }

    /// Angles at slice `i`, reduced to `[0, 2 pi)` and sorted.
    pub fn sorted_mod(&self, i: usize) -> Vec<f64> {
        let mut v: Vec<f64> = self.slice(i).iter().map(|&t| wrap_angle(t)).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }
}

#[inline]
pub fn wrap_angle(t: f64) -> f64 {
    let mut x = t % TWO_PI;
    if x < 0.0 {
        x += TWO_PI;
    }
    x
}

/// Eigenangles of an exactly Haar-distributed unitary (CUE).
///
/// The unitary is sampled by Gaussian QR; its eigenangles are read off from
/// a randomly rotated Hermitian part, with a residual check that retries on
/// the rare near-degenerate rotation.
pub fn cue_eigenphases(n: usize, seed: &SeedTree) -> Result<Vec<f64>> {
    let mut rng = seed.rng();
    cue_eigenphases_with_rng(n, &mut rng)
}

pub(crate) fn cue_eigenphases_with_rng(n: usize, rng: &mut ChaCha12Rng) -> Result<Vec<f64>> {
    let u = haar_with_rng(n, rng);
    unitary_phases_with_rng(u.mat(), rng)
}

/// Eigenangles of a given unitary matrix (sorted in `[0, 2 pi)`).
pub fn unitary_phases_with_rng(
    u: &crate::linalg::CMat,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<f64>> {
    let n = u.n();
    for _attempt in 0..6 {
        let phi = TWO_PI * uniform(rng);
        let w = Complex64::from_polar(1.0, phi);
        let h = crate::linalg::CMat::from_fn(n, |i, j| {
            (u[(i, j)] * w + (u[(j, i)] * w).conj()) * 0.5
        });
        let (_, q) = crate::linalg::hermitian_eig(&h)?;
        let mut phases = Vec::with_capacity(n);
        let mut ok = true;
        for j in 0..n {
            let col: Vec<Complex64> = (0..n).map(|i| q[(i, j)]).collect();
            let uv = u.mul_vec(&col);
            let mu: Complex64 = col.iter().zip(&uv).map(|(a, b)| a.conj() * b).sum();
            if (mu.norm() - 1.0).abs() > 1e-8 {
                ok = false;
                break;
            }
            phases.push(wrap_angle(mu.arg()));
        }
        if ok {
            phases.sort_by(|a, b| a.partial_cmp(b).unwrap());
            return Ok(phases);
        }
    }
    Err(Error::Numerical(alloc::string::String::from(
        "eigenphase extraction kept hitting a degenerate rotation",
    )))
}

/// Cotangent drift of all particles: `drift_j = sum_{i != j} cot((t_j - t_i)/2)`,
/// computed pairwise through `cot((a-b)/2) = Re[ i (z_a + z_b)/(z_a - z_b) ]`.
fn cot_drift(phases: &[f64], out: &mut [f64]) {
    let n = phases.len();
    for d in out.iter_mut() {
        *d = 0.0;
    }
    let zs: Vec<Complex64> = phases
        .iter()
        .map(|&t| Complex64::from_polar(1.0, t))
        .collect();
    for j in 0..n {
        let zj = zs[j];
        for i in 0..j {
            let zi = zs[i];
            let num = Complex64::new(0.0, 1.0) * (zj + zi);
            let den = zj - zi;
            let c = (num / den).re;
            out[j] += c;
            out[i] -= c;
        }
    }
}

fn min_gap_mod(phases: &[f64]) -> (f64, (usize, usize)) {
    let n = phases.len();
    let mut sorted: Vec<(f64, usize)> = phases
        .iter()
        .enumerate()
        .map(|(i, &t)| (wrap_angle(t), i))
        .collect();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut best = f64::INFINITY;
    let mut pair = (0, 0);
    for k in 0..n {
        let (a, ia) = sorted[k];
        let (b, ib) = sorted[(k + 1) % n];
        let gap = if k + 1 == n { b + TWO_PI - a } else { b - a };
        if gap < best {
            best = gap;
            pair = (ia, ib);
        }
    }
    (best, pair)
}

struct DysonStepper {
    n: usize,
    beta: f64,
    drift: Vec<f64>,
    proposal: Vec<f64>,
}

/// Adjacent pairs closer than `pair_threshold` get their mutual repulsion
/// integrated implicitly (closed-form positive root), which keeps explicit
/// Euler off the stiff region; everything else is explicit.
fn pair_threshold(beta: f64, dt: f64, n: f64) -> f64 {
    6.0 * libm::sqrt(2.0 * beta.max(1.0) * dt / n)
}

impl DysonStepper {
    fn new(n: usize, beta: f64) -> Self {
        DysonStepper {
            n,
            beta,
            drift: vec![0.0; n],
            proposal: vec![0.0; n],
        }
    }

    /// Advance `phases` by `dt` given the total Brownian increment `w`
    /// (per-particle variance `2 dt / n`), refining by Brownian-bridge
    /// halving when the explicit step is too coarse.
    ///
    /// For `beta >= 1`, adjacent pairs inside the stiff region get their
    /// mutual `cot` term integrated implicitly: with `G` the circular gap
    /// and `Gt` its explicit pre-update, the new gap solves
    /// `G' = Gt + (2 beta dt / n) / G'`, whose positive root
    /// `G' = (Gt + sqrt(Gt^2 + 8 beta dt / n)) / 2` can never cross zero.
    /// The pair's center moves explicitly, so the total phase is untouched.
    fn advance(
        &mut self,
        phases: &mut [f64],
        time: f64,
        dt: f64,
        w: &[f64],
        depth: u32,
        rng: &mut ChaCha12Rng,
    ) -> Result<()> {
        let n = self.n;
        let nf = n as f64;
        cot_drift(phases, &mut self.drift);
        let scale = self.beta / (2.0 * nf) * dt;

        // Circular adjacency.
        let mut sorted: Vec<(f64, usize)> = phases
            .iter()
            .enumerate()
            .map(|(i, &t)| (wrap_angle(t), i))
            .collect();
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let gap_of = |k: usize| -> f64 {
            let a = sorted[k].0;
            let b = if k + 1 == n {
                sorted[0].0 + TWO_PI
            } else {
                sorted[k + 1].0
            };
            b - a
        };

        // Flag stiff adjacent pairs (smallest gaps first, disjoint in
        // particles); only meaningful for beta >= 1 where paths never cross.
        let threshold = pair_threshold(self.beta, dt, nf);
        let mut flagged: Vec<(usize, usize)> = Vec::new(); // (lo idx, hi idx)
        let mut used = vec![false; n];
        if self.beta >= 1.0 && n > 1 {
            let mut candidates: Vec<(f64, usize)> = (0..n)
                .map(|k| (gap_of(k), k))
                .filter(|&(g, _)| g < threshold)
                .collect();
            candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            for (_, k) in candidates {
                let lo = sorted[k].1;
                let hi = sorted[(k + 1) % n].1;
                if !used[lo] && !used[hi] {
                    used[lo] = true;
                    used[hi] = true;
                    flagged.push((lo, hi));
                }
            }
        }
        // Remove the mutual cot term of flagged pairs from the explicit drift.
        for &(lo, hi) in &flagged {
            let zl = Complex64::from_polar(1.0, phases[lo]);
            let zh = Complex64::from_polar(1.0, phases[hi]);
            let v = ((zh + zl) * Complex64::new(0.0, 1.0) / (zh - zl)).re;
            self.drift[hi] -= v;
            self.drift[lo] += v;
        }

        let diffusive_cap =
            10.0 * libm::sqrt(2.0 * dt / nf * libm::log(core::f64::consts::E + nf));
        let mut coarse = false;
        for j in 0..n {
            let delta = self.drift[j] * scale + w[j];
            self.proposal[j] = phases[j] + delta;
            if delta.abs() > diffusive_cap {
                coarse = true;
            }
        }
        // Implicit gap update for the flagged pairs.
        for &(lo, hi) in &flagged {
            let gap = wrap_angle(phases[hi] - phases[lo]);
            let d_lo = self.proposal[lo] - phases[lo];
            let d_hi = self.proposal[hi] - phases[hi];
            let center_move = 0.5 * (d_lo + d_hi);
            let pre_gap = gap + (d_hi - d_lo);
            let c = 8.0 * self.beta * dt / nf;
            let new_gap = 0.5 * (pre_gap + libm::sqrt(pre_gap * pre_gap + c));
            self.proposal[lo] = phases[lo] + center_move - 0.5 * (new_gap - gap);
            self.proposal[hi] = phases[hi] + center_move + 0.5 * (new_gap - gap);
        }
        if n > 1 && !coarse {
            // Crossing prevention: moves stay under 0.45 of the relevant
            // neighbor gaps, so two admissible moves cannot cross. Flagged
            // particles are only checked against their outer neighbor (the
            // implicit update already protects the flagged gap itself).
            let mut pos = vec![0usize; n];
            for (k, &(_, idx)) in sorted.iter().enumerate() {
                pos[idx] = k;
            }
            'check: for k in 0..n {
                let (_, idx) = sorted[k];
                if used[idx] {
                    continue;
                }
                let nearest = gap_of((k + n - 1) % n).min(gap_of(k));
                let delta = self.proposal[idx] - phases[idx];
                if delta.abs() > 0.45 * nearest {
                    coarse = true;
                    break 'check;
                }
            }
            for &(lo, hi) in &flagged {
                let outer_lo = gap_of((pos[lo] + n - 1) % n);
                let outer_hi = gap_of(pos[hi]);
                let d_lo = self.proposal[lo] - phases[lo];
                let d_hi = self.proposal[hi] - phases[hi];
                if d_lo.abs() > 0.45 * outer_lo || d_hi.abs() > 0.45 * outer_hi {
                    coarse = true;
                    break;
                }
            }
        }
        let (gap_after, pair) = if n > 1 {
            min_gap_mod(&self.proposal)
        } else {
            (f64::INFINITY, (0, 0))
        };
        let collided = n > 1 && gap_after < COLLISION_TOL;

        if collided && self.beta < 1.0 && !coarse {
            // Sub-critical beta: collisions are genuine; report and abort.
            return Err(Error::Collision {
                time: time + dt,
                pair,
            });
        }
        if coarse || collided {
            if depth >= MAX_HALVINGS {
                return if self.beta < 1.0 {
                    Err(Error::Collision {
                        time: time + dt,
                        pair,
                    })
                } else {
                    Err(Error::StepHalvingExceeded { time })
                };
            }
            // Split the driving increment with a Brownian bridge and recurse.
            let half_sd = libm::sqrt(dt / (2.0 * nf));
            let mut w1 = vec![0.0; n];
            let mut w2 = vec![0.0; n];
            for j in 0..n {
                let bridge = half_sd * standard_normal(rng);
                w1[j] = 0.5 * w[j] + bridge;
                w2[j] = w[j] - w1[j];
            }
            self.advance(phases, time, dt / 2.0, &w1, depth + 1, rng)?;
            self.advance(phases, time + dt / 2.0, dt / 2.0, &w2, depth + 1, rng)?;
            return Ok(());
        }
        phases.copy_from_slice(&self.proposal);
        Ok(())
    }
}

/// Euler-Maruyama for the circular Dyson dynamics with continuous lifting.
///
/// Records every `record_every`-th step (and always the initial and final
/// slices). `record_every = 1` keeps the full path.
pub fn evolve_eigenphases_recorded(
    start: &[f64],
    t0: f64,
    dt: f64,
    steps: usize,
    beta: f64,
    record_every: usize,
    seed: &SeedTree,
) -> Result<PhaseTrajectory> {
    if beta <= 0.0 {
        return Err(Error::invalid("beta must be positive"));
    }
    if dt <= 0.0 {
        return Err(Error::invalid("dt must be positive"));
    }
    let n = start.len();
    if n == 0 {
        return Err(Error::invalid("need at least one particle"));
    }
    if n > 1 {
        let (gap, pair) = min_gap_mod(start);
        if gap < COLLISION_TOL {
            return Err(Error::Collision { time: t0, pair });
        }
    }
    let record_every = record_every.max(1);
    let mut rng = seed.rng();
    let mut stepper = DysonStepper::new(n, beta);
    let mut phases = start.to_vec();
    let mut times = vec![t0];
    let mut all = phases.clone();
    let noise_sd = libm::sqrt(2.0 * dt / n as f64);
    let mut w = vec![0.0; n];
    for s in 1..=steps {
        for wj in w.iter_mut() {
            *wj = noise_sd * standard_normal(&mut rng);
        }
        let t = t0 + (s - 1) as f64 * dt;
        stepper.advance(&mut phases, t, dt, &w, 0, &mut rng)?;
        if s % record_every == 0 || s == steps {
            times.push(t0 + s as f64 * dt);
            all.extend_from_slice(&phases);
        }
    }
    Ok(PhaseTrajectory::new(n, beta, times, all))
}

/// Full-resolution variant of [`evolve_eigenphases_recorded`].
pub fn evolve_eigenphases(
    start: &[f64],
    dt: f64,
    steps: usize,
    beta: f64,
    seed: &SeedTree,
) -> Result<PhaseTrajectory> {
    evolve_eigenphases_recorded(start, 0.0, dt, steps, beta, 1, seed)
}

/// Per-slice lattice deviation report.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidityRow {
    pub time: f64,
    /// `max_k |theta_(k) - gamma_k|` after optimal rotation alignment.
    pub max_deviation: f64,
    /// `n * max_deviation / log n` (the rigidity-normalized statistic).
    pub scaled: f64,
    /// Set when `n * max_deviation > (log n)^2`; a flag, not a failure.
    pub flagged: bool,
}

/// Deviation of sorted angles from the equidistant lattice `2 pi k / n`,
/// minimized over a global rotation (and the cyclic relabeling it induces).
pub fn lattice_deviation(phases_mod_sorted: &[f64]) -> f64 {
    let n = phases_mod_sorted.len();
    if n == 0 {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for shift in 0..n {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..n {
            let lattice = TWO_PI * ((k + shift) % n) as f64 / n as f64;
            let mut d = phases_mod_sorted[k] - lattice;
            // Bring the deviation to (-pi, pi] on the circle.
            d -= TWO_PI * libm::round(d / TWO_PI);
            lo = lo.min(d);
            hi = hi.max(d);
        }
        // The optimal rotation for this labeling is the midrange.
        best = best.min(0.5 * (hi - lo));
    }
    best
}

/// Rigidity report over all recorded slices of a trajectory.
pub fn rigidity_report(traj: &PhaseTrajectory) -> Vec<RigidityRow> {
    let n = traj.n();
    let logn = libm::log(n as f64);
    let threshold = logn * logn;
    (0..traj.num_slices())
        .map(|i| {
            let sorted = traj.sorted_mod(i);
            let max_deviation = lattice_deviation(&sorted);
            let scaled = if n > 1 && logn > 0.0 {
                n as f64 * max_deviation / logn
            } else {
                0.0
            };
            RigidityRow {
                time: traj.times()[i],
                max_deviation,
                scaled,
                flagged: n as f64 * max_deviation > threshold,
            }
        })
        .collect()
}

/// Centered counting statistic `pi (N(0, theta] - n theta / 2pi)` of a slice.
pub fn counting_statistic(phases: &[f64], theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < TWO_PI) {
        return Err(Error::invalid("theta must lie in (0, 2 pi)"));
    }
    let n = phases.len() as f64;
    let count = phases
        .iter()
        .filter(|&&p| {
            let w = wrap_angle(p);
            w > 0.0 && w <= theta
        })
        .count() as f64;
    Ok(core::f64::consts::PI * (count - n * theta / TWO_PI))
}

/// `Tr f` of a phase slice for a Fourier-polynomial symbol.
pub fn tr_symbol_phases(phases: &[f64], f: &crate::symbols::CircleSymbol) -> f64 {
    phases.iter().map(|&t| f.eval(t)).sum()
}
