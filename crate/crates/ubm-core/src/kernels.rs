//! The multi-time determinantal kernel of the equilibrium eigenvalue
//! process, the twisted heat kernel behind it, the microscale limit of the
//! off-diagonal blocks, and the out-of-equilibrium kernel for deterministic
//! initial angles.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::Error;
use crate::quadrature::{gauss_hermite, PanelRule};
use crate::{Result, TWO_PI};

/// Evaluator for `K(i, x; j, y)` over a fixed sorted time grid.
///
/// Branches, with `d = |t_i - t_j|` and `a = (N+1)/2`:
///
/// * `i <= j`: `(1/2pi) sum_{k=1}^{N} e^{(k-1)(k-N) d / N} e^{i (x-y)(k-a)}`;
/// * `i > j`: `-(1/2pi) sum_{k not in [1,N]} e^{-(k-1)(k-N) d / N} e^{i (x-y)(k-a)}`,
///   truncated once a closed-form geometric bound certifies the remaining
///   tail is below 1e-16.
///
/// Equal times with `i > j` only arise for degenerate grids; the value is
/// then taken by continuity as the same-time (`i <= j`) kernel, which is the
/// Abel-summed limit away from `x = y`.
#[derive(Debug, Clone)]
pub struct ExtendedKernel {
    n: usize,
    times: Vec<f64>,
}

/// Time gaps below this are treated as equal times in the `i > j` branch.
const EQUAL_TIME_EPS: f64 = 1e-9;

impl ExtendedKernel {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Same-time kernel `(1/2pi) sin(N phi / 2) / sin(phi / 2)`.
    fn dirichlet(&self, phi: f64) -> f64 {
        let n = self.n as f64;
        let s = libm::sin(0.5 * phi);
        if libm::fabs(s) < 1e-9 {
            // phi near 2 pi m: limit N cos(N pi m)/cos(pi m).
            let m = libm::round(phi / TWO_PI) as i64;
            let sign = if (m * (self.n as i64 - 1)) % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            return n * sign / TWO_PI;
        }
        libm::sin(0.5 * n * phi) / s / TWO_PI
    }

    pub fn evaluate(&self, i: usize, x: f64, j: usize, y: f64) -> Complex64 {
        let d = libm::fabs(self.times[i] - self.times[j]);
        let phi = x - y;
        let value = if i <= j || d < EQUAL_TIME_EPS {
            if d < EQUAL_TIME_EPS {
                self.dirichlet(phi)
            } else {
                self.forward_sum(phi, d)
            }
        } else {
            self.backward_sum(phi, d)
        };
        Complex64::new(value, 0.0)
    }

    fn forward_sum(&self, phi: f64, d: f64) -> f64 {
        let n = self.n;
        let nf = n as f64;
        let a = 0.5 * (nf + 1.0);
        let mut acc = 0.0;
        for k in 1..=n {
            let kf = k as f64;
            let weight = libm::exp((kf - 1.0) * (kf - nf) * d / nf);
            acc += weight * libm::cos(phi * (kf - a));
        }
        acc / TWO_PI
    }

    fn backward_sum(&self, phi: f64, d: f64) -> f64 {
        let n = self.n as f64;
        let half = 0.5 * (n - 1.0);
        let mut acc = 0.0;
        let mut m = 1.0_f64;
        loop {
            let term = libm::exp(-m * (n + m - 1.0) * d / n);
            acc += term * libm::cos(phi * (half + m));
            // Remaining terms are dominated by the geometric series with
            // ratio exp(-(n + 2m) d / n).
            let ratio = libm::exp(-(n + 2.0 * m) * d / n);
            if term * ratio / (1.0 - ratio) < 1e-16 {
                break;
            }
            m += 1.0;
            if m > 5e7 {
                break;
            }
        }
        -2.0 * acc / TWO_PI
    }
}

/// Kernel for `n` particles on a sorted time grid (the clock of the
/// `dU = sqrt(2) U dB - U dt` dynamics).
pub fn equilibrium_extended_kernel(n: usize, times: &[f64]) -> Result<ExtendedKernel> {
    if n == 0 {
        return Err(Error::invalid("kernel needs n >= 1"));
    }
    if times.is_empty() || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("kernel needs finite times"));
    }
    for w in times.windows(2) {
        if w[1] < w[0] {
            return Err(Error::invalid("kernel times must be sorted"));
        }
    }
    Ok(ExtendedKernel {
        n,
        times: times.to_vec(),
    })
}

/// Evaluation mode for the twisted heat kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatKernelMode {
    /// `sum_k (-1)^{k(N-1)} p_t(x - y + 2 k pi)` with the Gaussian kernel.
    Theta,
    /// `(1/2pi) sum_n e^{-(n - (N+1)/2)^2 t / 2} e^{i (x-y)(n - (N+1)/2)}`.
    Fourier,
}

/// The (possibly antiperiodized) circle heat kernel behind the multi-time
/// determinantal structure; the two modes agree by Poisson summation.
pub fn twisted_heat_kernel(x: f64, y: f64, t: f64, n: usize, mode: HeatKernelMode) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::invalid("heat kernel needs t > 0"));
    }
    if n == 0 {
        return Err(Error::invalid("heat kernel needs n >= 1"));
    }
    let phi = x - y;
    match mode {
        HeatKernelMode::Theta => {
            let norm = 1.0 / libm::sqrt(TWO_PI * t);
            let reach = libm::sqrt(2.0 * t * 42.0) + libm::fabs(phi);
            let k_max = (reach / TWO_PI) as i64 + 2;
            let twist = n % 2 == 0; // (-1)^{k(N-1)} is nontrivial for even N
            let mut acc = 0.0;
            for k in -k_max..=k_max {
                let u = phi + TWO_PI * k as f64;
                let sign = if twist && k.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
                acc += sign * libm::exp(-u * u / (2.0 * t)) * norm;
            }
            Ok(acc)
        }
        HeatKernelMode::Fourier => {
            let a = 0.5 * (n as f64 + 1.0);
            let reach = libm::sqrt(2.0 * 42.0 / t);
            let lo = libm::floor(a - reach) as i64;
            let hi = libm::ceil(a + reach) as i64;
            let mut acc = 0.0;
            for m in lo..=hi {
                let nu = m as f64 - a;
                acc += libm::exp(-0.5 * nu * nu * t) * libm::cos(phi * nu);
            }
            Ok(acc / TWO_PI)
        }
    }
}

/// Branch of the microscale limit kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MicroscaleBranch {
    /// `(1/2pi) int_{|z| < 1/2} e^{(z^2 - 1/4) tau + i mu z} dz`.
    Forward,
    /// `(1/2pi) int_{|z| > 1/2} e^{(1/4 - z^2) tau + i mu z} dz`; needs tau > 0.
    Backward,
}

/// Microscale limit of `(1/N) K` at rescaled gap `mu = N (x - y)` and time
/// `tau = N t`.
pub fn microscale_limit_kernel(mu: f64, tau: f64, branch: MicroscaleBranch) -> Result<f64> {
    if tau < 0.0 {
        return Err(Error::invalid("tau must be nonnegative"));
    }
    let rule = PanelRule::new(16);
    match branch {
        MicroscaleBranch::Forward => {
            let panels = 6
                + (libm::fabs(mu) / 2.5) as usize
                + (libm::sqrt(tau) * 2.0) as usize;
            let v = rule.integrate(-0.5, 0.5, panels, |z| {
                libm::exp((z * z - 0.25) * tau) * libm::cos(mu * z)
            });
            Ok(v / TWO_PI)
        }
        MicroscaleBranch::Backward => {
            if tau == 0.0 {
                return Err(Error::invalid(
                    "backward microscale kernel diverges at tau = 0",
                ));
            }
            // Integrand decays like e^{-(z^2 - 1/4) tau}; past z_max the tail
            // is below 1e-19 and is dropped.
            let z_max = libm::sqrt(0.25 + 43.0 / tau);
            let panels = 8
                + (libm::fabs(mu) * (z_max - 0.5) / 2.5) as usize
                + (z_max * libm::sqrt(tau)) as usize;
            let v = rule.integrate(0.5, z_max, panels, |z| {
                libm::exp((0.25 - z * z) * tau) * libm::cos(mu * z)
            });
            Ok(2.0 * v / TWO_PI)
        }
    }
}

/// Out-of-equilibrium single-time kernel for deterministic starting angles
/// `x`: `K_{t,x}(z, y) = sum_i T(x_i, z) E prod_{j != i}
/// sin((y - i B_t - x_j)/2) / sin((x_i - x_j)/2)`, the Gaussian expectation
/// evaluated by Gauss-Hermite quadrature.
pub fn out_of_equilibrium_kernel(
    x: &[f64],
    t: f64,
    z: f64,
    y: f64,
    hermite_order: usize,
) -> Result<Complex64> {
    let n = x.len();
    if n == 0 {
        return Err(Error::invalid("need at least one starting angle"));
    }
    if t <= 0.0 {
        return Err(Error::invalid("out-of-equilibrium kernel needs t > 0"));
    }
    for i in 0..n {
        for j in 0..i {
            let gap = 2.0 * libm::fabs(libm::sin(0.5 * (x[i] - x[j])));
            if gap < 1e-8 {
                return Err(Error::invalid(
                    "starting angles nearly coincide (sine denominators)",
                ));
            }
        }
    }
    let (nodes, weights) = gauss_hermite(hermite_order.max(2));
    let sqrt_pi = libm::sqrt(core::f64::consts::PI);
    let scale = libm::sqrt(2.0 * t);
    let mut acc = Complex64::ZERO;
    for i in 0..n {
        let mut denom = 1.0;
        for j in 0..n {
            if j != i {
                denom *= libm::sin(0.5 * (x[i] - x[j]));
            }
        }
        let mut expect = Complex64::ZERO;
        for (xi, w) in nodes.iter().zip(&weights) {
            let b = scale * xi;
            let mut prod = Complex64::ONE;
            for (j, &xj) in x.iter().enumerate() {
                if j != i {
                    let arg = Complex64::new(0.5 * (y - xj), -0.5 * b);
                    prod *= arg.sin();
                }
            }
            expect += prod * *w;
        }
        expect /= sqrt_pi;
        let t_val = twisted_heat_kernel(x[i], z, t, n, HeatKernelMode::Theta)?;
        acc += expect * (t_val / denom);
    }
    Ok(acc)
}
