//! Barnes G, log-Gamma products and the Fisher-Hartwig constants.
//!
//! Everything is computed in log space; the `G`- and `Gamma`-products that
//! enter determinant asymptotics overflow f64 well before the sizes the
//! experiments use.

use crate::error::Error;
use crate::Result;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577215664901532860606512090082;

/// log Gamma for positive arguments.
pub fn log_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    libm::lgamma(x)
}

/// Hurwitz zeta `zeta(s, a)` for integer `s >= 2` and large `a`,
/// by Euler-Maclaurin with three Bernoulli corrections.
fn hurwitz_zeta_int(s: u32, a: f64) -> f64 {
    let s = s as f64;
    let inv = 1.0 / a;
    let a_pow_ms = libm::exp(-s * libm::log(a));
    let lead = a * a_pow_ms / (s - 1.0);
    let half = 0.5 * a_pow_ms;
    let b2 = s / 12.0 * a_pow_ms * inv;
    let b4 = s * (s + 1.0) * (s + 2.0) / 720.0 * a_pow_ms * inv * inv * inv;
    let b6 = s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) / 30240.0
        * a_pow_ms
        * inv
        * inv
        * inv
        * inv
        * inv;
    lead + half + b2 - b4 + b6
}

/// log G(x) for `x > 0`, where G is the Barnes function with
/// `G(z+1) = Gamma(z) G(z)` and `G(1) = 1`.
///
/// The Weierstrass product is summed to K terms with the remaining tail
/// resummed exactly through Hurwitz zeta values, so the truncation error is
/// far below the 1e-10 relative target.
pub fn log_barnes_g(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::invalid("Barnes G evaluated outside x > 0"));
    }
    let z = x - 1.0;
    if z == 0.0 || z == 1.0 {
        return Ok(0.0);
    }
    let k_terms = 64usize.max(libm::ceil(4.0 * (libm::fabs(z) + 1.0)) as usize);
    let mut sum = 0.0;
    for k in 1..=k_terms {
        let kf = k as f64;
        sum += kf * libm::log1p(z / kf) - z + z * z / (2.0 * kf);
    }
    // Tail: sum_{k>K} [k log(1+z/k) - z + z^2/2k]
    //     = sum_{m>=3} (-1)^{m+1} z^m / m * zeta(m-1, K+1).
    let a = (k_terms + 1) as f64;
    let mut tail = 0.0;
    let mut zm = z * z * z;
    let mut m = 3u32;
    loop {
        let term = if m % 2 == 1 { zm } else { -zm } / m as f64 * hurwitz_zeta_int(m - 1, a);
        tail += term;
        if libm::fabs(term) < 1e-17 * (1.0 + libm::fabs(sum)) || m > 200 {
            break;
        }
        zm *= z;
        m += 1;
    }
    let ln_2pi = libm::log(2.0 * core::f64::consts::PI);
    Ok(0.5 * z * ln_2pi - 0.5 * (z + z * z * (1.0 + EULER_GAMMA)) + sum + tail)
}

/// Barnes G itself.
pub fn barnes_g(x: f64) -> Result<f64> {
    Ok(libm::exp(log_barnes_g(x)?))
}

/// log of the Fisher-Hartwig constant `G(1+gamma/2)^2 / G(1+gamma)`.
pub fn fh_constant_log(gamma: f64) -> Result<f64> {
    Ok(2.0 * log_barnes_g(1.0 + gamma / 2.0)? - log_barnes_g(1.0 + gamma)?)
}

/// log of `E |det(U - e^{i theta})|^gamma` over an n x n CUE matrix:
/// `sum_{j=1}^n log Gamma(j) + log Gamma(j+gamma) - 2 log Gamma(j+gamma/2)`.
pub fn keating_snaith_log(n: usize, gamma: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("Keating-Snaith moment needs n >= 1"));
    }
    if gamma < 0.0 {
        return Err(Error::invalid("Keating-Snaith moment needs gamma >= 0"));
    }
    let mut acc = 0.0;
    for j in 1..=n {
        let jf = j as f64;
        acc += log_gamma(jf) + log_gamma(jf + gamma) - 2.0 * log_gamma(jf + gamma / 2.0);
    }
    Ok(acc)
}

/// `E |det(U - e^{i theta})|^gamma`, independent of theta.
pub fn keating_snaith_moment(n: usize, gamma: f64) -> Result<f64> {
    Ok(libm::exp(keating_snaith_log(n, gamma)?))
}
