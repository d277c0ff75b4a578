//! Toeplitz determinants, Fisher-Hartwig symbols and the exact/asymptotic
//! predictions attached to them: the static Widom formula, its multi-time
//! extension for joint moments of characteristic polynomials, the limiting
//! covariance functional, and the exact finite-N covariance of linear
//! statistics of the eigenangle dynamics.

use alloc::{format, vec::Vec};
use num_complex::Complex64;

use crate::error::Error;
use crate::linalg::{condition_estimate, lu_factor, CMat};
use crate::special::{fh_constant_log, log_gamma};
use crate::symbols::{h_half_inner, poisson_eval, CircleSymbol};
use crate::Result;

/// A Fisher-Hartwig symbol `f(z) = e^{V(z)} prod_j |z - z_j|^{2 alpha_j}`.
#[derive(Debug, Clone)]
pub struct FHSymbol {
    /// `(angle of z_j, alpha_j)` with `alpha_j > -1/2`.
    pub factors: Vec<(f64, f64)>,
    /// Real smooth part `V` (None means `V = 0`).
    pub smooth: Option<CircleSymbol>,
}

impl FHSymbol {
    pub fn new(factors: Vec<(f64, f64)>, smooth: Option<CircleSymbol>) -> Result<Self> {
        for &(_, alpha) in &factors {
            if alpha <= -0.5 {
                return Err(Error::invalid("Fisher-Hartwig exponent must exceed -1/2"));
            }
        }
        if let Some(v) = &smooth {
            if v.reality_defect() > 1e-10 {
                return Err(Error::invalid("smooth part must be a real symbol"));
            }
        }
        Ok(FHSymbol { factors, smooth })
    }
}

/// Coefficients of the centered pure factor `|1 - e^{i theta}|^{2 alpha}`:
/// `c_k = (-1)^k Gamma(1 + 2 alpha) / (Gamma(1 + alpha + k) Gamma(1 + alpha - k))`,
/// generated by the stable ratio recurrence
/// `c_{k+1} = c_k (k - alpha) / (k + 1 + alpha)`.
pub fn fh_factor_coefficients(alpha: f64, k_max: usize) -> Result<CircleSymbol> {
    if alpha <= -0.5 {
        return Err(Error::invalid("Fisher-Hartwig exponent must exceed -1/2"));
    }
    let mut sym = CircleSymbol::zero(k_max);
    let c0 = libm::exp(log_gamma(1.0 + 2.0 * alpha) - 2.0 * log_gamma(1.0 + alpha));
    sym.set_coeff(0, Complex64::new(c0, 0.0));
    let mut c = c0;
    for k in 0..k_max as i64 {
        c *= (k as f64 - alpha) / (k as f64 + 1.0 + alpha);
        sym.set_coeff(k + 1, Complex64::new(c, 0.0));
        sym.set_coeff(-(k + 1), Complex64::new(c, 0.0));
    }
    Ok(sym)
}

fn rotate_symbol(sym: &CircleSymbol, angle: f64) -> CircleSymbol {
    let mut out = CircleSymbol::zero(sym.k_max());
    for (k, c) in sym.iter() {
        out.set_coeff(k, c * Complex64::from_polar(1.0, -k as f64 * angle));
    }
    out
}

/// Coefficients of the exponential `e^{V}` of a band-limited real symbol,
/// by fine-grid quadrature of the evaluator.
fn exp_symbol_coefficients(v: &CircleSymbol, k_max: usize) -> Result<CircleSymbol> {
    let m = (8 * (k_max + v.k_max() + 1)).max(512);
    let sym = crate::symbols::fourier_coefficients(|t| libm::exp(v.eval_series(t)), k_max, m, &[])?;
    if sym.coeff(k_max as i64).norm() > 1e-12 {
        return Err(Error::Numerical(format!(
            "e^V coefficients not decayed at k_max = {k_max}; raise it"
        )));
    }
    Ok(sym)
}

/// Full symbol coefficients for `|k| <= k_max` by convolving the factor
/// closed forms and `e^V` at a widened working truncation.
///
/// The truncation loss on the returned range is estimated by re-running the
/// pipeline at half the working truncation; a loss above 1e-8 is an error
/// (raise `k_max`).
pub fn fh_symbol_coefficients(symbol: &FHSymbol, k_max: usize) -> Result<CircleSymbol> {
    let work = (8 * k_max.max(1)).max(8192);
    let full = fh_coeffs_at(symbol, k_max, work)?;
    let halved = fh_coeffs_at(symbol, k_max, work / 2)?;
    let mut loss = 0.0_f64;
    for k in -(k_max as i64)..=k_max as i64 {
        loss = loss.max((full.coeff(k) - halved.coeff(k)).norm());
    }
    if loss > 1e-8 {
        return Err(Error::Numerical(format!(
            "symbol convolution truncation loss {loss:.2e} > 1e-8; raise k_max"
        )));
    }
    Ok(full)
}

fn fh_coeffs_at(symbol: &FHSymbol, k_max: usize, work: usize) -> Result<CircleSymbol> {
    let mut acc: Option<CircleSymbol> = None;
    for &(angle, alpha) in &symbol.factors {
        let factor = rotate_symbol(&fh_factor_coefficients(alpha, work)?, angle);
        acc = Some(match acc {
            None => factor,
            Some(prev) => convolve_at(&prev, &factor, work),
        });
    }
    if let Some(v) = &symbol.smooth {
        let band = (4 * v.k_max()).max(64).min(work);
        let ev = exp_symbol_coefficients(v, band)?;
        acc = Some(match acc {
            None => ev,
            Some(prev) => convolve_at(&prev, &ev, work),
        });
    }
    let acc = acc.unwrap_or_else(|| CircleSymbol::constant(1.0));
    let mut out = CircleSymbol::zero(k_max);
    for k in -(k_max as i64)..=k_max as i64 {
        out.set_coeff(k, acc.coeff(k));
    }
    Ok(out)
}

fn convolve_at(f: &CircleSymbol, g: &CircleSymbol, k_max: usize) -> CircleSymbol {
    let fa = f.k_max() as i64;
    let ga = g.k_max() as i64;
    let mut out = CircleSymbol::zero(k_max);
    for k in -(k_max as i64)..=k_max as i64 {
        let mut acc = Complex64::ZERO;
        let lo = (-fa).max(k - ga);
        let hi = fa.min(k + ga);
        let mut m = lo;
        while m <= hi {
            acc += f.coeff(m) * g.coeff(k - m);
            m += 1;
        }
        out.set_coeff(k, acc);
    }
    out
}

/// Toeplitz determinant value with its condition diagnostic.
#[derive(Debug, Clone, Copy)]
pub struct ToeplitzDet {
    pub value: f64,
    pub condition: f64,
    /// Cleared when the condition estimate exceeds 1e12.
    pub reliable: bool,
}

/// `D_n(f) = det(f_hat_{j-k})_{j,k=0}^{n-1}` by pivoted complex LU.
pub fn toeplitz_determinant(coeffs: &CircleSymbol, n: usize) -> Result<ToeplitzDet> {
    if n == 0 {
        return Err(Error::invalid("Toeplitz determinant needs n >= 1"));
    }
    if coeffs.k_max() + 1 < n {
        return Err(Error::invalid(format!(
            "need coefficients through |k| <= {} for D_{n}",
            n - 1
        )));
    }
    let m = CMat::from_fn(n, |j, k| coeffs.coeff(j as i64 - k as i64));
    let lu = lu_factor(&m);
    let det = lu.det();
    let condition = condition_estimate(&m, &lu);
    Ok(ToeplitzDet {
        value: det.re,
        condition,
        reliable: condition <= 1e12,
    })
}

/// Widom's asymptotic for a real Fisher-Hartwig symbol with centered `V`:
/// `e^{(1/2)||V||_H^2 - sum_j alpha_j V(z_j)} n^{sum alpha_j^2}
///  prod_{j<k} |z_j - z_k|^{-2 alpha_j alpha_k}
///  prod_j G(1+alpha_j)^2 / G(1+2 alpha_j)`.
pub fn widom_asymptotic(symbol: &FHSymbol, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("Widom asymptotic needs n >= 1"));
    }
    let mut log_val = 0.0;
    if let Some(v) = &symbol.smooth {
        if v.mean().norm() > 1e-10 {
            return Err(Error::invalid("smooth part must be centered (V_hat_0 = 0)"));
        }
        log_val += 0.5 * h_half_inner(v, v, 0.0);
        for &(angle, alpha) in &symbol.factors {
            log_val -= alpha * v.eval_series(angle);
        }
    }
    for (i, &(ai_angle, ai)) in symbol.factors.iter().enumerate() {
        log_val += ai * ai * libm::log(n as f64);
        log_val += fh_constant_log(2.0 * ai)?;
        for &(aj_angle, aj) in symbol.factors.iter().take(i) {
            let dist = 2.0 * libm::fabs(libm::sin(0.5 * (ai_angle - aj_angle)));
            if dist < 1e-8 {
                return Err(Error::invalid("coincident Fisher-Hartwig singularities"));
            }
            log_val -= 2.0 * ai * aj * libm::log(dist);
        }
    }
    Ok(libm::exp(log_val))
}

/// A space-time insertion: the pair `(A, B)` of the multi-time moment
/// formula. Singularities live at cylinder points `(t, theta)` with
/// exponents `gamma >= 0`; smooth insertions attach a symbol to a time.
#[derive(Debug, Clone)]
pub struct InsertionConfig {
    pub singularities: Vec<(f64, f64, f64)>,
    pub smooth: Vec<(f64, CircleSymbol)>,
}

/// Largest admissible singularity exponent (the theorem's fixed constant C).
pub const GAMMA_MAX: f64 = 4.0;

impl InsertionConfig {
    pub fn new(singularities: Vec<(f64, f64, f64)>, smooth: Vec<(f64, CircleSymbol)>) -> Result<Self> {
        for &(_, _, gamma) in &singularities {
            if !(0.0..=GAMMA_MAX).contains(&gamma) {
                return Err(Error::invalid(format!(
                    "singularity exponent must lie in [0, {GAMMA_MAX}]"
                )));
            }
        }
        for (i, &(ti, xi, _)) in singularities.iter().enumerate() {
            for &(tj, xj, _) in singularities.iter().take(i) {
                if cylinder_distance(ti, xi, tj, xj) < 1e-10 {
                    return Err(Error::invalid("coincident singular insertions"));
                }
            }
        }
        Ok(InsertionConfig {
            singularities,
            smooth,
        })
    }
}

/// `|e^{t+i x} - e^{s+i y}|`.
pub fn cylinder_distance(t: f64, x: f64, s: f64, y: f64) -> f64 {
    let a = Complex64::from_polar(libm::exp(t), x);
    let b = Complex64::from_polar(libm::exp(s), y);
    (a - b).norm()
}

/// The multi-time moment prediction
/// `E[ e^{sum_B Tr f_s(U_s)} prod_A |det(U_t - e^{i theta})|^{gamma} ]`:
/// smooth part, cross part, singular part and the ordered-pair interaction
/// (each unordered pair appears twice with exponent `gamma_z gamma_w / 4`).
pub fn multitime_fh_rhs(config: &InsertionConfig, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("prediction needs n >= 1"));
    }
    let mut log_val = 0.0;
    // Smooth: N sum mean(f) + (1/2) sum over ordered pairs (incl. diagonal).
    for (_, f) in &config.smooth {
        log_val += n as f64 * f.mean().re;
    }
    for (s, f) in &config.smooth {
        for (s2, f2) in &config.smooth {
            log_val += 0.5 * h_half_inner(f, f2, libm::fabs(s - s2));
        }
    }
    // Cross: -(gamma/2) (P_{|t-s|} - P_inf) f_s at the singular angle.
    for &(t, theta, gamma) in &config.singularities {
        for (s, f) in &config.smooth {
            let p = poisson_eval(f, libm::fabs(t - s), theta);
            log_val -= 0.5 * gamma * (p - f.mean().re);
        }
    }
    // Singular constants and ordered-pair interactions.
    for &(_, _, gamma) in &config.singularities {
        log_val += 0.25 * gamma * gamma * libm::log(n as f64);
        log_val += fh_constant_log(gamma)?;
    }
    for (i, &(ti, xi, gi)) in config.singularities.iter().enumerate() {
        for (j, &(tj, xj, gj)) in config.singularities.iter().enumerate() {
            if i == j {
                continue;
            }
            let num = libm::exp(ti.max(tj));
            let den = cylinder_distance(ti, xi, tj, xj);
            log_val += 0.25 * gi * gj * libm::log(num / den);
        }
    }
    Ok(libm::exp(log_val))
}

/// A tagged insertion for the limiting covariance functional.
#[derive(Debug, Clone)]
pub enum Insertion {
    /// `Tr f(U_t)`.
    Smooth { t: f64, f: CircleSymbol },
    /// `gamma log |det(U_t - e^{i x})|`.
    LogSingularity { t: f64, x: f64, gamma: f64 },
}

/// `P_t C(x) = -(1/2) log |1 - e^{-t} e^{i x}|`, the Poisson flow of the
/// circle Green function `C(x) = -(1/2) log |e^{i x} - 1|... ` (centered).
pub fn poisson_green(t: f64, x: f64) -> f64 {
    let z = Complex64::from_polar(libm::exp(-t), x);
    -0.5 * libm::log((Complex64::ONE - z).norm())
}

/// Limiting covariance `C(a, b)` of two insertions:
/// smooth/smooth `(f, P_{|t-s|} g)_H`, smooth/log
/// `-(gamma/2)(P_{|t-s|} - P_inf) f(e^{i x})`, log/log
/// `gamma_x gamma_y P_{|t-s|} C(x - y)`.
pub fn covariance_functional(a: &Insertion, b: &Insertion) -> Result<f64> {
    match (a, b) {
        (Insertion::Smooth { t, f }, Insertion::Smooth { t: s, f: g }) => {
            Ok(h_half_inner(f, g, libm::fabs(t - s)))
        }
        (Insertion::Smooth { t: s, f }, Insertion::LogSingularity { t, x, gamma })
        | (Insertion::LogSingularity { t, x, gamma }, Insertion::Smooth { t: s, f }) => {
            let p = poisson_eval(f, libm::fabs(t - s), *x);
            Ok(-0.5 * gamma * (p - f.mean().re))
        }
        (
            Insertion::LogSingularity { t, x, gamma },
            Insertion::LogSingularity {
                t: s,
                x: y,
                gamma: gamma2,
            },
        ) => {
            let dt = libm::fabs(t - s);
            let dist = 2.0 * libm::fabs(libm::sin(0.5 * (x - y)));
            if dt < 1e-14 && dist < 1e-14 {
                return Err(Error::invalid(
                    "log/log covariance diverges at coincident insertions",
                ));
            }
            Ok(gamma * gamma2 * poisson_green(dt, x - y))
        }
    }
}

/// Exact covariance of linear statistics at every `n` and `t >= 0`:
///
/// `Cov(sum f(z_k(0)), sum g(z_k(t))) =
/// sum_{1 <= |j| <= n-1} fhat_j ghat_{-j} sgn(j) e^{-|j| t}
/// sinh(j^2 t / n) / sinh(j t / n) +
/// sum_{|j| >= n} fhat_j ghat_{-j} e^{-j^2 t / n} sinh(j t) / sinh(j t / n)`,
///
/// with the `t = 0` sinh ratios taken by their analytic limits
/// (`j` and `n` respectively, giving `sum min(|j|, n) fhat_j ghat_{-j}`).
pub fn exact_linear_covariance(n: usize, t: f64, f: &CircleSymbol, g: &CircleSymbol) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("covariance needs n >= 1"));
    }
    if t < 0.0 {
        return Err(Error::invalid("time gap must be nonnegative"));
    }
    let nf = n as f64;
    let km = f.k_max().min(g.k_max()) as i64;
    let mut acc = Complex64::ZERO;
    for k in 1..=km {
        let kf = k as f64;
        let pair = f.coeff(k) * g.coeff(-k) + f.coeff(-k) * g.coeff(k);
        if pair.norm() == 0.0 {
            continue;
        }
        let weight = if (k as usize) < n {
            if t == 0.0 {
                kf
            } else {
                // e^{-k t} sinh(k^2 t / n) / sinh(k t / n), in log space.
                let a = kf * kf * t / nf;
                let b = kf * t / nf;
                libm::exp(-kf * t + a - b + libm::log1p(-libm::exp(-2.0 * a))
                    - libm::log1p(-libm::exp(-2.0 * b)))
            }
        } else if t == 0.0 {
            nf
        } else {
            // e^{-k^2 t / n} sinh(k t) / sinh(k t / n).
            let a = kf * t;
            let b = kf * t / nf;
            libm::exp(-kf * kf * t / nf + a - b + libm::log1p(-libm::exp(-2.0 * a))
                - libm::log1p(-libm::exp(-2.0 * b)))
        };
        acc += pair * weight;
    }
    Ok(acc.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{keating_snaith_moment, EULER_GAMMA};
    use crate::symbols::fourier_coefficients;
    use crate::TWO_PI;

    #[test]
    fn factor_coefficients_alpha_half() {
        // alpha = 1/2 (gamma = 1): c_0 = 4/pi and the quadrature oracle
        // agrees with the Gamma closed form.
        let sym = fh_factor_coefficients(0.5, 24).unwrap();
        assert!((sym.coeff(0).re - 4.0 / core::f64::consts::PI).abs() < 1e-12);
        // Quadrature oracle on the evaluator 2|sin(theta/2)|.
        let m = 1 << 15;
        for k in [0i64, 1, 2, 5, 11] {
            let mut acc = 0.0;
            for a in 0..m {
                let th = TWO_PI * a as f64 / m as f64;
                acc += 2.0 * libm::fabs(libm::sin(0.5 * th)) * libm::cos(k as f64 * th);
            }
            acc /= m as f64;
            assert!(
                (sym.coeff(k).re - acc).abs() < 1e-8,
                "k = {k}: {} vs {acc}",
                sym.coeff(k).re
            );
            // Even in k.
            assert_eq!(sym.coeff(k), sym.coeff(-k));
        }
        // alpha = 1 (gamma = 2): the banded symbol 2 - 2 cos(theta).
        let band = fh_factor_coefficients(1.0, 8).unwrap();
        assert!((band.coeff(0).re - 2.0).abs() < 1e-14);
        assert!((band.coeff(1).re + 1.0).abs() < 1e-14);
        assert!(band.coeff(2).norm() < 1e-14);
    }

    #[test]
    fn two_factor_symbol_matches_quadrature() {
        let symbol = FHSymbol::new(vec![(0.0, 0.3), (core::f64::consts::PI, 0.25)], None).unwrap();
        let sym = fh_symbol_coefficients(&symbol, 24).unwrap();
        let m = 1 << 18;
        for k in [0i64, 1, 3, 9] {
            let mut acc = 0.0;
            for a in 0..m {
                let th = TWO_PI * a as f64 / m as f64 + 0.5 * TWO_PI / m as f64;
                let d0 = 2.0 * libm::fabs(libm::sin(0.5 * th));
                let d1 = 2.0 * libm::fabs(libm::sin(0.5 * (th - core::f64::consts::PI)));
                acc += libm::pow(d0, 0.6) * libm::pow(d1, 0.5) * libm::cos(k as f64 * th);
            }
            acc /= m as f64;
            assert!(
                (sym.coeff(k).re - acc).abs() < 1e-8,
                "k = {k}: {} vs {acc}",
                sym.coeff(k).re
            );
        }
    }

    #[test]
    fn toeplitz_of_constant_one() {
        let one = CircleSymbol::constant(1.0);
        let d = toeplitz_determinant(&one, 1).unwrap();
        assert_eq!(d.value, 1.0);
        assert!(d.reliable);
    }

    #[test]
    fn heine_identity_toeplitz_equals_keating_snaith() {
        // D_n(|z - e^{i theta}|^{2 alpha}) = E |det(U - e^{i theta})|^{2 alpha}.
        for &gamma in &[0.5, 1.0, 1.5, 2.0] {
            for &n in &[4usize, 16, 32] {
                let sym = fh_factor_coefficients(gamma / 2.0, n).unwrap();
                let det = toeplitz_determinant(&sym, n).unwrap();
                let ks = keating_snaith_moment(n, gamma).unwrap();
                let rel = (det.value / ks - 1.0).abs();
                assert!(rel < 1e-8, "gamma={gamma} n={n}: rel {rel}");
            }
        }
    }

    #[test]
    fn strong_szego_for_exponential_symbol() {
        // f = e^{2 a cos theta}, a = 0.5: D_n -> e^{a^2}.
        let a = 0.5;
        let coeffs = fourier_coefficients(|t| libm::exp(2.0 * a * libm::cos(t)), 80, 512, &[])
            .unwrap();
        let d = toeplitz_determinant(&coeffs, 64).unwrap();
        let target = libm::exp(a * a);
        assert!(
            (d.value / target - 1.0).abs() <= 1e-6,
            "D_64 = {} vs {target}",
            d.value
        );
    }

    #[test]
    fn widom_static_cases() {
        // m = 0, V = 2 a cos: e^{a^2}.
        let a = 0.4;
        let v = CircleSymbol::cosine().scaled(2.0 * a);
        let sym = FHSymbol::new(vec![], Some(v)).unwrap();
        let w = widom_asymptotic(&sym, 16).unwrap();
        assert!((w - libm::exp(a * a)).abs() < 1e-12);

        // m = 2, alpha = 1/4 at angle gap pi: the pair product contributes
        // |z_1 - z_2|^{-2 alpha^2} = 2^{-1/8}.
        let two = FHSymbol::new(vec![(0.0, 0.25), (core::f64::consts::PI, 0.25)], None).unwrap();
        let w2 = widom_asymptotic(&two, 32).unwrap();
        let single = libm::exp(fh_constant_log(0.5).unwrap());
        let expect = libm::pow(32.0, 2.0 * 0.25 * 0.25) * single * single
            * libm::pow(2.0, -2.0 * 0.25 * 0.25);
        assert!((w2 / expect - 1.0).abs() < 1e-12);

        // Coincident singularities rejected; uncentered V rejected.
        assert!(widom_asymptotic(
            &FHSymbol::new(vec![(1.0, 0.25), (1.0, 0.25)], None).unwrap(),
            8
        )
        .is_err());
        let bad_v = CircleSymbol::constant(0.3);
        assert!(
            widom_asymptotic(&FHSymbol::new(vec![], Some(bad_v)).unwrap(), 8).is_err()
        );
    }

    #[test]
    fn widom_ratio_improves_with_n() {
        // m = 1, V = 0: D_n / prediction -> 1 monotonically over {16, 32, 64}.
        let alpha = 0.25;
        let mut errs = Vec::new();
        for &n in &[16usize, 32, 64] {
            let sym = fh_factor_coefficients(alpha, n).unwrap();
            let det = toeplitz_determinant(&sym, n).unwrap();
            let pred =
                widom_asymptotic(&FHSymbol::new(vec![(0.0, alpha)], None).unwrap(), n).unwrap();
            errs.push((det.value / pred - 1.0).abs());
        }
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
    }

    #[test]
    fn multitime_reduces_to_single_singularity() {
        let config = InsertionConfig::new(vec![(0.0, 1.0, 1.3)], vec![]).unwrap();
        let got = multitime_fh_rhs(&config, 24).unwrap();
        let expect = libm::pow(24.0, 1.3 * 1.3 / 4.0) * libm::exp(fh_constant_log(1.3).unwrap());
        assert!((got / expect - 1.0).abs() < 1e-13);
    }

    #[test]
    fn multitime_equal_times_reduces_to_widom() {
        // Two same-time singularities with gamma = 2 alpha and a centered
        // smooth part must reproduce the static Widom expression exactly.
        let (a1, a2) = (0.3, 0.45);
        let (x1, x2) = (0.7, 2.9);
        let t = 0.4;
        let v = CircleSymbol::harmonic(1, 0.5, 0.0).add(&CircleSymbol::harmonic(2, 0.0, -0.2));
        let config = InsertionConfig::new(
            vec![(t, x1, 2.0 * a1), (t, x2, 2.0 * a2)],
            vec![(t, v.clone())],
        )
        .unwrap();
        let got = multitime_fh_rhs(&config, 32).unwrap();
        let widom = widom_asymptotic(
            &FHSymbol::new(vec![(x1, a1), (x2, a2)], Some(v)).unwrap(),
            32,
        )
        .unwrap();
        assert!((got / widom - 1.0).abs() < 1e-12, "{got} vs {widom}");
    }

    #[test]
    fn multitime_matches_one_singularity_one_smooth_display() {
        // A = {(t, x, gamma)}, B = {(0, f)}:
        // N^{gamma^2/4} (G-const) e^{C(f_0, L_t^x)} e^{N mean(f) + C(f_0)/2}.
        let gamma = 1.1;
        let t = 0.6;
        let x = 1.9;
        let f = CircleSymbol::cosine().scaled(0.4);
        let n = 24;
        let config =
            InsertionConfig::new(vec![(t, x, gamma)], vec![(0.0, f.clone())]).unwrap();
        let got = multitime_fh_rhs(&config, n).unwrap();
        let cross = covariance_functional(
            &Insertion::Smooth { t: 0.0, f: f.clone() },
            &Insertion::LogSingularity { t, x, gamma },
        )
        .unwrap();
        let expect = libm::pow(n as f64, gamma * gamma / 4.0)
            * libm::exp(fh_constant_log(gamma).unwrap())
            * libm::exp(cross)
            * libm::exp(0.5 * h_half_inner(&f, &f, 0.0));
        assert!((got / expect - 1.0).abs() < 1e-12);
    }

    #[test]
    fn covariance_functional_closed_forms() {
        // smooth cos vs log at angle 0, gap Delta: -gamma e^{-Delta}/2.
        let gamma = 0.8;
        let delta = 0.35;
        let c = covariance_functional(
            &Insertion::Smooth {
                t: 0.0,
                f: CircleSymbol::cosine(),
            },
            &Insertion::LogSingularity {
                t: delta,
                x: 0.0,
                gamma,
            },
        )
        .unwrap();
        assert!((c + 0.5 * gamma * libm::exp(-delta)).abs() < 1e-13);

        // log/log same time at gap pi: gamma_x gamma_y (-log 2 / 2).
        let ll = covariance_functional(
            &Insertion::LogSingularity {
                t: 0.0,
                x: 0.0,
                gamma: 1.2,
            },
            &Insertion::LogSingularity {
                t: 0.0,
                x: core::f64::consts::PI,
                gamma: 0.9,
            },
        )
        .unwrap();
        assert!((ll - 1.2 * 0.9 * (-0.5) * core::f64::consts::LN_2).abs() < 1e-13);

        // Any pair decorrelates at large gaps.
        let far = covariance_functional(
            &Insertion::LogSingularity {
                t: 0.0,
                x: 1.0,
                gamma: 1.0,
            },
            &Insertion::LogSingularity {
                t: 60.0,
                x: 1.0,
                gamma: 1.0,
            },
        )
        .unwrap();
        assert!(far.abs() < 1e-13);

        // Symmetry across tag combinations.
        let a = Insertion::Smooth {
            t: 0.2,
            f: CircleSymbol::harmonic(2, 0.3, 0.7),
        };
        let b = Insertion::LogSingularity {
            t: 0.9,
            x: 2.2,
            gamma: 1.4,
        };
        assert!(
            (covariance_functional(&a, &b).unwrap() - covariance_functional(&b, &a).unwrap())
                .abs()
                < 1e-13
        );

        // Coincident log/log rejected.
        assert!(covariance_functional(
            &Insertion::LogSingularity {
                t: 0.0,
                x: 1.0,
                gamma: 1.0
            },
            &Insertion::LogSingularity {
                t: 0.0,
                x: 1.0,
                gamma: 1.0
            },
        )
        .is_err());
    }

    #[test]
    fn poisson_green_values() {
        // C(pi) = -log(2)/2 at t = 0; equal angles at gap tau:
        // -(1/2) log(1 - e^{-tau}).
        assert!((poisson_green(0.0, core::f64::consts::PI) + 0.5 * core::f64::consts::LN_2).abs()
            < 1e-14);
        let tau = 0.8;
        assert!(
            (poisson_green(tau, 0.0) + 0.5 * libm::log1p(-libm::exp(-tau))).abs() < 1e-14
        );
    }

    #[test]
    fn exact_covariance_closed_forms() {
        let c = CircleSymbol::cosine();
        // f = g = cos, t > 0: e^{-t}/2.
        for &t in &[0.1, 0.5, 2.0] {
            let v = exact_linear_covariance(16, t, &c, &c).unwrap();
            assert!((v - 0.5 * libm::exp(-t)).abs() < 1e-13, "t = {t}");
        }
        // t = 0: 1/2 for n >= 2.
        assert!((exact_linear_covariance(16, 0.0, &c, &c).unwrap() - 0.5).abs() < 1e-15);
        // f = g = cos(n theta): both modes in the high-frequency branch.
        let n = 6;
        let cn = CircleSymbol::harmonic(n, 1.0, 0.0);
        let t = 0.3;
        let got = exact_linear_covariance(n, t, &cn, &cn).unwrap();
        let nf = n as f64;
        let expect = 0.5 * libm::exp(-nf * t) * libm::sinh(nf * t) / libm::sinh(t);
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
    }

    #[test]
    fn exact_covariance_t_zero_is_min_rule() {
        // At t = 0 the formula collapses to sum min(|j|, n) f_j g_{-j}; the
        // field variance helper is the same rule applied to the log kernel.
        let n = 12;
        let k_max = 30_000;
        let f = CircleSymbol::log_singularity(0.0, k_max);
        let v = exact_linear_covariance(n, 0.0, &f, &f).unwrap();
        let direct = crate::field::equilibrium_field_variance(n);
        // Truncation leaves a deficit of about n / (2 k_max).
        let deficit = n as f64 / (2.0 * k_max as f64);
        assert!((v - direct).abs() < 2.0 * deficit, "{v} vs {direct}");
        let _ = EULER_GAMMA;
    }
}
