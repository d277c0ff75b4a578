//! Functions on the unit circle carried as Fourier coefficients
//! (`f_hat_k = (1/2pi) \int f(e^{i theta}) e^{-ik theta} d theta`), plus the
//! H^{1/2} pairing, the Poisson semigroup and the loop-equation prediction
//! for biased expectations.

use alloc::sync::Arc;
use alloc::{vec, vec::Vec};
use num_complex::Complex64;

use crate::error::Error;
use crate::quadrature::periodic_grid;
use crate::{Result, TWO_PI};

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real or complex function on the circle: coefficients for `|k| <= k_max`,
/// an optional closed-form evaluator, and markers for known singularities.
#[derive(Clone)]
pub struct CircleSymbol {
    k_max: usize,
    /// index i holds the coefficient of `e^{ik theta}` with `k = i - k_max`.
    coeffs: Vec<Complex64>,
    evaluator: Option<Evaluator>,
    /// `(angle, exponent)` markers; non-empty means quadrature is unreliable.
    singularities: Vec<(f64, f64)>,
}

impl core::fmt::Debug for CircleSymbol {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("CircleSymbol")
            .field("k_max", &self.k_max)
            .field("has_evaluator", &self.evaluator.is_some())
            .field("singularities", &self.singularities)
            .finish()
    }
}

impl CircleSymbol {
    pub fn from_coeffs(k_max: usize, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), 2 * k_max + 1);
        CircleSymbol {
            k_max,
            coeffs,
            evaluator: None,
            singularities: Vec::new(),
        }
    }

    pub fn zero(k_max: usize) -> Self {
        Self::from_coeffs(k_max, vec![Complex64::ZERO; 2 * k_max + 1])
    }

    pub fn constant(c: f64) -> Self {
        let mut s = Self::zero(0);
        s.set_coeff(0, Complex64::new(c, 0.0));
        s
    }

    /// `a cos(k theta) + b sin(k theta)`.
    pub fn harmonic(k: usize, a: f64, b: f64) -> Self {
        assert!(k >= 1);
        let mut s = Self::zero(k);
        s.set_coeff(k as i64, Complex64::new(a / 2.0, -b / 2.0));
        s.set_coeff(-(k as i64), Complex64::new(a / 2.0, b / 2.0));
        s
    }

    pub fn cosine() -> Self {
        Self::harmonic(1, 1.0, 0.0)
    }

    pub fn sine() -> Self {
        Self::harmonic(1, 0.0, 1.0)
    }

    /// `log|e^{i theta} - e^{i x}|`, carried analytically:
    /// coefficients `-e^{-ikx} / (2|k|)`, zero mean, marked singular at `x`.
    pub fn log_singularity(x: f64, k_max: usize) -> Self {
        let mut s = Self::zero(k_max);
        for k in 1..=k_max as i64 {
            let phase = Complex64::from_polar(1.0, -k as f64 * x);
            s.set_coeff(k, -phase / (2.0 * k as f64));
            s.set_coeff(-k, -phase.conj() / (2.0 * k as f64));
        }
        s.evaluator = Some(Arc::new(move |theta: f64| {
            libm::log(2.0 * libm::fabs(libm::sin(0.5 * (theta - x))))
        }));
        s.singularities.push((x, 0.0));
        s
    }

    pub fn with_evaluator(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.evaluator = Some(Arc::new(f));
        self
    }

    pub fn with_singularity(mut self, angle: f64, exponent: f64) -> Self {
        self.singularities.push((angle, exponent));
        self
    }

    #[inline]
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn singularities(&self) -> &[(f64, f64)] {
        &self.singularities
    }

    pub fn has_evaluator(&self) -> bool {
        self.evaluator.is_some()
    }

    #[inline]
    pub fn coeff(&self, k: i64) -> Complex64 {
        let km = self.k_max as i64;
        if k < -km || k > km {
            Complex64::ZERO
        } else {
            self.coeffs[(k + km) as usize]
        }
    }

    pub fn set_coeff(&mut self, k: i64, value: Complex64) {
        let km = self.k_max as i64;
        assert!(k >= -km && k <= km);
        self.coeffs[(k + km) as usize] = value;
    }

    /// Iterate `(k, f_hat_k)` over the stored range.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let km = self.k_max as i64;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| (i as i64 - km, *c))
    }

    /// Value at `theta`: closed form if present, else the Fourier sum.
    pub fn eval(&self, theta: f64) -> f64 {
        if let Some(f) = &self.evaluator {
            return f(theta);
        }
        self.eval_series(theta)
    }

    /// Fourier-sum value (real part; symbols here are real).
    pub fn eval_series(&self, theta: f64) -> f64 {
        let mut acc = self.coeff(0).re;
        let rot = Complex64::from_polar(1.0, theta);
        let mut e = Complex64::ONE;
        for k in 1..=self.k_max as i64 {
            e *= rot;
            acc += 2.0 * (self.coeff(k) * e).re;
        }
        acc
    }

    /// Mean over the circle (`f_hat_0`).
    pub fn mean(&self) -> Complex64 {
        self.coeff(0)
    }

    /// `||f||_H^2 = sum |k| |f_hat_k|^2` at the stored truncation.
    pub fn h_norm_sq(&self) -> f64 {
        self.iter()
            .map(|(k, c)| k.unsigned_abs() as f64 * c.norm_sqr())
            .sum()
    }

    /// Largest deviation from the real-symbol constraint
    /// `f_hat_{-k} = conj(f_hat_k)`.
    pub fn reality_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for k in 0..=self.k_max as i64 {
            worst = worst.max((self.coeff(-k) - self.coeff(k).conj()).norm());
        }
        worst
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut s = self.clone();
        for c in &mut s.coeffs {
            *c *= a;
        }
        if let Some(f) = self.evaluator.clone() {
            s.evaluator = Some(Arc::new(move |theta| a * f(theta)));
        }
        s
    }

    pub fn add(&self, other: &Self) -> Self {
        let k_max = self.k_max.max(other.k_max);
        let mut s = Self::zero(k_max);
        for k in -(k_max as i64)..=k_max as i64 {
            s.set_coeff(k, self.coeff(k) + other.coeff(k));
        }
        s.singularities = self
            .singularities
            .iter()
            .chain(&other.singularities)
            .copied()
            .collect();
        s
    }
}

/// Fourier coefficients of a smooth evaluator by the periodic trapezoid rule.
///
/// Marked-singular symbols are refused: their coefficients must come from a
/// closed form (see [`CircleSymbol::log_singularity`] and
/// [`crate::fh::fh_symbol_coefficients`]).
pub fn fourier_coefficients(
    f: impl Fn(f64) -> f64,
    k_max: usize,
    quadrature_points: usize,
    singularities: &[(f64, f64)],
) -> Result<CircleSymbol> {
    if !singularities.is_empty() {
        return Err(Error::invalid(
            "quadrature on a marked-singular symbol; use the analytic coefficient path",
        ));
    }
    if quadrature_points < 4 * k_max.max(1) {
        return Err(Error::invalid("need quadrature_points >= 4 k_max"));
    }
    let grid = periodic_grid(quadrature_points);
    let values: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    let m = quadrature_points as f64;
    let mut sym = CircleSymbol::zero(k_max);
    for k in -(k_max as i64)..=k_max as i64 {
        let mut acc = Complex64::ZERO;
        for (a, &v) in values.iter().enumerate() {
            let angle = -k as f64 * TWO_PI * a as f64 / m;
            acc += Complex64::from_polar(v, angle);
        }
        sym.set_coeff(k, acc / m);
    }
    Ok(sym)
}

/// `(f, P_t g)_H = sum_k |k| f_hat_k g_hat_{-k} e^{-|k| t}`.
///
/// Real for real symbols; the real part is returned.
pub fn h_half_inner(f: &CircleSymbol, g: &CircleSymbol, t: f64) -> f64 {
    assert!(t >= 0.0, "time gap must be nonnegative");
    let km = f.k_max().min(g.k_max()) as i64;
    let mut acc = Complex64::ZERO;
    for k in 1..=km {
        let kf = k as f64;
        let decay = libm::exp(-kf * t);
        acc += kf * decay * (f.coeff(k) * g.coeff(-k) + f.coeff(-k) * g.coeff(k));
    }
    acc.re
}

/// Poisson semigroup on coefficients: `f_hat_k -> f_hat_k e^{-|k| t}`.
pub fn poisson_smooth(f: &CircleSymbol, t: f64) -> CircleSymbol {
    assert!(t >= 0.0, "smoothing time must be nonnegative");
    let mut s = CircleSymbol::zero(f.k_max());
    for (k, c) in f.iter() {
        s.set_coeff(k, c * libm::exp(-(k.unsigned_abs() as f64) * t));
    }
    s.singularities = if t == 0.0 {
        f.singularities.clone()
    } else {
        Vec::new()
    };
    s
}

/// Poisson evaluation `P_t f(e^{i theta}) = sum_k f_hat_k e^{-|k|t} e^{ik theta}`.
pub fn poisson_eval(f: &CircleSymbol, t: f64, theta: f64) -> f64 {
    let mut acc = f.coeff(0).re;
    for k in 1..=f.k_max() as i64 {
        let decay = libm::exp(-(k as f64) * t);
        let e = Complex64::from_polar(1.0, k as f64 * theta);
        acc += 2.0 * decay * (f.coeff(k) * e).re;
    }
    acc
}

/// Product of two symbols by coefficient convolution at truncation `k_max`.
///
/// The discarded-tail contribution is estimated by re-running the
/// convolution with the inputs clipped to half their stored range (when the
/// clip still covers the output band, so band-limited products estimate
/// zero loss); a loss above 1e-8 is an error (raise the input `k_max`).
pub fn convolve(f: &CircleSymbol, g: &CircleSymbol, k_max: usize) -> Result<CircleSymbol> {
    let full = convolve_raw(f, g, k_max, usize::MAX);
    let clip = (f.k_max().max(g.k_max()) / 2).max(k_max);
    let halved = convolve_raw(f, g, k_max, clip);
    let mut loss = 0.0_f64;
    for k in -(k_max as i64)..=k_max as i64 {
        loss = loss.max((full.coeff(k) - halved.coeff(k)).norm());
    }
    if loss > 1e-8 {
        return Err(Error::Numerical(alloc::format!(
            "convolution truncation loss {loss:.2e} > 1e-8; raise k_max"
        )));
    }
    Ok(full)
}

fn convolve_raw(f: &CircleSymbol, g: &CircleSymbol, k_max: usize, clip: usize) -> CircleSymbol {
    let fa = f.k_max().min(clip) as i64;
    let ga = g.k_max().min(clip) as i64;
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

/// The biasing family `{(t_j, f_j)}` defining the reweighted law
/// `dP_f / dP ~ exp(sum_j Tr f_j(U_{t_j}))`.
#[derive(Debug, Clone)]
pub struct BiasSpec {
    pub insertions: Vec<(f64, CircleSymbol)>,
}

impl BiasSpec {
    pub fn new(insertions: Vec<(f64, CircleSymbol)>) -> Result<Self> {
        for (_, f) in &insertions {
            if !f.h_norm_sq().is_finite() {
                return Err(Error::invalid("bias symbol has infinite H^{1/2} norm"));
            }
        }
        Ok(BiasSpec { insertions })
    }

    pub fn empty() -> Self {
        BiasSpec {
            insertions: Vec::new(),
        }
    }

    /// `sum_j Tr f_j(U_{t_j})` evaluated on eigenangle slices supplied by the
    /// caller as `(t_j, angles)` in the same order as `insertions`.
    pub fn log_weight(&self, slices: &[&[f64]]) -> f64 {
        assert_eq!(slices.len(), self.insertions.len());
        let mut acc = 0.0;
        for ((_, f), angles) in self.insertions.iter().zip(slices) {
            for &a in *angles {
                acc += f.eval(a);
            }
        }
        acc
    }
}

/// Predicted centered mean of `Tr h(U_r)` under the biased law:
/// `sum_j sum_k e^{-|k||t_j - r|} |k| (f_j)_hat_{-k} h_hat_k`.
pub fn loop_equation_rhs(bias: &BiasSpec, h: &CircleSymbol, r: f64) -> f64 {
    let mut acc = 0.0;
    for (t_j, f_j) in &bias.insertions {
        acc += h_half_inner(f_j, h, libm::fabs(t_j - r));
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_coefficients() {
        let f = fourier_coefficients(libm::cos, 4, 32, &[]).unwrap();
        assert!((f.coeff(1) - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        assert!((f.coeff(-1) - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        for k in [-4i64, -3, -2, 0, 2, 3, 4] {
            assert!(f.coeff(k).norm() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn log_singularity_uses_analytic_path() {
        let sing = [(0.0, 0.0)];
        let err = fourier_coefficients(|t| libm::log(2.0 * libm::fabs(libm::sin(t / 2.0))), 8, 64, &sing);
        assert!(err.is_err());
        let f = CircleSymbol::log_singularity(0.0, 16);
        assert!(f.coeff(0).norm() < 1e-15);
        for k in 1..=16i64 {
            let expect = -1.0 / (2.0 * k as f64);
            assert!((f.coeff(k).re - expect).abs() < 1e-15);
            assert!(f.coeff(k).im.abs() < 1e-15);
        }
    }

    #[test]
    fn smooth_coefficients_self_converge() {
        // exp(cos): compare k_max-resolution quadrature against double.
        let f = fourier_coefficients(|t| libm::exp(libm::cos(t)), 12, 64, &[]).unwrap();
        let g = fourier_coefficients(|t| libm::exp(libm::cos(t)), 12, 128, &[]).unwrap();
        for k in -12i64..=12 {
            let ratio_f = f.coeff(k).re / f.coeff(0).re;
            let ratio_g = g.coeff(k).re / g.coeff(0).re;
            assert!((ratio_f - ratio_g).abs() < 1e-10, "k = {k}");
        }
    }

    #[test]
    fn h_half_pairings() {
        let c = CircleSymbol::cosine();
        let s = CircleSymbol::sine();
        assert!((h_half_inner(&c, &c, 0.0) - 0.5).abs() < 1e-15);
        assert!(h_half_inner(&c, &c, 200.0).abs() < 1e-15);
        for t in [0.0, 0.3, 2.0] {
            assert!(h_half_inner(&c, &s, t).abs() < 1e-15);
        }
        // Symmetry for real symbols.
        let f = CircleSymbol::harmonic(2, 0.7, 0.1);
        let g = CircleSymbol::harmonic(2, -0.4, 0.9);
        assert!((h_half_inner(&f, &g, 0.2) - h_half_inner(&g, &f, 0.2)).abs() < 1e-15);
    }

    #[test]
    fn poisson_semigroup() {
        let c = CircleSymbol::cosine();
        let once = poisson_smooth(&poisson_smooth(&c, 0.4), 0.35);
        let direct = poisson_smooth(&c, 0.75);
        for k in -1i64..=1 {
            assert!((once.coeff(k) - direct.coeff(k)).norm() < 1e-15);
        }
        // t = 0 is the identity and constants are invariant.
        let id = poisson_smooth(&c, 0.0);
        assert!((id.coeff(1) - c.coeff(1)).norm() < 1e-16);
        let k0 = CircleSymbol::constant(3.25);
        assert!((poisson_smooth(&k0, 5.0).coeff(0).re - 3.25).abs() < 1e-16);
        // Single-mode action: cos -> e^{-t} cos.
        let sm = poisson_smooth(&c, 1.3);
        assert!((sm.coeff(1).re - 0.5 * libm::exp(-1.3)).abs() < 1e-15);
    }

    #[test]
    fn parseval_round_trip() {
        // Smooth symbol: H-norm from coefficients equals the recomputed one
        // after a round trip through the evaluator.
        let f = fourier_coefficients(|t| libm::exp(libm::cos(t)) - 1.2661, 16, 128, &[]).unwrap();
        let h1 = f.h_norm_sq();
        let back = fourier_coefficients(|t| f.eval_series(t), 16, 128, &[]).unwrap();
        let h2 = back.h_norm_sq();
        assert!((h1 - h2).abs() < 1e-8, "{h1} vs {h2}");
    }

    #[test]
    fn loop_equation_closed_forms() {
        let h = CircleSymbol::cosine();
        assert_eq!(loop_equation_rhs(&BiasSpec::empty(), &h, 1.0), 0.0);
        // f = 2a cos at t1, h = cos: a e^{-|t1 - r|}.
        let a = 0.35;
        let bias = BiasSpec::new(vec![(0.2, CircleSymbol::cosine().scaled(2.0 * a))]).unwrap();
        let got = loop_equation_rhs(&bias, &h, 0.9);
        assert!((got - a * libm::exp(-0.7)).abs() < 1e-14);
        // Odd pairing vanishes.
        let got_sin = loop_equation_rhs(&bias, &CircleSymbol::sine(), 0.9);
        assert!(got_sin.abs() < 1e-15);
    }

    #[test]
    fn convolution_of_band_limited_symbols_is_exact() {
        // (2 cos)^2 = 2 + 2 cos(2 theta) -> coefficients 2, 1 at |k| = 2.
        let f = CircleSymbol::cosine().scaled(2.0);
        let g = convolve(&f, &f, 4).unwrap();
        assert!((g.coeff(0).re - 2.0).abs() < 1e-14);
        assert!((g.coeff(2).re - 1.0).abs() < 1e-14);
        assert!(g.coeff(1).norm() < 1e-14);
    }

    #[test]
    fn reality_and_eval() {
        let f = CircleSymbol::harmonic(3, 1.5, -0.25);
        assert!(f.reality_defect() < 1e-16);
        let theta = 0.77;
        let expect = 1.5 * libm::cos(3.0 * theta) - 0.25 * libm::sin(3.0 * theta);
        assert!((f.eval(theta) - expect).abs() < 1e-14);
    }
}
