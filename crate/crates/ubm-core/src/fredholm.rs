//! Multiplicative statistics of the multi-time eigenvalue process as
//! Fredholm determinants: `E prod_j prod_i (1 + g_j(z_i(t_j)))
//! = det(Id + G K)` discretized by Nystrom quadrature on the circle copies,
//! plus the truncated-singularity symbols and the decoupling-ratio
//! experiment built on top.

use alloc::{format, vec, vec::Vec};
use num_complex::Complex64;

use crate::error::Error;
use crate::kernels::ExtendedKernel;
use crate::quadrature::gauss_legendre;
use crate::symbols::CircleSymbol;
use crate::{Result, TWO_PI};

/// Fixed C^2 bump: 1 on [0, 1], quintic-smoothstep descent to 0 on [1, 2].
pub fn bump_chi(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let u = r - 1.0;
        1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
    }
}

/// The truncated singularity of the decoupling experiment:
/// `f(z) = |z - E|^gamma chi(|z - E| / theta) + (2 theta)^gamma
/// (1 - chi(...))` with `theta = lambda / n`.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedSingularity {
    pub angle: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub n: usize,
}

impl TruncatedSingularity {
    pub fn theta_scale(&self) -> f64 {
        self.lambda / self.n as f64
    }

    /// Chordal distance from `e^{i phi}` to `e^{i angle}`.
    #[inline]
    fn chord(&self, phi: f64) -> f64 {
        2.0 * libm::fabs(libm::sin(0.5 * (phi - self.angle)))
    }

    /// The raw symbol value.
    pub fn value(&self, phi: f64) -> f64 {
        let r = self.chord(phi);
        let th = self.theta_scale();
        let c = bump_chi(r / th);
        libm::pow(r, self.gamma) * c + libm::pow(2.0 * th, self.gamma) * (1.0 - c)
    }

    /// Far-field constant `(2 theta)^gamma`.
    pub fn far_field(&self) -> f64 {
        libm::pow(2.0 * self.theta_scale(), self.gamma)
    }

    /// `value / far_field`, which equals 1 outside the support arc.
    pub fn normalized(&self, phi: f64) -> f64 {
        self.value(phi) / self.far_field()
    }

    /// Angular half-width of the region where the symbol deviates from its
    /// far field (chordal radius `2 theta`).
    pub fn support_halfwidth(&self) -> f64 {
        let r = (self.theta_scale()).min(0.999);
        2.0 * libm::asin(r)
    }

    /// Angular radius of the pure-power region (chordal radius `theta`).
    fn inner_halfwidth(&self) -> f64 {
        let r = (0.5 * self.theta_scale()).min(0.999);
        2.0 * libm::asin(r)
    }
}

/// Symbol form of the truncated singularity: evaluator plus high-resolution
/// coefficients (fine-grid quadrature; the function is bounded, so the
/// trapezoid error is algebraically small).
pub fn truncated_singularity_symbol(
    angle: f64,
    gamma: f64,
    lambda: f64,
    n: usize,
    k_max: usize,
) -> Result<CircleSymbol> {
    if lambda < 1.0 {
        return Err(Error::invalid("lambda must be >= 1"));
    }
    if n == 0 || gamma < 0.0 {
        return Err(Error::invalid("need n >= 1 and gamma >= 0"));
    }
    let ts = TruncatedSingularity {
        angle,
        gamma,
        lambda,
        n,
    };
    let m = (16 * (k_max + 1)).max(1 << 14);
    let mut sym = CircleSymbol::zero(k_max);
    let values: Vec<f64> = (0..m)
        .map(|a| ts.value(TWO_PI * a as f64 / m as f64))
        .collect();
    for k in -(k_max as i64)..=k_max as i64 {
        let mut acc = Complex64::ZERO;
        for (a, &v) in values.iter().enumerate() {
            acc += Complex64::from_polar(v, -k as f64 * TWO_PI * a as f64 / m as f64);
        }
        sym.set_coeff(k, acc / m as f64);
    }
    Ok(sym
        .with_evaluator(move |phi| ts.value(phi))
        .with_singularity(angle, gamma))
}

/// One multiplicative test attached to a time copy of the circle.
#[derive(Clone)]
pub enum TestFunction {
    /// Smooth symbol; quadrature is the periodic trapezoid over the circle.
    Smooth(CircleSymbol),
    /// `value` on the arc `[lo, hi]`, zero elsewhere.
    ArcIndicator { lo: f64, hi: f64, value: f64 },
    /// Bounded evaluator, smooth away from the listed kink angles; the
    /// quadrature grades panels into each kink.
    PiecewiseSmooth {
        eval: alloc::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        breakpoints: Vec<f64>,
    },
    /// `normalized(ts) - 1`: supported on the singularity's arc.
    NormalizedSingularity(TruncatedSingularity),
    /// Product `prod_i normalized(ts_i) - 1` for same-time singularities.
    NormalizedSingularityProduct(Vec<TruncatedSingularity>),
}

impl core::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TestFunction::Smooth(_) => f.write_str("Smooth"),
            TestFunction::ArcIndicator { lo, hi, value } => {
                write!(f, "Arc[{lo}, {hi}] = {value}")
            }
            TestFunction::PiecewiseSmooth { breakpoints, .. } => {
                write!(f, "PiecewiseSmooth ({} kinks)", breakpoints.len())
            }
            TestFunction::NormalizedSingularity(ts) => write!(f, "Singularity @ {}", ts.angle),
            TestFunction::NormalizedSingularityProduct(v) => {
                write!(f, "SingularityProduct ({})", v.len())
            }
        }
    }
}

impl TestFunction {
    /// Value of the multiplicative test `g` at angle `phi`.
    pub fn eval(&self, phi: f64) -> f64 {
        match self {
            TestFunction::Smooth(s) => s.eval_series(phi),
            TestFunction::ArcIndicator { lo, hi, value } => {
                let w = crate::dyson::wrap_angle(phi);
                // Arcs are given with lo <= hi in [0, 2 pi + (hi - lo)).
                if (w >= *lo && w <= *hi) || (w + TWO_PI >= *lo && w + TWO_PI <= *hi) {
                    *value
                } else {
                    0.0
                }
            }
            TestFunction::PiecewiseSmooth { eval, .. } => eval(phi),
            TestFunction::NormalizedSingularity(ts) => ts.normalized(phi) - 1.0,
            TestFunction::NormalizedSingularityProduct(v) => {
                v.iter().map(|ts| ts.normalized(phi)).product::<f64>() - 1.0
            }
        }
    }
}

/// Quadrature nodes supporting one test function.
fn nodes_for(test: &TestFunction, n: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    match test {
        TestFunction::Smooth(_) => {
            let w = TWO_PI / m as f64;
            ((0..m).map(|a| w * a as f64).collect(), vec![w; m])
        }
        TestFunction::ArcIndicator { lo, hi, .. } => gl_panel_nodes(*lo, *hi, n, &[]),
        TestFunction::PiecewiseSmooth { breakpoints, .. } => {
            // Full circle starting at the first kink, dyadically graded into
            // every kink from both sides.
            let mut kinks: Vec<f64> = breakpoints
                .iter()
                .map(|&b| crate::dyson::wrap_angle(b))
                .collect();
            kinks.sort_by(|a, b| a.partial_cmp(b).unwrap());
            kinks.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
            if kinks.is_empty() {
                kinks.push(0.0);
            }
            let base = kinks[0];
            let mut xs = Vec::new();
            let mut ws = Vec::new();
            for i in 0..kinks.len() {
                let a = kinks[i];
                let b = if i + 1 == kinks.len() {
                    base + TWO_PI
                } else {
                    kinks[i + 1]
                };
                let mid = 0.5 * (a + b);
                let mut edges = vec![a + (b - a) * 1e-10];
                for lvl in (1..=16).rev() {
                    edges.push(a + (mid - a) * libm::exp2(-(lvl as f64)));
                }
                edges.push(mid);
                for lvl in 1..=16 {
                    edges.push(b - (b - mid) * libm::exp2(-(lvl as f64)));
                }
                edges.push(b - (b - a) * 1e-10);
                for pair in edges.windows(2) {
                    if pair[1] - pair[0] < 1e-14 {
                        continue;
                    }
                    let (x, w) = gl_panel_nodes(pair[0], pair[1], n, &[]);
                    xs.extend(x);
                    ws.extend(w);
                }
            }
            (xs, ws)
        }
        TestFunction::NormalizedSingularity(ts) => singularity_nodes(core::slice::from_ref(ts), n),
        TestFunction::NormalizedSingularityProduct(v) => singularity_nodes(v, n),
    }
}

/// Gauss-Legendre panels on `[lo, hi]` resolving the kernel oscillation
/// (wavelength `2 pi / n`), with extra breakpoints honored exactly.
fn gl_panel_nodes(lo: f64, hi: f64, n: usize, breaks: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (gl_x, gl_w) = gauss_legendre(12);
    let mut edges = vec![lo];
    for &b in breaks {
        if b > lo + 1e-14 && b < hi - 1e-14 {
            edges.push(b);
        }
    }
    edges.push(hi);
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    let max_panel = 0.8 * TWO_PI / n as f64;
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let panels = (((b - a) / max_panel) as usize + 1).max(1);
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            for (x, w) in gl_x.iter().zip(&gl_w) {
                xs.push(mid + 0.5 * h * x);
                ws.push(0.5 * h * w);
            }
        }
    }
    (xs, ws)
}

/// Nodes covering the union of singularity supports, geometrically graded
/// into each center (the symbol has a |.|^gamma kink there).
fn singularity_nodes(sings: &[TruncatedSingularity], n: usize) -> (Vec<f64>, Vec<f64>) {
    // Collect disjoint support intervals (merge overlaps).
    let mut intervals: Vec<(f64, f64, Vec<f64>)> = Vec::new();
    let mut raw: Vec<(f64, f64, f64)> = sings
        .iter()
        .map(|ts| {
            let w = ts.support_halfwidth();
            (ts.angle - w, ts.angle + w, ts.angle)
        })
        .collect();
    raw.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for (lo, hi, center) in raw {
        if let Some(last) = intervals.last_mut() {
            if lo <= last.1 {
                last.1 = last.1.max(hi);
                last.2.push(center);
                continue;
            }
        }
        intervals.push((lo, hi, vec![center]));
    }
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for (lo, hi, centers) in intervals {
        // Dyadic grading toward each kink from both sides.
        let mut edges = vec![lo, hi];
        for &c in &centers {
            edges.push(c);
            for side in [-1.0, 1.0] {
                let reach: f64 = if side < 0.0 { c - lo } else { hi - c };
                if reach <= 0.0 {
                    continue;
                }
                for lvl in 1..=11 {
                    edges.push(c + side * reach * libm::exp2(-(lvl as f64)));
                }
            }
        }
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let inner: Vec<f64> = centers
            .iter()
            .flat_map(|&c| {
                sings
                    .iter()
                    .filter(move |ts| libm::fabs(ts.angle - c) < 1e-13)
                    .map(|ts| ts.inner_halfwidth())
                    .flat_map(move |w| [c - w, c + w])
            })
            .collect();
        let mut all_edges = edges;
        all_edges.extend(inner);
        all_edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        all_edges.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        for pair in all_edges.windows(2) {
            if pair[1] - pair[0] < 1e-15 {
                continue;
            }
            let (x, w) = gl_panel_nodes(pair[0], pair[1], n, &[]);
            xs.extend(x);
            ws.extend(w);
        }
    }
    (xs, ws)
}

/// A discretized Fredholm problem over `J` circle copies.
pub struct FredholmProblem<'a> {
    pub kernel: &'a ExtendedKernel,
    /// `(time index, test)` pairs.
    pub tests: Vec<(usize, TestFunction)>,
    /// Trapezoid resolution for smooth tests; must be at least `8 n`.
    pub quadrature_points: usize,
}

/// Result of a Fredholm evaluation.
#[derive(Debug, Clone, Copy)]
pub struct FredholmValue {
    pub value: f64,
    pub imag_residue: f64,
    pub matrix_size: usize,
}

/// `E prod_j prod_i (1 + g_j(z_i(t_j)))` as `det(Id + G K)`, assembled with
/// square-root weight symmetrization (the determinant is invariant).
pub fn fredholm_expectation(problem: &FredholmProblem) -> Result<FredholmValue> {
    let n = problem.kernel.n();
    let m = problem.quadrature_points;
    if m < 8 * n {
        return Err(Error::invalid(format!(
            "quadrature_points = {m} must be at least 8 n = {}",
            8 * n
        )));
    }
    for (j, _) in &problem.tests {
        if *j >= problem.kernel.times().len() {
            return Err(Error::invalid("test attached to missing time index"));
        }
    }
    // Assemble per-test node sets.
    let mut node_time = Vec::new();
    let mut node_theta = Vec::new();
    let mut node_sqrt_w = Vec::new();
    let mut node_g = Vec::new();
    for (j, test) in &problem.tests {
        let (xs, ws) = nodes_for(test, n, m);
        for (x, w) in xs.iter().zip(&ws) {
            node_time.push(*j);
            node_theta.push(*x);
            node_sqrt_w.push(libm::sqrt(*w));
            node_g.push(test.eval(*x));
        }
    }
    let size = node_theta.len();
    let mut mat = crate::linalg::CMat::identity(size);
    for r in 0..size {
        if node_g[r] == 0.0 {
            continue;
        }
        for c in 0..size {
            let k = problem.kernel.evaluate(
                node_time[r],
                node_theta[r],
                node_time[c],
                node_theta[c],
            );
            mat[(r, c)] += k * (node_g[r] * node_sqrt_w[r] * node_sqrt_w[c]);
        }
    }
    let det = crate::linalg::lu_factor(&mat).det();
    let residue = det.im.abs();
    if residue > 1e-6 * det.re.abs().max(1.0) {
        return Err(Error::Numerical(format!(
            "Fredholm determinant has imaginary residue {residue:.3e}"
        )));
    }
    Ok(FredholmValue {
        value: det.re,
        imag_residue: residue,
        matrix_size: size,
    })
}

/// Deterministic decoupling experiment: the ratio
/// `E[prod f_1 f_2] / (E[prod f_1] E[prod f_2])` for two truncated
/// singularities, all three expectations from the same quadrature.
///
/// The symbols enter normalized by their far field, which cancels exactly
/// in the ratio. Equal times use the product symbol on one circle copy;
/// distinct times use the two-time extended kernel.
#[allow(clippy::too_many_arguments)]
pub fn decoupling_ratio(
    e1: f64,
    e2: f64,
    t1: f64,
    t2: f64,
    gamma1: f64,
    gamma2: f64,
    lambda: f64,
    n: usize,
    quadrature_points: usize,
) -> Result<f64> {
    if lambda < 1.0 {
        return Err(Error::invalid("lambda must be >= 1"));
    }
    let angle_gap = 2.0 * libm::fabs(libm::sin(0.5 * (e1 - e2)));
    let time_gap = libm::fabs(t1 - t2);
    let min_sep = 4.0 * lambda / n as f64;
    if angle_gap.max(time_gap) < min_sep {
        return Err(Error::invalid(format!(
            "singularities too close: separation {:.3e} below 4 lambda / n = {min_sep:.3e}",
            angle_gap.max(time_gap)
        )));
    }
    let s1 = TruncatedSingularity {
        angle: crate::dyson::wrap_angle(e1),
        gamma: gamma1,
        lambda,
        n,
    };
    let s2 = TruncatedSingularity {
        angle: crate::dyson::wrap_angle(e2),
        gamma: gamma2,
        lambda,
        n,
    };
    let same_time = time_gap < 1e-12;
    let times: Vec<f64> = if same_time {
        vec![t1]
    } else if t1 < t2 {
        vec![t1, t2]
    } else {
        vec![t2, t1]
    };
    let kernel = crate::kernels::equilibrium_extended_kernel(n, &times)?;
    let numerator = if same_time {
        fredholm_expectation(&FredholmProblem {
            kernel: &kernel,
            tests: vec![(
                0,
                TestFunction::NormalizedSingularityProduct(vec![s1, s2]),
            )],
            quadrature_points,
        })?
        .value
    } else {
        let (i1, i2) = if t1 < t2 { (0, 1) } else { (1, 0) };
        fredholm_expectation(&FredholmProblem {
            kernel: &kernel,
            tests: vec![
                (i1, TestFunction::NormalizedSingularity(s1)),
                (i2, TestFunction::NormalizedSingularity(s2)),
            ],
            quadrature_points,
        })?
        .value
    };
    let single = |s: TruncatedSingularity, idx: usize| -> Result<f64> {
        Ok(fredholm_expectation(&FredholmProblem {
            kernel: &kernel,
            tests: vec![(idx, TestFunction::NormalizedSingularity(s))],
            quadrature_points,
        })?
        .value)
    };
    let d1 = single(s1, 0)?;
    let d2 = single(s2, if same_time { 0 } else { usize::from(t1 < t2) })?;
    Ok(numerator / (d1 * d2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyson::cue_eigenphases;
    use crate::kernels::equilibrium_extended_kernel;
    use crate::rng::SeedTree;

    #[test]
    fn zero_test_gives_one_exactly() {
        let kernel = equilibrium_extended_kernel(6, &[0.0]).unwrap();
        let v = fredholm_expectation(&FredholmProblem {
            kernel: &kernel,
            tests: vec![(0, TestFunction::Smooth(CircleSymbol::zero(2)))],
            quadrature_points: 64,
        })
        .unwrap();
        assert_eq!(v.value, 1.0);
    }

    #[test]
    fn constant_test_matches_binomial() {
        // g = eps: E prod (1 + eps) = (1 + eps)^N exactly.
        let n = 8;
        let eps = 1e-4;
        let kernel = equilibrium_extended_kernel(n, &[0.0]).unwrap();
        let v = fredholm_expectation(&FredholmProblem {
            kernel: &kernel,
            tests: vec![(0, TestFunction::Smooth(CircleSymbol::constant(eps)))],
            quadrature_points: 64,
        })
        .unwrap();
        let expect = libm::pow(1.0 + eps, n as f64);
        assert!((v.value - expect).abs() < 1e-12, "{} vs {expect}", v.value);
    }

    #[test]
    fn cosine_test_first_and_second_order() {
        // g = eps cos: the first-order term vanishes and the second-order
        // term is -(eps^2/4)(N-1) from the adjacent-mode pairs.
        let n = 8;
        let kernel = equilibrium_extended_kernel(n, &[0.0]).unwrap();
        let run = |eps: f64| {
            fredholm_expectation(&FredholmProblem {
                kernel: &kernel,
                tests: vec![(0, TestFunction::Smooth(CircleSymbol::cosine().scaled(eps)))],
                quadrature_points: 64,
            })
            .unwrap()
            .value
        };
        let tiny = run(1e-6);
        assert!((tiny - 1.0).abs() < 1e-10, "{tiny}");
        let eps = 1e-3;
        let second = run(eps);
        let expect = 1.0 - eps * eps / 4.0 * (n as f64 - 1.0);
        assert!((second - expect).abs() < 1e-8, "{second} vs {expect}");
    }

    #[test]
    fn same_time_marginal_drops_zero_block() {
        let n = 6;
        let kernel = equilibrium_extended_kernel(n, &[0.0, 0.3]).unwrap();
        let arc = TestFunction::ArcIndicator {
            lo: 0.5,
            hi: 1.5,
            value: -0.6,
        };
        let joint = fredholm_expectation(&FredholmProblem {
            kernel: &kernel,
            tests: vec![
                (0, arc.clone()),
                (1, TestFunction::Smooth(CircleSymbol::zero(1))),
            ],
            quadrature_points: 48,
        })
        .unwrap();
        let single = fredholm_expectation(&FredholmProblem {
            kernel: &kernel,
            tests: vec![(0, arc)],
            quadrature_points: 48,
        })
        .unwrap();
        assert!((joint.value - single.value).abs() < 1e-10);
    }

    #[test]
    fn quadrature_doubling_is_stable() {
        let n = 6;
        let kernel = equilibrium_extended_kernel(n, &[0.0, 0.25]).unwrap();
        let run = |m: usize| {
            fredholm_expectation(&FredholmProblem {
                kernel: &kernel,
                tests: vec![
                    (
                        0,
                        TestFunction::ArcIndicator {
                            lo: 1.0,
                            hi: 2.2,
                            value: -0.5,
                        },
                    ),
                    (1, TestFunction::Smooth(CircleSymbol::cosine().scaled(0.2))),
                ],
                quadrature_points: m,
            })
            .unwrap()
            .value
        };
        let a = run(8 * n);
        let b = run(16 * n);
        assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
    }

    #[test]
    fn gap_probability_matches_monte_carlo() {
        // J = 1, g = -1 on an arc of length 2 pi / N: Fredholm value equals
        // the probability that the arc is empty; Monte Carlo oracle.
        let n = 8;
        let kernel = equilibrium_extended_kernel(n, &[0.0]).unwrap();
        let lo = 1.0;
        let hi = 1.0 + TWO_PI / n as f64;
        let fred = fredholm_expectation(&FredholmProblem {
            kernel: &kernel,
            tests: vec![(0, TestFunction::ArcIndicator { lo, hi, value: -1.0 })],
            quadrature_points: 64,
        })
        .unwrap()
        .value;
        let tree = SeedTree::new(99);
        let samples = 40_000;
        let mut hits = 0usize;
        for i in 0..samples {
            let phases = cue_eigenphases(n, &tree.child("s", i as u64)).unwrap();
            if phases.iter().all(|&p| !(p >= lo && p <= hi)) {
                hits += 1;
            }
        }
        let p = hits as f64 / samples as f64;
        let stderr = (p * (1.0 - p) / samples as f64).sqrt();
        assert!(
            (fred - p).abs() <= 3.0 * stderr,
            "fredholm {fred} vs MC {p} +- {stderr}"
        );
    }

    #[test]
    fn two_time_expectation_matches_monte_carlo() {
        // J = 2, t gap 0.2, g_j = -0.5 on fixed arcs; Monte Carlo over
        // evolved trajectories as the oracle.
        let n = 8;
        let gap = 0.2;
        let kernel = equilibrium_extended_kernel(n, &[0.0, gap]).unwrap();
        let arc1 = (0.5, 0.5 + TWO_PI / n as f64);
        let arc2 = (3.0, 3.0 + 1.5 * TWO_PI / n as f64);
        let fred = fredholm_expectation(&FredholmProblem {
            kernel: &kernel,
            tests: vec![
                (
                    0,
                    TestFunction::ArcIndicator {
                        lo: arc1.0,
                        hi: arc1.1,
                        value: -0.5,
                    },
                ),
                (
                    1,
                    TestFunction::ArcIndicator {
                        lo: arc2.0,
                        hi: arc2.1,
                        value: -0.5,
                    },
                ),
            ],
            quadrature_points: 64,
        })
        .unwrap()
        .value;
        let tree = SeedTree::new(101);
        let samples = 20_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..samples {
            let start = cue_eigenphases(n, &tree.child("init", i as u64)).unwrap();
            let traj = crate::dyson::evolve_eigenphases_recorded(
                &start,
                0.0,
                1e-3,
                200,
                2.0,
                200,
                &tree.child("path", i as u64),
            )
            .unwrap();
            let w0: f64 = traj
                .slice(0)
                .iter()
                .map(|&p| {
                    let w = crate::dyson::wrap_angle(p);
                    if w >= arc1.0 && w <= arc1.1 {
                        0.5
                    } else {
                        1.0
                    }
                })
                .product();
            let w1: f64 = traj
                .slice(1)
                .iter()
                .map(|&p| {
                    let w = crate::dyson::wrap_angle(p);
                    if w >= arc2.0 && w <= arc2.1 {
                        0.5
                    } else {
                        1.0
                    }
                })
                .product();
            let v = w0 * w1;
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / samples as f64;
        let var = (sumsq / samples as f64 - mean * mean).max(0.0);
        let stderr = (var / samples as f64).sqrt();
        assert!(
            (fred - mean).abs() <= 3.0 * stderr,
            "fredholm {fred} vs MC {mean} +- {stderr}"
        );
    }

    #[test]
    fn truncated_singularity_shape() {
        let n = 32;
        let lambda = 2.0;
        let gamma = 1.0;
        let ts = TruncatedSingularity {
            angle: 1.0,
            gamma,
            lambda,
            n,
        };
        let th = lambda / n as f64;
        // Far field exactly (2 lambda / n)^gamma.
        assert_eq!(ts.value(1.0 + core::f64::consts::PI), 2.0 * th);
        // Near field exactly |z - E|^gamma.
        let phi = 1.0 + 0.4 * th;
        let chord = 2.0 * libm::fabs(libm::sin(0.5 * (phi - 1.0)));
        assert!((ts.value(phi) - chord).abs() < 1e-15);
        // gamma = 0: constant 1.
        let flat = TruncatedSingularity {
            angle: 1.0,
            gamma: 0.0,
            lambda,
            n,
        };
        for p in [0.0, 1.0, 1.01, 4.0] {
            assert!((flat.value(p) - 1.0).abs() < 1e-15);
        }
        // Symbol form reproduces the evaluator through its coefficients.
        let sym = truncated_singularity_symbol(1.0, gamma, lambda, n, 96).unwrap();
        assert!(sym.reality_defect() < 1e-12);
    }

    #[test]
    fn decoupling_ratio_near_one_at_opposite_angles() {
        let n = 32;
        let ratio =
            decoupling_ratio(0.0, core::f64::consts::PI, 0.1, 0.1, 1.0, 1.0, 2.0, n, 8 * n)
                .unwrap();
        assert!(
            (0.9..=1.1).contains(&ratio),
            "decoupling ratio {ratio} outside [0.9, 1.1]"
        );
    }

    #[test]
    fn decoupling_degenerate_rejected() {
        assert!(decoupling_ratio(1.0, 1.0, 0.5, 0.5, 1.0, 1.0, 2.0, 32, 256).is_err());
    }
}
