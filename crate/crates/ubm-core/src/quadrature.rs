//! Quadrature rules: periodic trapezoid, Gauss-Legendre and Gauss-Hermite
//! via Golub-Welsch on the Jacobi matrices (reusing the tridiagonal QL
//! solver), and panel-based integration for oscillatory integrands.

use alloc::{vec, vec::Vec};

use crate::linalg::{ql_implicit, CMat};
use crate::TWO_PI;

/// Uniform angles `2 pi a / m`, the nodes of the periodic trapezoid rule.
pub fn periodic_grid(m: usize) -> Vec<f64> {
    (0..m).map(|a| TWO_PI * a as f64 / m as f64).collect()
}

/// `(1/2pi) \int_0^{2pi} f` by the periodic trapezoid rule.
pub fn circle_mean(f: impl Fn(f64) -> f64, m: usize) -> f64 {
    let mut s = 0.0;
    for a in 0..m {
        s += f(TWO_PI * a as f64 / m as f64);
    }
    s / m as f64
}

fn golub_welsch(diag: Vec<f64>, offdiag: Vec<f64>, mu0: f64) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    let mut d = diag;
    let mut e = offdiag;
    let mut v = CMat::identity(n);
    ql_implicit(&mut d, &mut e, &mut v).expect("Jacobi matrix QL cannot fail for these inputs");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap());
    let nodes: Vec<f64> = order.iter().map(|&j| d[j]).collect();
    let weights: Vec<f64> = order
        .iter()
        .map(|&j| mu0 * v[(0, j)].norm_sqr())
        .collect();
    (nodes, weights)
}

/// Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for (k, ek) in e.iter_mut().enumerate().skip(1) {
        let kf = k as f64;
        *ek = kf / libm::sqrt(4.0 * kf * kf - 1.0);
    }
    golub_welsch(d, e, 2.0)
}

/// Gauss-Hermite rule for `\int_R e^{-x^2} f(x) dx ~ sum w_i f(x_i)`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for (k, ek) in e.iter_mut().enumerate().skip(1) {
        *ek = libm::sqrt(k as f64 / 2.0);
    }
    golub_welsch(d, e, libm::sqrt(core::f64::consts::PI))
}

/// Reusable Gauss-Legendre panel integrator.
pub struct PanelRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl PanelRule {
    pub fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        PanelRule { nodes, weights }
    }

    /// Integrate `f` over `[a, b]` split into `panels` equal panels.
    pub fn integrate(&self, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = (b - a) / panels as f64;
        let mut acc = 0.0;
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let mid = lo + 0.5 * h;
            let half = 0.5 * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                acc += w * f(mid + half * x);
            }
        }
        acc * 0.5 * (b - a) / panels as f64
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, w * half))
    }
}
