//! Haar sampling and the unitary Brownian motion
//! `dU = sqrt(2) U dB - U dt` (the clock under which Tr f(U_t) decorrelates
//! like `e^{-|k| t}` per mode), together with the Borel-transform observable
//! and its advection characteristics.

use alloc::{format, vec, vec::Vec};
use num_complex::Complex64;
use rand_chacha::ChaCha12Rng;

use crate::error::Error;
use crate::linalg::{exp_skew_hermitian, lu_factor, CMat};
use crate::rng::{complex_gaussian, standard_normal, SeedTree};
use crate::Result;

/// An n x n unitary matrix; unitarity is maintained structurally by the
/// integrator and can be audited via [`UnitaryMatrix::unitarity_defect`].
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    mat: CMat,
}

impl UnitaryMatrix {
    pub fn from_mat(mat: CMat) -> Self {
        UnitaryMatrix { mat }
    }

    pub fn identity(n: usize) -> Self {
        UnitaryMatrix {
            mat: CMat::identity(n),
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.mat.n()
    }

    #[inline]
    pub fn mat(&self) -> &CMat {
        &self.mat
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.mat.unitarity_defect()
    }

    /// `Tr cos(U) = Re Tr U`.
    pub fn tr_cos(&self) -> f64 {
        self.mat.trace().re
    }

    /// Traces of powers `Tr U^k` for `k = 1..=k_max`, by repeated
    /// matrix-vector-free multiplication.
    pub fn trace_powers(&self, k_max: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(k_max);
        let mut p = self.mat.clone();
        out.push(p.trace());
        for _ in 1..k_max {
            p = p.mul(&self.mat);
            out.push(p.trace());
        }
        out
    }

    /// `Tr f(U)` for a Fourier polynomial `f`, via traces of powers.
    pub fn tr_symbol(&self, f: &crate::symbols::CircleSymbol) -> f64 {
        let k_max = f.k_max();
        let n = self.n() as f64;
        let mut acc = f.coeff(0).re * n;
        if k_max > 0 {
            let powers = self.trace_powers(k_max);
            for k in 1..=k_max as i64 {
                acc += 2.0 * (f.coeff(k) * powers[(k - 1) as usize]).re;
            }
        }
        acc
    }
}

/// The paper-normalized orthogonal basis of skew-Hermitian matrices:
/// `(E_kl - E_lk)/sqrt(2N)`, `i(E_kl + E_lk)/sqrt(2N)` for `k < l`, and
/// `i E_kk / sqrt(N)`. Orthonormal for `N <.,.>_Re` and `sum_k X_k^2 = -Id`.
#[derive(Debug, Clone)]
pub struct SkewBasis {
    n: usize,
    elements: Vec<CMat>,
}

impl SkewBasis {
    pub fn elements(&self) -> &[CMat] {
        &self.elements
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

pub fn skew_basis(n: usize) -> Result<SkewBasis> {
    if n == 0 {
        return Err(Error::invalid("skew basis needs n >= 1"));
    }
    let nf = n as f64;
    let off = 1.0 / libm::sqrt(2.0 * nf);
    let diag = 1.0 / libm::sqrt(nf);
    let mut elements = Vec::with_capacity(n * n);
    for k in 0..n {
        for l in k + 1..n {
            let mut x = CMat::zeros(n);
            x[(k, l)] = Complex64::new(off, 0.0);
            x[(l, k)] = Complex64::new(-off, 0.0);
            elements.push(x);
            let mut y = CMat::zeros(n);
            y[(k, l)] = Complex64::new(0.0, off);
            y[(l, k)] = Complex64::new(0.0, off);
            elements.push(y);
        }
    }
    for k in 0..n {
        let mut d = CMat::zeros(n);
        d[(k, k)] = Complex64::new(0.0, diag);
        elements.push(d);
    }
    Ok(SkewBasis { n, elements })
}

/// Exactly Haar-distributed unitary: QR of a complex Gaussian matrix with
/// the triangular factor's diagonal phases folded back in.
pub fn sample_haar_unitary(n: usize, seed: &SeedTree) -> Result<UnitaryMatrix> {
    if n == 0 {
        return Err(Error::invalid("Haar sampling needs n >= 1"));
    }
    let mut rng = seed.rng();
    Ok(haar_with_rng(n, &mut rng))
}

pub(crate) fn haar_with_rng(n: usize, rng: &mut ChaCha12Rng) -> UnitaryMatrix {
    let g = CMat::from_fn(n, |_, _| complex_gaussian(rng));
    let (q, r) = crate::linalg::qr(&g);
    let mut u = q;
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() == 0.0 {
            Complex64::ONE
        } else {
            d / d.norm()
        };
        for i in 0..n {
            u[(i, j)] *= phase;
        }
    }
    UnitaryMatrix::from_mat(u)
}

/// A standard Gaussian in the skew-Hermitian basis, drawn entrywise.
pub(crate) fn skew_gaussian(n: usize, rng: &mut ChaCha12Rng) -> CMat {
    let nf = n as f64;
    let off = 1.0 / libm::sqrt(2.0 * nf);
    let diag = 1.0 / libm::sqrt(nf);
    let mut g = CMat::zeros(n);
    for k in 0..n {
        for l in k + 1..n {
            let a = standard_normal(rng);
            let b = standard_normal(rng);
            g[(k, l)] = Complex64::new(a * off, b * off);
            g[(l, k)] = Complex64::new(-a * off, b * off);
        }
        g[(k, k)] = Complex64::new(0.0, standard_normal(rng) * diag);
    }
    g
}

/// One geometric Euler step: `U <- U exp(sqrt(2 dt) Xi)` with `Xi` a standard
/// skew-Hermitian Gaussian. The quadratic term of the exponential supplies
/// the `-U dt` Ito drift in expectation (`E Xi^2 = -2 dt Id / 2`), so no
/// explicit drift is added and unitarity is exact.
pub(crate) fn ubm_step(u: &mut UnitaryMatrix, dt: f64, rng: &mut ChaCha12Rng) {
    let n = u.n();
    let mut xi = skew_gaussian(n, rng);
    xi.scale(Complex64::new(libm::sqrt(2.0 * dt), 0.0));
    let step = exp_skew_hermitian(&xi);
    u.mat = u.mat.mul(&step);
}

/// Evolve the unitary Brownian motion, invoking `observe(step, U)` after
/// every step (step 0 is the initial state). Returns the final state.
pub fn evolve_unitary_observe(
    u0: &UnitaryMatrix,
    dt: f64,
    steps: usize,
    seed: &SeedTree,
    mut observe: impl FnMut(usize, &UnitaryMatrix),
) -> Result<UnitaryMatrix> {
    if dt <= 0.0 {
        return Err(Error::invalid("dt must be positive"));
    }
    let mut rng = seed.rng();
    let mut u = u0.clone();
    observe(0, &u);
    for s in 1..=steps {
        ubm_step(&mut u, dt, &mut rng);
        if !u.mat.is_finite() {
            return Err(Error::NonFinite(format!(
                "unitary path overflowed at step {s} (dt = {dt})"
            )));
        }
        observe(s, &u);
    }
    Ok(u)
}

/// Evolve and collect the whole path including the initial state.
pub fn evolve_unitary(
    u0: &UnitaryMatrix,
    dt: f64,
    steps: usize,
    seed: &SeedTree,
) -> Result<Vec<UnitaryMatrix>> {
    let mut path = Vec::with_capacity(steps + 1);
    evolve_unitary_observe(u0, dt, steps, seed, |_, u| path.push(u.clone()))?;
    Ok(path)
}

/// Default step size: keeps weak-order-1 bias below Monte Carlo noise at the
/// sample counts the experiments use.
pub fn default_dt(n: usize) -> f64 {
    (0.1 / n as f64).min(1e-3)
}

/// `m_{t,A}(z) = Tr( (z+U)/(z-U) A )` by linear solve; `A = Id/N` when absent.
pub fn borel_transform(
    u: &UnitaryMatrix,
    z: Complex64,
    a: Option<&CMat>,
) -> Result<Complex64> {
    let n = u.n();
    let mut m = CMat::from_fn(n, |i, j| -u.mat()[(i, j)]);
    for i in 0..n {
        m[(i, i)] += z;
    }
    let lu = lu_factor(&m);
    if lu.is_singular() {
        return Err(Error::SpectrumProximity);
    }
    // Distance of z to the spectrum equals sigma_min(z - U) for unitary U;
    // estimate it with two inverse-power steps from a generic phase vector.
    let scale = 1.0 / libm::sqrt(n as f64);
    let v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::from_polar(scale, 2.399963229728653 * i as f64))
        .collect();
    let w = lu.solve(&v);
    let wn = libm::sqrt(w.iter().map(|x| x.norm_sqr()).sum::<f64>());
    let w2 = lu.solve(&w.iter().map(|x| x / wn).collect::<Vec<_>>());
    let dist = 1.0 / libm::sqrt(w2.iter().map(|x| x.norm_sqr()).sum::<f64>());
    if dist < 1e-11 {
        return Err(Error::SpectrumProximity);
    }
    let id_over_n;
    let a = match a {
        Some(a) => a,
        None => {
            let mut d = CMat::identity(n);
            d.scale(Complex64::new(1.0 / n as f64, 0.0));
            id_over_n = d;
            &id_over_n
        }
    };
    // (z - U)^{-1} A column by column, then Tr((z + U) Y).
    let mut trace = Complex64::ZERO;
    let mut col = vec![Complex64::ZERO; n];
    for j in 0..n {
        for (i, c) in col.iter_mut().enumerate() {
            *c = a[(i, j)];
        }
        let y = lu.solve(&col);
        // row j of (z + U) dotted with y
        let mut acc = z * y[j];
        for k in 0..n {
            acc += u.mat()[(j, k)] * y[k];
        }
        trace += acc;
    }
    Ok(trace)
}

/// Advection characteristics of the Borel transform: `z e^t` outside the
/// unit circle, `z e^{-t}` inside; the flow is undefined on the circle.
pub fn characteristic_flow(z: Complex64, t: f64) -> Result<Complex64> {
    let r = z.norm();
    if r == 1.0 {
        return Err(Error::invalid("characteristic flow undefined for |z| = 1"));
    }
    Ok(if r > 1.0 {
        z * libm::exp(t)
    } else {
        z * libm::exp(-t)
    })
}
