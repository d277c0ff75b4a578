//! Dense complex linear algebra sized for desk-scale matrices (n <= a few
//! hundred): row-major storage, Householder QR, partially pivoted LU,
//! a Hermitian eigensolver (tridiagonalization + implicit QL) and the
//! scaled-and-squared exponential of skew-Hermitian matrices.

use alloc::{vec, vec::Vec};
use core::ops::{Index, IndexMut};
use num_complex::Complex64;

use crate::error::Error;
use crate::Result;

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    n: usize,
    a: Vec<Complex64>,
}

impl Index<(usize, usize)> for CMat {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.a[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.a[i * self.n + j]
    }
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        CMat {
            n,
            a: vec![Complex64::ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = CMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    /// `self * other`, naive ikj product.
    pub fn mul(&self, other: &CMat) -> CMat {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let mut c = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let s = self.a[i * n + k];
                if s == Complex64::ZERO {
                    continue;
                }
                let br = &other.a[k * n..(k + 1) * n];
                let cr = &mut c.a[i * n..(i + 1) * n];
                for j in 0..n {
                    cr[j] += s * br[j];
                }
            }
        }
        c
    }

    /// `self * v` for a column vector.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut out = vec![Complex64::ZERO; n];
        for i in 0..n {
            let row = &self.a[i * n..(i + 1) * n];
            let mut acc = Complex64::ZERO;
            for j in 0..n {
                acc += row[j] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn scale(&mut self, s: Complex64) {
        for x in &mut self.a {
            *x *= s;
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Maximum column sum of moduli.
    pub fn norm_one(&self) -> f64 {
        let n = self.n;
        let mut best = 0.0_f64;
        for j in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                s += self.a[i * n + j].norm();
            }
            best = best.max(s);
        }
        best
    }

    /// `max_ij |(U* U - Id)_ij|`; the unitarity defect.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let mut s = Complex64::ZERO;
                for k in 0..n {
                    s += self.a[k * n + i].conj() * self.a[k * n + j];
                }
                if i == j {
                    s -= Complex64::ONE;
                }
                worst = worst.max(s.norm());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// LU factorization with partial pivoting, kept for determinants and solves.
pub struct Lu {
    n: usize,
    lu: Vec<Complex64>,
    /// `piv[i]` = original row now sitting in position i.
    piv: Vec<usize>,
    sign: f64,
    singular: bool,
}

pub fn lu_factor(m: &CMat) -> Lu {
    let n = m.n;
    let mut lu = m.a.clone();
    let mut piv: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    let mut singular = false;
    for k in 0..n {
        let mut p = k;
        let mut best = lu[k * n + k].norm();
        for i in k + 1..n {
            let v = lu[i * n + k].norm();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == 0.0 {
            singular = true;
            continue;
        }
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
            piv.swap(k, p);
            sign = -sign;
        }
        let pivot = lu[k * n + k];
        for i in k + 1..n {
            let f = lu[i * n + k] / pivot;
            lu[i * n + k] = f;
            if f != Complex64::ZERO {
                for j in k + 1..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= f * u;
                }
            }
        }
    }
    Lu {
        n,
        lu,
        piv,
        sign,
        singular,
    }
}

impl Lu {
    pub fn is_singular(&self) -> bool {
        self.singular
    }

    /// Determinant with overflow guarding via exponent tracking.
    pub fn det(&self) -> Complex64 {
        if self.singular {
            return Complex64::ZERO;
        }
        let mut prod = Complex64::new(self.sign, 0.0);
        let mut exp = 0i32;
        for k in 0..self.n {
            prod *= self.lu[k * self.n + k];
            let m = prod.norm();
            if m > 1e150 {
                prod *= Complex64::new(1e-150, 0.0);
                exp += 150;
            } else if m < 1e-150 && m > 0.0 {
                prod *= Complex64::new(1e150, 0.0);
                exp -= 150;
            }
        }
        let scale = libm::exp(exp as f64 * core::f64::consts::LN_10);
        prod * Complex64::new(scale, 0.0)
    }

    /// log |det| plus the phase of det, immune to overflow.
    pub fn log_abs_det(&self) -> (f64, Complex64) {
        if self.singular {
            return (f64::NEG_INFINITY, Complex64::ONE);
        }
        let mut log_abs = 0.0;
        let mut phase = Complex64::new(self.sign, 0.0);
        for k in 0..self.n {
            let d = self.lu[k * self.n + k];
            log_abs += libm::log(d.norm());
            phase *= d / d.norm();
        }
        (log_abs, phase)
    }

    /// Smallest pivot modulus; crude proximity-to-singularity signal.
    pub fn min_pivot(&self) -> f64 {
        (0..self.n)
            .map(|k| self.lu[k * self.n + k].norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Solve `A x = b` in place.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut x: Vec<Complex64> = (0..n).map(|i| b[self.piv[i]]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[i * n + j];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[i * n + j];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }

    /// Solve `A* x = b` using the same factorization.
    pub fn solve_adjoint(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        // A = P^T L U, so A* = U* L* P: forward solve U* w = b, then
        // L* y = w, then undo the pivoting.
        let mut w = b.to_vec();
        for i in 0..n {
            for j in 0..i {
                let u = self.lu[j * n + i].conj();
                let wj = w[j];
                w[i] -= u * wj;
            }
            w[i] /= self.lu[i * n + i].conj();
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let l = self.lu[j * n + i].conj();
                let wj = w[j];
                w[i] -= l * wj;
            }
        }
        let mut x = vec![Complex64::ZERO; n];
        for i in 0..n {
            x[self.piv[i]] = w[i];
        }
        x
    }
}

/// 1-norm condition estimate (Hager/Higham power method on `A^{-1}`).
pub fn condition_estimate(m: &CMat, lu: &Lu) -> f64 {
    if lu.is_singular() {
        return f64::INFINITY;
    }
    let n = m.n;
    let norm_a = m.norm_one();
    let mut x = vec![Complex64::new(1.0 / n as f64, 0.0); n];
    let mut est = 0.0_f64;
    for _ in 0..5 {
        let y = lu.solve(&x);
        let y1: f64 = y.iter().map(|z| z.norm()).sum();
        est = est.max(y1);
        let xi: Vec<Complex64> = y
            .iter()
            .map(|z| {
                if z.norm() == 0.0 {
                    Complex64::ONE
                } else {
                    z / z.norm()
                }
            })
            .collect();
        let z = lu.solve_adjoint(&xi);
        let (mut jmax, mut zmax) = (0usize, 0.0_f64);
        for (j, zj) in z.iter().enumerate() {
            if zj.norm() > zmax {
                zmax = zj.norm();
                jmax = j;
            }
        }
        let zx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
        if zmax <= zx.abs() {
            break;
        }
        x = vec![Complex64::ZERO; n];
        x[jmax] = Complex64::ONE;
    }
    norm_a * est
}

/// Householder QR; returns `(q, r)` with `q` unitary and `r` upper triangular.
pub fn qr(m: &CMat) -> (CMat, CMat) {
    let n = m.n;
    let mut r = m.clone();
    let mut q = CMat::identity(n);
    let mut v = vec![Complex64::ZERO; n];
    for k in 0..n {
        let mut norm2 = 0.0;
        for i in k..n {
            norm2 += r[(i, k)].norm_sqr();
        }
        let norm = libm::sqrt(norm2);
        if norm == 0.0 {
            continue;
        }
        let x0 = r[(k, k)];
        let phase = if x0.norm() == 0.0 {
            Complex64::ONE
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * norm;
        for i in k..n {
            v[i] = r[(i, k)];
        }
        v[k] -= alpha;
        let vnorm2: f64 = (k..n).map(|i| v[i].norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let tau = 2.0 / vnorm2;
        // r <- H r on the trailing block
        for j in k..n {
            let mut s = Complex64::ZERO;
            for i in k..n {
                s += v[i].conj() * r[(i, j)];
            }
            s *= tau;
            for i in k..n {
                let vi = v[i];
                r[(i, j)] -= vi * s;
            }
        }
        // q <- q H
        for i in 0..n {
            let mut s = Complex64::ZERO;
            for j in k..n {
                s += q[(i, j)] * v[j];
            }
            s *= tau;
            for j in k..n {
                let vj = v[j].conj();
                q[(i, j)] -= s * vj;
            }
        }
    }
    (q, r)
}

/// Exponential of a skew-Hermitian matrix by scaling-and-squaring with a
/// machine-precision Taylor tail; the result is unitary to rounding.
pub fn exp_skew_hermitian(s: &CMat) -> CMat {
    let n = s.n;
    let norm = s.norm_one();
    let mut squarings = 0u32;
    let mut scaled = s.clone();
    if norm > 0.25 {
        squarings = libm::ceil(libm::log2(norm / 0.25)) as u32;
        scaled.scale(Complex64::new(libm::exp2(-(squarings as f64)), 0.0));
    }
    let mut result = CMat::identity(n);
    let mut term = CMat::identity(n);
    for j in 1..=30 {
        term = term.mul(&scaled);
        term.scale(Complex64::new(1.0 / j as f64, 0.0));
        for (acc, t) in result.a.iter_mut().zip(&term.a) {
            *acc += t;
        }
        if term.max_abs() < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.mul(&result);
    }
    result
}

/// Hermitian eigendecomposition: returns eigenvalues (ascending is not
/// guaranteed) and the unitary whose columns are eigenvectors.
///
/// Classical route: Householder tridiagonalization with a diagonal phase
/// similarity to realify the subdiagonal, then implicit-shift QL with
/// accumulated rotations.
pub fn hermitian_eig(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = m.n;
    if n == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    let mut a = m.clone();
    let mut q = CMat::identity(n);
    let mut v = vec![Complex64::ZERO; n];

    // Tridiagonalize.
    for k in 0..n.saturating_sub(2) {
        let mut norm2 = 0.0;
        for i in k + 1..n {
            norm2 += a[(i, k)].norm_sqr();
        }
        let norm = libm::sqrt(norm2);
        if norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() == 0.0 {
            Complex64::ONE
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * norm;
        for i in k + 1..n {
            v[i] = a[(i, k)];
        }
        v[k + 1] -= alpha;
        let vnorm2: f64 = (k + 1..n).map(|i| v[i].norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let tau = 2.0 / vnorm2;
        // p = tau * A v restricted to rows k.. (col k handled explicitly).
        let mut p = vec![Complex64::ZERO; n];
        for i in k..n {
            let mut s = Complex64::ZERO;
            for j in k + 1..n {
                s += a[(i, j)] * v[j];
            }
            p[i] = s * tau;
        }
        // w = p - (tau/2) (v* p) v
        let vp: Complex64 = (k + 1..n).map(|i| v[i].conj() * p[i]).sum();
        let half = vp * (tau / 2.0);
        for i in k + 1..n {
            let vi = v[i];
            p[i] -= half * vi;
        }
        // A <- A - v w* - w v* on the trailing block; col/row k separately.
        for i in k + 1..n {
            for j in k + 1..n {
                let upd = v[i] * p[j].conj() + p[i] * v[j].conj();
                a[(i, j)] -= upd;
            }
        }
        a[(k + 1, k)] = alpha;
        a[(k, k + 1)] = alpha.conj();
        for i in k + 2..n {
            a[(i, k)] = Complex64::ZERO;
            a[(k, i)] = Complex64::ZERO;
        }
        // q <- q H
        for i in 0..n {
            let mut s = Complex64::ZERO;
            for j in k + 1..n {
                s += q[(i, j)] * v[j];
            }
            s *= tau;
            for j in k + 1..n {
                let vj = v[j].conj();
                q[(i, j)] -= s * vj;
            }
        }
    }

    // Realify the subdiagonal by a diagonal phase similarity folded into q.
    let mut d = vec![0.0_f64; n];
    let mut e = vec![0.0_f64; n];
    let mut ph = Complex64::ONE;
    for k in 0..n {
        d[k] = a[(k, k)].re;
        if k + 1 < n {
            let ek = a[(k + 1, k)];
            let next = if ek.norm() == 0.0 {
                ph
            } else {
                ph * (ek / ek.norm())
            };
            e[k + 1] = ek.norm();
            for i in 0..n {
                q[(i, k + 1)] *= next;
            }
            ph = next;
        }
    }

    ql_implicit(&mut d, &mut e, &mut q)?;
    Ok((d, q))
}

/// Implicit-shift QL on a real symmetric tridiagonal, rotating the complex
/// column basis along (EISPACK tql2 lineage). On input `e[i]` couples
/// `d[i-1]` and `d[i]`; `e[0]` is ignored.
pub(crate) fn ql_implicit(d: &mut [f64], e: &mut [f64], v: &mut CMat) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Numerical(alloc::string::String::from(
                    "tridiagonal QL failed to converge",
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = libm::hypot(g, 1.0);
            let sg = if g >= 0.0 { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + sg);
            let (mut s, mut c) = (1.0_f64, 1.0_f64);
            let mut p = 0.0_f64;
            let mut i = m as isize - 1;
            while i >= l as isize {
                let iu = i as usize;
                let f = s * e[iu];
                let b = c * e[iu];
                r = libm::hypot(f, g);
                e[iu + 1] = r;
                if r == 0.0 {
                    d[iu + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[iu + 1] - p;
                r = (d[iu] - g) * s + 2.0 * c * b;
                p = s * r;
                d[iu + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let fk = v[(k, iu + 1)];
                    let vk = v[(k, iu)];
                    v[(k, iu + 1)] = vk * s + fk * c;
                    v[(k, iu)] = vk * c - fk * s;
                }
                i -= 1;
            }
            if r == 0.0 && i >= l as isize {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
