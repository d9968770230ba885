//! Polynomial nonlinearities, their structural constants, and the smallness gate.

use serde::Serialize;

use crate::domain::{DiscreteDomain, StateField};
use crate::error::{invalid, Error, Result};
use crate::linalg::dot;
use crate::scalar::{c, Scalar};

/// `c0 + c1 s + c2 s^2 + c3 s^3`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cubic<T> {
    pub coeffs: [T; 4],
}

impl<T: Scalar> Cubic<T> {
    pub fn eval(&self, s: T) -> T {
        let [c0, c1, c2, c3] = self.coeffs;
        ((c3 * s + c2) * s + c1) * s + c0
    }

    pub fn deriv(&self, s: T) -> T {
        let [_, c1, c2, c3] = self.coeffs;
        (c::<T>(3.0) * c3 * s + c2 + c2) * s + c1
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|&x| x != T::zero()).unwrap_or(0)
    }

    /// `inf p'`, finite for admissible polynomials.
    fn min_derivative(&self) -> T {
        let [_, c1, c2, c3] = self.coeffs;
        if c3 > T::zero() {
            c1 - c2 * c2 / (c::<T>(3.0) * c3)
        } else {
            c1
        }
    }

    /// `max |p'|` on `[-r, r]`.
    fn max_abs_derivative(&self, r: T) -> T {
        let [_, _, c2, c3] = self.coeffs;
        let mut m = self.deriv(r).abs().max(self.deriv(-r).abs());
        if c3 != T::zero() {
            let v = -c2 / (c::<T>(3.0) * c3);
            if v.abs() <= r {
                m = m.max(self.deriv(v).abs());
            }
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NonlinearitySpec<T> {
    pub f: Cubic<T>,
    pub g: Cubic<T>,
    /// Growth constants: `|p'(s)| <= ell (1 + |s|^r)`.
    pub ell1: T,
    pub ell2: T,
    pub r1: T,
    pub r2: T,
    /// `f' >= -m_f`, `g' >= -m_g`.
    pub m_f: T,
    pub m_g: T,
    /// `f(s) s >= -kappa1 s^2 - kappa2`, `g(s) s >= -kappa3 s^2 - kappa4`.
    pub kappa: [T; 4],
}

pub fn make_nonlinearity<T: Scalar>(f_coeffs: &[T], g_coeffs: &[T]) -> Result<NonlinearitySpec<T>> {
    let f = admissible("f", f_coeffs)?;
    let g = admissible("g", g_coeffs)?;
    let (ell1, r1) = growth(&f);
    let (ell2, r2) = growth(&g);
    let (k1, k2) = dissipation(&f);
    let (k3, k4) = dissipation(&g);
    Ok(NonlinearitySpec {
        ell1,
        ell2,
        r1,
        r2,
        m_f: T::zero().max(-f.min_derivative()),
        m_g: T::zero().max(-g.min_derivative()),
        kappa: [k1, k2, k3, k4],
        f,
        g,
    })
}

fn admissible<T: Scalar>(name: &str, coeffs: &[T]) -> Result<Cubic<T>> {
    if coeffs.iter().any(|x| !x.is_finite()) {
        return invalid(format!("{name} has non-finite coefficients"));
    }
    let deg = coeffs.iter().rposition(|&x| x != T::zero()).unwrap_or(0);
    if deg >= 4 {
        return invalid(format!("{name} has degree {deg}; at most cubic is supported"));
    }
    let mut a = [T::zero(); 4];
    for (slot, &x) in a.iter_mut().zip(coeffs) {
        *slot = x;
    }
    if deg == 2 {
        return invalid(format!("{name} has even degree 2 and is not bounded below in derivative"));
    }
    if deg == 3 && a[3] < T::zero() {
        return invalid(format!("{name} has negative leading coefficient {} (not dissipative)", a[3]));
    }
    Ok(Cubic { coeffs: a })
}

fn growth<T: Scalar>(p: &Cubic<T>) -> (T, T) {
    let [_, c1, c2, c3] = p.coeffs;
    if c3 != T::zero() {
        // 2|s| <= 1 + s^2 gives |p'| <= max(3|c3| + |c2|, |c1| + |c2|) (1 + s^2).
        ((c::<T>(3.0) * c3.abs() + c2.abs()).max(c1.abs() + c2.abs()), c(2.0))
    } else {
        (c1.abs(), T::one())
    }
}

/// Smallest `ka = max(0, -c1)` and the matching `kb` with `p(s) s >= -ka s^2 - kb`.
fn dissipation<T: Scalar>(p: &Cubic<T>) -> (T, T) {
    let [c0, c1, c2, c3] = p.coeffs;
    let mut ka = T::zero().max(-c1);
    if c3 == T::zero() && c1 + ka == T::zero() && c0 != T::zero() {
        ka += T::one();
    }
    let a = c1 + ka;
    // q(s) = c3 s^4 + c2 s^3 + a s^2 + c0 s
    let q = |s: T| (((c3 * s + c2) * s + a) * s + c0) * s;
    let min_q = if c3 == T::zero() {
        if a > T::zero() {
            -c0 * c0 / (c::<T>(4.0) * a)
        } else {
            T::zero()
        }
    } else {
        let dq = [c0, a + a, c::<T>(3.0) * c2, c::<T>(4.0) * c3];
        real_roots_cubic(dq).into_iter().map(q).fold(T::zero(), T::min)
    };
    (ka, T::zero().max(-min_q))
}

/// Real roots of `a0 + a1 s + a2 s^2 + a3 s^3` (`a3 != 0`) by bracketing and bisection.
fn real_roots_cubic<T: Scalar>(a: [T; 4]) -> Vec<T> {
    let p = |s: T| ((a[3] * s + a[2]) * s + a[1]) * s + a[0];
    let bound = T::one() + (a[0].abs().max(a[1].abs()).max(a[2].abs())) / a[3].abs();
    let n = 4000;
    let mut roots = Vec::new();
    let mut x0 = -bound;
    let mut p0 = p(x0);
    for i in 1..=n {
        let x1 = -bound + (bound + bound) * T::of_usize(i) / T::of_usize(n);
        let p1 = p(x1);
        if p0 == T::zero() {
            roots.push(x0);
        } else if p0 * p1 < T::zero() {
            let (mut lo, mut hi, mut plo) = (x0, x1, p0);
            for _ in 0..200 {
                let mid = (lo + hi) * c(0.5);
                let pm = p(mid);
                if pm == T::zero() || mid == lo || mid == hi {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if plo * pm < T::zero() {
                    hi = mid;
                } else {
                    lo = mid;
                    plo = pm;
                }
            }
            roots.push((lo + hi) * c(0.5));
        }
        x0 = x1;
        p0 = p1;
    }
    if p0 == T::zero() {
        roots.push(x0);
    }
    // Double roots touch zero without a sign change; the vertex of p' covers them.
    let disc_v = -a[2] / (c::<T>(3.0) * a[3]);
    roots.push(disc_v);
    roots
}

/// `F(U) = (f(u), g(v) - omega beta v)`.
pub fn eval_f<T: Scalar>(u: &StateField<T>, spec: &NonlinearitySpec<T>, omega: T, beta: T) -> StateField<T> {
    let wb = omega * beta;
    StateField {
        bulk: u.bulk.iter().map(|&x| spec.f.eval(x)).collect(),
        boundary: u.boundary.iter().map(|&x| spec.g.eval(x) - wb * x).collect(),
    }
}

/// `F_0(U) = F(U) + m U`, monotone for `m >= decomposition_shift`.
pub fn eval_f0<T: Scalar>(u: &StateField<T>, spec: &NonlinearitySpec<T>, omega: T, beta: T, m: T) -> StateField<T> {
    let mut out = eval_f(u, spec, omega, beta);
    out.axpy(m, u);
    out
}

/// `max(m_f, m_g + omega beta) + 1e-6`.
pub fn decomposition_shift<T: Scalar>(spec: &NonlinearitySpec<T>, omega: T, beta: T) -> T {
    spec.m_f.max(spec.m_g + omega * beta) + c(1e-6)
}

/// Lipschitz constant of `F` on `|s| <= radius`.
pub fn lipschitz_on_ball<T: Scalar>(spec: &NonlinearitySpec<T>, omega: T, beta: T, radius: T) -> T {
    let wb = omega * beta;
    let g_tilde = Cubic { coeffs: [spec.g.coeffs[0], spec.g.coeffs[1] - wb, spec.g.coeffs[2], spec.g.coeffs[3]] };
    spec.f.max_abs_derivative(radius).max(g_tilde.max_abs_derivative(radius))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmallnessReport {
    pub c_f: f64,
    pub threshold: f64,
    pub c_embed: f64,
    pub passed: bool,
    /// `min(2 (threshold - c_f), delta)`; nonpositive when the gate fails.
    pub m0: f64,
    /// `2 (kappa2 + kappa4) / m0`, only when the gate passes.
    pub p0: Option<f64>,
}

/// Gate `max(kappa1, kappa3 + beta) < omega / c_embed`.
pub fn check_smallness<T: Scalar>(spec: &NonlinearitySpec<T>, omega: T, beta: T, c_embed: T, delta: T) -> Result<SmallnessReport> {
    if !(c_embed > T::zero()) {
        return invalid(format!("embedding constant {c_embed} must be positive"));
    }
    let [k1, k2, k3, k4] = spec.kappa.map(|k| k.as_f64());
    let c_f = k1.max(k3 + beta.as_f64());
    let threshold = omega.as_f64() / c_embed.as_f64();
    let passed = c_f < threshold;
    let m0 = (2.0 * (threshold - c_f)).min(delta.as_f64());
    Ok(SmallnessReport { c_f, threshold, c_embed: c_embed.as_f64(), passed, m0, p0: passed.then(|| 2.0 * (k2 + k4) / m0) })
}

/// Largest `|U|^2 / |U|^2_{V1}` over discrete fields: top eigenvalue of `M x = lambda K x`
/// by inverse power iteration.
pub fn estimate_embedding_constant<T: Scalar>(d: &DiscreteDomain<T>, alpha: T, beta: T) -> Result<T> {
    if !(alpha >= T::zero() && beta >= T::zero()) || (alpha == T::zero() && beta == T::zero()) {
        return invalid("embedding constant needs alpha, beta >= 0 with alpha > 0 or beta > 0");
    }
    let k = d.assemble(T::zero(), T::one(), alpha, beta);
    let chol = k.cholesky()?;
    let m = d.node_mass();
    let tol = c::<T>(1e-8).max(T::epsilon() * c(100.0));
    let mut x: Vec<T> = (0..d.n_nodes()).map(|i| T::one() + c::<T>(0.1) * T::of_usize(i).sin()).collect();
    let mut last = T::nan();
    for _ in 0..20000 {
        let mx: Vec<T> = x.iter().zip(&m).map(|(&a, &b)| a * b).collect();
        let y = chol.solve(&mx);
        let norm = dot(&y, &y).sqrt();
        x = y.into_iter().map(|v| v / norm).collect();
        let mx: Vec<T> = x.iter().zip(&m).map(|(&a, &b)| a * b).collect();
        let kx = k.matvec(&x);
        let lambda = dot(&x, &mx) / dot(&x, &kx);
        let res = mx.iter().zip(&kx).map(|(&a, &b)| (a - lambda * b) * (a - lambda * b)).sum::<T>().sqrt()
            / (lambda * dot(&kx, &kx).sqrt());
        if res <= tol {
            return Ok(lambda);
        }
        last = res;
    }
    Err(Error::Solve(format!("power iteration did not converge (residual {last})")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_minus_linear_constants() {
        let s = make_nonlinearity(&[0.0, -1.0, 0.0, 1.0], &[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(s.m_f, 1.0);
        assert_eq!(s.kappa[0], 1.0);
        assert_eq!(s.kappa[1], 0.0);
        assert_eq!(s.m_g, 0.0);
        assert_eq!(s.kappa[2..], [0.0, 0.0]);
        assert_eq!(s.r1, 2.0);
    }

    #[test]
    fn rejects_bad_polynomials() {
        assert!(make_nonlinearity(&[0.0, 0.0, 0.0, -1.0], &[0.0]).is_err());
        assert!(make_nonlinearity(&[0.0, 0.0, 0.0, 0.0, 1.0], &[0.0]).is_err());
        assert!(make_nonlinearity(&[0.0, 0.0, 1.0], &[0.0]).is_err());
    }

    #[test]
    fn f_offsets_boundary() {
        let spec = make_nonlinearity(&[0.0, 1.0], &[0.0, 1.0]).unwrap();
        let u = StateField { bulk: vec![2.0; 3], boundary: vec![3.0; 2] };
        let f = eval_f(&u, &spec, 0.5, 2.0);
        assert_eq!(f.bulk, vec![2.0; 3]);
        assert_eq!(f.boundary, vec![0.0; 2]);
        let cube = make_nonlinearity(&[0.0, 0.0, 0.0, 1.0], &[0.0]).unwrap();
        assert_eq!(eval_f(&u, &cube, 0.5, 0.0).bulk[0], 8.0);
    }

    #[test]
    fn smallness_examples() {
        let cube = make_nonlinearity(&[0.0, 0.0, 0.0, 1.0], &[0.0, 0.0, 0.0, 1.0]).unwrap();
        let r = check_smallness(&cube, 0.5, 0.1, 1.0, 1.0).unwrap();
        assert!(r.passed);
        assert!((r.c_f - 0.1).abs() < 1e-15 && (r.m0 - 0.8).abs() < 1e-12);
        assert_eq!(r.p0, Some(0.0));
        let r = check_smallness(&cube, 0.5, 0.1, 1.0, 0.3).unwrap();
        assert!((r.m0 - 0.3).abs() < 1e-15);
        let lin = make_nonlinearity(&[0.0, -0.5], &[0.0]).unwrap();
        assert!(!check_smallness(&lin, 0.5, 0.0, 1.0, 1.0).unwrap().passed);
    }
}
