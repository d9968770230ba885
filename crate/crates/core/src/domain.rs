//! Closed-grid discretization of the bulk and its boundary.
//!
//! Fields live on every node of the closed grid (bulk values) plus a separate
//! array indexed along the boundary chain (boundary values). Trace-compatible
//! fields carry identical values in both places.
//!
//! The Wentzell operator is built so that, for trace-compatible `U` and `V`,
//! `<A U, V>` in the product space equals `u^T K v` with `K` the assembled
//! stiffness of the first-order energy. Symmetry and the identity
//! `<A U, U> = |U|^2_{V1}` therefore hold up to rounding.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{BandCholesky, Stencil, SymBand};
use crate::scalar::{c, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Interval,
    Square,
}

#[derive(Clone, Debug)]
pub struct DiscreteDomain<T> {
    kind: DomainKind,
    n_axis: usize,
    h: T,
    bulk_nodes: Vec<[T; 2]>,
    /// Node index of each boundary-chain position.
    boundary_index: Vec<usize>,
    /// Chain position of each node, if it lies on the boundary.
    boundary_slot: Vec<Option<usize>>,
    dx_weights: Vec<T>,
    dsigma_weights: Vec<T>,
    /// Gradient energy as `sum c_e (u_a - u_b)^2` over grid edges.
    edges: Vec<(usize, usize, T)>,
    laplacian: Stencil<T>,
    laplace_beltrami: Stencil<T>,
    normal_derivative: Stencil<T>,
}

/// Builds the closed grid on the unit interval or unit square.
pub fn build_domain<T: Scalar>(kind: DomainKind, n_bulk: usize) -> Result<DiscreteDomain<T>> {
    if n_bulk < 8 {
        return invalid(format!("n_bulk = {n_bulk}, need at least 8 nodes per axis"));
    }
    let n = n_bulk;
    let h = T::one() / T::of_usize(n - 1);
    let half = c::<T>(0.5);
    match kind {
        DomainKind::Interval => {
            let bulk_nodes = (0..n).map(|i| [T::of_usize(i) * h, T::zero()]).collect();
            let mut dx = vec![h; n];
            dx[0] = h * half;
            dx[n - 1] = h * half;
            let edges = (0..n - 1).map(|i| (i, i + 1, T::one() / h)).collect();
            let boundary_index = vec![0, n - 1];
            let mut nd = Stencil::new(2, n);
            let inv2h = T::one() / (h + h);
            for (k, [a, b, cc]) in [(0, [0, 1, 2]), (1, [n - 1, n - 2, n - 3])] {
                nd.add(k, a, c::<T>(3.0) * inv2h);
                nd.add(k, b, c::<T>(-4.0) * inv2h);
                nd.add(k, cc, inv2h);
            }
            Ok(DiscreteDomain::finish(
                kind,
                n,
                h,
                bulk_nodes,
                boundary_index,
                dx,
                vec![T::one(), T::one()],
                edges,
                Stencil::new(2, 2),
                nd,
            ))
        }
        DomainKind::Square => {
            let id = |i: usize, j: usize| j * n + i;
            let mut bulk_nodes = Vec::with_capacity(n * n);
            let mut dx = Vec::with_capacity(n * n);
            for j in 0..n {
                for i in 0..n {
                    bulk_nodes.push([T::of_usize(i) * h, T::of_usize(j) * h]);
                    let fx = if i == 0 || i == n - 1 { half } else { T::one() };
                    let fy = if j == 0 || j == n - 1 { half } else { T::one() };
                    dx.push(h * h * fx * fy);
                }
            }
            let mut edges = Vec::with_capacity(2 * n * (n - 1));
            for j in 0..n {
                for i in 0..n - 1 {
                    let w = if j == 0 || j == n - 1 { half } else { T::one() };
                    edges.push((id(i, j), id(i + 1, j), w));
                }
            }
            for j in 0..n - 1 {
                for i in 0..n {
                    let w = if i == 0 || i == n - 1 { half } else { T::one() };
                    edges.push((id(i, j), id(i, j + 1), w));
                }
            }
            // Counterclockwise chain starting at the origin corner.
            let mut boundary_index = Vec::with_capacity(4 * (n - 1));
            boundary_index.extend((0..n - 1).map(|i| id(i, 0)));
            boundary_index.extend((0..n - 1).map(|j| id(n - 1, j)));
            boundary_index.extend((1..n).rev().map(|i| id(i, n - 1)));
            boundary_index.extend((1..n).rev().map(|j| id(0, j)));
            let nb = boundary_index.len();

            let mut lb = Stencil::new(nb, nb);
            let ih2 = T::one() / (h * h);
            for k in 0..nb {
                lb.add(k, (k + nb - 1) % nb, ih2);
                lb.add(k, k, -(ih2 + ih2));
                lb.add(k, (k + 1) % nb, ih2);
            }

            // One-sided second-order outward derivative; corners average both normals.
            let mut nd = Stencil::new(nb, n * n);
            let inv2h = T::one() / (h + h);
            for (k, &node) in boundary_index.iter().enumerate() {
                let (i, j) = (node % n, node / n);
                let mut dirs: Vec<[usize; 3]> = Vec::with_capacity(2);
                if i == 0 {
                    dirs.push([id(0, j), id(1, j), id(2, j)]);
                }
                if i == n - 1 {
                    dirs.push([id(n - 1, j), id(n - 2, j), id(n - 3, j)]);
                }
                if j == 0 {
                    dirs.push([id(i, 0), id(i, 1), id(i, 2)]);
                }
                if j == n - 1 {
                    dirs.push([id(i, n - 1), id(i, n - 2), id(i, n - 3)]);
                }
                let share = T::one() / T::of_usize(dirs.len());
                for [a, b, cc] in dirs {
                    nd.add(k, a, c::<T>(3.0) * inv2h * share);
                    nd.add(k, b, c::<T>(-4.0) * inv2h * share);
                    nd.add(k, cc, inv2h * share);
                }
            }
            Ok(DiscreteDomain::finish(
                kind,
                n,
                h,
                bulk_nodes,
                boundary_index,
                dx,
                vec![h; nb],
                edges,
                lb,
                nd,
            ))
        }
    }
}

impl<T: Scalar> DiscreteDomain<T> {
    #[allow(clippy::too_many_arguments)]
    fn finish(
        kind: DomainKind,
        n_axis: usize,
        h: T,
        bulk_nodes: Vec<[T; 2]>,
        boundary_index: Vec<usize>,
        dx_weights: Vec<T>,
        dsigma_weights: Vec<T>,
        edges: Vec<(usize, usize, T)>,
        laplace_beltrami: Stencil<T>,
        mut normal_derivative: Stencil<T>,
    ) -> Self {
        let nn = bulk_nodes.len();
        let mut boundary_slot = vec![None; nn];
        for (k, &i) in boundary_index.iter().enumerate() {
            boundary_slot[i] = Some(k);
        }
        for row in normal_derivative.rows.iter_mut() {
            row.sort_by_key(|e| e.0);
        }
        // Laplacian: -(G u)_i / w_i at interior nodes; at boundary nodes the
        // bulk closure -((G u)_b - sigma_b (d_n u)_b) / w_b.
        let mut lap = Stencil::new(nn, nn);
        for &(a, b, ce) in &edges {
            lap.add(a, a, -ce / dx_weights[a]);
            lap.add(a, b, ce / dx_weights[a]);
            lap.add(b, b, -ce / dx_weights[b]);
            lap.add(b, a, ce / dx_weights[b]);
        }
        for (k, &b) in boundary_index.iter().enumerate() {
            for &(j, v) in &normal_derivative.rows[k] {
                lap.add(b, j, dsigma_weights[k] * v / dx_weights[b]);
            }
        }
        for row in lap.rows.iter_mut() {
            row.sort_by_key(|e| e.0);
        }
        Self {
            kind,
            n_axis,
            h,
            bulk_nodes,
            boundary_index,
            boundary_slot,
            dx_weights,
            dsigma_weights,
            edges,
            laplacian: lap,
            laplace_beltrami,
            normal_derivative,
        }
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    /// Nodes per axis.
    pub fn n_axis(&self) -> usize {
        self.n_axis
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn n_nodes(&self) -> usize {
        self.bulk_nodes.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary_index.len()
    }

    pub fn bulk_nodes(&self) -> &[[T; 2]] {
        &self.bulk_nodes
    }

    pub fn boundary_nodes(&self) -> Vec<[T; 2]> {
        self.boundary_index.iter().map(|&i| self.bulk_nodes[i]).collect()
    }

    pub fn boundary_index(&self) -> &[usize] {
        &self.boundary_index
    }

    pub fn boundary_slot(&self, node: usize) -> Option<usize> {
        self.boundary_slot[node]
    }

    pub fn dx_weights(&self) -> &[T] {
        &self.dx_weights
    }

    pub fn dsigma_weights(&self) -> &[T] {
        &self.dsigma_weights
    }

    pub fn laplacian_stencil(&self) -> &Stencil<T> {
        &self.laplacian
    }

    pub fn laplace_beltrami_stencil(&self) -> &Stencil<T> {
        &self.laplace_beltrami
    }

    pub fn normal_derivative_stencil(&self) -> &Stencil<T> {
        &self.normal_derivative
    }

    /// Half-bandwidth of the assembled nodal matrices.
    pub fn bandwidth(&self) -> usize {
        match self.kind {
            DomainKind::Interval => 1,
            DomainKind::Square => self.n_axis,
        }
    }

    /// Lumped nodal mass `w_i + sigma_i`: `|U|^2 = sum m_i u_i^2` for compatible `U`.
    pub fn node_mass(&self) -> Vec<T> {
        let mut m = self.dx_weights.clone();
        for (k, &i) in self.boundary_index.iter().enumerate() {
            m[i] += self.dsigma_weights[k];
        }
        m
    }

    /// `y = a_grad (G + G_Gamma) u + a_alpha W u + a_beta Sigma u` on nodal values.
    pub fn stiffness_apply(&self, u: &[T], a_grad: T, a_alpha: T, a_beta: T) -> Vec<T> {
        let mut y: Vec<T> = u.iter().zip(&self.dx_weights).map(|(&x, &w)| a_alpha * w * x).collect();
        for &(a, b, ce) in &self.edges {
            let f = a_grad * ce * (u[a] - u[b]);
            y[a] += f;
            y[b] -= f;
        }
        let v: Vec<T> = self.boundary_index.iter().map(|&i| u[i]).collect();
        let lbv = self.laplace_beltrami.apply(&v);
        for (k, &i) in self.boundary_index.iter().enumerate() {
            let s = self.dsigma_weights[k];
            y[i] += s * (a_beta * v[k] - a_grad * lbv[k]);
        }
        y
    }

    /// Assembles `a_mass M + a_grad (G + G_Gamma) + a_alpha W + a_beta Sigma`.
    pub fn assemble(&self, a_mass: T, a_grad: T, a_alpha: T, a_beta: T) -> SymBand<T> {
        let mut k = SymBand::zeros(self.n_nodes(), self.bandwidth());
        for (i, (&w, &m)) in self.dx_weights.iter().zip(&self.node_mass()).enumerate() {
            k.add(i, i, a_mass * m + a_alpha * w);
        }
        for &(a, b, ce) in &self.edges {
            let v = a_grad * ce;
            k.add(a, a, v);
            k.add(b, b, v);
            k.add(a, b, -v);
        }
        for (kk, row) in self.laplace_beltrami.rows.iter().enumerate() {
            let i = self.boundary_index[kk];
            let s = self.dsigma_weights[kk];
            k.add(i, i, a_beta * s);
            for &(l, v) in row {
                let j = self.boundary_index[l];
                // Symmetric rows are visited twice; add half each time off the diagonal.
                if i == j {
                    k.add(i, i, -a_grad * s * v);
                } else {
                    k.add(i, j, -a_grad * s * v * c::<T>(0.5));
                }
            }
        }
        k
    }

    pub(crate) fn check_field(&self, u: &StateField<T>) -> Result<()> {
        if u.bulk.len() != self.n_nodes() || u.boundary.len() != self.n_boundary() {
            return Err(Error::ShapeMismatch(format!(
                "field has ({}, {}) values, domain has ({}, {})",
                u.bulk.len(),
                u.boundary.len(),
                self.n_nodes(),
                self.n_boundary()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_compatible(&self, u: &StateField<T>) -> Result<()> {
        self.check_field(u)?;
        if !u.is_trace_compatible(self, c(1e-10)) {
            return invalid("field is not trace-compatible (boundary values differ from bulk trace)");
        }
        Ok(())
    }
}

/// A bulk/boundary pair of nodal values.
#[derive(Clone, Debug, PartialEq)]
pub struct StateField<T> {
    pub bulk: Vec<T>,
    pub boundary: Vec<T>,
}

impl<T: Scalar> StateField<T> {
    pub fn zeros(d: &DiscreteDomain<T>) -> Self {
        Self { bulk: vec![T::zero(); d.n_nodes()], boundary: vec![T::zero(); d.n_boundary()] }
    }

    pub fn constant(d: &DiscreteDomain<T>, value: T) -> Self {
        Self { bulk: vec![value; d.n_nodes()], boundary: vec![value; d.n_boundary()] }
    }

    /// Trace-compatible field from closed-grid values.
    pub fn from_bulk(d: &DiscreteDomain<T>, bulk: Vec<T>) -> Self {
        assert_eq!(bulk.len(), d.n_nodes(), "bulk length does not match domain");
        let boundary = d.boundary_index.iter().map(|&i| bulk[i]).collect();
        Self { bulk, boundary }
    }

    /// Trace-compatible field sampled from `f(x, y)`.
    pub fn from_fn(d: &DiscreteDomain<T>, f: impl Fn(T, T) -> T) -> Self {
        Self::from_bulk(d, d.bulk_nodes.iter().map(|p| f(p[0], p[1])).collect())
    }

    pub fn is_trace_compatible(&self, d: &DiscreteDomain<T>, rel_tol: T) -> bool {
        let scale = T::one().max(self.max_abs());
        self.boundary.len() == d.n_boundary()
            && d.boundary_index
                .iter()
                .zip(&self.boundary)
                .all(|(&i, &v)| (self.bulk[i] - v).abs() <= rel_tol * scale)
    }

    pub fn max_abs(&self) -> T {
        self.bulk.iter().chain(&self.boundary).fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.bulk.iter().chain(&self.boundary).all(|x| x.is_finite())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            bulk: self.bulk.iter().map(|&x| f(x)).collect(),
            boundary: self.boundary.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scaled(&self, a: T) -> Self {
        self.map(|x| a * x)
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: T, other: &Self) {
        for (x, &y) in self.bulk.iter_mut().zip(&other.bulk) {
            *x += a * y;
        }
        for (x, &y) in self.boundary.iter_mut().zip(&other.boundary) {
            *x += a * y;
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(T::one(), other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-T::one(), other);
        out
    }

    /// Nodal load `b_i = w_i bulk_i + sigma_i boundary_i`, the test-function pairing
    /// of a (possibly incompatible) field against nodal hat functions.
    pub fn nodal_load(&self, d: &DiscreteDomain<T>) -> Vec<T> {
        let mut b: Vec<T> = self.bulk.iter().zip(&d.dx_weights).map(|(&x, &w)| w * x).collect();
        for (k, &i) in d.boundary_index.iter().enumerate() {
            b[i] += d.dsigma_weights[k] * self.boundary[k];
        }
        b
    }
}

pub fn inner_x2<T: Scalar>(u: &StateField<T>, v: &StateField<T>, d: &DiscreteDomain<T>) -> Result<T> {
    d.check_field(u)?;
    d.check_field(v)?;
    Ok(raw_inner_x2(u, v, d))
}

pub(crate) fn raw_inner_x2<T: Scalar>(u: &StateField<T>, v: &StateField<T>, d: &DiscreteDomain<T>) -> T {
    let bulk = u.bulk.iter().zip(&v.bulk).zip(&d.dx_weights).fold(T::zero(), |a, ((&x, &y), &w)| a + w * x * y);
    let bdy = u
        .boundary
        .iter()
        .zip(&v.boundary)
        .zip(&d.dsigma_weights)
        .fold(T::zero(), |a, ((&x, &y), &w)| a + w * x * y);
    bulk + bdy
}

pub fn norm_x2_sq<T: Scalar>(u: &StateField<T>, d: &DiscreteDomain<T>) -> Result<T> {
    inner_x2(u, u, d)
}

/// First-order energy of a trace-compatible field.
pub fn norm_v1_sq<T: Scalar>(u: &StateField<T>, d: &DiscreteDomain<T>, alpha: T, beta: T) -> Result<T> {
    check_coeffs(alpha, beta)?;
    d.check_compatible(u)?;
    Ok(raw_norm_v1_sq(u, d, alpha, beta))
}

pub(crate) fn raw_norm_v1_sq<T: Scalar>(u: &StateField<T>, d: &DiscreteDomain<T>, alpha: T, beta: T) -> T {
    let ku = d.stiffness_apply(&u.bulk, T::one(), alpha, beta);
    ku.iter().zip(&u.bulk).fold(T::zero(), |a, (&x, &y)| a + x * y)
}

/// Wentzell operator: `(-Lap u + alpha u, d_n u - Lap_Gamma u + beta u)`.
///
/// At boundary nodes the bulk component is the closure that makes the
/// operator symmetric in the product inner product.
pub fn apply_wentzell<T: Scalar>(u: &StateField<T>, d: &DiscreteDomain<T>, alpha: T, beta: T) -> Result<StateField<T>> {
    check_coeffs(alpha, beta)?;
    d.check_compatible(u)?;
    Ok(raw_apply_wentzell(&u.bulk, d, alpha, beta))
}

pub(crate) fn raw_apply_wentzell<T: Scalar>(u: &[T], d: &DiscreteDomain<T>, alpha: T, beta: T) -> StateField<T> {
    let ku = d.stiffness_apply(u, T::one(), alpha, beta);
    let v: Vec<T> = d.boundary_index.iter().map(|&i| u[i]).collect();
    let dn = d.normal_derivative.apply(u);
    let lbv = d.laplace_beltrami.apply(&v);
    let boundary: Vec<T> = (0..v.len()).map(|k| dn[k] - lbv[k] + beta * v[k]).collect();
    let mut bulk: Vec<T> = ku.iter().zip(&d.dx_weights).map(|(&k, &w)| k / w).collect();
    for (k, &i) in d.boundary_index.iter().enumerate() {
        bulk[i] = (ku[i] - d.dsigma_weights[k] * boundary[k]) / d.dx_weights[i];
    }
    StateField { bulk, boundary }
}

/// Surrogate second-order norm `|A U|^2`.
pub fn norm_v2_sq<T: Scalar>(u: &StateField<T>, d: &DiscreteDomain<T>, alpha: T, beta: T) -> Result<T> {
    if alpha == T::zero() && beta == T::zero() {
        return invalid("second-order norm needs alpha > 0 or beta > 0 (constants are in the kernel)");
    }
    let a = apply_wentzell(u, d, alpha, beta)?;
    Ok(raw_inner_x2(&a, &a, d))
}

fn check_coeffs<T: Scalar>(alpha: T, beta: T) -> Result<()> {
    if !(alpha >= T::zero() && beta >= T::zero()) {
        return invalid(format!("alpha = {alpha}, beta = {beta} must be nonnegative"));
    }
    Ok(())
}

/// Factored shifted system `(c0 I + c_A A)` in its symmetric nodal form
/// `(c0 M + c_A K) u = b`.
#[derive(Clone, Debug)]
pub struct ShiftedSolver<T> {
    c0: T,
    c_a: T,
    alpha: T,
    beta: T,
    factor: BandCholesky<T>,
}

impl<T: Scalar> ShiftedSolver<T> {
    pub fn new(d: &DiscreteDomain<T>, c0: T, c_a: T, alpha: T, beta: T) -> Result<Self> {
        if !(c0 > T::zero()) || !(c_a >= T::zero()) {
            return invalid(format!("shift c0 = {c0} must be positive and c_A = {c_a} nonnegative"));
        }
        check_coeffs(alpha, beta)?;
        let factor = d.assemble(c0, c_a, c_a * alpha, c_a * beta).cholesky()?;
        Ok(Self { c0, c_a, alpha, beta, factor })
    }

    pub fn solve_nodal(&self, b: &[T]) -> Vec<T> {
        self.factor.solve(b)
    }

    /// Solves for a trace-compatible `U` and checks the residual in the dual
    /// norm `sum r_i^2 / m_i` against `tol * |rhs|`.
    pub fn solve(&self, rhs: &StateField<T>, d: &DiscreteDomain<T>, tol: T) -> Result<StateField<T>> {
        d.check_field(rhs)?;
        let b = rhs.nodal_load(d);
        let u = self.factor.solve(&b);
        let au = d.stiffness_apply(&u, self.c_a, self.c_a * self.alpha, self.c_a * self.beta);
        let m = d.node_mass();
        let res = (0..u.len())
            .map(|i| {
                let r = self.c0 * m[i] * u[i] + au[i] - b[i];
                r * r / m[i]
            })
            .sum::<T>()
            .sqrt();
        let scale = raw_inner_x2(rhs, rhs, d).sqrt();
        if !res.is_finite() || res > tol * scale.max(T::min_positive_value()) {
            return Err(Error::Solve(format!("residual {res} exceeds {tol} x |rhs| = {}", tol * scale)));
        }
        Ok(StateField::from_bulk(d, u))
    }
}

/// One-shot solve of `(c0 I + c_A A^{alpha,beta}) U = rhs`.
pub fn solve_wentzell_shifted<T: Scalar>(
    c0: T,
    c_a: T,
    rhs: &StateField<T>,
    d: &DiscreteDomain<T>,
    alpha: T,
    beta: T,
) -> Result<StateField<T>> {
    ShiftedSolver::new(d, c0, c_a, alpha, beta)?.solve(rhs, d, c(1e-8))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_layout() {
        let d = build_domain::<f64>(DomainKind::Interval, 9).unwrap();
        assert_eq!(d.n_nodes(), 9);
        assert_eq!(d.boundary_nodes(), vec![[0.0, 0.0], [1.0, 0.0]]);
        assert_eq!(d.dsigma_weights(), &[1.0, 1.0]);
        assert!((d.dx_weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(d.laplace_beltrami_stencil().rows.iter().all(|r| r.is_empty()));
    }

    #[test]
    fn square_layout() {
        let d = build_domain::<f64>(DomainKind::Square, 17).unwrap();
        assert_eq!(d.n_nodes(), 289);
        assert_eq!(d.n_boundary(), 64);
        assert!((d.dsigma_weights().iter().sum::<f64>() - 4.0).abs() < 1e-12);
        assert!((d.dx_weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut seen = d.boundary_index().to_vec();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 64);
    }

    #[test]
    fn too_few_nodes() {
        assert!(build_domain::<f64>(DomainKind::Interval, 4).is_err());
    }

    #[test]
    fn constants_and_ramps() {
        let d = build_domain::<f64>(DomainKind::Interval, 33).unwrap();
        let one = StateField::constant(&d, 1.0);
        assert!((norm_x2_sq(&one, &d).unwrap() - 3.0).abs() < 1e-12);
        assert!((norm_v1_sq(&one.scaled(2.0), &d, 1.0, 2.0).unwrap() - 20.0).abs() < 1e-12);
        let a = apply_wentzell(&one, &d, 0.0, 0.0).unwrap();
        assert!(a.max_abs() < 1e-12);

        let x = StateField::from_fn(&d, |x, _| x);
        assert!((norm_v1_sq(&x, &d, 0.0, 0.0).unwrap() - 1.0).abs() < 1e-12);
        let ax = apply_wentzell(&x, &d, 0.0, 0.0).unwrap();
        assert!(ax.bulk.iter().all(|v| v.abs() < 1e-9));
        assert!((ax.boundary[0] + 1.0).abs() < 1e-9);
        assert!((ax.boundary[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn v2_rejects_degenerate() {
        let d = build_domain::<f64>(DomainKind::Interval, 9).unwrap();
        let one = StateField::constant(&d, 1.0);
        assert!(norm_v2_sq(&one, &d, 0.0, 0.0).is_err());
        assert!((norm_v2_sq(&one, &d, 1.0, 1.0).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_identity_and_constant() {
        let d = build_domain::<f64>(DomainKind::Square, 9).unwrap();
        let rhs = StateField::from_fn(&d, |x, y| x * y + 1.0);
        let u = solve_wentzell_shifted(1.0, 0.0, &rhs, &d, 0.0, 0.0).unwrap();
        for (a, b) in u.bulk.iter().zip(&rhs.bulk) {
            assert!((a - b).abs() < 1e-12);
        }
        let beta = 0.7;
        let rhs = StateField { bulk: vec![2.0; d.n_nodes()], boundary: vec![1.0 + beta; d.n_boundary()] };
        let u = solve_wentzell_shifted(1.0, 1.0, &rhs, &d, 1.0, beta).unwrap();
        assert!(u.bulk.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }
}
