//! Compact matrix groups built from unitary, torus and vector factors, their
//! complexifications, and the symmetric spaces `L \ L^C`.
//!
//! Every group is realized block-diagonally inside `GL(n, C)`. A `unitary(k)`
//! factor contributes one `k x k` block; `torus(k)` and `vector(k)` contribute
//! `k` blocks of size one. Vector factors use the embedding
//! `t -> diag(-2 pi i t)`, so their action on flat space carries the weight
//! `exp(-2 pi i t)`; their group elements are only tracked through this image.
//!
//! Lie algebra elements are stored as real coordinates in an orthonormal basis
//! of the Ad-invariant inner product `<u, v> = w Re tr(u v^*)`, where the weight
//! `w` of each factor is a user-chosen scale. Complexified elements use complex
//! coordinates in the same basis.

use crate::error::{Error, Result};
use nalgebra::{ComplexField, DMatrix, DVector, Dyn, SymmetricEigen, SVD};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type CMat = DMatrix<C64>;
pub type RVec = DVector<f64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };
pub const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Factor {
    Unitary(usize),
    Torus(usize),
    Vector(usize),
}

impl Factor {
    pub fn size(&self) -> usize {
        match *self {
            Factor::Unitary(k) | Factor::Torus(k) | Factor::Vector(k) => k,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Factor::Unitary(k) => k * k,
            Factor::Torus(k) | Factor::Vector(k) => k,
        }
    }
}

/// A diagonal block of the matrix realization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Slot {
    pub offset: usize,
    pub size: usize,
    pub factor: usize,
    /// Weight `w` of `Re tr(u v^*)` on this block.
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct GroupSpec {
    factors: Vec<Factor>,
    scales: Vec<f64>,
    slots: Vec<Slot>,
    basis: Vec<CMat>,
    basis_slot: Vec<usize>,
    n: usize,
}

impl PartialEq for GroupSpec {
    fn eq(&self, other: &Self) -> bool {
        self.factors == other.factors && self.scales == other.scales
    }
}

impl GroupSpec {
    pub fn new(factors: Vec<Factor>) -> Self {
        let scales = vec![1.0; factors.len()];
        Self::with_scales(factors, scales)
    }

    /// Factors with per-factor inner-product scales.
    pub fn with_scales(factors: Vec<Factor>, scales: Vec<f64>) -> Self {
        assert_eq!(factors.len(), scales.len());
        let n: usize = factors.iter().map(Factor::size).sum();
        let mut slots = Vec::new();
        let mut basis = Vec::new();
        let mut basis_slot = Vec::new();
        let mut off = 0;
        for (fi, (f, &s)) in factors.iter().zip(&scales).enumerate() {
            assert!(s > 0.0, "inner-product scale must be positive");
            match *f {
                Factor::Unitary(k) => {
                    let c = 1.0 / s.sqrt();
                    slots.push(Slot { offset: off, size: k, factor: fi, weight: s });
                    let si = slots.len() - 1;
                    for j in 0..k {
                        let mut m = CMat::zeros(n, n);
                        m[(off + j, off + j)] = I * c;
                        basis.push(m);
                        basis_slot.push(si);
                    }
                    let c2 = c / 2f64.sqrt();
                    for j in 0..k {
                        for l in (j + 1)..k {
                            let mut m = CMat::zeros(n, n);
                            m[(off + j, off + l)] = C64::new(c2, 0.0);
                            m[(off + l, off + j)] = C64::new(-c2, 0.0);
                            basis.push(m);
                            basis_slot.push(si);
                            let mut m = CMat::zeros(n, n);
                            m[(off + j, off + l)] = I * c2;
                            m[(off + l, off + j)] = I * c2;
                            basis.push(m);
                            basis_slot.push(si);
                        }
                    }
                }
                Factor::Torus(k) => {
                    for j in 0..k {
                        slots.push(Slot { offset: off + j, size: 1, factor: fi, weight: s });
                        let mut m = CMat::zeros(n, n);
                        m[(off + j, off + j)] = I / s.sqrt();
                        basis.push(m);
                        basis_slot.push(slots.len() - 1);
                    }
                }
                Factor::Vector(k) => {
                    let w = s / (4.0 * PI * PI);
                    for j in 0..k {
                        slots.push(Slot { offset: off + j, size: 1, factor: fi, weight: w });
                        let mut m = CMat::zeros(n, n);
                        m[(off + j, off + j)] = C64::new(0.0, -2.0 * PI / s.sqrt());
                        basis.push(m);
                        basis_slot.push(slots.len() - 1);
                    }
                }
            }
            off += f.size();
        }
        GroupSpec { factors, scales, slots, basis, basis_slot, n }
    }

    pub fn unitary(k: usize) -> Self {
        Self::new(vec![Factor::Unitary(k)])
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// Real dimension of the Lie algebra.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Size of the block-diagonal matrix realization.
    pub fn matrix_size(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> &[CMat] {
        &self.basis
    }

    pub fn is_abelian(&self) -> bool {
        self.factors.iter().all(|f| !matches!(f, Factor::Unitary(k) if *k > 1))
    }

    /// Slot index of the slot containing matrix row `r`.
    pub fn slot_of_row(&self, r: usize) -> usize {
        self.slots.iter().position(|s| r >= s.offset && r < s.offset + s.size).unwrap()
    }

    pub fn identity(&self) -> CMat {
        CMat::identity(self.n, self.n)
    }

    pub fn to_matrix(&self, coords: &RVec) -> CMat {
        assert_eq!(coords.len(), self.dim());
        let mut m = CMat::zeros(self.n, self.n);
        for (c, b) in coords.iter().zip(&self.basis) {
            if *c != 0.0 {
                m += b * C64::new(*c, 0.0);
            }
        }
        m
    }

    pub fn to_matrix_c(&self, coords: &CVec) -> CMat {
        assert_eq!(coords.len(), self.dim());
        let mut m = CMat::zeros(self.n, self.n);
        for (c, b) in coords.iter().zip(&self.basis) {
            if *c != C64::new(0.0, 0.0) {
                m += b * *c;
            }
        }
        m
    }

    /// Orthogonal projection of a matrix onto the real Lie algebra, in coordinates.
    pub fn coords(&self, m: &CMat) -> RVec {
        RVec::from_iterator(
            self.dim(),
            self.basis.iter().zip(&self.basis_slot).map(|(b, &si)| {
                let s = &self.slots[si];
                s.weight * frob_dot_block(m, b, s.offset, s.size)
            }),
        )
    }

    /// Complex-linear coordinates of an element of the complexified algebra.
    pub fn coords_c(&self, z: &CMat) -> CVec {
        let zs = z.adjoint();
        let a = (z - &zs) * C64::new(0.5, 0.0);
        let b = (z + &zs) * C64::new(0.0, -0.5);
        let ca = self.coords(&a);
        let cb = self.coords(&b);
        CVec::from_iterator(self.dim(), ca.iter().zip(cb.iter()).map(|(x, y)| C64::new(*x, *y)))
    }

    /// Ad-invariant inner product of two algebra elements given as matrices.
    pub fn inner_mat(&self, u: &CMat, v: &CMat) -> f64 {
        self.slots.iter().map(|s| s.weight * frob_dot_block(u, v, s.offset, s.size)).sum()
    }

    /// Hermitian norm squared `sum_slots w |m|_F^2` of a block-diagonal matrix.
    pub fn norm2_mat(&self, m: &CMat) -> f64 {
        self.slots
            .iter()
            .map(|s| {
                let mut acc = 0.0;
                for i in 0..s.size {
                    for j in 0..s.size {
                        acc += m[(s.offset + i, s.offset + j)].norm_sqr();
                    }
                }
                s.weight * acc
            })
            .sum()
    }

    pub fn bracket(&self, u: &RVec, v: &RVec) -> RVec {
        let a = self.to_matrix(u);
        let b = self.to_matrix(v);
        self.coords(&(&a * &b - &b * &a))
    }

    /// `Ad_g` on complex coordinates.
    pub fn adjoint_c(&self, g: &CMat, m: &CVec) -> Result<CVec> {
        let gi = inverse(g)?;
        Ok(self.coords_c(&(g * self.to_matrix_c(m) * gi)))
    }

    /// `exp` of a real algebra element.
    pub fn exp(&self, xi: &RVec) -> CMat {
        exp_skew(&self.to_matrix(xi))
    }

    /// `exp(i xi)` for real `xi`, a positive Hermitian element of `L^C`.
    pub fn exp_i(&self, xi: &RVec) -> CMat {
        exp_hermitian(&(self.to_matrix(xi) * I))
    }

    /// `exp` of a complexified algebra element.
    pub fn exp_c(&self, z: &CVec) -> CMat {
        self.to_matrix_c(z).exp()
    }

    /// Orthonormal basis (columns, in coordinates) of the fixed subspace of the
    /// coadjoint action, identified with the center under the inner product.
    pub fn center_basis(&self) -> DMatrix<f64> {
        let d = self.dim();
        if d == 0 {
            return DMatrix::zeros(0, 0);
        }
        let mut stack = DMatrix::<f64>::zeros(d * d, d);
        for b in 0..d {
            for a in 0..d {
                let mut ea = RVec::zeros(d);
                ea[a] = 1.0;
                let mut eb = RVec::zeros(d);
                eb[b] = 1.0;
                let c = self.bracket(&eb, &ea);
                for r in 0..d {
                    stack[(b * d + r, a)] = c[r];
                }
            }
        }
        kernel_basis(&stack, RANK_TOL)
    }

    /// Is the matrix (numerically) an element of the compact group?
    pub fn is_compact(&self, g: &CMat, tol: f64) -> bool {
        let e = g.adjoint() * g - self.identity();
        e.iter().all(|x| x.norm() < tol)
    }
}

fn frob_dot_block(a: &CMat, b: &CMat, off: usize, size: usize) -> f64 {
    let mut acc = 0.0;
    for i in off..off + size {
        for j in off..off + size {
            let x = a[(i, j)];
            let y = b[(i, j)];
            acc += x.re * y.re + x.im * y.im;
        }
    }
    acc
}

/// A group element with a flag recording whether it lies in the compact form.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    pub matrix: CMat,
    pub compact: bool,
}

impl GroupElement {
    pub fn compact(matrix: CMat) -> Self {
        GroupElement { matrix, compact: true }
    }

    pub fn complex(matrix: CMat) -> Self {
        GroupElement { matrix, compact: false }
    }
}

/// Moment-map style values: three real components in a dual basis, with the
/// second and third packed as one complex vector.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentValue {
    pub real: RVec,
    pub complex: CVec,
}

impl MomentValue {
    pub fn zeros(d: usize) -> Self {
        MomentValue { real: RVec::zeros(d), complex: CVec::zeros(d) }
    }

    pub fn from_triple(t: [RVec; 3]) -> Self {
        let complex = CVec::from_iterator(
            t[1].len(),
            t[1].iter().zip(t[2].iter()).map(|(a, b)| C64::new(*a, *b)),
        );
        let [r, _, _] = t;
        MomentValue { real: r, complex }
    }

    pub fn triple(&self) -> [RVec; 3] {
        [self.real.clone(), self.complex.map(|c| c.re), self.complex.map(|c| c.im)]
    }

    pub fn dim(&self) -> usize {
        self.real.len()
    }

    pub fn norm(&self) -> f64 {
        (self.real.norm_squared() + self.complex.norm_squared()).sqrt()
    }

    pub fn sub(&self, o: &MomentValue) -> MomentValue {
        MomentValue { real: &self.real - &o.real, complex: &self.complex - &o.complex }
    }

    pub fn add(&self, o: &MomentValue) -> MomentValue {
        MomentValue { real: &self.real + &o.real, complex: &self.complex + &o.complex }
    }
}

/// Componentwise coadjoint action `Ad*_g` on a moment value, using the
/// identification of the algebra with its dual by the inner product.
pub fn coadjoint(group: &GroupSpec, g: &CMat, m: &MomentValue) -> Result<MomentValue> {
    if m.dim() != group.dim() {
        return Err(Error::DimensionMismatch { expected: group.dim(), got: m.dim() });
    }
    let gi = inverse(g)?;
    let r = group.to_matrix(&m.real);
    let real = group.coords(&(g * r * &gi));
    let complex = group.coords_c(&(g * group.to_matrix_c(&m.complex) * gi));
    Ok(MomentValue { real, complex })
}

/// Inner product on coordinates; the basis is orthonormal.
pub fn inner(u: &RVec, v: &RVec) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), got: v.len() });
    }
    Ok(u.dot(v))
}

/// Complex bilinear extension of the inner product.
pub fn inner_c(u: &CVec, v: &CVec) -> Result<C64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), got: v.len() });
    }
    Ok(u.iter().zip(v.iter()).map(|(a, b)| a * b).sum())
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn eigh(h: &CMat) -> (RVec, CMat) {
    let e = SymmetricEigen::new(hermitian_part(h));
    (e.eigenvalues, e.eigenvectors)
}

/// Apply a scalar function to a Hermitian matrix through its eigendecomposition.
pub fn hermitian_fn(h: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = eigh(h);
    let d = CMat::from_diagonal(&vals.map(|x| C64::new(f(x), 0.0)));
    &vecs * d * vecs.adjoint()
}

pub fn exp_hermitian(h: &CMat) -> CMat {
    hermitian_fn(h, f64::exp)
}

/// `exp` of a skew-Hermitian matrix.
pub fn exp_skew(x: &CMat) -> CMat {
    let (vals, vecs) = eigh(&(x * (-I)));
    let d = CMat::from_diagonal(&vals.map(|l| (I * l).exp()));
    &vecs * d * vecs.adjoint()
}

pub fn log_posdef(p: &CMat) -> Result<CMat> {
    let (vals, vecs) = eigh(p);
    if vals.iter().any(|&x| x <= 0.0 || !x.is_finite()) {
        return Err(Error::Singular);
    }
    let d = CMat::from_diagonal(&vals.map(|x| C64::new(x.ln(), 0.0)));
    Ok(&vecs * d * vecs.adjoint())
}

pub fn pow_posdef(p: &CMat, e: f64) -> Result<CMat> {
    let (vals, vecs) = eigh(p);
    if vals.iter().any(|&x| x <= 0.0 || !x.is_finite()) {
        return Err(Error::Singular);
    }
    let d = CMat::from_diagonal(&vals.map(|x| C64::new(x.powf(e), 0.0)));
    Ok(&vecs * d * vecs.adjoint())
}

pub fn inverse(g: &CMat) -> Result<CMat> {
    g.clone().try_inverse().ok_or(Error::Singular)
}

/// Principal logarithm of a matrix without eigenvalues on the closed negative
/// real axis, by inverse scaling and squaring.
pub fn logm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let id = CMat::identity(n, n);
    let mut x = a.clone();
    let mut k = 0;
    while (&x - &id).norm() > 0.25 {
        x = sqrtm(&x)?;
        k += 1;
        if k > 60 {
            return Err(Error::NoConvergence { iterations: k, residual: (&x - &id).norm() });
        }
    }
    // log(1 + y) via the series in z = y / (2 + y): log = 2 atanh(z).
    let y = &x - &id;
    let z = inverse(&(&id * C64::new(2.0, 0.0) + &y))? * &y;
    let z2 = &z * &z;
    let mut term = z.clone();
    let mut acc = z.clone();
    for j in 1..40 {
        term = &term * &z2;
        acc += &term * C64::new(1.0 / (2 * j + 1) as f64, 0.0);
        if term.norm() < 1e-18 {
            break;
        }
    }
    Ok(acc * C64::new(2f64.powi(k as i32 + 1), 0.0))
}

/// Principal square root by the Denman–Beavers iteration.
pub fn sqrtm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = CMat::identity(n, n);
    for _ in 0..100 {
        let yi = inverse(&y)?;
        let zi = inverse(&z)?;
        let yn = (&y + &zi) * C64::new(0.5, 0.0);
        let zn = (&z + &yi) * C64::new(0.5, 0.0);
        let delta = (&yn - &y).norm();
        y = yn;
        z = zn;
        if delta <= 1e-15 * y.norm().max(1.0) {
            return Ok(y);
        }
    }
    Err(Error::NoConvergence { iterations: 100, residual: f64::NAN })
}

/// Polar decomposition `g = l exp(i xi)` with `l` compact and `xi` real.
pub fn polar_decompose(group: &GroupSpec, g: &CMat) -> Result<(GroupElement, RVec)> {
    let svd = svd(g);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(smin > 1e-300) || !smin.is_finite() {
        return Err(Error::Singular);
    }
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let l = &u * &vt;
    let logs = svd.singular_values.map(|x| C64::new(x.ln(), 0.0));
    let logp = vt.adjoint() * CMat::from_diagonal(&logs) * &vt;
    let xi = group.coords(&(logp * (-I)));
    Ok((GroupElement::compact(l), xi))
}

/// Representative `exp(i t xi) base` of the coset on the geodesic through `base`.
pub fn geodesic_point(group: &GroupSpec, base: &CMat, xi: &RVec, t: f64) -> GroupElement {
    GroupElement::complex(group.exp_i(&(xi * t)) * base)
}

/// Symmetric-space representative `g^* g` of the coset `L g`.
pub fn coset_representative(g: &CMat) -> CMat {
    g.adjoint() * g
}

/// Riemannian distance between cosets `L g1` and `L g2`, normalized so that
/// `dist(L, L exp(i xi)) = |xi|`.
pub fn coset_distance(group: &GroupSpec, g1: &CMat, g2: &CMat) -> Result<f64> {
    let h1 = coset_representative(g1);
    let h2 = coset_representative(g2);
    posdef_distance(group, &h1, &h2).map(|d| 0.5 * d)
}

/// Distance `|log(h1^{-1/2} h2 h1^{-1/2})|` between positive representatives,
/// weighted per block.
pub fn posdef_distance(group: &GroupSpec, h1: &CMat, h2: &CMat) -> Result<f64> {
    let mut acc = 0.0;
    for s in group.slots() {
        let a = h1.view((s.offset, s.offset), (s.size, s.size)).into_owned();
        let b = h2.view((s.offset, s.offset), (s.size, s.size)).into_owned();
        let ai = pow_posdef(&a, -0.5)?;
        let m = &ai * b * &ai;
        let (vals, _) = eigh(&m);
        if vals.iter().any(|&x| x <= 0.0) {
            return Err(Error::Singular);
        }
        acc += s.weight * vals.iter().map(|x| x.ln().powi(2)).sum::<f64>();
    }
    Ok(acc.sqrt())
}

/// Thin SVD by one-sided Jacobi rotations, singular values in decreasing order.
///
/// nalgebra's bidiagonal SVD can return factors that do not recompose the input
/// (errors of order one) on small matrices with exact zero rows, which the
/// moment-map linearizations of quiver presets produce. Jacobi rotations are
/// accurate on every input and cheap at the sizes used here.
pub fn svd<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> SVD<T, Dyn, Dyn> {
    if m.nrows() < m.ncols() {
        let t = svd(&m.adjoint());
        return SVD { u: t.v_t.map(|v| v.adjoint()), v_t: t.u.map(|u| u.adjoint()), singular_values: t.singular_values };
    }
    let (rows, n) = m.shape();
    if n == 0 {
        return SVD { u: Some(DMatrix::zeros(rows, 0)), v_t: Some(DMatrix::zeros(0, 0)), singular_values: DVector::zeros(0) };
    }
    let mut a = m.clone();
    let mut v = DMatrix::<T>::identity(n, n);
    for _ in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.clone().modulus();
                if g == 0.0 || g <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Rotate u_q by the phase of gamma so the 2x2 Gram block is real.
                let phase = gamma.conjugate().unscale(g);
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for mat in [&mut a, &mut v] {
                    for r in 0..mat.nrows() {
                        let x = mat[(r, p)].clone();
                        let y = mat[(r, q)].clone() * phase.clone();
                        mat[(r, p)] = x.clone().scale(c) - y.clone().scale(sn);
                        mat[(r, q)] = x.scale(sn) + y.scale(c);
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| sigma[y].total_cmp(&sigma[x]));
    let top = sigma[order[0]];
    let mut u = DMatrix::<T>::zeros(rows, n);
    let mut filled = 0;
    for (k, &j) in order.iter().enumerate() {
        if sigma[j] > 1e-300 && sigma[j] > 1e-15 * top {
            u.set_column(k, &a.column(j).unscale(sigma[j]));
            filled = k + 1;
        }
    }
    // Complete U on the numerical null space with Gram-Schmidt over unit vectors.
    let mut e = 0;
    for k in filled..n {
        loop {
            let mut w = DVector::<T>::zeros(rows);
            w[e] = T::one();
            e += 1;
            for _ in 0..2 {
                for c in 0..k {
                    let proj = u.column(c).dotc(&w);
                    w -= u.column(c) * proj;
                }
            }
            let norm = w.norm();
            if norm > 1e-8 {
                u.set_column(k, &w.unscale(norm));
                break;
            }
        }
    }
    let singular_values = DVector::from_iterator(n, order.iter().map(|&j| sigma[j]));
    let v_sorted = DMatrix::from_columns(&order.iter().map(|&j| v.column(j).into_owned()).collect::<Vec<_>>());
    SVD { u: Some(u), v_t: Some(v_sorted.adjoint()), singular_values }
}

/// Orthonormal basis of the numerical kernel of a real matrix.
pub fn kernel_basis(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let ncols = m.ncols();
    if ncols == 0 {
        return DMatrix::zeros(0, 0);
    }
    // Pad to at least square so the SVD exposes a full right basis.
    let rows = m.nrows().max(ncols);
    let mut padded = DMatrix::<f64>::zeros(rows, ncols);
    padded.view_mut((0, 0), (m.nrows(), ncols)).copy_from(m);
    let svd = svd(&padded);
    let vt = svd.v_t.unwrap();
    let cols: Vec<RVec> = (0..ncols)
        .filter(|&i| svd.singular_values[i] <= tol)
        .map(|i| vt.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(ncols, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Numerical rank with an absolute singular-value threshold.
pub fn rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    svd(m).singular_values.iter().filter(|&&s| s > tol).count()
}

/// Orthonormal basis of the column span.
pub fn range_basis(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = svd(m);
    let u = svd.u.unwrap();
    let cols: Vec<RVec> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > tol)
        .map(|i| u.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(m.nrows(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}
