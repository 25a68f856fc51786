//! Flat quaternionic spaces `M = V ⊕ V*` with linear actions, their three
//! symplectic forms and hyper-Kähler moment maps, and the homomorphism
//! `rho: H -> G x G` for the Hilbert, quiver, toric and modification presets.
//!
//! A point stores coordinates `z` of `V` and `w` of `V*`, paired so that
//! `sum_j z_j w_j` is the duality pairing. The flat structure is
//!
//! * metric `g(X, Y) = 2 Re(z_X^* z_Y + w_X^* w_Y)`,
//! * `I1 (z, w) = (i z, i w)`, `I2 (z, w) = (i conj(w), -i conj(z))`,
//!   `I3 = I1 I2`, so that `omega_2 + i omega_3 = 2i dz ∧ dw`,
//! * `omega_i = g(I_i ., .)`.
//!
//! With this normalization `phi = |z|^2/2 + |w|^2/2` is a Kähler potential
//! with `omega_1 = 2i ∂∂̄ phi`, moment maps satisfy
//! `d mu_i(xi)(X) = omega_i(xi*, X)` and `mu(0) = 0`, and the Hilbert-scheme
//! closed forms `mu_1 = i(B*B - AA*)` etc. hold verbatim under the pairing
//! `Re tr(u v^*)`.

use crate::error::{Error, Result};
use crate::lie::{inverse, kernel_basis, rank, CMat, CVec, Factor, GroupSpec, MomentValue, RVec, I, RANK_TOL};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// `Hom(C^source, C^target)` where each end is a slot of `H` or the trivial line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomBlock {
    pub source: Option<usize>,
    pub target: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Representation {
    blocks: Vec<HomBlock>,
    shapes: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    n: usize,
}

impl Representation {
    pub fn new(h: &GroupSpec, blocks: Vec<HomBlock>) -> Self {
        let size = |s: Option<usize>| s.map_or(1, |i| h.slots()[i].size);
        let shapes: Vec<(usize, usize)> =
            blocks.iter().map(|b| (size(b.target), size(b.source))).collect();
        let mut offsets = Vec::new();
        let mut n = 0;
        for &(r, c) in &shapes {
            offsets.push(n);
            n += r * c;
        }
        Representation { blocks, shapes, offsets, n }
    }

    /// Complex dimension of `V`.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[HomBlock] {
        &self.blocks
    }

    /// Block `b` of `z` as a matrix.
    pub fn block(&self, v: &CVec, b: usize) -> CMat {
        let (r, c) = self.shapes[b];
        CMat::from_column_slice(r, c, &v.as_slice()[self.offsets[b]..self.offsets[b] + r * c])
    }

    fn set_block(&self, v: &mut CVec, b: usize, m: &CMat) {
        let (r, c) = self.shapes[b];
        v.as_mut_slice()[self.offsets[b]..self.offsets[b] + r * c].copy_from_slice(m.as_slice());
    }

    fn slot_block(h: &GroupSpec, m: &CMat, s: Option<usize>) -> CMat {
        match s {
            Some(i) => {
                let sl = h.slots()[i];
                m.view((sl.offset, sl.offset), (sl.size, sl.size)).into_owned()
            }
            None => CMat::identity(1, 1),
        }
    }

    fn slot_block_alg(h: &GroupSpec, m: &CMat, s: Option<usize>) -> CMat {
        match s {
            Some(_) => Self::slot_block(h, m, s),
            None => CMat::zeros(1, 1),
        }
    }

    /// Matrix of the infinitesimal action of an algebra matrix on `z`.
    pub fn generator(&self, h: &GroupSpec, xm: &CMat) -> CMat {
        let mut out = CMat::zeros(self.n, self.n);
        for (b, blk) in self.blocks.iter().enumerate() {
            let xt = Self::slot_block_alg(h, xm, blk.target);
            let xs = Self::slot_block_alg(h, xm, blk.source);
            let (r, c) = self.shapes[b];
            let off = self.offsets[b];
            for col in 0..c {
                for row in 0..r {
                    let mut e = CMat::zeros(r, c);
                    e[(row, col)] = C64::new(1.0, 0.0);
                    let img = &xt * &e - &e * &xs;
                    for cc in 0..c {
                        for rr in 0..r {
                            out[(off + rr + cc * r, off + row + col * r)] = img[(rr, cc)];
                        }
                    }
                }
            }
        }
        out
    }

    /// Action of a group element of `H^C` on `z` (`w` transforms contragrediently).
    pub fn act_z(&self, h: &GroupSpec, g: &CMat, z: &CVec) -> Result<CVec> {
        let mut out = CVec::zeros(self.n);
        for b in 0..self.blocks.len() {
            let gt = Self::slot_block(h, g, self.blocks[b].target);
            let gs = Self::slot_block(h, g, self.blocks[b].source);
            let y = self.block(z, b);
            self.set_block(&mut out, b, &(gt * y * inverse(&gs)?));
        }
        Ok(out)
    }

    pub fn act_w(&self, h: &GroupSpec, g: &CMat, w: &CVec) -> Result<CVec> {
        let mut out = CVec::zeros(self.n);
        for b in 0..self.blocks.len() {
            let gt = Self::slot_block(h, g, self.blocks[b].target);
            let gs = Self::slot_block(h, g, self.blocks[b].source);
            let wt = self.block(w, b);
            // W -> gs W gt^{-1}, stored transposed.
            self.set_block(&mut out, b, &(inverse(&gt)?.transpose() * wt * gs.transpose()));
        }
        Ok(out)
    }
}

/// A point (or tangent vector) of flat `M = V ⊕ V*`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuaternionicPoint {
    pub z: CVec,
    pub w: CVec,
}

impl QuaternionicPoint {
    pub fn zeros(n: usize) -> Self {
        QuaternionicPoint { z: CVec::zeros(n), w: CVec::zeros(n) }
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// `|z|^2 + |w|^2`.
    pub fn norm2(&self) -> f64 {
        self.z.norm_squared() + self.w.norm_squared()
    }

    pub fn add(&self, o: &Self) -> Self {
        QuaternionicPoint { z: &self.z + &o.z, w: &self.w + &o.w }
    }

    pub fn sub(&self, o: &Self) -> Self {
        QuaternionicPoint { z: &self.z - &o.z, w: &self.w - &o.w }
    }

    pub fn scale(&self, s: f64) -> Self {
        QuaternionicPoint { z: &self.z * C64::new(s, 0.0), w: &self.w * C64::new(s, 0.0) }
    }

    /// Real coordinates `(Re z, Im z, Re w, Im w)`.
    pub fn to_real(&self) -> RVec {
        let n = self.dim();
        let mut v = RVec::zeros(4 * n);
        for j in 0..n {
            v[j] = self.z[j].re;
            v[n + j] = self.z[j].im;
            v[2 * n + j] = self.w[j].re;
            v[3 * n + j] = self.w[j].im;
        }
        v
    }

    pub fn from_real(v: &RVec) -> Self {
        let n = v.len() / 4;
        QuaternionicPoint {
            z: CVec::from_fn(n, |j, _| C64::new(v[j], v[n + j])),
            w: CVec::from_fn(n, |j, _| C64::new(v[2 * n + j], v[3 * n + j])),
        }
    }
}

/// The flat metric `2 Re <X, Y>`.
pub fn metric(x: &QuaternionicPoint, y: &QuaternionicPoint) -> f64 {
    2.0 * (x.z.dotc(&y.z).re + x.w.dotc(&y.w).re)
}

/// Apply `I_axis` (axis in 1..=3).
pub fn complex_structure(axis: usize, x: &QuaternionicPoint) -> QuaternionicPoint {
    match axis {
        1 => QuaternionicPoint { z: &x.z * I, w: &x.w * I },
        2 => QuaternionicPoint { z: x.w.map(|c| c.conj() * I), w: x.z.map(|c| -(c.conj() * I)) },
        3 => QuaternionicPoint { z: x.w.map(|c| -c.conj()), w: x.z.map(|c| c.conj()) },
        _ => panic!("complex structure axis must be 1, 2 or 3"),
    }
}

/// `omega_axis(X, Y)` on flat space.
pub fn symplectic_form(axis: usize, x: &QuaternionicPoint, y: &QuaternionicPoint) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: y.dim() });
    }
    if !(1..=3).contains(&axis) {
        return Err(Error::Invalid(format!("axis {axis}")));
    }
    Ok(metric(&complex_structure(axis, x), y))
}

/// Real `4n x 4n` matrix of `I_axis` in the coordinates of `to_real`.
pub fn complex_structure_matrix(axis: usize, n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(4 * n, 4 * n);
    for j in 0..4 * n {
        let mut e = RVec::zeros(4 * n);
        e[j] = 1.0;
        let img = complex_structure(axis, &QuaternionicPoint::from_real(&e)).to_real();
        m.set_column(j, &img);
    }
    m
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PresetTag {
    Hilbert { k: usize },
    Quiver { split_dims: Vec<usize>, projection: Vec<usize>, edges: Vec<(usize, usize)> },
    Toric { n: usize, kernel: Vec<Vec<i64>> },
    Modification { normal: Vec<usize> },
}

/// A linear action of `H` on flat space together with `rho: H -> G x G`.
#[derive(Clone, Debug)]
pub struct ActionSpec {
    pub h: GroupSpec,
    pub g: GroupSpec,
    pub rep: Representation,
    /// `rho` on Lie algebras, `2 dim G x dim H`, rows `[rho_0; rho_1]`.
    pub rho: DMatrix<f64>,
    pub preset: PresetTag,
    generators: Vec<CMat>,
    h_rho: DMatrix<f64>,
}

impl ActionSpec {
    pub fn new(h: GroupSpec, g: GroupSpec, rep: Representation, rho: DMatrix<f64>, preset: PresetTag) -> Result<Self> {
        if rho.nrows() != 2 * g.dim() || rho.ncols() != h.dim() {
            return Err(Error::DimensionMismatch { expected: 2 * g.dim() * h.dim(), got: rho.len() });
        }
        let generators = h.basis().iter().map(|b| rep.generator(&h, b)).collect();
        let dg = g.dim();
        let diff = rho.rows(0, dg) - rho.rows(dg, dg);
        let h_rho = kernel_basis(&diff, RANK_TOL);
        Ok(ActionSpec { h, g, rep, rho, preset, generators, h_rho })
    }

    /// Generator of basis element `a` of `H` on `z`.
    pub fn generator(&self, a: usize) -> &CMat {
        &self.generators[a]
    }

    pub fn generators(&self) -> &[CMat] {
        &self.generators
    }

    pub fn rho0(&self) -> DMatrix<f64> {
        self.rho.rows(0, self.g.dim()).into_owned()
    }

    pub fn rho1(&self) -> DMatrix<f64> {
        self.rho.rows(self.g.dim(), self.g.dim()).into_owned()
    }

    /// Orthonormal basis (columns in `H` coordinates) of the Lie algebra of
    /// `H_rho = rho^{-1}(Δ_G)`; this is the inclusion `iota`.
    pub fn h_rho_basis(&self) -> &DMatrix<f64> {
        &self.h_rho
    }

    /// `rho` evaluated on a complexified algebra element, as a pair of matrices.
    pub fn rho_alg_c(&self, xi: &CVec) -> (CMat, CMat) {
        let dg = self.g.dim();
        let r0 = self.rho0().map(|x| C64::new(x, 0.0));
        let r1 = self.rho1().map(|x| C64::new(x, 0.0));
        let _ = dg;
        (self.g.to_matrix_c(&(r0 * xi)), self.g.to_matrix_c(&(r1 * xi)))
    }

    /// `rho(exp(xi))` for complex `xi`.
    pub fn rho_exp(&self, xi: &CVec) -> (CMat, CMat) {
        let (a, b) = self.rho_alg_c(xi);
        (a.exp(), b.exp())
    }

    /// Checks `rho([u, v]) = [rho u, rho v]` on all basis pairs.
    pub fn lie_hom_defect(&self) -> f64 {
        let d = self.h.dim();
        let dg = self.g.dim();
        let mut worst: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                let mut ea = RVec::zeros(d);
                ea[a] = 1.0;
                let mut eb = RVec::zeros(d);
                eb[b] = 1.0;
                let lhs = &self.rho * self.h.bracket(&ea, &eb);
                let ra = &self.rho * &ea;
                let rb = &self.rho * &eb;
                let c0 = self.g.bracket(&ra.rows(0, dg).into_owned(), &rb.rows(0, dg).into_owned());
                let c1 = self.g.bracket(&ra.rows(dg, dg).into_owned(), &rb.rows(dg, dg).into_owned());
                worst = worst.max((lhs.rows(0, dg) - c0).amax()).max((lhs.rows(dg, dg) - c1).amax());
            }
        }
        worst
    }

    /// Rank of `rho(h) + Δ_g` inside `g ⊕ g`; full rank means `rho-bar` is onto.
    pub fn rho_bar_rank(&self) -> (usize, usize) {
        let dg = self.g.dim();
        let dh = self.h.dim();
        let mut m = DMatrix::zeros(2 * dg, dh + dg);
        m.view_mut((0, 0), (2 * dg, dh)).copy_from(&self.rho);
        for j in 0..dg {
            m[(j, dh + j)] = 1.0;
            m[(dg + j, dh + j)] = 1.0;
        }
        (rank(&m, RANK_TOL), 2 * dg)
    }

    pub fn rho_bar_surjective(&self) -> bool {
        let (r, want) = self.rho_bar_rank();
        r == want
    }

    pub fn zero_point(&self) -> QuaternionicPoint {
        QuaternionicPoint::zeros(self.rep.dim())
    }

    /// Action of `h in H^C` given as a block-diagonal matrix.
    pub fn act(&self, g: &CMat, x: &QuaternionicPoint) -> Result<QuaternionicPoint> {
        Ok(QuaternionicPoint { z: self.rep.act_z(&self.h, g, &x.z)?, w: self.rep.act_w(&self.h, g, &x.w)? })
    }

    /// Infinitesimal action of a complexified algebra element (`H` coordinates).
    pub fn infinitesimal_c(&self, xi: &CVec, x: &QuaternionicPoint) -> QuaternionicPoint {
        let n = self.rep.dim();
        let mut xz = CMat::zeros(n, n);
        for (c, gmat) in xi.iter().zip(&self.generators) {
            if *c != C64::new(0.0, 0.0) {
                xz += gmat * *c;
            }
        }
        let xw = -xz.transpose();
        QuaternionicPoint { z: &xz * &x.z, w: &xw * &x.w }
    }

    /// Fundamental vector field `xi*_x` for real `xi`.
    pub fn infinitesimal(&self, xi: &RVec, x: &QuaternionicPoint) -> QuaternionicPoint {
        self.infinitesimal_c(&xi.map(|c| C64::new(c, 0.0)), x)
    }

    /// Hyper-Kähler moment map of `H`.
    pub fn moment_hat(&self, x: &QuaternionicPoint) -> Result<MomentValue> {
        if x.dim() != self.rep.dim() {
            return Err(Error::DimensionMismatch { expected: self.rep.dim(), got: x.dim() });
        }
        let d = self.h.dim();
        let mut real = RVec::zeros(d);
        let mut complex = CVec::zeros(d);
        for a in 0..d {
            let xm = &self.generators[a];
            let xz = xm * &x.z;
            let xbw = xm.map(|c| c.conj()) * &x.w;
            let s = x.z.dotc(&xz) + x.w.dotc(&xbw);
            real[a] = (I * s).re;
            complex[a] = I * 2.0 * x.w.dot(&xz);
        }
        Ok(MomentValue { real, complex })
    }

    /// `iota^* mu-hat`: the moment map of `H_rho`, in the `h_rho_basis` coordinates.
    pub fn moment_restricted(&self, x: &QuaternionicPoint) -> Result<MomentValue> {
        Ok(self.restrict(&self.moment_hat(x)?))
    }

    /// Pull back a value on `h*` to `h_rho*`.
    pub fn restrict(&self, m: &MomentValue) -> MomentValue {
        let bt = self.h_rho.transpose();
        let btc = bt.map(|c| C64::new(c, 0.0));
        MomentValue { real: &bt * &m.real, complex: btc * &m.complex }
    }

    /// `rho^*` of a value on `(g ⊕ g)*`.
    pub fn rho_star(&self, nu: &MomentValue) -> MomentValue {
        let rt = self.rho.transpose();
        let rtc = rt.map(|c| C64::new(c, 0.0));
        MomentValue { real: &rt * &nu.real, complex: rtc * &nu.complex }
    }

    /// `sigma(x, p) = mu-hat(x) + rho^* nu(p)` given the value `nu(p)`.
    pub fn sigma_moment(&self, x: &QuaternionicPoint, nu: &MomentValue) -> Result<MomentValue> {
        if nu.dim() != 2 * self.g.dim() {
            return Err(Error::DimensionMismatch { expected: 2 * self.g.dim(), got: nu.dim() });
        }
        Ok(self.moment_hat(x)?.add(&self.rho_star(nu)))
    }

    /// Real `4n x dim` matrix whose columns are the Killing fields of the basis.
    pub fn killing_matrix(&self, x: &QuaternionicPoint, basis: &DMatrix<f64>) -> DMatrix<f64> {
        let n4 = 4 * self.rep.dim();
        let mut k = DMatrix::zeros(n4, basis.ncols());
        for j in 0..basis.ncols() {
            let xi = basis.column(j).into_owned();
            k.set_column(j, &self.infinitesimal(&xi, x).to_real());
        }
        k
    }
}

/// Lie algebra map that copies `H` slots into `G` slots (`None` is the identity element).
pub fn slot_map(h: &GroupSpec, g: &GroupSpec, map: &[Option<usize>]) -> DMatrix<f64> {
    assert_eq!(map.len(), g.slots().len());
    let mut m = DMatrix::zeros(g.dim(), h.dim());
    for (a, b) in h.basis().iter().enumerate() {
        let mut img = CMat::zeros(g.matrix_size(), g.matrix_size());
        for (gs, src) in g.slots().iter().zip(map) {
            if let Some(hs) = src {
                let hsl = h.slots()[*hs];
                assert_eq!(hsl.size, gs.size, "slot sizes differ");
                let blk = b.view((hsl.offset, hsl.offset), (hsl.size, hsl.size)).into_owned();
                img.view_mut((gs.offset, gs.offset), (gs.size, gs.size)).copy_from(&blk);
            }
        }
        m.set_column(a, &g.coords(&img));
    }
    m
}

fn stack_rho(r0: DMatrix<f64>, r1: DMatrix<f64>) -> DMatrix<f64> {
    let (dg, dh) = r0.shape();
    let mut m = DMatrix::zeros(2 * dg, dh);
    m.view_mut((0, 0), (dg, dh)).copy_from(&r0);
    m.view_mut((dg, 0), (dg, dh)).copy_from(&r1);
    m
}

/// Hilbert scheme of `k` points: `M = End(C^k)^2 ⊕ C^k ⊕ (C^k)*`,
/// `H = U(k) x U(k)`, `G = U(k)`, `rho = id`.
pub fn hilbert(k: usize) -> Result<ActionSpec> {
    hilbert_scaled(k, 1.0)
}

pub fn hilbert_scaled(k: usize, scale: f64) -> Result<ActionSpec> {
    if k == 0 {
        return Err(Error::Invalid("k must be positive".into()));
    }
    let h = GroupSpec::with_scales(vec![Factor::Unitary(k), Factor::Unitary(k)], vec![scale, scale]);
    let g = GroupSpec::with_scales(vec![Factor::Unitary(k)], vec![scale]);
    let rep = Representation::new(
        &h,
        vec![HomBlock { source: Some(1), target: Some(0) }, HomBlock { source: None, target: Some(0) }],
    );
    let rho = stack_rho(slot_map(&h, &g, &[Some(0)]), slot_map(&h, &g, &[Some(1)]));
    ActionSpec::new(h, g, rep, rho, PresetTag::Hilbert { k })
}

/// Assemble a Hilbert-preset point from `(A, B, p, q)`, `q` given as a row.
pub fn hilbert_point(a: &CMat, b: &CMat, p: &CVec, q: &CVec) -> QuaternionicPoint {
    let k = a.nrows();
    let mut z = CVec::zeros(k * k + k);
    let mut w = CVec::zeros(k * k + k);
    z.as_mut_slice()[..k * k].copy_from_slice(a.as_slice());
    z.as_mut_slice()[k * k..].copy_from_slice(p.as_slice());
    w.as_mut_slice()[..k * k].copy_from_slice(b.transpose().as_slice());
    w.as_mut_slice()[k * k..].copy_from_slice(q.as_slice());
    QuaternionicPoint { z, w }
}

/// Split a Hilbert-preset point into `(A, B, p, q)`.
pub fn hilbert_blocks(k: usize, x: &QuaternionicPoint) -> (CMat, CMat, CVec, CVec) {
    let a = CMat::from_column_slice(k, k, &x.z.as_slice()[..k * k]);
    let bt = CMat::from_column_slice(k, k, &x.w.as_slice()[..k * k]);
    let p = CVec::from_column_slice(&x.z.as_slice()[k * k..]);
    let q = CVec::from_column_slice(&x.w.as_slice()[k * k..]);
    (a, bt.transpose(), p, q)
}

/// `tau(x)` for diagonal Hilbert data: `(|a|^2 - |b|^2, 2 Re(ab), 2 Im(ab))` per entry.
pub fn tau(a: &[C64], b: &[C64]) -> [RVec; 3] {
    let k = a.len();
    [
        RVec::from_fn(k, |j, _| a[j].norm_sqr() - b[j].norm_sqr()),
        RVec::from_fn(k, |j, _| 2.0 * (a[j] * b[j]).re),
        RVec::from_fn(k, |j, _| 2.0 * (a[j] * b[j]).im),
    ]
}

/// Quiver preset. `split_dims[j]` is the dimension at vertex `j` of the split
/// quiver, `projection[j]` its image vertex, and `edges` are `(source, target)`
/// pairs of split vertices. `G` has `N_k - 1` copies of `U(v_k)` for every
/// vertex `k` with `N_k >= 2` preimages.
pub fn quiver(split_dims: &[usize], projection: &[usize], edges: &[(usize, usize)]) -> Result<ActionSpec> {
    if split_dims.len() != projection.len() || split_dims.is_empty() {
        return Err(Error::Invalid("dimension vector and projection differ in length".into()));
    }
    let nv = projection.iter().max().unwrap() + 1;
    let mut fibers: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (j, &k) in projection.iter().enumerate() {
        fibers[k].push(j);
    }
    if fibers.iter().any(Vec::is_empty) {
        return Err(Error::Invalid("projection is not surjective".into()));
    }
    for f in &fibers {
        if f.iter().any(|&j| split_dims[j] != split_dims[f[0]]) {
            return Err(Error::Invalid("inconsistent dimension vector".into()));
        }
    }
    for &(s, t) in edges {
        if s >= split_dims.len() || t >= split_dims.len() {
            return Err(Error::Invalid("edge endpoint out of range".into()));
        }
    }
    let h = GroupSpec::new(split_dims.iter().map(|&d| Factor::Unitary(d)).collect());
    let mut gf = Vec::new();
    let mut m0 = Vec::new();
    let mut m1 = Vec::new();
    for f in fibers.iter().filter(|f| f.len() >= 2) {
        for w in f.windows(2) {
            gf.push(Factor::Unitary(split_dims[w[0]]));
            m0.push(Some(w[0]));
            m1.push(Some(w[1]));
        }
    }
    let g = GroupSpec::new(gf);
    let rep = Representation::new(
        &h,
        edges.iter().map(|&(s, t)| HomBlock { source: Some(s), target: Some(t) }).collect(),
    );
    let rho = stack_rho(slot_map(&h, &g, &m0), slot_map(&h, &g, &m1));
    ActionSpec::new(
        h,
        g,
        rep,
        rho,
        PresetTag::Quiver {
            split_dims: split_dims.to_vec(),
            projection: projection.to_vec(),
            edges: edges.to_vec(),
        },
    )
}

/// Toric preset: `H = R^N` acting by `x_j exp(-2 pi i t_j)`, `G = R^N / k`
/// with `k` spanned by the integer `kernel` vectors, `rho(v) = (v mod k, 0)`.
pub fn toric(n: usize, kernel: &[Vec<i64>]) -> Result<ActionSpec> {
    if kernel.iter().any(|v| v.len() != n) {
        return Err(Error::Invalid("kernel vector length differs from N".into()));
    }
    let kmat = if kernel.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_fn(n, kernel.len(), |i, j| kernel[j][i] as f64)
    };
    if rank(&kmat, RANK_TOL) != kernel.len() {
        return Err(Error::Invalid("kernel vectors are linearly dependent".into()));
    }
    // Orthonormal basis of the complement of k: kernel of k^T.
    let comp = kernel_basis(&kmat.transpose(), RANK_TOL);
    let comp = if kernel.is_empty() { DMatrix::identity(n, n) } else { comp };
    let dg = comp.ncols();
    let h = GroupSpec::new(vec![Factor::Vector(n)]);
    let g = GroupSpec::new(vec![Factor::Vector(dg)]);
    let rep = Representation::new(&h, (0..n).map(|j| HomBlock { source: None, target: Some(j) }).collect());
    let rho = stack_rho(comp.transpose(), DMatrix::zeros(dg, n));
    ActionSpec::new(h, g, rep, rho, PresetTag::Toric { n, kernel: kernel.to_vec() })
}

/// Modification preset: `G = H / H_rho` for `H_rho` the product of the
/// `normal` factors, and `rho(h) = (1, h H_rho)`.
pub fn modification(h: GroupSpec, blocks: Vec<HomBlock>, normal: &[usize]) -> Result<ActionSpec> {
    if normal.iter().any(|&f| f >= h.factors().len()) {
        return Err(Error::Invalid("normal factor index out of range".into()));
    }
    let keep: Vec<usize> = (0..h.factors().len()).filter(|f| !normal.contains(f)).collect();
    let g = GroupSpec::with_scales(
        keep.iter().map(|&f| h.factors()[f]).collect(),
        keep.iter().map(|&f| h.scales()[f]).collect(),
    );
    let map: Vec<Option<usize>> = {
        let mut v = Vec::new();
        for &f in &keep {
            for (si, s) in h.slots().iter().enumerate() {
                if s.factor == f {
                    v.push(Some(si));
                }
            }
        }
        v
    };
    let rep = Representation::new(&h, blocks);
    let rho = stack_rho(DMatrix::zeros(g.dim(), h.dim()), slot_map(&h, &g, &map));
    ActionSpec::new(h, g, rep, rho, PresetTag::Modification { normal: normal.to_vec() })
}

/// Orthonormal frame `{y, y', y''}` used to rotate the complex structures.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame(pub [[f64; 3]; 3]);

/// Frame with first axis `y`: `I_y = sum y_i I_i` becomes the first structure.
pub fn rotate_structure(y: [f64; 3]) -> Result<Frame> {
    let ny = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
    if (ny - 1.0).abs() > 1e-12 {
        return Err(Error::Invalid(format!("|y| = {ny}, expected 1")));
    }
    let mut e = [0.0, 1.0, 0.0];
    if y[1].abs() > 0.9 {
        e = [0.0, 0.0, 1.0];
    }
    let d = e[0] * y[0] + e[1] * y[1] + e[2] * y[2];
    let mut y1 = [e[0] - d * y[0], e[1] - d * y[1], e[2] - d * y[2]];
    let n1 = (y1[0] * y1[0] + y1[1] * y1[1] + y1[2] * y1[2]).sqrt();
    for c in &mut y1 {
        *c /= n1;
    }
    let y2 = [
        y[1] * y1[2] - y[2] * y1[1],
        y[2] * y1[0] - y[0] * y1[2],
        y[0] * y1[1] - y[1] * y1[0],
    ];
    Ok(Frame([y, y1, y2]))
}

impl Frame {
    /// Rotated moment value: component `r` is `sum_i frame[r][i] mu_i`.
    pub fn rotate_moment(&self, m: &MomentValue) -> MomentValue {
        let t = m.triple();
        let comp = |r: usize| &t[0] * self.0[r][0] + &t[1] * self.0[r][1] + &t[2] * self.0[r][2];
        MomentValue::from_triple([comp(0), comp(1), comp(2)])
    }

    /// Rotated complex structure `sum_i frame[r][i] I_i` applied to `x`.
    pub fn complex_structure(&self, r: usize, x: &QuaternionicPoint) -> QuaternionicPoint {
        let mut out = QuaternionicPoint::zeros(x.dim());
        for i in 0..3 {
            out = out.add(&complex_structure(i + 1, x).scale(self.0[r][i]));
        }
        out
    }

    pub fn symplectic_form(&self, r: usize, x: &QuaternionicPoint, y: &QuaternionicPoint) -> f64 {
        metric(&self.complex_structure(r, x), y)
    }
}
