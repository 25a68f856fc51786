//! Nahm's equations on `[0, 1]` and the hyper-Kähler space `N_G` they define.
//!
//! A point of `N_G` is represented by a solution path sampled on a uniform grid
//! of `N + 1` nodes. Solutions satisfy
//! `T_i' + [T_0, T_i] + [T_j, T_k] = 0` for cyclic `(i, j, k)`.
//!
//! `N_G` carries the `L^2` metric and the quaternionic structures acting on
//! tangent quadruples `(a, b, c, d)` by
//! `I1 = (-b, a, -d, c)`, `I2 = (-c, d, a, -b)`, `I3 = (-d, -c, b, a)`.
//! With these the moment map of `G x G` (gauge transformations modulo those
//! trivial at both ends) is `nu = (T(0), -T(1))`, and the complex structure
//! `I1` is the one of the chart `(Q, eta)` in `G^C x g^C`.

use crate::error::{Error, Result};
use crate::lie::{hermitian_part, inverse, pow_posdef, CMat, CVec, GroupSpec, MomentValue, RVec, I};
use num_complex::Complex64 as C64;
use nalgebra::DMatrix;

/// Blowup guard for the integrators.
pub const BLOWUP_NORM: f64 = 1e6;
/// Residual threshold for a path to count as a solution.
pub const DEFAULT_RESID_TOL: f64 = 1e-4;
const TRANSPORT_TOL: f64 = 1e-4;

fn comm(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Grid-sampled quadruple `(T0, T1, T2, T3)` on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct NahmPath {
    pub group: GroupSpec,
    /// `t[i][j]` is `T_i` at node `j`.
    pub t: [Vec<CMat>; 4],
}

impl NahmPath {
    /// Number of grid intervals.
    pub fn intervals(&self) -> usize {
        self.t[0].len() - 1
    }

    pub fn step(&self) -> f64 {
        1.0 / self.intervals() as f64
    }

    pub fn zero(group: &GroupSpec, n: usize) -> Self {
        let z = CMat::zeros(group.matrix_size(), group.matrix_size());
        Self::constant(group, n, [z.clone(), z.clone(), z.clone(), z])
    }

    pub fn constant(group: &GroupSpec, n: usize, t: [CMat; 4]) -> Self {
        let [a, b, c, d] = t;
        NahmPath {
            group: group.clone(),
            t: [vec![a; n + 1], vec![b; n + 1], vec![c; n + 1], vec![d; n + 1]],
        }
    }

    pub fn at(&self, node: usize) -> [&CMat; 4] {
        [&self.t[0][node], &self.t[1][node], &self.t[2][node], &self.t[3][node]]
    }

    /// Largest distance of a sample from the real Lie algebra.
    pub fn algebra_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for comp in &self.t {
            for m in comp {
                let back = self.group.to_matrix(&self.group.coords(m));
                worst = worst.max(max_abs(&(m - back)));
            }
        }
        worst
    }

    /// Largest sample norm.
    pub fn max_norm(&self) -> f64 {
        self.t.iter().flatten().map(|m| m.norm()).fold(0.0, f64::max)
    }
}

fn nahm_rhs(t0: &CMat, t: &[CMat; 3]) -> [CMat; 3] {
    [
        -(comm(t0, &t[0]) + comm(&t[1], &t[2])),
        -(comm(t0, &t[1]) + comm(&t[2], &t[0])),
        -(comm(t0, &t[2]) + comm(&t[0], &t[1])),
    ]
}

fn axpy3(t: &[CMat; 3], k: &[CMat; 3], h: f64) -> [CMat; 3] {
    let h = C64::new(h, 0.0);
    [&t[0] + &k[0] * h, &t[1] + &k[1] * h, &t[2] + &k[2] * h]
}

/// Classical RK4 for the initial value problem with prescribed gauge `T0(s)`.
pub fn nahm_integrate(
    group: &GroupSpec,
    init: &[CMat; 3],
    t0: impl Fn(f64) -> CMat,
    n: usize,
) -> Result<NahmPath> {
    if n < 16 {
        return Err(Error::BadGrid(n));
    }
    let h = 1.0 / n as f64;
    let mut out: [Vec<CMat>; 4] = [Vec::with_capacity(n + 1), Vec::new(), Vec::new(), Vec::new()];
    let mut cur = init.clone();
    let mut a0 = t0(0.0);
    for j in 0..n {
        let s = j as f64 * h;
        let am = t0(s + 0.5 * h);
        let a1 = t0(s + h);
        let k1 = nahm_rhs(&a0, &cur);
        let k2 = nahm_rhs(&am, &axpy3(&cur, &k1, 0.5 * h));
        let k3 = nahm_rhs(&am, &axpy3(&cur, &k2, 0.5 * h));
        let k4 = nahm_rhs(&a1, &axpy3(&cur, &k3, h));
        out[0].push(a0);
        for i in 0..3 {
            out[i + 1].push(cur[i].clone());
        }
        let c = C64::new(h / 6.0, 0.0);
        for i in 0..3 {
            cur[i] += (&k1[i] + (&k2[i] + &k3[i]) * C64::new(2.0, 0.0) + &k4[i]) * c;
        }
        let norm = cur.iter().map(|m| m.norm()).fold(0.0, f64::max);
        if !(norm <= BLOWUP_NORM) {
            return Err(Error::Blowup { s: s + h, norm });
        }
        a0 = a1;
    }
    out[0].push(a0);
    for i in 0..3 {
        out[i + 1].push(cur[i].clone());
    }
    Ok(NahmPath { group: group.clone(), t: out })
}

/// Largest defect of the Nahm equations over nodes `2..=N-2`, with
/// derivatives from the fourth-order centered five-point stencil.
pub fn nahm_residual(path: &NahmPath) -> f64 {
    let n = path.intervals();
    if n < 4 {
        return f64::INFINITY;
    }
    let inv = 1.0 / (12.0 * path.step());
    let mut worst: f64 = 0.0;
    for j in 2..=n - 2 {
        let t = [path.t[1][j].clone(), path.t[2][j].clone(), path.t[3][j].clone()];
        let rhs = nahm_rhs(&path.t[0][j], &t);
        for i in 0..3 {
            let c = &path.t[i + 1];
            let d = (&c[j - 2] - &c[j + 2] + (&c[j + 1] - &c[j - 1]) * C64::new(8.0, 0.0)) * C64::new(inv, 0.0);
            worst = worst.max((d - &rhs[i]).norm());
        }
    }
    worst
}

/// A gauge transformation sampled with its exact derivative.
#[derive(Clone, Debug)]
pub struct GaugePath {
    pub g: Vec<CMat>,
    pub dg: Vec<CMat>,
}

impl GaugePath {
    pub fn identity(group: &GroupSpec, n: usize) -> Self {
        let m = group.matrix_size();
        GaugePath { g: vec![CMat::identity(m, m); n + 1], dg: vec![CMat::zeros(m, m); n + 1] }
    }

    pub fn constant(g: &CMat, n: usize) -> Self {
        let m = g.nrows();
        GaugePath { g: vec![g.clone(); n + 1], dg: vec![CMat::zeros(m, m); n + 1] }
    }

    /// `g(s) = prod_k exp(beta_k(s) Y_k)` with `beta(k, s) = (value, derivative)`.
    pub fn product_of_exponentials(
        group: &GroupSpec,
        n: usize,
        generators: &[RVec],
        beta: impl Fn(usize, f64) -> (f64, f64),
    ) -> Self {
        let m = group.matrix_size();
        let ys: Vec<CMat> = generators.iter().map(|y| group.to_matrix(y)).collect();
        let mut g = Vec::with_capacity(n + 1);
        let mut dg = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let s = j as f64 / n as f64;
            let facs: Vec<(CMat, CMat)> = ys
                .iter()
                .enumerate()
                .map(|(k, y)| {
                    let (b, db) = beta(k, s);
                    let e = (y * C64::new(b, 0.0)).exp();
                    (e.clone(), y * &e * C64::new(db, 0.0))
                })
                .collect();
            let mut val = CMat::identity(m, m);
            let mut der = CMat::zeros(m, m);
            for (e, de) in &facs {
                der = &der * e + &val * de;
                val = &val * e;
            }
            g.push(val);
            dg.push(der);
        }
        GaugePath { g, dg }
    }

    pub fn intervals(&self) -> usize {
        self.g.len() - 1
    }

    /// Whether `g(0) = g(1) = 1` within `tol`.
    pub fn in_based_group(&self, tol: f64) -> bool {
        let m = self.g[0].nrows();
        let id = CMat::identity(m, m);
        max_abs(&(&self.g[0] - &id)) <= tol && max_abs(&(self.g.last().unwrap() - &id)) <= tol
    }

    pub fn endpoints(&self) -> (&CMat, &CMat) {
        (&self.g[0], self.g.last().unwrap())
    }
}

/// `g.T = (Ad_g T0 - g' g^{-1}, Ad_g T1, Ad_g T2, Ad_g T3)`.
pub fn gauge_act(g: &GaugePath, path: &NahmPath) -> Result<NahmPath> {
    if g.intervals() != path.intervals() {
        return Err(Error::DimensionMismatch { expected: path.intervals(), got: g.intervals() });
    }
    let mut out = path.clone();
    for j in 0..=path.intervals() {
        let gi = inverse(&g.g[j])?;
        out.t[0][j] = &g.g[j] * &path.t[0][j] * &gi - &g.dg[j] * &gi;
        for i in 1..4 {
            out.t[i][j] = &g.g[j] * &path.t[i][j] * &gi;
        }
    }
    Ok(out)
}

/// `nu = (T(0), -T(1))` in coordinates of `g ⊕ g`; errors on non-solutions.
pub fn nu_moment(path: &NahmPath) -> Result<MomentValue> {
    nu_moment_with_tol(path, DEFAULT_RESID_TOL)
}

pub fn nu_moment_with_tol(path: &NahmPath, tol: f64) -> Result<MomentValue> {
    let r = nahm_residual(path);
    if !(r <= tol) {
        return Err(Error::NotASolution(r));
    }
    Ok(nu_endpoints(path))
}

/// Endpoint extraction without the solution check.
pub fn nu_endpoints(path: &NahmPath) -> MomentValue {
    let g = &path.group;
    let n = path.intervals();
    let d = g.dim();
    let mut real = RVec::zeros(2 * d);
    let mut complex = CVec::zeros(2 * d);
    real.rows_mut(0, d).copy_from(&g.coords(&path.t[1][0]));
    real.rows_mut(d, d).copy_from(&(-g.coords(&path.t[1][n])));
    let c0 = g.coords(&path.t[2][0]);
    let d0 = g.coords(&path.t[3][0]);
    let c1 = g.coords(&path.t[2][n]);
    let d1 = g.coords(&path.t[3][n]);
    for a in 0..d {
        complex[a] = C64::new(c0[a], d0[a]);
        complex[d + a] = -C64::new(c1[a], d1[a]);
    }
    MomentValue { real, complex }
}

/// Point `(Q, eta)` of `G^C x g^C`.
#[derive(Clone, Debug, PartialEq)]
pub struct CotangentPoint {
    pub q: CMat,
    pub eta: CMat,
}

impl CotangentPoint {
    pub fn identity(group: &GroupSpec) -> Self {
        let m = group.matrix_size();
        CotangentPoint { q: CMat::identity(m, m), eta: CMat::zeros(m, m) }
    }
}

/// `(g0, g1).(Q, eta) = (g0 Q g1^{-1}, Ad_{g0} eta)`.
pub fn act_cotangent(g0: &CMat, g1: &CMat, p: &CotangentPoint) -> Result<CotangentPoint> {
    Ok(CotangentPoint { q: g0 * &p.q * inverse(g1)?, eta: g0 * &p.eta * inverse(g0)? })
}

/// `nu_C(Q, eta) = (eta, -Ad_{Q^{-1}} eta)` in complex coordinates of `g ⊕ g`.
pub fn nu_complex(group: &GroupSpec, p: &CotangentPoint) -> Result<CVec> {
    let d = group.dim();
    let qi = inverse(&p.q)?;
    let mut out = CVec::zeros(2 * d);
    out.rows_mut(0, d).copy_from(&group.coords_c(&p.eta));
    out.rows_mut(d, d).copy_from(&(-group.coords_c(&(&qi * &p.eta * &p.q))));
    Ok(out)
}

/// Holomorphic chart: integrate `u' = -(T0 + i T1) u`, `u(0) = 1` with RK4 at
/// step `2h`, and return `Q = u(1)^{-1}`, `eta = T2(0) + i T3(0)`. The
/// transport identity `T2 + i T3 = Ad_u eta` is checked at every even node.
pub fn holomorphic_coords(path: &NahmPath) -> Result<CotangentPoint> {
    let n = path.intervals();
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::BadGrid(n));
    }
    let m = path.group.matrix_size();
    let alpha = |j: usize| &path.t[0][j] + &path.t[1][j] * I;
    let beta = |j: usize| &path.t[2][j] + &path.t[3][j] * I;
    let eta = beta(0);
    let scale = (0..=n).step_by(2).map(|j| max_abs(&beta(j))).fold(1.0, f64::max);
    let h = 2.0 / n as f64;
    let mut u = CMat::identity(m, m);
    let mut defect: f64 = 0.0;
    for j in (0..n).step_by(2) {
        let (a0, am, a1) = (alpha(j), alpha(j + 1), alpha(j + 2));
        let k1 = -(&a0 * &u);
        let k2 = -(&am * (&u + &k1 * C64::new(0.5 * h, 0.0)));
        let k3 = -(&am * (&u + &k2 * C64::new(0.5 * h, 0.0)));
        let k4 = -(&a1 * (&u + &k3 * C64::new(h, 0.0)));
        u += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
        let transported = &u * &eta * inverse(&u)?;
        defect = defect.max(max_abs(&(transported - beta(j + 2))) / scale);
    }
    if !(defect <= TRANSPORT_TOL) {
        return Err(Error::TransportDefect(defect));
    }
    Ok(CotangentPoint { q: inverse(&u)?, eta })
}

/// Composite trapezoid quadrature of `|T1|^2 + (|T2|^2 + |T3|^2)/2`.
pub fn energy(path: &NahmPath) -> f64 {
    let n = path.intervals();
    let f = energy_density(path);
    let h = path.step();
    h * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[n]))
}

/// Composite Simpson quadrature of the same integrand (`N` even).
pub fn energy_simpson(path: &NahmPath) -> Result<f64> {
    let n = path.intervals();
    if !n.is_multiple_of(2) {
        return Err(Error::BadGrid(n));
    }
    let f = energy_density(path);
    let h = path.step();
    let mut acc = f[0] + f[n];
    for (j, v) in f.iter().enumerate().take(n).skip(1) {
        acc += if j % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    Ok(acc * h / 3.0)
}

fn energy_density(path: &NahmPath) -> Vec<f64> {
    let g = &path.group;
    (0..=path.intervals())
        .map(|j| g.norm2_mat(&path.t[1][j]) + 0.5 * (g.norm2_mat(&path.t[2][j]) + g.norm2_mat(&path.t[3][j])))
        .collect()
}

/// Chart `(f(0)^{-1}, T1(1), T2(1), T3(1))` where `f' = f T0`, `f(1) = 1`
/// puts the path in the gauge `T0 = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct DsChart {
    pub g: CMat,
    pub y: [CMat; 3],
}

pub fn ds_chart(path: &NahmPath) -> Result<DsChart> {
    ds_chart_with_tol(path, DEFAULT_RESID_TOL)
}

pub fn ds_chart_with_tol(path: &NahmPath, tol: f64) -> Result<DsChart> {
    let n = path.intervals();
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::BadGrid(n));
    }
    let r = nahm_residual(path);
    if !(r <= tol) {
        return Err(Error::NotASolution(r));
    }
    let m = path.group.matrix_size();
    let h = -2.0 / n as f64;
    let mut f = CMat::identity(m, m);
    let mut j = n;
    while j > 0 {
        let (a0, am, a1) = (&path.t[0][j], &path.t[0][j - 1], &path.t[0][j - 2]);
        let k1 = &f * a0;
        let k2 = (&f + &k1 * C64::new(0.5 * h, 0.0)) * am;
        let k3 = (&f + &k2 * C64::new(0.5 * h, 0.0)) * am;
        let k4 = (&f + &k3 * C64::new(h, 0.0)) * a1;
        f += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
        j -= 2;
    }
    Ok(DsChart {
        g: inverse(&f)?,
        y: [path.t[1][n].clone(), path.t[2][n].clone(), path.t[3][n].clone()],
    })
}

/// For an abelian group, the constant solution with `ds_chart = (g, y)`:
/// `T0 = log g` (principal branch, diagonal `g`) and `T_i = y_i`.
pub fn torus_path_from_chart(group: &GroupSpec, n: usize, chart: &DsChart) -> Result<NahmPath> {
    if !group.is_abelian() {
        return Err(Error::Invalid("chart reconstruction needs an abelian group".into()));
    }
    let m = group.matrix_size();
    let mut t0 = CMat::zeros(m, m);
    for j in 0..m {
        let z = chart.g[(j, j)];
        if z.norm() == 0.0 {
            return Err(Error::Singular);
        }
        t0[(j, j)] = z.ln();
    }
    Ok(NahmPath::constant(group, n, [t0, chart.y[0].clone(), chart.y[1].clone(), chart.y[2].clone()]))
}

/// Options for [`path_energy_min`].
#[derive(Clone, Copy, Debug)]
pub struct PathEnergyOptions {
    /// Final number of path segments.
    pub m: usize,
    /// Coarsest level of the multilevel refinement.
    pub m_coarse: usize,
    /// Stop a level when a sweep decreases the action by less than this fraction.
    pub rel_tol: f64,
    pub max_sweeps: usize,
}

impl Default for PathEnergyOptions {
    fn default() -> Self {
        PathEnergyOptions { m: 64, m_coarse: 4, rel_tol: 1e-10, max_sweeps: 5000 }
    }
}

#[derive(Clone, Debug)]
pub struct PathEnergyResult {
    pub value: f64,
    pub sweeps: usize,
    pub nodes: Vec<CMat>,
}

/// Geodesic `h0^{1/2} (h0^{-1/2} h1 h0^{-1/2})^t h0^{1/2}` of positive matrices.
pub fn posdef_geodesic(h0: &CMat, h1: &CMat, t: f64) -> Result<CMat> {
    let r = pow_posdef(h0, 0.5)?;
    let ri = pow_posdef(h0, -0.5)?;
    let mid = pow_posdef(&hermitian_part(&(&ri * h1 * &ri)), t)?;
    Ok(hermitian_part(&(&r * mid * &r)))
}

struct Action<'a> {
    group: &'a GroupSpec,
    eta0: CMat,
    m: usize,
}

impl Action<'_> {
    fn dist2(&self, a: &CMat, b: &CMat) -> Result<f64> {
        crate::lie::posdef_distance(self.group, a, b).map(|d| d * d)
    }

    fn potential(&self, h: &CMat) -> Result<f64> {
        let x = h * &self.eta0 * inverse(h)?;
        Ok(self.group.inner_mat(&x, &self.eta0))
    }

    fn total(&self, nodes: &[CMat]) -> Result<f64> {
        let mf = self.m as f64;
        let mut acc = 0.0;
        for j in 0..self.m {
            acc += 0.25 * mf * self.dist2(&nodes[j], &nodes[j + 1])?;
        }
        for (j, h) in nodes.iter().enumerate() {
            let w = if j == 0 || j == self.m { 0.5 } else { 1.0 };
            acc += w * 0.5 * self.potential(h)? / mf;
        }
        Ok(acc)
    }

    fn local(&self, prev: &CMat, h: &CMat, next: &CMat) -> Result<f64> {
        let mf = self.m as f64;
        Ok(0.25 * mf * (self.dist2(prev, h)? + self.dist2(h, next)?) + 0.5 * self.potential(h)? / mf)
    }
}

/// Point `h^{1/2} exp(i X(xi)) h^{1/2}` of the chart centred at `h`.
fn chart_point(group: &GroupSpec, sqrt_h: &CMat, xi: &RVec) -> CMat {
    let e = crate::lie::exp_hermitian(&(group.to_matrix(xi) * I));
    hermitian_part(&(sqrt_h * e * sqrt_h))
}

fn local_newton(act: &Action, prev: &CMat, h: &CMat, next: &CMat) -> Result<CMat> {
    let g = act.group;
    let d = g.dim();
    let sq = pow_posdef(h, 0.5)?;
    let f = |xi: &RVec| act.local(prev, &chart_point(g, &sq, xi), next);
    let f0 = f(&RVec::zeros(d))?;
    let e = 1e-4;
    let mut grad = RVec::zeros(d);
    let mut hess = nalgebra::DMatrix::<f64>::zeros(d, d);
    let mut fp = vec![0.0; d];
    let mut fm = vec![0.0; d];
    for a in 0..d {
        let mut x = RVec::zeros(d);
        x[a] = e;
        fp[a] = f(&x)?;
        x[a] = -e;
        fm[a] = f(&x)?;
        grad[a] = (fp[a] - fm[a]) / (2.0 * e);
        hess[(a, a)] = (fp[a] - 2.0 * f0 + fm[a]) / (e * e);
    }
    for a in 0..d {
        for b in (a + 1)..d {
            let mut x = RVec::zeros(d);
            x[a] = e;
            x[b] = e;
            let fpp = f(&x)?;
            x[a] = -e;
            x[b] = -e;
            let fmm = f(&x)?;
            let v = (fpp + fmm - fp[a] - fm[a] - fp[b] - fm[b] + 2.0 * f0) / (2.0 * e * e);
            hess[(a, b)] = v;
            hess[(b, a)] = v;
        }
    }
    let dir = match hess.clone().cholesky() {
        Some(ch) => -ch.solve(&grad),
        None => -&grad,
    };
    let slope = grad.dot(&dir);
    if slope >= 0.0 || grad.norm() < 1e-15 {
        return Ok(h.clone());
    }
    let mut t = 1.0;
    for _ in 0..40 {
        let cand = &dir * t;
        let fc = f(&cand)?;
        if fc <= f0 + 1e-4 * t * slope {
            return Ok(chart_point(g, &sq, &cand));
        }
        t *= 0.5;
    }
    Ok(h.clone())
}

/// Minimum of the discretized path action
/// `int_0^1 (|h'|_h^2 / 4 + |h eta0|_h^2 / 2) ds` over paths of positive
/// matrices from `a^* a` to `b^* b`, with `eta0 = Ad_{a^{-1}} eta` and
/// `Q = a b^{-1}`. This equals the energy of the Nahm solution with
/// holomorphic coordinates `(Q, eta)`.
///
/// The action uses the symmetric-space distance for the kinetic part and the
/// trapezoid rule for the potential; it is minimized by Gauss-Seidel sweeps
/// (a local Newton step with backtracking along the chart geodesic at each
/// interior node), refining from `m_coarse` to `m` segments by geodesic
/// midpoints.
pub fn path_energy_min(
    group: &GroupSpec,
    a: &CMat,
    b: &CMat,
    eta: &CMat,
    opts: &PathEnergyOptions,
) -> Result<PathEnergyResult> {
    if opts.m < 2 || opts.m_coarse < 2 {
        return Err(Error::BadGrid(opts.m));
    }
    let ai = inverse(a)?;
    let eta0 = &ai * eta * a;
    let h0 = hermitian_part(&(a.adjoint() * a));
    let h1 = hermitian_part(&(b.adjoint() * b));
    pow_posdef(&h0, 0.5)?;
    pow_posdef(&h1, 0.5)?;
    let mut m = opts.m_coarse.min(opts.m);
    let mut nodes: Vec<CMat> =
        (0..=m).map(|j| posdef_geodesic(&h0, &h1, j as f64 / m as f64)).collect::<Result<_>>()?;
    let mut sweeps = 0;
    loop {
        let act = Action { group, eta0: eta0.clone(), m };
        let mut value = act.total(&nodes)?;
        let mut level_sweeps = 0;
        loop {
            for j in 1..m {
                nodes[j] = local_newton(&act, &nodes[j - 1], &nodes[j], &nodes[j + 1])?;
            }
            sweeps += 1;
            level_sweeps += 1;
            let nv = act.total(&nodes)?;
            let dec = value - nv;
            value = nv;
            if dec <= opts.rel_tol * value.abs().max(1e-300) {
                break;
            }
            if level_sweeps >= opts.max_sweeps {
                return Err(Error::NoConvergence { iterations: sweeps, residual: dec });
            }
        }
        if m >= opts.m {
            return Ok(PathEnergyResult { value, sweeps, nodes });
        }
        let next_m = (2 * m).min(opts.m);
        if next_m == 2 * m {
            let mut refined = Vec::with_capacity(2 * m + 1);
            for j in 0..m {
                refined.push(nodes[j].clone());
                refined.push(posdef_geodesic(&nodes[j], &nodes[j + 1], 0.5)?);
            }
            refined.push(nodes[m].clone());
            nodes = refined;
        } else {
            nodes = (0..=next_m)
                .map(|j| {
                    let s = j as f64 / next_m as f64 * m as f64;
                    let k = (s.floor() as usize).min(m - 1);
                    posdef_geodesic(&nodes[k], &nodes[k + 1], s - k as f64)
                })
                .collect::<Result<_>>()?;
        }
        m = next_m;
    }
}

/// [`path_energy_min`] in the chart normalization `a = 1`, `b = Q^{-1}`.
pub fn path_energy_chart(group: &GroupSpec, p: &CotangentPoint, opts: &PathEnergyOptions) -> Result<PathEnergyResult> {
    let m = group.matrix_size();
    path_energy_min(group, &CMat::identity(m, m), &inverse(&p.q)?, &p.eta, opts)
}

/// A Nahm solution in the gauge `T0 = c` constant reconstructed from chart data.
#[derive(Clone, Debug)]
pub struct ShootSolution {
    pub path: NahmPath,
    /// Constant gauge component `T0`.
    pub c: RVec,
    /// `T1(0)`.
    pub alpha: RVec,
    pub iterations: usize,
    pub residual: f64,
    /// Jacobian of the endpoint residual in `(c, alpha)`, reused by warm starts.
    pub jacobian: DMatrix<f64>,
}

impl ShootSolution {
    /// Energy by Simpson quadrature.
    pub fn energy(&self) -> f64 {
        energy_simpson(&self.path).unwrap_or_else(|_| energy(&self.path))
    }
}

fn split_complex(group: &GroupSpec, z: &CMat) -> (CMat, CMat) {
    let zs = z.adjoint();
    let a = (z - &zs) * C64::new(0.5, 0.0);
    let b = (z + &zs) * C64::new(0.0, -0.5);
    let _ = group;
    (a, b)
}

/// Integrate Nahm's equations together with the transport `u' = -(T0 + i T1) u`.
fn shoot(group: &GroupSpec, c: &CMat, init: &[CMat; 3], n: usize) -> Result<(NahmPath, CMat)> {
    let m = group.matrix_size();
    let h = 1.0 / n as f64;
    let mut out: [Vec<CMat>; 4] = [vec![c.clone(); n + 1], Vec::new(), Vec::new(), Vec::new()];
    let mut cur = init.clone();
    let mut u = CMat::identity(m, m);
    let f = |t: &[CMat; 3], u: &CMat| -> ([CMat; 3], CMat) {
        let k = nahm_rhs(c, t);
        (k, -((c + &t[0] * I) * u))
    };
    for j in 0..n {
        for i in 0..3 {
            out[i + 1].push(cur[i].clone());
        }
        let (k1, l1) = f(&cur, &u);
        let (k2, l2) = f(&axpy3(&cur, &k1, 0.5 * h), &(&u + &l1 * C64::new(0.5 * h, 0.0)));
        let (k3, l3) = f(&axpy3(&cur, &k2, 0.5 * h), &(&u + &l2 * C64::new(0.5 * h, 0.0)));
        let (k4, l4) = f(&axpy3(&cur, &k3, h), &(&u + &l3 * C64::new(h, 0.0)));
        let w = C64::new(h / 6.0, 0.0);
        let two = C64::new(2.0, 0.0);
        for i in 0..3 {
            cur[i] += (&k1[i] + (&k2[i] + &k3[i]) * two + &k4[i]) * w;
        }
        u += (l1 + (l2 + l3) * two + l4) * w;
        let norm = cur.iter().map(|m| m.norm()).fold(u.norm(), f64::max);
        if !(norm <= BLOWUP_NORM) {
            return Err(Error::Blowup { s: (j + 1) as f64 * h, norm });
        }
    }
    for i in 0..3 {
        out[i + 1].push(cur[i].clone());
    }
    Ok((NahmPath { group: group.clone(), t: out }, u))
}

/// Solve for the Nahm solution with holomorphic coordinates `p` in the gauge
/// `T0 = c` constant, by Newton's method on `(c, T1(0))` with a
/// finite-difference Jacobian (updated by Broyden steps). `warm` supplies a
/// starting `(c, T1(0))` and Jacobian; otherwise `c + i T1(0) = log Q` (exact
/// for abelian groups), with a continuation in the chart if that cold start
/// fails.
pub fn nahm_from_chart(
    group: &GroupSpec,
    p: &CotangentPoint,
    n: usize,
    warm: Option<&ShootSolution>,
) -> Result<ShootSolution> {
    match shoot_chart(group, p, n, warm) {
        Ok(s) => Ok(s),
        Err(Error::BadGrid(n)) => Err(Error::BadGrid(n)),
        // A failed warm start is cheap to retry from a closer chart point.
        Err(e) if warm.is_some() => Err(e),
        Err(e) => continuation(group, p, n).map_err(|_| e),
    }
}

/// Follow `(exp(l log Q), l eta)` from `l = 0` to `l = 1`, warm-starting each
/// solve from the previous one and halving the increment on failure.
fn continuation(group: &GroupSpec, p: &CotangentPoint, n: usize) -> Result<ShootSolution> {
    let log_q = crate::lie::logm(&p.q)?;
    let at = |l: f64| CotangentPoint { q: (&log_q * C64::new(l, 0.0)).exp(), eta: &p.eta * C64::new(l, 0.0) };
    let mut sol = shoot_chart(group, &at(0.0), n, None)?;
    let (mut l, mut dl): (f64, f64) = (0.0, 0.25);
    while l < 1.0 {
        let next = (l + dl).min(1.0);
        match shoot_chart(group, &at(next), n, Some(&sol)) {
            Ok(s) => {
                sol = s;
                l = next;
                dl *= 1.5;
            }
            Err(e) => {
                dl *= 0.5;
                if dl < 1e-3 {
                    return Err(e);
                }
            }
        }
    }
    Ok(sol)
}

fn shoot_chart(
    group: &GroupSpec,
    p: &CotangentPoint,
    n: usize,
    warm: Option<&ShootSolution>,
) -> Result<ShootSolution> {
    if n < 16 || !n.is_multiple_of(2) {
        return Err(Error::BadGrid(n));
    }
    let d = group.dim();
    let (t2, t3) = split_complex(group, &p.eta);
    let qti = inverse(&p.q)?;
    let (mut c, mut alpha) = match warm {
        Some(w) => (w.c.clone(), w.alpha.clone()),
        None => {
            let l = group.coords_c(&crate::lie::logm(&p.q)?);
            (l.map(|z| z.re), l.map(|z| z.im))
        }
    };
    let resid = |c: &RVec, alpha: &RVec| -> Result<(RVec, NahmPath)> {
        let cm = group.to_matrix(c);
        let init = [group.to_matrix(alpha), t2.clone(), t3.clone()];
        let (path, u) = shoot(group, &cm, &init, n)?;
        let q = inverse(&u)?;
        let e = group.coords_c(&(&qti * q - CMat::identity(u.nrows(), u.nrows())));
        let mut r = RVec::zeros(2 * d);
        for a in 0..d {
            r[a] = e[a].re;
            r[d + a] = e[a].im;
        }
        Ok((r, path))
    };
    let fd_jacobian = |c: &RVec, alpha: &RVec, r: &RVec| -> Result<DMatrix<f64>> {
        let eps = 1e-7;
        let mut jac = DMatrix::<f64>::zeros(2 * d, 2 * d);
        for k in 0..2 * d {
            let (mut cp, mut ap) = (c.clone(), alpha.clone());
            if k < d {
                cp[k] += eps;
            } else {
                ap[k - d] += eps;
            }
            let (rp, _) = resid(&cp, &ap)?;
            jac.set_column(k, &((rp - r) / eps));
        }
        Ok(jac)
    };
    let (mut r, mut path) = resid(&c, &alpha)?;
    let mut rn = r.norm();
    // A warm Jacobian is updated by Broyden steps and refreshed when a step fails.
    let mut jac = warm.map(|w| w.jacobian.clone());
    let mut fresh = false;
    let mut it = 0;
    while rn > 1e-12 && it < 50 {
        it += 1;
        let j = match jac.take() {
            Some(j) => j,
            None => {
                fresh = true;
                fd_jacobian(&c, &alpha, &r)?
            }
        };
        let step = match j.clone().lu().solve(&(-&r)) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ if !fresh => continue,
            _ => return Err(Error::Singular),
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let cn = &c + step.rows(0, d) * t;
            let an = &alpha + step.rows(d, d) * t;
            if let Ok((rr, pp)) = resid(&cn, &an) {
                if rr.norm() < rn {
                    accepted = Some((cn, an, rr, pp, t));
                    break;
                }
            }
            t *= 0.5;
            if !fresh && t < 0.2 {
                break;
            }
        }
        match accepted {
            Some((cn, an, rr, pp, t)) => {
                let s = &step * t;
                let dr = &rr - &r;
                let ss = s.norm_squared();
                let mut j = j;
                if ss > 0.0 {
                    j += (dr - &j * &s) * s.transpose() / ss;
                }
                jac = Some(j);
                fresh = false;
                c = cn;
                alpha = an;
                r = rr;
                path = pp;
                rn = r.norm();
            }
            None if !fresh => {}
            None => break,
        }
    }
    if rn > 1e-9 {
        return Err(Error::NoConvergence { iterations: it, residual: rn });
    }
    let jacobian = match jac {
        Some(j) => j,
        None => fd_jacobian(&c, &alpha, &r)?,
    };
    Ok(ShootSolution { path, c, alpha, iterations: it, residual: rn, jacobian })
}
