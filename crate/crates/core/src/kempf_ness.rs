//! Kempf–Ness functionals on `L \ L^C` and their minimization.
//!
//! For a compact group `L` acting on flat space (optionally also on `N_G`
//! through `rho`), and a central `zeta`,
//!
//! `Phi(L g) = phi(g x) + E(rho(g) . (Q, eta)) / 2 - <zeta, xi(g)>`
//!
//! where `phi = |x|^2 / 2` and `E` is the Nahm energy. Along the geodesic
//! `t -> L exp(i t delta) g` the derivative is `<m(g x) - zeta, delta>` with
//! `m` the real moment map (`mu_1`, plus `rho^* nu_1` when `N_G` is present),
//! and the second derivative is `|delta^*|^2 >= 0`.

use crate::error::{Error, Result};
use crate::flat_hk::{ActionSpec, QuaternionicPoint};
use crate::lie::{kernel_basis, polar_decompose, range_basis, CMat, RVec, I, RANK_TOL};
use crate::nahm::{nahm_from_chart, nu_endpoints, CotangentPoint, ShootSolution};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

/// A Kempf–Ness problem for `L`, given by an orthonormal embedding of its Lie
/// algebra into that of `H`.
#[derive(Clone, Debug)]
pub struct KNProblem {
    pub spec: ActionSpec,
    /// Columns: orthonormal basis of `l` in `H` coordinates.
    pub embed: DMatrix<f64>,
    pub x: QuaternionicPoint,
    /// `N_G` datum; when present the potential includes `E / 2`.
    pub cot: Option<CotangentPoint>,
    /// `zeta_1` in `l` coordinates.
    pub zeta: RVec,
    /// Grid for the Nahm solutions behind `E`.
    pub nahm_n: usize,
}

/// An evaluated point `L g` together with everything needed to continue.
#[derive(Clone, Debug)]
pub struct KNPoint {
    /// `g` in `H^C`; `None` once it has overflowed.
    pub g: Option<CMat>,
    pub y: QuaternionicPoint,
    pub cot: Option<CotangentPoint>,
    pub shoot: Option<ShootSolution>,
    /// `<zeta, xi>` accumulated along the path of geodesic steps.
    pub lin: f64,
    /// Sum of the geodesic steps taken from the base point.
    pub displacement: RVec,
    pub value: f64,
}

impl KNProblem {
    /// General constructor; checks that `zeta` is central in `l`.
    pub fn new(
        spec: &ActionSpec,
        embed: DMatrix<f64>,
        x: QuaternionicPoint,
        cot: Option<CotangentPoint>,
        zeta: RVec,
        nahm_n: usize,
    ) -> Result<Self> {
        if embed.nrows() != spec.h.dim() {
            return Err(Error::DimensionMismatch { expected: spec.h.dim(), got: embed.nrows() });
        }
        if zeta.len() != embed.ncols() {
            return Err(Error::DimensionMismatch { expected: embed.ncols(), got: zeta.len() });
        }
        if x.dim() != spec.rep.dim() {
            return Err(Error::DimensionMismatch { expected: spec.rep.dim(), got: x.dim() });
        }
        let z = &embed * &zeta;
        let mut worst: f64 = 0.0;
        for a in 0..embed.ncols() {
            let e = embed.column(a).into_owned();
            worst = worst.max(spec.h.bracket(&z, &e).amax());
        }
        if worst > 1e-10 {
            return Err(Error::NotCentral(worst));
        }
        Ok(KNProblem { spec: spec.clone(), embed, x, cot, zeta, nahm_n })
    }

    /// `L = H_rho` acting on flat space, `zeta_1 = iota^* zeta_h`.
    pub fn restricted(spec: &ActionSpec, x: QuaternionicPoint, zeta_h: &RVec) -> Result<Self> {
        let e = spec.h_rho_basis().clone();
        let z = e.transpose() * zeta_h;
        Self::new(spec, e, x, None, z, 0)
    }

    /// `L = H` acting on flat space.
    pub fn full(spec: &ActionSpec, x: QuaternionicPoint, zeta_h: &RVec) -> Result<Self> {
        let d = spec.h.dim();
        Self::new(spec, DMatrix::identity(d, d), x, None, zeta_h.clone(), 0)
    }

    /// `L = H` acting on `M x N_G`.
    pub fn with_cotangent(
        spec: &ActionSpec,
        x: QuaternionicPoint,
        cot: CotangentPoint,
        zeta_h: &RVec,
        nahm_n: usize,
    ) -> Result<Self> {
        let d = spec.h.dim();
        Self::new(spec, DMatrix::identity(d, d), x, Some(cot), zeta_h.clone(), nahm_n)
    }

    pub fn dim(&self) -> usize {
        self.embed.ncols()
    }

    fn lift(&self, delta: &RVec) -> RVec {
        &self.embed * delta
    }

    fn finish(&self, mut p: KNPoint) -> Result<KNPoint> {
        let mut value = 0.5 * p.y.norm2() - p.lin;
        if let Some(c) = &p.cot {
            let warm = p.shoot.as_ref();
            // A failed warm solve fails the trial step; the line search then
            // retries closer to the previous point.
            let sol = nahm_from_chart(&self.spec.g, c, self.nahm_n, warm)?;
            value += 0.5 * sol.energy();
            p.shoot = Some(sol);
        }
        if !value.is_finite() {
            return Err(Error::Invalid("non-finite Kempf–Ness value".into()));
        }
        p.value = value;
        Ok(p)
    }

    /// The base point `L . 1`.
    pub fn base(&self) -> Result<KNPoint> {
        let m = self.spec.h.matrix_size();
        self.finish(KNPoint {
            g: Some(CMat::identity(m, m)),
            y: self.x.clone(),
            cot: self.cot.clone(),
            shoot: None,
            lin: 0.0,
            displacement: RVec::zeros(self.dim()),
            value: 0.0,
        })
    }

    /// `L exp(i t delta) g` from `L g`.
    pub fn step(&self, p: &KNPoint, delta: &RVec, t: f64) -> Result<KNPoint> {
        let xi = self.lift(delta) * t;
        let e = self.spec.h.exp_i(&xi);
        let y = self.spec.act(&e, &p.y)?;
        let g = p.g.as_ref().map(|g| &e * g).filter(|g| g.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
        let cot = match &p.cot {
            Some(c) => {
                let (e0, e1) = self.spec.rho_exp(&xi.map(|v| I * v));
                Some(crate::nahm::act_cotangent(&e0, &e1, c)?)
            }
            None => None,
        };
        self.finish(KNPoint {
            g,
            y,
            cot,
            shoot: p.shoot.clone(),
            lin: p.lin + t * self.zeta.dot(delta),
            displacement: &p.displacement + delta * t,
            value: 0.0,
        })
    }

    /// Real moment map `m` at an evaluated point, in `l` coordinates.
    pub fn moment(&self, p: &KNPoint) -> Result<RVec> {
        let mut m = self.spec.moment_hat(&p.y)?.real;
        if let Some(s) = &p.shoot {
            let nu = nu_endpoints(&s.path);
            m += self.spec.rho.transpose() * nu.real;
        }
        Ok(self.embed.transpose() * m)
    }

    /// Riemannian gradient `m - zeta` at an evaluated point.
    pub fn gradient(&self, p: &KNPoint) -> Result<RVec> {
        Ok(self.moment(p)? - &self.zeta)
    }

    /// Point `L exp(i xi)`.
    pub fn point_at(&self, xi: &RVec) -> Result<KNPoint> {
        self.step(&self.base()?, xi, 1.0)
    }
}

/// `Phi(L exp(i xi))`; equals `|x|^2 / 2` (plus `E / 2`) at `xi = 0`.
pub fn kn_value(problem: &KNProblem, xi: &RVec) -> Result<f64> {
    Ok(problem.point_at(xi)?.value)
}

/// Gradient of `Phi` at `L exp(i xi)`, i.e. the dual of `m(exp(i xi) x) - zeta`.
pub fn kn_gradient(problem: &KNProblem, xi: &RVec) -> Result<RVec> {
    problem.gradient(&problem.point_at(xi)?)
}

/// `Phi(L exp(i t dir) exp(i xi))`.
pub fn kn_geodesic_value(problem: &KNProblem, xi: &RVec, dir: &RVec, t: f64) -> Result<f64> {
    let p = problem.point_at(xi)?;
    Ok(problem.step(&p, dir, t)?.value)
}

#[derive(Clone, Debug)]
pub struct KNOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Iterate norm that triggers the ray slope test.
    pub divergence_radius: f64,
    /// Orthonormal columns (in `l` coordinates) to which steps are confined.
    pub restrict: Option<DMatrix<f64>>,
}

impl Default for KNOptions {
    fn default() -> Self {
        KNOptions { tol: 1e-8, max_iter: 10_000, divergence_radius: 1e3, restrict: None }
    }
}

#[derive(Clone, Debug)]
pub enum KNOutcome {
    Critical { point: Box<KNPoint>, iterations: usize, grad_norm: f64 },
    /// The ray through `witness` has nonpositive slope at the iterate.
    Divergent { point: Box<KNPoint>, witness: RVec, slope: f64, iterations: usize },
    Inconclusive { point: Box<KNPoint>, iterations: usize, grad_norm: f64 },
}

impl KNOutcome {
    pub fn point(&self) -> &KNPoint {
        match self {
            KNOutcome::Critical { point, .. }
            | KNOutcome::Divergent { point, .. }
            | KNOutcome::Inconclusive { point, .. } => point,
        }
    }

    pub fn is_critical(&self) -> bool {
        matches!(self, KNOutcome::Critical { .. })
    }
}

/// Geodesic descent with limited-memory BFGS directions in the trivialized
/// coordinates of `l` and Armijo backtracking (`c = 1e-4`, halving). Steepest
/// descent steps start from twice the last accepted step.
pub fn kn_minimize(problem: &KNProblem, opts: &KNOptions) -> Result<KNOutcome> {
    kn_minimize_from(problem, problem.base()?, opts)
}

const LBFGS_MEMORY: usize = 10;

/// Relative resolution of `Phi` values; the path energy comes from a shooting
/// solve converged to about `1e-12`.
const VALUE_NOISE: f64 = 1e-11;

fn lbfgs_direction(grad: &RVec, pairs: &std::collections::VecDeque<(RVec, RVec, f64)>) -> RVec {
    let mut q = grad.clone();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * s.dot(&q);
        q -= y * a;
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        q *= s.dot(y) / y.dot(y);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = rho * y.dot(&q);
        q += s * (a - b);
    }
    -q
}

pub fn kn_minimize_from(problem: &KNProblem, start: KNPoint, opts: &KNOptions) -> Result<KNOutcome> {
    let project = |v: RVec| match &opts.restrict {
        Some(b) => b * (b.transpose() * v),
        None => v,
    };
    let mut p = start;
    let mut grad = project(problem.gradient(&p)?);
    let mut step = 1.0;
    let mut next_test = opts.divergence_radius;
    let mut pairs = std::collections::VecDeque::new();
    let mut reach: f64 = 1.0;
    let mut last_step: Option<RVec> = None;
    for it in 0..opts.max_iter {
        let gn = grad.norm();
        if gn < opts.tol {
            return Ok(KNOutcome::Critical { point: Box::new(p), iterations: it, grad_norm: gn });
        }
        let r = p.displacement.norm();
        if r > next_test {
            // The last step tracks the asymptotic direction better than the
            // total displacement when the early iterates curve.
            let full = problem.gradient(&p)?;
            let mut best: Option<(RVec, f64)> = None;
            for dir in [Some(&p.displacement / r), last_step.as_ref().map(|s: &RVec| s / s.norm())].into_iter().flatten() {
                let slope = full.dot(&dir);
                if slope <= 0.0 && best.as_ref().is_none_or(|b| slope < b.1) {
                    best = Some((dir, slope));
                }
            }
            if let Some((witness, slope)) = best {
                return Ok(KNOutcome::Divergent { point: Box::new(p), witness, slope, iterations: it });
            }
            next_test = 2.0 * r;
        }
        let mut accepted = None;
        for attempt in 0..2 {
            let quasi = attempt == 0 && !pairs.is_empty();
            if attempt == 1 && accepted.is_none() && pairs.is_empty() {
                break;
            }
            let dir = if quasi { project(lbfgs_direction(&grad, &pairs)) } else { -&grad };
            let slope0 = grad.dot(&dir);
            if slope0 >= 0.0 {
                pairs.clear();
                continue;
            }
            let mut t = if quasi { 1.0 } else { 2.0 * step };
            // Trial steps grow at most geometrically.
            let dn = dir.norm();
            if t * dn > reach {
                t = reach / dn;
            }
            for _ in 0..80 {
                if let Ok(q) = problem.step(&p, &dir, t) {
                    let predicted = -1e-4 * t * slope0;
                    let floor = VALUE_NOISE * (p.value.abs() + p.lin.abs()).max(1.0);
                    let ok = if predicted > floor {
                        q.value <= p.value - predicted
                    } else {
                        // Below value resolution: require the gradient to shrink.
                        q.value <= p.value + floor && project(problem.gradient(&q)?).norm() < gn
                    };
                    if ok {
                        accepted = Some((q, dir.clone() * t, quasi));
                        break;
                    }
                }
                t *= 0.5;
            }
            if accepted.is_some() {
                if !quasi {
                    step = t;
                }
                break;
            }
            pairs.clear();
        }
        match accepted {
            Some((q, s, _)) => {
                reach = (2.0 * s.norm()).max(1.0);
                if s.norm() > 0.0 {
                    last_step = Some(s.clone());
                }
                let g2 = project(problem.gradient(&q)?);
                let y = &g2 - &grad;
                let sy = s.dot(&y);
                if sy > 1e-12 * s.norm() * y.norm() {
                    if pairs.len() == LBFGS_MEMORY {
                        pairs.pop_front();
                    }
                    pairs.push_back((s, y, 1.0 / sy));
                }
                p = q;
                grad = g2;
            }
            None => {
                let grad_norm = gn;
                if gn < 1e3 * opts.tol {
                    return Ok(KNOutcome::Critical { point: Box::new(p), iterations: it, grad_norm });
                }
                return Ok(KNOutcome::Inconclusive { point: Box::new(p), iterations: it, grad_norm });
            }
        }
    }
    let gn = grad.norm();
    Ok(KNOutcome::Inconclusive { point: Box::new(p), iterations: opts.max_iter, grad_norm: gn })
}

/// Slope of `Phi` along the witness ray at the iterate, by the moment map and
/// by central differences of the value.
pub fn verify_certificate(problem: &KNProblem, point: &KNPoint, witness: &RVec) -> Result<(f64, f64)> {
    let by_moment = problem.gradient(point)?.dot(witness);
    let h = 1e-5;
    let fp = problem.step(point, witness, h)?.value;
    let fm = problem.step(point, witness, -h)?.value;
    Ok((by_moment, (fp - fm) / (2.0 * h)))
}

/// Stabilizer algebras of a point under `L` (and the `N_G` datum if present).
#[derive(Clone, Debug)]
pub struct StabilizerData {
    /// `stab(x)` in `l` coordinates (columns).
    pub stab: DMatrix<f64>,
    /// `stab(x)^C` as real vectors `(a, b)` for `a + i b`.
    pub stab_c: DMatrix<f64>,
    /// `π_Im(stab(x)^C)`.
    pub stab_tilde: DMatrix<f64>,
    /// Orthogonal complement of `stab_tilde`.
    pub v_x: DMatrix<f64>,
}

impl StabilizerData {
    pub fn dim(&self) -> usize {
        self.stab.ncols()
    }

    pub fn complex_dim(&self) -> usize {
        self.stab_c.ncols() / 2
    }
}

/// Complex infinitesimal action of `l^C` on the problem's point, as columns
/// of complex vectors (flat part, then `Q^{-1} dQ` and `d eta` for `N_G`).
fn action_matrix(problem: &KNProblem, y: &QuaternionicPoint, cot: Option<&CotangentPoint>) -> Result<DMatrix<C64>> {
    let r = problem.dim();
    let n = y.dim();
    let gm = problem.spec.g.matrix_size();
    let rows = 2 * n + if cot.is_some() { 2 * gm * gm } else { 0 };
    let mut a = DMatrix::<C64>::zeros(rows, r);
    for j in 0..r {
        let xi = problem.embed.column(j).map(|v| C64::new(v, 0.0));
        let v = problem.spec.infinitesimal_c(&xi, y);
        a.view_mut((0, j), (n, 1)).copy_from(&v.z);
        a.view_mut((n, j), (n, 1)).copy_from(&v.w);
        if let Some(c) = cot {
            let (x0, x1) = problem.spec.rho_alg_c(&xi);
            let qi = crate::lie::inverse(&c.q)?;
            let dq = &qi * &x0 * &c.q - &x1;
            let de = &x0 * &c.eta - &c.eta * &x0;
            for (k, val) in dq.iter().chain(de.iter()).enumerate() {
                a[(2 * n + k, j)] = *val;
            }
        }
    }
    Ok(a)
}

pub fn stabilizer_data(problem: &KNProblem) -> Result<StabilizerData> {
    stabilizer_data_at(problem, &problem.x, problem.cot.as_ref())
}

pub fn stabilizer_data_at(
    problem: &KNProblem,
    y: &QuaternionicPoint,
    cot: Option<&CotangentPoint>,
) -> Result<StabilizerData> {
    let r = problem.dim();
    let a = action_matrix(problem, y, cot)?;
    let m = a.nrows();
    // Real form of the complex-linear map (a + i b) -> A (a + i b).
    let mut big = DMatrix::<f64>::zeros(2 * m, 2 * r);
    let mut real = DMatrix::<f64>::zeros(2 * m, r);
    for i in 0..m {
        for j in 0..r {
            let z = a[(i, j)];
            big[(i, j)] = z.re;
            big[(i, r + j)] = -z.im;
            big[(m + i, j)] = z.im;
            big[(m + i, r + j)] = z.re;
            real[(i, j)] = z.re;
            real[(m + i, j)] = z.im;
        }
    }
    let stab = kernel_basis(&real, RANK_TOL);
    let stab_c = kernel_basis(&big, RANK_TOL);
    let stab_tilde = if stab_c.ncols() == 0 {
        DMatrix::zeros(r, 0)
    } else {
        range_basis(&stab_c.rows(r, r).into_owned(), RANK_TOL)
    };
    let v_x = if stab_tilde.ncols() == 0 {
        DMatrix::identity(r, r)
    } else {
        kernel_basis(&stab_tilde.transpose(), RANK_TOL)
    };
    let v_x = if r == 0 { DMatrix::zeros(0, 0) } else { v_x };
    Ok(StabilizerData { stab, stab_c, stab_tilde, v_x })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stability {
    Stable,
    Polystable { stabilizer_dim: usize },
    Unstable { witness: RVec, slope: f64 },
}

impl Stability {
    pub fn label(&self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Polystable { .. } => "polystable",
            Stability::Unstable { .. } => "unstable",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub stability: Stability,
    pub outcome: KNOutcome,
    pub stabilizer: StabilizerData,
}

/// Classify the base point: a nonzero component of `zeta` along
/// `π_Im(stab^C)` breaks invariance and the full descent must diverge;
/// otherwise descend within `V_x`.
pub fn stability_classify(problem: &KNProblem, opts: &KNOptions) -> Result<Classification> {
    let st = stabilizer_data(problem)?;
    // `phi` is constant along `exp(i t w)` for `w` in `stab(x)`, so a nonzero
    // projection of `zeta` onto `stab(x)` is already an exact witness.
    let on_stab = &st.stab * (st.stab.transpose() * &problem.zeta);
    if on_stab.norm() > 1e-9 {
        let witness = &on_stab / on_stab.norm();
        let point = problem.base()?;
        let slope = problem.gradient(&point)?.dot(&witness);
        let outcome = KNOutcome::Divergent { point: Box::new(point), witness: witness.clone(), slope, iterations: 0 };
        return Ok(Classification { stability: Stability::Unstable { witness, slope }, outcome, stabilizer: st });
    }
    let along = &st.stab_tilde * (st.stab_tilde.transpose() * &problem.zeta);
    let mut o = opts.clone();
    o.restrict = if along.norm() > 1e-9 { None } else { Some(st.v_x.clone()) };
    let outcome = kn_minimize(problem, &o)?;
    let stability = match &outcome {
        KNOutcome::Critical { .. } => {
            if st.complex_dim() == 0 {
                Stability::Stable
            } else {
                Stability::Polystable { stabilizer_dim: st.complex_dim() }
            }
        }
        KNOutcome::Divergent { witness, slope, .. } => Stability::Unstable { witness: witness.clone(), slope: *slope },
        KNOutcome::Inconclusive { iterations, grad_norm, .. } => {
            return Err(Error::NoConvergence { iterations: *iterations, residual: *grad_norm })
        }
    };
    Ok(Classification { stability, outcome, stabilizer: st })
}

/// At a critical point `y`: `dim_C stab^C = dim_R stab`, and sampled elements
/// of `Stab(y)^C` polar-decompose into `Stab(y) exp(i stab(y))`.
pub fn stabilizer_polar_check(problem: &KNProblem, point: &KNPoint, samples: &[Vec<C64>]) -> Result<bool> {
    let g = problem.gradient(point)?.norm();
    if g > 1e-6 {
        return Err(Error::Invalid(format!("not a critical point (gradient {g:.3e})")));
    }
    let st = stabilizer_data_at(problem, &point.y, point.cot.as_ref())?;
    if st.complex_dim() != st.dim() {
        return Ok(false);
    }
    let r = problem.dim();
    let h = &problem.spec.h;
    for coeffs in samples {
        if st.dim() == 0 {
            break;
        }
        let mut z = nalgebra::DVector::<C64>::zeros(r);
        for (j, c) in coeffs.iter().enumerate().take(st.dim()) {
            z += st.stab.column(j).map(|v| C64::new(v, 0.0)) * *c;
        }
        let gam = h.to_matrix_c(&(problem.embed.map(|v| C64::new(v, 0.0)) * z)).exp();
        let moved = problem.spec.act(&gam, &point.y)?;
        if moved.sub(&point.y).norm2().sqrt() > 1e-8 * point.y.norm2().sqrt().max(1.0) {
            return Ok(false);
        }
        let (l, xi) = polar_decompose(h, &gam)?;
        let lx = problem.spec.act(&l.matrix, &point.y)?;
        let ex = problem.spec.act(&h.exp_i(&xi), &point.y)?;
        let tol = 1e-8 * point.y.norm2().sqrt().max(1.0);
        if lx.sub(&point.y).norm2().sqrt() > tol || ex.sub(&point.y).norm2().sqrt() > tol {
            return Ok(false);
        }
        let xl = problem.embed.transpose() * &xi;
        if (&problem.embed * &xl - &xi).norm() > 1e-8 {
            return Ok(false);
        }
        let in_stab = &st.stab * (st.stab.transpose() * &xl);
        if (in_stab - xl).norm() > 1e-8 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Re-run the classification with `s zeta` and report whether a critical
/// point still exists whenever one existed for `zeta`.
pub fn scale_check(problem: &KNProblem, s: f64, opts: &KNOptions) -> Result<(Stability, Stability, bool)> {
    if !(s > 0.0) {
        return Err(Error::Invalid("scale must be positive".into()));
    }
    let base = stability_classify(problem, opts)?.stability;
    let mut scaled = problem.clone();
    scaled.zeta = &problem.zeta * s;
    let other = stability_classify(&scaled, opts)?.stability;
    let ok = matches!(
        (&base, &other),
        (Stability::Unstable { .. }, _)
            | (Stability::Stable, Stability::Stable)
            | (Stability::Polystable { .. }, Stability::Polystable { .. } | Stability::Stable)
    );
    Ok((base, other, ok))
}

/// Diagnostic for properness: the slope of `Phi` far out along `dir`.
pub fn asymptotic_slope(problem: &KNProblem, dir: &RVec, t: f64) -> Result<f64> {
    let d = dir / dir.norm();
    let p = problem.step(&problem.base()?, &d, t)?;
    Ok(problem.gradient(&p)?.dot(&d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flat_hk::{hilbert, hilbert_point, HomBlock, PresetTag, Representation};
    use crate::lie::{CVec, Factor, GroupSpec};
    use crate::rng::Sampler;

    fn u1_on_c() -> ActionSpec {
        let h = GroupSpec::new(vec![Factor::Torus(1)]);
        let g = GroupSpec::new(vec![]);
        let rep = Representation::new(&h, vec![HomBlock { source: None, target: Some(0) }]);
        ActionSpec::new(h, g, rep, DMatrix::zeros(0, 1), PresetTag::Modification { normal: vec![0] }).unwrap()
    }

    fn point_c(z: f64) -> QuaternionicPoint {
        QuaternionicPoint { z: CVec::from_vec(vec![C64::new(z, 0.0)]), w: CVec::zeros(1) }
    }

    fn hilbert_zeta(k: usize, c0: f64, c1: f64) -> RVec {
        let spec = hilbert(k).unwrap();
        let mut m = CMat::zeros(2 * k, 2 * k);
        for j in 0..k {
            m[(j, j)] = I * c0;
            m[(k + j, k + j)] = I * c1;
        }
        spec.h.coords(&m)
    }

    #[test]
    fn value_examples() {
        let spec = u1_on_c();
        let x = point_c(0.8);
        let p = KNProblem::full(&spec, x.clone(), &RVec::from_vec(vec![0.3])).unwrap();
        assert!((kn_value(&p, &RVec::zeros(1)).unwrap() - 0.5 * 0.64).abs() < 1e-15);
        // Weight one: exp(i t (i)) z = e^{-t} z, so phi = e^{-2t} |z|^2 / 2.
        for t in [-1.0, -0.3, 0.5, 2.0] {
            let v = kn_value(&p, &RVec::from_vec(vec![t])).unwrap();
            let want = 0.5 * (-2.0 * t).exp() * 0.64 - 0.3 * t;
            assert!((v - want).abs() < 1e-12);
        }
        let p0 = KNProblem::full(&spec, point_c(0.0), &RVec::zeros(1)).unwrap();
        assert_eq!(kn_value(&p0, &RVec::from_vec(vec![3.0])).unwrap(), 0.0);
        let g = kn_gradient(&KNProblem::full(&spec, point_c(0.0), &RVec::from_vec(vec![0.7])).unwrap(), &RVec::from_vec(vec![2.0])).unwrap();
        assert!((g[0] + 0.7).abs() < 1e-15);
    }

    #[test]
    fn not_central_rejected() {
        let spec = hilbert(2).unwrap();
        let mut z = RVec::zeros(8);
        z[4] = 1.0;
        assert!(matches!(KNProblem::full(&spec, spec.zero_point(), &z), Err(Error::NotCentral(_))));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let spec = hilbert(2).unwrap();
        let mut s = Sampler::new(21);
        let zeta = hilbert_zeta(2, 0.7, -0.2);
        for restricted in [true, false] {
            for _ in 0..5 {
                let x = QuaternionicPoint { z: s.complex_vec(6), w: s.complex_vec(6) };
                let p = if restricted {
                    KNProblem::restricted(&spec, x, &zeta).unwrap()
                } else {
                    KNProblem::full(&spec, x, &zeta).unwrap()
                };
                let xi = s.normal_vec(p.dim()) * 0.3;
                let dir = s.normal_vec(p.dim());
                let g = kn_gradient(&p, &xi).unwrap().dot(&dir);
                let h = 1e-5;
                let fd = (kn_geodesic_value(&p, &xi, &dir, h).unwrap() - kn_geodesic_value(&p, &xi, &dir, -h).unwrap())
                    / (2.0 * h);
                assert!((g - fd).abs() < 1e-6 * g.abs().max(1.0), "{g} {fd}");
            }
        }
    }

    #[test]
    fn nahm_energy_gradient_matches_finite_differences() {
        let spec = hilbert(1).unwrap();
        let mut s = Sampler::new(22);
        let x = QuaternionicPoint { z: s.complex_vec(2), w: s.complex_vec(2) };
        let cot = CotangentPoint {
            q: spec.g.exp_c(&(s.complex_vec(1) * C64::new(0.3, 0.0))),
            eta: spec.g.to_matrix_c(&(s.complex_vec(1) * C64::new(0.3, 0.0))),
        };
        let p = KNProblem::with_cotangent(&spec, x, cot, &hilbert_zeta(1, 0.4, 0.1), 200).unwrap();
        let xi = s.normal_vec(2) * 0.2;
        let dir = s.normal_vec(2);
        let g = kn_gradient(&p, &xi).unwrap().dot(&dir);
        let h = 1e-4;
        let fd = (kn_geodesic_value(&p, &xi, &dir, h).unwrap() - kn_geodesic_value(&p, &xi, &dir, -h).unwrap()) / (2.0 * h);
        assert!((g - fd).abs() < 1e-6 * g.abs().max(1.0), "{g} {fd}");
    }

    #[test]
    fn nonabelian_nahm_gradient() {
        let spec = hilbert(2).unwrap();
        let mut s = Sampler::new(23);
        let x = QuaternionicPoint { z: s.complex_vec(6), w: s.complex_vec(6) };
        let cot = CotangentPoint {
            q: spec.g.exp_c(&(s.complex_vec(4) * C64::new(0.2, 0.0))),
            eta: spec.g.to_matrix_c(&(s.complex_vec(4) * C64::new(0.2, 0.0))),
        };
        let p = KNProblem::with_cotangent(&spec, x, cot, &hilbert_zeta(2, 0.4, 0.1), 200).unwrap();
        let xi = s.normal_vec(8) * 0.2;
        let dir = s.normal_vec(8);
        let g = kn_gradient(&p, &xi).unwrap().dot(&dir);
        let h = 1e-4;
        let fd = (kn_geodesic_value(&p, &xi, &dir, h).unwrap() - kn_geodesic_value(&p, &xi, &dir, -h).unwrap()) / (2.0 * h);
        assert!((g - fd).abs() < 1e-6 * g.abs().max(1.0), "{g} {fd}");
    }

    #[test]
    fn convexity_along_geodesics() {
        let spec = hilbert(2).unwrap();
        let mut s = Sampler::new(24);
        let zeta = hilbert_zeta(2, 1.0, 0.0);
        for _ in 0..20 {
            let x = QuaternionicPoint { z: s.complex_vec(6), w: s.complex_vec(6) };
            let p = KNProblem::restricted(&spec, x, &zeta).unwrap();
            let xi = s.normal_vec(p.dim()) * 0.5;
            let dir = s.unit_vec(p.dim());
            let h = 1e-3;
            let f = |t: f64| kn_geodesic_value(&p, &xi, &dir, t).unwrap();
            for t in [-0.5, 0.0, 0.5] {
                assert!(f(t + h) - 2.0 * f(t) + f(t - h) >= -1e-8);
            }
        }
    }

    #[test]
    fn u1_critical_point_closed_form() {
        let spec = u1_on_c();
        let (z, zeta) = (0.8, 0.5);
        let p = KNProblem::full(&spec, point_c(z), &RVec::from_vec(vec![zeta])).unwrap();
        // m(e^{-t} z) = -e^{-2t} z^2 for weight one; critical where this equals zeta... sign:
        // mu_1 = i (z^* (i) z) = -|z|^2, so the moment image is negative.
        let p = KNProblem { zeta: RVec::from_vec(vec![-zeta]), ..p };
        let out = kn_minimize(&p, &KNOptions::default()).unwrap();
        let pt = out.point();
        let t_star = 0.5 * (z * z / zeta).ln();
        assert!(out.is_critical(), "{out:?}");
        assert!((pt.displacement[0] - t_star).abs() < 1e-7);
    }

    #[test]
    fn divergence_at_zero() {
        let spec = hilbert(1).unwrap();
        let zeta = hilbert_zeta(1, 1.0, -1.0);
        let p = KNProblem::full(&spec, spec.zero_point(), &zeta).unwrap();
        match kn_minimize(&p, &KNOptions::default()).unwrap() {
            KNOutcome::Divergent { witness, slope, point, .. } => {
                assert!(slope < 0.0);
                assert!(witness.dot(&zeta) > 0.0);
                let (a, b) = verify_certificate(&p, &point, &witness).unwrap();
                assert!((a - b).abs() < 1e-6 && a <= 0.0);
            }
            other => panic!("{other:?}"),
        }
        let c = stability_classify(&p, &KNOptions::default()).unwrap();
        assert_eq!(c.stability.label(), "unstable");
    }

    #[test]
    fn stabilizer_examples() {
        let spec = hilbert(1).unwrap();
        let zero = KNProblem::restricted(&spec, spec.zero_point(), &RVec::zeros(2)).unwrap();
        let st = stabilizer_data(&zero).unwrap();
        assert_eq!((st.dim(), st.complex_dim(), st.v_x.ncols()), (1, 1, 0));
        let one = CMat::from_element(1, 1, C64::new(0.0, 0.0));
        let x = hilbert_point(&one, &one, &CVec::from_vec(vec![C64::new(1.0, 0.0)]), &CVec::zeros(1));
        let p = KNProblem::restricted(&spec, x, &RVec::zeros(2)).unwrap();
        let st = stabilizer_data(&p).unwrap();
        assert_eq!((st.dim(), st.complex_dim(), st.v_x.ncols()), (0, 0, 1));

        let spec2 = hilbert(2).unwrap();
        let a = CMat::from_diagonal(&CVec::from_vec(vec![C64::new(0.5, 0.1), C64::new(-0.7, 0.3)]));
        let b = CMat::from_diagonal(&CVec::from_vec(vec![C64::new(0.2, -0.4), C64::new(0.9, 0.0)]));
        let x = hilbert_point(&a, &b, &CVec::zeros(2), &CVec::zeros(2));
        let p = KNProblem::restricted(&spec2, x, &RVec::zeros(8)).unwrap();
        let st = stabilizer_data(&p).unwrap();
        assert_eq!((st.dim(), st.complex_dim(), st.v_x.ncols()), (2, 2, 2));
        let c = stability_classify(&p, &KNOptions::default()).unwrap();
        assert_eq!(c.stability, Stability::Polystable { stabilizer_dim: 2 });
        let mut s = Sampler::new(25);
        let samples: Vec<Vec<C64>> = (0..5).map(|_| (0..2).map(|_| s.complex_normal()).collect()).collect();
        assert!(stabilizer_polar_check(&p, c.outcome.point(), &samples).unwrap());
    }

    #[test]
    fn classification_examples() {
        let spec = hilbert(1).unwrap();
        let opts = KNOptions::default();
        let zero = KNProblem::restricted(&spec, spec.zero_point(), &RVec::zeros(2)).unwrap();
        assert_eq!(stability_classify(&zero, &opts).unwrap().stability, Stability::Polystable { stabilizer_dim: 1 });
        let z = CMat::from_element(1, 1, C64::new(0.3, 0.2));
        let x = hilbert_point(&z, &z, &CVec::from_vec(vec![C64::new(1.0, -0.5)]), &CVec::zeros(1));
        let p = KNProblem::restricted(&spec, x, &RVec::zeros(2)).unwrap();
        let c = stability_classify(&p, &opts).unwrap();
        assert_eq!(c.stability, Stability::Stable);
        assert!(stabilizer_polar_check(&p, c.outcome.point(), &[]).unwrap());
        for s in [0.5, 2.0, 10.0] {
            let (a, b, ok) = scale_check(&p, s, &opts).unwrap();
            assert!(ok, "{a:?} {b:?}");
        }
    }

    #[test]
    fn hilbert_k2_generic_converges() {
        let spec = hilbert(2).unwrap();
        let mut s = Sampler::new(26);
        for t in [0.5, 1.0] {
            let zeta = hilbert_zeta(2, t, 0.0);
            let x = QuaternionicPoint { z: s.complex_vec(6), w: s.complex_vec(6) };
            let p = KNProblem::restricted(&spec, x, &zeta).unwrap();
            let out = kn_minimize(&p, &KNOptions::default()).unwrap();
            assert!(out.is_critical(), "{out:?}");
            let m = spec.moment_restricted(&out.point().y).unwrap().real;
            assert!((m - &p.zeta).norm() < 1e-8);
            // Restricting to V_x reaches the same minimum.
            let st = stabilizer_data(&p).unwrap();
            let o = KNOptions { restrict: Some(st.v_x), ..Default::default() };
            let out2 = kn_minimize(&p, &o).unwrap();
            assert!((out2.point().value - out.point().value).abs() < 1e-8);
        }
    }
}
