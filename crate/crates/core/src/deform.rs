//! The deformation correspondence between `mu^{-1}(iota^* zeta) / H_rho` and
//! `sigma^{-1}(zeta) / H`, together with pointwise quotient geometry.
//!
//! `psi_hat(x) = (x, 1, eta(x))` where `eta` solves
//! `rho^*(-eta, eta) = mu_C(x) - zeta_C`. Quotient metrics and forms are
//! evaluated on the horizontal space at a level-set point: the ambient-metric
//! orthogonal complement of `K, I_1 K, I_2 K, I_3 K` for the Killing fields `K`.

use crate::error::{Error, Result};
use crate::flat_hk::{
    complex_structure_matrix, hilbert, hilbert_blocks, hilbert_point, tau, ActionSpec, QuaternionicPoint,
};
use crate::kempf_ness::{stability_classify, Classification, KNOptions, KNProblem, Stability};
use crate::lie::{inverse, logm, rank, svd, CMat, CVec, MomentValue, RVec, I, RANK_TOL};
use crate::nahm::{act_cotangent, nahm_residual, nu_complex, CotangentPoint, NahmPath};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

/// Tolerance for the complex level-set precondition.
pub const LEVEL_TOL: f64 = 1e-8;

fn real_c(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|v| C64::new(v, 0.0))
}

/// Minimum-norm least-squares solution of `m x = b` for complex `b` and real `m`.
fn lstsq_c(m: &DMatrix<f64>, b: &CVec) -> Result<CVec> {
    if m.ncols() == 0 {
        return Ok(CVec::zeros(0));
    }
    let svd = svd(m);
    let re = svd.solve(&b.map(|z| z.re), RANK_TOL).map_err(|_| Error::Singular)?;
    let im = svd.solve(&b.map(|z| z.im), RANK_TOL).map_err(|_| Error::Singular)?;
    Ok(CVec::from_fn(re.len(), |i, _| C64::new(re[i], im[i])))
}

fn lstsq(m: &DMatrix<f64>, b: &RVec) -> Result<RVec> {
    if m.ncols() == 0 {
        return Ok(RVec::zeros(0));
    }
    svd(m).solve(b, RANK_TOL).map_err(|_| Error::Singular)
}

fn require_surjective(spec: &ActionSpec) -> Result<()> {
    let (found, expected) = spec.rho_bar_rank();
    if found < expected {
        return Err(Error::RankDeficient { expected, found });
    }
    Ok(())
}

/// `(rho_1 - rho_0)^T`, the matrix of `eta -> rho^*(-eta, eta)`.
fn anti_diagonal_pullback(spec: &ActionSpec) -> DMatrix<f64> {
    (spec.rho1() - spec.rho0()).transpose()
}

/// `sigma_C(x, Q, eta) = mu_C(x) + rho^* nu_C(Q, eta)` in `H` coordinates.
pub fn sigma_complex(spec: &ActionSpec, x: &QuaternionicPoint, cot: &CotangentPoint) -> Result<CVec> {
    let nu = nu_complex(&spec.g, cot)?;
    Ok(spec.moment_hat(x)?.complex + real_c(&spec.rho.transpose()) * nu)
}

/// `eta(x)` in complex `G` coordinates.
pub fn solve_eta(spec: &ActionSpec, x: &QuaternionicPoint, zeta_c: &CVec) -> Result<CVec> {
    if zeta_c.len() != spec.h.dim() {
        return Err(Error::DimensionMismatch { expected: spec.h.dim(), got: zeta_c.len() });
    }
    let rhs = spec.moment_hat(x)?.complex - zeta_c;
    let scale = 1.0 + rhs.norm();
    let pulled = real_c(&spec.h_rho_basis().transpose()) * &rhs;
    if pulled.norm() > LEVEL_TOL * scale {
        return Err(Error::OffLevelSet(pulled.norm()));
    }
    require_surjective(spec)?;
    let m = anti_diagonal_pullback(spec);
    let eta = lstsq_c(&m, &rhs)?;
    let resid = (real_c(&m) * &eta - &rhs).norm();
    if resid > 1e-10 * scale {
        return Err(Error::OffLevelSet(resid));
    }
    Ok(eta)
}

/// `x` together with its image `psi_hat(x) = (x, 1, eta(x))`.
#[derive(Clone, Debug)]
pub struct DeformPair {
    pub spec: ActionSpec,
    pub x: QuaternionicPoint,
    /// Full parameter in `H` coordinates.
    pub zeta: MomentValue,
    /// `eta(x)` in complex `G` coordinates.
    pub eta: CVec,
    pub image: CotangentPoint,
}

impl DeformPair {
    /// `|sigma_C(image) - zeta_C|`.
    pub fn residual(&self) -> Result<f64> {
        Ok((sigma_complex(&self.spec, &self.x, &self.image)? - &self.zeta.complex).norm())
    }
}

pub fn psi_hat(spec: &ActionSpec, x: &QuaternionicPoint, zeta: &MomentValue) -> Result<DeformPair> {
    let eta = solve_eta(spec, x, &zeta.complex)?;
    let m = spec.g.matrix_size();
    let image = CotangentPoint { q: CMat::identity(m, m), eta: spec.g.to_matrix_c(&eta) };
    Ok(DeformPair { spec: spec.clone(), x: x.clone(), zeta: zeta.clone(), eta, image })
}

/// Act by `exp(xi)`, `xi` in complexified `H` coordinates, on `M x N_G`.
pub fn act_pair(
    spec: &ActionSpec,
    xi: &CVec,
    x: &QuaternionicPoint,
    cot: &CotangentPoint,
) -> Result<(QuaternionicPoint, CotangentPoint)> {
    let h = spec.h.exp_c(xi);
    let (g0, g1) = spec.rho_exp(xi);
    Ok((spec.act(&h, x)?, act_cotangent(&g0, &g1, cot)?))
}

/// Output of [`psi_inverse`]: `h = exp(xi)` with `rho_0(h) rho_1(h)^{-1} = Q`,
/// and `h^{-1} (x, Q, eta) = (point, 1, eta)`.
#[derive(Clone, Debug)]
pub struct PsiInverse {
    pub point: QuaternionicPoint,
    pub xi: CVec,
    /// `Ad_{rho_0(h)^{-1}} eta` as a matrix.
    pub eta: CMat,
    pub iterations: usize,
    /// `|rho_0(h)^{-1} Q rho_1(h) - 1|`.
    pub residual: f64,
}

pub fn psi_inverse(
    spec: &ActionSpec,
    x: &QuaternionicPoint,
    cot: &CotangentPoint,
    zeta: &MomentValue,
) -> Result<PsiInverse> {
    let off = (sigma_complex(spec, x, cot)? - &zeta.complex).norm();
    if off > LEVEL_TOL * (1.0 + zeta.complex.norm()) {
        return Err(Error::OffLevelSet(off));
    }
    require_surjective(spec)?;
    let g = &spec.g;
    let dh = spec.h.dim();
    let dg = g.dim();
    let qi = inverse(&cot.q)?;
    let diff = spec.rho0() - spec.rho1();
    let mut xi = lstsq_c(&diff, &g.coords_c(&logm(&cot.q)?))?;
    let resid = |xi: &CVec| -> Result<RVec> {
        let (a, b) = spec.rho_exp(xi);
        let m = g.matrix_size();
        let e = g.coords_c(&(&qi * a * inverse(&b)? - CMat::identity(m, m)));
        Ok(RVec::from_fn(2 * dg, |i, _| if i < dg { e[i].re } else { e[i - dg].im }))
    };
    let to_real = |xi: &CVec| RVec::from_fn(2 * dh, |i, _| if i < dh { xi[i].re } else { xi[i - dh].im });
    let from_real = |v: &RVec| CVec::from_fn(dh, |i, _| C64::new(v[i], v[dh + i]));
    let mut r = resid(&xi)?;
    let mut it = 0;
    while r.norm() > 1e-13 && it < 40 {
        it += 1;
        let base = to_real(&xi);
        let eps = 1e-7;
        let mut jac = DMatrix::<f64>::zeros(2 * dg, 2 * dh);
        for k in 0..2 * dh {
            let mut p = base.clone();
            p[k] += eps;
            jac.set_column(k, &((resid(&from_real(&p))? - &r) / eps));
        }
        let step = lstsq(&jac, &(-&r))?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = from_real(&(&base + &step * t));
            let rc = resid(&cand)?;
            if rc.norm() < r.norm() {
                xi = cand;
                r = rc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if r.norm() > 1e-9 {
        return Err(Error::NoConvergence { iterations: it, residual: r.norm() });
    }
    let (point, moved) = act_pair(spec, &(-&xi), x, cot)?;
    let m = g.matrix_size();
    let residual = (&moved.q - CMat::identity(m, m)).norm();
    Ok(PsiInverse { point, xi, eta: moved.eta, iterations: it, residual })
}

/// A shifted Nahm path `T + A_hat` with its diagnostics.
#[derive(Clone, Debug)]
pub struct ShiftedPath {
    pub path: NahmPath,
    /// `A_1, A_2, A_3` in `G` coordinates.
    pub a: [RVec; 3],
    /// Residual of `rho^*(A, -A) = zeta' - zeta`.
    pub residual: f64,
    /// Nahm residual of the shifted path; zero when `A` commutes with `T`.
    pub nahm_residual: f64,
}

pub fn parameter_shift(
    spec: &ActionSpec,
    zeta: &MomentValue,
    zeta2: &MomentValue,
    path: &NahmPath,
) -> Result<ShiftedPath> {
    if zeta.dim() != spec.h.dim() || zeta2.dim() != spec.h.dim() {
        return Err(Error::DimensionMismatch { expected: spec.h.dim(), got: zeta2.dim() });
    }
    let delta = zeta2.sub(zeta);
    let pulled = spec.restrict(&delta);
    if pulled.norm() > 1e-10 * (1.0 + zeta.norm()) {
        return Err(Error::Invalid(format!("parameters differ on h_rho (by {:.3e})", pulled.norm())));
    }
    let m = (spec.rho0() - spec.rho1()).transpose();
    let d = delta.triple();
    let mut a: [RVec; 3] = Default::default();
    let mut residual: f64 = 0.0;
    for i in 0..3 {
        a[i] = lstsq(&m, &d[i])?;
        residual = residual.max((&m * &a[i] - &d[i]).norm());
    }
    let mut out = path.clone();
    for i in 1..4 {
        let shift = spec.g.to_matrix(&a[i - 1]);
        for t in out.t[i].iter_mut() {
            *t += &shift;
        }
    }
    let nahm_residual = nahm_residual(&out);
    Ok(ShiftedPath { path: out, a, residual, nahm_residual })
}

/// Linear hyper-Kähler data at a level-set point, in real coordinates.
#[derive(Clone, Debug)]
pub struct AmbientTangent {
    pub metric: DMatrix<f64>,
    pub structures: [DMatrix<f64>; 3],
    /// Killing fields of the acting group as columns.
    pub killing: DMatrix<f64>,
    /// Distance of the point from the moment-map level.
    pub level_residual: f64,
}

impl AmbientTangent {
    /// Flat space with the metric `2 Re <,>`, acted on by the Lie algebra
    /// spanned by the columns of `basis` (in `H` coordinates). `zeta` is the
    /// level in `basis` coordinates.
    pub fn flat(spec: &ActionSpec, x: &QuaternionicPoint, basis: &DMatrix<f64>, zeta: &MomentValue) -> Result<Self> {
        let n = x.dim();
        let m = spec.moment_hat(x)?;
        let bt = basis.transpose();
        let level = MomentValue { real: &bt * &m.real, complex: real_c(&bt) * &m.complex };
        Ok(AmbientTangent {
            metric: DMatrix::identity(4 * n, 4 * n) * 2.0,
            structures: [1, 2, 3].map(|a| complex_structure_matrix(a, n)),
            killing: spec.killing_matrix(x, basis),
            level_residual: level.sub(zeta).norm(),
        })
    }

    pub fn dim(&self) -> usize {
        self.metric.nrows()
    }

    /// Matrix of `omega_axis(u, v) = g(I u, v)`.
    pub fn form_matrix(&self, axis: usize) -> DMatrix<f64> {
        self.structures[axis - 1].transpose() * &self.metric
    }

    pub fn form(&self, axis: usize, u: &RVec, v: &RVec) -> f64 {
        (&self.structures[axis - 1] * u).dot(&(&self.metric * v))
    }

    /// `omega_2 + i omega_3`.
    pub fn holomorphic_form(&self, u: &RVec, v: &RVec) -> C64 {
        C64::new(self.form(2, u, v), self.form(3, u, v))
    }

    /// Columns `K, I_1 K, I_2 K, I_3 K`.
    fn orbit_span(&self) -> DMatrix<f64> {
        let r = self.killing.ncols();
        let mut s = DMatrix::zeros(self.dim(), 4 * r);
        s.view_mut((0, 0), (self.dim(), r)).copy_from(&self.killing);
        for a in 0..3 {
            s.view_mut((0, (a + 1) * r), (self.dim(), r)).copy_from(&(&self.structures[a] * &self.killing));
        }
        s
    }
}

/// Sampled quotient geometry at one point.
#[derive(Clone, Debug)]
pub struct QuotientPointChart {
    /// Orthonormal (in coordinates) basis of the horizontal space.
    pub basis: DMatrix<f64>,
    /// Ambient metric on `basis`.
    pub metric: DMatrix<f64>,
    pub forms: [DMatrix<f64>; 3],
    /// Induced complex structures in `basis` coordinates.
    pub structures: [DMatrix<f64>; 3],
    /// Largest `|g(K, b)|` over Killing fields and basis vectors.
    pub killing_defect: f64,
    /// Largest `|d mu_a(b)|`.
    pub moment_defect: f64,
}

impl QuotientPointChart {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Ambient-metric orthogonal projection onto the horizontal space,
    /// returned in `basis` coordinates.
    pub fn project(&self, amb: &AmbientTangent, v: &RVec) -> Result<RVec> {
        let rhs = self.basis.transpose() * (&amb.metric * v);
        self.metric.clone().lu().solve(&rhs).ok_or(Error::Singular)
    }
}

/// Horizontal space at a point. With `tangent` given, the horizontal space is
/// searched inside its column span and a degenerate action is allowed.
pub fn quotient_forms_at(amb: &AmbientTangent, tangent: Option<&DMatrix<f64>>) -> Result<QuotientPointChart> {
    if amb.level_residual > LEVEL_TOL {
        return Err(Error::OffLevelSet(amb.level_residual));
    }
    let d = amb.dim();
    let r = amb.killing.ncols();
    if tangent.is_none() {
        let found = rank(&amb.killing, 1e-8);
        if found < r {
            return Err(Error::RankDeficient { expected: r, found });
        }
    }
    let t = match tangent {
        Some(t) => t.clone(),
        None => DMatrix::identity(d, d),
    };
    let s = amb.orbit_span();
    let constraint = s.transpose() * &amb.metric * &t;
    let kernel = if s.ncols() == 0 || constraint.amax() == 0.0 {
        DMatrix::identity(t.ncols(), t.ncols())
    } else {
        crate::lie::kernel_basis(&constraint, 1e-9 * (1.0 + constraint.amax()))
    };
    let raw = &t * kernel;
    let basis = crate::lie::range_basis(&raw, 1e-12);
    let metric = basis.transpose() * &amb.metric * &basis;
    let forms = [1, 2, 3].map(|a| basis.transpose() * amb.form_matrix(a) * &basis);
    let gi = metric.clone().try_inverse().ok_or(Error::Singular)?;
    let structures = [0, 1, 2].map(|a| &gi * basis.transpose() * &amb.metric * &amb.structures[a] * &basis);
    let gk = amb.killing.transpose() * &amb.metric * &basis;
    let dmu = s.columns(r, 3 * r).transpose() * &amb.metric * &basis;
    Ok(QuotientPointChart {
        killing_defect: if gk.is_empty() { 0.0 } else { gk.amax() },
        moment_defect: if dmu.is_empty() { 0.0 } else { dmu.amax() },
        basis,
        metric,
        forms,
        structures,
    })
}

pub fn quotient_metric_at(amb: &AmbientTangent, tangent: Option<&DMatrix<f64>>) -> Result<DMatrix<f64>> {
    Ok(quotient_forms_at(amb, tangent)?.metric)
}

/// Quaternion action on `(t0, t1, t2, t3)` for the abelian `N_{T^k}` chart.
fn torus_structure(axis: usize) -> [[f64; 4]; 4] {
    // Columns are the images of the unit vectors.
    match axis {
        1 => [[0.0, 1.0, 0.0, 0.0], [-1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0], [0.0, 0.0, -1.0, 0.0]],
        2 => [[0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, -1.0], [-1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]],
        _ => [[0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0, 0.0], [0.0, -1.0, 0.0, 0.0], [-1.0, 0.0, 0.0, 0.0]],
    }
}

/// A point `(a, b, theta, y)` of `M_0 x N_{T^k} = C^{2k} x T^k x R^{3k}`.
///
/// Real coordinates: `(Re a, Im a, Re b, Im b)` followed by `(theta, y_1, y_2, y_3)`,
/// each block of length `k`. The torus acts by `a -> e^{i alpha} a`,
/// `b -> e^{-i alpha} b`, `theta -> theta + alpha`, with moment `-tau(a, b) + y`.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaZeroPoint {
    pub a: Vec<C64>,
    pub b: Vec<C64>,
    pub theta: Vec<f64>,
    pub y: [RVec; 3],
}

/// The point of `sigma_0^{-1}(0)` over `(a, b)`: `y = tau(a, b)`.
pub fn hilb_sigma_zero_chart(a: &[C64], b: &[C64], theta: &[f64]) -> Result<SigmaZeroPoint> {
    if a.len() != b.len() || a.len() != theta.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len().min(theta.len()) });
    }
    Ok(SigmaZeroPoint { a: a.to_vec(), b: b.to_vec(), theta: theta.to_vec(), y: tau(a, b) })
}

impl SigmaZeroPoint {
    pub fn k(&self) -> usize {
        self.a.len()
    }

    /// `|y - tau(a, b)|`.
    pub fn level_residual(&self) -> f64 {
        let t = tau(&self.a, &self.b);
        (0..3).map(|i| (&self.y[i] - &t[i]).norm_squared()).sum::<f64>().sqrt()
    }

    pub fn flat_part(&self) -> QuaternionicPoint {
        QuaternionicPoint { z: CVec::from_vec(self.a.clone()), w: CVec::from_vec(self.b.clone()) }
    }

    /// Offset of the `N_{T^k}` block in real coordinates.
    pub fn torus_offset(&self) -> usize {
        4 * self.k()
    }

    pub fn ambient(&self) -> AmbientTangent {
        let k = self.k();
        let d = 8 * k;
        let off = self.torus_offset();
        let mut metric = DMatrix::identity(d, d);
        metric.view_mut((0, 0), (off, off)).scale_mut(2.0);
        let structures = [1, 2, 3].map(|axis| {
            let mut m = DMatrix::zeros(d, d);
            m.view_mut((0, 0), (off, off)).copy_from(&complex_structure_matrix(axis, k));
            let q = torus_structure(axis);
            for j in 0..k {
                for (col, img) in q.iter().enumerate() {
                    for (row, v) in img.iter().enumerate() {
                        m[(off + row * k + j, off + col * k + j)] = *v;
                    }
                }
            }
            m
        });
        let mut killing = DMatrix::zeros(d, k);
        for j in 0..k {
            let mut z = CVec::zeros(k);
            let mut w = CVec::zeros(k);
            z[j] = I * self.a[j];
            w[j] = -I * self.b[j];
            let mut col = RVec::zeros(d);
            col.rows_mut(0, off).copy_from(&QuaternionicPoint { z, w }.to_real());
            col[off + j] = 1.0;
            killing.set_column(j, &col);
        }
        AmbientTangent { metric, structures, killing, level_residual: self.level_residual() }
    }

    /// Rows picking out `y_1, y_2, y_3` (3k x 8k).
    pub fn y_rows(&self) -> DMatrix<f64> {
        let k = self.k();
        let off = self.torus_offset();
        let mut m = DMatrix::zeros(3 * k, 8 * k);
        for i in 0..3 * k {
            m[(i, off + k + i)] = 1.0;
        }
        m
    }

    /// `d/d theta_j` as columns (8k x k).
    pub fn angle_fields(&self) -> DMatrix<f64> {
        let k = self.k();
        let mut m = DMatrix::zeros(8 * k, k);
        for j in 0..k {
            m[(self.torus_offset() + j, j)] = 1.0;
        }
        m
    }

    /// The same point inside `M x N_{U(k)}` for the Hilbert preset:
    /// `A = diag(a)`, `B = diag(b)`, `p = q = 0`, `Q = exp(i theta - y_1)`,
    /// `eta = i y_2 - y_3`.
    pub fn to_hilbert(&self) -> (QuaternionicPoint, CotangentPoint) {
        let k = self.k();
        let diag = |f: &dyn Fn(usize) -> C64| CMat::from_fn(k, k, |i, j| if i == j { f(i) } else { C64::new(0.0, 0.0) });
        let a = diag(&|i| self.a[i]);
        let b = diag(&|i| self.b[i]);
        let x = hilbert_point(&a, &b, &CVec::zeros(k), &CVec::zeros(k));
        let q = diag(&|i| (I * self.theta[i] - self.y[0][i]).exp());
        let eta = diag(&|i| I * self.y[1][i] - self.y[2][i]);
        (x, CotangentPoint { q, eta })
    }
}

/// Metric of the `k = 1` quotient in the frame `(h_1, h_2, h_3, f)`: `h_i` are
/// horizontal with `dy_j(h_i) = delta_ij` and orthogonal to `f`, the horizontal
/// part of `d/d theta`.
#[derive(Clone, Debug)]
pub struct TaubNutSample {
    pub r: f64,
    pub gram: DMatrix<f64>,
    pub chart: QuotientPointChart,
}

pub fn taub_nut_frame(point: &SigmaZeroPoint) -> Result<TaubNutSample> {
    if point.k() != 1 {
        return Err(Error::Invalid("the Taub-NUT frame is defined for k = 1".into()));
    }
    let amb = point.ambient();
    let chart = quotient_forms_at(&amb, None)?;
    let f = chart.project(&amb, &point.angle_fields().column(0).into_owned())?;
    let yb = point.y_rows() * &chart.basis;
    let mut sys = DMatrix::zeros(4, 4);
    sys.view_mut((0, 0), (3, 4)).copy_from(&yb);
    sys.row_mut(3).copy_from(&(&chart.metric * &f).transpose());
    let lu = sys.lu();
    let mut frame = DMatrix::zeros(4, 4);
    for i in 0..3 {
        let mut e = RVec::zeros(4);
        e[i] = 1.0;
        frame.set_column(i, &lu.solve(&e).ok_or(Error::Singular)?);
    }
    frame.set_column(3, &f);
    let gram = frame.transpose() * &chart.metric * &frame;
    let r = point.y.iter().map(|v| v[0] * v[0]).sum::<f64>().sqrt();
    Ok(TaubNutSample { r, gram, chart })
}

/// `V = lambda + m / r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GibbonsHawkingFit {
    pub lambda: f64,
    pub m: f64,
}

impl GibbonsHawkingFit {
    /// Fit from the horizontal `dy` block at two radii.
    pub fn from_pair(s1: &TaubNutSample, s2: &TaubNutSample) -> Result<Self> {
        let v1 = s1.gram[(0, 0)];
        let v2 = s2.gram[(0, 0)];
        let det = 1.0 / s2.r - 1.0 / s1.r;
        if det.abs() < 1e-12 {
            return Err(Error::Invalid("fit radii coincide".into()));
        }
        let m = (v2 - v1) / det;
        Ok(GibbonsHawkingFit { lambda: v1 - m / s1.r, m })
    }

    pub fn potential(&self, r: f64) -> f64 {
        self.lambda + self.m / r
    }

    /// Largest relative deviation of the sample's frame Gram matrix from
    /// `diag(V, V, V, 1 / V)`.
    pub fn relative_error(&self, s: &TaubNutSample) -> f64 {
        let v = self.potential(s.r);
        let want = [v, v, v, 1.0 / v];
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let w = if i == j { want[i] } else { 0.0 };
                let scale = (want[i] * want[j]).sqrt();
                worst = worst.max((s.gram[(i, j)] - w).abs() / scale);
            }
        }
        worst
    }
}

/// Real coordinates of the `(A, B)` block of a Hilbert point (columns).
pub fn hilbert_ab_directions(k: usize) -> DMatrix<f64> {
    let n = k * k + k;
    let kk = k * k;
    let mut m = DMatrix::zeros(4 * n, 4 * kk);
    for blk in 0..4 {
        for j in 0..kk {
            m[(blk * n + j, blk * kk + j)] = 1.0;
        }
    }
    m
}

/// Result of comparing `omega_2 + i omega_3` on matched horizontal bases.
#[derive(Clone, Debug)]
pub struct FormTransfer {
    /// Source form on the source horizontal basis.
    pub source: DMatrix<C64>,
    /// Target form on the pushed-forward, projected basis.
    pub target: DMatrix<C64>,
    pub max_defect: f64,
    pub target_point: SigmaZeroPoint,
    pub classification: Classification,
}

/// For `k = 1`, `zeta = 0` and `x = (a, b, 0, 0)`: push the horizontal space of
/// `mu^{-1}(0) / U(1)` through `d psi_hat` and the minimizing `h`, project onto
/// the horizontal space of `sigma_0^{-1}(0)`, and compare holomorphic forms.
pub fn form_transfer_hilbert1(a: C64, b: C64, opts: &KNOptions, nahm_n: usize) -> Result<FormTransfer> {
    let spec = hilbert(1)?;
    let dh = spec.h.dim();
    let zero = MomentValue::zeros(dh);
    let x = hilbert_point(&CMat::from_element(1, 1, a), &CMat::from_element(1, 1, b), &CVec::zeros(1), &CVec::zeros(1));
    let pair = psi_hat(&spec, &x, &zero)?;

    let basis = spec.h_rho_basis().clone();
    let src_amb = AmbientTangent::flat(&spec, &x, &basis, &MomentValue::zeros(basis.ncols()))?;
    let src = quotient_forms_at(&src_amb, Some(&hilbert_ab_directions(1)))?;

    let problem = KNProblem::with_cotangent(&spec, x.clone(), pair.image.clone(), &RVec::zeros(dh), nahm_n)?;
    let classification = stability_classify(&problem, opts)?;
    let end = classification.outcome.point();
    if !classification.outcome.is_critical() {
        return Err(Error::Invalid(format!("H-problem is {}", classification.stability.label())));
    }
    let h = end.g.clone().ok_or(Error::Invalid("overflowed group element".into()))?;
    let cot = end.cot.clone().ok_or(Error::Invalid("missing cotangent datum".into()))?;
    let (a2, b2, _, _) = hilbert_blocks(1, &end.y);
    let lq = logm(&cot.q)?[(0, 0)];
    let eta = cot.eta[(0, 0)];
    let target_point = SigmaZeroPoint {
        a: vec![a2[(0, 0)]],
        b: vec![b2[(0, 0)]],
        theta: vec![lq.im],
        y: [RVec::from_element(1, -lq.re), RVec::from_element(1, eta.im), RVec::from_element(1, -eta.re)],
    };
    let tgt_amb = target_point.ambient();
    let tgt = quotient_forms_at(&tgt_amb, None)?;

    let q = src.dim();
    let mut pushed = Vec::with_capacity(q);
    let eps = 1e-4;
    for j in 0..q {
        let u = src.basis.column(j).into_owned();
        let du = QuaternionicPoint::from_real(&u);
        let ep = solve_eta(&spec, &x.add(&du.scale(eps)), &zero.complex)?;
        let em = solve_eta(&spec, &x.sub(&du.scale(eps)), &zero.complex)?;
        let deta = spec.g.to_matrix_c(&((ep - em) / C64::new(2.0 * eps, 0.0)));
        let dx = spec.act(&h, &du)?;
        let (da, db, _, _) = hilbert_blocks(1, &dx);
        let g0 = h.view((0, 0), (1, 1)).into_owned();
        let deta = &g0 * deta * inverse(&g0)?;
        let mut v = RVec::zeros(8);
        v.rows_mut(0, 4).copy_from(
            &QuaternionicPoint { z: CVec::from_element(1, da[(0, 0)]), w: CVec::from_element(1, db[(0, 0)]) }.to_real(),
        );
        v[6] = deta[(0, 0)].im;
        v[7] = -deta[(0, 0)].re;
        pushed.push(&tgt.basis * tgt.project(&tgt_amb, &v)?);
    }
    let mut source = DMatrix::zeros(q, q);
    let mut target = DMatrix::zeros(q, q);
    let mut worst: f64 = 0.0;
    for i in 0..q {
        for j in 0..q {
            let ui = src.basis.column(i).into_owned();
            let uj = src.basis.column(j).into_owned();
            source[(i, j)] = src_amb.holomorphic_form(&ui, &uj);
            target[(i, j)] = tgt_amb.holomorphic_form(&pushed[i], &pushed[j]);
            worst = worst.max((source[(i, j)] - target[(i, j)]).norm());
        }
    }
    Ok(FormTransfer { source, target, max_defect: worst, target_point, classification })
}

/// Classification of `x` for `H_rho` next to that of `psi_hat(x)` for `H`.
#[derive(Clone, Debug)]
pub struct StabilityTransfer {
    pub pair: DeformPair,
    pub sigma_residual: f64,
    pub source: Classification,
    pub target: Classification,
}

impl StabilityTransfer {
    pub fn labels_agree(&self) -> bool {
        self.source.stability.label() == self.target.stability.label()
    }

    pub fn stabilizers_agree(&self) -> bool {
        self.source.stabilizer.complex_dim() == self.target.stabilizer.complex_dim()
            && self.source.stabilizer.dim() == self.target.stabilizer.dim()
    }

    pub fn agrees(&self) -> bool {
        let dims = match (&self.source.stability, &self.target.stability) {
            (Stability::Polystable { stabilizer_dim: a }, Stability::Polystable { stabilizer_dim: b }) => a == b,
            _ => true,
        };
        self.labels_agree() && self.stabilizers_agree() && dims
    }
}

pub fn stability_transfer(
    spec: &ActionSpec,
    x: &QuaternionicPoint,
    zeta: &MomentValue,
    source_opts: &KNOptions,
    target_opts: &KNOptions,
    nahm_n: usize,
) -> Result<StabilityTransfer> {
    let pair = psi_hat(spec, x, zeta)?;
    let sigma_residual = pair.residual()?;
    let source = stability_classify(&KNProblem::restricted(spec, x.clone(), &zeta.real)?, source_opts)?;
    let problem = KNProblem::with_cotangent(spec, x.clone(), pair.image.clone(), &zeta.real, nahm_n)?;
    let target = stability_classify(&problem, target_opts)?;
    Ok(StabilityTransfer { pair, sigma_residual, source, target })
}

/// Move `x` onto `iota^* mu_C = zeta_C` (given in `h_rho_basis` coordinates)
/// by the minimum-norm correction of `w`; `iota^* mu_C` is linear in `w`.
pub fn onto_complex_level(spec: &ActionSpec, x: &QuaternionicPoint, zeta_c: &CVec) -> Result<QuaternionicPoint> {
    let basis = spec.h_rho_basis();
    if zeta_c.len() != basis.ncols() {
        return Err(Error::DimensionMismatch { expected: basis.ncols(), got: zeta_c.len() });
    }
    let n = x.dim();
    let mut rows = DMatrix::<C64>::zeros(basis.ncols(), n);
    for a in 0..basis.ncols() {
        let mut gen = CMat::zeros(n, n);
        for (j, g) in spec.generators().iter().enumerate() {
            gen += g * C64::new(basis[(j, a)], 0.0);
        }
        let v = gen * &x.z * (I * 2.0);
        rows.row_mut(a).copy_from(&v.transpose());
    }
    let rhs = zeta_c - &rows * &x.w;
    let svd = svd(&rows);
    let cut = 1e-10 * svd.singular_values.max().max(1.0);
    let dw = svd.solve(&rhs, cut).map_err(|_| Error::Singular)?;
    let out = QuaternionicPoint { z: x.z.clone(), w: &x.w + dw };
    let got = spec.moment_restricted(&out)?.complex;
    let resid = (got - zeta_c).norm();
    if resid > 1e-10 * (1.0 + zeta_c.norm() + x.norm2()) {
        return Err(Error::OffLevelSet(resid));
    }
    Ok(out)
}

/// Families of Hilbert-preset points on `mu_C = 0` used for sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HilbertFamily {
    /// `B` a polynomial in `A`, generic `p`, `q = 0`.
    Cyclic,
    /// `B` a polynomial in `A`, `p = 0`, generic `q`.
    Cocyclic,
    /// Diagonal `A`, `B` and `p = q = 0`.
    Diagonal,
}

pub fn hilbert_sample(k: usize, family: HilbertFamily, s: &mut crate::rng::Sampler) -> QuaternionicPoint {
    let half = C64::new(0.5, 0.0);
    let (a, b) = match family {
        HilbertFamily::Diagonal => (
            CMat::from_diagonal(&(s.complex_vec(k) * half)),
            CMat::from_diagonal(&(s.complex_vec(k) * half)),
        ),
        _ => {
            let a = s.complex_mat(k, k) * half;
            let c0 = s.complex_normal() * 0.5;
            let c1 = s.complex_normal() * 0.5;
            let b = CMat::identity(k, k) * c0 + &a * c1;
            (a, b)
        }
    };
    let v = s.complex_vec(k) * half;
    let zero = CVec::zeros(k);
    match family {
        HilbertFamily::Cyclic => hilbert_point(&a, &b, &v, &zero),
        HilbertFamily::Cocyclic => hilbert_point(&a, &b, &zero, &v),
        HilbertFamily::Diagonal => hilbert_point(&a, &b, &zero, &zero),
    }
}

/// `zeta_1 = (c0 i Id, c1 i Id)` with `zeta_C = 0`, in `H` coordinates.
pub fn hilbert_parameter(spec: &ActionSpec, c0: f64, c1: f64) -> MomentValue {
    let k = spec.g.matrix_size();
    let mut m = CMat::zeros(2 * k, 2 * k);
    for j in 0..k {
        m[(j, j)] = I * c0;
        m[(k + j, k + j)] = I * c1;
    }
    MomentValue { real: spec.h.coords(&m), complex: CVec::zeros(spec.h.dim()) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flat_hk::{hilbert_scaled, quiver};
    use crate::nahm::nu_endpoints;
    use crate::rng::Sampler;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_xi(s: &mut Sampler, d: usize, scale: f64) -> CVec {
        s.complex_vec(d) * c(scale, 0.0)
    }

    /// Hilbert point with `[A, B] + p q = 0`: `B` a polynomial in `A`, `q = 0`.
    fn commuting_point(s: &mut Sampler, k: usize) -> QuaternionicPoint {
        let a = s.complex_mat(k, k) * c(0.5, 0.0);
        let b = CMat::identity(k, k) * (s.complex_normal() * 0.5) + &a * (s.complex_normal() * 0.5);
        hilbert_point(&a, &b, &(s.complex_vec(k) * c(0.5, 0.0)), &CVec::zeros(k))
    }

    #[test]
    fn eta_for_hilbert_is_the_anti_diagonal_value() {
        let spec = hilbert(1).unwrap();
        let x = hilbert_point(
            &CMat::from_element(1, 1, c(0.7, 0.2)),
            &CMat::from_element(1, 1, c(-0.3, 0.5)),
            &CVec::zeros(1),
            &CVec::zeros(1),
        );
        let m = spec.moment_hat(&x).unwrap().complex;
        // For k = 1 the two components are opposite.
        assert!((m[0] + m[1]).norm() < 1e-14);
        let eta = solve_eta(&spec, &x, &CVec::zeros(2)).unwrap();
        assert!((eta[0] - m[1]).norm() < 1e-14);
        let same = solve_eta(&spec, &x, &m).unwrap();
        assert!(same.norm() < 1e-14);
    }

    #[test]
    fn projection_onto_the_complex_level() {
        let mut s = Sampler::new(21);
        for spec in [hilbert(2).unwrap(), quiver(&[1, 2, 1], &[0, 1, 0], &[(0, 1), (1, 2)]).unwrap()] {
            let n = spec.rep.dim();
            let x = QuaternionicPoint { z: s.complex_vec(n), w: s.complex_vec(n) };
            let target = CVec::zeros(spec.h_rho_basis().ncols());
            let y = onto_complex_level(&spec, &x, &target).unwrap();
            assert!(spec.moment_restricted(&y).unwrap().complex.norm() < 1e-10);
            let pair = psi_hat(&spec, &y, &MomentValue::zeros(spec.h.dim())).unwrap();
            assert!(pair.residual().unwrap() < 1e-10);
        }
    }

    #[test]
    fn eta_rejects_points_off_the_level_set() {
        let spec = hilbert(1).unwrap();
        let x = hilbert_point(
            &CMat::from_element(1, 1, c(0.0, 0.0)),
            &CMat::from_element(1, 1, c(0.0, 0.0)),
            &CVec::from_element(1, c(1.0, 0.0)),
            &CVec::from_element(1, c(1.0, 0.0)),
        );
        assert!(matches!(solve_eta(&spec, &x, &CVec::zeros(2)), Err(Error::OffLevelSet(_))));
    }

    #[test]
    fn eta_on_a_quiver_chain() {
        // Split A_2 chain: vertex 0 split into two copies joined through vertex 1.
        let spec = quiver(&[1, 2, 1], &[0, 1, 0], &[(0, 1), (1, 2)]).unwrap();
        let mut s = Sampler::new(11);
        let n = spec.rep.dim();
        // Move a random point onto the complex level set of H_rho by shifting zeta.
        let x = QuaternionicPoint { z: s.complex_vec(n) * c(0.4, 0.0), w: s.complex_vec(n) * c(0.4, 0.0) };
        let m = spec.moment_hat(&x).unwrap().complex;
        let b = spec.h_rho_basis();
        let zeta_c = real_c(&(b * b.transpose())) * &m;
        let eta = solve_eta(&spec, &x, &zeta_c).unwrap();
        let back = real_c(&anti_diagonal_pullback(&spec)) * &eta;
        assert!((back - (m - &zeta_c)).norm() < 1e-10);
    }

    #[test]
    fn psi_hat_hits_the_complex_level_and_is_equivariant() {
        let mut s = Sampler::new(5);
        for k in [1usize, 2] {
            let spec = hilbert(k).unwrap();
            let x = commuting_point(&mut s, k);
            let zeta = MomentValue::zeros(spec.h.dim());
            let pair = psi_hat(&spec, &x, &zeta).unwrap();
            assert!(pair.residual().unwrap() < 1e-10);
            for _ in 0..3 {
                let xr = random_xi(&mut s, spec.h_rho_basis().ncols(), 0.3);
                let xi = real_c(spec.h_rho_basis()) * xr;
                let (hx, hcot) = act_pair(&spec, &xi, &x, &pair.image).unwrap();
                let moved = psi_hat(&spec, &hx, &zeta).unwrap();
                assert!((&moved.image.q - &hcot.q).norm() < 1e-10);
                assert!((&moved.image.eta - &hcot.eta).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn psi_inverse_round_trip() {
        let mut s = Sampler::new(8);
        for k in [1usize, 2] {
            let spec = hilbert(k).unwrap();
            let zeta = MomentValue::zeros(spec.h.dim());
            let x = commuting_point(&mut s, k);
            let pair = psi_hat(&spec, &x, &zeta).unwrap();
            // Trivial chart.
            let inv = psi_inverse(&spec, &x, &pair.image, &zeta).unwrap();
            assert!(inv.xi.norm() < 1e-12);
            assert!(inv.point.sub(&x).norm2() < 1e-24);
            let xi = random_xi(&mut s, spec.h.dim(), 0.3);
            let (y, cot) = act_pair(&spec, &xi, &x, &pair.image).unwrap();
            let inv = psi_inverse(&spec, &y, &cot, &zeta).unwrap();
            assert!(inv.residual < 1e-9);
            let back = psi_hat(&spec, &inv.point, &zeta).unwrap();
            assert!((spec.g.to_matrix_c(&back.eta) - &inv.eta).norm() < 1e-9);
            let (y2, cot2) = act_pair(&spec, &inv.xi, &inv.point, &back.image).unwrap();
            assert!(y2.sub(&y).norm2().sqrt() < 1e-9);
            assert!((&cot2.q - &cot.q).norm() < 1e-9);
            assert!((&cot2.eta - &cot.eta).norm() < 1e-9);
        }
    }

    #[test]
    fn psi_inverse_diagonal_hilbert_chart() {
        // B = q = 0 puts x on mu_C = 0 with eta = 0.
        let spec = hilbert(2).unwrap();
        let zeta = MomentValue::zeros(spec.h.dim());
        let mut s = Sampler::new(2);
        let x = hilbert_point(&s.complex_mat(2, 2), &CMat::zeros(2, 2), &s.complex_vec(2), &CVec::zeros(2));
        let d = CMat::from_diagonal(&CVec::from_vec(vec![c(0.3, 0.4), c(-0.2, 0.1)]));
        // (e^d, 1) moves (x, 1, 0) to (e^d x, e^d, 0).
        let mut hm = CMat::identity(4, 4);
        hm.view_mut((0, 0), (2, 2)).copy_from(&d.exp());
        let y = spec.act(&hm, &x).unwrap();
        let cot = CotangentPoint { q: d.exp(), eta: CMat::zeros(2, 2) };
        let inv = psi_inverse(&spec, &y, &cot, &zeta).unwrap();
        let (a, b) = spec.rho_exp(&inv.xi);
        assert!((a * inverse(&b).unwrap() - d.exp()).norm() < 1e-10);
        assert!(inv.residual < 1e-10);
        assert!(inv.eta.norm() < 1e-14);
        // The recovered point differs from x by an element of H_rho^C.
        let back = psi_hat(&spec, &inv.point, &zeta).unwrap();
        let (y2, _) = act_pair(&spec, &inv.xi, &inv.point, &back.image).unwrap();
        assert!(y2.sub(&y).norm2().sqrt() < 1e-9);
    }

    #[test]
    fn parameter_shift_examples() {
        let spec = hilbert(1).unwrap();
        let g = spec.g.clone();
        let n = 32;
        let zeta = MomentValue::zeros(2);
        let same = parameter_shift(&spec, &zeta, &zeta, &NahmPath::zero(&g, n)).unwrap();
        assert!(same.a.iter().all(|v| v.norm() < 1e-15));
        // Shift along the anti-diagonal (1, -1).
        let shift = [0.3, -0.2, 0.5];
        let z2 = MomentValue::from_triple(shift.map(|v| RVec::from_vec(vec![v, -v])));
        let out = parameter_shift(&spec, &zeta, &z2, &NahmPath::zero(&g, n)).unwrap();
        assert!(out.residual < 1e-14 && out.nahm_residual < 1e-14);
        for i in 0..3 {
            assert!((g.coords(&out.path.t[i + 1][n / 2]) - &out.a[i]).norm() < 1e-15);
            assert!(out.a[i][0] != 0.0);
        }
        let bad = MomentValue::from_triple([RVec::from_vec(vec![1.0, 0.0]), RVec::zeros(2), RVec::zeros(2)]);
        assert!(parameter_shift(&spec, &zeta, &bad, &NahmPath::zero(&g, n)).is_err());
    }

    #[test]
    fn parameter_shift_moves_level_sets() {
        let spec = hilbert(1).unwrap();
        let mut s = Sampler::new(4);
        let n = 32;
        for _ in 0..5 {
            let x = QuaternionicPoint { z: s.complex_vec(2), w: s.complex_vec(2) };
            let v = s.normal_vec(4);
            let t = [0, 1, 2, 3].map(|i| I * v[i]);
            let path = NahmPath::constant(&spec.g, n, t.map(|z| CMat::from_element(1, 1, z)));
            let zeta = spec.sigma_moment(&x, &nu_endpoints(&path)).unwrap();
            let d = s.normal_vec(3);
            let z2 = zeta.add(&MomentValue::from_triple([0, 1, 2].map(|i| RVec::from_vec(vec![d[i], -d[i]]))));
            let out = parameter_shift(&spec, &zeta, &z2, &path).unwrap();
            let got = spec.sigma_moment(&x, &nu_endpoints(&out.path)).unwrap();
            assert!(got.sub(&z2).norm() < 1e-12);
        }
    }

    #[test]
    fn flat_quotient_on_the_ab_directions() {
        let spec = hilbert(1).unwrap();
        let x = hilbert_point(
            &CMat::from_element(1, 1, c(0.4, -0.1)),
            &CMat::from_element(1, 1, c(0.2, 0.3)),
            &CVec::zeros(1),
            &CVec::zeros(1),
        );
        let basis = spec.h_rho_basis().clone();
        let amb = AmbientTangent::flat(&spec, &x, &basis, &MomentValue::zeros(1)).unwrap();
        // The action is not free at p = q = 0.
        assert!(matches!(quotient_forms_at(&amb, None), Err(Error::RankDeficient { .. })));
        let chart = quotient_forms_at(&amb, Some(&hilbert_ab_directions(1))).unwrap();
        assert_eq!(chart.dim(), 4);
        assert!((&chart.metric - DMatrix::identity(4, 4) * 2.0).amax() < 1e-12);
        for a in 0..3 {
            let i2 = &chart.structures[a] * &chart.structures[a];
            assert!((i2 + DMatrix::identity(4, 4)).amax() < 1e-12);
            assert!((&chart.forms[a] + chart.forms[a].transpose()).amax() < 1e-14);
        }
    }

    #[test]
    fn generic_flat_quotient_is_horizontal() {
        let spec = hilbert(2).unwrap();
        let mut s = Sampler::new(3);
        let x = QuaternionicPoint { z: s.complex_vec(6), w: s.complex_vec(6) };
        let basis = spec.h_rho_basis().clone();
        let m = spec.moment_restricted(&x).unwrap();
        let amb = AmbientTangent::flat(&spec, &x, &basis, &m).unwrap();
        let chart = quotient_forms_at(&amb, None).unwrap();
        assert_eq!(chart.dim(), 4 * 2);
        assert!(chart.killing_defect < 1e-10);
        assert!(chart.moment_defect < 1e-8);
        // d mu agrees with the finite difference of the moment map on the basis.
        for j in 0..chart.dim() {
            let v = QuaternionicPoint::from_real(&chart.basis.column(j).into_owned());
            let h = 1e-6;
            let mp = spec.moment_restricted(&x.add(&v.scale(h))).unwrap();
            let mm = spec.moment_restricted(&x.sub(&v.scale(h))).unwrap();
            assert!(mp.sub(&mm).norm() / (2.0 * h) < 1e-7);
        }
    }

    #[test]
    fn sigma_zero_chart_examples() {
        let p = hilb_sigma_zero_chart(&[c(0.0, 0.0)], &[c(0.0, 0.0)], &[0.0]).unwrap();
        assert!(p.y.iter().all(|v| v.norm() == 0.0));
        let p = hilb_sigma_zero_chart(&[c(1.0, 0.0)], &[c(0.0, 0.0)], &[0.3]).unwrap();
        assert_eq!([p.y[0][0], p.y[1][0], p.y[2][0]], [1.0, 0.0, 0.0]);
        let p = hilb_sigma_zero_chart(&[c(0.6, 0.1), c(-0.2, 0.4)], &[c(0.3, -0.5), c(0.7, 0.2)], &[0.1, 0.2]).unwrap();
        let amb = p.ambient();
        assert_eq!(rank(&amb.killing, 1e-8), 2);
        let chart = quotient_forms_at(&amb, None).unwrap();
        assert_eq!(chart.dim(), 8);
    }

    #[test]
    fn sigma_zero_killing_fields_match_the_moment() {
        // omega_a(K, v) = d sigma_0^a (v) with sigma_0 = -tau + y.
        let p = hilb_sigma_zero_chart(&[c(0.6, 0.1)], &[c(0.3, -0.5)], &[0.2]).unwrap();
        let amb = p.ambient();
        let mut s = Sampler::new(9);
        let sigma = |v: &RVec| {
            let f = QuaternionicPoint::from_real(&v.rows(0, 4).into_owned());
            let t = tau(f.z.as_slice(), f.w.as_slice());
            [0, 1, 2].map(|i| v[5 + i] - t[i][0])
        };
        let mut base = RVec::zeros(8);
        base.rows_mut(0, 4).copy_from(&p.flat_part().to_real());
        base[4] = p.theta[0];
        for i in 0..3 {
            base[5 + i] = p.y[i][0];
        }
        let k = amb.killing.column(0).into_owned();
        for _ in 0..4 {
            let v = s.normal_vec(8);
            let h = 1e-6;
            let sp = sigma(&(&base + &v * h));
            let sm = sigma(&(&base - &v * h));
            for a in 0..3 {
                let fd = (sp[a] - sm[a]) / (2.0 * h);
                assert!((amb.form(a + 1, &k, &v) - fd).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn sigma_zero_chart_lies_on_the_full_level_set() {
        let spec = hilbert(2).unwrap();
        let p = hilb_sigma_zero_chart(&[c(0.6, 0.1), c(-0.2, 0.4)], &[c(0.3, -0.5), c(0.7, 0.2)], &[0.1, -0.7]).unwrap();
        let (x, cot) = p.to_hilbert();
        assert!(sigma_complex(&spec, &x, &cot).unwrap().norm() < 1e-13);
        let g = &spec.g;
        let t1 = CMat::from_diagonal(&CVec::from_fn(2, |i, _| I * p.y[0][i]));
        let t0 = CMat::from_diagonal(&CVec::from_fn(2, |i, _| I * p.theta[i]));
        let t2 = CMat::from_diagonal(&CVec::from_fn(2, |i, _| I * p.y[1][i]));
        let t3 = CMat::from_diagonal(&CVec::from_fn(2, |i, _| I * p.y[2][i]));
        let path = NahmPath::constant(g, 16, [t0, t1, t2, t3]);
        let s = spec.sigma_moment(&x, &nu_endpoints(&path)).unwrap();
        assert!(s.norm() < 1e-13);
    }

    #[test]
    fn taub_nut_frame_is_diagonal_and_circle_invariant() {
        let a = c(0.8, 0.3);
        let b = c(-0.4, 0.6);
        let p = hilb_sigma_zero_chart(&[a], &[b], &[0.0]).unwrap();
        let s = taub_nut_frame(&p).unwrap();
        let v = s.gram[(0, 0)];
        for i in 0..4 {
            for j in 0..4 {
                let want = if i != j { 0.0 } else if i < 3 { v } else { 1.0 / v };
                assert!((s.gram[(i, j)] - want).abs() < 1e-10, "{}", s.gram);
            }
        }
        let beta = 0.9;
        let rot = hilb_sigma_zero_chart(&[a * (-I * beta).exp()], &[b * (I * beta).exp()], &[0.0]).unwrap();
        let shifted = SigmaZeroPoint { theta: vec![beta], ..p.clone() };
        let g1 = taub_nut_frame(&rot).unwrap().gram;
        let g2 = taub_nut_frame(&shifted).unwrap().gram;
        assert!((&g1 - &s.gram).amax() < 1e-10);
        assert!((&g2 - &s.gram).amax() < 1e-10);
    }

    #[test]
    fn form_transfer_single_point() {
        let opts = KNOptions { tol: 1e-9, ..KNOptions::default() };
        let t = form_transfer_hilbert1(c(0.7, 0.2), c(-0.3, 0.5), &opts, 64).unwrap();
        assert!(t.max_defect < 1e-6, "{}", t.max_defect);
        assert!(t.target_point.level_residual() < 1e-7);
    }

    #[test]
    fn stability_transfer_small_cases() {
        let spec = hilbert_scaled(1, 1.0).unwrap();
        let opts = KNOptions::default();
        let topts = KNOptions { tol: 1e-6, ..KNOptions::default() };
        let x = hilbert_point(
            &CMat::from_element(1, 1, c(0.5, 0.1)),
            &CMat::from_element(1, 1, c(0.2, -0.3)),
            &CVec::from_element(1, c(0.8, 0.0)),
            &CVec::zeros(1),
        );
        for t in [1.0, -1.0] {
            let zeta = MomentValue { real: RVec::from_vec(vec![t, 0.0]), complex: CVec::zeros(2) };
            let tr = stability_transfer(&spec, &x, &zeta, &opts, &topts, 64).unwrap();
            assert!(tr.sigma_residual < 1e-10);
            assert!(tr.agrees(), "{:?} vs {:?}", tr.source.stability, tr.target.stability);
        }
    }
}
