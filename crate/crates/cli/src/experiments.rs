//! Sample generators and checks for each experiment.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use hkq_core::deform::{
    form_transfer_hilbert1, hilb_sigma_zero_chart, hilbert_ab_directions, hilbert_parameter, hilbert_sample,
    onto_complex_level, quotient_metric_at, stability_transfer, taub_nut_frame, AmbientTangent, GibbonsHawkingFit,
    HilbertFamily, SigmaZeroPoint, TaubNutSample,
};
use hkq_core::flat_hk::{hilbert, hilbert_point, quiver, tau, toric, ActionSpec, QuaternionicPoint};
use hkq_core::kempf_ness::{
    kn_geodesic_value, kn_minimize, scale_check, stability_classify, verify_certificate, KNOptions, KNOutcome,
    KNProblem, Stability,
};
use hkq_core::lie::I;
use hkq_core::nahm::{
    energy, gauge_act, holomorphic_coords, nahm_integrate, nahm_residual, nu_complex, nu_moment, path_energy_chart,
    GaugePath, NahmPath, PathEnergyOptions,
};
use hkq_core::rng::Sampler;
use hkq_core::{CMat, CVec, Error, GroupSpec, MomentValue, RVec};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::config::{Check, Experiment, ExperimentConfig, GroupName};
use crate::records::{sha256_hex, Record, Table, Value};

/// Values and verdict of one sample.
type Outcome = hkq_core::Result<(Vec<Value>, bool)>;

/// Run `f` on `0..n` with up to `jobs` threads; results come back in index order.
pub fn par_map<T: Send>(n: usize, jobs: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, n.max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let out = f(i);
                slots.lock().unwrap()[i] = Some(out);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|o| o.expect("every index ran")).collect()
}

/// Deterministic text form of sample inputs for the input digest.
#[derive(Default)]
struct InputLog(String);

impl InputLog {
    fn num(&mut self, name: &str, v: f64) {
        self.0.push_str(&format!("{name}={v:e};"));
    }

    fn mat(&mut self, name: &str, m: &CMat) {
        self.0.push_str(name);
        self.0.push('=');
        for z in m.iter() {
            self.0.push_str(&format!("{:e},{:e} ", z.re, z.im));
        }
        self.0.push(';');
    }

    fn vec(&mut self, name: &str, v: &CVec) {
        self.mat(name, &CMat::from_column_slice(v.len(), 1, v.as_slice()));
    }

    fn point(&mut self, x: &QuaternionicPoint) {
        self.vec("z", &x.z);
        self.vec("w", &x.w);
    }

    fn digest(&self) -> String {
        sha256_hex(self.0.as_bytes())[..16].to_string()
    }
}

fn record(sample: usize, log: &InputLog, width: usize, out: Outcome) -> Record {
    match out {
        Ok((values, pass)) => {
            debug_assert_eq!(values.len(), width);
            Record { sample, input_digest: log.digest(), values, pass, error: None }
        }
        Err(e) => Record {
            sample,
            input_digest: log.digest(),
            values: vec![Value::Missing; width],
            pass: false,
            error: Some(e.to_string()),
        },
    }
}

/// Problems with a config that only show once presets are built.
pub fn preflight(cfg: &ExperimentConfig) -> Result<(), String> {
    match cfg.experiment {
        Experiment::ToricDemo | Experiment::QuiverDemo => {
            let spec = demo_spec(cfg).map_err(|e| e.to_string())?;
            let slots = spec.h.slots().len();
            if !cfg.centers.is_empty() && cfg.centers.len() != slots {
                return Err(format!("centers has {} entries, the acting group has {slots} slots", cfg.centers.len()));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Evaluate every sample of the configured check.
pub fn run_table(cfg: &ExperimentConfig, jobs: usize) -> Table {
    let (columns, records, extras, run_pass): (Vec<&'static str>, Vec<Record>, BTreeMap<String, f64>, bool) =
        match cfg.check() {
            Check::NuConsistency => simple(cfg, jobs, &NU_COLUMNS, nu_consistency),
            Check::GaugeInvariance => simple(cfg, jobs, &GAUGE_COLUMNS, gauge_invariance),
            Check::EnergyCalibration => simple(cfg, jobs, &ENERGY_COLUMNS, energy_calibration),
            Check::Convergence => simple(cfg, jobs, &CONVERGENCE_COLUMNS, convergence),
            Check::Scaling => simple(cfg, jobs, &SCALING_COLUMNS, scaling),
            Check::StabilityTransfer => simple(cfg, jobs, &TRANSFER_COLUMNS, hilbert_transfer),
            Check::FormTransfer => simple(cfg, jobs, &FORM_COLUMNS, form_transfer),
            Check::Metric => taubnut(cfg, jobs),
            Check::Transfer => simple(cfg, jobs, &DEMO_COLUMNS, demo_transfer),
        };
    Table {
        experiment: cfg.experiment.name().into(),
        check: cfg.check().name().into(),
        config_digest: cfg.digest(),
        columns,
        records,
        extras,
        run_pass,
    }
}

type SampleFn = fn(&ExperimentConfig, usize, &mut InputLog) -> Outcome;

fn simple(
    cfg: &ExperimentConfig,
    jobs: usize,
    columns: &[&'static str],
    f: SampleFn,
) -> (Vec<&'static str>, Vec<Record>, BTreeMap<String, f64>, bool) {
    let records = par_map(cfg.samples, jobs, |i| {
        let mut log = InputLog::default();
        let out = f(cfg, i, &mut log);
        record(i, &log, columns.len(), out)
    });
    (columns.to_vec(), records, BTreeMap::new(), true)
}

fn cycle<T: Copy>(v: &[T], i: usize) -> T {
    v[i % v.len()]
}

// ---------------------------------------------------------------- Nahm data

struct NahmSample {
    name: GroupName,
    group: GroupSpec,
    init: [CMat; 3],
    t0: CMat,
}

fn algebra_element(g: &GroupSpec, name: GroupName, s: &mut Sampler, norm: f64) -> CMat {
    let mut m = g.to_matrix(&s.normal_vec(g.dim()));
    if name == GroupName::Su2 {
        let tr = m.trace() / C64::new(m.nrows() as f64, 0.0);
        m -= CMat::identity(m.nrows(), m.ncols()) * tr;
    }
    let f = m.norm();
    m * C64::new(norm / f, 0.0)
}

fn nahm_sample(cfg: &ExperimentConfig, i: usize, s: &mut Sampler, log: &mut InputLog) -> NahmSample {
    let name = cycle(&cfg.groups, i);
    let group = GroupSpec::unitary(2);
    let draw = |s: &mut Sampler| {
        let r = cfg.data_scale * s.uniform_in(0.25, 1.0);
        algebra_element(&group, name, s, r)
    };
    let init = [draw(s), draw(s), draw(s)];
    let t0 = draw(s);
    log.0.push_str(name.name());
    for (j, m) in init.iter().enumerate() {
        log.mat(&format!("T{}", j + 1), m);
    }
    log.mat("T0", &t0);
    NahmSample { name, group, init, t0 }
}

fn integrate(n: &NahmSample, grid: usize) -> hkq_core::Result<NahmPath> {
    nahm_integrate(&n.group, &n.init, |_| n.t0.clone(), grid)
}

fn max_abs_c(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

const NU_COLUMNS: [&str; 4] = ["group", "data_norm", "nahm_residual", "residual"];

fn nu_consistency(cfg: &ExperimentConfig, i: usize, log: &mut InputLog) -> Outcome {
    let mut s = Sampler::for_sample(cfg.seed, i as u64);
    let n = nahm_sample(cfg, i, &mut s, log);
    let path = integrate(&n, cfg.grid)?;
    let chart = holomorphic_coords(&path)?;
    let lhs = nu_complex(&n.group, &chart)?;
    let d = n.group.dim();
    let end = path.intervals();
    let beta = |j: usize| &path.t[2][j] + &path.t[3][j] * I;
    let mut rhs = CVec::zeros(2 * d);
    rhs.rows_mut(0, d).copy_from(&n.group.coords_c(&beta(0)));
    rhs.rows_mut(d, d).copy_from(&(-n.group.coords_c(&beta(end))));
    let residual = max_abs_c(&(lhs - rhs));
    let data_norm = n.init.iter().map(|m| m.norm()).fold(0.0, f64::max);
    let values = vec![n.name.name().into(), data_norm.into(), nahm_residual(&path).into(), residual.into()];
    Ok((values, residual < cfg.tolerance))
}

const GAUGE_COLUMNS: [&str; 5] = ["group", "based", "nahm_residual", "real_residual", "complex_residual"];

fn gauge_invariance(cfg: &ExperimentConfig, i: usize, log: &mut InputLog) -> Outcome {
    let mut s = Sampler::for_sample(cfg.seed, i as u64);
    let n = nahm_sample(cfg, i, &mut s, log);
    let gens: Vec<RVec> = (0..3).map(|_| n.group.coords(&algebra_element(&n.group, n.name, &mut s, 1.0))).collect();
    let coef: Vec<(f64, f64)> = (0..3).map(|_| (s.normal(), s.normal())).collect();
    for (k, (g, c)) in gens.iter().zip(&coef).enumerate() {
        log.0.push_str(&format!("Y{k}={:?};", g.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>()));
        log.num("a", c.0);
        log.num("b", c.1);
    }
    let path = integrate(&n, cfg.grid)?;
    let gp = GaugePath::product_of_exponentials(&n.group, cfg.grid, &gens, |k, x| {
        let (a, b) = coef[k];
        (
            a * (PI * x).sin() + b * (2.0 * PI * x).sin(),
            a * PI * (PI * x).cos() + 2.0 * b * PI * (2.0 * PI * x).cos(),
        )
    });
    let based = gp.in_based_group(1e-12);
    let moved = gauge_act(&gp, &path)?;
    let nu = nu_moment(&path)?;
    let nu2 = nu_moment(&moved)?;
    let real = (&nu2.real - &nu.real).amax();
    let complex = max_abs_c(&(&nu2.complex - &nu.complex));
    let values =
        vec![n.name.name().into(), based.into(), nahm_residual(&moved).into(), real.into(), complex.into()];
    Ok((values, based && real.max(complex) < cfg.tolerance))
}

const ENERGY_COLUMNS: [&str; 5] = ["group", "path_energy", "minimized_energy", "sweeps", "relative_error"];

fn energy_calibration(cfg: &ExperimentConfig, i: usize, log: &mut InputLog) -> Outcome {
    let mut s = Sampler::for_sample(cfg.seed, i as u64);
    let n = nahm_sample(cfg, i, &mut s, log);
    let path = integrate(&n, cfg.grid)?;
    let chart = holomorphic_coords(&path)?;
    let e = energy(&path);
    let opts = PathEnergyOptions { m: cfg.energy_grid, ..PathEnergyOptions::default() };
    let min = path_energy_chart(&n.group, &chart, &opts)?;
    let rel = (min.value - e).abs() / e;
    let values = vec![n.name.name().into(), e.into(), min.value.into(), min.sweeps.into(), rel.into()];
    Ok((values, rel < cfg.tolerance))
}

// ----------------------------------------------------------- Kempf–Ness

fn outcome_label(o: &KNOutcome) -> &'static str {
    match o {
        KNOutcome::Critical { .. } => "critical",
        KNOutcome::Divergent { .. } => "divergent",
        KNOutcome::Inconclusive { .. } => "inconclusive",
    }
}

fn iterations(o: &KNOutcome) -> usize {
    match o {
        KNOutcome::Critical { iterations, .. }
        | KNOutcome::Divergent { iterations, .. }
        | KNOutcome::Inconclusive { iterations, .. } => *iterations,
    }
}

fn source_opts(cfg: &ExperimentConfig) -> KNOptions {
    KNOptions { tol: cfg.kn_tolerance, divergence_radius: cfg.divergence_radius, ..KNOptions::default() }
}

fn target_opts(cfg: &ExperimentConfig) -> KNOptions {
    KNOptions { tol: cfg.target_tolerance, divergence_radius: cfg.target_divergence_radius, ..KNOptions::default() }
}

const CONVERGENCE_COLUMNS: [&str; 7] =
    ["k", "zeta", "outcome", "iterations", "moment_residual", "probes", "min_second_difference"];

/// Step of the geodesic second differences.
const GEODESIC_STEP: f64 = 0.1;

fn convergence(cfg: &ExperimentConfig, i: usize, log: &mut InputLog) -> Outcome {
    let mut s = Sampler::for_sample(cfg.seed, i as u64);
    let k = cycle(&cfg.k, i);
    let t = cycle(&cfg.zeta, i);
    let half = C64::new(0.5, 0.0);
    let a = s.complex_mat(k, k) * half;
    let b = s.complex_mat(k, k) * half;
    let p = s.complex_vec(k) * half;
    let q = s.complex_vec(k) * half;
    let x = hilbert_point(&a, &b, &p, &q);
    log.num("k", k as f64);
    log.num("zeta", t);
    log.point(&x);
    let spec = hilbert(k)?;
    let zeta = hilbert_parameter(&spec, t, 0.0);
    let problem = KNProblem::restricted(&spec, x, &zeta.real)?;
    let out = kn_minimize(&problem, &source_opts(cfg))?;
    let residual = problem.gradient(out.point())?.norm();
    let probes = cfg.geodesics.div_ceil(cfg.samples);
    let dim = problem.dim();
    let mut worst = f64::INFINITY;
    for _ in 0..probes {
        let xi = s.normal_vec(dim) * 0.5;
        let dir = s.unit_vec(dim);
        let f = |h: f64| kn_geodesic_value(&problem, &xi, &dir, h);
        let d2 = f(-GEODESIC_STEP)? - 2.0 * f(0.0)? + f(GEODESIC_STEP)?;
        worst = worst.min(d2);
    }
    let pass = out.is_critical() && residual < cfg.tolerance && worst >= -cfg.tolerance;
    let values = vec![
        k.into(),
        t.into(),
        outcome_label(&out).into(),
        iterations(&out).into(),
        residual.into(),
        probes.into(),
        worst.into(),
    ];
    Ok((values, pass))
}

/// `(family, c0 / t, c1 / t)` for the Hilbert stability probes.
const FAMILY_CASES: [(HilbertFamily, f64, f64); 6] = [
    (HilbertFamily::Cyclic, -1.0, 0.0),
    (HilbertFamily::Cyclic, 1.0, 0.0),
    (HilbertFamily::Cocyclic, 1.0, 0.0),
    (HilbertFamily::Cocyclic, -1.0, 0.0),
    (HilbertFamily::Diagonal, 1.0, -1.0),
    (HilbertFamily::Diagonal, 1.0, 0.0),
];

fn family_name(f: HilbertFamily) -> &'static str {
    match f {
        HilbertFamily::Cyclic => "cyclic",
        HilbertFamily::Cocyclic => "cocyclic",
        HilbertFamily::Diagonal => "diagonal",
    }
}

struct FamilySample {
    k: usize,
    family: HilbertFamily,
    c0: f64,
    c1: f64,
    spec: ActionSpec,
    x: QuaternionicPoint,
    zeta: MomentValue,
}

/// Cycles `k` fastest, then the family cases, so every size meets every case.
fn family_sample(cfg: &ExperimentConfig, i: usize, log: &mut InputLog) -> hkq_core::Result<FamilySample> {
    let mut s = Sampler::for_sample(cfg.seed, i as u64);
    let k = cycle(&cfg.k, i);
    let (family, u0, u1) = FAMILY_CASES[(i / cfg.k.len()) % FAMILY_CASES.len()];
    let t = cycle(&cfg.zeta, i / (cfg.k.len() * FAMILY_CASES.len())).abs();
    let (c0, c1) = (u0 * t, u1 * t);
    let x = hilbert_sample(k, family, &mut s);
    log.num("k", k as f64);
    log.0.push_str(family_name(family));
    log.num("c0", c0);
    log.num("c1", c1);
    log.point(&x);
    let spec = hilbert(k)?;
    let zeta = hilbert_parameter(&spec, c0, c1);
    Ok(FamilySample { k, family, c0, c1, spec, x, zeta })
}

const SCALING_COLUMNS: [&str; 9] =
    ["k", "family", "c0", "c1", "stability", "scalings_ok", "moment_slope", "fd_slope", "certificate_ok"];

fn scaling(cfg: &ExperimentConfig, i: usize, log: &mut InputLog) -> Outcome {
    let f = family_sample(cfg, i, log)?;
    let problem = KNProblem::restricted(&f.spec, f.x.clone(), &f.zeta.real)?;
    let opts = source_opts(cfg);
    let class = stability_classify(&problem, &opts)?;
    let mut ok = 0;
    let (mut slope, mut fd, mut cert) = (Value::Missing, Value::Missing, true);
    match &class.stability {
        Stability::Unstable { witness, .. } => {
            let (m, d) = verify_certificate(&problem, class.outcome.point(), witness)?;
            cert = m <= 0.0 && (m - d).abs() <= 1e-6 * (1.0 + m.abs());
            slope = m.into();
            fd = d.into();
            ok = cfg.scalings.len();
        }
        _ => {
            for &sc in &cfg.scalings {
                if scale_check(&problem, sc, &opts)?.2 {
                    ok += 1;
                }
            }
        }
    }
    let pass = cert && ok == cfg.scalings.len();
    let values = vec![
        f.k.into(),
        family_name(f.family).into(),
        f.c0.into(),
        f.c1.into(),
        class.stability.label().into(),
        ok.into(),
        slope,
        fd,
        cert.into(),
    ];
    Ok((values, pass))
}

// ---------------------------------------------------------- deformation

fn stab_dim(s: &Stability) -> Value {
    match s {
        Stability::Polystable { stabilizer_dim } => (*stabilizer_dim).into(),
        _ => Value::Missing,
    }
}

const TRANSFER_COLUMNS: [&str; 10] = [
    "k",
    "family",
    "c0",
    "c1",
    "sigma_residual",
    "source",
    "target",
    "source_stabilizer",
    "target_stabilizer",
    "target_iterations",
];

/// `psi_hat` lands on the complex level set to this accuracy.
const SIGMA_TOL: f64 = 1e-10;

fn hilbert_transfer(cfg: &ExperimentConfig, i: usize, log: &mut InputLog) -> Outcome {
    let f = family_sample(cfg, i, log)?;
    let tr = stability_transfer(&f.spec, &f.x, &f.zeta, &source_opts(cfg), &target_opts(cfg), cfg.nahm_grid)?;
    let values = vec![
        f.k.into(),
        family_name(f.family).into(),
        f.c0.into(),
        f.c1.into(),
        tr.sigma_residual.into(),
        tr.source.stability.label().into(),
        tr.target.stability.label().into(),
        stab_dim(&tr.source.stability),
        stab_dim(&tr.target.stability),
        iterations(&tr.target.outcome).into(),
    ];
    Ok((values, tr.sigma_residual < SIGMA_TOL && tr.agrees()))
}

const FORM_COLUMNS: [&str; 5] = ["a_abs", "b_abs", "level_residual", "target_outcome", "max_defect"];

fn form_transfer(cfg: &ExperimentConfig, i: usize, log: &mut InputLog) -> Outcome {
    let mut s = Sampler::for_sample(cfg.seed, i as u64);
    let (a, b) = loop {
        let a = s.complex_normal() * 0.6;
        let b = s.complex_normal() * 0.6;
        if a.norm_sqr() + b.norm_sqr() >= 0.05 {
            break (a, b);
        }
    };
    log.num("a_re", a.re);
    log.num("a_im", a.im);
    log.num("b_re", b.re);
    log.num("b_im", b.im);
    let t = form_transfer_hilbert1(a, b, &target_opts_with(cfg, cfg.kn_tolerance), cfg.nahm_grid)?;
    let values = vec![
        a.norm().into(),
        b.norm().into(),
        t.target_point.level_residual().into(),
        outcome_label(&t.classification.outcome).into(),
        t.max_defect.into(),
    ];
    Ok((values, t.classification.outcome.is_critical() && t.max_defect < cfg.tolerance))
}

fn target_opts_with(cfg: &ExperimentConfig, tol: f64) -> KNOptions {
    KNOptions { tol, ..target_opts(cfg) }
}

// ------------------------------------------------------------ Taub-NUT

const TAUBNUT_COLUMNS: [&str; 9] = [
    "role",
    "radius",
    "theta",
    "v",
    "fiber",
    "off_diagonal",
    "circle_residual",
    "flat_residual",
    "relative_error",
];

/// Invariance of the frame under the circle action, and agreement of the
/// undeformed quotient with the flat metric.
const INVARIANCE_TOL: f64 = 1e-8;
const FLAT_TOL: f64 = 1e-10;

struct TaubNutProbe {
    sample: TaubNutSample,
    theta: f64,
    circle: f64,
    flat: f64,
}

fn taubnut_probe(cfg: &ExperimentConfig, i: usize, log: &mut InputLog) -> hkq_core::Result<TaubNutProbe> {
    let mut s = Sampler::for_sample(cfg.seed, i as u64);
    let [r0, r1] = cfg.radii;
    let r = r0 * (r1 / r0).powf(i as f64 / (cfg.samples - 1) as f64);
    let dir = s.unit_vec(4);
    let (a, b) = (C64::new(dir[0], dir[1]), C64::new(dir[2], dir[3]));
    let unit = tau(&[a], &[b]).iter().map(|v| v[0] * v[0]).sum::<f64>().sqrt();
    let f = (r / unit).sqrt();
    let (a, b) = (a * f, b * f);
    let theta = s.uniform_in(0.0, 2.0 * PI);
    let beta = s.uniform_in(0.0, 2.0 * PI);
    log.num("r", r);
    log.num("a_re", a.re);
    log.num("a_im", a.im);
    log.num("b_re", b.re);
    log.num("b_im", b.im);
    log.num("theta", theta);
    log.num("beta", beta);

    let point = hilb_sigma_zero_chart(&[a], &[b], &[theta])?;
    let sample = taub_nut_frame(&point)?;
    let rotated = hilb_sigma_zero_chart(&[a * (-I * beta).exp()], &[b * (I * beta).exp()], &[theta])?;
    let shifted = SigmaZeroPoint { theta: vec![theta + beta], ..point.clone() };
    let circle = [rotated, shifted]
        .iter()
        .map(|p| taub_nut_frame(p).map(|t| (&t.gram - &sample.gram).amax()))
        .collect::<hkq_core::Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let spec = hilbert(1)?;
    let x = hilbert_point(
        &CMat::from_element(1, 1, a),
        &CMat::from_element(1, 1, b),
        &CVec::zeros(1),
        &CVec::zeros(1),
    );
    let amb = AmbientTangent::flat(&spec, &x, &spec.h_rho_basis().clone(), &MomentValue::zeros(1))?;
    let metric = quotient_metric_at(&amb, Some(&hilbert_ab_directions(1)))?;
    let flat = (metric - DMatrix::identity(4, 4) * 2.0).amax();
    Ok(TaubNutProbe { sample, theta, circle, flat })
}

/// Fit `V = lambda + m / r` from the smallest and largest radius and test the
/// frame Gram matrix at the others.
fn taubnut(cfg: &ExperimentConfig, jobs: usize) -> (Vec<&'static str>, Vec<Record>, BTreeMap<String, f64>, bool) {
    let probes = par_map(cfg.samples, jobs, |i| {
        let mut log = InputLog::default();
        let p = taubnut_probe(cfg, i, &mut log);
        (log, p)
    });
    let last = cfg.samples - 1;
    let fit = match (&probes[0].1, &probes[last].1) {
        (Ok(p0), Ok(p1)) => GibbonsHawkingFit::from_pair(&p0.sample, &p1.sample).ok(),
        _ => None,
    };
    let mut extras = BTreeMap::new();
    if let Some(f) = &fit {
        extras.insert("lambda".to_string(), f.lambda);
        extras.insert("m".to_string(), f.m);
    }
    let records = probes
        .into_iter()
        .enumerate()
        .map(|(i, (log, p))| {
            let fitting = i == 0 || i == last;
            let out = p.and_then(|p| {
                let fit = fit.ok_or_else(|| Error::Invalid("no Gibbs-Hawking fit".into()))?;
                let g = &p.sample.gram;
                let off = (0..4)
                    .flat_map(|r| (0..4).map(move |c| (r, c)))
                    .filter(|(r, c)| r != c)
                    .map(|(r, c)| g[(r, c)].abs())
                    .fold(0.0, f64::max);
                let rel = fit.relative_error(&p.sample);
                let pass = p.circle < INVARIANCE_TOL && p.flat < FLAT_TOL && (fitting || rel < cfg.tolerance);
                let values = vec![
                    if fitting { "fit" } else { "test" }.into(),
                    p.sample.r.into(),
                    p.theta.into(),
                    g[(0, 0)].into(),
                    g[(3, 3)].into(),
                    off.into(),
                    p.circle.into(),
                    p.flat.into(),
                    rel.into(),
                ];
                Ok((values, pass))
            });
            record(i, &log, TAUBNUT_COLUMNS.len(), out)
        })
        .collect();
    (TAUBNUT_COLUMNS.to_vec(), records, extras, fit.is_some())
}

// ---------------------------------------------------------------- demos

fn demo_spec(cfg: &ExperimentConfig) -> hkq_core::Result<ActionSpec> {
    match cfg.experiment {
        Experiment::ToricDemo => toric(cfg.toric_n, &cfg.kernel),
        Experiment::QuiverDemo => quiver(&cfg.dims, &cfg.projection, &cfg.edges),
        _ => Err(Error::Invalid("not a demo experiment".into())),
    }
}

/// `t * c_j * i Id` on slot `j`, in `H` coordinates.
fn central_parameter(spec: &ActionSpec, centers: &[f64], t: f64) -> MomentValue {
    let n = spec.h.matrix_size();
    let mut m = CMat::zeros(n, n);
    for (j, slot) in spec.h.slots().iter().enumerate() {
        let c = centers.get(j).copied().unwrap_or(if j == 0 { 1.0 } else { 0.0 });
        for r in slot.offset..slot.offset + slot.size {
            m[(r, r)] = I * (c * t);
        }
    }
    MomentValue { real: spec.h.coords(&m), complex: CVec::zeros(spec.h.dim()) }
}

const DEMO_COLUMNS: [&str; 7] = [
    "zeta",
    "level_residual",
    "sigma_residual",
    "source",
    "target",
    "source_stabilizer",
    "target_stabilizer",
];

fn demo_transfer(cfg: &ExperimentConfig, i: usize, log: &mut InputLog) -> Outcome {
    let mut s = Sampler::for_sample(cfg.seed, i as u64);
    let spec = demo_spec(cfg)?;
    let n = spec.rep.dim();
    let half = C64::new(0.5, 0.0);
    let raw = QuaternionicPoint { z: s.complex_vec(n) * half, w: s.complex_vec(n) * half };
    let t = cycle(&cfg.zeta, i);
    log.num("zeta", t);
    log.point(&raw);
    let x = onto_complex_level(&spec, &raw, &CVec::zeros(spec.h_rho_basis().ncols()))?;
    let level = spec.moment_restricted(&x)?.complex.norm();
    let zeta = central_parameter(&spec, &cfg.centers, t);
    let tr = stability_transfer(&spec, &x, &zeta, &source_opts(cfg), &target_opts(cfg), cfg.nahm_grid)?;
    let values = vec![
        t.into(),
        level.into(),
        tr.sigma_residual.into(),
        tr.source.stability.label().into(),
        tr.target.stability.label().into(),
        tr.source.stabilizer.dim().into(),
        tr.target.stabilizer.dim().into(),
    ];
    Ok((values, tr.sigma_residual < SIGMA_TOL && tr.agrees()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_keeps_order() {
        for jobs in [1, 3, 16] {
            let v = par_map(10, jobs, |i| i * i);
            assert_eq!(v, (0..10).map(|i| i * i).collect::<Vec<_>>());
        }
        assert!(par_map(0, 4, |i| i).is_empty());
    }

    #[test]
    fn su2_samples_are_traceless_and_bounded() {
        let cfg = ExperimentConfig::from_json(
            r#"{"experiment": "nahm-roundtrip", "seed": 5, "samples": 4, "tolerance": 1e-6, "groups": ["su2"]}"#,
        )
        .unwrap();
        for i in 0..4 {
            let mut s = Sampler::for_sample(cfg.seed, i);
            let n = nahm_sample(&cfg, i as usize, &mut s, &mut InputLog::default());
            for m in n.init.iter() {
                assert!(m.trace().norm() < 1e-14);
                assert!(m.norm() <= 0.2 + 1e-15);
            }
        }
    }

    #[test]
    fn central_parameter_matches_the_hilbert_one() {
        let spec = hilbert(2).unwrap();
        let a = central_parameter(&spec, &[0.7, -0.2], 2.0);
        let b = hilbert_parameter(&spec, 1.4, -0.4);
        assert!((a.real - b.real).amax() < 1e-15);
    }
}
