use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hkq_core::deform::{hilb_sigma_zero_chart, hilbert_parameter, hilbert_sample, taub_nut_frame, HilbertFamily};
use hkq_core::flat_hk::hilbert;
use hkq_core::kempf_ness::{kn_minimize, KNOptions, KNProblem};
use hkq_core::nahm::{holomorphic_coords, nahm_integrate};
use hkq_core::rng::Sampler;
use hkq_core::{CMat, GroupSpec};
use num_complex::Complex64 as C64;

fn nahm(c: &mut Criterion) {
    let g = GroupSpec::unitary(2);
    let mut s = Sampler::new(1);
    let small = C64::new(0.2, 0.0);
    let init = [0, 1, 2].map(|_| g.to_matrix_c(&(s.complex_vec(g.dim()) * small)));
    for n in [64, 400] {
        c.bench_function(&format!("nahm_integrate u2 n={n}"), |b| {
            b.iter(|| nahm_integrate(&g, black_box(&init), |_| CMat::zeros(2, 2), n).unwrap())
        });
    }
    let path = nahm_integrate(&g, &init, |_| CMat::zeros(2, 2), 64).unwrap();
    c.bench_function("holomorphic_coords u2 n=64", |b| b.iter(|| holomorphic_coords(black_box(&path)).unwrap()));
}

fn kempf_ness(c: &mut Criterion) {
    for k in [1, 2] {
        let spec = hilbert(k).unwrap();
        let x = hilbert_sample(k, HilbertFamily::Cyclic, &mut Sampler::new(2));
        let zeta = hilbert_parameter(&spec, -1.0, 0.0);
        let problem = KNProblem::restricted(&spec, x, &zeta.real).unwrap();
        let opts = KNOptions::default();
        c.bench_function(&format!("kn_minimize hilbert k={k}"), |b| {
            b.iter(|| kn_minimize(black_box(&problem), &opts).unwrap())
        });
    }
}

fn taub_nut(c: &mut Criterion) {
    let point = hilb_sigma_zero_chart(&[C64::new(0.8, 0.3)], &[C64::new(-0.4, 1.1)], &[0.7]).unwrap();
    c.bench_function("taub_nut_frame", |b| b.iter(|| taub_nut_frame(black_box(&point)).unwrap()));
}

criterion_group!(benches, nahm, kempf_ness, taub_nut);
criterion_main!(benches);
