use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fldsc_bench::{detection_inputs, fldsc_code, short_sim};
use fldsc_core::{
    breakpoints, farey_maxmin_2x2, farey_sequence, pep_quadrature, run_ber, ChannelSpec, MlDetector, MuPolicy, Scheme,
};

fn farey(c: &mut Criterion) {
    let mut g = c.benchmark_group("farey");
    for k in [64u32, 255] {
        g.bench_with_input(BenchmarkId::new("sequence", k), &k, |b, &k| b.iter(|| farey_sequence(black_box(k))));
    }
    g.bench_function("breakpoints/6", |b| b.iter(|| breakpoints(black_box(6))));
    g.finish();
}

fn design(c: &mut Criterion) {
    let mut g = c.benchmark_group("maxmin");
    for p in [1u32, 2, 3, 4] {
        g.bench_with_input(BenchmarkId::from_parameter(p), &p, |b, &p| b.iter(|| farey_maxmin_2x2(black_box(p))));
    }
    g.finish();
}

fn detect(c: &mut Criterion) {
    let mut g = c.benchmark_group("ml_detect");
    for p in [1u32, 2, 3] {
        let code = fldsc_code(p);
        let det = MlDetector::new(&code).unwrap();
        let inputs = detection_inputs(&code, 256);
        g.bench_with_input(BenchmarkId::new("batch256", p), &inputs, |b, inputs| {
            b.iter(|| inputs.iter().map(|(y, h)| det.detect(y, h).unwrap()[0]).sum::<u32>())
        });
    }
    g.finish();
}

fn quadrature(c: &mut Criterion) {
    let mut g = c.benchmark_group("pep_quadrature");
    g.sample_size(10);
    let spec = ChannelSpec::iid(2, 2, 0.1, MuPolicy::UnitMean).unwrap();
    let e = [1.0 / 3.0, 1.0 / 3.0];
    for nodes in [12usize, 24] {
        g.bench_with_input(BenchmarkId::new("rho1e3", nodes), &nodes, |b, &n| {
            b.iter(|| pep_quadrature(black_box(&e), &spec, 1e3, n).unwrap())
        });
    }
    g.finish();
}

fn simulate(c: &mut Criterion) {
    let mut g = c.benchmark_group("run_ber");
    g.sample_size(10);
    for scheme in [Scheme::Fldsc, Scheme::Sm] {
        let cfg = short_sim(scheme);
        g.bench_with_input(BenchmarkId::new("16k_trials", scheme), &cfg, |b, cfg| b.iter(|| run_ber(cfg).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, farey, design, detect, quadrature, simulate);
criterion_main!(benches);
