use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use ppg_bioid::auth::wavecluster::{wavecluster, WaveClusterConfig};
use ppg_bioid::auth::{enroll, verify, AuthOptions};
use ppg_bioid::pipeline::process_signal;
use ppg_bioid::spectral::FilterConfig;
use ppg_bioid::{identify, train_ident, FilterMode, IdentConfig, IdentKind, SegmentConfig};
use ppg_bioid_bench::{features, signals};

fn signal_chain(c: &mut Criterion) {
    let sig = signals(60.0).remove(0);
    let (f, s) = (FilterConfig::default(), SegmentConfig::default());
    c.bench_function("process_signal_60s_harmonic", |b| {
        b.iter(|| process_signal(black_box(&sig), FilterMode::Harmonic, &f, &s).unwrap())
    });
    c.bench_function("process_signal_60s_soa", |b| {
        b.iter(|| process_signal(black_box(&sig), FilterMode::Soa, &f, &s).unwrap())
    });
}

fn identification(c: &mut Criterion) {
    let rows = features(60.0);
    let cfg = IdentConfig::default();
    for kind in [IdentKind::Knn, IdentKind::Lda] {
        let model = train_ident(&rows, kind, &cfg).unwrap();
        c.bench_function(&format!("train_{kind:?}"), |b| {
            b.iter(|| train_ident(black_box(&rows), kind, &cfg).unwrap())
        });
        c.bench_function(&format!("identify_{kind:?}"), |b| {
            b.iter(|| identify(&model, black_box(&rows[0])).unwrap())
        });
    }
}

fn authentication(c: &mut Criterion) {
    let rows: Vec<_> = features(120.0)
        .into_iter()
        .filter(|f| f.subject_id == "s00")
        .collect();
    let opts = AuthOptions::default();
    let profile = enroll(&rows, "s00", &opts).unwrap();
    c.bench_function("enroll_multi_cluster", |b| {
        b.iter(|| enroll(black_box(&rows), "s00", &opts).unwrap())
    });
    c.bench_function("verify_multi_cluster", |b| {
        b.iter(|| verify(&profile, black_box(&rows[3])))
    });

    let pts: Vec<Vec<f64>> = (0..400)
        .map(|i| {
            let t = i as f64 * 0.618;
            vec![t.sin() + (i % 2) as f64 * 5.0, t.cos(), (2.0 * t).sin()]
        })
        .collect();
    let wc = WaveClusterConfig::default();
    c.bench_function("wavecluster_400x3", |b| {
        b.iter(|| wavecluster(black_box(&pts), &wc).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = signal_chain, identification, authentication
}
criterion_main!(benches);
