use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use logratio_bench::{ilr_features, paperlike_sample};
use logratio_core::{fit_classifier, ClassifierKind, ClassifierSpec};

fn spec_for(kind: ClassifierKind) -> ClassifierSpec {
    let mut spec = ClassifierSpec::new(kind);
    match kind {
        ClassifierKind::RandomForest => spec.n_trees = Some(20),
        ClassifierKind::Mlp => spec.epochs = Some(5),
        ClassifierKind::Logistic => spec.max_iter = Some(50),
        _ => {}
    }
    spec
}

fn fit_and_predict(c: &mut Criterion) {
    let ds = paperlike_sample(20);
    let x = ilr_features(&ds);

    let mut fit = c.benchmark_group("fit");
    fit.sample_size(10);
    for kind in ClassifierKind::ALL {
        let spec = spec_for(kind);
        fit.bench_with_input(BenchmarkId::from_parameter(kind), &spec, |b, spec| {
            b.iter(|| fit_classifier(spec, &x, &ds.labels).unwrap())
        });
    }
    fit.finish();

    let mut predict = c.benchmark_group("predict_proba_batch");
    predict.sample_size(10);
    for kind in ClassifierKind::ALL {
        let model = fit_classifier(&spec_for(kind), &x, &ds.labels).unwrap();
        predict.bench_function(BenchmarkId::from_parameter(kind), |b| {
            b.iter(|| model.predict_proba_batch(&x).unwrap())
        });
    }
    predict.finish();
}

criterion_group!(benches, fit_and_predict);
criterion_main!(benches);
