//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use logratio_cli::report::write_results;
use logratio_cli::{run_experiment, ExperimentConfig};
use logratio_core::classifiers::{fit_classifier, ClassifierKind, ClassifierSpec, MlpNetwork, ProbPrediction};
use logratio_core::dataset::{Group, GroupMap};
use logratio_core::features::{
    apply_lle, fit_ica, fit_lle, fit_pca_whiten, fit_pipeline, lle::lle_weights, transform_pca, IcaParams,
    LleParams, TransformKind, TransformSpec,
};
use logratio_core::linalg::{column_means, covariance};
use logratio_core::metrics::{brier_multiclass, evaluate, precision_recall_f1, top_n_rate};
use logratio_core::simplex::{
    aitchison_distance, clr, clr_inverse, closure, helmert_basis, ilr, ilr_inverse, pwlr, Composition,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_composition(rng: &mut ChaCha8Rng, k: usize) -> Composition {
    let v: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(StandardNormal).exp()).collect();
    closure(&v).unwrap()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `(1/K^2) sum_{i<j} (ln(p_i/p_j) - ln(q_i/q_j))^2`, straight from the definition.
fn aitchison_sq_oracle(p: &[f64], q: &[f64]) -> f64 {
    let k = p.len();
    let mut acc = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            let d = (p[i] / p[j]).ln() - (q[i] / q[j]).ln();
            acc += d * d;
        }
    }
    acc / (k * k) as f64
}

fn ilr_isometry() -> Check {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for k in [3usize, 5, 10] {
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        let basis = helmert_basis(k).unwrap();
        for _ in 0..1000 {
            let p = random_composition(&mut rng, k);
            let q = random_composition(&mut rng, k);
            let d2 = aitchison_sq_oracle(p.parts(), q.parts());
            let ilr_d = sq_dist(&ilr(&p, &basis).unwrap(), &ilr(&q, &basis).unwrap());
            let clr_d = sq_dist(&clr(&p), &clr(&q));
            let pwlr_d = sq_dist(pwlr(&p, 0.0).unwrap().ratios(), pwlr(&q, 0.0).unwrap().ratios()) / (k * k) as f64;
            let lib_d2 = aitchison_distance(&p, &q).unwrap().powi(2);
            for (name, err) in [
                ("ilr vs clr", (ilr_d - clr_d).abs()),
                ("clr vs K d_A^2", (clr_d - k as f64 * d2).abs()),
                ("pwlr link", (pwlr_d - d2).abs()),
                ("library d_A^2", (lib_d2 - d2).abs()),
            ] {
                worst = worst.max(err);
                ensure(err <= 1e-10, || format!("K={k} {name}: error {err:e}"))?;
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 5.0, || format!("took {secs:.2}s"))?;
    Ok(format!("3000 pairs, max error {worst:.1e}, {secs:.2}s"))
}

fn round_trips() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let k = [3usize, 5, 10][i % 3];
        let basis = helmert_basis(k).unwrap();
        let c = random_composition(&mut rng, k);
        let from_clr = clr_inverse(&clr(&c)).unwrap();
        let from_ilr = ilr_inverse(&ilr(&c, &basis).unwrap(), &basis).unwrap();
        for back in [from_clr, from_ilr] {
            let err = c.parts().iter().zip(back.parts()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst = worst.max(err);
            ensure(err <= 1e-9, || format!("composition {i}: error {err:e}"))?;
        }
    }
    Ok(format!("1000 compositions, max error {worst:.1e}"))
}

fn whitening() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mix = DMatrix::from_fn(10, 10, |_, _| rng.random_range(-1.0..1.0));
    let x = DMatrix::from_fn(5000, 10, |_, _| rng.random_range(0.0..1.0)) * mix;
    let model = fit_pca_whiten(&x).map_err(|e| e.to_string())?;
    let y = transform_pca(&model, &x).map_err(|e| e.to_string())?;
    let dev = (covariance(&y) - DMatrix::<f64>::identity(10, 10)).amax();
    ensure(dev < 1e-6, || format!("whitened covariance deviates by {dev:e}"))?;

    let rows: Vec<Composition> = (0..200).map(|_| random_composition(&mut rng, 10)).collect();
    let mut pca_spec = TransformSpec::new(TransformKind::ClrPca);
    pca_spec.whiten = Some(false);
    let a = fit_pipeline(&pca_spec, &rows).unwrap().transform(&rows).unwrap();
    let ilr_spec = TransformSpec::new(TransformKind::Ilr);
    let b = fit_pipeline(&ilr_spec, &rows).unwrap().transform(&rows).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let da = (a.row(i) - a.row(j)).norm();
            let db = (b.row(i) - b.row(j)).norm();
            worst = worst.max((da - db).abs());
        }
    }
    ensure(worst <= 1e-8, || format!("clr_pca vs ilr distance gap {worst:e}"))?;
    Ok(format!("covariance deviation {dev:.1e}, distance gap {worst:.1e}"))
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn ica_recovery() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let sources = DMatrix::from_fn(4000, 2, |_, _| rng.random_range(-1.0..1.0));
    let mixing = DMatrix::from_row_slice(2, 2, &[1.0, 0.6, -0.4, 1.2]);
    let x = &sources * mixing.transpose();
    let model = fit_ica(&x, &IcaParams { seed: 3, ..Default::default() }).map_err(|e| e.to_string())?;
    let y = model.transform(&x).map_err(|e| e.to_string())?;
    let col = |m: &DMatrix<f64>, j: usize| m.column(j).iter().cloned().collect::<Vec<_>>();
    let c = |i, j| correlation(&col(&y, i), &col(&sources, j)).abs();
    let matched = (c(0, 0).min(c(1, 1))).max(c(0, 1).min(c(1, 0)));
    ensure(matched > 0.95, || format!("matched |corr| {matched}"))?;
    let mean_dev = column_means(&y).amax();
    let cov = covariance(&y);
    let std_dev = (0..2).map(|i| (cov[(i, i)].sqrt() - 1.0).abs()).fold(0.0, f64::max);
    ensure(mean_dev < 1e-6 && std_dev < 1e-6, || format!("mean {mean_dev:e}, std {std_dev:e}"))?;
    Ok(format!("matched |corr| {matched:.4}, standardization error {:.1e}", mean_dev.max(std_dev)))
}

fn curved_sheet(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::zeros(n, 3);
    for i in 0..n {
        let t: f64 = rng.random_range(-1.2..1.2);
        let h: f64 = rng.random_range(0.0..2.4);
        x[(i, 0)] = t.sin();
        x[(i, 1)] = h;
        x[(i, 2)] = t.cos();
    }
    x
}

fn knn_sets(y: &DMatrix<f64>, k: usize) -> Vec<Vec<usize>> {
    (0..y.nrows())
        .map(|i| {
            let mut d: Vec<(f64, usize)> = (0..y.nrows())
                .filter(|&j| j != i)
                .map(|j| ((y.row(i) - y.row(j)).norm_squared(), j))
                .collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut s: Vec<usize> = d[..k].iter().map(|p| p.1).collect();
            s.sort_unstable();
            s
        })
        .collect()
}

fn lle_checks() -> Check {
    let x = curved_sheet(800, 51);
    let params = LleParams {
        n_neighbors: 12,
        embed_dim: 2,
        reg: 1e-3,
    };
    let weight_err = lle_weights(&x, params.n_neighbors, params.reg)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|w| (w.weights.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    ensure(weight_err <= 1e-8, || format!("weight row sum error {weight_err:e}"))?;

    let model = fit_lle(&x, &params).map_err(|e| e.to_string())?;
    let a = knn_sets(&x, 10);
    let b = knn_sets(&model.train_embedding, 10);
    let shared: usize = a.iter().zip(&b).map(|(p, q)| p.iter().filter(|i| q.binary_search(i).is_ok()).count()).sum();
    let kept = shared as f64 / (10 * x.nrows()) as f64;
    ensure(kept >= 0.8, || format!("10-NN preservation {kept:.3}"))?;

    let mut oos: f64 = 0.0;
    for i in 0..x.nrows() {
        let row: Vec<f64> = x.row(i).iter().cloned().collect();
        let e = apply_lle(&model, &row).map_err(|e| e.to_string())?;
        for (j, v) in e.iter().enumerate() {
            oos = oos.max((v - model.train_embedding[(i, j)]).abs());
        }
    }
    ensure(oos <= 1e-6, || format!("out-of-sample error {oos:e}"))?;
    Ok(format!("weight error {weight_err:.1e}, 10-NN kept {:.1}%, out-of-sample error {oos:.1e}", kept * 100.0))
}

fn blobs(per_class: usize, seed: u64) -> (DMatrix<f64>, Vec<usize>) {
    const CENTRES: [[f64; 2]; 3] = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = per_class * 3;
    let mut x = DMatrix::zeros(n, 2);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % 3;
        for j in 0..2 {
            x[(i, j)] = CENTRES[c][j] + rng.sample::<f64, _>(StandardNormal);
        }
        y.push(c);
    }
    (x, y)
}

fn classifier_sanity() -> Check {
    let (x, y) = blobs(200, 61);
    let (xt, yt) = blobs(200, 62);
    let mut rng = ChaCha8Rng::seed_from_u64(63);
    let probes = DMatrix::from_fn(500, 2, |_, _| rng.random_range(-50.0..50.0));
    let mut worst_acc: f64 = 1.0;
    let mut simplex_err: f64 = 0.0;
    for kind in ClassifierKind::ALL {
        let model = fit_classifier(&ClassifierSpec::new(kind), &x, &y).map_err(|e| e.to_string())?;
        let preds = model.predict_proba_batch(&xt).map_err(|e| e.to_string())?;
        let acc = preds.iter().zip(&yt).filter(|(p, &l)| p.label() == l).count() as f64 / yt.len() as f64;
        worst_acc = worst_acc.min(acc);
        ensure(acc >= 0.95, || format!("{kind}: accuracy {acc}"))?;
        for p in preds.iter().chain(&model.predict_proba_batch(&probes).unwrap()) {
            ensure(p.probs.iter().all(|&v| v >= 0.0), || format!("{kind}: negative probability"))?;
            simplex_err = simplex_err.max((p.probs.iter().sum::<f64>() - 1.0).abs());
        }
        ensure(simplex_err <= 1e-9, || format!("{kind}: probability sum error {simplex_err:e}"))?;
    }

    let mut grad_err: f64 = 0.0;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let x = DMatrix::from_fn(12, 3, |_, _| rng.random_range(-2.0..2.0));
        let t: Vec<usize> = (0..12).map(|_| rng.random_range(0..4)).collect();
        let mut net = MlpNetwork::new(&[3, 6, 5, 4], seed);
        let (_, grad) = net.loss_and_gradient(&x, &t, 1e-3);
        let p0 = net.params();
        let h = 1e-6;
        for i in 0..p0.len() {
            let mut p = p0.clone();
            p[i] = p0[i] + h;
            net.set_params(&p);
            let up = net.loss(&x, &t, 1e-3);
            p[i] = p0[i] - h;
            net.set_params(&p);
            let down = net.loss(&x, &t, 1e-3);
            net.set_params(&p0);
            let fd = (up - down) / (2.0 * h);
            let scale = fd.abs().max(grad[i].abs());
            if scale > 1e-7 {
                let rel = (fd - grad[i]).abs() / scale;
                grad_err = grad_err.max(rel);
                ensure(rel < 1e-4, || format!("MLP seed {seed} param {i}: relative error {rel:e}"))?;
            }
        }
    }
    Ok(format!(
        "min accuracy {:.1}%, simplex error {simplex_err:.1e}, MLP gradient relative error {grad_err:.1e}",
        worst_acc * 100.0
    ))
}

fn metrics_identities() -> Check {
    let classes = 5;
    let ids: Arc<[usize]> = (0..classes).collect::<Vec<_>>().into();
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let preds: Vec<ProbPrediction> = (0..100)
        .map(|_| {
            let raw: Vec<f64> = (0..classes).map(|_| rng.random_range(0.0..1.0)).collect();
            let s: f64 = raw.iter().sum();
            ProbPrediction {
                probs: raw.iter().map(|v| v / s).collect(),
                class_ids: ids.clone(),
            }
        })
        .collect();
    let labels: Vec<usize> = (0..100).map(|_| rng.random_range(0..classes)).collect();

    let top1 = top_n_rate(&preds, &labels, 1).unwrap();
    let (precision, recall, f1) = precision_recall_f1(&preds, &labels).unwrap();
    ensure(top1 == recall, || format!("top-1 {top1} != recall {recall}"))?;

    // Brute-force oracle: confusion counts and explicit ranks.
    let argmax = |p: &[f64]| (0..p.len()).fold(0, |b, g| if p[g] > p[b] { g } else { b });
    let mut confusion = vec![vec![0usize; classes]; classes];
    let mut brier = 0.0;
    let mut top = [0usize; 4];
    for (p, &l) in preds.iter().zip(&labels) {
        confusion[l][argmax(&p.probs)] += 1;
        brier += (0..classes).map(|g| (p.probs[g] - f64::from(g == l)).powi(2)).sum::<f64>();
        let rank = (0..classes).filter(|&g| p.probs[g] > p.probs[l] || (p.probs[g] == p.probs[l] && g < l)).count();
        for (slot, n) in [1usize, 2, 4, 8].iter().enumerate() {
            if rank < *n {
                top[slot] += 1;
            }
        }
    }
    brier /= labels.len() as f64;
    let (mut wp, mut wr) = (0.0, 0.0);
    for (c, row) in confusion.iter().enumerate() {
        let support: usize = row.iter().sum();
        let predicted: usize = confusion.iter().map(|r| r[c]).sum();
        let tp = row[c] as f64;
        if predicted > 0 {
            wp += support as f64 * tp / predicted as f64;
        }
        if support > 0 {
            wr += tp;
        }
    }
    let n = labels.len() as f64;
    let (wp, wr) = (100.0 * wp / n, 100.0 * wr / n);
    let wf = 2.0 * wp * wr / (wp + wr);
    let gmap = GroupMap::new(vec![Group::M, Group::H, Group::U, Group::U, Group::M]);
    let report = evaluate(&preds, &labels, &gmap).unwrap();
    let mut worst: f64 = 0.0;
    let mut pairs = vec![
        ("brier", brier_multiclass(&preds, &labels).unwrap(), brier),
        ("report brier", report.brier, brier),
        ("precision", precision, wp),
        ("recall", recall, wr),
        ("f1", f1, wf),
        ("report f1", report.f1, wf),
    ];
    for (slot, n) in [1usize, 2, 4, 8].iter().enumerate() {
        pairs.push(("top-n", report.top_n[n], 100.0 * top[slot] as f64 / labels.len() as f64));
    }
    for (name, got, want) in pairs {
        let err = (got - want).abs();
        worst = worst.max(err);
        ensure(err <= 1e-12, || format!("{name}: {got} vs oracle {want}"))?;
    }

    for g in [2usize, 10, 46] {
        let ids: Arc<[usize]> = (0..g).collect::<Vec<_>>().into();
        let uniform: Vec<ProbPrediction> = (0..500)
            .map(|_| ProbPrediction {
                probs: vec![1.0 / g as f64; g],
                class_ids: ids.clone(),
            })
            .collect();
        let labels: Vec<usize> = (0..500).map(|i| (i * 13) % g).collect();
        let b = brier_multiclass(&uniform, &labels).unwrap();
        let want = (g - 1) as f64 / g as f64;
        ensure(b == want, || format!("uniform Brier G={g}: {b:?} != {want:?}"))?;
    }
    Ok(format!("top-1 == recall, uniform Brier exact, oracle max error {worst:.1e}"))
}

const DIRECTION_CONFIG: &str = r#"
seed = 42
split_fraction = 0.6
stratified = true

[data_source]
type = "synthetic"
preset = "paperlike"

[[transforms]]
kind = "identity"

[[transforms]]
kind = "ilr"

[[classifiers]]
kind = "gaussian_nb"

[[classifiers]]
kind = "knn"

[[classifiers]]
kind = "random_forest"
n_trees = 40
"#;

fn paper_direction() -> Check {
    let started = Instant::now();
    let cfg = ExperimentConfig::from_toml(DIRECTION_CONFIG).map_err(|e| e.to_string())?;
    let report = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let secs = started.elapsed().as_secs_f64();
    let n = report.info.n_train + report.info.n_test;
    ensure((30_000..=40_000).contains(&n), || format!("{n} samples"))?;
    let delta = |c: &str| report.delta("ilr", c).map(|d| d.f1).ok_or(format!("no delta for {c}"));
    let (nb, knn, rf) = (delta("gaussian_nb")?, delta("knn")?, delta("random_forest")?);
    ensure(nb > 0.0, || format!("NB delta F1 {nb:+.2}"))?;
    ensure(knn > 0.0, || format!("kNN delta F1 {knn:+.2}"))?;
    ensure(knn > rf, || format!("kNN delta F1 {knn:+.2} <= RF {rf:+.2}"))?;
    ensure(secs < 600.0, || format!("took {secs:.0}s"))?;
    Ok(format!("{n} samples, delta F1 NB {nb:+.2}, kNN {knn:+.2}, RF {rf:+.2}, {secs:.1}s"))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = ExperimentConfig::from_toml(DIRECTION_CONFIG).map_err(|e| e.to_string())?;
    cfg.data_source = toml::from_str("type = \"synthetic\"\npreset = \"paperlike\"\nsamples_per_zone = 120")
        .map_err(|e| e.to_string())?;
    cfg.transforms.push(TransformSpec::new(TransformKind::ClrIca));
    cfg.classifiers.push(ClassifierSpec::new(ClassifierKind::Mlp));
    let mut files = Vec::new();
    for run in 0..2 {
        let report = run_experiment(&cfg).map_err(|e| e.to_string())?;
        let path = dir.path().join(format!("results_{run}.csv"));
        write_results(&report, &path).map_err(|e| e.to_string())?;
        files.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    ensure(files[0] == files[1], || "results files differ".into())?;
    Ok(format!("two runs, {} identical bytes", files[0].len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("ILR isometry suite", ilr_isometry),
        ("round-trip suite", round_trips),
        ("whitening", whitening),
        ("ICA source recovery", ica_recovery),
        ("LLE", lle_checks),
        ("classifier sanity", classifier_sanity),
        ("metrics identities", metrics_identities),
        ("qualitative direction on paper-like preset", paper_direction),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
