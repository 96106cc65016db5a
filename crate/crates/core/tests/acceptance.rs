//! Acceptance run: one check per criterion, each printing a PASS/FAIL line.
//!
//! `cargo test -p wavenet-core --test acceptance` prints the report. Set
//! `WAVENET_AGNEWS_CSV` (and optionally `WAVENET_AGNEWS_TEST_CSV`) to also log
//! the optional full-data run; it never gates the result.

use std::f64::consts::PI;
use std::time::{Duration, Instant};
use wavenet_core::diagnostics::complexity::Term;
use wavenet_core::diagnostics::gradcheck::{run_trials, GradOp};
use wavenet_core::diagnostics::{complexity_report, count_params, decay_simulation, eigen_ratio, iterations_to_reach, kde};
use wavenet_core::tensor::sym_eigen;
use wavenet_core::training::{
    generate_synthetic, load_agnews_csv, read_metrics, train, write_metrics_csv, SyntheticConfig, TrainConfig, Vocab,
};
use wavenet_core::wave_ops::{interference, interference_term, modulation};
use wavenet_core::{Architecture, CartesianWave, CombineMode, Matrix, Rng, WaveRepr};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

fn random_wave(rows: usize, cols: usize, rng: &mut Rng) -> CartesianWave {
    CartesianWave::new(Matrix::randn(rows, cols, rng).unwrap(), Matrix::randn(rows, cols, rng).unwrap()).unwrap()
}

fn round_trip() -> Outcome {
    let start = Instant::now();
    let mut rng = Rng::new(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = 2 + rng.below(15);
        let d = 2 + rng.below(63);
        let e = Matrix::randn(n, d, &mut rng).unwrap();
        let back = WaveRepr::from_embedding(&e).unwrap().restore_embedding();
        worst = worst.max(back.max_abs_diff(&e));
    }
    let elapsed = start.elapsed();
    check(
        worst < 1e-9 && elapsed < Duration::from_secs(1),
        format!("max-abs error {worst:.2e} over 100 matrices in {elapsed:.2?}"),
        format!("max-abs error {worst:.2e} (< 1e-9 required), {elapsed:.2?} (< 1 s required)"),
    )
}

fn interference_identity() -> Outcome {
    let mut rng = Rng::new(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (a, b) = (random_wave(4, 6, &mut rng), random_wave(4, 6, &mut rng));
        let expanded = interference(&a, &b).unwrap().norm_sqr().sub(&a.norm_sqr()).unwrap().sub(&b.norm_sqr()).unwrap();
        worst = worst.max(interference_term(&a, &b).unwrap().max_abs_diff(&expanded));
    }
    check(worst < 1e-9, format!("max-abs error {worst:.2e} over 100 pairs"), format!("max-abs error {worst:.2e}"))
}

fn wrap(angle: f64) -> f64 {
    let r = angle.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

fn modulation_polar_law() -> Outcome {
    let mut rng = Rng::new(3);
    let (mut modulus_err, mut phase_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let (a, b) = (random_wave(4, 6, &mut rng), random_wave(4, 6, &mut rng));
        let out = modulation(&a, &b).unwrap();
        modulus_err = modulus_err.max(out.modulus().max_abs_diff(&a.modulus().hadamard(&b.modulus()).unwrap()));
        let (pa, pb, po) = (a.argument(), b.argument(), out.argument());
        for i in 0..po.len() {
            phase_err = phase_err.max(wrap(po.as_slice()[i] - pa.as_slice()[i] - pb.as_slice()[i]).abs());
        }
    }
    check(
        modulus_err < 1e-9 && phase_err < 1e-9,
        format!("modulus error {modulus_err:.2e}, phase error {phase_err:.2e} (mod 2π) over 100 pairs"),
        format!("modulus error {modulus_err:.2e}, phase error {phase_err:.2e}"),
    )
}

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = Rng::new(4);
    let mut lines = Vec::new();
    let mut all = true;
    for op in GradOp::ALL {
        let s = run_trials(op, 20, &mut rng).map_err(|e| format!("{op}: {e}"))?;
        all &= s.passed();
        lines.push(format!("{op} {:.1e}", s.max_error));
    }
    let elapsed = start.elapsed();
    check(
        all && elapsed < Duration::from_secs(30),
        format!("20 trials each in {elapsed:.2?}: {}", lines.join(", ")),
        format!("{elapsed:.2?}: {}", lines.join(", ")),
    )
}

fn parameter_formula() -> Outcome {
    let c = count_params(768);
    check(
        c.formula_total == 2_362_368 && c.published_total == Some(2_365_184) && c.published_discrepancy == Some(2_816),
        format!(
            "formula {} exact; published {} reported with discrepancy {}",
            c.formula_total,
            c.published_total.unwrap(),
            c.published_discrepancy.unwrap()
        ),
        format!("{c:?}"),
    )
}

fn complexity() -> Outcome {
    let r = complexity_report(64, 768);
    let shapes = |terms: &[Term]| {
        let mut v: Vec<(u32, u32)> = terms.iter().map(|t| (t.n_pow, t.d_pow)).collect();
        v.sort_unstable();
        v
    };
    let wave_time = shapes(&r.wave.time_dominant) == vec![(1, 2)];
    let attn_time = shapes(&r.attention.time_dominant) == vec![(2, 1)];
    let wave_space = shapes(&r.wave.space_dominant) == vec![(0, 2), (1, 1)];
    let attn_space = shapes(&r.attention.space_dominant) == vec![(0, 2), (1, 1), (2, 0)];
    let render = |t: &[Term]| t.iter().map(Term::render).collect::<Vec<_>>().join(" + ");
    check(
        wave_time && attn_time && wave_space && attn_space && r.crossover_n == 769,
        format!(
            "time: wave {} vs attention {}; space: wave {} vs attention {}; crossover n = {} for d = 768",
            render(&r.wave.time_dominant),
            render(&r.attention.time_dominant),
            render(&r.wave.space_dominant),
            render(&r.attention.space_dominant),
            r.crossover_n
        ),
        format!("{r:?}"),
    )
}

fn decay() -> Outcome {
    let tr = decay_simulation(1.0, 1e-3, &[0.4311], 6000).map_err(|e| e.to_string())?;
    let factor: f64 = 1.0 - 0.0008622;
    let worst = tr.values.iter().enumerate().map(|(t, v)| (v - factor.powi(t as i32)).abs()).fold(0.0, f64::max);
    let monotone = tr.values.windows(2).all(|w| w[1] < w[0]);
    let t = iterations_to_reach(1.0, 1e-3, 0.4311, 0.0326).unwrap();
    check(
        worst < 1e-12 && monotone && t.abs_diff(3968) <= 1,
        format!("closed-form error {worst:.2e} over 6000 steps, monotone; value ≤ 0.0326 first at t = {t}"),
        format!("error {worst:.2e}, monotone {monotone}, t = {t}"),
    )
}

fn convergence() -> Outcome {
    let mut lines = Vec::new();
    let mut all = true;
    for seed in 1..=3u64 {
        let data = generate_synthetic(&SyntheticConfig::default(), seed).map_err(|e| e.to_string())?;
        let (train_set, test_set) = data.split(0.2, seed).map_err(|e| e.to_string())?;
        let cfg = TrainConfig {
            d: 64,
            batch_size: 64,
            lr: 1e-3,
            epochs: 8,
            max_batches: Some(200),
            seed,
            arch: Architecture::new(CombineMode::Modulation),
            ..Default::default()
        };
        let start = Instant::now();
        let out = train(&cfg, &train_set, &test_set).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        let best = out.metrics.iter().filter_map(|r| r.test_acc).fold(0.0, f64::max);
        let first = out.metrics.iter().find(|r| r.test_acc.is_some_and(|a| a >= 0.9)).map(|r| r.batch);
        let ok = out.metrics.len() == 200 && first.is_some() && elapsed < Duration::from_secs(300);
        all &= ok;
        lines.push(format!(
            "seed {seed}: ≥0.90 at batch {}, best {best:.3}, {elapsed:.1?}",
            first.map_or("never".into(), |b| b.to_string())
        ));
    }
    check(all, lines.join("; "), lines.join("; "))
}

fn optional_agnews() -> Option<String> {
    let train_path = std::env::var("WAVENET_AGNEWS_CSV").ok()?;
    let run = || -> Result<String, wavenet_core::Error> {
        let text = load_agnews_csv(&train_path)?;
        let vocab = Vocab::build(text.texts.iter().map(String::as_str), 30_000);
        let all = text.encode(&vocab, 64)?;
        let (train_set, test_set) = match std::env::var("WAVENET_AGNEWS_TEST_CSV") {
            Ok(p) => (all, load_agnews_csv(p)?.encode(&vocab, 64)?),
            Err(_) => all.split(0.1, 0)?,
        };
        let cfg = TrainConfig { d: 768, epochs: 1, ..Default::default() };
        let out = train(&cfg, &train_set, &test_set)?;
        let acc = out.metrics.last().and_then(|r| r.test_acc).unwrap_or(0.0);
        Ok(format!("1 epoch, test accuracy {acc:.4} (soft target 0.80)"))
    };
    Some(run().unwrap_or_else(|e| format!("run failed: {e}")))
}

fn kde_normal() -> Outcome {
    let mut rng = Rng::new(9);
    let samples: Vec<f64> = (0..10_000).map(|_| rng.normal()).collect();
    let curve = kde(&samples, 801).map_err(|e| e.to_string())?;
    let worst = curve
        .grid
        .iter()
        .zip(&curve.density)
        .map(|(x, y)| (y - (-0.5 * x * x).exp() / (2.0 * PI).sqrt()).abs())
        .fold(0.0, f64::max);
    let integral = curve.integral();
    check(
        worst < 0.03 && (integral - 1.0).abs() < 0.03,
        format!("max-abs pdf deviation {worst:.4}, integral {integral:.4}, bandwidth {:.4}", curve.bandwidth),
        format!("deviation {worst:.4}, integral {integral:.4}"),
    )
}

fn random_rotation(d: usize, rng: &mut Rng) -> Matrix {
    let a = Matrix::randn(d, d, rng).unwrap();
    let sym = a.add(&a.transpose()).unwrap();
    sym_eigen(&sym).unwrap().vectors
}

fn eigen_ratio_checks() -> Outcome {
    let mut rng = Rng::new(10);
    let mut rotation_err: f64 = 0.0;
    for _ in 0..20 {
        let x = Matrix::randn(32, 8, &mut rng).unwrap();
        let q = random_rotation(8, &mut rng);
        let before = eigen_ratio(&x).unwrap();
        let after = eigen_ratio(&x.matmul(&q).unwrap()).unwrap();
        rotation_err = rotation_err.max((before - after).abs());
    }
    let iso = eigen_ratio(&Matrix::randn(2000, 4, &mut rng).unwrap()).unwrap();
    check(
        rotation_err < 1e-9 && (0.9..=1.0).contains(&iso),
        format!("rotation change {rotation_err:.2e}; isotropic B=2000, d=4 ratio {iso:.4}"),
        format!("rotation change {rotation_err:.2e}; isotropic ratio {iso:.4}"),
    )
}

fn gradient_flow() -> Outcome {
    let data = generate_synthetic(&SyntheticConfig { n_samples: 400, ..Default::default() }, 5).map_err(|e| e.to_string())?;
    let (train_set, test_set) = data.split(0.2, 5).map_err(|e| e.to_string())?;
    let cfg = TrainConfig { max_batches: Some(3), batch_size: 32, ..Default::default() };
    let out = train(&cfg, &train_set, &test_set).map_err(|e| e.to_string())?;
    let mut csv = Vec::new();
    write_metrics_csv(&out.metrics, &mut csv).map_err(|e| e.to_string())?;
    let parsed = read_metrics(csv.as_slice()).map_err(|e| e.to_string())?;
    let first = &parsed[0];
    let positive = first.grad_cls > 0.0 && first.grad_input > 0.0 && first.grad_clf > 0.0;
    let per_batch = parsed.len() == 3 && parsed.iter().all(|r| r.grad_cls > 0.0 && r.grad_input > 0.0 && r.grad_clf > 0.0);
    check(
        positive && per_batch,
        format!(
            "batch 1 norms: [CLS] {:.3e}, input {:.3e}, classifier {:.3e}; CSV holds {} per-batch rows",
            first.grad_cls,
            first.grad_input,
            first.grad_clf,
            parsed.len()
        ),
        format!("{parsed:?}"),
    )
}

/// Written to the stdout handle directly, which the test harness does not
/// capture, so the report shows up in a plain `cargo test` run.
fn report(line: String) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{line}").expect("stdout is writable");
    out.flush().expect("stdout is writable");
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        ("wave round trip", round_trip),
        ("interference-term identity", interference_identity),
        ("modulation polar law", modulation_polar_law),
        ("gradient suite", gradient_suite),
        ("parameter formula", parameter_formula),
        ("complexity report", complexity),
        ("decay simulation", decay),
        ("desk-scale convergence", convergence),
        ("kernel density estimate", kde_normal),
        ("eigen ratio", eigen_ratio_checks),
        ("gradient flow", gradient_flow),
    ];
    let mut failures = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => report(format!("criterion {:>2} PASS  {name}: {detail}", i + 1)),
            Err(detail) => {
                report(format!("criterion {:>2} FAIL  {name}: {detail}", i + 1));
                failures.push(i + 1);
            }
        }
    }
    match optional_agnews() {
        Some(msg) => report(format!("optional     INFO  full-data run: {msg}")),
        None => report("optional     SKIP  full-data run: WAVENET_AGNEWS_CSV not set".into()),
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
