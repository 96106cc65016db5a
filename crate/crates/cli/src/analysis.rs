//! Subcommands that analyse rather than train.

use crate::args::{ComplexityArgs, CountParamsArgs, DecayArgs, DiagnoseArgs, GradcheckArgs};
use crate::{create_out_dir, grouped, write_json, Failure, Outcome};
use serde_json::json;
use std::fs::File;
use std::io::{BufWriter, Write};
use wavenet_core::diagnostics::complexity::Term;
use wavenet_core::diagnostics::{
    complexity_report, count_params as count, decay_simulation, iterations_to_reach, kde, run_trials, GradOp,
};
use wavenet_core::training::read_metrics;
use wavenet_core::Rng;

pub fn diagnose(a: DiagnoseArgs) -> Outcome {
    let rows = read_metrics(File::open(&a.metrics)?)?;
    let out = a.out.out;
    create_out_dir(&out)?;
    let columns: [(&str, Vec<f64>); 3] = [
        ("grad_cls", rows.iter().map(|r| r.grad_cls).collect()),
        ("grad_input", rows.iter().map(|r| r.grad_input).collect()),
        ("grad_clf", rows.iter().map(|r| r.grad_clf).collect()),
    ];
    let mut densities = serde_json::Map::new();
    let mut modes = Vec::new();
    for (name, samples) in &columns {
        let curve = kde(samples, a.grid)?;
        let mut file = BufWriter::new(File::create(out.join(format!("kde_{name}.csv")))?);
        curve.write_csv(&mut file)?;
        file.flush()?;
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        densities.insert(
            (*name).into(),
            json!({ "mean": mean, "mode": curve.mode(), "bandwidth": curve.bandwidth, "batches": samples.len() }),
        );
        modes.push(format!("{name} {:.4e}", curve.mode()));
    }
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.eig_ratio).collect();
    let eigen = if ratios.is_empty() {
        serde_json::Value::Null
    } else {
        json!({
            "batches": ratios.len(),
            "mean": ratios.iter().sum::<f64>() / ratios.len() as f64,
            "min": ratios.iter().copied().fold(f64::INFINITY, f64::min),
            "max": ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    };
    let eigen_note = match eigen["mean"].as_f64() {
        Some(m) => format!("mean eigen-ratio {m:.4} over {} batches", ratios.len()),
        None => "no eigen-ratio recorded".into(),
    };
    write_json(&out.join("diagnose.json"), &json!({ "gradient_norms": densities, "eigen_ratio": eigen }))?;
    println!("density modes: {}; {eigen_note}; wrote KDE curves to {}", modes.join(", "), out.display());
    Ok(())
}

pub fn gradcheck(a: GradcheckArgs) -> Outcome {
    let ops = a.op.map_or_else(|| GradOp::ALL.to_vec(), |op| vec![op]);
    let mut rng = Rng::new(a.seed);
    let out = a.out.out;
    create_out_dir(&out)?;
    let mut file = BufWriter::new(File::create(out.join("gradcheck.csv"))?);
    writeln!(file, "op,trials,rejected,max_error,tolerance,passed")?;
    let mut failed = Vec::new();
    let mut worst = (GradOp::ALL[0], 0.0f64);
    for op in ops.iter().copied() {
        let s = run_trials(op, a.trials, &mut rng)?;
        writeln!(file, "{op},{},{},{:e},{:e},{}", s.trials, s.rejected, s.max_error, s.tolerance, s.passed())?;
        if !s.passed() {
            failed.push(op.to_string());
        }
        if s.max_error >= worst.1 {
            worst = (op, s.max_error);
        }
    }
    file.flush()?;
    println!(
        "max relative error {:.3e} ({}) over {} ops x {} trials; {} failed",
        worst.1,
        worst.0,
        ops.len(),
        a.trials,
        failed.len()
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Runtime(format!("gradient check failed for {}", failed.join(", "))))
    }
}

pub fn simulate_decay(a: DecayArgs) -> Outcome {
    let errors = match a.errors.as_slice() {
        [single] => vec![*single; a.epochs],
        many => many.to_vec(),
    };
    let trajectory = decay_simulation(a.w0, a.eta, &errors, a.iters_per_epoch)?;
    let out = a.out.out;
    create_out_dir(&out)?;
    let mut file = BufWriter::new(File::create(out.join("decay.csv"))?);
    trajectory.write_csv(&mut file)?;
    file.flush()?;
    let mut line = format!(
        "magnitude {:.6} after {} iterations",
        trajectory.last(),
        trajectory.values.len() - 1
    );
    if let Some(target) = a.target {
        match iterations_to_reach(a.w0, a.eta, errors[0], target) {
            Some(t) => line += &format!("; first at or below {target} after {t} iterations"),
            None => line += &format!("; never reaches {target}"),
        }
    }
    if trajectory.sign_flip {
        line += "; warning: some epoch overshoots zero";
    }
    println!("{line}; wrote decay.csv to {}", out.display());
    Ok(())
}

pub fn count_params(a: CountParamsArgs) -> Outcome {
    if a.d == 0 {
        return Err(Failure::Config("d must be at least 1".into()));
    }
    let c = count(a.d);
    let out = a.out.out;
    create_out_dir(&out)?;
    write_json(&out.join("params.json"), &serde_json::to_value(&c)?)?;
    let published = match (c.published_total, c.published_discrepancy) {
        (Some(p), Some(diff)) => {
            format!("; published figure {} differs by {}{}", grouped(p), if diff < 0 { "-" } else { "+" }, grouped(diff.unsigned_abs()))
        }
        _ => String::new(),
    };
    println!(
        "d = {}: formula (d²+d)·4 = {}{published}; implemented layer 10d²+11d = {}",
        a.d,
        grouped(c.formula_total),
        grouped(c.implementation_total)
    );
    Ok(())
}

fn render(terms: &[Term]) -> String {
    terms.iter().map(Term::render).collect::<Vec<_>>().join(" + ")
}

pub fn complexity(a: ComplexityArgs) -> Outcome {
    if a.n == 0 || a.d == 0 {
        return Err(Failure::Config("n and d must be at least 1".into()));
    }
    let r = complexity_report(a.n, a.d);
    let out = a.out.out;
    create_out_dir(&out)?;
    write_json(&out.join("complexity.json"), &serde_json::to_value(&r)?)?;
    println!(
        "n = {}, d = {}: time wave {} = {} vs attention {} = {}; memory wave {} = {} vs attention {} = {}; crossover n = {}",
        a.n,
        a.d,
        render(&r.wave.time_dominant),
        grouped(r.wave.time_total),
        render(&r.attention.time_dominant),
        grouped(r.attention.time_total),
        render(&r.wave.space_dominant),
        grouped(r.wave.space_total),
        render(&r.attention.space_dominant),
        grouped(r.attention.space_total),
        r.crossover_n
    );
    Ok(())
}
