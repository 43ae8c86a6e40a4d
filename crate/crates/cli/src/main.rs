mod args;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::Parser;
use ruleboost::eval::{run_benchmark, BenchDataset, EvalConfig, Report};
use ruleboost::synthgen::{gen_friedman1, gen_noisy_parity, ParityConfig};
use ruleboost::{boost, build_propositions, load_csv, BoostConfig, Dataset, Loss, RuleEnsemble, SearchConfig, Task};

use args::{BenchArgs, Cli, Command, DataArgs, FitArgs, FriedmanArgs, ParityArgs, PredictArgs};

fn output(path: &Path) -> Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufWriter::new(io::stdout().lock())));
    }
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(Box::new(BufWriter::new(file)))
}

fn cap(max_thresholds: usize) -> Option<usize> {
    (max_thresholds > 0).then_some(max_thresholds)
}

fn load(path: &Path, data: &DataArgs) -> Result<Dataset> {
    let ds = load_csv(path, &data.target, data.task.into(), data.positive_label.as_deref())?;
    Ok(ds)
}

fn loss_for(task: Task) -> Loss {
    match task {
        Task::Classification => Loss::Logistic,
        Task::Regression => Loss::Squared,
    }
}

fn fit(a: FitArgs) -> Result<()> {
    let ds = load(&a.data, &a.dataset)?;
    let props = build_propositions(&ds, cap(a.max_thresholds))?;
    let search = SearchConfig {
        alpha: a.alpha,
        time_budget: (a.time_budget_s > 0.0).then(|| Duration::from_secs_f64(a.time_budget_s)),
        max_depth: (a.max_depth > 0).then_some(a.max_depth),
        ..SearchConfig::default()
    };
    let cfg = BoostConfig { k: a.rules as usize, lambda: a.lambda, learner: a.learner.into(), search, seed: a.seed };
    println!("{} rows, {} propositions", ds.n(), props.len());
    let result = boost(&ds, &props, loss_for(ds.task()), &cfg)?;
    for (k, (round, rule)) in result.rounds.iter().zip(&result.ensemble.rules).enumerate() {
        println!("round {:>3}  objective {:.6}  guarantee {:.4}  {}", k + 1, round.objective, round.guarantee, rule);
    }
    if result.ensemble.rules.len() < cfg.k {
        println!("stopped after {} rules: no rule improves the objective", result.ensemble.rules.len());
    }
    result.ensemble.save(&a.model)?;
    println!("wrote {} rules to {}", result.ensemble.rules.len(), a.model.display());
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let model = RuleEnsemble::load(&a.model)?;
    let table = ruleboost::dataset::RawTable::read(&a.data)?;
    let scores = model.predict_table(&table)?;
    let mut w = csv::Writer::from_writer(output(&a.out)?);
    let classification = model.task == Task::Classification;
    if classification {
        w.write_record(["row_id", "score", "proba"])?;
    } else {
        w.write_record(["row_id", "score"])?;
    }
    for (i, s) in scores.iter().enumerate() {
        if classification {
            w.write_record([i.to_string(), s.to_string(), RuleEnsemble::proba(*s).to_string()])?;
        } else {
            w.write_record([i.to_string(), s.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_dataset(ds: &Dataset, out: &Path) -> Result<()> {
    let mut w = output(out)?;
    ds.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn parity(a: ParityArgs) -> Result<()> {
    let ds = gen_noisy_parity(&ParityConfig::new(a.d, a.n, a.sigma, a.seed))?;
    write_dataset(&ds, &a.out)
}

fn friedman(a: FriedmanArgs) -> Result<()> {
    let ds = gen_friedman1(a.n, a.d, a.noise, a.seed)?;
    write_dataset(&ds, &a.out)
}

fn builtin_suite(sigma: f64, max_rules: usize) -> Result<Vec<BenchDataset>> {
    [2usize, 3]
        .iter()
        .map(|&d| {
            let data = gen_noisy_parity(&ParityConfig::new(d, 100 << d, sigma, 0))?;
            let k = if max_rules > 0 { max_rules } else { 1 << d };
            Ok(BenchDataset { name: format!("parity_d{d}"), data, max_rules: Some(k) })
        })
        .collect()
}

fn print_summary(report: &Report) {
    println!("{:<24} {:<8} {:<9} {:>10} {:>10} {:>5}", "dataset", "metric", "learner", "mean_area", "fit_s", "reps");
    for s in &report.summary {
        println!(
            "{:<24} {:<8} {:<9} {:>10.4} {:>10.3} {:>5}",
            s.dataset,
            s.metric.to_string(),
            s.learner.to_string(),
            s.mean_area,
            s.mean_fit_time_s,
            s.repetitions
        );
    }
    for f in &report.failures {
        eprintln!("failed: {} {} seed {}: {}", f.dataset, f.learner, f.seed, f.error);
    }
}

fn bench(a: BenchArgs) -> Result<()> {
    let datasets = if a.data.is_empty() {
        builtin_suite(ruleboost::synthgen::DEFAULT_PARITY_SIGMA, a.max_rules)?
    } else {
        a.data
            .iter()
            .map(|p| {
                let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
                let data = load(p, &a.dataset)?;
                Ok(BenchDataset { name, data, max_rules: (a.max_rules > 0).then_some(a.max_rules) })
            })
            .collect::<Result<Vec<_>>>()?
    };
    let cfg = EvalConfig {
        train_frac: a.train_frac,
        repetitions: a.reps as usize,
        lambda_grid: a.lambdas.clone(),
        seed: a.seed,
        learners: a.learners.iter().map(|&l| l.into()).collect(),
        max_thresholds: cap(a.max_thresholds),
        jobs: a.jobs as usize,
        ..EvalConfig::default()
    };
    let report = run_benchmark(&cfg, &datasets)?;
    let mut csv_out = output(&a.out_csv)?;
    report.write_csv(&mut csv_out)?;
    csv_out.flush()?;
    std::fs::write(&a.out_json, report.to_json()?).with_context(|| format!("cannot write {}", a.out_json.display()))?;
    print_summary(&report);
    if report.rows.is_empty() {
        bail!("every benchmark cell failed");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fit(a) => fit(a),
        Command::Predict(a) => predict(a),
        Command::Parity(a) => parity(a),
        Command::Friedman(a) => friedman(a),
        Command::Bench(a) => bench(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
