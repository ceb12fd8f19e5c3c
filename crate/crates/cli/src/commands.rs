use std::io::{self, IsTerminal, Write};
use std::time::Instant;

use serde::Serialize;

use scgnet::dataset::{
    apply_transforms, evaluate, log_transform, standardize, ColumnTransform, Dataset, LabelPosition,
};
use scgnet::forward::Classification;
use scgnet::model::{ModelFile, TrainingMeta};
use scgnet::numcheck::{check, CheckConfig, CheckKind, CheckReport};
use scgnet::trainer::{
    train_observed, AutomaticPolicy, PhaseRecord, RestartPolicy, TrainerConfig, TrainingReport,
};
use scgnet::Topology;

use crate::args::{CheckArgs, ClassifyArgs, EvaluateArgs, TrainArgs};
use crate::prompt::Prompter;
use crate::source::{self, tag};
use crate::CliError;

const DEFAULT_MAX_COLD_STARTS: usize = 5;

fn phase_line(p: &PhaseRecord) -> String {
    format!(
        "phase={} iters={} bestE={:e} cold_start={} round={}",
        p.kind.as_str(),
        p.iterations,
        p.best_error,
        p.cold_start,
        p.round
    )
}

/// Fits the requested transforms on the training data, log before
/// standardize.
fn fit_transforms(raw: &Dataset, args: &TrainArgs) -> Result<Vec<ColumnTransform>, CliError> {
    let mut record = Vec::new();
    let mut data = raw.clone();
    if !args.log_columns.is_empty() {
        let columns = args
            .log_columns
            .iter()
            .map(|&c| match c {
                0 => Err(CliError::Usage("--log-columns are 1-based".into())),
                c => Ok(c - 1),
            })
            .collect::<Result<Vec<_>, _>>()?;
        data = log_transform(&data, &columns)?;
        record.push(ColumnTransform::Log { columns });
    }
    if args.standardize {
        let (_, t) = standardize(&data)?;
        record.push(t);
    }
    Ok(record)
}

enum Policy {
    Automatic(AutomaticPolicy),
    Interactive,
}

fn choose_policy(args: &TrainArgs) -> Policy {
    let terminal = io::stdin().is_terminal();
    if args.interactive && !terminal {
        log::warn!("stdin is not a terminal; using the automatic policy");
    }
    let interactive = terminal && (args.interactive || args.max_cold_starts.is_none());
    if interactive && args.seeds.is_none() {
        Policy::Interactive
    } else {
        Policy::Automatic(AutomaticPolicy::new(
            args.max_cold_starts.unwrap_or(DEFAULT_MAX_COLD_STARTS),
        ))
    }
}

struct Prepared {
    topology: Topology,
    data: Dataset,
    transforms: Vec<ColumnTransform>,
}

fn prepare_training(args: &TrainArgs) -> Result<Prepared, CliError> {
    let loaded = source::load(&args.source, LabelPosition::First, "train", None)?;
    let raw = loaded.raw;
    if raw.is_empty() {
        return Err(CliError::Usage("training data is empty".into()));
    }
    if !raw.is_fully_labeled() {
        return Err(CliError::Usage("training data must be labeled".into()));
    }
    let transforms = match loaded.manifest_transforms {
        Some(t) => {
            if args.standardize || !args.log_columns.is_empty() {
                return Err(CliError::Usage(
                    "transforms come from the manifest; drop --standardize/--log-columns".into(),
                ));
            }
            t
        }
        None => fit_transforms(&raw, args)?,
    };
    let mut data = apply_transforms(&raw, &transforms)?;
    let (d, n) = match args.layers {
        Some(l) => {
            if l.d != data.d() {
                return Err(CliError::Usage(format!(
                    "--layers says d={} but the data has {} features",
                    l.d,
                    data.d()
                )));
            }
            (l.d, l.n)
        }
        None => (data.d(), data.n()),
    };
    data = data.with_class_count(n)?;
    let topology = Topology::new(d, n, args.hidden.layers, args.hidden.width)?;
    Ok(Prepared {
        topology,
        data,
        transforms,
    })
}

fn write_model(
    path: &std::path::Path,
    prepared: &Prepared,
    report: &TrainingReport,
) -> Result<(), CliError> {
    let model = ModelFile::new(&prepared.topology, report.weights.clone(), prepared.transforms.clone())?
        .with_training(TrainingMeta {
            seed: report.seed,
            error: report.error,
            reasonable: report.reasonable,
            cold_starts: report.cold_starts,
        });
    model.save(path)?;
    log::info!("model written to {}", path.display());
    Ok(())
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    if args.eps.is_nan() || args.eps <= 0.0 {
        return Err(CliError::Usage("--eps must be positive".into()));
    }
    let prepared = prepare_training(args)?;
    let policy = choose_policy(args);
    let automatic = matches!(policy, Policy::Automatic(_));
    let base = TrainerConfig {
        eps: args.eps,
        ..TrainerConfig::default()
    };

    let report = match args.seeds {
        Some(range) => {
            let Policy::Automatic(policy) = policy else {
                unreachable!("seed ranges always train automatically")
            };
            train_seeds(args, &prepared, &base, policy, range.seeds().collect())?
        }
        None => {
            let config = base.with_seed(args.seed);
            let start = Instant::now();
            let mut stdout = io::stdout().lock();
            let mut on_phase = |p: &PhaseRecord| {
                if args.json {
                    return;
                }
                let mut line = phase_line(p);
                if !args.deterministic {
                    line.push_str(&format!(" elapsed={:.3}s", start.elapsed().as_secs_f64()));
                }
                let _ = writeln!(stdout, "{line}");
            };
            let mut prompter;
            let mut auto;
            let policy: &mut dyn RestartPolicy = match policy {
                Policy::Automatic(p) => {
                    auto = p;
                    &mut auto
                }
                Policy::Interactive => {
                    prompter = Prompter::new(io::stdin().lock(), io::stderr());
                    &mut prompter
                }
            };
            train_observed(&prepared.topology, &prepared.data, &config, policy, &mut on_phase)?
        }
    };

    write_model(&args.out, &prepared, &report)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!("reasonable={} E={:e}", report.reasonable, report.error);
    }
    if automatic && !report.reasonable {
        return Err(CliError::Unreasonable);
    }
    Ok(())
}

/// Trains every seed on its own thread; prints each seed's log in seed
/// order and returns the lowest-error report.
fn train_seeds(
    args: &TrainArgs,
    prepared: &Prepared,
    base: &TrainerConfig,
    policy: AutomaticPolicy,
    seeds: Vec<u64>,
) -> Result<TrainingReport, CliError> {
    let results: Vec<(u64, scgnet::Result<TrainingReport>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let config = base.clone().with_seed(seed);
                scope.spawn(move || {
                    let mut policy = policy;
                    let report = train_observed(
                        &prepared.topology,
                        &prepared.data,
                        &config,
                        &mut policy,
                        &mut |_| {},
                    );
                    (seed, report)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect()
    });

    let mut best: Option<TrainingReport> = None;
    for (seed, result) in results {
        let report = result?;
        if !args.json {
            for p in &report.phases {
                println!("seed={seed} {}", phase_line(p));
            }
            println!(
                "seed={seed} reasonable={} E={:e} cold_starts={}",
                report.reasonable, report.error, report.cold_starts
            );
        }
        if best.as_ref().is_none_or(|b| report.error < b.error) {
            best = Some(report);
        }
    }
    let best = best.expect("seed ranges are never empty");
    if !args.json {
        println!("selected seed={}", best.seed);
    }
    Ok(best)
}

#[derive(Serialize)]
struct ClassifiedPattern<'a> {
    tag: String,
    outputs: &'a [f64],
    class: usize,
    ambiguous: bool,
}

pub fn classify(args: &ClassifyArgs) -> Result<(), CliError> {
    let model = ModelFile::load(&args.model)?;
    let topology = model.topology()?;
    let loaded = source::load(
        &args.source,
        LabelPosition::Absent,
        "holdout",
        Some((topology.d(), topology.n())),
    )?;
    let results: Vec<Classification> = model.classify_raw(&loaded.raw)?;
    let mut out = io::stdout().lock();
    for (i, c) in results.iter().enumerate() {
        let tag = tag(&loaded.raw, i);
        if args.json {
            let row = ClassifiedPattern {
                tag,
                outputs: &c.outputs,
                class: c.class,
                ambiguous: c.ambiguous,
            };
            writeln!(out, "{}", serde_json::to_string(&row)?)?;
        } else {
            let outputs: Vec<String> = c.outputs.iter().map(|o| format!("{o:.8e}")).collect();
            let mut line = format!("{tag} {} {}", outputs.join(" "), c.class);
            if c.ambiguous {
                line.push_str(" ambiguous");
            }
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

pub fn evaluate_cmd(args: &EvaluateArgs) -> Result<(), CliError> {
    let model = ModelFile::load(&args.model)?;
    let topology = model.topology()?;
    let loaded = source::load(
        &args.source,
        LabelPosition::First,
        "holdout",
        Some((topology.d(), topology.n())),
    )?;
    if !loaded.raw.is_fully_labeled() {
        return Err(CliError::Usage("evaluation needs labeled data".into()));
    }
    let data = model.prepare(&loaded.raw)?;
    let report = evaluate(&topology, &model.weights, &data)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!("{report}");
    }
    Ok(())
}

fn kind_name(kind: CheckKind) -> &'static str {
    match kind {
        CheckKind::Gradient => "gradient",
        CheckKind::HessianVector => "hessian_vector",
        CheckKind::Symmetry => "symmetry",
        CheckKind::Linearity => "linearity",
    }
}

fn check_line(r: &CheckReport) -> String {
    let worst = match (r.worst_trial, r.worst_index) {
        (Some(t), Some(i)) => format!("trial {t} index {i}"),
        (Some(t), None) => format!("trial {t}"),
        _ => "-".to_string(),
    };
    format!(
        "{:<15} trials={:<4} max_rel={:<11.3e} l2_rel={:<11.3e} tol={:<8e} worst=({worst}) {}",
        kind_name(r.kind),
        r.trials,
        r.max_relative_error,
        r.l2_relative_error,
        r.tolerance,
        if r.passed { "PASS" } else { "FAIL" }
    )
}

pub fn check_cmd(args: &CheckArgs) -> Result<(), CliError> {
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let config = CheckConfig {
        trials: args.trials,
        seed: args.seed,
        corrupt_gradient: args.inject_fault,
        ..CheckConfig::default()
    };
    let reports = check(&config)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&reports)?);
    } else {
        for r in &reports {
            println!("{}", check_line(r));
        }
    }
    if reports.iter().all(|r| r.passed) {
        Ok(())
    } else {
        Err(CliError::CheckFailed)
    }
}
