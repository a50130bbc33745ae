use std::path::{Path, PathBuf};
use std::thread;

use anyhow::{Context, Result};
use chrono::Utc;
use hh_inverse::{
    add_noise, noise::NOISE_GENERATOR, run_inversion_with, solve_forward, NoiseSpec, Observation,
    ParameterKind, RunResult, StopReason, StoppingRule,
};
use serde_json::{json, Value};

use crate::config::{ConfigError, ExperimentConfig};
use crate::io::{self, write_atomic};
use crate::{Common, RunOverrides};

const EXIT_OK: u8 = 0;
const EXIT_NO_DESCENT: u8 = 4;

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let config = ExperimentConfig::load(&common.config)?;
    let out = common
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((config, out))
}

fn apply(config: &mut ExperimentConfig, o: &RunOverrides) -> Result<()> {
    if let Some(tau) = o.tau {
        config.tau = tau;
    }
    if let Some(max_iter) = o.max_iter {
        config.max_iterations = max_iter;
    }
    if let Some(seed) = o.seed {
        config.seed = seed;
    }
    if let Some(step) = o.step_control {
        config.step_control = step;
    }
    Ok(config.validate()?)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError(format!("--epsilon must be non-negative, got {epsilon}")).into())
    }
}

fn synthetic(
    config: &ExperimentConfig,
    epsilon: f64,
    seed: u64,
) -> Result<(hh_inverse::Trajectory, Observation)> {
    let clean = solve_forward(
        &config.constants,
        &config.conductances,
        &config.exponents,
        &config.grid,
    )
    .context("forward solve at the true parameters")?;
    let obs = add_noise(&config.grid, &clean.v, &NoiseSpec { epsilon, seed })?;
    Ok((clean, obs))
}

pub fn forward(common: &Common) -> Result<u8> {
    let (config, out) = load(common)?;
    let traj = solve_forward(
        &config.constants,
        &config.conductances,
        &config.exponents,
        &config.grid,
    )?;
    let path = out.join("trajectory.csv");
    write_atomic(&path, &io::trajectory_csv(&traj)?)?;
    println!("wrote {} ({} nodes)", path.display(), traj.len());
    Ok(EXIT_OK)
}

pub fn perturb(common: &Common, epsilon: f64, seed: Option<u64>) -> Result<u8> {
    let (config, out) = load(common)?;
    check_epsilon(epsilon)?;
    let seed = seed.unwrap_or(config.seed);
    let (clean, obs) = synthetic(&config, epsilon, seed)?;
    let path = out.join("observation.csv");
    write_atomic(&path, &io::observation_csv(&clean, &obs, seed)?)?;
    println!(
        "wrote {} (epsilon={epsilon}, delta={:.6e}, seed={seed})",
        path.display(),
        obs.delta
    );
    Ok(EXIT_OK)
}

/// Where the data of a run came from, as recorded in its summary.
struct Source {
    description: Value,
    reproduce: String,
}

fn run(config: &ExperimentConfig, obs: &Observation) -> hh_inverse::Result<RunResult> {
    let rule = StoppingRule::new(config.tau, obs.delta, config.max_iterations)?;
    let truth = config.truth();
    run_inversion_with(
        &config.problem(),
        &config.initial(),
        obs,
        &rule,
        config.step_control,
        Some(&truth),
    )
}

fn result_json(run: &RunResult) -> Value {
    let last = run.final_record();
    json!({
        "kind": run.final_iterate.kind,
        "labels": run.final_iterate.kind.labels(),
        "k_star": run.k_star,
        "final_iterate": run.final_iterate.values,
        "stop_reason": run.stop_reason,
        "residual_norm": last.residual_norm,
        "percent_error": last.percent_error,
        "tau": run.rule.tau,
        "delta": run.rule.delta,
        "threshold": run.rule.threshold(),
        "max_iterations": run.rule.max_iterations,
        "step_control": run.step_control,
        "rejected_steps": run.rejected_steps,
    })
}

fn summary_json(
    config: &ExperimentConfig,
    run: &RunResult,
    source: &Source,
    started: &str,
) -> Value {
    json!({
        "tool": concat!("hhinv ", env!("CARGO_PKG_VERSION")),
        "started_at": started,
        "finished_at": Utc::now().to_rfc3339(),
        "generator": NOISE_GENERATOR,
        "seed": config.seed,
        "observation": source.description,
        "reproduce": source.reproduce,
        "config": config,
        "result": result_json(run),
    })
}

fn write_run(
    dir: &Path,
    config: &ExperimentConfig,
    run: &RunResult,
    source: &Source,
    started: &str,
    trace: bool,
) -> Result<()> {
    if trace {
        write_atomic(&dir.join("trace.csv"), &io::trace_csv(run)?)?;
    }
    write_atomic(
        &dir.join("summary.json"),
        &io::json_bytes(&summary_json(config, run, source, started))?,
    )?;
    write_atomic(&dir.join("config.toml"), config.to_toml().as_bytes())
}

fn no_descent(run: &RunResult) -> bool {
    matches!(
        run.stop_reason,
        StopReason::ZeroGradient | StopReason::Stagnation
    )
}

pub fn invert(
    common: &Common,
    observation: Option<&Path>,
    epsilon: Option<f64>,
    o: &RunOverrides,
) -> Result<u8> {
    let started = Utc::now().to_rfc3339();
    let (mut config, out) = load(common)?;
    apply(&mut config, o)?;
    let (obs, source) = match (observation, epsilon) {
        (Some(path), _) => {
            let (obs, meta) = io::read_observation(path, &config.grid)
                .map_err(|e| ConfigError(format!("{e:#}")))?;
            if let Some(seed) = meta.seed {
                config.seed = seed;
            }
            let source = Source {
                description: json!({
                    "source": "file",
                    "path": path.display().to_string(),
                    "epsilon": meta.epsilon,
                    "delta": meta.delta,
                }),
                reproduce: format!(
                    "hhinv invert --config config.toml --observation {}",
                    path.display()
                ),
            };
            (obs, source)
        }
        (None, Some(epsilon)) => {
            check_epsilon(epsilon)?;
            let (_, obs) = synthetic(&config, epsilon, config.seed)?;
            let source = Source {
                description: json!({ "source": "synthetic", "epsilon": epsilon, "delta": obs.delta }),
                reproduce: format!(
                    "hhinv invert --config config.toml --epsilon {epsilon} --seed {}",
                    config.seed
                ),
            };
            (obs, source)
        }
        (None, None) => {
            return Err(ConfigError("either --observation or --epsilon is required".into()).into())
        }
    };

    let result = run(&config, &obs)?;
    write_run(&out, &config, &result, &source, &started, true)?;
    let last = result.final_record();
    println!(
        "{}: k*={} {:?} residual={:.6e} error={} stop={}",
        result.final_iterate.kind,
        result.k_star,
        result.final_iterate.values,
        last.residual_norm,
        last.percent_error
            .map(|e| format!("{e:.4}%"))
            .unwrap_or_default(),
        result.stop_reason
    );
    println!("wrote {}", out.display());
    if no_descent(&result) {
        eprintln!(
            "error: no descent direction at iteration {} ({})",
            result.k_star, result.stop_reason
        );
        return Ok(EXIT_NO_DESCENT);
    }
    Ok(EXIT_OK)
}

fn row_dir(out: &Path, epsilon: f64) -> PathBuf {
    out.join(format!("eps-{epsilon}"))
}

pub fn table(common: &Common, which: u8, traces: bool, o: &RunOverrides) -> Result<u8> {
    let started = Utc::now().to_rfc3339();
    let (mut config, out) = load(common)?;
    apply(&mut config, o)?;
    let expected = if which == 2 {
        ParameterKind::Conductances
    } else {
        ParameterKind::Exponents
    };
    if config.unknown != expected {
        return Err(ConfigError(format!(
            "--which {which} tabulates {expected}, but the config recovers {}",
            config.unknown
        ))
        .into());
    }
    if config.epsilons.is_empty() {
        return Err(
            ConfigError("epsilons: the table needs at least one noise level".into()).into(),
        );
    }

    let config = &config;
    let rows: Vec<Result<RunResult>> = thread::scope(|scope| {
        let handles: Vec<_> = config
            .epsilons
            .iter()
            .map(|&epsilon| {
                let started = started.as_str();
                let out = out.as_path();
                scope.spawn(move || -> Result<RunResult> {
                    let (_, obs) = synthetic(config, epsilon, config.seed)?;
                    let result = run(config, &obs)?;
                    let source = Source {
                        description: json!({ "source": "synthetic", "epsilon": epsilon, "delta": obs.delta }),
                        reproduce: format!(
                            "hhinv invert --config config.toml --epsilon {epsilon} --seed {}",
                            config.seed
                        ),
                    };
                    write_run(&row_dir(out, epsilon), config, &result, &source, started, traces)?;
                    Ok(result)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(anyhow::anyhow!("row panicked")))
            })
            .collect()
    });

    let labels = config.unknown.labels();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "epsilon",
        "k_star",
        labels[0],
        labels[1],
        labels[2],
        "error_percent",
        "residual",
        "tau_delta",
        "stop_reason",
        "status",
    ])?;
    for (&epsilon, row) in config.epsilons.iter().zip(&rows) {
        let record = match row {
            Ok(result) => {
                let last = result.final_record();
                let x = result.final_iterate.values;
                vec![
                    io::num(epsilon),
                    result.k_star.to_string(),
                    io::num(x[0]),
                    io::num(x[1]),
                    io::num(x[2]),
                    last.percent_error.map(io::num).unwrap_or_default(),
                    io::num(last.residual_norm),
                    io::num(result.rule.threshold()),
                    result.stop_reason.to_string(),
                    "ok".into(),
                ]
            }
            Err(e) => {
                let mut blank = vec![String::new(); 10];
                blank[0] = io::num(epsilon);
                blank[9] = format!("{e:#}");
                blank
            }
        };
        w.write_record(&record)?;
    }
    let path = out.join(format!("table{which}.csv"));
    write_atomic(&path, &w.into_inner()?)?;
    write_atomic(&out.join("config.toml"), config.to_toml().as_bytes())?;

    for (&epsilon, row) in config.epsilons.iter().zip(&rows) {
        match row {
            Ok(result) => {
                let last = result.final_record();
                println!(
                    "eps={:<6} k*={:<7} {:?} error={} residual={:.4} stop={}",
                    epsilon,
                    result.k_star,
                    result.final_iterate.values,
                    last.percent_error
                        .map(|e| format!("{e:.3}%"))
                        .unwrap_or_default(),
                    last.residual_norm,
                    result.stop_reason
                );
            }
            Err(e) => println!("eps={epsilon:<6} failed: {e:#}"),
        }
    }
    println!("wrote {}", path.display());
    Ok(EXIT_OK)
}
