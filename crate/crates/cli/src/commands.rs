//! Subcommand implementations. Each returns a process exit code.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use brt_core::estimators::{estimate_entropy_density, estimate_free_energy, estimate_u_in, estimate_v_in, hitting_intensity, Estimate, EstimatorOptions};
use brt_core::simulator::{simulate, SimOptions};
use brt_core::{run_replicates, BranchingTessellation, StreamSeed};

use crate::config::{ConfigError, KernelConfig, Prepared, RunConfig};
use crate::eventlog::{read_log, write_log, LogHeader, SCHEMA_VERSION};
use crate::render::{render_line, render_planar, RenderStyle};
use crate::suites;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;

/// Exit code for an error, with the diagnostic printed to standard error.
fn fail(e: &ConfigError) -> i32 {
    eprintln!("error: {e}");
    match e {
        ConfigError::Core(brt_core::Error::BudgetExceeded { .. }) => EXIT_BUDGET,
        ConfigError::Core(brt_core::Error::Diverged { .. }) => EXIT_DIVERGED,
        _ => EXIT_CONFIG,
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), ConfigError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| ConfigError::Io { path: p.display().to_string(), source }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| ConfigError::Io { path: "<stdout>".into(), source }),
    }
}

fn load(config: &Path, seed: Option<u64>) -> Result<(RunConfig, Prepared), ConfigError> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let prepared = cfg.prepare()?;
    Ok((cfg, prepared))
}

/// Simulates every replicate of a configuration.
pub fn simulate_replicates(cfg: &RunConfig, p: &Prepared) -> Result<Vec<BranchingTessellation>, ConfigError> {
    let opts = SimOptions { event_cap: cfg.event_cap };
    run_replicates(cfg.replicates, StreamSeed(cfg.seed), |_, rng| {
        let initial = cfg.initial_tessellation(&p.window, rng)?;
        Ok(simulate(&initial, &p.kernel, &p.lambda, cfg.t_end, rng, opts)?)
    })
    .into_iter()
    .collect()
}

pub fn log_header(cfg: &RunConfig, replicate: u64) -> LogHeader {
    LogHeader {
        schema_version: SCHEMA_VERSION.into(),
        dimension: cfg.dimension,
        window: cfg.window.clone(),
        colours: cfg.colours.clone(),
        seed: cfg.seed,
        replicate,
        t_end: cfg.t_end,
        kernel: cfg.kernel.clone(),
        lambda: cfg.lambda.clone(),
    }
}

pub fn cmd_simulate(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> i32 {
    let run = || -> Result<(), ConfigError> {
        let (cfg, p) = load(config, seed)?;
        let reps = simulate_replicates(&cfg, &p)?;
        let out = out.or_else(|| cfg.output.as_ref().map(PathBuf::from));
        if reps.len() == 1 {
            return write_out(out.as_deref(), &write_log(&log_header(&cfg, 0), &reps[0]));
        }
        let dir = out.ok_or_else(|| ConfigError::Invalid("several replicates need an output directory (--out)".into()))?;
        fs::create_dir_all(&dir).map_err(|source| ConfigError::Io { path: dir.display().to_string(), source })?;
        for (i, h) in reps.iter().enumerate() {
            let path = dir.join(format!("replicate_{i:04}.jsonl"));
            write_out(Some(&path), &write_log(&log_header(&cfg, i as u64), h))?;
        }
        Ok(())
    };
    match run() {
        Ok(()) => EXIT_OK,
        Err(e) => fail(&e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Functional {
    H,
    U,
    V,
    Free,
    Intensity,
}

fn csv_row(name: &str, value: f64, std_error: f64, n: usize, notes: &str) -> String {
    format!("{name},{value},{std_error},{n},{notes}\n")
}

fn parse_target(fragment: &str) -> Result<KernelConfig, ConfigError> {
    let text = match fragment.strip_prefix('@') {
        Some(path) => fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?,
        None => fragment.to_string(),
    };
    let value: serde_json::Value = serde_json::from_str(&text)?;
    // Accept either the bare fragment or {"kernel": {...}}.
    let inner = value.get("kernel").cloned().unwrap_or(value);
    Ok(serde_json::from_value(inner)?)
}

pub fn cmd_estimate(config: &Path, functional: Functional, target: Option<&str>, seed: Option<u64>, out: Option<PathBuf>) -> i32 {
    let run = || -> Result<String, ConfigError> {
        let (cfg, p) = load(config, seed)?;
        let scheme = p.scheme.clone().ok_or_else(|| ConfigError::Invalid("estimation needs an `observation` block".into()))?;
        let target = match target {
            Some(t) => parse_target(t)?.build()?,
            None => p.kernel.clone(),
        };
        target.check_compatible(&p.lambda)?;
        if functional != Functional::Intensity && functional != Functional::H {
            scheme.check_kernel(&target).map_err(|_| {
                ConfigError::Invalid(format!("observation margin {} is smaller than the target kernel range {}", scheme.margin(), target.range()))
            })?;
        }
        let reps = simulate_replicates(&cfg, &p)?;
        let est_seed = StreamSeed(cfg.seed).child(1);
        let opts = EstimatorOptions::default();
        let side = cfg.observation.map(|o| o.side).unwrap_or_default();
        let notes = format!("window_volume={};observation_side={side};t_end={}", p.window.area(), cfg.t_end);
        let row = |name: &str, e: &Estimate| csv_row(name, e.value, e.std_error, e.n, &notes);
        let mut csv = String::from("name,value,std_error,n,notes\n");
        match functional {
            Functional::H => csv += &row("h", &estimate_entropy_density(&reps, &p.kernel, &p.lambda, &scheme, opts, est_seed)?),
            Functional::U => csv += &row("u", &estimate_u_in(&reps, &target, &p.lambda, &scheme)?),
            Functional::V => csv += &row("v", &estimate_v_in(&reps, &target, &p.lambda, &scheme, opts, est_seed)?),
            Functional::Intensity => csv += &row("intensity", &hitting_intensity(&reps, &scheme)?),
            Functional::Free => {
                let e = estimate_free_energy(&reps, &p.kernel, &target, &p.lambda, &scheme, opts, est_seed)?;
                csv += &row("free", &e);
                if let Some(b) = e.breakdown {
                    for (name, c) in [("h", b.h), ("u", b.u), ("v", b.v), ("direct", b.direct)] {
                        csv += &csv_row(name, c.value, c.std_error, e.n, &notes);
                    }
                }
            }
        }
        Ok(csv)
    };
    match run() {
        Ok(csv) => match write_out(out.as_deref(), &csv) {
            Ok(()) => EXIT_OK,
            Err(e) => fail(&e),
        },
        Err(e) => fail(&e),
    }
}

pub fn cmd_render(log: &Path, time: Option<f64>, out: Option<PathBuf>, allow_1d: bool, stamp: bool) -> i32 {
    let run = || -> Result<String, ConfigError> {
        let text = fs::read_to_string(log).map_err(|source| ConfigError::Io { path: log.display().to_string(), source })?;
        let (header, history) = read_log(&text)?;
        let s = time.unwrap_or(header.t_end);
        if !(0.0..=1.0).contains(&s) {
            return Err(ConfigError::Invalid(format!("render time {s} outside [0, 1]")));
        }
        let t = history.state_at(s);
        let style = RenderStyle { time_stamp: stamp.then_some(s), ..RenderStyle::default() };
        match header.dimension {
            2 => Ok(render_planar(&t, &style)),
            1 if allow_1d => Ok(render_line(&t, &style)),
            _ => Err(ConfigError::Invalid("one-dimensional logs render only with --allow-1d".into())),
        }
    };
    match run().and_then(|svg| write_out(out.as_deref(), &svg)) {
        Ok(()) => EXIT_OK,
        Err(e) => fail(&e),
    }
}

pub fn cmd_validate(suite: &str, seed: u64) -> i32 {
    let Some(ids) = suites::suite(suite) else {
        eprintln!("error: unknown suite `{suite}` (geometry, laws, gibbs, all)");
        return EXIT_CONFIG;
    };
    let mut all = true;
    for id in ids {
        let r = suites::run(id, seed);
        println!("{}", r.line());
        all &= r.passed;
    }
    if all {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    }
}
