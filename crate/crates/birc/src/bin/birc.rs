//! Experiment runner: loads a JSON config, applies flag/env overrides, runs
//! one of the canonical experiments, and persists a manifest plus plot-ready
//! CSV/JSON under `<out>/<experiment>/<timestamp>-<hash>/`.
//!
//! Override precedence: command-line flags > BIRC_* environment variables >
//! config file. Exit codes: 0 success, 2 tolerance (assertion-style) failure,
//! 1 any other error.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use birc::env::{ConductanceLaw, Environment, Regime, TailSpec};
use birc::export;
use birc::limit;
use birc::numeric::mix_seed;
use birc::stats;
use birc::traps::{self, LimitParams};
use birc::walk::{self, Engine};
use birc::{Error, Result};

#[derive(Parser)]
#[command(name = "birc", version, about = "Biased heavy-tailed conductance walk laboratory")]
struct Cli {
    #[command(subcommand)]
    experiment: Experiment,
}

#[derive(Subcommand)]
enum Experiment {
    /// Passage times with checkpoints.
    Simulate(CommonArgs),
    /// Log-log slope of T_n over an n-grid.
    Scaling(CommonArgs),
    /// Empirical T_n / d_n against the stable-limit reference sample.
    PassageDist(CommonArgs),
    /// Empirical two-time aging curve against the arcsine prediction.
    Aging(CommonArgs),
    /// Trap census, exceedance point-process check and trap-type frequencies.
    Traps(CommonArgs),
    /// Ballistic-regime velocity against 1 / E[S-bar].
    Velocity(CommonArgs),
}

#[derive(Parser)]
struct CommonArgs {
    /// Path to the JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Replica count override.
    #[arg(long)]
    replicas: Option<usize>,
    /// Output directory override.
    #[arg(long)]
    out: Option<String>,
    /// Engine override.
    #[arg(long, value_parser = parse_engine)]
    engine: Option<Engine>,
    /// Worker thread count override.
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_engine(s: &str) -> std::result::Result<Engine, String> {
    match s {
        "direct" => Ok(Engine::Direct),
        "branching" => Ok(Engine::Branching),
        other => Err(format!("unknown engine {other} (expected direct|branching)")),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TailSpecConfig {
    alpha: f64,
    gamma: f64,
    k_scale: f64,
    t_min: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct LawConfig {
    upper: TailSpecConfig,
    lower: TailSpecConfig,
    p_upper: f64,
}

fn default_replicas() -> usize {
    100
}
fn default_engine() -> Engine {
    Engine::Branching
}
fn default_checkpoints() -> Vec<f64> {
    vec![1.0]
}
fn default_h_grid() -> Vec<f64> {
    vec![2.0, 4.0, 8.0]
}
fn default_j_window() -> i64 {
    50
}
fn default_eps() -> f64 {
    1.0
}
fn default_t_threshold() -> f64 {
    1e4
}
fn default_k_max() -> u32 {
    10
}
fn default_type_samples() -> u64 {
    2_000_000
}
fn default_out() -> String {
    "out".into()
}

/// One fully-resolved experiment configuration. Every default is materialized
/// before the manifest is written, so no implicit defaults exist downstream.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentConfig {
    law: LawConfig,
    lambda: f64,
    #[serde(default)]
    n: Option<u64>,
    #[serde(default)]
    n_grid: Vec<u64>,
    #[serde(default = "default_replicas")]
    replicas: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_engine")]
    engine: Engine,
    #[serde(default = "default_checkpoints")]
    checkpoints: Vec<f64>,
    /// Exceedance level (in units of d_n) for the point-process check.
    #[serde(default = "default_eps")]
    eps: f64,
    #[serde(default = "default_h_grid")]
    h_grid: Vec<f64>,
    #[serde(default = "default_j_window")]
    j_window: i64,
    /// Conditioning threshold for trap-type frequencies.
    #[serde(default = "default_t_threshold")]
    t_threshold: f64,
    #[serde(default = "default_k_max")]
    k_max: u32,
    /// Draws for the trap-type frequency report.
    #[serde(default = "default_type_samples")]
    type_samples: u64,
    /// Block-length constant override (None = (3 + 3/alpha)/lambda).
    #[serde(default)]
    big_c: Option<f64>,
    /// Optional assertion tolerance; violations exit with code 2.
    #[serde(default)]
    tolerance: Option<f64>,
    /// Run `velocity` even when a first moment is infinite.
    #[serde(default)]
    force_velocity: bool,
    #[serde(default = "default_out")]
    out: String,
    #[serde(default)]
    threads: Option<usize>,
}

impl ExperimentConfig {
    fn load(path: &Path, args: &CommonArgs) -> Result<Self> {
        let mut cfg: ExperimentConfig = export::read_json(path)?;
        // Environment variable overrides, then flags.
        if let Ok(v) = std::env::var("BIRC_SEED") {
            cfg.seed = v.parse().map_err(|_| Error::Config("bad BIRC_SEED".into()))?;
        }
        if let Ok(v) = std::env::var("BIRC_REPLICAS") {
            cfg.replicas = v
                .parse()
                .map_err(|_| Error::Config("bad BIRC_REPLICAS".into()))?;
        }
        if let Ok(v) = std::env::var("BIRC_OUT") {
            cfg.out = v;
        }
        if let Ok(v) = std::env::var("BIRC_ENGINE") {
            cfg.engine = parse_engine(&v).map_err(Error::Config)?;
        }
        if let Ok(v) = std::env::var("BIRC_THREADS") {
            cfg.threads = Some(
                v.parse()
                    .map_err(|_| Error::Config("bad BIRC_THREADS".into()))?,
            );
        }
        if let Some(s) = args.seed {
            cfg.seed = s;
        }
        if let Some(r) = args.replicas {
            cfg.replicas = r;
        }
        if let Some(o) = &args.out {
            cfg.out = o.clone();
        }
        if let Some(e) = args.engine {
            cfg.engine = e;
        }
        if let Some(t) = args.threads {
            cfg.threads = Some(t);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        // Surfaces law parameter errors at parse time. Ballistic laws are
        // allowed here; sub-ballistic experiments reject them when they
        // build their own law.
        self.build_law_flag(true)?;
        if !(self.lambda > 0.0) {
            return Err(Error::Config(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        for &u in &self.checkpoints {
            if !(u > 0.0 && u <= 1.0) {
                return Err(Error::Config(format!("checkpoint {u} outside (0,1]")));
            }
        }
        for &h in &self.h_grid {
            if !(h > 1.0) {
                return Err(Error::Config(format!("aging ratio {h} must exceed 1")));
            }
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config("eps must be positive".into()));
        }
        if self.j_window < 0 {
            return Err(Error::Config("j_window must be non-negative".into()));
        }
        Ok(())
    }

    fn build_law(&self) -> Result<ConductanceLaw> {
        self.build_law_flag(false)
    }

    fn build_law_flag(&self, allow_ballistic: bool) -> Result<ConductanceLaw> {
        let up = TailSpec::new(
            self.law.upper.alpha,
            self.law.upper.gamma,
            self.law.upper.k_scale,
            self.law.upper.t_min,
        )?;
        let low = TailSpec::new(
            self.law.lower.alpha,
            self.law.lower.gamma,
            self.law.lower.k_scale,
            self.law.lower.t_min,
        )?;
        ConductanceLaw::with_ballistic_flag(up, low, self.law.p_upper, allow_ballistic)
    }

    fn need_n(&self) -> Result<u64> {
        self.n
            .ok_or_else(|| Error::Config("this experiment requires `n`".into()))
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    experiment: &'a str,
    config: &'a ExperimentConfig,
    content_hash: &'a str,
    crate_version: &'a str,
    wall_time_secs: f64,
    unix_timestamp: u64,
}

fn main() {
    let cli = Cli::parse();
    let (name, args) = match &cli.experiment {
        Experiment::Simulate(a) => ("simulate", a),
        Experiment::Scaling(a) => ("scaling", a),
        Experiment::PassageDist(a) => ("passage-dist", a),
        Experiment::Aging(a) => ("aging", a),
        Experiment::Traps(a) => ("traps", a),
        Experiment::Velocity(a) => ("velocity", a),
    };
    match run(name, args) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}

fn run(name: &str, args: &CommonArgs) -> Result<i32> {
    let started = Instant::now();
    let cfg = ExperimentConfig::load(&args.config, args)?;
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .ok();
    }
    let hash = content_hash(&cfg)?;
    let dir = result_dir(&cfg.out, name, &hash)?;

    let code = match name {
        "simulate" => run_simulate(&cfg, &dir)?,
        "scaling" => run_scaling(&cfg, &dir)?,
        "passage-dist" => run_passage_dist(&cfg, &dir)?,
        "aging" => run_aging(&cfg, &dir)?,
        "traps" => run_traps(&cfg, &dir)?,
        "velocity" => run_velocity(&cfg, &dir)?,
        _ => unreachable!(),
    };

    let manifest = Manifest {
        schema_version: 1,
        experiment: name,
        config: &cfg,
        content_hash: &hash,
        crate_version: env!("CARGO_PKG_VERSION"),
        wall_time_secs: started.elapsed().as_secs_f64(),
        unix_timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    export::write_json(&dir.join("manifest.json"), &manifest)?;
    println!("{}", dir.display());
    Ok(code)
}

fn content_hash(cfg: &ExperimentConfig) -> Result<String> {
    let canon = serde_json::to_string(cfg)
        .map_err(|e| Error::Config(format!("config serialization failed: {e}")))?;
    let digest = Sha256::digest(canon.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn result_dir(out: &str, experiment: &str, hash: &str) -> Result<PathBuf> {
    let ts = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let base = Path::new(out).join(experiment);
    fs::create_dir_all(&base)?;
    for attempt in 0u32.. {
        let name = if attempt == 0 {
            format!("{ts}-{}", &hash[..12])
        } else {
            format!("{ts}-{}-{attempt}", &hash[..12])
        };
        let dir = base.join(name);
        if !dir.exists() {
            fs::create_dir(&dir)?;
            return Ok(dir);
        }
    }
    unreachable!()
}

/// Window with a left reserve sized for the bias; the guard extends it on the
/// rare deeper excursion.
fn window(lambda: f64, n: u64) -> (i64, i64) {
    let reserve = 200.0 + 12.0 / lambda * (n as f64).ln().max(1.0);
    (-(reserve as i64), n as i64 + 4)
}

fn run_replica_passages(
    cfg: &ExperimentConfig,
    law: &ConductanceLaw,
    engine: Engine,
    n: u64,
    grid: &[f64],
    replicas: usize,
) -> Result<Vec<walk::PassageRecord>> {
    let (left, right) = window(cfg.lambda, n);
    (0..replicas as u64)
        .into_par_iter()
        .map(|rep| {
            let mut env = Environment::sample(
                law,
                cfg.lambda,
                left,
                right,
                mix_seed(cfg.seed, 2 * rep + 1),
            )?;
            walk::passage_with_guard(
                &mut env,
                law,
                engine,
                n,
                grid,
                mix_seed(cfg.seed, 2 * rep + 2),
                rep,
                40,
            )
        })
        .collect()
}

fn run_simulate(cfg: &ExperimentConfig, dir: &Path) -> Result<i32> {
    if cfg.replicas == 0 {
        return Ok(0); // manifest-only run
    }
    let law = cfg.build_law()?;
    let n = cfg.need_n()?;
    let records =
        run_replica_passages(cfg, &law, cfg.engine, n, &cfg.checkpoints, cfg.replicas)?;
    export::write_passage_csv(&records, fs::File::create(dir.join("results.csv"))?)?;
    export::write_passage_batch(
        &records,
        &dir.join("samples.bin"),
        &dir.join("samples.json"),
    )?;
    Ok(0)
}

fn run_scaling(cfg: &ExperimentConfig, dir: &Path) -> Result<i32> {
    let law = cfg.build_law()?;
    if cfg.n_grid.len() < 2 {
        return Err(Error::Config("scaling needs an n_grid with >= 2 points".into()));
    }
    if cfg.replicas == 0 {
        return Err(Error::Config("scaling needs replicas > 0".into()));
    }
    let mut rows = Vec::new();
    for &n in &cfg.n_grid {
        let records = run_replica_passages(cfg, &law, cfg.engine, n, &[], cfg.replicas)?;
        let mut totals: Vec<f64> = records.iter().map(|r| r.total_steps as f64).collect();
        totals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = totals[totals.len() / 2];
        let mean = totals.iter().sum::<f64>() / totals.len() as f64;
        rows.push((n, median, mean));
    }
    let pairs: Vec<(f64, f64)> = rows.iter().map(|&(n, m, _)| (n as f64, m)).collect();
    let fit = stats::loglog_slope(&pairs)?;
    let mut csv = String::from("n,median_steps,mean_steps,slope,slope_stderr\n");
    for (n, median, mean) in &rows {
        csv.push_str(&format!(
            "{n},{median},{mean},{},{}\n",
            fit.slope, fit.stderr
        ));
    }
    fs::write(dir.join("results.csv"), csv)?;
    export::write_json(&dir.join("report.json"), &fit)?;
    let target = 1.0 / law.alpha();
    if let Some(tol) = cfg.tolerance {
        if (fit.slope - target).abs() > tol {
            eprintln!(
                "scaling slope {} outside {target} +/- {tol}",
                fit.slope
            );
            return Ok(2);
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct PassageDistReport {
    d_n: f64,
    alpha: f64,
    e_zeta_alpha: f64,
    theorem_constant: f64,
    ks_statistic: f64,
    ks_p_value: f64,
}

fn run_passage_dist(cfg: &ExperimentConfig, dir: &Path) -> Result<i32> {
    let law = cfg.build_law()?;
    let n = cfg.need_n()?;
    if cfg.replicas < 2 {
        return Err(Error::Config("passage-dist needs replicas >= 2".into()));
    }
    let alpha = law.alpha();
    let params = LimitParams::from_law(&law, cfg.lambda, n, cfg.big_c)?;
    let records = run_replica_passages(cfg, &law, cfg.engine, n, &[], cfg.replicas)?;
    let empirical: Vec<f64> = records
        .iter()
        .map(|r| r.total_steps as f64 / params.d_n)
        .collect();
    let ez = if law.regime() == Regime::WellAndWalls {
        2f64.powf(alpha)
    } else {
        let zeta = limit::ZetaLaw::from_law(&law)?;
        limit::e_zeta_alpha(
            &zeta,
            Some(&law),
            cfg.lambda,
            alpha,
            10_000,
            mix_seed(cfg.seed, 0x7e7a),
        )?
        .mean
    };
    let constant = limit::theorem_constant(alpha, ez)?;
    let reference: Vec<f64> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|i| {
            limit::stable_increment(alpha, 1.0, mix_seed(cfg.seed, 0x5bb0 + i))
                .map(|s| constant * s)
        })
        .collect::<Result<_>>()?;
    let ks = stats::ks_two_sample(&empirical, &reference)?;
    let report = PassageDistReport {
        d_n: params.d_n,
        alpha,
        e_zeta_alpha: ez,
        theorem_constant: constant,
        ks_statistic: ks.statistic,
        ks_p_value: ks.p_value,
    };
    export::write_json(&dir.join("report.json"), &report)?;
    let mut csv = String::from("empirical,reference\n");
    for (e, r) in empirical.iter().zip(&reference) {
        csv.push_str(&format!("{e},{r}\n"));
    }
    fs::write(dir.join("results.csv"), csv)?;
    if let Some(tol) = cfg.tolerance {
        if ks.statistic > tol {
            eprintln!("passage-dist KS {} exceeds {tol}", ks.statistic);
            return Ok(2);
        }
    }
    Ok(0)
}

fn run_aging(cfg: &ExperimentConfig, dir: &Path) -> Result<i32> {
    let law = cfg.build_law()?;
    let t_n = cfg.need_n()?;
    if cfg.replicas == 0 {
        return Err(Error::Config("aging needs replicas > 0".into()));
    }
    // The two-time estimator needs jointly-sampled positions: Direct only.
    let mut times: Vec<u64> = vec![t_n];
    for &h in &cfg.h_grid {
        times.push((h * t_n as f64).floor() as u64);
    }
    times.sort_unstable();
    times.dedup();
    let (left, right) = window(cfg.lambda, t_n);
    let trajs: Vec<walk::Trajectory> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|rep| {
            let env = Environment::sample(
                &law,
                cfg.lambda,
                left * 4,
                right,
                mix_seed(cfg.seed, 2 * rep + 1),
            )?;
            walk::direct_trajectory(&env, &times, mix_seed(cfg.seed, 2 * rep + 2), rep)
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &h in &cfg.h_grid {
        let empirical = stats::aging_estimator(&trajs, t_n, h, cfg.j_window)?;
        let predicted = limit::arcsine_aging(law.alpha(), h)?;
        worst = worst.max((empirical - predicted).abs());
        rows.push((h, empirical, predicted));
    }
    let mut csv = String::from("h,empirical,predicted\n");
    for (h, e, p) in &rows {
        csv.push_str(&format!("{h},{e},{p}\n"));
    }
    fs::write(dir.join("results.csv"), csv)?;
    if let Some(tol) = cfg.tolerance {
        if worst > tol {
            eprintln!("aging deviation {worst} exceeds {tol}");
            return Ok(2);
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct TrapsReport {
    environments: usize,
    d_n: f64,
    all_good_rate: f64,
    isolation_violation_rate: f64,
    mean_trap_count: f64,
    ppp: Option<stats::PppReport>,
    ppp_note: Option<String>,
    trap_types: Option<stats::TrapTypeReport>,
    trap_types_note: Option<String>,
}

fn run_traps(cfg: &ExperimentConfig, dir: &Path) -> Result<i32> {
    let law = cfg.build_law()?;
    let n = cfg.need_n()?;
    if cfg.replicas == 0 {
        return Err(Error::Config("traps needs replicas > 0 environments".into()));
    }
    let params = LimitParams::from_law(&law, cfg.lambda, n, cfg.big_c)?;
    let per_env: Vec<(traps::CensusReport, Vec<(f64, f64)>)> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|e| {
            // Trap detection looks ahead up to k_max sites past n - 1.
            let env = Environment::sample(
                &law,
                cfg.lambda,
                -(n as i64),
                n as i64 + cfg.k_max as i64,
                mix_seed(cfg.seed, e),
            )?;
            let report = traps::census(&env, &params, cfg.k_max)?;
            let records = traps::detect_traps(&env, &params, cfg.k_max)?;
            let marks: Vec<(f64, f64)> = records
                .iter()
                .filter(|t| t.x >= 0)
                .map(|t| (t.x as f64 / n as f64, t.depth / params.d_n))
                .collect();
            Ok((report, marks))
        })
        .collect::<Result<_>>()?;

    let mut csv = String::from(
        "env,trap_count,min_pairwise_distance,max_depth,max_k,all_good,h_event_count,isolation_violation\n",
    );
    for (i, (r, _)) in per_env.iter().enumerate() {
        csv.push_str(&format!(
            "{i},{},{},{},{},{},{},{}\n",
            r.trap_count,
            r.min_pairwise_distance.map_or(String::from(""), |d| d.to_string()),
            r.max_depth,
            r.max_k,
            r.all_good,
            r.h_event_count,
            r.isolation_violation
        ));
    }
    fs::write(dir.join("results.csv"), csv)?;

    let envs: Vec<Vec<(f64, f64)>> = per_env.iter().map(|(_, m)| m.clone()).collect();
    let (ppp, ppp_note) = if envs.len() >= 100 {
        match stats::exceedance_ppp_check(&envs, cfg.eps, law.alpha()) {
            Ok(p) => (Some(p), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, Some("fewer than 100 environments".into()))
    };
    let (trap_types, trap_types_note) = match stats::trap_type_frequencies(
        &law,
        cfg.lambda,
        cfg.t_threshold,
        cfg.type_samples,
        mix_seed(cfg.seed, 0x7261),
    ) {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let m = per_env.len() as f64;
    let report = TrapsReport {
        environments: per_env.len(),
        d_n: params.d_n,
        all_good_rate: per_env.iter().filter(|(r, _)| r.all_good).count() as f64 / m,
        isolation_violation_rate: per_env
            .iter()
            .filter(|(r, _)| r.isolation_violation)
            .count() as f64
            / m,
        mean_trap_count: per_env.iter().map(|(r, _)| r.trap_count as f64).sum::<f64>() / m,
        ppp,
        ppp_note,
        trap_types,
        trap_types_note,
    };
    export::write_json(&dir.join("report.json"), &report)?;
    if let Some(tol) = cfg.tolerance {
        if report.all_good_rate < 1.0 - tol {
            eprintln!(
                "good-triblock rate {} below {}",
                report.all_good_rate,
                1.0 - tol
            );
            return Ok(2);
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct VelocityReport {
    predicted: f64,
    empirical_mean: f64,
    empirical_stderr: f64,
}

fn run_velocity(cfg: &ExperimentConfig, dir: &Path) -> Result<i32> {
    let law = cfg.build_law_flag(true)?;
    let n = cfg.need_n()?;
    if cfg.replicas == 0 {
        return Err(Error::Config("velocity needs replicas > 0".into()));
    }
    let (mean_c, mean_recip) = (law.mean_c(), law.mean_recip());
    let predicted = match (mean_c, mean_recip) {
        (Some(a), Some(b)) => {
            let el = (-cfg.lambda).exp();
            1.0 / (1.0 + 2.0 * a * b * el / (1.0 - el))
        }
        _ if cfg.force_velocity => 0.0, // sub-ballistic: v = 0
        _ => {
            return Err(Error::Config(
                "velocity needs both tail exponents > 1 (finite E[c], E[1/c]); \
                 set force_velocity to compare against v = 0 anyway"
                    .into(),
            ))
        }
    };
    let records = run_replica_passages(cfg, &law, cfg.engine, n, &[], cfg.replicas)?;
    let vs: Vec<f64> = records
        .iter()
        .map(|r| n as f64 / r.total_steps as f64)
        .collect();
    let mean = vs.iter().sum::<f64>() / vs.len() as f64;
    let var = vs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vs.len() as f64;
    let stderr = (var / vs.len() as f64).sqrt();
    let mut csv = String::from("replica,velocity\n");
    for (i, v) in vs.iter().enumerate() {
        csv.push_str(&format!("{i},{v}\n"));
    }
    fs::write(dir.join("results.csv"), csv)?;
    let report = VelocityReport {
        predicted,
        empirical_mean: mean,
        empirical_stderr: stderr,
    };
    export::write_json(&dir.join("report.json"), &report)?;
    if let Some(tol) = cfg.tolerance {
        if (mean - predicted).abs() > tol {
            eprintln!("velocity {mean} vs predicted {predicted} beyond {tol}");
            return Ok(2);
        }
    }
    Ok(0)
}
