//! Passage-time engines: step-by-step simulation and the exact edge-crossing
//! (branching) representation, plus the trap-crossing law tau_B.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::env::{ConductanceLaw, Environment};
use crate::network::{escape_prob, theta};
use crate::numeric::mix_seed;
use crate::traps::{BlockPlan, LimitParams, TrapKind, TrapRecord};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Direct,
    Branching,
}

/// One replica's first-passage record.
///
/// For the Branching engine the checkpoint values come from independent
/// recursions: each is exact in law, but they are not jointly coupled
/// (`joint_law` is false) and `max_backtrack` only reports the depth of the
/// excursion below the origin, not the full backtrack statistic.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PassageRecord {
    pub n: u64,
    /// (u, T_floor(u n)) pairs for the configured grid u in (0,1].
    pub checkpoints: Vec<(f64, u64)>,
    pub total_steps: u64,
    pub max_backtrack: i64,
    pub engine: Engine,
    pub joint_law: bool,
    pub replica_id: u64,
    pub seed: u64,
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    for &u in grid {
        if !(u > 0.0 && u <= 1.0) {
            return Err(Error::Config(format!("checkpoint u must be in (0,1], got {u}")));
        }
    }
    Ok(())
}

/// Per-site right-jump probabilities over the window, indexed from left+1.
struct OmegaTable {
    left: i64,
    omega: Vec<f64>,
}

impl OmegaTable {
    fn build(env: &Environment, hi: i64) -> Result<Self> {
        let left = env.left();
        let mut omega = Vec::with_capacity((hi - left) as usize);
        for x in (left + 1)..=hi {
            omega.push(env.omega(x)?);
        }
        Ok(Self { left, omega })
    }

    #[inline]
    fn get(&self, x: i64) -> Option<f64> {
        if x <= self.left {
            return None;
        }
        self.omega.get((x - self.left - 1) as usize).copied()
    }
}

/// Step-by-step walk from 0 until first hitting n.
pub fn direct_passage(
    env: &Environment,
    n: u64,
    grid: &[f64],
    master_seed: u64,
    replica_id: u64,
) -> Result<PassageRecord> {
    validate_grid(grid)?;
    let n_i = n as i64;
    if env.right() < n_i || env.left() >= 0 {
        return Err(Error::OutOfWindow { x: n_i, left: env.left(), right: env.right() });
    }
    let table = OmegaTable::build(env, n_i - 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(master_seed, replica_id));

    // Checkpoint targets sorted by site; several u may share a site.
    let mut targets: Vec<(i64, usize)> =
        grid.iter().enumerate().map(|(i, &u)| ((u * n as f64).floor() as i64, i)).collect();
    targets.sort_unstable();
    let mut checkpoints = vec![(0.0, 0u64); grid.len()];
    for (i, &u) in grid.iter().enumerate() {
        checkpoints[i].0 = u;
    }
    let mut next_target = 0usize;
    while next_target < targets.len() && targets[next_target].0 <= 0 {
        checkpoints[targets[next_target].1].1 = 0;
        next_target += 1;
    }

    let mut pos: i64 = 0;
    let mut steps: u64 = 0;
    let mut run_max: i64 = 0;
    let mut max_backtrack: i64 = 0;
    while pos < n_i {
        let w = table.get(pos).ok_or(Error::LeftEdgeHit { step: steps })?;
        steps += 1;
        if rng.gen::<f64>() < w {
            pos += 1;
            if pos > run_max {
                run_max = pos;
                while next_target < targets.len() && targets[next_target].0 == pos {
                    checkpoints[targets[next_target].1].1 = steps;
                    next_target += 1;
                }
            }
        } else {
            pos -= 1;
            max_backtrack = max_backtrack.max(run_max - pos);
        }
    }
    Ok(PassageRecord {
        n,
        checkpoints,
        total_steps: steps,
        max_backtrack,
        engine: Engine::Direct,
        joint_law: true,
        replica_id,
        seed: master_seed,
    })
}

/// Failures before the r-th success in Bernoulli(p) trials.
/// Geometric summation for small r; exact Gamma-Poisson mixture
/// (Poisson with Gamma(r,1)*(1-p)/p intensity) for large r.
pub fn negative_binomial(rng: &mut impl Rng, r: u64, p: f64) -> u64 {
    assert!(p > 0.0 && p <= 1.0, "negative_binomial requires p in (0,1], got {p}");
    if r == 0 || p >= 1.0 {
        return 0;
    }
    if r <= 32 {
        let log_q = (-p).ln_1p();
        let mut total = 0u64;
        for _ in 0..r {
            let u: f64 = rng.gen::<f64>();
            // Failures before one success: floor(ln u / ln(1-p)).
            total += (u.ln() / log_q).floor() as u64;
        }
        return total;
    }
    let g = Gamma::new(r as f64, 1.0).expect("valid gamma shape").sample(rng);
    let lambda = g * (1.0 - p) / p;
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("valid poisson rate").sample(rng) as u64
}

/// One edge-crossing recursion: total steps of the walk from 0 to `m`,
/// together with the deepest site visited. `rng` drives all draws.
fn branching_total(
    env: &Environment,
    table: &OmegaTable,
    m: i64,
    rng: &mut impl Rng,
) -> Result<(u64, i64)> {
    let mut total: u64 = 0;
    let mut d_above: u64 = 0; // left jumps from x+1
    let mut deepest: i64 = 0;
    let mut x = m - 1;
    loop {
        let r = d_above + if x >= 0 { 1 } else { 0 };
        if x < 0 && r == 0 {
            break;
        }
        deepest = deepest.min(x);
        let w = table.get(x).ok_or(Error::LeftEdgeHit { step: total })?;
        let d = negative_binomial(rng, r, w);
        total = total
            .checked_add(r)
            .and_then(|t| t.checked_add(d))
            .ok_or_else(|| Error::Numeric("passage time overflows u64".into()))?;
        d_above = d;
        if x == env.left() + 1 && d > 0 {
            // The walk would have to visit the window's left edge.
            return Err(Error::LeftEdgeHit { step: total });
        }
        x -= 1;
    }
    Ok((total, deepest))
}

/// Exact-in-law passage time via the edge-crossing representation, O(n + depth)
/// per target. Checkpoints come from independent recursions (see record docs).
pub fn branching_passage(
    env: &Environment,
    n: u64,
    grid: &[f64],
    master_seed: u64,
    replica_id: u64,
) -> Result<PassageRecord> {
    validate_grid(grid)?;
    let n_i = n as i64;
    if env.right() < n_i || env.left() >= 0 {
        return Err(Error::OutOfWindow { x: n_i, left: env.left(), right: env.right() });
    }
    let table = OmegaTable::build(env, n_i - 1)?;
    let stream = mix_seed(master_seed, replica_id);

    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(stream, 0));
    let (total_steps, deepest) = branching_total(env, &table, n_i, &mut rng)?;

    let mut checkpoints = Vec::with_capacity(grid.len());
    for (i, &u) in grid.iter().enumerate() {
        let m = (u * n as f64).floor() as i64;
        let value = if m <= 0 {
            0
        } else if m == n_i {
            total_steps
        } else {
            let mut crng = ChaCha8Rng::seed_from_u64(mix_seed(stream, 1 + i as u64));
            branching_total(env, &table, m, &mut crng)?.0
        };
        checkpoints.push((u, value));
    }
    Ok(PassageRecord {
        n,
        checkpoints,
        total_steps,
        max_backtrack: -deepest,
        engine: Engine::Branching,
        joint_law: false,
        replica_id,
        seed: master_seed,
    })
}

/// Positions of one walk replica at a fixed grid of times, for the
/// time-correlation (aging) experiments.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<u64>,
    pub positions: Vec<i64>,
    pub engine: Engine,
    pub replica_id: u64,
}

impl Trajectory {
    pub fn position_at(&self, t: u64) -> Result<i64> {
        self.times
            .iter()
            .position(|&s| s == t)
            .map(|i| self.positions[i])
            .ok_or_else(|| Error::Config(format!("time {t} not sampled in trajectory")))
    }
}

/// Step-by-step walk recording X_t at the given times (sorted ascending).
/// The window must be wide enough on the right for max(times) steps of drift;
/// hitting either edge is an error.
pub fn direct_trajectory(
    env: &Environment,
    times: &[u64],
    master_seed: u64,
    replica_id: u64,
) -> Result<Trajectory> {
    if times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config("trajectory times must be sorted".into()));
    }
    let horizon = *times.last().ok_or_else(|| Error::Config("empty time grid".into()))?;
    let table = OmegaTable::build(env, env.right())?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(master_seed, replica_id));
    let mut pos: i64 = 0;
    let mut positions = Vec::with_capacity(times.len());
    let mut next = 0usize;
    for t in 0..=horizon {
        while next < times.len() && times[next] == t {
            positions.push(pos);
            next += 1;
        }
        if t == horizon {
            break;
        }
        if pos >= env.right() {
            return Err(Error::OutOfWindow { x: pos + 1, left: env.left(), right: env.right() });
        }
        let w = table.get(pos).ok_or(Error::LeftEdgeHit { step: t })?;
        if rng.gen::<f64>() < w {
            pos += 1;
        } else {
            pos -= 1;
        }
    }
    Ok(Trajectory { times: times.to_vec(), positions, engine: Engine::Direct, replica_id })
}

/// Run a passage with automatic leftward extension of the window on
/// LeftEdgeHit: the environment grows deterministically (same site streams),
/// the walk is retried on a fresh stream.
pub fn passage_with_guard(
    env: &mut Environment,
    law: &ConductanceLaw,
    engine: Engine,
    n: u64,
    grid: &[f64],
    master_seed: u64,
    replica_id: u64,
    max_retries: u32,
) -> Result<PassageRecord> {
    for attempt in 0..=max_retries as u64 {
        let run = match engine {
            Engine::Direct => direct_passage(env, n, grid, master_seed, mix_seed(replica_id, attempt)),
            Engine::Branching => {
                branching_passage(env, n, grid, master_seed, mix_seed(replica_id, attempt))
            }
        };
        match run {
            Err(Error::LeftEdgeHit { .. }) => {
                let new_left = (2 * env.left().min(-1)).max(env.left() - 1_000_000);
                env.extend_left(law, new_left)?;
            }
            other => {
                let mut rec = other?;
                rec.replica_id = replica_id;
                return Ok(rec);
            }
        }
    }
    Err(Error::LeftEdgeHit { step: 0 })
}

/// One draw of the trap-crossing law tau_B = (theta_B / p_B) * Exp(1).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrapLawSample {
    pub p: f64,
    pub theta: f64,
    pub xi: f64,
    pub tau: f64,
}

pub fn sample_tau(p: f64, theta: f64, rng: &mut impl Rng) -> Result<TrapLawSample> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Config(format!("tau sample requires p in (0,1], got {p}")));
    }
    if !(theta >= 2.0) {
        return Err(Error::Config(format!("tau sample requires theta >= 2, got {theta}")));
    }
    let xi = theta / p;
    let e: f64 = Exp1.sample(rng);
    Ok(TrapLawSample { p, theta, xi, tau: xi * e })
}

/// Reference law used for the tau side of the comparison.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum TauReference {
    /// Simple traps: tau = (theta_B/p_B) Exp(1) from the network formulas.
    Simulated { p: f64, theta: f64 },
    /// Well-and-wall traps: tau = 2 Exp(1).
    AssumptionB,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossingComparison {
    /// T(B)/rho_B over the replicas.
    pub ratio_samples: Vec<f64>,
    /// Matched draws from the tau_B reference law.
    pub tau_samples: Vec<f64>,
    pub reference: TauReference,
    pub rho: f64,
}

/// Simulate the triblock crossing time T(B) = T_{(j+2)C_n} - T_{j C_n}
/// `replicas` times and pair it with draws of the reference law tau_B.
pub fn crossing_time_vs_tau(
    env: &Environment,
    trap: &TrapRecord,
    params: &LimitParams,
    replicas: usize,
    seed: u64,
) -> Result<CrossingComparison> {
    let plan = BlockPlan { c_n: params.c_n, k_n: params.k_n };
    let j = trap.triblock_index;
    let start = j * plan.c_n;
    let end = (j + 2) * plan.c_n;
    if start <= env.left() || end > env.right() {
        return Err(Error::OutOfWindow { x: end, left: env.left(), right: env.right() });
    }
    let table = OmegaTable::build(env, end - 1)?;

    let reference = match trap.kind {
        TrapKind::WellAndWall => TauReference::AssumptionB,
        _ => {
            let x = trap.x;
            let p = escape_prob(env, x, (end - x) as u32)?;
            let th = theta(env, x, (x - (j - 1) * plan.c_n).max(1) as u32)?;
            TauReference::Simulated { p, theta: th }
        }
    };

    let mut ratio_samples = Vec::with_capacity(replicas);
    let mut tau_samples = Vec::with_capacity(replicas);
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x7a95));
    for _ in 0..replicas {
        let mut pos = start;
        let mut steps: u64 = 0;
        while pos < end {
            let w = table.get(pos).ok_or(Error::LeftEdgeHit { step: steps })?;
            steps += 1;
            if rng.gen::<f64>() < w {
                pos += 1;
            } else {
                pos -= 1;
            }
        }
        ratio_samples.push(steps as f64 / trap.depth);
        let e: f64 = Exp1.sample(&mut rng);
        tau_samples.push(match reference {
            TauReference::Simulated { p, theta } => theta / p * e,
            TauReference::AssumptionB => 2.0 * e,
        });
    }
    Ok(CrossingComparison { ratio_samples, tau_samples, reference, rho: trap.depth })
}
