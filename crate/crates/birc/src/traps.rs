//! Derived scales, block partitions, trap detection and environment censuses.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::env::{ConductanceLaw, Environment, Regime};
use crate::{Error, Result};

/// Residual tolerance for the depth-scale defining relation psi(d) d^-alpha = 1/n.
const DN_TOL: f64 = 1e-9;

/// Slowly varying correction psi, fixed to a concrete representative.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Psi {
    /// psi(t) = value; pure power tails.
    Const(f64),
    /// psi(t) = coeff * log t.
    LogLinear { coeff: f64 },
    /// psi(t) = coeff0 * l0(t) + coeff_inf * linf(t), each l(t) = k (1+log t)^g.
    SimpleTraps { coeff0: f64, k0: f64, g0: f64, coeff_inf: f64, kinf: f64, ginf: f64 },
    /// psi(t) = coeff * log t * l0(t) * linf(t).
    WellAndWalls { coeff: f64, k0: f64, g0: f64, kinf: f64, ginf: f64 },
}

fn slowly_varying(t: f64, k: f64, g: f64) -> f64 {
    k * (1.0 + t.ln()).powf(g)
}

impl Psi {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Psi::Const(v) => v,
            Psi::LogLinear { coeff } => coeff * t.ln(),
            Psi::SimpleTraps { coeff0, k0, g0, coeff_inf, kinf, ginf } => {
                coeff0 * slowly_varying(t, k0, g0) + coeff_inf * slowly_varying(t, kinf, ginf)
            }
            Psi::WellAndWalls { coeff, k0, g0, kinf, ginf } => {
                coeff * t.ln() * slowly_varying(t, k0, g0) * slowly_varying(t, kinf, ginf)
            }
        }
    }
}

/// The slowly varying part of P(rho_0 > t) t^alpha for the given law.
///
/// Simple traps: e^(-lambda alpha) (E[c^alpha] L_0(t) + E[1/c^alpha] L_inf(t)),
/// each term present only when the matching tail sits at exponent alpha and the
/// opposite alpha-moment is finite. Well-and-walls: e^(-lambda alpha) * alpha *
/// Gamma(1+g0)Gamma(1+ginf)/Gamma(2+g0+ginf) * log t * L_0(t) L_inf(t).
/// The prefactor comes from pulling e^lambda out of P(c_{-1}/c_0 > e^lambda t);
/// verified against brute-force sampling of the product tail.
pub fn psi_asymptotic(law: &ConductanceLaw, lambda: f64, t: f64) -> Result<f64> {
    Ok(psi_for_law(law, lambda)?.eval(t))
}

/// Build the concrete psi representative for a law.
pub fn psi_for_law(law: &ConductanceLaw, lambda: f64) -> Result<Psi> {
    let alpha = law.alpha();
    let pref = (-lambda * alpha).exp();
    let up = law.upper();
    let lo = law.lower();
    match law.regime() {
        Regime::SimpleTraps => {
            // Wall-side term: 1/c_0 heavy at exponent alpha, weighted by E[c^alpha].
            let mut coeff0 = 0.0;
            let (mut k0, mut g0) = (1.0, 0.0);
            if lo.alpha() == alpha {
                if let Some(m) = law.moment_upper_alpha() {
                    coeff0 = pref * m;
                    k0 = (1.0 - law.p_upper()) * lo.k_scale();
                    g0 = lo.gamma();
                }
            }
            // Well-side term: c_{-1} heavy at exponent alpha, weighted by E[1/c^alpha].
            let mut coeff_inf = 0.0;
            let (mut kinf, mut ginf) = (1.0, 0.0);
            if up.alpha() == alpha {
                if let Some(m) = law.moment_lower_alpha() {
                    coeff_inf = pref * m;
                    kinf = law.p_upper() * up.k_scale();
                    ginf = up.gamma();
                }
            }
            if coeff0 == 0.0 && coeff_inf == 0.0 {
                return Err(Error::InvalidLaw(
                    "no tail term at exponent alpha with a finite opposite moment".into(),
                ));
            }
            Ok(Psi::SimpleTraps { coeff0, k0, g0, coeff_inf, kinf, ginf })
        }
        Regime::WellAndWalls => {
            let g0 = lo.gamma();
            let ginf = up.gamma();
            if g0 <= -1.0 || ginf <= -1.0 {
                return Err(Error::InvalidLaw(
                    "well-and-wall regime requires gamma_0, gamma_inf > -1".into(),
                ));
            }
            let beta = gamma(1.0 + g0) * gamma(1.0 + ginf) / gamma(2.0 + g0 + ginf);
            Ok(Psi::WellAndWalls {
                coeff: pref * alpha * beta,
                k0: (1.0 - law.p_upper()) * lo.k_scale(),
                g0,
                kinf: law.p_upper() * up.k_scale(),
                ginf,
            })
        }
    }
}

/// Solve psi(d) d^-alpha = 1/n by bisection on [t_lo, 10^(3/alpha) n^(2/alpha)].
/// The bracket starts at the grid-scan maximizer of psi(t) t^-alpha so that the
/// map is decreasing on the bracket despite log corrections at small t.
pub fn solve_dn(psi: &Psi, alpha: f64, t_lo: f64, n: u64) -> Result<f64> {
    if n < 10 {
        return Err(Error::Config(format!("solve_dn requires n >= 10, got {n}")));
    }
    let nf = n as f64;
    let hi = 10f64.powf(3.0 / alpha) * nf.powf(2.0 / alpha);
    let g = |t: f64| psi.eval(t) * t.powf(-alpha);

    // Grid scan for the maximizer of g on [t_lo, hi].
    let (lln, llh) = (t_lo.max(1.0).ln(), hi.ln());
    let mut best_t = t_lo.max(1.0);
    let mut best_v = g(best_t);
    for i in 0..=400 {
        let t = (lln + (llh - lln) * i as f64 / 400.0).exp();
        let v = g(t);
        if v > best_v {
            best_v = v;
            best_t = t;
        }
    }
    let target = 1.0 / nf;
    if best_v < target {
        return Err(Error::Numeric(format!("psi(t)t^-alpha never reaches 1/n = {target:.3e}")));
    }
    if g(hi) > target {
        return Err(Error::Numeric("d_n bracket upper end too small".into()));
    }
    let (mut lo, mut hi) = (best_t, hi);
    for _ in 0..200 {
        let mid = (lo.ln() + hi.ln()).mul_add(0.5, 0.0).exp();
        if g(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (g(lo) * nf - 1.0).abs() <= DN_TOL {
            return Ok(lo);
        }
        if (g(hi) * nf - 1.0).abs() <= DN_TOL {
            return Ok(hi);
        }
    }
    Err(Error::Numeric("d_n bisection did not reach residual tolerance".into()))
}

/// All derived scales for a given n.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LimitParams {
    pub alpha: f64,
    pub regime: Regime,
    pub psi: Psi,
    pub d_n: f64,
    pub q_n: f64,
    pub big_c: f64,
    pub c_n: i64,
    pub k_n: i64,
    pub n: u64,
}

/// Default constant of the backtrack bound: (3 + 3/alpha)/lambda.
pub fn default_big_c(alpha: f64, lambda: f64) -> f64 {
    (3.0 + 3.0 / alpha) / lambda
}

impl LimitParams {
    /// Derive all scales from an explicit psi.
    pub fn from_psi(
        psi: Psi,
        alpha: f64,
        regime: Regime,
        t_lo: f64,
        lambda: f64,
        n: u64,
        big_c: Option<f64>,
    ) -> Result<Self> {
        let big_c = big_c.unwrap_or_else(|| default_big_c(alpha, lambda));
        if big_c <= 0.0 {
            return Err(Error::Config("big_c must be positive".into()));
        }
        let d_n = solve_dn(&psi, alpha, t_lo, n)?;
        let nf = n as f64;
        let plan = block_partition(n, big_c)?;
        Ok(Self {
            alpha,
            regime,
            psi,
            d_n,
            q_n: nf.ln().powf(0.25),
            big_c,
            c_n: plan.c_n,
            k_n: plan.k_n,
            n,
        })
    }

    /// Derive all scales from a conductance law.
    pub fn from_law(law: &ConductanceLaw, lambda: f64, n: u64, big_c: Option<f64>) -> Result<Self> {
        let psi = psi_for_law(law, lambda)?;
        let t_lo = law.upper().t_min().max(law.lower().t_min());
        Self::from_psi(psi, law.alpha(), law.regime(), t_lo, lambda, n, big_c)
    }

    /// Simple-trap depth threshold d_n e^-q_n.
    pub fn depth_threshold(&self) -> f64 {
        self.d_n * (-self.q_n).exp()
    }

    /// Well/wall classification threshold d_n e^(-q_n^2).
    pub fn kind_threshold(&self) -> f64 {
        self.d_n * (-self.q_n * self.q_n).exp()
    }

    /// Side threshold e^(q_n^2) of the k-distant trap definition.
    pub fn side_threshold(&self) -> f64 {
        (self.q_n * self.q_n).exp()
    }

    /// Smallest admissible k_max: ceil((6/lambda) q_n), with lambda implicit
    /// in big_c's construction; takes lambda explicitly for clarity.
    pub fn k_max_floor(&self, lambda: f64) -> u32 {
        (6.0 / lambda * self.q_n).ceil() as u32
    }
}

/// Block sizes: c_n = ceil(big_c ln n) sites per block, k_n = ceil(n/c_n) triblocks.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BlockPlan {
    pub c_n: i64,
    pub k_n: i64,
}

impl BlockPlan {
    /// Site range of triblock j: [(j-1)c_n, (j+2)c_n - 1].
    pub fn triblock(&self, j: i64) -> (i64, i64) {
        ((j - 1) * self.c_n, (j + 2) * self.c_n - 1)
    }

    /// Index of the block containing x (also the triblock centered on it).
    pub fn block_of(&self, x: i64) -> i64 {
        x.div_euclid(self.c_n)
    }
}

pub fn block_partition(n: u64, big_c: f64) -> Result<BlockPlan> {
    let nf = n as f64;
    if nf.ln() < 1.0 {
        return Err(Error::Config("block_partition requires ln n >= 1".into()));
    }
    let c_n = (big_c * nf.ln()).ceil() as i64;
    let k_n = (nf / c_n as f64).ceil() as i64;
    Ok(BlockPlan { c_n, k_n })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrapKind {
    Well,
    Wall,
    WellAndWall,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapRecord {
    pub x: i64,
    pub kind: TrapKind,
    /// Well-to-wall distance; 0 for simple traps.
    pub k: u32,
    /// rho_x for simple traps, rho_x^(k) for k-distant traps.
    pub depth: f64,
    /// Simple trap meeting neither the well nor the wall sub-threshold.
    pub atypical: bool,
    pub in_good_triblock: bool,
    pub triblock_index: i64,
}

fn good_triblock(
    env: &Environment,
    plan: &BlockPlan,
    q_n: f64,
    x: i64,
    k: u32,
    simple: bool,
) -> bool {
    let bound = (4.0 * q_n).exp();
    if simple {
        // (i) of the goodness definition: the trap edge itself is moderate.
        let cx = env.c_unchecked(x);
        let cm = env.c_unchecked(x - 1);
        if cx > bound || 1.0 / cm > bound {
            return false;
        }
    }
    let j = plan.block_of(x);
    let (lo, hi) = plan.triblock(j);
    let lo = lo.max(env.left());
    let hi = hi.min(env.right());
    let excluded = |y: i64| y == x - 1 || (simple && y == x) || (!simple && y == x + k as i64);
    for y in lo..=hi {
        if excluded(y) {
            continue;
        }
        let c = env.c_unchecked(y);
        if c > bound || c < 1.0 / bound {
            return false;
        }
    }
    true
}

/// Scan [0, n) for traps. Simple-trap regime scans rho_x against
/// d_n e^-q_n and classifies by the side thresholds; well-and-wall regime
/// scans rho_x^(k) for k = 0..k_max together with both side conditions.
pub fn detect_traps(env: &Environment, params: &LimitParams, k_max: u32) -> Result<Vec<TrapRecord>> {
    let n = params.n as i64;
    if env.left() > -1 || env.right() < n - 1 + k_max as i64 {
        return Err(Error::OutOfWindow { x: n - 1 + k_max as i64, left: env.left(), right: env.right() });
    }
    let plan = BlockPlan { c_n: params.c_n, k_n: params.k_n };
    let depth_thr = params.depth_threshold();
    let mut out = Vec::new();
    match params.regime {
        Regime::SimpleTraps => {
            let kind_thr = params.kind_threshold();
            for x in 0..n {
                let rho = env.rho(x)?;
                if rho <= depth_thr {
                    continue;
                }
                let well = env.c_unchecked(x - 1) > kind_thr;
                let wall = 1.0 / env.c_unchecked(x) > kind_thr;
                let kind = match (well, wall) {
                    (true, false) => TrapKind::Well,
                    (false, true) => TrapKind::Wall,
                    // Tie-break (both or neither) by the larger side.
                    _ => {
                        if env.c_unchecked(x - 1) >= 1.0 / env.c_unchecked(x) {
                            TrapKind::Well
                        } else {
                            TrapKind::Wall
                        }
                    }
                };
                out.push(TrapRecord {
                    x,
                    kind,
                    k: 0,
                    depth: rho,
                    atypical: !well && !wall,
                    in_good_triblock: good_triblock(env, &plan, params.q_n, x, 0, true),
                    triblock_index: plan.block_of(x),
                });
            }
        }
        Regime::WellAndWalls => {
            let side_thr = params.side_threshold();
            for x in 0..n {
                if env.c_unchecked(x - 1) <= side_thr {
                    continue;
                }
                for k in 0..=k_max {
                    let rho = env.rho_k(x, k)?;
                    if rho <= depth_thr {
                        continue;
                    }
                    if 1.0 / env.c_unchecked(x + k as i64) <= side_thr {
                        continue;
                    }
                    out.push(TrapRecord {
                        x,
                        kind: TrapKind::WellAndWall,
                        k,
                        depth: rho,
                        atypical: false,
                        in_good_triblock: good_triblock(env, &plan, params.q_n, x, k, false),
                        triblock_index: plan.block_of(x),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Environment-level diagnostics matching the isolation/depth/goodness/
/// k-size/no-stray-exceedance lemmas. Pure measurement, no assertions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CensusReport {
    pub trap_count: usize,
    /// Minimum distance between distinct trap sites, if two or more exist.
    pub min_pairwise_distance: Option<i64>,
    /// Sup of rho_x (simple regime) or rho_x^(k), k <= k_max (well-and-wall).
    pub max_depth: f64,
    pub max_k: u32,
    pub all_good: bool,
    /// Count of depth exceedances rho_x^(k) > eps_n e^(-lambda k/2) d_n at
    /// sites where neither end qualifies as a trap side (eps_n = q_n^-delta).
    pub h_event_count: u64,
    /// True when min_pairwise_distance < n e^(-5 q_n).
    pub isolation_violation: bool,
}

/// Exponent delta of eps_n = q_n^-delta in the stray-exceedance census.
pub const H_EVENT_DELTA: f64 = 0.5;

pub fn census(env: &Environment, params: &LimitParams, k_max: u32) -> Result<CensusReport> {
    let traps = detect_traps(env, params, k_max)?;
    let n = params.n as i64;

    let mut sites: Vec<i64> = traps.iter().map(|t| t.x).collect();
    sites.sort_unstable();
    sites.dedup();
    let min_pairwise_distance = sites.windows(2).map(|w| w[1] - w[0]).min();

    let mut max_depth: f64 = 0.0;
    for x in 0..n {
        match params.regime {
            Regime::SimpleTraps => max_depth = max_depth.max(env.rho(x)?),
            Regime::WellAndWalls => {
                for k in 0..=k_max {
                    max_depth = max_depth.max(env.rho_k(x, k)?);
                }
            }
        }
    }

    let eps_n = params.q_n.powf(-H_EVENT_DELTA);
    let lambda = env.lambda();
    let mut h_event_count = 0u64;
    match params.regime {
        Regime::SimpleTraps => {
            // Exceedance of rho_x^(k), k >= 1, with no simple trap at either end.
            let depth_thr = params.depth_threshold();
            for x in 0..n {
                for k in 1..=k_max {
                    let thr = eps_n * (-lambda * k as f64 / 2.0).exp() * params.d_n;
                    if env.rho_k(x, k)? > thr
                        && env.rho(x)? <= depth_thr
                        && env.rho(x + k as i64)? <= depth_thr
                    {
                        h_event_count += 1;
                    }
                }
            }
        }
        Regime::WellAndWalls => {
            // Exceedance with a missing well or wall side.
            let side_thr = params.side_threshold();
            for x in 0..n {
                for k in 1..=k_max {
                    let thr = eps_n * (-lambda * k as f64 / 2.0).exp() * params.d_n;
                    if env.rho_k(x, k)? > thr
                        && (env.c_unchecked(x - 1) <= side_thr
                            || 1.0 / env.c_unchecked(x + k as i64) <= side_thr)
                    {
                        h_event_count += 1;
                    }
                }
            }
        }
    }

    let isolation_cut = (params.n as f64) * (-5.0 * params.q_n).exp();
    Ok(CensusReport {
        trap_count: traps.len(),
        min_pairwise_distance,
        max_depth,
        max_k: traps.iter().map(|t| t.k).max().unwrap_or(0),
        all_good: traps.iter().all(|t| t.in_good_triblock),
        h_event_count,
        isolation_violation: min_pairwise_distance
            .map(|d| (d as f64) < isolation_cut)
            .unwrap_or(false),
    })
}

/// Naive reference scan used to validate detect_traps.
pub fn detect_traps_naive(
    env: &Environment,
    params: &LimitParams,
    k_max: u32,
) -> Result<Vec<TrapRecord>> {
    let plan = BlockPlan { c_n: params.c_n, k_n: params.k_n };
    let mut out = Vec::new();
    for x in 0..params.n as i64 {
        match params.regime {
            Regime::SimpleTraps => {
                let rho = env.rho(x)?;
                if rho > params.depth_threshold() {
                    let well = env.c(x - 1)? > params.kind_threshold();
                    let wall = 1.0 / env.c(x)? > params.kind_threshold();
                    let kind = if well == wall {
                        if env.c(x - 1)? >= 1.0 / env.c(x)? { TrapKind::Well } else { TrapKind::Wall }
                    } else if well {
                        TrapKind::Well
                    } else {
                        TrapKind::Wall
                    };
                    out.push(TrapRecord {
                        x,
                        kind,
                        k: 0,
                        depth: rho,
                        atypical: !well && !wall,
                        in_good_triblock: good_triblock(env, &plan, params.q_n, x, 0, true),
                        triblock_index: plan.block_of(x),
                    });
                }
            }
            Regime::WellAndWalls => {
                for k in 0..=k_max {
                    let rho = env.rho_k(x, k)?;
                    if rho > params.depth_threshold()
                        && env.c(x - 1)? > params.side_threshold()
                        && 1.0 / env.c(x + k as i64)? > params.side_threshold()
                    {
                        out.push(TrapRecord {
                            x,
                            kind: TrapKind::WellAndWall,
                            k,
                            depth: rho,
                            atypical: false,
                            in_good_triblock: good_triblock(env, &plan, params.q_n, x, k, false),
                            triblock_index: plan.block_of(x),
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::TailSpec;

    fn pareto(alpha: f64) -> TailSpec {
        TailSpec::new(alpha, 0.0, 1.0, 1.0).unwrap()
    }

    fn simple_law() -> ConductanceLaw {
        // Upper tail alpha = 2 (finite alpha-moment), lower tail alpha = 0.5.
        ConductanceLaw::new(pareto(2.0), pareto(0.5), 0.5).unwrap()
    }

    fn ww_law() -> ConductanceLaw {
        ConductanceLaw::new(pareto(0.5), pareto(0.5), 0.5).unwrap()
    }

    #[test]
    fn psi_constant_in_simple_regime() {
        let law = simple_law();
        let lambda: f64 = 0.7;
        let a = law.moment_upper_alpha().unwrap();
        let expect = (-lambda * 0.5).exp() * a * 0.5; // k0 = (1-p) k_scale = 0.5
        let p1 = psi_asymptotic(&law, lambda, 10.0).unwrap();
        let p2 = psi_asymptotic(&law, lambda, 1e6).unwrap();
        assert!((p1 - expect).abs() < 1e-8 * expect, "{p1} vs {expect}");
        assert!((p1 - p2).abs() < 1e-12 * expect);
    }

    #[test]
    fn psi_well_and_walls_log_growth() {
        let law = ww_law();
        let lambda: f64 = 0.7;
        // gamma = 0 both sides: Beta factor 1; k0 = kinf = 0.5.
        let t: f64 = 100.0;
        let expect = (-lambda * 0.5).exp() * 0.5 * t.ln() * 0.25;
        let p = psi_asymptotic(&law, lambda, t).unwrap();
        assert!((p - expect).abs() < 1e-10 * expect, "{p} vs {expect}");
    }

    #[test]
    fn product_tail_monte_carlo_matches_psi() {
        use rand::SeedableRng;
        let law = ww_law();
        let lambda: f64 = 0.7;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let nsamp = 2_000_000usize;
        // Choose t so that roughly 200 samples exceed: P ~ psi(t) t^-0.5 = 1e-4.
        let mut t = 1e8;
        for _ in 0..40 {
            let p = psi_asymptotic(&law, lambda, t).unwrap() * t.powf(-0.5);
            t *= (p / 1e-4).powf(2.0);
        }
        let mut hits = 0u64;
        for _ in 0..nsamp {
            let rho = (-lambda).exp() * law.sample(&mut rng) / law.sample(&mut rng);
            if rho > t {
                hits += 1;
            }
        }
        let expect = psi_asymptotic(&law, lambda, t).unwrap() * t.powf(-0.5) * nsamp as f64;
        let ratio = hits as f64 / expect;
        // The representative drops the constant-order term of the product tail,
        // an O(1/log t) upward bias at this depth; a wrong e^(lambda alpha)
        // prefactor would show up as a factor e^(2 lambda alpha) ~ 2 instead.
        assert!((0.8..=1.3).contains(&ratio), "ratio = {ratio}, hits = {hits}");
    }

    #[test]
    fn solve_dn_pure_power() {
        let d = solve_dn(&Psi::Const(1.0), 0.5, 1.0, 100).unwrap();
        assert!((d - 1e4).abs() < 1e-4, "d = {d}");
        let d = solve_dn(&Psi::Const(2.0), 0.5, 1.0, 100).unwrap();
        assert!((d - 4e4).abs() < 1e-3, "d = {d}");
    }

    #[test]
    fn solve_dn_log_residual() {
        let psi = Psi::LogLinear { coeff: 0.5 };
        let d = solve_dn(&psi, 0.5, 1.0, 10_000).unwrap();
        assert!((psi.eval(d) * d.powf(-0.5) * 1e4 - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn block_partition_example() {
        let plan = block_partition(10_000, 12.0).unwrap();
        assert_eq!(plan.c_n, 111);
        assert_eq!(plan.k_n, 91);
        // Adjacent triblocks overlap in exactly 2 c_n sites.
        let (_, hi0) = plan.triblock(0);
        let (lo1, _) = plan.triblock(1);
        assert_eq!(hi0 - lo1 + 1, 2 * plan.c_n);
        // Middle blocks tile [0, n).
        for j in 0..plan.k_n {
            assert_eq!(plan.block_of(j * plan.c_n), j);
        }
        assert!(plan.k_n * plan.c_n >= 10_000);
    }

    fn test_params(law: &ConductanceLaw, lambda: f64, n: u64) -> LimitParams {
        LimitParams::from_law(law, lambda, n, None).unwrap()
    }

    #[test]
    fn limit_params_residual_invariant() {
        for n in [100u64, 10_000, 1_000_000] {
            let p = test_params(&simple_law(), 0.7, n);
            assert!((p.psi.eval(p.d_n) * p.d_n.powf(-p.alpha) * n as f64 - 1.0).abs() <= 1e-9);
            let p = test_params(&ww_law(), 0.7, n);
            assert!((p.psi.eval(p.d_n) * p.d_n.powf(-p.alpha) * n as f64 - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn constructed_well_trap_detected() {
        let lambda: f64 = 0.7;
        let params = test_params(&simple_law(), lambda, 100);
        let plan = BlockPlan { c_n: params.c_n, k_n: params.k_n };
        let mut c = vec![1.0; 300];
        // left = -100; site index 49 in c is x = -51... use left such that c_49 is x-1=49.
        let left = -100i64;
        c[(49 - left) as usize] = 10.0 * params.depth_threshold() * lambda.exp();
        let env = Environment::from_conductances(lambda, left, c, 0).unwrap();
        let traps = detect_traps(&env, &params, 0).unwrap();
        assert_eq!(traps.len(), 1);
        let t = &traps[0];
        assert_eq!(t.x, 50);
        assert_eq!(t.kind, TrapKind::Well);
        assert!((t.depth - 10.0 * params.depth_threshold()).abs() < 1e-9 * t.depth);
        assert_eq!(t.triblock_index, plan.block_of(50));
    }

    #[test]
    fn constructed_k_distant_trap_detected() {
        let lambda: f64 = 0.7;
        let params = test_params(&ww_law(), lambda, 100);
        let q2 = params.q_n * params.q_n;
        let mut c = vec![1.0; 400];
        let left = -100i64;
        c[(49 - left) as usize] = (q2 + 5.0).exp();
        c[(52 - left) as usize] = (-q2 - 5.0).exp();
        let env = Environment::from_conductances(lambda, left, c, 0).unwrap();
        let depth = (-lambda * 3.0).exp() * (2.0 * q2 + 10.0).exp();
        if depth <= params.depth_threshold() {
            panic!("constructed depth {depth} below threshold {}", params.depth_threshold());
        }
        let traps = detect_traps(&env, &params, 10).unwrap();
        let hit: Vec<_> = traps.iter().filter(|t| t.x == 50 && t.k == 2).collect();
        assert_eq!(hit.len(), 1);
        assert_eq!(hit[0].kind, TrapKind::WellAndWall);
    }

    #[test]
    fn detect_matches_naive_scan() {
        let lambda: f64 = 0.7;
        for (law, k_max) in [(simple_law(), 0u32), (ww_law(), 14)] {
            let params = test_params(&law, lambda, 100_000);
            let env = Environment::sample(&law, lambda, -10, 100_000 + k_max as i64, 7).unwrap();
            let fast = detect_traps(&env, &params, k_max).unwrap();
            let naive = detect_traps_naive(&env, &params, k_max).unwrap();
            assert_eq!(fast, naive);
        }
    }

    #[test]
    fn census_constant_env() {
        let lambda: f64 = 0.7;
        let params = test_params(&simple_law(), lambda, 100);
        let env = Environment::from_conductances(lambda, -10, vec![1.0; 200], 0).unwrap();
        let rep = census(&env, &params, 0).unwrap();
        assert_eq!(rep.trap_count, 0);
        assert!((rep.max_depth - (-lambda).exp()).abs() < 1e-14);
        assert!(!rep.isolation_violation);
        assert_eq!(rep.h_event_count, 0);
    }

    #[test]
    fn census_isolation_violation() {
        let lambda: f64 = 0.7;
        let params = test_params(&simple_law(), lambda, 10_000);
        let mut c = vec![1.0; 10_300];
        let left = -100i64;
        let boost = 10.0 * params.depth_threshold() * lambda.exp();
        // Well at x = 500 (c_499 huge) and wall at x = 501 (c_501 tiny).
        c[(499 - left) as usize] = boost;
        c[(501 - left) as usize] = 1.0 / boost;
        let env = Environment::from_conductances(lambda, left, c, 0).unwrap();
        let rep = census(&env, &params, 0).unwrap();
        assert_eq!(rep.trap_count, 2);
        assert_eq!(rep.min_pairwise_distance, Some(1));
        // n e^-5 q_n for n = 10^4: q_n ~ 1.74, cut ~ 1.65 > 1.
        assert!(rep.isolation_violation);
    }

    #[test]
    fn trap_kind_frequencies_follow_divergent_side() {
        // E[1/c^alpha] infinite (lower tail at alpha, gamma 0): walls dominate.
        let lambda: f64 = 0.7;
        let law = simple_law();
        let params = test_params(&law, lambda, 100_000);
        let mut wall = 0usize;
        let mut total = 0usize;
        for seed in 0..50 {
            let env = Environment::sample(&law, lambda, -10, 100_000, 1000 + seed).unwrap();
            for t in detect_traps(&env, &params, 0).unwrap() {
                total += 1;
                if t.kind == TrapKind::Wall {
                    wall += 1;
                }
            }
        }
        assert!(total > 20, "too few traps: {total}");
        assert!(wall as f64 >= 0.95 * total as f64, "wall {wall}/{total}");
    }
}
