//! Exact resistor-network computations on a finite environment window.
//!
//! All formulas are phrased in terms of the series sum S(i,j) = sum over
//! l in [i,j] of 1/c_l^lambda. Tilted conductances grow like e^(lambda x), so
//! every internal computation is anchored at a reference site: quantities are
//! multiplied by e^(+-lambda anchor) such that only ratios and anchored
//! products, which are overflow-free, ever appear.

use crate::env::Environment;
use crate::numeric::KahanSum;
use crate::{Error, Result};

/// Relative tolerance for the left-truncation remainder in mean hit times.
const TRUNCATION_REL_TOL: f64 = 1e-12;

/// Series sum anchored at `anchor`: sum over l in [i, j] of e^(-lambda (l - anchor)) / c_l.
/// Empty-sum convention: j = i - 1 gives 0.
fn series_anchored(env: &Environment, anchor: i64, i: i64, j: i64) -> Result<f64> {
    if j < i {
        return Ok(0.0);
    }
    if i < env.left() || j > env.right() {
        return Err(Error::OutOfWindow {
            x: if i < env.left() { i } else { j },
            left: env.left(),
            right: env.right(),
        });
    }
    let lambda = env.lambda();
    let mut acc = KahanSum::new();
    for l in i..=j {
        acc.add((-lambda * (l - anchor) as f64).exp() / env.c_unchecked(l));
    }
    Ok(acc.value())
}

/// Tilted reversible measure pi(z) = c_{z-1}^lambda + c_z^lambda, anchored.
fn pi_anchored(env: &Environment, anchor: i64, z: i64) -> Result<f64> {
    let lambda = env.lambda();
    let a = (lambda * (z - 1 - anchor) as f64).exp() * env.c(z - 1)?;
    let b = (lambda * (z - anchor) as f64).exp() * env.c(z)?;
    Ok(a + b)
}

/// S(i,j) = sum over l in [i,j] of 1/c_l^lambda, with compensated summation.
pub fn series_sum(env: &Environment, i: i64, j: i64) -> Result<f64> {
    series_anchored(env, 0, i, j)
}

/// Hitting probability P_x(T_i < T_j) = S(x, j-1) / S(i, j-1) for i < x < j.
pub fn hit_prob(env: &Environment, x: i64, i: i64, j: i64) -> Result<f64> {
    if !(i < x && x < j) {
        return Err(Error::Config(format!("hit_prob requires i < x < j, got i={i}, x={x}, j={j}")));
    }
    let num = series_anchored(env, x, x, j - 1)?;
    let den = series_anchored(env, x, i, j - 1)?;
    Ok(num / den)
}

/// Result of a mean hit time computation. The value is exact for the
/// environment with all conductances left of the window zeroed; the warning
/// flags runs where that truncation may exceed the relative tolerance with
/// respect to the full-line value.
#[derive(Clone, Copy, Debug)]
pub struct MeanHitTime {
    pub value: f64,
    pub truncation_warning: bool,
}

/// E_x[T_y] for x < y, for the window environment with conductances left of
/// the window set to zero:
/// sum_{z <= x} pi(z) S(x, y-1) + sum_{x < z < y} pi(z) S(z, y-1),
/// where the z-sum starts at the window's left edge L with pi(L) = c_L^lambda.
pub fn expected_hit_time(env: &Environment, x: i64, y: i64) -> Result<MeanHitTime> {
    if !(x < y) {
        return Err(Error::Config(format!("expected_hit_time requires x < y, got x={x}, y={y}")));
    }
    if x < env.left() || y > env.right() {
        return Err(Error::OutOfWindow { x, left: env.left(), right: env.right() });
    }
    let lambda = env.lambda();
    let left = env.left();
    let s_xy = series_anchored(env, x, x, y - 1)?;

    let mut acc = KahanSum::new();
    // z = left: the edge (left-1, left) has zero conductance, pi(left) = c_left^lambda.
    acc.add((lambda * (left - x) as f64).exp() * env.c_unchecked(left) * s_xy);
    for z in (left + 1)..=x {
        acc.add(pi_anchored(env, x, z)? * s_xy);
    }
    for z in (x + 1)..y {
        acc.add(pi_anchored(env, x, z)? * series_anchored(env, x, z, y - 1)?);
    }
    let value = acc.value();

    // Geometric bound on the zeroed-out tail sum over z < left, using the
    // leftmost conductance as a proxy scale for the unseen sites.
    let decay = (-lambda).exp();
    let tail = 2.0 * (lambda * (left - x) as f64).exp() * env.c_unchecked(left) * decay
        / (1.0 - decay)
        * s_xy;
    let truncation_warning = !(tail < TRUNCATION_REL_TOL * value);
    Ok(MeanHitTime { value, truncation_warning })
}

/// E_x[T_y 1{T_y < T_v}] for y < x < v (walk killed at v):
/// (1/C_eff({x} <-> {y,v})) sum_{y<z<v} pi(z) P_z(T_x < T_y ^ T_v) P_z(T_y < T_v).
pub fn killed_expected_hit_time(env: &Environment, x: i64, y: i64, v: i64) -> Result<f64> {
    if !(y < x && x < v) {
        return Err(Error::Config(format!("requires y < x < v, got y={y}, x={x}, v={v}")));
    }
    let s_left = series_anchored(env, x, y, x - 1)?; // 1/C_eff({x}<->{y})
    let s_right = series_anchored(env, x, x, v - 1)?;
    let inv_ceff = 1.0 / (1.0 / s_left + 1.0 / s_right);
    let s_yv = series_anchored(env, x, y, v - 1)?;

    let mut acc = KahanSum::new();
    for z in (y + 1)..v {
        let reach_x = if z < x {
            series_anchored(env, x, y, z - 1)? / s_left
        } else if z == x {
            1.0
        } else {
            series_anchored(env, x, z, v - 1)? / s_right
        };
        let hit_y_first = series_anchored(env, x, z, v - 1)? / s_yv;
        acc.add(pi_anchored(env, x, z)? * reach_x * hit_y_first);
    }
    Ok(inv_ceff * acc.value())
}

/// Escape probability p_x = P_{x+1}(T_{x+horizon} < T_x), via the series
/// identity p_x = (1/c_x^lambda) / S(x, x+horizon-1), evaluated in the local
/// form (1 + c_x sum_{j=1}^{horizon-1} e^(-lambda j)/c_{x+j})^(-1).
pub fn escape_prob(env: &Environment, x: i64, horizon: u32) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::Config("escape_prob requires horizon >= 1".into()));
    }
    let last = x + horizon as i64 - 1;
    if x < env.left() || last > env.right() {
        return Err(Error::OutOfWindow { x, left: env.left(), right: env.right() });
    }
    let lambda = env.lambda();
    let cx = env.c_unchecked(x);
    let mut acc = KahanSum::new();
    for j in 1..horizon as i64 {
        acc.add((-lambda * j as f64).exp() / env.c_unchecked(x + j));
    }
    Ok(1.0 / (1.0 + cx * acc.value()))
}

/// Mean re-entry cycle time theta_x = 2 + (2/c_{x-1}) sum_{l=x-horizon}^{x-2}
/// c_l e^(-lambda (x-1-l)), for the environment with conductances left of
/// x - horizon zeroed. Equals 1 + E_{x-1}[T_x] on that environment.
pub fn theta(env: &Environment, x: i64, horizon: u32) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::Config("theta requires horizon >= 1".into()));
    }
    let first = x - horizon as i64;
    if first < env.left() || x > env.right() {
        return Err(Error::OutOfWindow { x, left: env.left(), right: env.right() });
    }
    let lambda = env.lambda();
    let cm = env.c(x - 1)?;
    let mut acc = KahanSum::new();
    for l in first..=(x - 2) {
        acc.add(env.c_unchecked(l) * (-lambda * (x - 1 - l) as f64).exp());
    }
    Ok(2.0 + 2.0 / cm * acc.value())
}

/// A finite chain with absorbing boundaries, used by the brute-force oracle.
#[derive(Clone, Copy, Debug)]
pub struct WindowChain<'a> {
    pub env: &'a Environment,
    pub i: i64,
    pub j: i64,
}

impl<'a> WindowChain<'a> {
    pub fn new(env: &'a Environment, i: i64, j: i64) -> Result<Self> {
        if i >= j {
            return Err(Error::Config(format!("chain requires i < j, got i={i}, j={j}")));
        }
        if i < env.left() || j > env.right() {
            return Err(Error::OutOfWindow { x: i, left: env.left(), right: env.right() });
        }
        if (j - i) as usize > 100_000 {
            return Err(Error::Config("chain length exceeds 1e5".into()));
        }
        Ok(Self { env, i, j })
    }

    pub fn len(&self) -> usize {
        (self.j - self.i + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Which absorbing-chain system the oracle solves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleKind {
    /// h(i) = 1, h(j) = 0, harmonic in between: h(z) = P_z(T_i < T_j).
    HitProb,
    /// m(j) = 0, reflecting at i (zeroed left edge): m(z) = E_z[T_j].
    MeanTime,
    /// g(i) = g(j) = 0 with source P_z(T_i < T_j): g(z) = E_z[T_i 1{T_i < T_j}].
    KilledMeanTime,
}

/// Direct tridiagonal elimination for the absorbing-chain systems above.
/// Returns one value per site of the chain (i..=j).
pub fn oracle_solve(chain: &WindowChain, kind: OracleKind) -> Result<Vec<f64>> {
    let n = chain.len();
    let env = chain.env;
    // Row z: a g(z-1) + b g(z) + c g(z+1) = d.
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];

    let omega_at = |z: i64| -> Result<f64> { env.omega(z) };

    match kind {
        OracleKind::HitProb => {
            diag[0] = 1.0;
            rhs[0] = 1.0;
            diag[n - 1] = 1.0;
            rhs[n - 1] = 0.0;
            for (idx, z) in ((chain.i + 1)..chain.j).enumerate() {
                let w = omega_at(z)?;
                sub[idx + 1] = -(1.0 - w);
                diag[idx + 1] = 1.0;
                sup[idx + 1] = -w;
                rhs[idx + 1] = 0.0;
            }
        }
        OracleKind::MeanTime => {
            // Reflecting at i: m(i) = 1 + m(i+1).
            diag[0] = 1.0;
            sup[0] = -1.0;
            rhs[0] = 1.0;
            diag[n - 1] = 1.0;
            rhs[n - 1] = 0.0;
            for (idx, z) in ((chain.i + 1)..chain.j).enumerate() {
                let w = omega_at(z)?;
                sub[idx + 1] = -(1.0 - w);
                diag[idx + 1] = 1.0;
                sup[idx + 1] = -w;
                rhs[idx + 1] = 1.0;
            }
        }
        OracleKind::KilledMeanTime => {
            let h = oracle_solve(chain, OracleKind::HitProb)?;
            diag[0] = 1.0;
            rhs[0] = 0.0;
            diag[n - 1] = 1.0;
            rhs[n - 1] = 0.0;
            for (idx, z) in ((chain.i + 1)..chain.j).enumerate() {
                let w = omega_at(z)?;
                sub[idx + 1] = -(1.0 - w);
                diag[idx + 1] = 1.0;
                sup[idx + 1] = -w;
                rhs[idx + 1] = h[idx + 1];
            }
        }
    }

    // Thomas elimination. Degenerate omega in {0,1} just zeroes one
    // off-diagonal entry; the unit diagonal keeps pivots well away from 0.
    let mut c_star = vec![0.0; n];
    let mut d_star = vec![0.0; n];
    c_star[0] = sup[0] / diag[0];
    d_star[0] = rhs[0] / diag[0];
    for k in 1..n {
        let m = diag[k] - sub[k] * c_star[k - 1];
        if m.abs() < 1e-300 {
            return Err(Error::Numeric(format!("tridiagonal pivot vanished at row {k}")));
        }
        c_star[k] = sup[k] / m;
        d_star[k] = (rhs[k] - sub[k] * d_star[k - 1]) / m;
    }
    let mut sol = vec![0.0; n];
    sol[n - 1] = d_star[n - 1];
    for k in (0..n - 1).rev() {
        sol[k] = d_star[k] - c_star[k] * sol[k + 1];
    }
    Ok(sol)
}

/// Maximum absolute row residual of `sol` for the given system.
pub fn oracle_residual(chain: &WindowChain, kind: OracleKind, sol: &[f64]) -> Result<f64> {
    let n = chain.len();
    assert_eq!(sol.len(), n);
    let env = chain.env;
    let mut worst: f64 = 0.0;
    let h = if kind == OracleKind::KilledMeanTime {
        Some(oracle_solve(chain, OracleKind::HitProb)?)
    } else {
        None
    };
    for (idx, z) in ((chain.i + 1)..chain.j).enumerate() {
        let w = env.omega(z)?;
        let lhs = sol[idx + 1];
        let rhs = match kind {
            OracleKind::HitProb => w * sol[idx + 2] + (1.0 - w) * sol[idx],
            OracleKind::MeanTime => 1.0 + w * sol[idx + 2] + (1.0 - w) * sol[idx],
            OracleKind::KilledMeanTime => {
                h.as_ref().unwrap()[idx + 1] + w * sol[idx + 2] + (1.0 - w) * sol[idx]
            }
        };
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}
