//! Estimators and distributional tests shared by the experiments.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::env::ConductanceLaw;
use crate::walk::{Engine, Trajectory};
use crate::{Error, Result};

fn sorted(sample: &[f64]) -> Vec<f64> {
    let mut v = sample.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Asymptotic Kolmogorov survival Q(lambda) = 2 sum (-1)^(k-1) e^(-2 k^2 lambda^2).
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64 * lambda).powi(2)).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let (mut i, mut j) = (0usize, 0usize);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        // Advance past every value tied at the current point so the gap is
        // only evaluated between distinct data values.
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov-Smirnov test. Asymptotic p-value; a permutation
/// p-value (2000 shuffles) is substituted when either sample has n < 50.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Config("ks_two_sample requires non-empty samples".into()));
    }
    let sa = sorted(a);
    let sb = sorted(b);
    let statistic = ks_statistic(&sa, &sb);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let p_value = if a.len() < 50 || b.len() < 50 {
        let mut pool: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0x6b73);
        let mut exceed = 0usize;
        let perms = 2000;
        for _ in 0..perms {
            pool.shuffle(&mut rng);
            let mut pa = pool[..a.len()].to_vec();
            let mut pb = pool[a.len()..].to_vec();
            pa.sort_by(|x, y| x.partial_cmp(y).unwrap());
            pb.sort_by(|x, y| x.partial_cmp(y).unwrap());
            if ks_statistic(&pa, &pb) >= statistic {
                exceed += 1;
            }
        }
        (exceed as f64 + 1.0) / (perms as f64 + 1.0)
    } else {
        let ne = (na * nb / (na + nb)).sqrt();
        kolmogorov_survival((ne + 0.12 + 0.11 / ne) * statistic)
    };
    Ok(KsResult { statistic, p_value })
}

/// One-sample KS against a closed-form CDF.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if sample.is_empty() {
        return Err(Error::Config("ks_one_sample requires a non-empty sample".into()));
    }
    let xs = sorted(sample);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    let sn = n.sqrt();
    Ok(KsResult { statistic: d, p_value: kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d) })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HillEstimate {
    /// Mean log-excess over the top k order statistics.
    pub gamma: f64,
    /// Tail index 1/gamma.
    pub index: f64,
    pub k: usize,
}

/// Hill estimator: gamma = (1/k) sum_{i=1}^k log(x_(i)/x_(k+1)) with
/// x_(1) >= x_(2) >= ... ; the index estimate is k / sum = 1/gamma.
pub fn hill_estimator(sample: &[f64], k: usize) -> Result<HillEstimate> {
    if k == 0 || k + 1 > sample.len() {
        return Err(Error::Config(format!("hill requires 1 <= k < n, got k={k}, n={}", sample.len())));
    }
    if sample.iter().any(|&x| x <= 0.0) {
        return Err(Error::Config("hill requires positive sample values".into()));
    }
    let mut xs = sorted(sample);
    xs.reverse();
    let pivot = xs[k];
    let gamma = xs[..k].iter().map(|&x| (x / pivot).ln()).sum::<f64>() / k as f64;
    Ok(HillEstimate { gamma, index: 1.0 / gamma, k })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
}

/// Least-squares slope of log value against log n.
pub fn loglog_slope(pairs: &[(f64, f64)]) -> Result<SlopeFit> {
    if pairs.len() < 3 {
        return Err(Error::Config("loglog_slope requires at least 3 scales".into()));
    }
    if pairs.iter().any(|&(n, v)| n <= 0.0 || v <= 0.0) {
        return Err(Error::Config("loglog_slope requires positive pairs".into()));
    }
    let pts: Vec<(f64, f64)> = pairs.iter().map(|&(n, v)| (n.ln(), v.ln())).collect();
    let m = pts.len() as f64;
    let xbar = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx = pts.iter().map(|p| (p.0 - xbar).powi(2)).sum::<f64>();
    let sxy = pts.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum::<f64>();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = if pts.len() > 2 { (ss_res / (m - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(SlopeFit { slope, intercept, stderr })
}

/// Fraction of replicas whose positions at times t_n and floor(h t_n) differ
/// by at most j_window. Requires jointly-sampled (Direct) trajectories.
pub fn aging_estimator(trajs: &[Trajectory], t_n: u64, h: f64, j_window: i64) -> Result<f64> {
    if !(h > 1.0) {
        return Err(Error::Config(format!("aging requires h > 1, got {h}")));
    }
    if trajs.is_empty() {
        return Err(Error::Config("aging requires at least one trajectory".into()));
    }
    let t_h = (h * t_n as f64).floor() as u64;
    let mut hits = 0usize;
    for tr in trajs {
        if tr.engine == Engine::Branching {
            return Err(Error::Unsupported(
                "aging requires jointly-sampled Direct trajectories".into(),
            ));
        }
        let a = tr.position_at(t_n)?;
        let b = tr.position_at(t_h)?;
        if (b - a).abs() <= j_window {
            hits += 1;
        }
    }
    Ok(hits as f64 / trajs.len() as f64)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PppReport {
    pub env_count: usize,
    pub mean_count: f64,
    pub expected_mean: f64,
    pub dispersion_index: f64,
    pub dispersion_ci: (f64, f64),
    pub uniformity_p_value: f64,
}

/// Check the exceedance point process against the Poisson prediction:
/// per environment, traps are given as (position fraction in [0,1],
/// depth / d_n) pairs; those with depth ratio > eps should be uniform in
/// position with Poisson counts of mean eps^-alpha.
pub fn exceedance_ppp_check(
    envs: &[Vec<(f64, f64)>],
    eps: f64,
    alpha: f64,
) -> Result<PppReport> {
    if envs.len() < 100 {
        return Err(Error::Config(format!("ppp check requires >= 100 environments, got {}", envs.len())));
    }
    let mut counts = Vec::with_capacity(envs.len());
    let mut positions = Vec::new();
    for env in envs {
        let mut c = 0u64;
        for &(u, depth_ratio) in env {
            if depth_ratio > eps {
                c += 1;
                positions.push(u.clamp(0.0, 1.0));
            }
        }
        counts.push(c as f64);
    }
    let m = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / m;
    let var = counts.iter().map(|&c| (c - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let dispersion = if mean > 0.0 { var / mean } else { 0.0 };
    // Under Poisson counts, (m-1) * dispersion ~ chi-square(m-1).
    let chi = ChiSquared::new(m - 1.0).map_err(|e| Error::Numeric(e.to_string()))?;
    let ci = (chi.inverse_cdf(0.025) / (m - 1.0), chi.inverse_cdf(0.975) / (m - 1.0));

    // Chi-square uniformity of pooled positions over 10 bins.
    let uniformity_p_value = if positions.len() >= 20 {
        let bins = 10usize;
        let mut obs = vec![0.0f64; bins];
        for &u in &positions {
            let b = ((u * bins as f64) as usize).min(bins - 1);
            obs[b] += 1.0;
        }
        let expect = positions.len() as f64 / bins as f64;
        let x2: f64 = obs.iter().map(|&o| (o - expect).powi(2) / expect).sum();
        let chi = ChiSquared::new((bins - 1) as f64).map_err(|e| Error::Numeric(e.to_string()))?;
        1.0 - chi.cdf(x2)
    } else {
        f64::NAN
    };

    Ok(PppReport {
        env_count: envs.len(),
        mean_count: mean,
        expected_mean: eps.powf(-alpha),
        dispersion_index: dispersion,
        dispersion_ci: ci,
        uniformity_p_value,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrapTypeReport {
    pub t_threshold: f64,
    pub exceedances: u64,
    pub m_grid: Vec<f64>,
    /// Fraction of exceedances with c_{-1} > M (well side).
    pub well_frac: Vec<f64>,
    /// Fraction with 1/c_0 > M (wall side).
    pub wall_frac: Vec<f64>,
    /// Fraction with both sides > M.
    pub both_frac: Vec<f64>,
    /// Well fraction at the largest grid point: proxy for the paper's q.
    pub q_hat: f64,
}

/// Conditional trap-type frequencies: among i.i.d. draws of
/// rho_0 = e^-lambda c_{-1}/c_0 with rho_0 > t, tabulates which side is
/// large over a grid of levels M.
pub fn trap_type_frequencies(
    law: &ConductanceLaw,
    lambda: f64,
    t_threshold: f64,
    n_samples: u64,
    seed: u64,
) -> Result<TrapTypeReport> {
    let m_grid: Vec<f64> = (0..=10).map(|j| 2f64.powi(j)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut well = vec![0u64; m_grid.len()];
    let mut wall = vec![0u64; m_grid.len()];
    let mut both = vec![0u64; m_grid.len()];
    let mut exceed = 0u64;
    let decay = (-lambda).exp();
    for _ in 0..n_samples {
        let cm = law.sample(&mut rng);
        let c0 = law.sample(&mut rng);
        if decay * cm / c0 <= t_threshold {
            continue;
        }
        exceed += 1;
        for (i, &m) in m_grid.iter().enumerate() {
            let w = cm > m;
            let v = 1.0 / c0 > m;
            if w {
                well[i] += 1;
            }
            if v {
                wall[i] += 1;
            }
            if w && v {
                both[i] += 1;
            }
        }
    }
    if exceed < 200 {
        return Err(Error::Config(format!(
            "only {exceed} exceedances above t = {t_threshold}; need >= 200"
        )));
    }
    let frac = |v: &[u64]| v.iter().map(|&c| c as f64 / exceed as f64).collect::<Vec<_>>();
    let well_frac = frac(&well);
    Ok(TrapTypeReport {
        t_threshold,
        exceedances: exceed,
        q_hat: *well_frac.last().unwrap(),
        m_grid,
        well_frac,
        wall_frac: frac(&wall),
        both_frac: frac(&both),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub quantiles: Vec<(f64, f64)>,
    pub hill: Option<HillEstimate>,
}

impl SampleSummary {
    pub fn from_sample(sample: &[f64], quantile_grid: &[f64], hill_k: Option<usize>) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::Config("summary requires a non-empty sample".into()));
        }
        let xs = sorted(sample);
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 {
            xs.iter().map(|&x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)
        } else {
            0.0
        };
        let mut quantiles = Vec::with_capacity(quantile_grid.len());
        for &q in quantile_grid {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::Config(format!("quantile {q} out of [0,1]")));
            }
            let idx = ((q * (n - 1) as f64).round() as usize).min(n - 1);
            quantiles.push((q, xs[idx]));
        }
        let hill = match hill_k {
            Some(k) => Some(hill_estimator(sample, k)?),
            None => None,
        };
        Ok(Self { n, mean, variance, quantiles, hill })
    }
}
