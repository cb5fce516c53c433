//! Limit objects for the passage-time scaling: one-sided stable subordinator
//! increments and paths, the inverse-subordinator marginal, the limiting
//! trap-strength variable `zeta` with `E[zeta^alpha]`, the constant in front
//! of the stable limit, and the generalized arcsine aging function.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{ConductanceLaw, Regime, TailSpec};
use crate::error::Error;
use crate::numeric::{adaptive_simpson, mix_seed, KahanSum};
use crate::Result;

/// Relative size at which the geometric series for V / W are cut off.
const VW_REL_TOL: f64 = 1e-13;
/// Consecutive negligible terms required before truncating V / W.
const VW_QUIET_RUN: usize = 16;
/// Hard cap on V / W series length.
const VW_MAX_TERMS: usize = 100_000;
/// Number of nodes in the size-biased inverse-CDF table.
const SIZE_BIASED_GRID: usize = 4096;

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidSpec(format!(
            "stable index must lie in (0,1), got {alpha}"
        )));
    }
    Ok(())
}

/// One positive-stable draw normalized so that E[exp(-t S)] = exp(-t^alpha),
/// via the two-uniform (uniform + exponential) transformation.
fn stable_standard(alpha: f64, rng: &mut impl RngCore) -> f64 {
    // Avoid the endpoints where the trigonometric factor degenerates.
    let v: f64 = loop {
        let v: f64 = rng.gen();
        if v > 1e-12 && v < 1.0 - 1e-12 {
            break v;
        }
    };
    let w: f64 = loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            break -u.ln();
        }
    };
    let pv = std::f64::consts::PI * v;
    // a(v) = sin(a pi v)^(a/(1-a)) * sin((1-a) pi v) / sin(pi v)^(1/(1-a)),
    // computed in log scale to dodge under/overflow near the endpoints.
    let log_a = (alpha / (1.0 - alpha)) * (alpha * pv).sin().ln()
        + ((1.0 - alpha) * pv).sin().ln()
        - (1.0 / (1.0 - alpha)) * pv.sin().ln();
    ((log_a - w.ln()) * ((1.0 - alpha) / alpha)).exp()
}

/// One increment S_alpha(du) of the subordinator with E[exp(-t S_alpha(u))] =
/// exp(-u t^alpha).
pub fn stable_increment(alpha: f64, du: f64, seed: u64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(du > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "time increment must be positive, got {du}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(du.powf(1.0 / alpha) * stable_standard(alpha, &mut rng))
}

/// Exact finite-dimensional sample of (S_alpha(u)) on a sorted grid in (0,1],
/// built from independent increments over the grid gaps.
pub fn subordinator_path(alpha: f64, grid: &[f64], seed: u64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    if grid.is_empty() {
        return Err(Error::InvalidSpec("empty subordinator grid".into()));
    }
    let mut prev = 0.0;
    for &u in grid {
        if !(u > prev) || u > 1.0 {
            return Err(Error::InvalidSpec(
                "subordinator grid must be strictly increasing in (0,1]".into(),
            ));
        }
        prev = u;
    }
    let mut path = Vec::with_capacity(grid.len());
    let mut total = 0.0;
    let mut last = 0.0;
    for (i, &u) in grid.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, i as u64));
        total += (u - last).powf(1.0 / alpha) * stable_standard(alpha, &mut rng);
        last = u;
        path.push(total);
    }
    Ok(path)
}

/// One draw of the inverse-subordinator marginal (S_alpha)^{-1}(u), using the
/// identity (S_alpha)^{-1}(1) = S_alpha(1)^{-alpha} together with the scaling
/// (S_alpha)^{-1}(u) = u^alpha (S_alpha)^{-1}(1) in law.
pub fn inverse_marginal(alpha: f64, u: f64, seed: u64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(u > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "inverse marginal needs u > 0, got {u}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(u.powf(alpha) * stable_standard(alpha, &mut rng).powf(-alpha))
}

/// Inverse-CDF table for a variable Y size-biased by Y^alpha, where Y is an
/// upper tail draw with probability `p_up` and the reciprocal of a lower tail
/// draw otherwise. The CDF u -> E[Y^alpha 1{Y<=u}] / E[Y^alpha] is tabulated
/// on a log-spaced grid and inverted by monotone interpolation.
#[derive(Clone, Debug)]
pub struct SizeBiasedTable {
    log_u: Vec<f64>,
    cdf: Vec<f64>,
}

impl SizeBiasedTable {
    fn build(p_up: f64, up: &TailSpec, down: &TailSpec, alpha: f64) -> Result<Self> {
        // Overall survival of Y: the upper branch lives on [1, inf), the
        // reciprocal lower branch on (0, 1].
        let surv = |u: f64| -> f64 {
            if u >= 1.0 {
                p_up * up.survival(u)
            } else {
                1.0 - (1.0 - p_up) * (1.0 - down.survival(1.0 / u))
            }
        };
        // The size-biased tail decays like u^(alpha - alpha_up); demand a
        // polynomial margin so a finite grid can carry all but ~1e-9 of the
        // weighted mass.
        let ln_max = if p_up == 0.0 {
            0.0
        } else {
            let delta = up.alpha() - alpha;
            if delta <= 1e-9 {
                return Err(Error::Unsupported(
                    "size-biased tail decays slower than polynomially; \
                     grid inverse-CDF sampler needs tail exponent > alpha"
                        .into(),
                ));
            }
            let margin = 2.0 * (1.0 + alpha / delta);
            let tol = 1e-9 * p_up.max(1e-3);
            let mut ln_u = up.t_min().ln() + 5.0;
            loop {
                let s = surv(ln_u.exp());
                let bound = if s > 0.0 {
                    margin * (alpha * ln_u + s.ln()).exp()
                } else {
                    0.0
                };
                if bound <= tol {
                    break ln_u;
                }
                if ln_u > 650.0 {
                    return Err(Error::Numeric(
                        "size-biased tail still heavy at the f64 range limit".into(),
                    ));
                }
                ln_u += 2.0;
            }
        };
        // Mass below u_min is at most u_min^alpha; make it negligible.
        let ln_min = (1e-13f64.ln() / alpha).max(-600.0).min(ln_max - 1.0);
        let mut log_u = Vec::with_capacity(SIZE_BIASED_GRID);
        for i in 0..SIZE_BIASED_GRID {
            let f = i as f64 / (SIZE_BIASED_GRID - 1) as f64;
            log_u.push(ln_min + f * (ln_max - ln_min));
        }
        // Cumulative weighted mass via integration by parts:
        // G(u) = u0^a S(u0) - u^a S(u) + a int_{u0}^{u} t^(a-1) S(t) dt,
        // with the integral accumulated cell by cell in log scale.
        let g = |lu: f64| alpha * lu.exp().powf(alpha) * surv(lu.exp());
        let mut cum = KahanSum::new();
        let mut cdf = Vec::with_capacity(SIZE_BIASED_GRID);
        let head = (alpha * ln_min).exp() * surv(ln_min.exp());
        cdf.push(head - (alpha * ln_min).exp() * surv(ln_min.exp()));
        for i in 1..SIZE_BIASED_GRID {
            let (a, b) = (log_u[i - 1], log_u[i]);
            let m = 0.5 * (a + b);
            cum.add((b - a) / 6.0 * (g(a) + 4.0 * g(m) + g(b)));
            let lu = log_u[i];
            cdf.push(head - (alpha * lu).exp() * surv(lu.exp()) + cum.value());
        }
        let total = *cdf.last().unwrap();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Numeric(
                "size-biased CDF quadrature produced a non-positive total".into(),
            ));
        }
        let mut prev = 0.0;
        for v in cdf.iter_mut() {
            *v = (*v / total).clamp(prev, 1.0);
            prev = *v;
        }
        Ok(Self { log_u, cdf })
    }

    /// Inverse CDF at `p` in (0,1).
    pub fn sample(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let idx = self.cdf.partition_point(|&c| c < p);
        if idx == 0 {
            return self.log_u[0].exp();
        }
        if idx >= self.cdf.len() {
            return self.log_u[self.cdf.len() - 1].exp();
        }
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        let (l0, l1) = (self.log_u[idx - 1], self.log_u[idx]);
        let f = if c1 > c0 { (p - c0) / (c1 - c0) } else { 0.0 };
        (l0 + f * (l1 - l0)).exp()
    }

    /// Tabulated CDF at `u` (linear in log u between nodes).
    pub fn cdf(&self, u: f64) -> f64 {
        let lu = u.ln();
        if lu <= self.log_u[0] {
            return 0.0;
        }
        if lu >= *self.log_u.last().unwrap() {
            return 1.0;
        }
        let idx = self.log_u.partition_point(|&l| l < lu);
        let (l0, l1) = (self.log_u[idx - 1], self.log_u[idx]);
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        c0 + (lu - l0) / (l1 - l0) * (c1 - c0)
    }
}

/// Law of the limiting trap-strength variable
/// zeta = 2 (1 + B cbar_0 V + (1-B) (1/cbar_{-1}) W).
///
/// In the well-and-walls regime zeta is identically 2. Otherwise B is
/// Bernoulli(q), cbar_{-1} is c size-biased by c^alpha, 1/cbar_0 is 1/c
/// size-biased by (1/c)^alpha, and V, W are independent geometric series over
/// fresh i.i.d. conductances.
#[derive(Clone, Debug)]
pub struct ZetaLaw {
    regime: Regime,
    q: f64,
    q_is_limit: bool,
    cbar_m1: Option<SizeBiasedTable>,
    inv_cbar_0: Option<SizeBiasedTable>,
    degenerate_c: Option<f64>,
}

impl ZetaLaw {
    /// Derive the zeta law from a conductance law: decides the regime, the
    /// Bernoulli parameter q, and builds whichever size-biased tables the
    /// non-degenerate branches need.
    pub fn from_law(law: &ConductanceLaw) -> Result<Self> {
        let alpha = law.alpha();
        let regime = law.regime();
        if regime == Regime::WellAndWalls {
            return Ok(Self {
                regime,
                q: 0.0,
                q_is_limit: false,
                cbar_m1: None,
                inv_cbar_0: None,
                degenerate_c: None,
            });
        }
        let m_up = law.moment_upper_alpha();
        let m_low = law.moment_lower_alpha();
        let (q, q_is_limit) = match (m_up, m_low) {
            (None, Some(_)) => (1.0, false),
            (Some(_), None) => (0.0, false),
            (Some(mu), Some(ml)) => (limit_q(law, mu, ml), true),
            (None, None) => unreachable!("both moments diverging is the well-and-walls regime"),
        };
        // A build failure (e.g. a size-biased tail with no polynomial margin)
        // is deferred: q is still reported, and sampling the affected branch
        // errors with a diagnostic.
        let inv_cbar_0 = if q > 0.0 {
            SizeBiasedTable::build(1.0 - law.p_upper(), law.lower(), law.upper(), alpha).ok()
        } else {
            None
        };
        let cbar_m1 = if q < 1.0 {
            SizeBiasedTable::build(law.p_upper(), law.upper(), law.lower(), alpha).ok()
        } else {
            None
        };
        Ok(Self {
            regime,
            q,
            q_is_limit,
            cbar_m1,
            inv_cbar_0,
            degenerate_c: None,
        })
    }

    /// Zeta law for a point-mass conductance c with an explicit q; all series
    /// are then closed-form geometric, which makes exact anchors possible.
    pub fn degenerate(c: f64, q: f64) -> Result<Self> {
        if !(c > 0.0) || !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidSpec(
                "degenerate zeta law needs c > 0 and q in [0,1]".into(),
            ));
        }
        Ok(Self {
            regime: Regime::SimpleTraps,
            q,
            q_is_limit: false,
            cbar_m1: None,
            inv_cbar_0: None,
            degenerate_c: Some(c),
        })
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// Bernoulli parameter of B (the well-vs-wall mixture weight).
    pub fn q(&self) -> f64 {
        self.q
    }

    /// True when q was obtained as the limit of the slowly-varying ratio
    /// rather than forced to 0 or 1 by a diverging moment.
    pub fn q_is_limit(&self) -> bool {
        self.q_is_limit
    }
}

/// q = lim_t E[c^a] L_0(t) / (E[c^a] L_0(t) + E[1/c^a] L_inf(t)) for the
/// log-corrected representative tails, where L_0 / L_inf are read relative to
/// t^{-alpha}: a side whose exponent exceeds alpha contributes 0.
fn limit_q(law: &ConductanceLaw, m_up: f64, m_low: f64) -> f64 {
    let alpha = law.alpha();
    let eps = 1e-12;
    let lower_at_alpha = (law.lower().alpha() - alpha).abs() < eps;
    let upper_at_alpha = (law.upper().alpha() - alpha).abs() < eps;
    match (lower_at_alpha, upper_at_alpha) {
        (true, false) => 1.0,
        (false, true) => 0.0,
        (false, false) => {
            // Both tails are lighter than t^{-alpha}; the conditioning event
            // is then dominated by whichever side is heavier.
            if law.lower().alpha() < law.upper().alpha() {
                1.0
            } else if law.lower().alpha() > law.upper().alpha() {
                0.0
            } else {
                ratio_q(law, m_up, m_low)
            }
        }
        (true, true) => ratio_q(law, m_up, m_low),
    }
}

/// Limit of the ratio when both sides share the tail exponent, so only the
/// (1+ln t)^gamma factors compete.
fn ratio_q(law: &ConductanceLaw, m_up: f64, m_low: f64) -> f64 {
    let g0 = law.lower().gamma();
    let ginf = law.upper().gamma();
    if g0 > ginf {
        1.0
    } else if g0 < ginf {
        0.0
    } else {
        let a = m_up * law.l_lower(std::f64::consts::E);
        let b = m_low * law.l_upper(std::f64::consts::E);
        a / (a + b)
    }
}

/// Geometric series over fresh i.i.d. conductances:
/// V = sum_{j>=1} (1/c_j) e^{-l(j+1)}  or  W = sum_{j>=2} c_{-j} e^{-l(j+1)}.
/// Terms come from per-index RNG streams, so extending the truncation depth
/// never changes earlier terms. Truncation is adaptive: the series stops after
/// a long run of terms below VW_REL_TOL of the partial sum (the realized
/// draws certify the remainder), unless `depth` forces a fixed length.
fn vw_series(
    term_c: impl Fn(u64) -> f64,
    lambda: f64,
    j_start: u64,
    reciprocal: bool,
    depth: Option<usize>,
) -> Result<f64> {
    let mut sum = KahanSum::new();
    let mut quiet = 0usize;
    let mut j = j_start;
    let mut count = 0usize;
    loop {
        let c = term_c(j);
        let x = if reciprocal { 1.0 / c } else { c };
        let term = x * (-lambda * (j as f64 + 1.0)).exp();
        sum.add(term);
        count += 1;
        if let Some(d) = depth {
            if count >= d {
                return Ok(sum.value());
            }
        } else {
            if sum.value() > 0.0 && term < VW_REL_TOL * sum.value() {
                quiet += 1;
            } else {
                quiet = 0;
            }
            if quiet >= VW_QUIET_RUN {
                return Ok(sum.value());
            }
            if count >= VW_MAX_TERMS {
                return Err(Error::Numeric(
                    "V/W series failed to stabilize within the term cap".into(),
                ));
            }
        }
        j += 1;
    }
}

/// One draw of zeta. In the well-and-walls regime this is exactly 2.
pub fn sample_zeta(zeta: &ZetaLaw, env_law: &ConductanceLaw, lambda: f64, seed: u64) -> Result<f64> {
    sample_zeta_with_depth(zeta, Some(env_law), lambda, seed, None)
}

/// `sample_zeta` with an explicit V / W truncation depth (None = adaptive);
/// reruns with a larger depth reproduce the same draws term for term.
pub fn sample_zeta_with_depth(
    zeta: &ZetaLaw,
    env_law: Option<&ConductanceLaw>,
    lambda: f64,
    seed: u64,
    depth: Option<usize>,
) -> Result<f64> {
    if zeta.regime == Regime::WellAndWalls {
        return Ok(2.0);
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "zeta needs a positive bias, got {lambda}"
        )));
    }
    let mut head = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0));
    let b_is_well = head.gen::<f64>() < zeta.q;
    let ubar: f64 = head.gen();
    let draw_c = |stream_tag: u64, j: u64| -> f64 {
        match (zeta.degenerate_c, env_law) {
            (Some(c), _) => c,
            (None, Some(law)) => {
                let mut r = ChaCha8Rng::seed_from_u64(mix_seed(seed, stream_tag + 2 * j));
                law.sample(&mut r)
            }
            (None, None) => f64::NAN,
        }
    };
    if zeta.degenerate_c.is_none() && env_law.is_none() {
        return Err(Error::InvalidSpec(
            "non-degenerate zeta law needs a conductance law for V/W draws".into(),
        ));
    }
    if b_is_well {
        // Well branch: cbar_0 * V with V = sum_{j>=1} (1/c_j) e^{-l(j+1)}.
        let cbar_0 = match (zeta.degenerate_c, &zeta.inv_cbar_0) {
            (Some(c), _) => c,
            (None, Some(table)) => 1.0 / table.sample(ubar),
            (None, None) => {
                return Err(Error::Unsupported(
                    "no size-biased table for 1/cbar_0 (its tail has no \
                     polynomial margin over alpha, or the build failed)"
                        .into(),
                ))
            }
        };
        let v = vw_series(|j| draw_c(1, j), lambda, 1, true, depth)?;
        Ok(2.0 * (1.0 + cbar_0 * v))
    } else {
        // Wall branch: (1/cbar_{-1}) * W with W = sum_{j>=2} c_{-j} e^{-l(j+1)}.
        let cbar_m1 = match (zeta.degenerate_c, &zeta.cbar_m1) {
            (Some(c), _) => c,
            (None, Some(table)) => table.sample(ubar),
            (None, None) => {
                return Err(Error::Unsupported(
                    "no size-biased table for cbar_{-1} (its tail has no \
                     polynomial margin over alpha, or the build failed)"
                        .into(),
                ))
            }
        };
        let w = vw_series(|j| draw_c(2, j), lambda, 2, false, depth)?;
        Ok(2.0 * (1.0 + w / cbar_m1))
    }
}

/// Monte Carlo estimate of E[zeta^alpha].
#[derive(Clone, Debug)]
pub struct EZetaAlpha {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    /// Hill tail-index estimate of zeta itself; integrability of zeta^alpha
    /// wants this above alpha. None when zeta is (numerically) degenerate.
    pub hill_index: Option<f64>,
}

/// E[zeta^alpha] with standard error and a tail-index diagnostic. Exact (zero
/// standard error) in the well-and-walls and degenerate cases.
pub fn e_zeta_alpha(
    zeta: &ZetaLaw,
    env_law: Option<&ConductanceLaw>,
    lambda: f64,
    alpha: f64,
    n_samples: usize,
    seed: u64,
) -> Result<EZetaAlpha> {
    check_alpha(alpha)?;
    if zeta.regime == Regime::WellAndWalls {
        return Ok(EZetaAlpha {
            mean: 2f64.powf(alpha),
            std_error: 0.0,
            n_samples: 0,
            hill_index: None,
        });
    }
    if n_samples < 10_000 {
        return Err(Error::InvalidSpec(format!(
            "E[zeta^alpha] needs at least 1e4 samples, got {n_samples}"
        )));
    }
    let mut zs = Vec::with_capacity(n_samples);
    let mut sum = KahanSum::new();
    let mut sumsq = KahanSum::new();
    for i in 0..n_samples {
        let z = sample_zeta_with_depth(zeta, env_law, lambda, mix_seed(seed, i as u64), None)?;
        let za = z.powf(alpha);
        sum.add(za);
        sumsq.add(za * za);
        zs.push(z);
    }
    let n = n_samples as f64;
    let mean = sum.value() / n;
    let var = (sumsq.value() / n - mean * mean).max(0.0);
    let std_error = (var / n).sqrt();
    let k = (n_samples / 20).clamp(10, 500);
    let hill_index = match crate::stats::hill_estimator(&zs, k) {
        Ok(h) if h.gamma > 1e-12 => Some(h.index),
        _ => None,
    };
    Ok(EZetaAlpha {
        mean,
        std_error,
        n_samples,
        hill_index,
    })
}

/// The constant (pi alpha E[zeta^alpha] / sin(pi alpha))^{1/alpha} scaling the
/// subordinator in the passage-time limit.
pub fn theorem_constant(alpha: f64, e_zeta_alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(e_zeta_alpha > 0.0) {
        return Err(Error::InvalidSpec(
            "E[zeta^alpha] must be positive".into(),
        ));
    }
    let pa = std::f64::consts::PI * alpha;
    Ok((pa * e_zeta_alpha / pa.sin()).powf(1.0 / alpha))
}

/// The reciprocal front factor sin(pi alpha) / (pi alpha E[zeta^alpha]) that
/// multiplies the inverse subordinator in the position limit.
pub fn front_factor(alpha: f64, e_zeta_alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(e_zeta_alpha > 0.0) {
        return Err(Error::InvalidSpec(
            "E[zeta^alpha] must be positive".into(),
        ));
    }
    let pa = std::f64::consts::PI * alpha;
    Ok(pa.sin() / (pa * e_zeta_alpha))
}

/// Generalized arcsine aging probability
/// (sin(pi a)/pi) int_0^{1/h} y^{a-1} (1-y)^{-a} dy for h >= 1.
///
/// The y = z^{1/alpha} substitution removes the endpoint singularity at 0
/// exactly, leaving (sin(pi a)/(pi a)) int_0^{(1/h)^a} (1 - z^{1/a})^{-a} dz.
pub fn arcsine_aging(alpha: f64, h: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(h >= 1.0) {
        return Err(Error::InvalidSpec(format!(
            "aging ratio must satisfy h >= 1, got {h}"
        )));
    }
    if h == 1.0 {
        return Ok(1.0);
    }
    let upper = h.powf(-alpha);
    let integrand = |z: f64| {
        if z <= 0.0 {
            1.0
        } else {
            (1.0 - z.powf(1.0 / alpha)).powf(-alpha)
        }
    };
    let pa = std::f64::consts::PI * alpha;
    let val = pa.sin() / pa * adaptive_simpson(&integrand, 0.0, upper, 1e-11);
    Ok(val.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ConductanceLaw, TailSpec};
    use crate::stats::{ks_one_sample, ks_two_sample};
    use statrs::function::beta::beta_reg;
    use statrs::function::erf::erfc;
    use statrs::function::gamma::gamma;

    fn spec(alpha: f64, gamma: f64) -> TailSpec {
        TailSpec::new(alpha, gamma, 1.0, std::f64::consts::E).unwrap()
    }

    /// Simple-trap law with a critical upper tail: E[c^alpha] diverges, so
    /// q = 1 and deep traps are wells.
    fn law_q1(alpha: f64) -> ConductanceLaw {
        ConductanceLaw::new(spec(alpha, 0.0), spec(alpha + 1.5, 0.0), 0.5).unwrap()
    }

    /// Mirror image with a critical lower tail: E[1/c^alpha] diverges, q = 0.
    fn law_q0(alpha: f64) -> ConductanceLaw {
        ConductanceLaw::new(spec(alpha + 1.5, 0.0), spec(alpha, 0.0), 0.5).unwrap()
    }

    fn law_well_and_walls(alpha: f64) -> ConductanceLaw {
        ConductanceLaw::new(spec(alpha, 0.0), spec(alpha, 0.0), 0.5).unwrap()
    }

    #[test]
    fn stable_half_matches_levy() {
        let n = 100_000;
        let sample: Vec<f64> = (0..n)
            .map(|i| stable_increment(0.5, 1.0, mix_seed(7, i)).unwrap())
            .collect();
        let ks = ks_one_sample(&sample, |s| {
            if s <= 0.0 {
                0.0
            } else {
                erfc(1.0 / (2.0 * s.sqrt()))
            }
        })
        .unwrap();
        assert!(ks.statistic < 0.01, "KS = {}", ks.statistic);
    }

    #[test]
    fn laplace_transform_at_unit_time() {
        let n = 1_000_000u64;
        for (ai, &alpha) in [0.3, 0.5, 0.8].iter().enumerate() {
            let mut sum = KahanSum::new();
            let mut sumsq = KahanSum::new();
            for i in 0..n {
                let s = stable_increment(alpha, 1.0, mix_seed(ai as u64, i)).unwrap();
                let e = (-s).exp();
                sum.add(e);
                sumsq.add(e * e);
            }
            let mean = sum.value() / n as f64;
            let sd = (sumsq.value() / n as f64 - mean * mean).sqrt();
            let target = (-1f64).exp();
            assert!(
                (mean - target).abs() < 3.0 * sd / (n as f64).sqrt(),
                "alpha={alpha}: mean {mean} vs {target}"
            );
        }
    }

    #[test]
    fn laplace_transform_grid() {
        let n = 100_000u64;
        for (ai, &alpha) in [0.3, 0.5, 0.8].iter().enumerate() {
            for (ti, &t) in [0.5, 1.0, 2.0].iter().enumerate() {
                let mut sum = KahanSum::new();
                let mut sumsq = KahanSum::new();
                for i in 0..n {
                    let seed = mix_seed(100 + (ai * 3 + ti) as u64, i);
                    let s = stable_increment(alpha, 1.0, seed).unwrap();
                    let e = (-t * s).exp();
                    sum.add(e);
                    sumsq.add(e * e);
                }
                let mean = sum.value() / n as f64;
                let sd = (sumsq.value() / n as f64 - mean * mean).sqrt();
                let target = (-t.powf(alpha)).exp();
                assert!(
                    (mean - target).abs() < 3.5 * sd / (n as f64).sqrt(),
                    "alpha={alpha} t={t}: mean {mean} vs {target}"
                );
            }
        }
    }

    #[test]
    fn self_similarity_scaling() {
        let n = 10_000;
        let a: Vec<f64> = (0..n)
            .map(|i| stable_increment(0.7, 2.0, mix_seed(11, i)).unwrap())
            .collect();
        let b: Vec<f64> = (0..n)
            .map(|i| 2f64.powf(1.0 / 0.7) * stable_increment(0.7, 1.0, mix_seed(12, i)).unwrap())
            .collect();
        let ks = ks_two_sample(&a, &b).unwrap();
        assert!(ks.p_value > 0.01, "p = {}", ks.p_value);
    }

    #[test]
    fn path_single_point_reduces_to_increment() {
        let path = subordinator_path(0.5, &[1.0], 99).unwrap();
        let inc = stable_increment(0.5, 1.0, mix_seed(99, 0)).unwrap();
        assert_eq!(path, vec![inc]);
    }

    #[test]
    fn path_strictly_increasing() {
        let grid = [0.2, 0.4, 0.6, 0.8, 1.0];
        for s in 0..10_000u64 {
            let path = subordinator_path(0.6, &grid, s).unwrap();
            for w in path.windows(2) {
                assert!(w[1] > w[0]);
            }
        }
    }

    #[test]
    fn path_rejects_unsorted_grid() {
        assert!(subordinator_path(0.5, &[0.5, 0.3], 1).is_err());
        assert!(subordinator_path(0.5, &[0.5, 1.5], 1).is_err());
    }

    #[test]
    fn path_increments_uncorrelated() {
        // Raw increments have infinite variance, so independence is checked
        // on the bounded transform exp(-increment).
        let n = 100_000u64;
        let grid = [0.25, 0.5, 0.75, 1.0];
        let (mut sx, mut sy, mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for s in 0..n {
            let p = subordinator_path(0.5, &grid, s).unwrap();
            let x = (-(p[1] - p[0])).exp();
            let y = (-(p[3] - p[2])).exp();
            sx += x;
            sy += y;
            sxy += x * y;
            sxx += x * x;
            syy += y * y;
        }
        let nf = n as f64;
        let cov = sxy / nf - sx / nf * (sy / nf);
        let vx = sxx / nf - (sx / nf).powi(2);
        let vy = syy / nf - (sy / nf).powi(2);
        let corr = cov / (vx * vy).sqrt();
        assert!(corr.abs() < 3.0 / nf.sqrt(), "corr = {corr}");
    }

    #[test]
    fn inverse_marginal_mean_is_mittag_leffler() {
        for (ai, &alpha) in [0.3, 0.5, 0.8].iter().enumerate() {
            let n = 1_000_000u64;
            let mut sum = KahanSum::new();
            for i in 0..n {
                sum.add(inverse_marginal(alpha, 1.0, mix_seed(40 + ai as u64, i)).unwrap());
            }
            let mean = sum.value() / n as f64;
            let target = 1.0 / gamma(1.0 + alpha);
            assert!(
                (mean / target - 1.0).abs() < 0.01,
                "alpha={alpha}: {mean} vs {target}"
            );
            if alpha == 0.5 {
                let half = 2.0 / std::f64::consts::PI.sqrt();
                assert!((mean / half - 1.0).abs() < 0.01);
            }
        }
    }

    #[test]
    fn inverse_marginal_matches_path_construction() {
        // Path-based inverse: accumulate fine increments until the path
        // exceeds 1 and report the time; compare to S(1)^{-alpha} draws.
        let alpha = 0.5;
        let ds: f64 = 1e-3;
        let scale = ds.powf(1.0 / alpha);
        let by_path: Vec<f64> = (0..1000u64)
            .map(|s| {
                let mut total = 0.0;
                let mut t = 0.0;
                let mut k = 0u64;
                while total <= 1.0 {
                    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(mix_seed(777, s), k));
                    total += scale * stable_standard(alpha, &mut rng);
                    t += ds;
                    k += 1;
                }
                t
            })
            .collect();
        let direct: Vec<f64> = (0..1000u64)
            .map(|s| inverse_marginal(alpha, 1.0, mix_seed(778, s)).unwrap())
            .collect();
        let ks = ks_two_sample(&by_path, &direct).unwrap();
        assert!(ks.p_value > 0.01, "p = {}", ks.p_value);
    }

    #[test]
    fn inverse_marginal_monotone_in_u() {
        for s in 0..1000u64 {
            let a = inverse_marginal(0.4, 0.5, s).unwrap();
            let b = inverse_marginal(0.4, 1.0, s).unwrap();
            assert!(a <= b);
        }
    }

    #[test]
    fn zeta_well_and_walls_is_two() {
        let law = law_well_and_walls(0.5);
        let zeta = ZetaLaw::from_law(&law).unwrap();
        assert_eq!(zeta.regime(), Regime::WellAndWalls);
        for s in 0..100 {
            assert_eq!(sample_zeta(&zeta, &law, 1.0, s).unwrap(), 2.0);
        }
        let e = e_zeta_alpha(&zeta, Some(&law), 1.0, 0.5, 10_000, 0).unwrap();
        assert_eq!(e.mean, 2f64.powf(0.5));
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn zeta_degenerate_anchor_is_three() {
        // c = 1, lambda = ln 2, q = 1: V = 1/2 exactly, so zeta = 3.
        let zeta = ZetaLaw::degenerate(1.0, 1.0).unwrap();
        let lambda = 2f64.ln();
        for s in 0..50 {
            let z = sample_zeta_with_depth(&zeta, None, lambda, s, None).unwrap();
            assert!((z - 3.0).abs() < 1e-10, "z = {z}");
        }
    }

    #[test]
    fn zeta_degenerate_e_alpha_sqrt3() {
        let zeta = ZetaLaw::degenerate(1.0, 1.0).unwrap();
        let e = e_zeta_alpha(&zeta, None, 2f64.ln(), 0.5, 10_000, 3).unwrap();
        assert!((e.mean - 3f64.sqrt()).abs() < 1e-9);
        assert!(e.std_error < 1e-9);
    }

    #[test]
    fn zeta_regime_q_classification() {
        let alpha = 0.5;
        assert_eq!(ZetaLaw::from_law(&law_q1(alpha)).unwrap().q(), 1.0);
        assert_eq!(ZetaLaw::from_law(&law_q0(alpha)).unwrap().q(), 0.0);
        // Both moments finite with identical critical tails: the ratio limit.
        let up = spec(alpha, -2.0);
        let low = spec(alpha, -2.0);
        let law = ConductanceLaw::new(up, low, 0.5).unwrap();
        let zeta = ZetaLaw::from_law(&law).unwrap();
        assert!(zeta.q_is_limit());
        assert!((zeta.q() - 0.5).abs() < 1e-9, "q = {}", zeta.q());
    }

    #[test]
    fn zeta_always_at_least_two() {
        let law = law_q1(0.5);
        let zeta = ZetaLaw::from_law(&law).unwrap();
        for s in 0..2000u64 {
            let z = sample_zeta(&zeta, &law, 1.0, s).unwrap();
            assert!(z >= 2.0);
        }
    }

    #[test]
    fn zeta_truncation_depth_stable() {
        let law = law_q1(0.5);
        let zeta = ZetaLaw::from_law(&law).unwrap();
        for s in 0..100u64 {
            let a = sample_zeta_with_depth(&zeta, Some(&law), 1.0, s, Some(200)).unwrap();
            let b = sample_zeta_with_depth(&zeta, Some(&law), 1.0, s, Some(400)).unwrap();
            assert!((a - b).abs() <= 1e-10 * a.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn size_biased_table_matches_weighted_empirical() {
        let alpha = 0.5;
        let law = law_q0(alpha); // q = 0 -> builds the cbar_{-1} table
        let zeta = ZetaLaw::from_law(&law).unwrap();
        let table = zeta.cbar_m1.as_ref().unwrap();
        // Weighted empirical CDF of c^alpha-size-biased draws.
        let n = 1_000_000u64;
        let mut rng = ChaCha8Rng::seed_from_u64(0xb1a5);
        let draws: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
        let total: f64 = draws.iter().map(|c| c.powf(alpha)).sum();
        for q in [0.25, 0.5, 0.75, 0.9] {
            let u = table.sample(q);
            let mass: f64 = draws
                .iter()
                .filter(|&&c| c <= u)
                .map(|c| c.powf(alpha))
                .sum::<f64>()
                / total;
            assert!((mass - q).abs() < 0.01, "q={q}: empirical {mass} at u={u}");
        }
    }

    #[test]
    fn e_zeta_alpha_stable_under_doubling() {
        let law = law_q1(0.5);
        let zeta = ZetaLaw::from_law(&law).unwrap();
        let a = e_zeta_alpha(&zeta, Some(&law), 1.0, 0.5, 20_000, 5).unwrap();
        let b = e_zeta_alpha(&zeta, Some(&law), 1.0, 0.5, 40_000, 6).unwrap();
        let joint = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!(
            (a.mean - b.mean).abs() < 2.0 * joint,
            "{} vs {} (joint se {joint})",
            a.mean,
            b.mean
        );
        // Integrability diagnostic: zeta's tail index should exceed alpha.
        assert!(a.hill_index.unwrap_or(f64::INFINITY) > 0.5);
    }

    #[test]
    fn theorem_constant_anchor() {
        let c = theorem_constant(0.5, 2f64.sqrt()).unwrap();
        assert!((c - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn theorem_constant_product_identity_and_monotone() {
        for &alpha in &[0.3, 0.5, 0.8] {
            for &e in &[1.0, 1.5, 3.0] {
                let c = theorem_constant(alpha, e).unwrap();
                let f = front_factor(alpha, e).unwrap();
                assert!((c.powf(alpha) * f - 1.0).abs() < 1e-12);
            }
            let c1 = theorem_constant(alpha, 1.0).unwrap();
            let c2 = theorem_constant(alpha, 2.0).unwrap();
            assert!(c2 > c1);
        }
    }

    #[test]
    fn arcsine_aging_anchors() {
        assert_eq!(arcsine_aging(0.3, 1.0).unwrap(), 1.0);
        let v = arcsine_aging(0.5, 4.0).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-10, "v = {v}");
    }

    #[test]
    fn arcsine_aging_decreasing_to_zero() {
        let mut prev = 1.0;
        for &h in &[1.5, 2.0, 5.0, 20.0, 1e3, 1e6] {
            let v = arcsine_aging(0.6, h).unwrap();
            assert!(v <= prev);
            prev = v;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn arcsine_aging_matches_incomplete_beta() {
        for &alpha in &[0.2, 0.4, 0.5, 0.7, 0.9] {
            for &h in &[1.2, 2.0, 4.0, 10.0, 100.0] {
                let ours = arcsine_aging(alpha, h).unwrap();
                let oracle = beta_reg(alpha, 1.0 - alpha, 1.0 / h);
                assert!(
                    (ours - oracle).abs() < 1e-9,
                    "alpha={alpha} h={h}: {ours} vs {oracle}"
                );
            }
        }
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(stable_increment(1.0, 1.0, 0).is_err());
        assert!(stable_increment(0.5, 0.0, 0).is_err());
        assert!(inverse_marginal(0.5, 0.0, 0).is_err());
        assert!(theorem_constant(0.5, 0.0).is_err());
        assert!(arcsine_aging(0.5, 0.5).is_err());
        assert!(ZetaLaw::degenerate(0.0, 0.5).is_err());
    }
}
