//! Two-sided heavy-tailed conductance laws and finite environment windows.
//!
//! A conductance is drawn as a mixture: with probability `p_upper` from an
//! upper tail spec (heavy at +infinity), otherwise as the reciprocal of a
//! draw from a lower tail spec (making 1/c heavy at +infinity). Each tail
//! spec realizes the survival function `min(1, k_scale (1+log t)^gamma t^-alpha)`
//! above its cutoff `t_min`, with the remaining body mass placed uniformly on
//! `[1, t_min]`.

use crate::numeric::{integrate_to_infinity, mix_seed, KahanSum};
use crate::{Error, Result};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const QUANTILE_REL_TOL: f64 = 1e-13;
const QUANTILE_MAX_ITER: u32 = 200;

/// One regularly-varying tail: survival `min(1, k_scale (1+ln t)^gamma t^-alpha)`
/// for `t >= t_min`, uniform body on `[1, t_min]` below.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailSpec {
    alpha: f64,
    gamma: f64,
    k_scale: f64,
    t_min: f64,
}

impl TailSpec {
    pub fn new(alpha: f64, gamma: f64, k_scale: f64, t_min: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidSpec(format!("alpha must be > 0, got {alpha}")));
        }
        if !(t_min >= 1.0) || !t_min.is_finite() {
            return Err(Error::InvalidSpec(format!("t_min must be >= 1, got {t_min}")));
        }
        if !(k_scale > 0.0) || !k_scale.is_finite() {
            return Err(Error::InvalidSpec(format!("k_scale must be > 0, got {k_scale}")));
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidSpec("gamma must be finite".into()));
        }
        let spec = Self { alpha, gamma, k_scale, t_min };
        // The survival must be non-increasing on the tail; a positive gamma
        // with a too-small cutoff violates this. Checked on a log grid.
        let mut prev = f64::INFINITY;
        for i in 0..=400 {
            let t = t_min * (10.0f64).powf(i as f64 * 0.05);
            let s = spec.survival(t);
            if s > prev + 1e-15 * prev.abs() {
                return Err(Error::InvalidSpec(format!(
                    "survival not non-increasing near t = {t:.4e} (gamma = {gamma}, alpha = {alpha}, t_min = {t_min})"
                )));
            }
            prev = s;
        }
        Ok(spec)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn k_scale(&self) -> f64 {
        self.k_scale
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    /// Tail part of the survival: `min(1, k (1+ln t)^gamma t^-alpha)`,
    /// meaningful for `t >= t_min`.
    pub fn tail_survival(&self, t: f64) -> f64 {
        let s = self.k_scale * (1.0 + t.ln()).powf(self.gamma) * t.powf(-self.alpha);
        s.min(1.0)
    }

    /// Full survival P(X > t) of the component, body included.
    pub fn survival(&self, t: f64) -> f64 {
        if t >= self.t_min {
            return self.tail_survival(t);
        }
        if t <= 1.0 {
            return 1.0;
        }
        // Uniform body on [1, t_min].
        let s_min = self.tail_survival(self.t_min);
        1.0 - (1.0 - s_min) * (t - 1.0) / (self.t_min - 1.0)
    }

    /// Exact inverse of the survival: returns t with survival(t) = u.
    /// Closed-form power inversion when gamma = 0, bisection otherwise.
    pub fn quantile(&self, u: f64) -> f64 {
        assert!(u > 0.0 && u < 1.0, "quantile requires u in (0,1), got {u}");
        let s_min = self.tail_survival(self.t_min);
        if u >= s_min {
            // Body region.
            if self.t_min <= 1.0 || s_min >= 1.0 {
                return self.t_min;
            }
            return 1.0 + (self.t_min - 1.0) * (1.0 - u) / (1.0 - s_min);
        }
        if self.gamma == 0.0 {
            return (self.k_scale / u).powf(1.0 / self.alpha);
        }
        // Bracket the root, then bisect in log space.
        let mut lo = self.t_min;
        let mut hi = self.t_min.max(2.0);
        while self.tail_survival(hi) > u {
            hi *= 16.0;
            if hi > 1e300 {
                break;
            }
        }
        let mut llo = lo.ln();
        let mut lhi = hi.ln();
        for _ in 0..QUANTILE_MAX_ITER {
            let mid = 0.5 * (llo + lhi);
            if self.tail_survival(mid.exp()) > u {
                llo = mid;
            } else {
                lhi = mid;
            }
            if (lhi - llo) < QUANTILE_REL_TOL {
                break;
            }
        }
        lo = llo.exp();
        hi = lhi.exp();
        0.5 * (lo + hi)
    }
}

/// Trap regime of a conductance law, decided by which alpha-moments diverge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    SimpleTraps,
    WellAndWalls,
}

/// The two-sided conductance law: c is a mixture of an upper-tail draw and
/// the reciprocal of a lower-tail draw.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConductanceLaw {
    upper: TailSpec,
    lower: TailSpec,
    p_upper: f64,
    regime: Regime,
    allow_ballistic: bool,
}

impl ConductanceLaw {
    pub fn new(upper: TailSpec, lower: TailSpec, p_upper: f64) -> Result<Self> {
        Self::with_ballistic_flag(upper, lower, p_upper, false)
    }

    /// `allow_ballistic` permits min(alpha_0, alpha_inf) >= 1, for
    /// velocity-formula sanity checks only.
    pub fn with_ballistic_flag(
        upper: TailSpec,
        lower: TailSpec,
        p_upper: f64,
        allow_ballistic: bool,
    ) -> Result<Self> {
        if !(p_upper > 0.0 && p_upper < 1.0) {
            return Err(Error::InvalidLaw(format!("p_upper must be in (0,1), got {p_upper}")));
        }
        let alpha = upper.alpha().min(lower.alpha());
        if alpha >= 1.0 && !allow_ballistic {
            return Err(Error::InvalidLaw(format!(
                "min(alpha_0, alpha_inf) = {alpha} >= 1: sub-ballistic regime required \
                 (use the ballistic flag for velocity tests)"
            )));
        }
        if upper.alpha() == lower.alpha() && (upper.gamma() == -1.0 || lower.gamma() == -1.0) {
            return Err(Error::InvalidLaw(
                "gamma_0 = -1 or gamma_inf = -1 with equal tail exponents is excluded".into(),
            ));
        }
        // For the (1+log t)^gamma representative the alpha-moment of a side
        // diverges iff that side's exponent equals alpha and its gamma >= -1.
        let upper_diverges = upper.alpha() == alpha && upper.gamma() >= -1.0;
        let lower_diverges = lower.alpha() == alpha && lower.gamma() >= -1.0;
        let regime = if upper_diverges && lower_diverges {
            Regime::WellAndWalls
        } else {
            Regime::SimpleTraps
        };
        Ok(Self { upper, lower, p_upper, regime, allow_ballistic })
    }

    pub fn upper(&self) -> &TailSpec {
        &self.upper
    }

    pub fn lower(&self) -> &TailSpec {
        &self.lower
    }

    pub fn p_upper(&self) -> f64 {
        self.p_upper
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// min(alpha_0, alpha_inf).
    pub fn alpha(&self) -> f64 {
        self.upper.alpha().min(self.lower.alpha())
    }

    /// Whether E[c^alpha] = +infinity.
    pub fn upper_moment_diverges(&self) -> bool {
        self.upper.alpha() == self.alpha() && self.upper.gamma() >= -1.0
    }

    /// Whether E[1/c^alpha] = +infinity.
    pub fn lower_moment_diverges(&self) -> bool {
        self.lower.alpha() == self.alpha() && self.lower.gamma() >= -1.0
    }

    /// P(c > t).
    pub fn survival_c(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        let from_upper = self.p_upper * self.upper.survival(t);
        // The lower component contributes c = 1/Y with Y >= 1, so only t < 1.
        let from_lower = if t < 1.0 {
            (1.0 - self.p_upper) * (1.0 - self.lower.survival(1.0 / t))
        } else {
            0.0
        };
        from_upper + from_lower
    }

    /// P(1/c > t).
    pub fn survival_recip(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        let from_lower = (1.0 - self.p_upper) * self.lower.survival(t);
        let from_upper = if t < 1.0 {
            self.p_upper * (1.0 - self.upper.survival(1.0 / t))
        } else {
            0.0
        };
        from_lower + from_upper
    }

    /// Law-level slowly varying part of P(c > t): `p_upper * k_inf (1+ln t)^gamma_inf`.
    pub fn l_upper(&self, t: f64) -> f64 {
        self.p_upper * self.upper.k_scale() * (1.0 + t.ln()).powf(self.upper.gamma())
    }

    /// Law-level slowly varying part of P(1/c > t).
    pub fn l_lower(&self, t: f64) -> f64 {
        (1.0 - self.p_upper) * self.lower.k_scale() * (1.0 + t.ln()).powf(self.lower.gamma())
    }

    /// E[c^alpha] by quadrature against the exact survival; None when divergent.
    pub fn moment_upper_alpha(&self) -> Option<f64> {
        if self.upper_moment_diverges() {
            return None;
        }
        Some(self.moment_alpha(self.p_upper, &self.upper, |t| self.survival_c(t)))
    }

    /// E[1/c^alpha]; None when divergent.
    pub fn moment_lower_alpha(&self) -> Option<f64> {
        if self.lower_moment_diverges() {
            return None;
        }
        Some(self.moment_alpha(1.0 - self.p_upper, &self.lower, |t| self.survival_recip(t)))
    }

    /// E[Z^alpha] = int_0^inf alpha t^(alpha-1) P(Z > t) dt for Z with the
    /// given survival. Beyond the point where the survival equals its pure
    /// tail form `weight * k (1+ln t)^gamma t^-a`, the integral is taken
    /// entirely in log scale (substituting t = e^v gives an integrand
    /// `alpha weight k (1+v)^gamma e^((alpha-a)v)` that never overflows),
    /// with a closed form when a = alpha.
    fn moment_alpha<S: Fn(f64) -> f64>(&self, weight: f64, spec: &TailSpec, survival: S) -> f64 {
        let alpha = self.alpha();
        // Head on (0, 1]: P <= 1, integrand alpha t^(alpha-1) P(t).
        let head = crate::numeric::adaptive_simpson(
            &|t: f64| {
                if t <= 0.0 {
                    0.0
                } else {
                    alpha * t.powf(alpha - 1.0) * survival(t)
                }
            },
            1e-12,
            1.0,
            1e-10,
        );
        let a = spec.alpha();
        let gamma = spec.gamma();
        let k = spec.k_scale();
        // First v >= ln(max(t_min, 1)) past the body and the min(1, .) clamp,
        // so that survival(e^v) = weight * k (1+v)^gamma e^(-a v) exactly.
        let mut v1 = spec.t_min().max(1.0).ln();
        while k.ln() + gamma * (1.0 + v1).ln() - a * v1 >= 0.0 {
            v1 += 1.0;
        }
        // Mid on [1, e^v1] against the exact survival, in log scale.
        let mid = if v1 > 0.0 {
            crate::numeric::adaptive_simpson(
                &|v: f64| {
                    let t = v.exp();
                    alpha * t.powf(alpha) * survival(t)
                },
                0.0,
                v1,
                1e-10,
            )
        } else {
            0.0
        };
        // Pure tail beyond v1.
        let tail = if a == alpha {
            // Divergent cases (gamma >= -1) were filtered out by the caller.
            weight * k * alpha * (1.0 + v1).powf(gamma + 1.0) / (-(gamma + 1.0))
        } else {
            integrate_to_infinity(
                &|v: f64| weight * k * alpha * (1.0 + v).powf(gamma) * ((alpha - a) * v).exp(),
                v1,
                1e-10,
            )
        };
        head + mid + tail
    }

    /// E[c] = int_0^inf P(c > t) dt; None when the upper tail exponent is <= 1.
    pub fn mean_c(&self) -> Option<f64> {
        if self.upper.alpha() <= 1.0 {
            return None;
        }
        Some(self.mean_of(|t| self.survival_c(t)))
    }

    /// E[1/c]; None when the lower tail exponent is <= 1.
    pub fn mean_recip(&self) -> Option<f64> {
        if self.lower.alpha() <= 1.0 {
            return None;
        }
        Some(self.mean_of(|t| self.survival_recip(t)))
    }

    fn mean_of<S: Fn(f64) -> f64>(&self, survival: S) -> f64 {
        let head = crate::numeric::adaptive_simpson(&|t: f64| survival(t), 0.0, 1.0, 1e-10);
        let tail = integrate_to_infinity(
            &|v: f64| {
                let t = v.exp();
                t * survival(t)
            },
            0.0,
            1e-10,
        );
        head + tail
    }

    /// One conductance draw.
    pub fn sample(&self, rng: &mut impl RngCore) -> f64 {
        let coin: f64 = rng.gen();
        let u: f64 = loop {
            let u: f64 = rng.gen();
            if u > 0.0 && u < 1.0 {
                break u;
            }
        };
        if coin < self.p_upper {
            self.upper.quantile(u)
        } else {
            1.0 / self.lower.quantile(u)
        }
    }
}

/// A finite window of i.i.d. conductances with bias `lambda`.
///
/// Conductances are drawn from per-site RNG streams derived from the seed, so
/// the array is reproducible and a window can be extended in either direction
/// without changing already-drawn sites.
#[derive(Clone, Debug)]
pub struct Environment {
    lambda: f64,
    left: i64,
    right: i64,
    c: Vec<f64>,
    seed: u64,
}

/// Sites beyond this many entries refuse to allocate.
const MAX_WINDOW: i64 = 200_000_000;

impl Environment {
    /// Draw the window `[left, right]` of i.i.d. conductances.
    pub fn sample(law: &ConductanceLaw, lambda: f64, left: i64, right: i64, seed: u64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidLaw(format!("lambda must be > 0, got {lambda}")));
        }
        if left > 0 || right < 1 {
            return Err(Error::Config(format!(
                "window [{left}, {right}] must satisfy left <= 0 < right"
            )));
        }
        if right - left + 1 > MAX_WINDOW {
            return Err(Error::Config(format!(
                "window [{left}, {right}] exceeds the memory budget"
            )));
        }
        let c = (left..=right).map(|x| Self::draw_site(law, seed, x)).collect();
        Ok(Self { lambda, left, right, c, seed })
    }

    /// Build directly from explicit conductances (tests, constructed traps).
    pub fn from_conductances(lambda: f64, left: i64, c: Vec<f64>, seed: u64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidLaw(format!("lambda must be > 0, got {lambda}")));
        }
        if c.is_empty() {
            return Err(Error::Config("empty conductance array".into()));
        }
        if c.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::Config("conductances must be strictly positive and finite".into()));
        }
        let right = left + c.len() as i64 - 1;
        Ok(Self { lambda, left, right, c, seed })
    }

    fn draw_site(law: &ConductanceLaw, seed: u64, x: i64) -> f64 {
        let stream = mix_seed(seed, x as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(stream);
        law.sample(&mut rng)
    }

    /// Extend the window leftward to `new_left`, reusing the same seed stream
    /// so existing sites keep their values.
    pub fn extend_left(&mut self, law: &ConductanceLaw, new_left: i64) -> Result<()> {
        if new_left >= self.left {
            return Ok(());
        }
        if self.right - new_left + 1 > MAX_WINDOW {
            return Err(Error::Config("extension exceeds the memory budget".into()));
        }
        let mut prefix: Vec<f64> =
            (new_left..self.left).map(|x| Self::draw_site(law, self.seed, x)).collect();
        prefix.extend_from_slice(&self.c);
        self.c = prefix;
        self.left = new_left;
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn left(&self) -> i64 {
        self.left
    }

    pub fn right(&self) -> i64 {
        self.right
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn conductances(&self) -> &[f64] {
        &self.c
    }

    #[inline]
    pub fn contains(&self, x: i64) -> bool {
        x >= self.left && x <= self.right
    }

    /// c_x.
    #[inline]
    pub fn c(&self, x: i64) -> Result<f64> {
        if !self.contains(x) {
            return Err(Error::OutOfWindow { x, left: self.left, right: self.right });
        }
        Ok(self.c[(x - self.left) as usize])
    }

    #[inline]
    pub(crate) fn c_unchecked(&self, x: i64) -> f64 {
        self.c[(x - self.left) as usize]
    }

    /// Tilted conductance c_x^lambda = e^(lambda x) c_x. Overflows for very
    /// large |x|; network formulas use anchored ratios instead.
    pub fn c_tilted(&self, x: i64) -> Result<f64> {
        Ok((self.lambda * x as f64).exp() * self.c(x)?)
    }

    /// Right-jump probability omega_x = c_x^lambda / (c_{x-1}^lambda + c_x^lambda),
    /// evaluated in the overflow-free local form 1/(1 + rho_x).
    pub fn omega(&self, x: i64) -> Result<f64> {
        if x <= self.left || x > self.right {
            return Err(Error::OutOfWindow { x, left: self.left, right: self.right });
        }
        Ok(1.0 / (1.0 + self.rho(x)?))
    }

    /// rho_x = e^(-lambda) c_{x-1} / c_x.
    pub fn rho(&self, x: i64) -> Result<f64> {
        self.rho_k(x, 0)
    }

    /// rho_x^(k) = e^(-lambda (k+1)) c_{x-1} / c_{x+k}.
    pub fn rho_k(&self, x: i64, k: u32) -> Result<f64> {
        let cm = self.c(x - 1)?;
        let cp = self.c(x + k as i64)?;
        Ok((-self.lambda * (k as f64 + 1.0)).exp() * cm / cp)
    }

    /// Sum of log-rho over [1, x], the potential V(x) (diagnostics only).
    pub fn potential(&self, x: i64) -> Result<f64> {
        let mut acc = KahanSum::new();
        for y in 1..=x {
            acc.add(self.rho(y)?.ln());
        }
        Ok(acc.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pareto(alpha: f64) -> TailSpec {
        TailSpec::new(alpha, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn quantile_pure_pareto_closed_form() {
        let spec = TailSpec::new(2.0, 0.0, 1.0, 1.0).unwrap();
        assert!((spec.quantile(0.25) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn quantile_boundary_approaches_t_min() {
        let spec = TailSpec::new(1.0, 0.0, 1.0, 1.0).unwrap();
        let t = spec.quantile(1.0 - 1e-12);
        assert!((t - 1.0).abs() < 1e-9);
    }

    #[test]
    fn quantile_log_corrected_bisection() {
        // (1 + log t) t^(-1/2) = 0.01, t_min = e
        let spec = TailSpec::new(0.5, 1.0, 1.0, std::f64::consts::E).unwrap();
        let t = spec.quantile(0.01);
        assert!((spec.tail_survival(t) - 0.01).abs() <= 1e-12);
    }

    #[test]
    fn quantile_survival_round_trip() {
        let spec = TailSpec::new(0.7, 0.5, 1.3, 3.0).unwrap();
        for i in 1..40 {
            let u = i as f64 / 40.0;
            let t = spec.quantile(u);
            assert!(
                (spec.survival(t) - u).abs() < 1e-10,
                "u = {u}, t = {t}, survival = {}",
                spec.survival(t)
            );
        }
    }

    #[test]
    fn non_monotone_survival_rejected() {
        // Small k_scale keeps the survival below the unit cap while
        // (1+log t)^3 t^(-0.05) is still increasing, so the grid sees a rise.
        assert!(TailSpec::new(0.05, 3.0, 0.01, 1.0).is_err());
    }

    #[test]
    fn regime_classification() {
        // Both tails at alpha = 0.7, gamma = 0: both alpha-moments diverge.
        let law = ConductanceLaw::new(pareto(0.7), pareto(0.7), 0.5).unwrap();
        assert_eq!(law.regime(), Regime::WellAndWalls);
        // Upper tail lighter: E[c^alpha] finite, E[1/c^alpha] infinite.
        let law = ConductanceLaw::new(pareto(2.0), pareto(0.7), 0.5).unwrap();
        assert_eq!(law.regime(), Regime::SimpleTraps);
        assert!(law.moment_upper_alpha().is_some());
        assert!(law.moment_lower_alpha().is_none());
    }

    #[test]
    fn equal_exponent_gamma_minus_one_rejected() {
        let up = TailSpec::new(0.5, -1.0, 1.0, 2.0).unwrap();
        let lo = TailSpec::new(0.5, 0.0, 1.0, 2.0).unwrap();
        assert!(ConductanceLaw::new(up, lo, 0.5).is_err());
    }

    #[test]
    fn ballistic_requires_flag() {
        assert!(ConductanceLaw::new(pareto(2.0), pareto(3.0), 0.5).is_err());
        assert!(ConductanceLaw::with_ballistic_flag(pareto(2.0), pareto(3.0), 0.5, true).is_ok());
    }

    #[test]
    fn environment_deterministic_in_seed() {
        let law = ConductanceLaw::new(pareto(0.7), pareto(0.9), 0.5).unwrap();
        let a = Environment::sample(&law, 0.5, -10, 10, 42).unwrap();
        let b = Environment::sample(&law, 0.5, -10, 10, 42).unwrap();
        assert_eq!(a.conductances(), b.conductances());
        let c = Environment::sample(&law, 0.5, -10, 10, 43).unwrap();
        assert_ne!(a.conductances(), c.conductances());
    }

    #[test]
    fn extension_preserves_existing_sites() {
        let law = ConductanceLaw::new(pareto(0.7), pareto(0.9), 0.5).unwrap();
        let mut a = Environment::sample(&law, 0.5, -10, 10, 42).unwrap();
        let before = a.c(-10).unwrap();
        a.extend_left(&law, -40).unwrap();
        assert_eq!(a.left(), -40);
        assert_eq!(a.c(-10).unwrap(), before);
        // Extended sites equal a directly-sampled wider window.
        let wide = Environment::sample(&law, 0.5, -40, 10, 42).unwrap();
        assert_eq!(a.conductances(), wide.conductances());
    }

    #[test]
    fn empirical_tail_matches_survival() {
        // Pure-Pareto upper tail alpha = 2: P(c > 2) = 0.25, exercised through
        // the mixture with a negligible lower side.
        let law = ConductanceLaw::new(pareto(2.0), pareto(0.5), 0.999_999).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000usize;
        let mut hits = 0usize;
        for _ in 0..n {
            if law.sample(&mut rng) > 2.0 {
                hits += 1;
            }
        }
        let p_hat = hits as f64 / n as f64;
        let p = law.survival_c(2.0);
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((p_hat - p).abs() < 3.0 * sigma, "p_hat = {p_hat}, p = {p}");
    }

    #[test]
    fn mixture_symmetry_at_cut() {
        let law = ConductanceLaw::new(pareto(0.7), pareto(0.7), 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000usize;
        let above = (0..n).filter(|_| law.sample(&mut rng) >= 1.0).count();
        let p_hat = above as f64 / n as f64;
        let sigma = (0.25 / n as f64).sqrt();
        assert!((p_hat - 0.5).abs() < 3.0 * sigma, "p_hat = {p_hat}");
    }

    #[test]
    fn omega_examples() {
        let env = Environment::from_conductances(2f64.ln(), -2, vec![1.0; 6], 0).unwrap();
        // c == 1: tilt cancels constant conductances, omega = 1/(1+e^-lambda) = 2/3.
        assert!((env.omega(0).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let env0 = Environment::from_conductances(1e-12, -2, vec![1.0; 6], 0).unwrap();
        assert!((env0.omega(0).unwrap() - 0.5).abs() < 1e-9);
        // c_{x-1} = 3, c_x = 1, lambda ~ 0 -> omega = 0.25.
        let env3 = Environment::from_conductances(1e-15, -1, vec![3.0, 1.0, 1.0], 0).unwrap();
        assert!((env3.omega(0).unwrap() - 0.25).abs() < 1e-9);
    }

    #[test]
    fn rho_examples_and_telescoping() {
        let lambda = 2f64.ln();
        let env = Environment::from_conductances(lambda, -1, vec![4.0, 1.0, 1.0, 1.0], 0).unwrap();
        assert!((env.rho(0).unwrap() - 2.0).abs() < 1e-12);
        let env1 = Environment::from_conductances(lambda, -1, vec![1.0; 6], 0).unwrap();
        assert!((env1.rho_k(0, 2).unwrap() - 0.125).abs() < 1e-12);

        let law = ConductanceLaw::new(pareto(0.7), pareto(0.9), 0.5).unwrap();
        let env = Environment::sample(&law, 0.6, -5, 20, 99).unwrap();
        for x in 0..10 {
            let direct = env.rho_k(x, 2).unwrap();
            let product = env.rho(x).unwrap() * env.rho(x + 1).unwrap() * env.rho(x + 2).unwrap();
            assert!((direct - product).abs() <= 1e-12 * product.abs());
            // omega/rho identity
            let w = env.omega(x).unwrap();
            assert!(((1.0 - w) / w - env.rho(x).unwrap()).abs() < 1e-12 * env.rho(x).unwrap());
        }
    }

    #[test]
    fn boundary_errors() {
        let env = Environment::from_conductances(0.5, -2, vec![1.0; 5], 0).unwrap();
        assert!(env.omega(-2).is_err());
        assert!(env.rho_k(1, 5).is_err());
        assert!(env.c(3).is_err());
    }
}
