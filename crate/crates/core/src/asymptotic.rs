//! Large-system limits (`K, N -> infinity` at a fixed ratio) of the water-filling
//! network, where sample averages over channels become expectations under the
//! unit-exponential gain law.
//!
//! Partition: every transmitter water-fills with the same level `beta*`, leaves
//! a fraction `Omega = F(sigma^2 / beta*)` of its channels unused, and the
//! network efficiency is a geometric series in `Omega`.
//!
//! Sharing with SIC: transmitter `k` water-fills against the level left by
//! transmitter `k - 1`, giving an increasing chain of water levels
//! `beta*_1 <= beta*_2 <= ...`. Level `k` is defined by a `k`-fold nested
//! expectation; it is evaluated by nested adaptive quadrature up to
//! `quad_depth_limit` and by Monte Carlo with a fixed sample set beyond.

use crate::channel_model::{derive_trial_seed, next_unit, ExponentialGain};
use crate::error::{Error, Result};
use crate::quadrature::{try_integrate_exp_weighted, QuadratureOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticConfig {
    pub noise_variance: f64,
    pub p_max: f64,
    pub num_transmitters: usize,
    pub quad_rel_tol: f64,
    /// Upper integration limit replacing infinity.
    pub tail_cutoff: f64,
    pub mc_samples: usize,
    /// Deepest chain index evaluated by nested quadrature.
    pub quad_depth_limit: usize,
    pub mc_seed: u64,
    pub max_intervals: usize,
}

impl AsymptoticConfig {
    pub fn new(noise_variance: f64, p_max: f64, num_transmitters: usize) -> Result<Self> {
        let cfg = Self {
            noise_variance,
            p_max,
            num_transmitters,
            quad_rel_tol: 1e-9,
            tail_cutoff: 50.0,
            mc_samples: 200_000,
            quad_depth_limit: 3,
            mc_seed: 0x5eed,
            max_intervals: 2000,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_snr_db(num_transmitters: usize, snr_db: f64) -> Result<Self> {
        Self::new(1.0, crate::channel_model::db_to_linear(snr_db), num_transmitters)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_variance > 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::invalid("noise variance must be positive"));
        }
        if !(self.p_max > 0.0 && self.p_max.is_finite()) {
            return Err(Error::invalid("p_max must be positive"));
        }
        if self.num_transmitters == 0 {
            return Err(Error::invalid("number of transmitters must be at least 1"));
        }
        if !(self.quad_rel_tol > 0.0 && self.quad_rel_tol < 1.0) {
            return Err(Error::invalid("quadrature tolerance must be in (0, 1)"));
        }
        if !((-self.tail_cutoff).exp() < self.quad_rel_tol) {
            return Err(Error::invalid(format!(
                "tail cutoff {} too small for tolerance {}",
                self.tail_cutoff, self.quad_rel_tol
            )));
        }
        if self.mc_samples == 0 {
            return Err(Error::invalid("Monte Carlo sample count must be positive"));
        }
        if self.quad_depth_limit == 0 {
            return Err(Error::invalid("quadrature depth limit must be at least 1"));
        }
        Ok(())
    }

    /// Options for the integral at nesting depth `depth` (0 = outermost).
    /// Inner integrals are solved an order of magnitude tighter per level so
    /// that their error does not swamp the outer estimate.
    fn quadrature(&self, depth: usize) -> QuadratureOptions {
        QuadratureOptions {
            rel_tol: (self.quad_rel_tol * 0.1f64.powi(depth as i32)).max(1e-14),
            abs_tol: 0.0,
            max_intervals: self.max_intervals,
        }
    }
}

/// `int_a^inf f(x) e^{-x} dx`, truncated at the configured tail cutoff.
pub fn integrate_semi_infinite<F>(mut f: F, a: f64, cfg: &AsymptoticConfig) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    try_integrate_exp_weighted(|x| Ok(f(x)), a, cfg.tail_cutoff, &cfg.quadrature(0))
}

/// Bisects a nondecreasing `h` with `h(lo) < 0 <= h(hi)` to relative width `rel`.
fn bisect<H>(mut h: H, mut lo: f64, mut hi: f64, rel: f64) -> Result<f64>
where
    H: FnMut(f64) -> Result<f64>,
{
    for _ in 0..400 {
        if hi - lo <= rel * hi {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if h(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence(format!(
        "bisection stalled on [{lo}, {hi}]"
    )))
}

/// Finds `[lo, hi]` with `h(lo) < 0 <= h(hi)` by halving/doubling from `start`.
fn bracket<H>(mut h: H, start: f64) -> Result<(f64, f64)>
where
    H: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (start, start);
    let mut tries = 0;
    if h(start)? < 0.0 {
        while h(hi)? < 0.0 {
            lo = hi;
            hi *= 2.0;
            tries += 1;
            if tries > 1100 {
                return Err(Error::NonConvergence("root bracket expansion failed".into()));
            }
        }
    } else {
        while h(lo)? >= 0.0 {
            hi = lo;
            lo *= 0.5;
            tries += 1;
            if tries > 1100 || lo == 0.0 {
                return Err(Error::NonConvergence("root bracket contraction failed".into()));
            }
        }
    }
    Ok((lo, hi))
}

const ROOT_REL_WIDTH: f64 = 1e-10;

/// `G(beta) = int_{sigma^2/beta}^inf (beta - sigma^2 / x) dF(x) - p_max`.
pub fn power_residual(beta: f64, cfg: &AsymptoticConfig) -> Result<f64> {
    let s2 = cfg.noise_variance;
    let spent = integrate_semi_infinite(|x| beta - s2 / x, s2 / beta, cfg)?;
    Ok(spent - cfg.p_max)
}

/// Water level of a lone transmitter water-filling over a continuum of channels.
pub fn solve_beta_star(cfg: &AsymptoticConfig) -> Result<f64> {
    let (lo, hi) = bracket(|b| power_residual(b, cfg), cfg.noise_variance + cfg.p_max)?;
    bisect(|b| power_residual(b, cfg), lo, hi, ROOT_REL_WIDTH)
}

/// Per-channel rate `int_{sigma^2/beta}^inf log2(beta x / sigma^2) dF(x)`.
pub fn rate_inf(beta: f64, cfg: &AsymptoticConfig) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::invalid(format!("water level must be positive, got {beta}")));
    }
    let s2 = cfg.noise_variance;
    integrate_semi_infinite(|x| (beta * x / s2).log2(), s2 / beta, cfg)
}

/// Probability that a channel is left unused by one water-filling transmitter,
/// i.e. that its gain falls below `sigma^2 / beta`.
pub fn omega_inf(beta: f64, noise_variance: f64) -> f64 {
    ExponentialGain.cdf(noise_variance / beta)
}

/// `sum_{k<K} Omega^k * Rbar`, using the series limit `K * Rbar` near `Omega = 1`.
pub fn nse_partition_inf(num_transmitters: usize, omega: f64, rate: f64) -> f64 {
    if (1.0 - omega).abs() < 1e-9 {
        num_transmitters as f64 * rate
    } else {
        (1.0 - omega.powi(num_transmitters as i32)) / (1.0 - omega) * rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionAsymptotics {
    pub beta_star: f64,
    pub omega: f64,
    pub rate: f64,
    pub nse: f64,
}

pub fn partition_asymptotics(cfg: &AsymptoticConfig) -> Result<PartitionAsymptotics> {
    let beta_star = solve_beta_star(cfg)?;
    let omega = omega_inf(beta_star, cfg.noise_variance);
    let rate = rate_inf(beta_star, cfg)?;
    Ok(PartitionAsymptotics {
        beta_star,
        omega,
        rate,
        nse: nse_partition_inf(cfg.num_transmitters, omega, rate),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChainMethod {
    Quadrature,
    MonteCarlo,
}

impl ChainMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ChainMethod::Quadrature => "quadrature",
            ChainMethod::MonteCarlo => "monte-carlo",
        }
    }
}

/// Asymptotic water levels and per-channel rates of the SIC sharing scenario,
/// indexed by arrival order (index 0 is transmitter 1).
#[derive(Debug, Clone, PartialEq)]
pub struct WaterLevelChain {
    pub levels: Vec<f64>,
    pub rates: Vec<f64>,
    pub methods: Vec<ChainMethod>,
    /// Standard errors; zero on the quadrature path.
    pub level_stderr: Vec<f64>,
    pub rate_stderr: Vec<f64>,
}

impl WaterLevelChain {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

/// The nested region `lambda_1 >= sigma^2 / beta_1`,
/// `lambda_j >= beta_{j-1} lambda_{j-1} / beta_j` for `j < k`, with the last
/// variable's lower limit and integrand supplied by the caller.
struct NestedChain<'a> {
    /// `beta*_1 .. beta*_{k-1}`.
    previous: &'a [f64],
    cfg: &'a AsymptoticConfig,
}

impl NestedChain<'_> {
    fn depth(&self) -> usize {
        self.previous.len() + 1
    }

    /// Integral over `lambda_{j+1} .. lambda_k` given `lambda_j = outer`.
    fn integrate_from(
        &self,
        j: usize,
        outer: f64,
        last_lower: &dyn Fn(f64) -> f64,
        payload: &dyn Fn(f64, f64) -> f64,
    ) -> Result<f64> {
        let k = self.depth();
        let lower = if j == 0 {
            self.cfg.noise_variance / self.previous[0]
        } else if j < k - 1 {
            self.previous[j - 1] * outer / self.previous[j]
        } else {
            last_lower(outer)
        };
        let opts = self.cfg.quadrature(j);
        if j < k - 1 {
            try_integrate_exp_weighted(
                |x| self.integrate_from(j + 1, x, last_lower, payload),
                lower,
                self.cfg.tail_cutoff,
                &opts,
            )
        } else {
            try_integrate_exp_weighted(|x| Ok(payload(outer, x)), lower, self.cfg.tail_cutoff, &opts)
        }
    }

    /// Expected power of transmitter `k` at water level `beta`.
    fn power(&self, beta: f64) -> Result<f64> {
        let prev = *self.previous.last().expect("k >= 2");
        self.integrate_from(
            0,
            f64::NAN,
            &|outer| prev * outer / beta,
            &|outer, x| (beta - prev * outer / x).max(0.0),
        )
    }

    /// Expected per-channel rate of transmitter `k` at water level `beta`.
    fn rate(&self, beta: f64) -> Result<f64> {
        let prev = *self.previous.last().expect("k >= 2");
        self.integrate_from(
            0,
            f64::NAN,
            &|outer| prev * outer / beta,
            &|outer, x| (beta * x / (prev * outer)).log2().max(0.0),
        )
    }
}

fn check_previous(previous: &[f64]) -> Result<()> {
    if previous.is_empty() {
        return Err(Error::invalid("chain level k >= 2 needs the earlier levels"));
    }
    if previous.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
        return Err(Error::invalid("water levels must be positive and finite"));
    }
    Ok(())
}

/// Water level `beta*_k` (`k = previous.len() + 1`) by nested quadrature.
pub fn chain_level_quadrature(previous: &[f64], cfg: &AsymptoticConfig) -> Result<f64> {
    check_previous(previous)?;
    let chain = NestedChain { previous, cfg };
    let h = |b: f64| Ok(chain.power(b)? - cfg.p_max);
    let (lo, hi) = bracket(h, *previous.last().unwrap())?;
    bisect(h, lo, hi, ROOT_REL_WIDTH)
}

/// Power-constraint residual of chain level `k = previous.len() + 1` at `beta`.
pub fn chain_power_residual(previous: &[f64], beta: f64, cfg: &AsymptoticConfig) -> Result<f64> {
    check_previous(previous)?;
    Ok(NestedChain { previous, cfg }.power(beta)? - cfg.p_max)
}

/// Rate of chain level `k = previous.len() + 1` with water level `beta`, by quadrature.
pub fn chain_rate_quadrature(previous: &[f64], beta: f64, cfg: &AsymptoticConfig) -> Result<f64> {
    check_previous(previous)?;
    NestedChain { previous, cfg }.rate(beta)
}

/// Common random numbers for chain level `k`: the offsets
/// `c = beta_{k-1} lambda_{k-1} / lambda_k` of the samples lying in the nested
/// region, out of `total` draws. Both the power `(beta - c)^+` and the rate
/// `log2(beta / c)^+` depend on a sample only through `c`.
#[derive(Debug, Clone)]
pub struct ChainSamples {
    offsets: Vec<f64>,
    total: usize,
}

impl ChainSamples {
    pub fn draw(previous: &[f64], noise_variance: f64, samples: usize, seed: u64) -> Result<Self> {
        check_previous(previous)?;
        if samples == 0 {
            return Err(Error::invalid("Monte Carlo sample count must be positive"));
        }
        let k = previous.len() + 1;
        let mut rng = derive_trial_seed(seed, k as u64).rng();
        let mut lambda = vec![0.0; k];
        let mut offsets = Vec::with_capacity(samples);
        for _ in 0..samples {
            for l in lambda.iter_mut() {
                *l = ExponentialGain.quantile(next_unit(&mut rng));
            }
            let mut feasible = lambda[0] >= noise_variance / previous[0];
            for j in 1..k - 1 {
                feasible &= lambda[j] * previous[j] >= previous[j - 1] * lambda[j - 1];
            }
            if feasible && lambda[k - 1] > 0.0 {
                offsets.push(previous[k - 2] * lambda[k - 2] / lambda[k - 1]);
            }
        }
        Ok(Self {
            offsets,
            total: samples,
        })
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn feasible(&self) -> usize {
        self.offsets.len()
    }

    /// Sample mean and standard error of `sum g(c) / total`, zeros included.
    fn mean_and_stderr(&self, g: impl Fn(f64) -> f64) -> (f64, f64) {
        let n = self.total as f64;
        let (mut s, mut s2) = (0.0, 0.0);
        for &c in &self.offsets {
            let v = g(c);
            s += v;
            s2 += v * v;
        }
        let mean = s / n;
        let var = if self.total > 1 {
            ((s2 - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        (mean, (var / n).sqrt())
    }

    pub fn power(&self, beta: f64) -> (f64, f64) {
        self.mean_and_stderr(|c| (beta - c).max(0.0))
    }

    pub fn rate(&self, beta: f64) -> (f64, f64) {
        self.mean_and_stderr(|c| (beta / c).log2().max(0.0))
    }

    /// Fraction of samples with positive power at `beta`, the slope of `power`.
    fn slope(&self, beta: f64) -> f64 {
        self.offsets.iter().filter(|&&c| c < beta).count() as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloLevel {
    pub level: f64,
    /// Standard error of the level, propagated through the estimator's slope.
    pub level_stderr: f64,
    pub power_stderr: f64,
}

/// Solves `mean (beta - c)^+ = p_max` on a fixed sample set.
///
/// The estimator is piecewise linear and nondecreasing in `beta`, so bisection
/// applies. Fails with `McVarianceTooHigh` when no sample is feasible or when
/// the estimator changes by less than three standard errors across the root
/// bracket.
pub fn chain_level_monte_carlo(
    samples: &ChainSamples,
    previous: &[f64],
    p_max: f64,
) -> Result<MonteCarloLevel> {
    check_previous(previous)?;
    if samples.feasible() == 0 {
        return Err(Error::McVarianceTooHigh(format!(
            "none of {} samples fall inside the integration region",
            samples.total()
        )));
    }
    let h = |b: f64| Ok(samples.power(b).0 - p_max);
    let (lo, hi) = bracket(h, *previous.last().unwrap())?;
    let (h_lo, _) = samples.power(lo);
    let (h_hi, se_hi) = samples.power(hi);
    if h_hi - h_lo < 3.0 * se_hi {
        return Err(Error::McVarianceTooHigh(format!(
            "estimator moves by {:.3e} across [{lo:.6e}, {hi:.6e}], below 3 standard errors ({:.3e})",
            h_hi - h_lo,
            3.0 * se_hi
        )));
    }
    let level = bisect(h, lo, hi, ROOT_REL_WIDTH)?;
    let (_, power_stderr) = samples.power(level);
    let slope = samples.slope(level);
    Ok(MonteCarloLevel {
        level,
        level_stderr: if slope > 0.0 { power_stderr / slope } else { f64::INFINITY },
        power_stderr,
    })
}

fn chain_samples(previous: &[f64], cfg: &AsymptoticConfig) -> Result<ChainSamples> {
    ChainSamples::draw(previous, cfg.noise_variance, cfg.mc_samples, cfg.mc_seed)
}

/// Water levels and rates for transmitters `1..=K` of the sharing scenario.
pub fn solve_beta_chain(cfg: &AsymptoticConfig) -> Result<WaterLevelChain> {
    cfg.validate()?;
    let beta1 = solve_beta_star(cfg)?;
    let mut chain = WaterLevelChain {
        levels: vec![beta1],
        rates: vec![rate_inf(beta1, cfg)?],
        methods: vec![ChainMethod::Quadrature],
        level_stderr: vec![0.0],
        rate_stderr: vec![0.0],
    };
    for k in 2..=cfg.num_transmitters {
        let previous = chain.levels.clone();
        if k <= cfg.quad_depth_limit {
            let level = chain_level_quadrature(&previous, cfg)?;
            chain.levels.push(level);
            chain.rates.push(chain_rate_quadrature(&previous, level, cfg)?);
            chain.methods.push(ChainMethod::Quadrature);
            chain.level_stderr.push(0.0);
            chain.rate_stderr.push(0.0);
        } else {
            let samples = chain_samples(&previous, cfg)?;
            let mc = chain_level_monte_carlo(&samples, &previous, cfg.p_max)?;
            let (rate, rate_se) = samples.rate(mc.level);
            chain.levels.push(mc.level);
            chain.rates.push(rate);
            chain.methods.push(ChainMethod::MonteCarlo);
            chain.level_stderr.push(mc.level_stderr);
            chain.rate_stderr.push(rate_se);
        }
    }
    Ok(chain)
}

/// Asymptotic per-channel rate of transmitter `k` (1-based) from a solved chain,
/// with its standard error (zero on the quadrature path).
pub fn rate_k_inf(chain: &WaterLevelChain, k: usize, cfg: &AsymptoticConfig) -> Result<(f64, f64)> {
    if k == 0 || k > chain.len() {
        return Err(Error::invalid(format!(
            "chain holds levels 1..={}, asked for {k}",
            chain.len()
        )));
    }
    if k == 1 {
        return Ok((rate_inf(chain.levels[0], cfg)?, 0.0));
    }
    let previous = &chain.levels[..k - 1];
    let level = chain.levels[k - 1];
    if k <= cfg.quad_depth_limit {
        Ok((chain_rate_quadrature(previous, level, cfg)?, 0.0))
    } else {
        Ok(chain_samples(previous, cfg)?.rate(level))
    }
}

/// Network efficiency of the sharing scenario: every transmitter accesses the
/// whole band, so the per-channel rates simply add up.
pub fn nse_sharing_inf(chain: &WaterLevelChain) -> f64 {
    chain.rates.iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionBlNse {
    pub value: f64,
    /// `K * L > N`: more channels requested than a partition can host.
    pub exceeds_partition: bool,
}

/// `(K L / N) * Rbar` for partition with every transmitter capped at `L` channels.
pub fn nse_partition_bl(
    num_transmitters: usize,
    num_channels: usize,
    limit: usize,
    rate: f64,
) -> Result<PartitionBlNse> {
    if limit == 0 || limit > num_channels {
        return Err(Error::invalid(format!(
            "BL cap must be in 1..={num_channels}, got {limit}"
        )));
    }
    Ok(PartitionBlNse {
        value: (num_transmitters * limit) as f64 / num_channels as f64 * rate,
        exceeds_partition: num_transmitters * limit > num_channels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LRounding {
    /// Smallest integer satisfying the lower bound.
    #[default]
    Ceil,
    Nearest,
}

/// Analytic BL parameter `(N / K) (1 - Omega^K) / (1 - Omega)`, rounded and
/// clamped to `1..=N`.
pub fn optimal_bl(
    num_transmitters: usize,
    num_channels: usize,
    omega: f64,
    rounding: LRounding,
) -> Result<usize> {
    if num_transmitters == 0 || num_channels == 0 {
        return Err(Error::invalid("K and N must be positive"));
    }
    if !(0.0..1.0).contains(&omega) {
        return Err(Error::invalid(format!("Omega must be in [0, 1), got {omega}")));
    }
    let bound = num_channels as f64 / num_transmitters as f64
        * nse_partition_inf(num_transmitters, omega, 1.0);
    let l = match rounding {
        LRounding::Ceil => (bound - 1e-9).ceil(),
        LRounding::Nearest => bound.round(),
    };
    Ok((l.max(1.0) as usize).min(num_channels))
}

/// The two readings of the fraction at which a BL cap starts to bind:
/// `min(Omega, L/N)` with the unused fraction as printed, and
/// `min(1 - Omega, L/N)` with the used fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlBindingFractions {
    pub unused_reading: f64,
    pub used_reading: f64,
}

pub fn bl_binding_fractions(
    beta_star: f64,
    noise_variance: f64,
    limit: usize,
    num_channels: usize,
) -> BlBindingFractions {
    let omega = omega_inf(beta_star, noise_variance);
    let cap = limit as f64 / num_channels as f64;
    BlBindingFractions {
        unused_reading: omega.min(cap),
        used_reading: (1.0 - omega).min(cap),
    }
}
