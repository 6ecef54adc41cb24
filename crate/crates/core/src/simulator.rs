//! Finite-size simulation of the two access regimes over one gain realization.
//!
//! Transmitters arrive in index order and each water-fills its own power given
//! what the earlier arrivals left behind:
//!
//! * **partition**: a channel carrying power for one transmitter is no longer
//!   accessible to later arrivals;
//! * **sharing**: every transmitter may use every channel, the receiver decodes
//!   with successive interference cancelation in reverse arrival order, so
//!   transmitter `k` sees noise plus the received power of transmitters
//!   `1..k-1`.
//!
//! A bandwidth-limiting (BL) policy optionally caps the number of channels a
//! transmitter may water-fill over.

use std::cmp::Ordering;
use std::fmt;

use crate::channel_model::{GainMatrix, NetworkConfig};
use crate::error::{Error, Result};
use crate::waterfill::{effective_noise, water_fill, Candidate, WaterfillProblem};

/// Relative size below which a water-filled power counts as zero.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    Partition,
    Sharing,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Partition => "partition",
            Scenario::Sharing => "sharing",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "partition" | "1" => Ok(Scenario::Partition),
            "sharing" | "2" => Ok(Scenario::Sharing),
            other => Err(Error::invalid(format!(
                "unknown scenario `{other}` (expected partition or sharing)"
            ))),
        }
    }
}

/// Cap on the number of channels a single transmitter may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BlPolicy(Option<usize>);

impl BlPolicy {
    pub const NONE: BlPolicy = BlPolicy(None);

    /// A cap of `limit` channels; must satisfy `1 <= limit <= num_channels`.
    pub fn cap(limit: usize, num_channels: usize) -> Result<Self> {
        if limit == 0 || limit > num_channels {
            return Err(Error::invalid(format!(
                "BL cap must be in 1..={num_channels}, got {limit}"
            )));
        }
        Ok(BlPolicy(Some(limit)))
    }

    pub fn limit(self) -> Option<usize> {
        self.0
    }
}

/// How a transmitter's total power budget relates to `p_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BudgetRule {
    /// `|Z_k| * p_max`: average power `p_max` per accessible channel.
    #[default]
    PerAccessibleChannel,
    /// `N * p_max` regardless of how many channels are accessible.
    FullBand,
}

impl BudgetRule {
    pub fn total_budget(self, accessible: usize, config: &NetworkConfig) -> f64 {
        match self {
            BudgetRule::PerAccessibleChannel => accessible as f64 * config.p_max(),
            BudgetRule::FullBand => config.num_channels() as f64 * config.p_max(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BudgetRule::PerAccessibleChannel => "accessible",
            BudgetRule::FullBand => "full-band",
        }
    }
}

impl std::str::FromStr for BudgetRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accessible" => Ok(BudgetRule::PerAccessibleChannel),
            "full-band" => Ok(BudgetRule::FullBand),
            other => Err(Error::invalid(format!(
                "unknown budget rule `{other}` (expected accessible or full-band)"
            ))),
        }
    }
}

/// Per-transmitter outcome. Per-channel vectors have length `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitterResult {
    /// Zero-based arrival index.
    pub index: usize,
    /// Channels the transmitter water-filled over (`Z_k`), ascending.
    pub accessible: Vec<usize>,
    /// Channels free on arrival, before any BL cap was applied.
    pub available: usize,
    /// Channels carrying positive power (`L_k`), ascending.
    pub used: Vec<usize>,
    pub powers: Vec<f64>,
    /// Noise plus interference `alpha_{k,n}` seen by this transmitter.
    pub noise: Vec<f64>,
    pub sinr: Vec<f64>,
    /// `None` when nothing was accessible.
    pub water_level: Option<f64>,
    pub rate: f64,
    pub rate_per_channel: f64,
    pub accessible_fraction: f64,
    pub spectral_efficiency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub scenario: Scenario,
    pub transmitters: Vec<TransmitterResult>,
    pub nse: f64,
}

/// SINR `p g / alpha`.
pub fn sinr(power: f64, gain: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!(
            "noise-plus-interference must be positive, got {alpha}"
        )));
    }
    Ok(power * gain / alpha)
}

/// Sum of `log2(1 + sinr)` over unit-bandwidth channels, in bits/s.
pub fn rate(sinrs: &[f64]) -> f64 {
    sinrs.iter().map(|&g| g.ln_1p()).sum::<f64>() / std::f64::consts::LN_2
}

/// Rate averaged over the accessible channels; zero when none are accessible.
pub fn rate_per_channel(rate: f64, accessible: usize) -> f64 {
    if accessible == 0 {
        0.0
    } else {
        rate / accessible as f64
    }
}

/// `sum_k Omega_k * Rbar_k` over `(Omega_k, Rbar_k)` pairs.
pub fn network_spectral_efficiency(terms: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    terms.into_iter().map(|(omega, r)| omega * r).sum()
}

/// The `min(L, |available|)` highest-scoring channels (ties to the lower id),
/// or `available` unchanged without a cap. `scores` is indexed by channel id.
pub fn select_subset(available: &[usize], scores: &[f64], bl: BlPolicy) -> Vec<usize> {
    let mut chosen: Vec<usize> = match bl.limit() {
        Some(limit) if limit < available.len() => {
            let mut ranked = available.to_vec();
            ranked.sort_by(|&a, &b| match scores[b].total_cmp(&scores[a]) {
                Ordering::Equal => a.cmp(&b),
                o => o,
            });
            ranked.truncate(limit);
            ranked
        }
        _ => available.to_vec(),
    };
    chosen.sort_unstable();
    chosen
}

fn check_dimensions(gains: &GainMatrix, config: &NetworkConfig) -> Result<()> {
    if gains.num_transmitters() != config.num_transmitters()
        || gains.num_channels() != config.num_channels()
    {
        return Err(Error::invalid(format!(
            "gain matrix is {}x{} but the configuration expects {}x{}",
            gains.num_transmitters(),
            gains.num_channels(),
            config.num_transmitters(),
            config.num_channels()
        )));
    }
    Ok(())
}

/// Water-fills transmitter `k` over `accessible` against noise profile `noise`.
fn serve(
    k: usize,
    gains: &[f64],
    noise: Vec<f64>,
    accessible: Vec<usize>,
    available: usize,
    config: &NetworkConfig,
    budget: BudgetRule,
) -> Result<TransmitterResult> {
    let n_total = config.num_channels();
    let mut powers = vec![0.0; n_total];
    let mut water_level = None;
    let mut used = Vec::new();

    let mut candidates = Vec::with_capacity(accessible.len());
    for &n in &accessible {
        if let Some(nu) = effective_noise(noise[n], gains[n])? {
            candidates.push(Candidate { channel: n, noise: nu });
        }
    }
    if !candidates.is_empty() {
        let problem =
            WaterfillProblem::new(candidates, budget.total_budget(accessible.len(), config))?
                .with_support_threshold(SUPPORT_THRESHOLD * config.p_max());
        let solution = water_fill(&problem);
        for &(n, p) in &solution.powers {
            powers[n] = p;
        }
        water_level = Some(solution.water_level);
        used = solution.support;
    }

    let sinrs = powers
        .iter()
        .zip(gains)
        .zip(&noise)
        .map(|((&p, &g), &a)| sinr(p, g, a))
        .collect::<Result<Vec<f64>>>()?;
    let total_rate = rate(&sinrs);
    let r_bar = rate_per_channel(total_rate, accessible.len());
    let omega = accessible.len() as f64 / n_total as f64;

    Ok(TransmitterResult {
        index: k,
        accessible,
        available,
        used,
        powers,
        noise,
        sinr: sinrs,
        water_level,
        rate: total_rate,
        rate_per_channel: r_bar,
        accessible_fraction: omega,
        spectral_efficiency: omega * r_bar,
    })
}

fn outcome(scenario: Scenario, transmitters: Vec<TransmitterResult>) -> ScenarioOutcome {
    let nse = network_spectral_efficiency(
        transmitters
            .iter()
            .map(|t| (t.accessible_fraction, t.rate_per_channel)),
    );
    ScenarioOutcome {
        scenario,
        transmitters,
        nse,
    }
}

/// Spectral partition with the default budget rule.
pub fn run_partition(
    gains: &GainMatrix,
    config: &NetworkConfig,
    bl: BlPolicy,
) -> Result<ScenarioOutcome> {
    run_partition_with(gains, config, bl, BudgetRule::default())
}

pub fn run_partition_with(
    gains: &GainMatrix,
    config: &NetworkConfig,
    bl: BlPolicy,
    budget: BudgetRule,
) -> Result<ScenarioOutcome> {
    check_dimensions(gains, config)?;
    let n_total = config.num_channels();
    let mut claimed = vec![false; n_total];
    let mut transmitters = Vec::with_capacity(config.num_transmitters());

    for k in 0..config.num_transmitters() {
        let row = gains.row(k);
        let available: Vec<usize> = (0..n_total).filter(|&n| !claimed[n]).collect();
        let accessible = select_subset(&available, row, bl);
        let noise = vec![config.noise_variance(); n_total];
        let result = serve(k, row, noise, accessible, available.len(), config, budget)?;
        for &n in &result.used {
            claimed[n] = true;
        }
        transmitters.push(result);
    }
    Ok(outcome(Scenario::Partition, transmitters))
}

/// Spectral sharing with SIC with the default budget rule.
pub fn run_sharing(
    gains: &GainMatrix,
    config: &NetworkConfig,
    bl: BlPolicy,
) -> Result<ScenarioOutcome> {
    run_sharing_with(gains, config, bl, BudgetRule::default())
}

pub fn run_sharing_with(
    gains: &GainMatrix,
    config: &NetworkConfig,
    bl: BlPolicy,
    budget: BudgetRule,
) -> Result<ScenarioOutcome> {
    check_dimensions(gains, config)?;
    let n_total = config.num_channels();
    let all: Vec<usize> = (0..n_total).collect();
    let mut interference = vec![config.noise_variance(); n_total];
    let mut transmitters = Vec::with_capacity(config.num_transmitters());

    for k in 0..config.num_transmitters() {
        let row = gains.row(k);
        let scores: Vec<f64> = row.iter().zip(&interference).map(|(g, a)| g / a).collect();
        let accessible = select_subset(&all, &scores, bl);
        let result = serve(
            k,
            row,
            interference.clone(),
            accessible,
            n_total,
            config,
            budget,
        )?;
        for n in 0..n_total {
            interference[n] += result.powers[n] * row[n];
        }
        transmitters.push(result);
    }
    Ok(outcome(Scenario::Sharing, transmitters))
}

pub fn run_scenario(
    scenario: Scenario,
    gains: &GainMatrix,
    config: &NetworkConfig,
    bl: BlPolicy,
    budget: BudgetRule,
) -> Result<ScenarioOutcome> {
    match scenario {
        Scenario::Partition => run_partition_with(gains, config, bl, budget),
        Scenario::Sharing => run_sharing_with(gains, config, bl, budget),
    }
}
