//! Single-transmitter water-filling over an arbitrary set of parallel channels.
//!
//! Maximizes `sum_n log2(1 + p_n / nu_n)` subject to `sum_n p_n <= B`, where
//! `nu_n` is the effective noise (noise plus interference over gain) of
//! channel `n`. The optimum is `p_n = max(0, beta - nu_n)` with the water level
//! `beta` chosen so that the budget is exhausted.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// One channel offered to the water-filler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub channel: usize,
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillProblem {
    candidates: Vec<Candidate>,
    budget: f64,
    support_threshold: f64,
}

impl WaterfillProblem {
    pub fn new(candidates: Vec<Candidate>, budget: f64) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::EmptyCandidateSet);
        }
        if !(budget > 0.0) || !budget.is_finite() {
            return Err(Error::NonpositiveBudget(budget));
        }
        if let Some(c) = candidates
            .iter()
            .find(|c| !(c.noise > 0.0 && c.noise.is_finite()))
        {
            return Err(Error::invalid(format!(
                "effective noise of channel {} must be positive and finite, got {}",
                c.channel, c.noise
            )));
        }
        let mut ids: Vec<usize> = candidates.iter().map(|c| c.channel).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("candidate channel ids must be distinct"));
        }
        Ok(Self {
            candidates,
            budget,
            support_threshold: 0.0,
        })
    }

    /// Convenience constructor numbering channels `0..len`.
    pub fn from_noises(noises: &[f64], budget: f64) -> Result<Self> {
        let candidates = noises
            .iter()
            .enumerate()
            .map(|(channel, &noise)| Candidate { channel, noise })
            .collect();
        Self::new(candidates, budget)
    }

    /// Powers at or below `threshold` are left out of the solution's support.
    pub fn with_support_threshold(mut self, threshold: f64) -> Self {
        self.support_threshold = threshold.max(0.0);
        self
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillSolution {
    pub water_level: f64,
    /// `(channel, power)` in the candidate order of the problem.
    pub powers: Vec<(usize, f64)>,
    /// Channels with power above the support threshold, ascending.
    pub support: Vec<usize>,
}

impl WaterfillSolution {
    pub fn power_of(&self, channel: usize) -> Option<f64> {
        self.powers
            .iter()
            .find(|(c, _)| *c == channel)
            .map(|&(_, p)| p)
    }

    pub fn total_power(&self) -> f64 {
        self.powers.iter().map(|&(_, p)| p).sum()
    }
}

/// Exact water-filling by sorting the effective noises.
///
/// With noises sorted ascending (ties by channel id) and prefix sums `S_m`,
/// the level `beta_m = (B + S_m) / m` exceeds `nu_m` exactly for a prefix
/// `m = 1..m*` of the candidates; `beta_{m*}` is the water level.
pub fn water_fill(problem: &WaterfillProblem) -> WaterfillSolution {
    let mut order: Vec<&Candidate> = problem.candidates.iter().collect();
    order.sort_by(|a, b| match a.noise.total_cmp(&b.noise) {
        Ordering::Equal => a.channel.cmp(&b.channel),
        o => o,
    });

    let mut prefix = 0.0;
    let mut level = f64::NAN;
    for (i, c) in order.iter().enumerate() {
        let candidate_level = (problem.budget + prefix + c.noise) / (i + 1) as f64;
        if i > 0 && candidate_level <= c.noise {
            break;
        }
        prefix += c.noise;
        level = candidate_level;
    }

    let powers: Vec<(usize, f64)> = problem
        .candidates
        .iter()
        .map(|c| (c.channel, (level - c.noise).max(0.0)))
        .collect();
    let mut support: Vec<usize> = powers
        .iter()
        .filter(|&&(_, p)| p > problem.support_threshold)
        .map(|&(c, _)| c)
        .collect();
    support.sort_unstable();

    WaterfillSolution {
        water_level: level,
        powers,
        support,
    }
}

/// Effective noise `alpha / g`; `None` marks a channel with zero gain.
pub fn effective_noise(alpha: f64, gain: f64) -> Result<Option<f64>> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!(
            "noise-plus-interference must be positive, got {alpha}"
        )));
    }
    if gain.is_nan() || gain < 0.0 {
        return Err(Error::invalid(format!(
            "channel gain must be nonnegative, got {gain}"
        )));
    }
    Ok((gain > 0.0).then(|| alpha / gain))
}
