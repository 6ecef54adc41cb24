//! Seeded Monte Carlo campaigns over the two access scenarios.
//!
//! Trials run in parallel but are always reduced in trial-index order, so a
//! given spec and master seed produce bit-identical tables on every run. All
//! BL caps of a sweep are evaluated on the same per-trial gain matrices.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::asymptotic::{
    optimal_bl, partition_asymptotics, solve_beta_chain, AsymptoticConfig, LRounding,
};
use crate::channel_model::{sample_gains, NetworkConfig, SeedSpec};
use crate::error::{Error, Result};
use crate::simulator::{run_scenario, BlPolicy, BudgetRule, Scenario, ScenarioOutcome};
use crate::table::{Cell, CsvTable, ResultTable, Stat};

pub const DEFAULT_TRIALS: usize = 200;
pub const DEFAULT_CHANNELS: usize = 50;
pub const DEFAULT_SEED: u64 = 42;

pub fn default_loads() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

pub fn default_snrs() -> Vec<f64> {
    vec![0.0, 10.0, 20.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentId {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Custom,
}

impl ExperimentId {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::Fig2 => "fig2",
            ExperimentId::Fig3 => "fig3",
            ExperimentId::Fig4 => "fig4",
            ExperimentId::Fig5 => "fig5",
            ExperimentId::Fig6 => "fig6",
            ExperimentId::Custom => "custom",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fig2" => ExperimentId::Fig2,
            "fig3" => ExperimentId::Fig3,
            "fig4" => ExperimentId::Fig4,
            "fig5" => ExperimentId::Fig5,
            "fig6" => ExperimentId::Fig6,
            "custom" => ExperimentId::Custom,
            other => {
                return Err(Error::invalid(format!(
                    "unknown experiment `{other}` (expected fig2..fig6 or custom)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub id: ExperimentId,
    pub scenarios: Vec<Scenario>,
    /// N for every experiment except the fig2 convergence study.
    pub num_channels: usize,
    /// K where it is not derived from a load (fig2, custom).
    pub num_transmitters: usize,
    /// N values swept by fig2.
    pub channel_grid: Vec<usize>,
    pub loads: Vec<f64>,
    pub snr_db: Vec<f64>,
    /// BL caps to sweep; empty means `1..=N`.
    pub bl_grid: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    pub budget: BudgetRule,
    pub mc_samples: usize,
    pub quad_rel_tol: f64,
}

impl ExperimentSpec {
    /// Default settings for one of the figure studies.
    pub fn preset(id: ExperimentId) -> Self {
        let base = ExperimentSpec {
            id,
            scenarios: vec![Scenario::Partition],
            num_channels: DEFAULT_CHANNELS,
            num_transmitters: 2,
            channel_grid: vec![10, 25, 50],
            loads: default_loads(),
            snr_db: vec![10.0],
            bl_grid: Vec::new(),
            trials: DEFAULT_TRIALS,
            master_seed: DEFAULT_SEED,
            budget: BudgetRule::default(),
            mc_samples: 200_000,
            quad_rel_tol: 1e-9,
        };
        match id {
            ExperimentId::Fig2 => ExperimentSpec {
                scenarios: vec![Scenario::Sharing],
                snr_db: vec![20.0],
                ..base
            },
            ExperimentId::Fig3 => ExperimentSpec {
                scenarios: vec![Scenario::Partition, Scenario::Sharing],
                ..base
            },
            ExperimentId::Fig4 | ExperimentId::Custom => base,
            ExperimentId::Fig5 => ExperimentSpec {
                snr_db: default_snrs(),
                ..base
            },
            ExperimentId::Fig6 => ExperimentSpec {
                scenarios: vec![Scenario::Sharing],
                snr_db: default_snrs(),
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.scenarios.is_empty() {
            return Err(Error::invalid("at least one scenario is required"));
        }
        if self.num_channels == 0 || self.num_transmitters == 0 {
            return Err(Error::invalid("K and N must be at least 1"));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("SNR list must be nonempty and finite"));
        }
        match self.id {
            ExperimentId::Fig2 => {
                if self.channel_grid.is_empty()
                    || self.channel_grid.contains(&0)
                    || self.channel_grid.windows(2).any(|w| w[0] >= w[1])
                {
                    return Err(Error::invalid(
                        "N list must be nonempty, positive and strictly increasing",
                    ));
                }
            }
            ExperimentId::Fig3 | ExperimentId::Fig4 | ExperimentId::Fig5 | ExperimentId::Fig6 => {
                if self.loads.is_empty() {
                    return Err(Error::invalid("load grid must be nonempty"));
                }
                if let Some(bad) = self.loads.iter().find(|&&l| !(l > 0.0 && l <= 1.0)) {
                    return Err(Error::invalid(format!("loads must lie in (0, 1], got {bad}")));
                }
            }
            ExperimentId::Custom => {}
        }
        if let Some(&bad) = self
            .bl_grid
            .iter()
            .find(|&&l| l == 0 || l > self.num_channels)
        {
            return Err(Error::invalid(format!(
                "BL cap must be in 1..={}, got {bad}",
                self.num_channels
            )));
        }
        Ok(())
    }

    fn caps(&self) -> Vec<usize> {
        if self.bl_grid.is_empty() {
            (1..=self.num_channels).collect()
        } else {
            self.bl_grid.clone()
        }
    }

    fn asymptotic(&self, num_transmitters: usize, snr_db: f64) -> Result<AsymptoticConfig> {
        let mut cfg = AsymptoticConfig::from_snr_db(num_transmitters, snr_db)?;
        cfg.mc_samples = self.mc_samples;
        cfg.quad_rel_tol = self.quad_rel_tol;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Key/value description of the spec, emitted as CSV provenance.
    pub fn provenance(&self) -> Vec<(String, String)> {
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| crate::table::format_sig(*x, 12))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let ints = |v: &[usize]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut p = vec![
            ("generator".into(), format!("vmac {}", env!("CARGO_PKG_VERSION"))),
            ("experiment".into(), self.id.to_string()),
            ("seed".into(), self.master_seed.to_string()),
            ("trials".into(), self.trials.to_string()),
            (
                "scenarios".into(),
                self.scenarios
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(" "),
            ),
            ("budget".into(), self.budget.as_str().into()),
            ("noise_variance".into(), "1".into()),
            ("snr_db".into(), list(&self.snr_db)),
        ];
        match self.id {
            ExperimentId::Fig2 => {
                p.push(("k".into(), self.num_transmitters.to_string()));
                p.push(("n_grid".into(), ints(&self.channel_grid)));
            }
            ExperimentId::Custom => {
                p.push(("k".into(), self.num_transmitters.to_string()));
                p.push(("n".into(), self.num_channels.to_string()));
            }
            _ => {
                p.push(("n".into(), self.num_channels.to_string()));
                p.push(("loads".into(), list(&self.loads)));
            }
        }
        if self.id != ExperimentId::Fig2 {
            let caps = if self.bl_grid.is_empty() {
                format!("1..{}", self.num_channels)
            } else {
                ints(&self.bl_grid)
            };
            p.push(("bl_grid".into(), caps));
        }
        p.push(("mc_samples".into(), self.mc_samples.to_string()));
        p.push((
            "quad_tol".into(),
            crate::table::format_sig(self.quad_rel_tol, 12),
        ));
        let loads_default = self.loads == default_loads();
        let snr_default = self.snr_db == default_snrs();
        if matches!(
            self.id,
            ExperimentId::Fig3 | ExperimentId::Fig4 | ExperimentId::Fig5 | ExperimentId::Fig6
        ) && (loads_default || snr_default)
        {
            p.push((
                "grid_note".into(),
                "default load/SNR grid is a reconstruction of the figure axes".into(),
            ));
        }
        p
    }
}

/// `K = round(load N)`, at least 1.
pub fn transmitters_for_load(load: f64, num_channels: usize) -> usize {
    ((load * num_channels as f64).round() as usize).max(1)
}

/// One simulated configuration, evaluated under one or more BL policies.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub config: NetworkConfig,
    pub scenario: Scenario,
    pub budget: BudgetRule,
}

/// Per-policy statistics aggregated over trials.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub bl: BlPolicy,
    pub nse: Stat,
    /// Per-trial NSE in trial-index order, for paired comparisons.
    pub nse_samples: Vec<f64>,
    /// `R̄_k` per transmitter.
    pub rate_per_channel: Vec<Stat>,
    /// `Omega_k = |Z_k| / N` per transmitter.
    pub accessible_fraction: Vec<Stat>,
    /// Fraction of the band free on arrival, before any BL cap.
    pub available_fraction: Vec<Stat>,
}

struct TrialRecord {
    nse: f64,
    rate: Vec<f64>,
    accessible: Vec<f64>,
    available: Vec<f64>,
}

fn record(outcome: &ScenarioOutcome, num_channels: usize) -> TrialRecord {
    let n = num_channels as f64;
    TrialRecord {
        nse: outcome.nse,
        rate: outcome
            .transmitters
            .iter()
            .map(|t| t.rate_per_channel)
            .collect(),
        accessible: outcome
            .transmitters
            .iter()
            .map(|t| t.accessible_fraction)
            .collect(),
        available: outcome
            .transmitters
            .iter()
            .map(|t| t.available as f64 / n)
            .collect(),
    }
}

fn per_k(records: &[&TrialRecord], k_total: usize, pick: fn(&TrialRecord) -> &[f64]) -> Vec<Stat> {
    (0..k_total)
        .map(|k| {
            let v: Vec<f64> = records.iter().map(|r| pick(r)[k]).collect();
            Stat::from_values(&v)
        })
        .collect()
}

/// Runs `trials` trials of `point`, evaluating every policy on the same gain
/// matrix per trial. Summaries come back in policy order.
pub fn run_trials_multi(
    point: &SweepPoint,
    policies: &[BlPolicy],
    trials: usize,
    master_seed: u64,
) -> Result<Vec<TrialSummary>> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    if policies.is_empty() {
        return Err(Error::invalid("at least one BL policy is required"));
    }
    let n = point.config.num_channels();
    for p in policies {
        if let Some(l) = p.limit() {
            BlPolicy::cap(l, n)?;
        }
    }
    let per_trial: Vec<Vec<TrialRecord>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let gains = sample_gains(&point.config, SeedSpec::new(master_seed, t));
            policies
                .iter()
                .map(|&bl| {
                    run_scenario(point.scenario, &gains, &point.config, bl, point.budget)
                        .map(|o| record(&o, n))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let k_total = point.config.num_transmitters();
    Ok(policies
        .iter()
        .enumerate()
        .map(|(i, &bl)| {
            let records: Vec<&TrialRecord> = per_trial.iter().map(|t| &t[i]).collect();
            let nse_samples: Vec<f64> = records.iter().map(|r| r.nse).collect();
            TrialSummary {
                bl,
                nse: Stat::from_values(&nse_samples),
                nse_samples,
                rate_per_channel: per_k(&records, k_total, |r| &r.rate),
                accessible_fraction: per_k(&records, k_total, |r| &r.accessible),
                available_fraction: per_k(&records, k_total, |r| &r.available),
            }
        })
        .collect())
}

pub fn run_trials(
    point: &SweepPoint,
    bl: BlPolicy,
    trials: usize,
    master_seed: u64,
) -> Result<TrialSummary> {
    Ok(run_trials_multi(point, &[bl], trials, master_seed)?.remove(0))
}

/// `2 * sqrt(se_a^2 + se_b^2)`: the margin used when comparing two means.
pub fn two_stderr_margin(a: &Stat, b: &Stat) -> f64 {
    2.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt()
}

/// The cap with the largest mean NSE (smallest cap on ties).
fn best_cap(summaries: &[TrialSummary]) -> &TrialSummary {
    summaries
        .iter()
        .fold(None::<&TrialSummary>, |best, s| match best {
            Some(b) if b.nse.mean >= s.nse.mean => Some(b),
            _ => Some(s),
        })
        .expect("nonempty sweep")
}

fn analytic(value: f64) -> Stat {
    Stat {
        mean: value,
        stderr: 0.0,
        trials: 0,
    }
}

fn ensure_id(spec: &ExperimentSpec, allowed: &[ExperimentId]) -> Result<()> {
    spec.validate()?;
    if allowed.contains(&spec.id) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "experiment `{}` cannot be run by this function",
            spec.id
        )))
    }
}

// ---------------------------------------------------------------- fig2

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub num_channels: usize,
    /// 1-based transmitter index.
    pub k: usize,
    pub sim: Stat,
    pub asymptotic: f64,
    pub asymptotic_stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub provenance: Vec<(String, String)>,
}

impl ConvergenceTable {
    pub fn row(&self, num_channels: usize, k: usize) -> Option<&ConvergenceRow> {
        self.rows
            .iter()
            .find(|r| r.num_channels == num_channels && r.k == k)
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["N", "k", "sim_mean", "sim_stderr", "asymptotic", "trials"]);
        t.provenance = self.provenance.clone();
        for r in &self.rows {
            t.rows.push(vec![
                r.num_channels.into(),
                r.k.into(),
                r.sim.mean.into(),
                r.sim.stderr.into(),
                r.asymptotic.into(),
                r.sim.trials.into(),
            ]);
        }
        t
    }
}

/// Per-transmitter rate per channel of the sharing scenario across N, with
/// the asymptotic levels for comparison.
pub fn fig2_convergence(spec: &ExperimentSpec) -> Result<ConvergenceTable> {
    ensure_id(spec, &[ExperimentId::Fig2])?;
    let snr = spec.snr_db[0];
    let k_total = spec.num_transmitters;
    let acfg = spec.asymptotic(k_total, snr)?;
    let chain = solve_beta_chain(&acfg)?;
    let scenario = spec.scenarios[0];

    let mut rows = Vec::new();
    for &n in &spec.channel_grid {
        let point = SweepPoint {
            config: NetworkConfig::from_snr_db(k_total, n, snr)?,
            scenario,
            budget: spec.budget,
        };
        let summary = run_trials(&point, BlPolicy::NONE, spec.trials, spec.master_seed)?;
        for k in 0..k_total {
            rows.push(ConvergenceRow {
                num_channels: n,
                k: k + 1,
                sim: summary.rate_per_channel[k],
                asymptotic: chain.rates[k],
                asymptotic_stderr: chain.rate_stderr[k],
            });
        }
    }
    Ok(ConvergenceTable {
        rows,
        provenance: spec.provenance(),
    })
}

// ---------------------------------------------------------------- fig3

#[derive(Debug, Clone, PartialEq)]
pub struct BlCurve {
    pub scenario: Scenario,
    pub snr_db: f64,
    pub load: f64,
    pub num_transmitters: usize,
    /// Capped policies in grid order.
    pub capped: Vec<TrialSummary>,
    pub uncapped: TrialSummary,
}

impl BlCurve {
    pub fn at(&self, limit: usize) -> Option<&TrialSummary> {
        self.capped.iter().find(|s| s.bl.limit() == Some(limit))
    }

    pub fn best(&self) -> &TrialSummary {
        best_cap(&self.capped)
    }
}

fn bl_curve(
    spec: &ExperimentSpec,
    scenario: Scenario,
    snr_db: f64,
    load: f64,
    num_transmitters: usize,
) -> Result<BlCurve> {
    let n = spec.num_channels;
    let point = SweepPoint {
        config: NetworkConfig::from_snr_db(num_transmitters, n, snr_db)?,
        scenario,
        budget: spec.budget,
    };
    let mut policies = spec
        .caps()
        .into_iter()
        .map(|l| BlPolicy::cap(l, n))
        .collect::<Result<Vec<_>>>()?;
    policies.push(BlPolicy::NONE);
    let mut summaries = run_trials_multi(&point, &policies, spec.trials, spec.master_seed)?;
    let uncapped = summaries.pop().expect("no-BL policy");
    Ok(BlCurve {
        scenario,
        snr_db,
        load,
        num_transmitters,
        capped: summaries,
        uncapped,
    })
}

/// Sweeps the BL cap for a single configuration (the `custom` experiment).
pub fn bl_sweep(spec: &ExperimentSpec) -> Result<Vec<BlCurve>> {
    ensure_id(spec, &[ExperimentId::Custom])?;
    let k = spec.num_transmitters;
    let load = k as f64 / spec.num_channels as f64;
    let mut curves = Vec::new();
    for &snr in &spec.snr_db {
        for &scenario in &spec.scenarios {
            curves.push(bl_curve(spec, scenario, snr, load, k)?);
        }
    }
    Ok(curves)
}

/// Mean NSE against the BL cap for every scenario, load and SNR.
pub fn fig3_bl_sweep(spec: &ExperimentSpec) -> Result<Vec<BlCurve>> {
    ensure_id(spec, &[ExperimentId::Fig3])?;
    let mut curves = Vec::new();
    for &snr in &spec.snr_db {
        for &scenario in &spec.scenarios {
            for &load in &spec.loads {
                let k = transmitters_for_load(load, spec.num_channels);
                curves.push(bl_curve(spec, scenario, snr, load, k)?);
            }
        }
    }
    Ok(curves)
}

pub fn bl_curves_table(curves: &[BlCurve], provenance: Vec<(String, String)>) -> ResultTable {
    let mut t = ResultTable::new(&["scenario", "snr_db", "load", "K", "L"]);
    t.provenance = provenance;
    for c in curves {
        for s in c.capped.iter().chain(std::iter::once(&c.uncapped)) {
            t.push(
                vec![
                    c.scenario.as_str().into(),
                    c.snr_db.into(),
                    c.load.into(),
                    c.num_transmitters.into(),
                    s.bl.limit().into(),
                ],
                "nse",
                s.nse,
            );
        }
    }
    t
}

// ---------------------------------------------------------------- fig4

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalBlRow {
    pub load: f64,
    pub num_transmitters: usize,
    pub empirical: usize,
    pub empirical_nse: Stat,
    pub analytic: usize,
    pub analytic_nearest: usize,
    pub analytic_nse: Stat,
    pub uncapped_nse: Stat,
}

impl OptimalBlRow {
    pub fn gap(&self) -> usize {
        self.empirical.abs_diff(self.analytic)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalBlTable {
    pub snr_db: f64,
    pub omega: f64,
    pub beta_star: f64,
    pub rows: Vec<OptimalBlRow>,
    pub provenance: Vec<(String, String)>,
}

impl OptimalBlTable {
    pub fn to_result_table(&self) -> ResultTable {
        let mut t = ResultTable::new(&["load", "K"]);
        t.provenance = self.provenance.clone();
        for r in &self.rows {
            let trials = r.empirical_nse.trials;
            let c = || vec![Cell::from(r.load), Cell::from(r.num_transmitters)];
            t.push(c(), "analytic_l", analytic(r.analytic as f64));
            t.push(c(), "analytic_l_nearest", analytic(r.analytic_nearest as f64));
            t.push(
                c(),
                "empirical_l",
                Stat {
                    mean: r.empirical as f64,
                    stderr: 0.0,
                    trials,
                },
            );
            t.push(
                c(),
                "gap",
                Stat {
                    mean: r.gap() as f64,
                    stderr: 0.0,
                    trials,
                },
            );
            t.push(c(), "nse_analytic_l", r.analytic_nse);
            t.push(c(), "nse_empirical_l", r.empirical_nse);
            t.push(c(), "nse_no_bl", r.uncapped_nse);
        }
        t
    }
}

/// Empirical argmax of the partition NSE over the BL cap against the
/// analytic optimum, per load.
pub fn fig4_optimal_bl(spec: &ExperimentSpec) -> Result<OptimalBlTable> {
    ensure_id(spec, &[ExperimentId::Fig4])?;
    let snr = spec.snr_db[0];
    let n = spec.num_channels;
    let asym = partition_asymptotics(&spec.asymptotic(1, snr)?)?;
    let mut rows = Vec::new();
    for &load in &spec.loads {
        let k = transmitters_for_load(load, n);
        let curve = bl_curve(spec, Scenario::Partition, snr, load, k)?;
        let best = curve.best();
        let analytic_l = optimal_bl(k, n, asym.omega, LRounding::Ceil)?;
        let analytic_nse = curve
            .at(analytic_l)
            .map(|s| s.nse)
            .unwrap_or(Stat {
                mean: f64::NAN,
                stderr: f64::NAN,
                trials: 0,
            });
        rows.push(OptimalBlRow {
            load,
            num_transmitters: k,
            empirical: best.bl.limit().expect("capped"),
            empirical_nse: best.nse,
            analytic: analytic_l,
            analytic_nearest: optimal_bl(k, n, asym.omega, LRounding::Nearest)?,
            analytic_nse,
            uncapped_nse: curve.uncapped.nse,
        });
    }
    Ok(OptimalBlTable {
        snr_db: snr,
        omega: asym.omega,
        beta_star: asym.beta_star,
        rows,
        provenance: spec.provenance(),
    })
}

// ---------------------------------------------------------------- fig5/6

#[derive(Debug, Clone, PartialEq)]
pub struct LoadRow {
    pub scenario: Scenario,
    pub snr_db: f64,
    pub load: f64,
    pub num_transmitters: usize,
    pub uncapped: Stat,
    pub best_l: usize,
    pub best: Stat,
    /// Paired per-trial difference `NSE(best L) - NSE(no BL)`.
    pub gain: Stat,
    pub analytic_l: usize,
    pub analytic: Stat,
}

impl LoadRow {
    pub fn relative_gain(&self) -> f64 {
        (self.best.mean - self.uncapped.mean) / self.uncapped.mean
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadSweepTable {
    pub rows: Vec<LoadRow>,
    pub provenance: Vec<(String, String)>,
}

impl LoadSweepTable {
    pub fn row(&self, snr_db: f64, load: f64) -> Option<&LoadRow> {
        self.rows
            .iter()
            .find(|r| r.snr_db == snr_db && (r.load - load).abs() < 1e-12)
    }

    pub fn to_result_table(&self) -> ResultTable {
        let mut t = ResultTable::new(&["scenario", "snr_db", "load", "K"]);
        t.provenance = self.provenance.clone();
        for r in &self.rows {
            let c = || {
                vec![
                    Cell::from(r.scenario.as_str()),
                    Cell::from(r.snr_db),
                    Cell::from(r.load),
                    Cell::from(r.num_transmitters),
                ]
            };
            t.push(c(), "analytic_l", analytic(r.analytic_l as f64));
            t.push(
                c(),
                "best_l",
                Stat {
                    mean: r.best_l as f64,
                    stderr: 0.0,
                    trials: r.best.trials,
                },
            );
            t.push(c(), "bl_gain", r.gain);
            t.push(c(), "nse_analytic_l", r.analytic);
            t.push(c(), "nse_best_l", r.best);
            t.push(c(), "nse_no_bl", r.uncapped);
        }
        t
    }
}

/// NSE with and without BL across loads and SNRs for one scenario (fig5 is
/// partition, fig6 sharing).
pub fn fig5_fig6_load_sweep(spec: &ExperimentSpec) -> Result<LoadSweepTable> {
    ensure_id(spec, &[ExperimentId::Fig5, ExperimentId::Fig6])?;
    let n = spec.num_channels;
    let mut rows = Vec::new();
    for &scenario in &spec.scenarios {
        for &snr in &spec.snr_db {
            let omega = partition_asymptotics(&spec.asymptotic(1, snr)?)?.omega;
            for &load in &spec.loads {
                let k = transmitters_for_load(load, n);
                let curve = bl_curve(spec, scenario, snr, load, k)?;
                let best = curve.best();
                let diffs: Vec<f64> = best
                    .nse_samples
                    .iter()
                    .zip(&curve.uncapped.nse_samples)
                    .map(|(a, b)| a - b)
                    .collect();
                let analytic_l = optimal_bl(k, n, omega, LRounding::Ceil)?;
                let analytic_nse = match curve.at(analytic_l) {
                    Some(s) => s.nse,
                    None => {
                        let point = SweepPoint {
                            config: NetworkConfig::from_snr_db(k, n, snr)?,
                            scenario,
                            budget: spec.budget,
                        };
                        run_trials(
                            &point,
                            BlPolicy::cap(analytic_l, n)?,
                            spec.trials,
                            spec.master_seed,
                        )?
                        .nse
                    }
                };
                rows.push(LoadRow {
                    scenario,
                    snr_db: snr,
                    load,
                    num_transmitters: k,
                    uncapped: curve.uncapped.nse,
                    best_l: best.bl.limit().expect("capped"),
                    best: best.nse,
                    gain: Stat::from_values(&diffs),
                    analytic_l,
                    analytic: analytic_nse,
                });
            }
        }
    }
    Ok(LoadSweepTable {
        rows,
        provenance: spec.provenance(),
    })
}

/// Runs any experiment and returns its CSV table.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<CsvTable> {
    Ok(match spec.id {
        ExperimentId::Fig2 => fig2_convergence(spec)?.to_csv(),
        ExperimentId::Fig3 => bl_curves_table(&fig3_bl_sweep(spec)?, spec.provenance()).to_csv(),
        ExperimentId::Fig4 => fig4_optimal_bl(spec)?.to_result_table().to_csv(),
        ExperimentId::Fig5 | ExperimentId::Fig6 => {
            fig5_fig6_load_sweep(spec)?.to_result_table().to_csv()
        }
        ExperimentId::Custom => bl_curves_table(&bl_sweep(spec)?, spec.provenance()).to_csv(),
    })
}
