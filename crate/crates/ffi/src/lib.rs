//! C ABI over `vmac-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` style
//! functions and released with the matching `*_free`. Every fallible call
//! returns a `VmacStatus`; on failure a description is available from
//! `vmac_last_error_message` on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use vmac_core::asymptotic::{
    optimal_bl, partition_asymptotics, solve_beta_chain, AsymptoticConfig, LRounding,
};
use vmac_core::channel_model::{sample_gains, GainMatrix, NetworkConfig, SeedSpec};
use vmac_core::simulator::{run_scenario, BlPolicy, BudgetRule, Scenario, ScenarioOutcome};
use vmac_core::waterfill::{water_fill, WaterfillProblem};
use vmac_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VmacStatus {
    Ok = 0,
    InvalidArgument = 1,
    EmptyCandidateSet = 2,
    NonpositiveBudget = 3,
    NonConvergence = 4,
    McVarianceTooHigh = 5,
    Io = 6,
    NullPointer = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VmacScenario {
    Partition = 0,
    Sharing = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VmacBudget {
    /// `|Z_k| * p_max` per transmitter.
    Accessible = 0,
    /// `N * p_max` per transmitter.
    FullBand = 1,
}

/// Scalar summary of one transmitter in a scenario outcome.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VmacTransmitterStats {
    pub accessible_channels: usize,
    pub used_channels: usize,
    pub available_channels: usize,
    /// NaN when no channel was accessible.
    pub water_level: f64,
    pub rate: f64,
    pub rate_per_channel: f64,
    pub accessible_fraction: f64,
    pub spectral_efficiency: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VmacPartitionAsymptotics {
    pub beta_star: f64,
    pub omega: f64,
    pub rate: f64,
    pub nse: f64,
}

pub struct VmacConfig(NetworkConfig);

pub struct VmacGains(GainMatrix);

pub struct VmacOutcome(ScenarioOutcome);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> VmacStatus {
    match err {
        Error::InvalidArgument(_) | Error::MissingColumn(_) => VmacStatus::InvalidArgument,
        Error::EmptyCandidateSet => VmacStatus::EmptyCandidateSet,
        Error::NonpositiveBudget(_) => VmacStatus::NonpositiveBudget,
        Error::NonConvergence(_) => VmacStatus::NonConvergence,
        Error::McVarianceTooHigh(_) => VmacStatus::McVarianceTooHigh,
        Error::Io { .. } => VmacStatus::Io,
    }
}

enum Failure {
    Core(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

/// Runs `f`, translating errors and panics into a status code.
fn guard<F>(f: F) -> VmacStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VmacStatus::Ok,
        Ok(Err(Failure::Core(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(name))) => {
            set_last_error(format!("`{name}` must not be NULL"));
            VmacStatus::NullPointer
        }
        Err(_) => {
            set_last_error("internal panic".into());
            VmacStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn input_slice<'a>(p: *const f64, len: usize, name: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output_slice<'a>(p: *mut f64, len: usize, name: &'static str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Core(Error::InvalidArgument(msg.into()))
}

/// Message of the last failing call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn vmac_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vmac_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(
        concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes(),
    ) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Creates a network of `k` transmitters and `n` channels at the given SNR
/// (noise variance 1).
///
/// # Safety
/// `out_config` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn vmac_config_new(
    k: usize,
    n: usize,
    snr_db: f64,
    out_config: *mut *mut VmacConfig,
) -> VmacStatus {
    guard(|| {
        let slot = out(out_config, "out_config")?;
        let cfg = NetworkConfig::from_snr_db(k, n, snr_db)?;
        *slot = Box::into_raw(Box::new(VmacConfig(cfg)));
        Ok(())
    })
}

/// # Safety
/// `config` must be NULL or a handle from `vmac_config_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vmac_config_free(config: *mut VmacConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Draws the gain matrix of trial `trial` under `master_seed`.
///
/// # Safety
/// `config` must be a live handle; `out_gains` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vmac_gains_sample(
    config: *const VmacConfig,
    master_seed: u64,
    trial: u64,
    out_gains: *mut *mut VmacGains,
) -> VmacStatus {
    guard(|| {
        let cfg = as_ref(config, "config")?;
        let slot = out(out_gains, "out_gains")?;
        let g = sample_gains(&cfg.0, SeedSpec::new(master_seed, trial));
        *slot = Box::into_raw(Box::new(VmacGains(g)));
        Ok(())
    })
}

/// Wraps a caller-supplied row-major `k x n` gain matrix (copied).
///
/// # Safety
/// `data` must point to `k * n` readable doubles; `out_gains` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vmac_gains_from_array(
    k: usize,
    n: usize,
    data: *const f64,
    out_gains: *mut *mut VmacGains,
) -> VmacStatus {
    guard(|| {
        let slot = out(out_gains, "out_gains")?;
        let len = k
            .checked_mul(n)
            .ok_or_else(|| invalid("matrix dimensions overflow"))?;
        let values = input_slice(data, len, "data")?.to_vec();
        let g = GainMatrix::from_rows(k, n, values)?;
        *slot = Box::into_raw(Box::new(VmacGains(g)));
        Ok(())
    })
}

/// Reads entry `(k, n)` (zero-based).
///
/// # Safety
/// `gains` must be a live handle; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vmac_gains_get(
    gains: *const VmacGains,
    k: usize,
    n: usize,
    value: *mut f64,
) -> VmacStatus {
    guard(|| {
        let g = &as_ref(gains, "gains")?.0;
        let slot = out(value, "value")?;
        if k >= g.num_transmitters() || n >= g.num_channels() {
            return Err(invalid(format!(
                "index ({k}, {n}) outside {}x{}",
                g.num_transmitters(),
                g.num_channels()
            )));
        }
        *slot = g.get(k, n);
        Ok(())
    })
}

/// # Safety
/// `gains` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vmac_gains_free(gains: *mut VmacGains) {
    if !gains.is_null() {
        drop(Box::from_raw(gains));
    }
}

/// Runs one scenario on one gain matrix. `bl_cap == 0` means no cap.
///
/// # Safety
/// `config` and `gains` must be live handles; `out_outcome` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vmac_run(
    config: *const VmacConfig,
    gains: *const VmacGains,
    scenario: VmacScenario,
    bl_cap: usize,
    budget: VmacBudget,
    out_outcome: *mut *mut VmacOutcome,
) -> VmacStatus {
    guard(|| {
        let cfg = &as_ref(config, "config")?.0;
        let g = &as_ref(gains, "gains")?.0;
        let slot = out(out_outcome, "out_outcome")?;
        let bl = match bl_cap {
            0 => BlPolicy::NONE,
            l => BlPolicy::cap(l, cfg.num_channels())?,
        };
        let scenario = match scenario {
            VmacScenario::Partition => Scenario::Partition,
            VmacScenario::Sharing => Scenario::Sharing,
        };
        let budget = match budget {
            VmacBudget::Accessible => BudgetRule::PerAccessibleChannel,
            VmacBudget::FullBand => BudgetRule::FullBand,
        };
        let o = run_scenario(scenario, g, cfg, bl, budget)?;
        *slot = Box::into_raw(Box::new(VmacOutcome(o)));
        Ok(())
    })
}

/// # Safety
/// `outcome` must be a live handle; `nse` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vmac_outcome_nse(outcome: *const VmacOutcome, nse: *mut f64) -> VmacStatus {
    guard(|| {
        let o = &as_ref(outcome, "outcome")?.0;
        *out(nse, "nse")? = o.nse;
        Ok(())
    })
}

/// Number of transmitters in the outcome (0 for a NULL handle).
///
/// # Safety
/// `outcome` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vmac_outcome_num_transmitters(outcome: *const VmacOutcome) -> usize {
    outcome.as_ref().map_or(0, |o| o.0.transmitters.len())
}

/// # Safety
/// `outcome` must be a live handle; `stats` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vmac_outcome_transmitter(
    outcome: *const VmacOutcome,
    k: usize,
    stats: *mut VmacTransmitterStats,
) -> VmacStatus {
    guard(|| {
        let o = &as_ref(outcome, "outcome")?.0;
        let slot = out(stats, "stats")?;
        let t = o
            .transmitters
            .get(k)
            .ok_or_else(|| invalid(format!("transmitter {k} out of range")))?;
        *slot = VmacTransmitterStats {
            accessible_channels: t.accessible.len(),
            used_channels: t.used.len(),
            available_channels: t.available,
            water_level: t.water_level.unwrap_or(f64::NAN),
            rate: t.rate,
            rate_per_channel: t.rate_per_channel,
            accessible_fraction: t.accessible_fraction,
            spectral_efficiency: t.spectral_efficiency,
        };
        Ok(())
    })
}

/// Copies transmitter `k`'s per-channel powers into `powers` (length `len`,
/// which must equal the channel count).
///
/// # Safety
/// `outcome` must be a live handle; `powers` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn vmac_outcome_powers(
    outcome: *const VmacOutcome,
    k: usize,
    powers: *mut f64,
    len: usize,
) -> VmacStatus {
    guard(|| {
        let o = &as_ref(outcome, "outcome")?.0;
        let t = o
            .transmitters
            .get(k)
            .ok_or_else(|| invalid(format!("transmitter {k} out of range")))?;
        if len != t.powers.len() {
            return Err(invalid(format!(
                "buffer holds {len} values, outcome has {}",
                t.powers.len()
            )));
        }
        output_slice(powers, len, "powers")?.copy_from_slice(&t.powers);
        Ok(())
    })
}

/// # Safety
/// `outcome` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vmac_outcome_free(outcome: *mut VmacOutcome) {
    if !outcome.is_null() {
        drop(Box::from_raw(outcome));
    }
}

/// Water-fills `budget` over channels with the given effective noise levels.
/// Powers are written in input order.
///
/// # Safety
/// `noises` and `powers` must each hold `len` doubles; `water_level` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn vmac_water_fill(
    noises: *const f64,
    len: usize,
    budget: f64,
    powers: *mut f64,
    water_level: *mut f64,
) -> VmacStatus {
    guard(|| {
        let nu = input_slice(noises, len, "noises")?;
        let level = out(water_level, "water_level")?;
        let p = output_slice(powers, len, "powers")?;
        let sol = water_fill(&WaterfillProblem::from_noises(nu, budget)?);
        p.fill(0.0);
        for &(ch, v) in &sol.powers {
            p[ch] = v;
        }
        *level = sol.water_level;
        Ok(())
    })
}

/// Large-system water level, accessible fraction, rate per channel and NSE of
/// the partition scenario with `k` transmitters.
///
/// # Safety
/// `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vmac_partition_asymptotics(
    k: usize,
    snr_db: f64,
    result: *mut VmacPartitionAsymptotics,
) -> VmacStatus {
    guard(|| {
        let slot = out(result, "result")?;
        let a = partition_asymptotics(&AsymptoticConfig::from_snr_db(k, snr_db)?)?;
        *slot = VmacPartitionAsymptotics {
            beta_star: a.beta_star,
            omega: a.omega,
            rate: a.rate,
            nse: a.nse,
        };
        Ok(())
    })
}

/// Analytic BL cap for `k` transmitters on `n` channels (ceiling rounding).
///
/// # Safety
/// `limit` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vmac_optimal_bl(
    k: usize,
    n: usize,
    snr_db: f64,
    limit: *mut usize,
) -> VmacStatus {
    guard(|| {
        let slot = out(limit, "limit")?;
        let a = partition_asymptotics(&AsymptoticConfig::from_snr_db(1, snr_db)?)?;
        *slot = optimal_bl(k, n, a.omega, LRounding::Ceil)?;
        Ok(())
    })
}

/// Water levels and rates per channel of the sharing scenario for
/// transmitters `1..=len`. Monte Carlo settings are the library defaults.
///
/// # Safety
/// `levels` and `rates` must each hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn vmac_sharing_chain(
    len: usize,
    snr_db: f64,
    levels: *mut f64,
    rates: *mut f64,
) -> VmacStatus {
    guard(|| {
        let lv = output_slice(levels, len, "levels")?;
        let rt = output_slice(rates, len, "rates")?;
        let chain = solve_beta_chain(&AsymptoticConfig::from_snr_db(len, snr_db)?)?;
        lv.copy_from_slice(&chain.levels);
        rt.copy_from_slice(&chain.rates);
        Ok(())
    })
}
