//! Network configuration and seeded sampling of exponential channel gains.
//!
//! Channel gains are `g = |h|^2` for a circularly-symmetric complex Gaussian
//! coefficient with unit total variance, which is exactly a unit-mean
//! exponential variable. Gains are therefore drawn directly from the
//! exponential law by inverse-CDF sampling; the complex coefficients are never
//! materialized.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// Size and power parameters of a vector multiple access channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig {
    num_transmitters: usize,
    num_channels: usize,
    noise_variance: f64,
    p_max: f64,
}

impl NetworkConfig {
    pub fn new(
        num_transmitters: usize,
        num_channels: usize,
        noise_variance: f64,
        p_max: f64,
    ) -> Result<Self> {
        if num_transmitters == 0 {
            return Err(Error::invalid("number of transmitters must be at least 1"));
        }
        if num_channels == 0 {
            return Err(Error::invalid("number of channels must be at least 1"));
        }
        if !(noise_variance > 0.0 && noise_variance.is_finite()) {
            return Err(Error::invalid(format!(
                "noise variance must be positive and finite, got {noise_variance}"
            )));
        }
        if !(p_max > 0.0 && p_max.is_finite()) {
            return Err(Error::invalid(format!(
                "per-channel power budget must be positive and finite, got {p_max}"
            )));
        }
        Ok(Self {
            num_transmitters,
            num_channels,
            noise_variance,
            p_max,
        })
    }

    /// Unit noise variance with `p_max = 10^(snr_db / 10)`.
    pub fn from_snr_db(num_transmitters: usize, num_channels: usize, snr_db: f64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::invalid(format!("SNR must be finite, got {snr_db}")));
        }
        Self::new(num_transmitters, num_channels, 1.0, db_to_linear(snr_db))
    }

    pub fn num_transmitters(&self) -> usize {
        self.num_transmitters
    }

    pub fn num_channels(&self) -> usize {
        self.num_channels
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// Average per-channel power budget.
    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * (self.p_max / self.noise_variance).log10()
    }

    /// Transmitters per channel, `K / N`.
    pub fn load(&self) -> f64 {
        self.num_transmitters as f64 / self.num_channels as f64
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Unit-mean exponential law of the channel gains.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExponentialGain;

impl ExponentialGain {
    /// `F(x) = 1 - e^{-x}` for `x >= 0`, zero below.
    pub fn cdf(self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-x).exp_m1()
        }
    }

    pub fn pdf(self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            (-x).exp()
        }
    }

    /// Inverse CDF, `-ln(1 - u)` for `u` in `[0, 1)`.
    pub fn quantile(self, u: f64) -> f64 {
        -(-u).ln_1p()
    }
}

/// CDF of the channel gain evaluated at `lambda`.
pub fn gain_cdf(lambda: f64) -> Result<f64> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::invalid(format!(
            "gain CDF argument must be nonnegative, got {lambda}"
        )));
    }
    Ok(ExponentialGain.cdf(lambda))
}

/// Identifies one Monte Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub trial_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, trial_index: u64) -> Self {
        Self {
            master_seed,
            trial_index,
        }
    }
}

/// Full 256-bit ChaCha20 key for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrialSeed(pub [u8; 32]);

impl TrialSeed {
    pub fn rng(&self) -> ChaCha20Rng {
        ChaCha20Rng::from_seed(self.0)
    }
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `(master_seed, trial_index)` into a ChaCha20 key.
///
/// The first key word is `mix(master + trial * GAMMA)`, where `mix` is the
/// SplitMix64 finalizer (a bijection) and `GAMMA` is odd, so distinct trial
/// indices under one master seed always yield distinct keys. The remaining
/// three words continue the SplitMix64 sequence from that state. Words are
/// serialized little-endian, so the key is identical on every platform.
pub fn derive_trial_seed(master_seed: u64, trial_index: u64) -> TrialSeed {
    let mut state = master_seed.wrapping_add(trial_index.wrapping_mul(GOLDEN_GAMMA));
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64_mix(state).to_le_bytes());
        state = state.wrapping_add(GOLDEN_GAMMA);
    }
    TrialSeed(key)
}

/// Uniform double in `[0, 1)` built from the top 53 bits of one `u64` draw.
pub(crate) fn next_unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Dense `K x N` matrix of channel gains, row `k` holding transmitter `k`'s gains.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl GainMatrix {
    /// Builds a matrix from row-major data, rejecting negative or non-finite gains.
    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("gain matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "gain matrix expects {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(Error::invalid(format!(
                "channel gains must be finite and nonnegative, got {bad}"
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_nested(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged gain matrix"));
        }
        Self::from_rows(rows.len(), cols, rows.concat())
    }

    pub fn num_transmitters(&self) -> usize {
        self.rows
    }

    pub fn num_channels(&self) -> usize {
        self.cols
    }

    pub fn get(&self, k: usize, n: usize) -> f64 {
        self.data[k * self.cols + n]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.cols..(k + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Samples a `K x N` matrix of i.i.d. unit-mean exponential gains, row by row.
pub fn sample_gains(config: &NetworkConfig, seed: SeedSpec) -> GainMatrix {
    let mut rng = derive_trial_seed(seed.master_seed, seed.trial_index).rng();
    let (rows, cols) = (config.num_transmitters(), config.num_channels());
    let data = (0..rows * cols)
        .map(|_| ExponentialGain.quantile(next_unit(&mut rng)))
        .collect();
    GainMatrix { rows, cols, data }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn config_validation() {
        assert!(NetworkConfig::new(0, 4, 1.0, 1.0).is_err());
        assert!(NetworkConfig::new(2, 0, 1.0, 1.0).is_err());
        assert!(NetworkConfig::new(2, 4, 0.0, 1.0).is_err());
        assert!(NetworkConfig::new(2, 4, 1.0, -1.0).is_err());
        let cfg = NetworkConfig::from_snr_db(5, 50, 10.0).unwrap();
        assert!((cfg.p_max() - 10.0).abs() < 1e-12);
        assert!((cfg.snr_db() - 10.0).abs() < 1e-12);
        assert!((cfg.load() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(gain_cdf(0.0).unwrap(), 0.0);
        assert!((gain_cdf(std::f64::consts::LN_2).unwrap() - 0.5).abs() < 1e-15);
        assert!((gain_cdf(50.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(gain_cdf(-0.1).is_err());
        assert!(gain_cdf(f64::NAN).is_err());
    }

    #[test]
    fn pdf_is_derivative_of_cdf() {
        let h = 1e-6;
        for &x in &[0.1, 0.5, 1.0, 3.0, 7.5] {
            let fd = (ExponentialGain.cdf(x + h) - ExponentialGain.cdf(x - h)) / (2.0 * h);
            assert!((fd - ExponentialGain.pdf(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn shape_and_positivity() {
        let cfg = NetworkConfig::from_snr_db(2, 3, 10.0).unwrap();
        let g = sample_gains(&cfg, SeedSpec::new(11, 0));
        assert_eq!(g.num_transmitters(), 2);
        assert_eq!(g.num_channels(), 3);
        assert!(g.as_slice().iter().all(|&x| x > 0.0));
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = NetworkConfig::from_snr_db(4, 7, 0.0).unwrap();
        let a = sample_gains(&cfg, SeedSpec::new(99, 3));
        let b = sample_gains(&cfg, SeedSpec::new(99, 3));
        assert_eq!(a, b);
        let c = sample_gains(&cfg, SeedSpec::new(99, 4));
        assert_ne!(a, c);
    }

    #[test]
    fn trial_seeds_are_distinct_and_stable() {
        assert_ne!(derive_trial_seed(5, 0), derive_trial_seed(5, 1));
        assert_eq!(derive_trial_seed(5, 9), derive_trial_seed(5, 9));
        // Frozen value: guards the documented mixing against silent changes.
        let cfg = NetworkConfig::from_snr_db(1, 2, 0.0).unwrap();
        let g = sample_gains(&cfg, SeedSpec::new(0, 0));
        let again = sample_gains(&cfg, SeedSpec::new(0, 0));
        assert_eq!(g.as_slice(), again.as_slice());
        assert_eq!(derive_trial_seed(0, 0).0[..8], splitmix64_mix(0).to_le_bytes());
    }

    #[test]
    fn law_of_large_numbers() {
        let cfg = NetworkConfig::from_snr_db(100, 100, 10.0).unwrap();
        let g = sample_gains(&cfg, SeedSpec::new(2024, 0));
        let n = g.as_slice().len() as f64;
        let mean = g.as_slice().iter().sum::<f64>() / n;
        assert!((mean - 1.0).abs() < 0.05, "mean {mean}");
        let below = g
            .as_slice()
            .iter()
            .filter(|&&x| x <= std::f64::consts::LN_2)
            .count() as f64
            / n;
        assert!((below - 0.5).abs() < 0.02, "fraction below ln 2: {below}");
    }

    #[test]
    fn kolmogorov_smirnov_distance() {
        let cfg = NetworkConfig::from_snr_db(100, 1000, 10.0).unwrap();
        let mut xs = sample_gains(&cfg, SeedSpec::new(77, 1)).as_slice().to_vec();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = ExponentialGain.cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS distance {ks}");
    }

    #[test]
    fn from_rows_rejects_bad_input() {
        assert!(GainMatrix::from_rows(1, 2, vec![1.0]).is_err());
        assert!(GainMatrix::from_rows(1, 2, vec![1.0, -1.0]).is_err());
        assert!(GainMatrix::from_nested(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        let m = GainMatrix::from_nested(&[vec![4.0, 1.0], vec![1.0, 4.0]]).unwrap();
        assert_eq!(m.row(1), &[1.0, 4.0]);
    }

    proptest! {
        #[test]
        fn cdf_is_monotone(a in 0.0f64..60.0, b in 0.0f64..60.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(gain_cdf(lo).unwrap() <= gain_cdf(hi).unwrap());
        }

        #[test]
        fn sampling_is_pure(seed in any::<u64>(), trial in 0u64..1000, k in 1usize..5, n in 1usize..9) {
            let cfg = NetworkConfig::from_snr_db(k, n, 3.0).unwrap();
            prop_assert_eq!(
                sample_gains(&cfg, SeedSpec::new(seed, trial)),
                sample_gains(&cfg, SeedSpec::new(seed, trial))
            );
        }
    }
}
