//! Frequency-selective Rayleigh channel with the transmission impairments
//! used in the identification experiments: AWGN at a target SNR, carrier
//! frequency offset, fractional timing offset, and receive-side spatial
//! correlation. Doppler-induced time variation lives in [`crate::doppler`].
//!
//! When every impairment is applied, the composition order is fixed:
//! channel (or its Doppler variant) -> timing offset -> frequency offset ->
//! AWGN. Zero-valued impairments are exact identities, so the composed path
//! with all parameters at zero equals the plain channel path.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::stbc::{Stbc, TxFrame};
use crate::{Error, Result};

/// Channel and impairment parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Number of receive antennas.
    pub n_rx: usize,
    /// Number of multipath taps `L_h`.
    pub n_taps: usize,
    /// Exponential power delay profile decay: tap power `exp(-l / pdp_decay)`.
    pub pdp_decay: f64,
    /// Receive-side spatial correlation coefficient in [0, 1].
    pub rho: f64,
    /// Carrier frequency offset in subcarrier spacings.
    pub normalized_freq_offset: f64,
    /// Fractional timing offset in [0, 1).
    pub timing_mu: f64,
    /// Maximum Doppler frequency normalized to the sampling rate.
    pub normalized_doppler: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            n_rx: 2,
            n_taps: 4,
            pdp_decay: 5.0,
            rho: 0.0,
            normalized_freq_offset: 0.0,
            timing_mu: 0.0,
            normalized_doppler: 0.0,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rx < 2 {
            return Err(Error::Config(format!("n_rx must be >= 2, got {}", self.n_rx)));
        }
        if self.n_taps == 0 {
            return Err(Error::Config("n_taps must be >= 1".into()));
        }
        if self.pdp_decay <= 0.0 {
            return Err(Error::Config("pdp_decay must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::Config(format!("rho must be in [0, 1], got {}", self.rho)));
        }
        if !(0.0..1.0).contains(&self.timing_mu) {
            return Err(Error::Config(format!(
                "timing_mu must be in [0, 1), got {}",
                self.timing_mu
            )));
        }
        if self.normalized_doppler < 0.0 {
            return Err(Error::Config("normalized_doppler must be >= 0".into()));
        }
        Ok(())
    }

    /// Per-tap average powers, normalized to unit total so the channel
    /// preserves average power.
    pub fn pdp(&self) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.n_taps)
            .map(|l| (-(l as f64) / self.pdp_decay).exp())
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    }
}

/// One static channel draw: `taps[f][i]` is the `L_h`-tap impulse response
/// between transmit antenna `f` and receive antenna `i`.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub taps: Vec<Vec<Vec<Complex64>>>,
    /// Per-tap variances the draw was scaled by (kept for Doppler synthesis).
    pub tap_var: Vec<f64>,
}

impl ChannelRealization {
    pub fn n_rx(&self) -> usize {
        self.taps[0].len()
    }

    pub fn n_taps(&self) -> usize {
        self.tap_var.len()
    }
}

/// A received multi-antenna baseband capture.
#[derive(Debug, Clone)]
pub struct RxCapture {
    pub streams: Vec<Vec<Complex64>>,
    /// SNR the capture was generated at; infinite when noiseless.
    pub snr_db: f64,
    /// True scheme when the capture is synthetic.
    pub scheme: Option<Stbc>,
}

impl RxCapture {
    pub fn len(&self) -> usize {
        self.streams[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mean_power(&self) -> f64 {
        let total: f64 = self
            .streams
            .iter()
            .flat_map(|s| s.iter())
            .map(|z| z.norm_sqr())
            .sum();
        total / (self.streams.len() * self.len()) as f64
    }
}

fn complex_gaussian(rng: &mut ChaCha8Rng, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

/// Draws i.i.d. circular complex Gaussian taps with the configured power
/// delay profile. Deterministic given the seed.
pub fn draw_channel(cfg: &ChannelConfig, rng_seed: u64) -> ChannelRealization {
    let pdp = cfg.pdp();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let taps = (0..2)
        .map(|_| {
            (0..cfg.n_rx)
                .map(|_| pdp.iter().map(|&v| complex_gaussian(&mut rng, v)).collect())
                .collect()
        })
        .collect();
    ChannelRealization { taps, tap_var: pdp }
}

/// Receive-side Kronecker mixing for two receive antennas:
/// `[h'_{f0}, h'_{f1}]^T = R^{1/2} [h_{f0}, h_{f1}]^T`, `R = [[1, rho], [rho, 1]]`.
pub fn apply_spatial_correlation(real: &ChannelRealization, rho: f64) -> Result<ChannelRealization> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Config(format!("rho must be in [0, 1], got {rho}")));
    }
    if real.n_rx() != 2 {
        return Err(Error::Config(format!(
            "spatial correlation supports 2 receive antennas, got {}",
            real.n_rx()
        )));
    }
    // matrix square root of [[1, rho], [rho, 1]]
    let a = ((1.0 + rho).sqrt() + (1.0 - rho).sqrt()) / 2.0;
    let b = ((1.0 + rho).sqrt() - (1.0 - rho).sqrt()) / 2.0;
    let mut out = real.clone();
    for f in 0..2 {
        for l in 0..real.n_taps() {
            let h0 = real.taps[f][0][l];
            let h1 = real.taps[f][1][l];
            out.taps[f][0][l] = a * h0 + b * h1;
            out.taps[f][1][l] = b * h0 + a * h1;
        }
    }
    Ok(out)
}

/// Noiseless multipath reception: linear convolution per antenna pair,
/// summed over transmit antennas, truncated to the frame length.
pub fn apply_channel(frame: &TxFrame, real: &ChannelRealization) -> Result<RxCapture> {
    let k = frame.len();
    let l_h = real.n_taps();
    if k < l_h {
        return Err(Error::Shape(format!(
            "frame of {k} samples shorter than channel of {l_h} taps"
        )));
    }
    let mut streams = Vec::with_capacity(real.n_rx());
    for i in 0..real.n_rx() {
        let mut out = vec![Complex64::default(); k];
        for f in 0..2 {
            let taps = &real.taps[f][i];
            let s = &frame.streams[f];
            for (l, &h) in taps.iter().enumerate() {
                if h.norm_sqr() == 0.0 {
                    continue;
                }
                for kk in l..k {
                    out[kk] += h * s[kk - l];
                }
            }
        }
        streams.push(out);
    }
    Ok(RxCapture {
        streams,
        snr_db: f64::INFINITY,
        scheme: Some(frame.scheme),
    })
}

/// Adds complex AWGN per antenna. The noise variance is
/// `P_sig * 10^(-snr_db / 10)` with `P_sig` the measured mean power of the
/// capture; an infinite SNR is the identity.
pub fn add_awgn(capture: &RxCapture, snr_db: f64, rng_seed: u64) -> RxCapture {
    if snr_db.is_infinite() {
        return capture.clone();
    }
    let sigma_w = capture.mean_power() * 10f64.powf(-snr_db / 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let streams = capture
        .streams
        .iter()
        .map(|s| s.iter().map(|&z| z + complex_gaussian(&mut rng, sigma_w)).collect())
        .collect();
    RxCapture {
        streams,
        snr_db,
        scheme: capture.scheme,
    }
}

/// Carrier frequency offset of `delta_f` subcarrier spacings:
/// `r(k) <- r(k) * exp(j 2 pi delta_f k / N)`, phase reference at the first
/// received sample.
pub fn apply_frequency_offset(capture: &RxCapture, delta_f: f64, n_subcarriers: usize) -> RxCapture {
    if delta_f == 0.0 {
        return capture.clone();
    }
    let step = std::f64::consts::TAU * delta_f / n_subcarriers as f64;
    let streams = capture
        .streams
        .iter()
        .map(|s| {
            s.iter()
                .enumerate()
                .map(|(k, &z)| z * Complex64::from_polar(1.0, step * k as f64))
                .collect()
        })
        .collect();
    RxCapture {
        streams,
        snr_db: capture.snr_db,
        scheme: capture.scheme,
    }
}

/// Fractional timing offset modeled as the two-path channel `[1 - mu, mu]`.
pub fn apply_timing_offset(capture: &RxCapture, mu: f64) -> Result<RxCapture> {
    if !(0.0..1.0).contains(&mu) {
        return Err(Error::Config(format!("mu must be in [0, 1), got {mu}")));
    }
    if mu == 0.0 {
        return Ok(capture.clone());
    }
    let streams = capture
        .streams
        .iter()
        .map(|s| {
            let mut out = Vec::with_capacity(s.len());
            let mut prev = Complex64::default();
            for &z in s {
                out.push((1.0 - mu) * z + mu * prev);
                prev = z;
            }
            out
        })
        .collect();
    Ok(RxCapture {
        streams,
        snr_db: capture.snr_db,
        scheme: capture.scheme,
    })
}

/// Integer timing offset: drops the first `offset` samples of every stream.
/// The identifier's peak lags shift cyclically by the same amount.
pub fn discard_prefix(capture: &RxCapture, offset: usize) -> Result<RxCapture> {
    if offset >= capture.len() {
        return Err(Error::Bounds(format!(
            "offset {offset} >= capture length {}",
            capture.len()
        )));
    }
    let streams = capture.streams.iter().map(|s| s[offset..].to_vec()).collect();
    Ok(RxCapture {
        streams,
        snr_db: capture.snr_db,
        scheme: capture.scheme,
    })
}
