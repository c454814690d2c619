//! Time-selective Rayleigh fading via a Jakes-style sum of sinusoids.
//!
//! Each channel tap becomes a stationary complex Gaussian process whose
//! autocorrelation approximates `J0(2 pi f_d k)`, with `f_d` the maximum
//! Doppler frequency normalized to the sampling rate. A zero Doppler
//! frequency reduces exactly to the static channel of
//! [`crate::channel::apply_channel`].

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{ChannelRealization, RxCapture};
use crate::stbc::TxFrame;
use crate::{Error, Result};

/// Number of sinusoidal oscillators summed per fading tap.
const N_OSC: usize = 16;

/// One time-varying tap: a normalized sum of `N_OSC` rotating phasors whose
/// arrival angles are uniform, giving the classic U-shaped Doppler spectrum.
struct FadingTap {
    /// Current oscillator phasors (unit magnitude each).
    state: Vec<Complex64>,
    /// Per-sample rotation of each oscillator: `exp(j 2 pi f_d cos(alpha_m))`.
    step: Vec<Complex64>,
    /// Scales the phasor sum to the tap's target power.
    amplitude: f64,
}

impl FadingTap {
    fn new(variance: f64, f_d: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut state = Vec::with_capacity(N_OSC);
        let mut step = Vec::with_capacity(N_OSC);
        for _ in 0..N_OSC {
            let alpha: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            state.push(Complex64::from_polar(1.0, phi));
            step.push(Complex64::from_polar(
                1.0,
                std::f64::consts::TAU * f_d * alpha.cos(),
            ));
        }
        FadingTap {
            state,
            step,
            amplitude: (variance / N_OSC as f64).sqrt(),
        }
    }

    /// Tap gain at the current sample instant.
    fn gain(&self) -> Complex64 {
        self.amplitude * self.state.iter().sum::<Complex64>()
    }

    /// Advances every oscillator by one sample.
    fn advance(&mut self) {
        for (s, d) in self.state.iter_mut().zip(&self.step) {
            *s *= *d;
        }
    }
}

/// Multipath reception through a channel whose taps fade over time.
///
/// The static realization fixes the per-tap variances; the fading processes
/// are drawn from `rng_seed`. With `f_d == 0` the gains are constant and the
/// static realization is used verbatim, so the output matches
/// [`crate::channel::apply_channel`] exactly.
pub fn apply_doppler(
    frame: &TxFrame,
    real: &ChannelRealization,
    f_d: f64,
    rng_seed: u64,
) -> Result<RxCapture> {
    if f_d < 0.0 {
        return Err(Error::Config(format!("doppler frequency must be >= 0, got {f_d}")));
    }
    if f_d == 0.0 {
        return crate::channel::apply_channel(frame, real);
    }
    let k = frame.len();
    let l_h = real.n_taps();
    if k < l_h {
        return Err(Error::Shape(format!(
            "frame of {k} samples shorter than channel of {l_h} taps"
        )));
    }
    let n_rx = real.n_rx();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut taps: Vec<Vec<Vec<FadingTap>>> = (0..2)
        .map(|_| {
            (0..n_rx)
                .map(|_| {
                    real.tap_var
                        .iter()
                        .map(|&v| FadingTap::new(v, f_d, &mut rng))
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut streams = vec![vec![Complex64::default(); k]; n_rx];
    for kk in 0..k {
        for (i, stream) in streams.iter_mut().enumerate() {
            let mut acc = Complex64::default();
            for (f, frame_stream) in frame.streams.iter().enumerate() {
                for (l, tap) in taps[f][i].iter().enumerate() {
                    if l <= kk {
                        acc += tap.gain() * frame_stream[kk - l];
                    }
                }
            }
            stream[kk] = acc;
        }
        for per_tx in &mut taps {
            for per_rx in per_tx {
                for tap in per_rx {
                    tap.advance();
                }
            }
        }
    }
    Ok(RxCapture {
        streams,
        snr_db: f64::INFINITY,
        scheme: Some(frame.scheme),
    })
}
