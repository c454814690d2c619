//! Blind discrimination of Alamouti-coded (AL) versus spatially multiplexed
//! (SM) MIMO-OFDM signals from raw baseband captures.
//!
//! The discriminating feature is a lag-domain cross-correlation between the
//! received streams of two antennas: one stream is cut into `(N + nu)`-length
//! blocks at every cyclic shift, the partner stream's next block is
//! index-reversed, and the averaged inner products exhibit three groups of
//! peaks for AL signals while staying statistically null for SM signals.
//! A chi-square normalized test statistic with a constant-false-alarm
//! threshold turns the peak search into a binary decision.
//!
//! The crate also ships the full transmit chain (constellation mapping,
//! Alamouti/SM encoding, OFDM modulation with cyclic prefix), a multipath
//! Rayleigh channel simulator with the usual impairments (AWGN, carrier
//! frequency offset, fractional timing offset, Jakes Doppler fading, receive
//! spatial correlation), and a Monte Carlo harness for identification
//! performance studies.

pub mod channel;
pub mod doppler;
mod error;
pub mod identifier;
pub mod modulation;
pub mod montecarlo;
pub mod ofdm;
pub mod stbc;

pub use error::{Error, Result};

/// Double-precision complex baseband sample.
pub type ComplexSample = num_complex::Complex64;
