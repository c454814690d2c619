//! End-to-end Monte Carlo harness: generate -> channel -> impair -> identify,
//! aggregated into probabilities of correct identification with confidence
//! intervals, over single scenarios or experiment grids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    add_awgn, apply_channel, apply_frequency_offset, apply_spatial_correlation,
    apply_timing_offset, draw_channel, ChannelConfig, RxCapture,
};
use crate::doppler::apply_doppler;
use crate::identifier::{identify, IdentifierConfig};
use crate::modulation::ModulationFormat;
use crate::ofdm::OfdmConfig;
use crate::stbc::{build_tx_frame, Stbc};
use crate::{Error, Result};

/// One fully specified experiment point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub ofdm: OfdmConfig,
    pub modulation: ModulationFormat,
    pub channel: ChannelConfig,
    pub identifier: IdentifierConfig,
    pub snr_db: f64,
    /// Observed OFDM blocks per trial, `N_B`.
    pub n_blocks: usize,
    pub master_seed: u64,
    /// When false (the default experiment mode), each capture starts at a
    /// random integer offset inside a block, exercising the absence of block
    /// synchronization. Set true for aligned-start oracle tests.
    pub aligned_start: bool,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.identifier.validate()?;
        if self.ofdm.n_subcarriers != self.identifier.n_subcarriers
            || self.ofdm.cp_len != self.identifier.cp_len
        {
            return Err(Error::Config(
                "identifier block geometry differs from the OFDM geometry".into(),
            ));
        }
        if self.channel.n_rx != self.identifier.n_rx {
            return Err(Error::Config(format!(
                "channel has {} receive antennas but the identifier expects {}",
                self.channel.n_rx, self.identifier.n_rx
            )));
        }
        if self.n_blocks < 2 {
            return Err(Error::Config(format!(
                "need at least 2 observed blocks, got {}",
                self.n_blocks
            )));
        }
        Ok(())
    }
}

/// Outcome of a single trial; replayable from `(scenario, seed)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub true_scheme: Stbc,
    pub verdict: Stbc,
    pub statistic: f64,
    pub threshold: f64,
    pub seed: u64,
}

/// Aggregated result for one scenario.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRecord {
    pub scenario: Scenario,
    pub trials_per_class: usize,
    /// P(verdict = AL | AL transmitted).
    pub p_al_given_al: f64,
    /// P(verdict = SM | SM transmitted).
    pub p_sm_given_sm: f64,
    /// Average probability of correct identification.
    pub p_c: f64,
    /// 95% Wilson interval on `p_c` over the pooled trials.
    pub ci_low: f64,
    pub ci_high: f64,
    pub wall_time_s: f64,
}

/// Stable 64-bit mixer (splitmix64 finalizer).
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the per-trial seed from the master seed, grid-point index, truth
/// class, and trial index; independent of execution order.
pub fn derive_seed(master: u64, point: u64, class: u64, trial: u64) -> u64 {
    let mut z = splitmix64(master);
    z = splitmix64(z ^ point);
    z = splitmix64(z ^ class);
    z = splitmix64(z ^ trial);
    z
}

/// Synthesizes one received capture: transmit frame, channel with all
/// configured impairments, additive noise. The impairment order is fixed:
/// channel (static or fading) -> timing offset -> frequency offset ->
/// start-offset discard -> AWGN.
pub fn synthesize_capture(
    scenario: &Scenario,
    true_scheme: Stbc,
    trial_seed: u64,
) -> Result<RxCapture> {
    let mut ofdm = scenario.ofdm;
    ofdm.scheme = true_scheme;
    let ch = &scenario.channel;
    let block_len = ofdm.block_len();
    // generate two spare blocks so a random start offset never shortens the
    // observation window; keep the count even for Alamouti pairing
    let mut n_gen = scenario.n_blocks + 2;
    if true_scheme == Stbc::Alamouti && n_gen % 2 != 0 {
        n_gen += 1;
    }
    let frame = build_tx_frame(n_gen, &ofdm, scenario.modulation, splitmix64(trial_seed ^ 1))?;
    let mut real = draw_channel(ch, splitmix64(trial_seed ^ 2));
    if ch.rho > 0.0 {
        real = apply_spatial_correlation(&real, ch.rho)?;
    }
    let mut capture = if ch.normalized_doppler > 0.0 {
        apply_doppler(
            &frame,
            &real,
            ch.normalized_doppler,
            splitmix64(trial_seed ^ 3),
        )?
    } else {
        apply_channel(&frame, &real)?
    };
    if ch.timing_mu > 0.0 {
        capture = apply_timing_offset(&capture, ch.timing_mu)?;
    }
    if ch.normalized_freq_offset != 0.0 {
        capture = apply_frequency_offset(&capture, ch.normalized_freq_offset, ofdm.n_subcarriers);
    }
    let offset = if scenario.aligned_start {
        0
    } else {
        ChaCha8Rng::seed_from_u64(splitmix64(trial_seed ^ 5)).gen_range(0..block_len)
    };
    let keep = scenario.n_blocks * block_len;
    capture.streams = capture
        .streams
        .iter()
        .map(|s| s[offset..offset + keep].to_vec())
        .collect();
    Ok(add_awgn(&capture, scenario.snr_db, splitmix64(trial_seed ^ 4)))
}

/// Runs one trial end to end with the real discriminator.
pub fn run_trial(scenario: &Scenario, true_scheme: Stbc, trial_seed: u64) -> Result<TrialOutcome> {
    let capture = synthesize_capture(scenario, true_scheme, trial_seed)?;
    let report = identify(&capture, &scenario.identifier)?;
    Ok(TrialOutcome {
        true_scheme,
        verdict: report.verdict,
        statistic: report.statistic,
        threshold: report.threshold,
        seed: trial_seed,
    })
}

/// 95% Wilson score interval for `successes` out of `n`.
pub fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054; // 97.5th normal percentile
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Runs `n_trials` per class with an arbitrary classifier and returns the
/// per-class correct counts `(al_correct, sm_correct)`. `point` feeds the
/// seed derivation so grid sweeps stay order-independent.
pub fn run_trials_with<C>(
    scenario: &Scenario,
    n_trials: usize,
    point: u64,
    classify: C,
) -> Result<(usize, usize)>
where
    C: Fn(&RxCapture, u64) -> Result<Stbc> + Sync,
{
    let count = |scheme: Stbc, class: u64| -> Result<usize> {
        (0..n_trials as u64)
            .into_par_iter()
            .map(|t| {
                let seed = derive_seed(scenario.master_seed, point, class, t);
                let capture = synthesize_capture(scenario, scheme, seed)?;
                Ok(usize::from(classify(&capture, seed)? == scheme))
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))
    };
    Ok((count(Stbc::Alamouti, 0)?, count(Stbc::SpatialMux, 1)?))
}

/// Estimates the average probability of correct identification at one
/// scenario with the real discriminator.
pub fn estimate_pc(scenario: &Scenario, n_trials: usize) -> Result<ResultRecord> {
    estimate_pc_at_point(scenario, n_trials, 0)
}

fn estimate_pc_at_point(scenario: &Scenario, n_trials: usize, point: u64) -> Result<ResultRecord> {
    scenario.validate()?;
    if n_trials == 0 {
        return Err(Error::Config("need at least one trial per class".into()));
    }
    let start = std::time::Instant::now();
    let idc: IdentifierConfig = scenario.identifier;
    let (al_ok, sm_ok) = run_trials_with(scenario, n_trials, point, |capture, _| {
        Ok(identify(capture, &idc)?.verdict)
    })?;
    let n = n_trials as f64;
    let (ci_low, ci_high) = wilson_interval(al_ok + sm_ok, 2 * n_trials);
    Ok(ResultRecord {
        scenario: *scenario,
        trials_per_class: n_trials,
        p_al_given_al: al_ok as f64 / n,
        p_sm_given_sm: sm_ok as f64 / n,
        p_c: 0.5 * (al_ok as f64 / n + sm_ok as f64 / n),
        ci_low,
        ci_high,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Runs every scenario of a grid, one `ResultRecord` per point, in grid
/// order. Seeds derive from `(scenario.master_seed, point index)`, so the
/// result is independent of the parallelism degree.
pub fn sweep(grid: &[Scenario], n_trials: usize) -> Result<Vec<ResultRecord>> {
    grid.iter()
        .enumerate()
        .map(|(idx, sc)| estimate_pc_at_point(sc, n_trials, idx as u64))
        .collect()
}
