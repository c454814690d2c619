//! Integration checks of the correlation estimator and the end-to-end
//! discriminator: transmit-side peak structure, convergence toward the
//! analytic profile, shift equivariance, support under timing offsets, and
//! decision-level invariances.

use num_complex::Complex64;
use stbcid_core::channel::{
    add_awgn, apply_channel, discard_prefix, draw_channel, ChannelConfig, ChannelRealization,
    RxCapture,
};
use stbcid_core::identifier::{
    estimate_cross_correlation, exclusion_set, identify, locate_peak, theoretical_correlation,
    threshold, IdentifierConfig,
};
use stbcid_core::modulation::ModulationFormat;
use stbcid_core::ofdm::OfdmConfig;
use stbcid_core::stbc::{build_tx_frame, Stbc, TxFrame};

fn tx_frame(scheme: Stbc, n: usize, nu: usize, n_blocks: usize, seed: u64) -> TxFrame {
    let ofdm = OfdmConfig::new(n, nu, scheme).unwrap();
    build_tx_frame(n_blocks, &ofdm, ModulationFormat::qpsk(), seed).unwrap()
}

fn identity_realization() -> ChannelRealization {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::default();
    ChannelRealization {
        taps: vec![vec![vec![one], vec![zero]], vec![vec![zero], vec![one]]],
        tap_var: vec![1.0],
    }
}

fn idcfg(n: usize, nu: usize, l_hat: usize) -> IdentifierConfig {
    let mut c = IdentifierConfig::new(n, nu, 1e-3, 2).unwrap();
    c.assumed_path_count = l_hat;
    c
}

/// Transmit-side three-level peak structure: correlating the two transmit
/// streams directly must average to (N+nu)/2, (nu+1)/2, (2nu+1)/2 at lags
/// 0, N/2, N/2+nu and to zero elsewhere.
#[test]
fn transmit_side_peak_levels_and_null() {
    let (n, nu) = (16usize, 4usize);
    let b = n + nu;
    let cfg = idcfg(n, nu, 2);
    let trials = 1000;
    let mut mean = vec![Complex64::default(); b];
    for seed in 0..trials {
        let f = tx_frame(Stbc::Alamouti, n, nu, 12, seed);
        let p = estimate_cross_correlation(&f.streams[0], &f.streams[1], &cfg).unwrap();
        for (m, v) in mean.iter_mut().zip(&p.values) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= trials as f64);
    let noise_floor = 5.0 / (trials as f64).sqrt();
    for (tau, m) in mean.iter().enumerate() {
        match tau {
            0 => assert!((m.re - 10.0).abs() < 0.2, "tau 0: {m}"),
            8 => assert!((m.re - 2.5).abs() < 0.2, "tau N/2: {m}"),
            12 => assert!((m.re - 4.5).abs() < 0.2, "tau N/2+nu: {m}"),
            _ => assert!(m.norm() < noise_floor, "tau {tau}: {m} above noise floor"),
        }
    }
}

/// Spatially multiplexed streams have no cross-antenna structure: the
/// profile mean stays at the noise floor everywhere.
#[test]
fn spatial_mux_profile_is_null() {
    let (n, nu) = (16usize, 4usize);
    let cfg = idcfg(n, nu, 2);
    let trials = 1000;
    let mut mean = vec![Complex64::default(); n + nu];
    for seed in 0..trials {
        let f = tx_frame(Stbc::SpatialMux, n, nu, 12, seed);
        let p = estimate_cross_correlation(&f.streams[0], &f.streams[1], &cfg).unwrap();
        for (m, v) in mean.iter_mut().zip(&p.values) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= trials as f64);
    let noise_floor = 5.0 / (trials as f64).sqrt();
    for (tau, m) in mean.iter().enumerate() {
        assert!(m.norm() < noise_floor, "tau {tau}: {m}");
    }
}

/// The estimator converges to the analytic profile at the 1/sqrt(N_B) rate.
#[test]
fn estimator_converges_at_sqrt_rate() {
    let (n, nu) = (16usize, 4usize);
    let cfg = idcfg(n, nu, 2);
    let real = identity_realization();
    let theory = theoretical_correlation(&real, 1.0, &cfg).unwrap();
    let reps = 30u64;
    let mut mean_dev = Vec::new();
    for &n_b in &[10usize, 40, 160] {
        let mut acc = 0.0;
        for rep in 0..reps {
            let frame = tx_frame(Stbc::Alamouti, n, nu, n_b, 1000 * n_b as u64 + rep);
            let rx = apply_channel(&frame, &real).unwrap();
            let p = estimate_cross_correlation(&rx.streams[0], &rx.streams[1], &cfg).unwrap();
            let dev = p
                .values
                .iter()
                .zip(&theory.values)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            acc += dev;
        }
        mean_dev.push(acc / reps as f64);
    }
    assert!(
        mean_dev[0] > mean_dev[1] && mean_dev[1] > mean_dev[2],
        "deviations not decreasing: {mean_dev:?}"
    );
    // averaging runs over N_B - 2 block products, so the expected ratio
    // between N_B = 10 and N_B = 160 is sqrt(158/8) ~ 4.4
    let ratio = mean_dev[0] / mean_dev[2];
    assert!((3.0..6.5).contains(&ratio), "deviation ratio {ratio}, {mean_dev:?}");
}

/// Cyclically rotating both received streams moves the peak lag by exactly
/// the rotation amount.
#[test]
fn peak_is_shift_equivariant() {
    let (n, nu) = (64usize, 16usize);
    let b = n + nu;
    let cfg = idcfg(n, nu, 4);
    let frame = tx_frame(Stbc::Alamouti, n, nu, 20, 11);
    let rx = apply_channel(&frame, &identity_realization()).unwrap();
    let base = locate_peak(&estimate_cross_correlation(&rx.streams[0], &rx.streams[1], &cfg).unwrap());
    assert_eq!(base, 0);
    for d in [3usize, 17, 79] {
        let rot: Vec<Vec<Complex64>> = rx
            .streams
            .iter()
            .map(|s| {
                let mut v = s[d..].to_vec();
                v.extend_from_slice(&s[..d]);
                v
            })
            .collect();
        let p = estimate_cross_correlation(&rot[0], &rot[1], &cfg).unwrap();
        // rotating left by d delays the block pattern by B - d
        assert_eq!(locate_peak(&p), (b - d) % b, "rotation {d}");
    }
}

/// With an integer timing offset, every statistically significant lag stays
/// inside the exclusion region anchored at the offset.
#[test]
fn significant_support_follows_integer_offset() {
    let (n, nu) = (64usize, 16usize);
    let l_h = 4usize;
    let cfg = idcfg(n, nu, l_h);
    let ch = ChannelConfig {
        n_taps: l_h,
        ..ChannelConfig::default()
    };
    let eta = threshold(1e-3, n, nu, 1).unwrap();
    for seed in 0..5u64 {
        let frame = tx_frame(Stbc::Alamouti, n, nu, 42, seed);
        let real = draw_channel(&ch, 100 + seed);
        let rx = apply_channel(&frame, &real).unwrap();
        let offset = 7usize;
        let shifted = discard_prefix(&rx, offset).unwrap();
        let p =
            estimate_cross_correlation(&shifted.streams[0], &shifted.streams[1], &cfg).unwrap();
        let tau0 = (n + nu - offset) % (n + nu);
        let allowed = exclusion_set(tau0, &cfg);
        let tau_p = locate_peak(&p);
        assert!(allowed.lags.contains(&tau_p), "peak {tau_p} outside window of {tau0}");
        let excl = exclusion_set(tau_p, &cfg);
        let feature = stbcid_core::identifier::normalized_feature(&p, &excl).unwrap();
        for (tau, &f) in feature.iter().enumerate() {
            if f >= eta {
                assert!(
                    allowed.lags.contains(&tau),
                    "significant lag {tau} outside support of offset {offset} (seed {seed})"
                );
            }
        }
    }
}

/// Scaling both streams by any nonzero complex factor leaves the feature,
/// the statistic, and the verdict unchanged.
#[test]
fn decision_is_scale_invariant() {
    let (n, nu) = (64usize, 16usize);
    let cfg = idcfg(n, nu, 4);
    let frame = tx_frame(Stbc::Alamouti, n, nu, 20, 21);
    let rx = apply_channel(&frame, &draw_channel(&ChannelConfig::default(), 3)).unwrap();
    let noisy = add_awgn(&rx, 10.0, 4);
    let base = identify(&noisy, &cfg).unwrap();
    let alpha = Complex64::new(-3.7e-3, 2.9e4);
    let scaled = RxCapture {
        streams: noisy
            .streams
            .iter()
            .map(|s| s.iter().map(|&z| alpha * z).collect())
            .collect(),
        snr_db: noisy.snr_db,
        scheme: noisy.scheme,
    };
    let got = identify(&scaled, &cfg).unwrap();
    assert_eq!(base.verdict, got.verdict);
    assert!((base.statistic - got.statistic).abs() <= 1e-9 * base.statistic.abs());
    for (a, b) in base.feature.iter().zip(&got.feature) {
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }
}

/// Pure-noise streams behave like the SM hypothesis: verdicts are almost
/// always SM at a small false-alarm target.
#[test]
fn pure_noise_rarely_declares_alamouti() {
    let (n, nu) = (64usize, 16usize);
    let cfg = idcfg(n, nu, 4);
    let scenario = stbcid_core::montecarlo::Scenario {
        ofdm: OfdmConfig::new(n, nu, Stbc::SpatialMux).unwrap(),
        modulation: ModulationFormat::qpsk(),
        channel: ChannelConfig::default(),
        identifier: cfg,
        snr_db: -100.0, // the received samples are essentially pure noise
        n_blocks: 30,
        master_seed: 9,
        aligned_start: false,
    };
    let trials = 200;
    let mut false_alarms = 0;
    for seed in 0..trials {
        let capture =
            stbcid_core::montecarlo::synthesize_capture(&scenario, Stbc::SpatialMux, seed)
                .unwrap();
        if identify(&capture, &cfg).unwrap().verdict == Stbc::Alamouti {
            false_alarms += 1;
        }
    }
    // target p_fa = 1e-3; allow generous slack for the finite-sample
    // inflation of the normalized statistic
    assert!(false_alarms <= 5, "false alarms {false_alarms}/{trials}");
}
