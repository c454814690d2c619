//! The blind AL/SM discriminator.
//!
//! Pipeline per receive-antenna pair: estimate the lag-domain
//! cross-correlation profile, locate its peak, build the exclusion set
//! around the peak and its two aliases, normalize the profile into a
//! chi-square feature, then combine pairs, take the maximum, and compare
//! against a constant-false-alarm threshold.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::Serialize;

use crate::channel::{ChannelRealization, RxCapture};
use crate::stbc::Stbc;
use crate::{Error, Result};

/// Parameters of the discriminator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct IdentifierConfig {
    pub n_subcarriers: usize,
    pub cp_len: usize,
    /// Assumed channel length used to size the exclusion windows. Does not
    /// need to match the true channel; a reasonably large value suffices.
    pub assumed_path_count: usize,
    /// Target false-alarm probability (deciding AL on an SM capture).
    pub p_fa: f64,
    pub n_rx: usize,
}

impl IdentifierConfig {
    pub fn new(n_subcarriers: usize, cp_len: usize, p_fa: f64, n_rx: usize) -> Result<Self> {
        // default window half-size 8, clamped so small toy geometries keep a
        // nonempty off-peak region
        let assumed_path_count = 8.min(((n_subcarriers + cp_len) / 8).max(1));
        let cfg = Self {
            n_subcarriers,
            cp_len,
            assumed_path_count,
            p_fa,
            n_rx,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers < 4 || !self.n_subcarriers.is_power_of_two() {
            return Err(Error::Config(format!(
                "n_subcarriers must be a power of two >= 4, got {}",
                self.n_subcarriers
            )));
        }
        if self.cp_len == 0 || self.cp_len >= self.n_subcarriers {
            return Err(Error::Config(format!(
                "cp_len must satisfy 0 < cp_len < n_subcarriers, got {}",
                self.cp_len
            )));
        }
        if self.assumed_path_count == 0
            || 3 * (2 * self.assumed_path_count - 1) >= self.block_len()
        {
            return Err(Error::Config(format!(
                "assumed_path_count {} leaves no off-peak lags for a block length of {}",
                self.assumed_path_count,
                self.block_len()
            )));
        }
        if !(self.p_fa > 0.0 && self.p_fa < 1.0) {
            return Err(Error::Config(format!("p_fa must be in (0, 1), got {}", self.p_fa)));
        }
        if self.n_rx < 2 {
            return Err(Error::Config(format!("n_rx must be >= 2, got {}", self.n_rx)));
        }
        Ok(())
    }

    /// Total block length `N + nu`.
    pub fn block_len(&self) -> usize {
        self.n_subcarriers + self.cp_len
    }

    /// Number of receive-antenna pairs `N_c = N_r (N_r - 1) / 2`.
    pub fn n_pairs(&self) -> usize {
        self.n_rx * (self.n_rx - 1) / 2
    }
}

/// Index reversal inside a block: `rev(p) = mod(-(p - nu), N) + nu`.
///
/// Maps `[0, N + nu)` into `[nu, N + nu)`; `p = nu` is a fixed point. The
/// reversed block of the partner stream pairs sample `p` of one block with
/// sample `rev(p)` of the next so Alamouti conjugate structure lines up.
pub fn reversal_index(p: usize, n_subcarriers: usize, cp_len: usize) -> Result<usize> {
    let (n, nu) = (n_subcarriers as i64, cp_len as i64);
    let p = p as i64;
    if p < 0 || p >= n + nu {
        return Err(Error::Bounds(format!("p={p} outside [0, {})", n + nu)));
    }
    Ok(((-(p - nu)).rem_euclid(n) + nu) as usize)
}

/// Lag-domain cross-correlation profile of one antenna pair.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationProfile {
    /// `R(tau)` for `tau = 0 .. N + nu`.
    pub values: Vec<Complex64>,
    /// Receive-antenna pair `(i, j)`, `i < j`.
    pub pair: (usize, usize),
    /// Number of block products averaged per lag.
    pub n_blocks_used: usize,
}

/// Splits a complex stream into padded real/imaginary arrays of `len`.
fn split_padded(s: &[Complex64], len: usize) -> (Vec<f64>, Vec<f64>) {
    let mut re = vec![0.0; len];
    let mut im = vec![0.0; len];
    for (k, z) in s.iter().enumerate() {
        re[k] = z.re;
        im[k] = z.im;
    }
    (re, im)
}

/// Estimates the cross-correlation profile between two received streams.
///
/// For each lag `tau`, block `q` of the `tau`-shifted first stream is
/// multiplied (no conjugation) against the index-reversed block `q + 1` of
/// the `tau`-shifted second stream, and the products are averaged over `q`.
/// The average runs over `q = 0 .. N_B - 3` so that block `q + 1` is always
/// complete for every shift; with only two blocks available the single
/// `q = 0` term is used with zero padding.
pub fn estimate_cross_correlation(
    stream_i: &[Complex64],
    stream_j: &[Complex64],
    cfg: &IdentifierConfig,
) -> Result<CorrelationProfile> {
    let b = cfg.block_len();
    let (n, nu) = (cfg.n_subcarriers, cfg.cp_len);
    if stream_i.len() != stream_j.len() {
        return Err(Error::Shape(format!(
            "stream lengths differ: {} vs {}",
            stream_i.len(),
            stream_j.len()
        )));
    }
    let k = stream_i.len();
    if k < 2 * b {
        return Err(Error::Shape(format!(
            "need at least {} samples (two blocks), got {k}",
            2 * b
        )));
    }
    let n_blocks = k.div_ceil(b);
    let n_used = n_blocks.saturating_sub(2).max(1);
    // pad generously so every shifted/reversed read stays in-bounds; the
    // padding is zero and contributes nothing
    let kp = (n_blocks + 2) * b;
    let (xr, xi) = split_padded(stream_i, kp);
    let (yr, yi) = split_padded(stream_j, kp);
    // reversed copy of the second stream turns both reversal branches into
    // forward contiguous dot products
    let mut wr = vec![0.0; kp];
    let mut wi = vec![0.0; kp];
    for t in 0..kp {
        wr[t] = yr[kp - 1 - t];
        wi[t] = yi[kp - 1 - t];
    }
    let mut values = Vec::with_capacity(b);
    for tau in 0..b {
        let mut acc_re = 0.0;
        let mut acc_im = 0.0;
        for q in 0..n_used {
            let b1 = q * b + tau;
            let b2 = b1 + b;
            // p in [0, nu]: rev(p) = 2 nu - p, so the reversed-stream index
            // kp - 1 - (b2 + 2 nu - p) advances with p
            let c1 = kp - 1 - b2 - 2 * nu;
            dot_acc(
                &xr[b1..=b1 + nu],
                &xi[b1..=b1 + nu],
                &wr[c1..=c1 + nu],
                &wi[c1..=c1 + nu],
                &mut acc_re,
                &mut acc_im,
            );
            // p in [nu + 1, b): rev(p) = N + 2 nu - p
            let c2 = kp - 1 - b2 - n - 2 * nu;
            let lo = nu + 1;
            dot_acc(
                &xr[b1 + lo..b1 + b],
                &xi[b1 + lo..b1 + b],
                &wr[c2 + lo..c2 + b],
                &wi[c2 + lo..c2 + b],
                &mut acc_re,
                &mut acc_im,
            );
        }
        let scale = (n_used as f64).recip();
        values.push(Complex64::new(acc_re * scale, acc_im * scale));
    }
    Ok(CorrelationProfile {
        values,
        pair: (0, 1),
        n_blocks_used: n_used,
    })
}

/// Accumulates the complex (non-conjugated) dot product of two split-format
/// segments into `(acc_re, acc_im)`.
#[inline]
fn dot_acc(ar: &[f64], ai: &[f64], br: &[f64], bi: &[f64], acc_re: &mut f64, acc_im: &mut f64) {
    let mut re = 0.0;
    let mut im = 0.0;
    for (((&xr, &xi), &yr), &yi) in ar.iter().zip(ai).zip(br).zip(bi) {
        re += xr * yr - xi * yi;
        im += xr * yi + xi * yr;
    }
    *acc_re += re;
    *acc_im += im;
}

/// Index of the profile's largest magnitude; ties break toward smaller lag.
pub fn locate_peak(profile: &CorrelationProfile) -> usize {
    let mut best = 0;
    let mut best_val = profile.values[0].norm_sqr();
    for (tau, z) in profile.values.iter().enumerate().skip(1) {
        let v = z.norm_sqr();
        if v > best_val {
            best = tau;
            best_val = v;
        }
    }
    best
}

/// Lags excluded from the noise-variance estimate: a window of width
/// `2 L - 1` around the detected peak and around each of its two aliases.
#[derive(Debug, Clone, Serialize)]
pub struct ExclusionSet {
    pub lags: BTreeSet<usize>,
    pub tau_p: usize,
    pub tau_p1: usize,
    pub tau_p2: usize,
}

/// Builds the exclusion set for peak lag `tau_p`: windows of width
/// `2 L - 1` centered at `tau_p`, `tau_p + N/2`, and `tau_p + N/2 + nu`,
/// all reduced modulo `N + nu` and merged into a true set.
pub fn exclusion_set(tau_p: usize, cfg: &IdentifierConfig) -> ExclusionSet {
    let b = cfg.block_len() as i64;
    let l = cfg.assumed_path_count as i64;
    let tau_p1 = ((tau_p + cfg.n_subcarriers / 2) % cfg.block_len()) as i64;
    let tau_p2 = ((tau_p + cfg.n_subcarriers / 2 + cfg.cp_len) % cfg.block_len()) as i64;
    let mut lags = BTreeSet::new();
    for center in [tau_p as i64, tau_p1, tau_p2] {
        for off in -(l - 1)..=(l - 1) {
            lags.insert((center + off).rem_euclid(b) as usize);
        }
    }
    ExclusionSet {
        lags,
        tau_p,
        tau_p1: tau_p1 as usize,
        tau_p2: tau_p2 as usize,
    }
}

/// Normalizes a profile into the per-lag feature
/// `F(tau) = 2 |R(tau)|^2 / mean_{tau' not excluded} |R(tau')|^2`.
///
/// The denominator estimates the H0 variance of the estimator; under SM the
/// feature is asymptotically chi-square with two degrees of freedom.
pub fn normalized_feature(profile: &CorrelationProfile, excl: &ExclusionSet) -> Result<Vec<f64>> {
    let b = profile.values.len();
    let n_off = b - excl.lags.len();
    if n_off == 0 {
        return Err(Error::Numeric(
            "exclusion set covers every lag; no off-peak region left".into(),
        ));
    }
    let mut denom = 0.0;
    for (tau, z) in profile.values.iter().enumerate() {
        if !excl.lags.contains(&tau) {
            denom += z.norm_sqr();
        }
    }
    denom /= n_off as f64;
    if denom <= 0.0 {
        return Err(Error::Numeric(
            "off-peak profile is identically zero; feature undefined".into(),
        ));
    }
    Ok(profile
        .values
        .iter()
        .map(|z| 2.0 * z.norm_sqr() / denom)
        .collect())
}

/// Elementwise sum of the per-pair features.
pub fn combine_features(features: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = features
        .first()
        .ok_or_else(|| Error::Shape("no features to combine".into()))?;
    let mut out = vec![0.0; first.len()];
    for f in features {
        if f.len() != out.len() {
            return Err(Error::Shape(format!(
                "feature lengths differ: {} vs {}",
                f.len(),
                out.len()
            )));
        }
        for (o, v) in out.iter_mut().zip(f) {
            *o += v;
        }
    }
    Ok(out)
}

/// Closed-form threshold for a single antenna pair:
/// `eta = -2 ln(1 - (1 - p_fa)^(1 / (N + nu)))`.
pub fn threshold_closed_form(p_fa: f64, n_subcarriers: usize, cp_len: usize) -> f64 {
    let b = (n_subcarriers + cp_len) as f64;
    -2.0 * (1.0 - (1.0 - p_fa).powf(b.recip())).ln()
}

/// Threshold by bisection on the chi-square CDF with `2 n_pairs` degrees of
/// freedom: solves `P(n_pairs, eta / 2) = (1 - p_fa)^(1 / (N + nu))` where
/// `P` is the regularized lower incomplete gamma function.
pub fn threshold_numeric(
    p_fa: f64,
    n_subcarriers: usize,
    cp_len: usize,
    n_pairs: usize,
) -> Result<f64> {
    let b = (n_subcarriers + cp_len) as f64;
    let target = (1.0 - p_fa).powf(b.recip());
    let a = n_pairs as f64;
    let cdf = |eta: f64| statrs::function::gamma::gamma_lr(a, eta / 2.0);
    let mut lo = 0.0;
    let mut hi = 4.0 * (2.0 * n_pairs as f64 + 40.0 * b.ln());
    let mut grow = 0;
    while cdf(hi) < target {
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::Numeric(format!(
                "threshold bracket failed to capture the CDF target {target}"
            )));
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= 1e-10 * mid.max(1.0) {
            return Ok(mid);
        }
        if cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Decision threshold for the combined statistic: closed form for a single
/// pair, bisection otherwise.
pub fn threshold(p_fa: f64, n_subcarriers: usize, cp_len: usize, n_pairs: usize) -> Result<f64> {
    if !(p_fa > 0.0 && p_fa < 1.0) {
        return Err(Error::Config(format!("p_fa must be in (0, 1), got {p_fa}")));
    }
    if n_pairs == 0 {
        return Err(Error::Config("need at least one antenna pair".into()));
    }
    if n_pairs == 1 {
        Ok(threshold_closed_form(p_fa, n_subcarriers, cp_len))
    } else {
        threshold_numeric(p_fa, n_subcarriers, cp_len, n_pairs)
    }
}

/// Diagnostics retained for one receive-antenna pair.
#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub profile: CorrelationProfile,
    pub tau_p: usize,
    pub feature: Vec<f64>,
}

/// Full decision record of one identification run.
#[derive(Debug, Clone, Serialize)]
pub struct DecisionReport {
    pub verdict: Stbc,
    /// Test statistic: maximum of the combined feature.
    pub statistic: f64,
    pub threshold: f64,
    /// Lag of the combined-feature maximum.
    pub tau_p: usize,
    /// Combined feature over all lags.
    pub feature: Vec<f64>,
    pub pairs: Vec<PairReport>,
    pub p_fa: f64,
}

/// Runs the full discriminator on a capture: per-pair correlation, peak,
/// exclusion, normalization; pairwise combination; threshold test.
/// Verdict is AL iff the statistic reaches the threshold.
pub fn identify(capture: &RxCapture, cfg: &IdentifierConfig) -> Result<DecisionReport> {
    cfg.validate()?;
    if capture.streams.len() < cfg.n_rx {
        return Err(Error::Shape(format!(
            "capture has {} streams but the configuration expects {}",
            capture.streams.len(),
            cfg.n_rx
        )));
    }
    let mut pairs = Vec::with_capacity(cfg.n_pairs());
    for i in 0..cfg.n_rx {
        for j in i + 1..cfg.n_rx {
            let mut profile =
                estimate_cross_correlation(&capture.streams[i], &capture.streams[j], cfg)?;
            profile.pair = (i, j);
            let tau_p = locate_peak(&profile);
            let excl = exclusion_set(tau_p, cfg);
            let feature = normalized_feature(&profile, &excl)?;
            pairs.push(PairReport {
                profile,
                tau_p,
                feature,
            });
        }
    }
    let features: Vec<Vec<f64>> = pairs.iter().map(|p| p.feature.clone()).collect();
    let combined = combine_features(&features)?;
    let (tau_p, statistic) = combined
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |(bt, bv), (t, &v)| {
            if v > bv {
                (t, v)
            } else {
                (bt, bv)
            }
        });
    let eta = threshold(cfg.p_fa, cfg.n_subcarriers, cfg.cp_len, cfg.n_pairs())?;
    Ok(DecisionReport {
        verdict: if statistic >= eta {
            Stbc::Alamouti
        } else {
            Stbc::SpatialMux
        },
        statistic,
        threshold: eta,
        tau_p,
        feature: combined,
        pairs,
        p_fa: cfg.p_fa,
    })
}

/// Predicted mean correlation profile of a static channel.
#[derive(Debug, Clone)]
pub struct TheoreticalCorrelation {
    pub values: Vec<Complex64>,
}

/// Expected correlation profile of the first receive-antenna pair for a
/// static channel under Alamouti signaling with symbol variance `sigma_d2`.
///
/// Tap pairs `(l, l')` with even sum contribute at the three lags
/// `(l + l') / 2`, `N/2 + (l + l') / 2`, and `N/2 + nu + (l + l') / 2` with
/// weights `(N + nu) / 2`, `(nu + 1) / 2`, and `(2 nu + 1) / 2` times the
/// channel cross term `h00(l) h11(l') - h10(l) h01(l')`; odd-sum pairs
/// average out. The first weight carries an additional edge deficit of
/// order `|l - l'| / (N + nu)` for unequal delays, which this model folds
/// into the symmetric aggregate (exact for `l = l'` and for single-tap
/// channels, and identically zero under full receive correlation).
pub fn theoretical_correlation(
    real: &ChannelRealization,
    sigma_d2: f64,
    cfg: &IdentifierConfig,
) -> Result<TheoreticalCorrelation> {
    if real.n_rx() < 2 {
        return Err(Error::Shape("need at least two receive antennas".into()));
    }
    let b = cfg.block_len();
    let (n, nu) = (cfg.n_subcarriers, cfg.cp_len);
    let l_h = real.n_taps();
    let h00 = &real.taps[0][0];
    let h01 = &real.taps[0][1];
    let h10 = &real.taps[1][0];
    let h11 = &real.taps[1][1];
    let mut values = vec![Complex64::default(); b];
    for d in 0..l_h {
        let mut xi = Complex64::default();
        for l in 0..=(2 * d).min(l_h - 1) {
            let lp = 2 * d - l;
            if lp >= l_h {
                continue;
            }
            xi += h00[l] * h11[lp] - h10[l] * h01[lp];
        }
        let s = sigma_d2 * xi / 2.0;
        values[d % b] += ((n + nu) as f64) * s;
        values[(n / 2 + d) % b] += ((nu + 1) as f64) * s;
        values[(n / 2 + nu + d) % b] += ((2 * nu + 1) as f64) * s;
    }
    Ok(TheoreticalCorrelation { values })
}

/// Floating-point operation count of one identification:
/// `N_c (6 N_B (N + nu)^2 + (2 N_B + 4)(N + nu))`.
pub fn flops_estimate(n_subcarriers: usize, cp_len: usize, n_blocks: usize, n_rx: usize) -> u64 {
    let b = (n_subcarriers + cp_len) as u64;
    let n_b = n_blocks as u64;
    let n_c = (n_rx * (n_rx - 1) / 2) as u64;
    n_c * (6 * n_b * b * b + (2 * n_b + 4) * b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::apply_channel;
    use crate::modulation::ModulationFormat;
    use crate::ofdm::OfdmConfig;
    use crate::stbc::build_tx_frame;

    fn cfg(n: usize, nu: usize, l_hat: usize) -> IdentifierConfig {
        let mut c = IdentifierConfig::new(n, nu, 1e-3, 2).unwrap();
        c.assumed_path_count = l_hat;
        c
    }

    fn identity_capture(scheme: Stbc, n: usize, nu: usize, n_blocks: usize, seed: u64) -> RxCapture {
        let ofdm = OfdmConfig::new(n, nu, scheme).unwrap();
        let frame = build_tx_frame(n_blocks, &ofdm, ModulationFormat::qpsk(), seed).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::default();
        let real = ChannelRealization {
            taps: vec![vec![vec![one], vec![zero]], vec![vec![zero], vec![one]]],
            tap_var: vec![1.0],
        };
        apply_channel(&frame, &real).unwrap()
    }

    /// Literal transcription of the estimator definition, O(K^2)-style.
    fn naive_estimate(
        x: &[Complex64],
        y: &[Complex64],
        cfg: &IdentifierConfig,
    ) -> Vec<Complex64> {
        let b = cfg.block_len();
        let n_blocks = x.len().div_ceil(b);
        let n_used = n_blocks.saturating_sub(2).max(1);
        let kp = (n_blocks + 2) * b;
        let mut xp = x.to_vec();
        xp.resize(kp, Complex64::default());
        let mut yp = y.to_vec();
        yp.resize(kp, Complex64::default());
        (0..b)
            .map(|tau| {
                let mut acc = Complex64::default();
                for q in 0..n_used {
                    for p in 0..b {
                        let rev = reversal_index(p, cfg.n_subcarriers, cfg.cp_len).unwrap();
                        acc += xp[q * b + tau + p] * yp[(q + 1) * b + tau + rev];
                    }
                }
                acc / n_used as f64
            })
            .collect()
    }

    #[test]
    fn reversal_examples() {
        assert_eq!(reversal_index(4, 16, 4).unwrap(), 4); // p = nu fixed point
        assert_eq!(reversal_index(5, 16, 4).unwrap(), 19); // p = nu+1 -> N+nu-1
        assert_eq!(reversal_index(0, 4, 1).unwrap(), 2);
        assert!(reversal_index(20, 16, 4).is_err());
    }

    #[test]
    fn reversal_is_involution_on_upper_range() {
        for p in 4..20 {
            let r = reversal_index(p, 16, 4).unwrap();
            assert!((4..20).contains(&r));
            assert_eq!(reversal_index(r, 16, 4).unwrap(), p);
        }
    }

    #[test]
    fn exclusion_set_examples() {
        let e = exclusion_set(0, &cfg(8, 2, 1));
        assert_eq!(e.lags.iter().copied().collect::<Vec<_>>(), vec![0, 4, 6]);
        assert_eq!((e.tau_p, e.tau_p1, e.tau_p2), (0, 4, 6));

        let e = exclusion_set(0, &cfg(8, 2, 2));
        assert_eq!(
            e.lags.iter().copied().collect::<Vec<_>>(),
            vec![0, 1, 3, 4, 5, 6, 7, 9]
        );
        assert_eq!(e.lags.len(), 8);

        for tau_p in [0, 7, 19] {
            assert_eq!(exclusion_set(tau_p, &cfg(16, 4, 1)).lags.len(), 3);
        }
    }

    #[test]
    fn constant_profile_feature_is_two() {
        let profile = CorrelationProfile {
            values: vec![Complex64::new(0.6, -0.8); 20],
            pair: (0, 1),
            n_blocks_used: 5,
        };
        let excl = exclusion_set(3, &cfg(16, 4, 2));
        let f = normalized_feature(&profile, &excl).unwrap();
        for v in f {
            assert!((v - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn feature_is_scale_invariant() {
        let c = cfg(16, 4, 2);
        let cap = identity_capture(Stbc::Alamouti, 16, 4, 12, 3);
        let profile = estimate_cross_correlation(&cap.streams[0], &cap.streams[1], &c).unwrap();
        let excl = exclusion_set(locate_peak(&profile), &c);
        let f1 = normalized_feature(&profile, &excl).unwrap();
        let mut doubled = profile.clone();
        doubled.values.iter_mut().for_each(|z| *z *= 2.0);
        let f2 = normalized_feature(&doubled, &excl).unwrap();
        for (a, b) in f1.iter().zip(&f2) {
            assert!((a - b).abs() <= 1e-9 * a.abs());
        }
    }

    #[test]
    fn degenerate_profile_reports_numeric_error() {
        let profile = CorrelationProfile {
            values: vec![Complex64::default(); 20],
            pair: (0, 1),
            n_blocks_used: 5,
        };
        let excl = exclusion_set(0, &cfg(16, 4, 2));
        assert!(matches!(
            normalized_feature(&profile, &excl),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn peak_tie_breaks_toward_smaller_lag() {
        let mut values = vec![Complex64::default(); 20];
        values[3] = Complex64::new(0.0, 2.0);
        values[9] = Complex64::new(2.0, 0.0);
        let profile = CorrelationProfile {
            values,
            pair: (0, 1),
            n_blocks_used: 1,
        };
        assert_eq!(locate_peak(&profile), 3);
    }

    #[test]
    fn closed_form_threshold_value() {
        let eta = threshold(1e-3, 256, 64, 1).unwrap();
        let want = -2.0 * (1.0 - 0.999f64.powf(1.0 / 320.0)).ln();
        assert!((eta / want - 1.0).abs() < 1e-12);
        assert!((eta - 25.35).abs() < 0.01, "eta = {eta}");
    }

    #[test]
    fn bisection_agrees_with_closed_form_for_one_pair() {
        let a = threshold_closed_form(1e-3, 256, 64);
        let b = threshold_numeric(1e-3, 256, 64, 1).unwrap();
        assert!((a - b).abs() < 1e-8 * a, "closed {a} vs bisect {b}");
    }

    #[test]
    fn threshold_monotonicity() {
        let hi = threshold(1e-3, 256, 64, 1).unwrap();
        let lo = threshold(0.5, 256, 64, 1).unwrap();
        assert!(lo < hi);
        let one = threshold(1e-3, 256, 64, 1).unwrap();
        let ten = threshold(1e-3, 256, 64, 10).unwrap();
        assert!(ten.is_finite() && ten > one);
    }

    #[test]
    fn bisection_roundtrips_through_the_cdf() {
        for n_c in [3usize, 6, 10] {
            let eta = threshold(1e-3, 256, 64, n_c).unwrap();
            let got = statrs::function::gamma::gamma_lr(n_c as f64, eta / 2.0);
            let want = 0.999f64.powf(1.0 / 320.0);
            assert!((got - want).abs() < 1e-8, "n_c={n_c}: {got} vs {want}");
        }
    }

    #[test]
    fn flops_examples() {
        assert_eq!(flops_estimate(256, 64, 100, 2), 61_505_280);
        let r2 = flops_estimate(256, 64, 100, 2);
        let r5 = flops_estimate(256, 64, 100, 5);
        assert_eq!(r5, 10 * r2);
        assert_eq!(flops_estimate(256, 64, 0, 2), 4 * 320);
    }

    #[test]
    fn zero_streams_give_zero_profile() {
        let c = cfg(16, 4, 2);
        let z = vec![Complex64::default(); 200];
        let profile = estimate_cross_correlation(&z, &z, &c).unwrap();
        assert!(profile.values.iter().all(|v| v.norm() == 0.0));
        assert!(estimate_cross_correlation(&z[..30], &z[..30], &c).is_err());
    }

    #[test]
    fn estimator_matches_naive_reference() {
        let c = cfg(16, 4, 2);
        for seed in 0..4 {
            let cap = identity_capture(Stbc::Alamouti, 16, 4, 8, seed);
            let fast = estimate_cross_correlation(&cap.streams[0], &cap.streams[1], &c).unwrap();
            let slow = naive_estimate(&cap.streams[0], &cap.streams[1], &c);
            for (a, b) in fast.values.iter().zip(&slow) {
                assert!((a - b).norm() < 1e-12);
            }
        }
        // also with a length that is not a whole number of blocks
        let cap = identity_capture(Stbc::Alamouti, 16, 4, 8, 9);
        let trunc0 = &cap.streams[0][..150];
        let trunc1 = &cap.streams[1][..150];
        let fast = estimate_cross_correlation(trunc0, trunc1, &c).unwrap();
        let slow = naive_estimate(trunc0, trunc1, &c);
        for (a, b) in fast.values.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn alamouti_identity_channel_peak_levels() {
        let c = cfg(16, 4, 2);
        let trials = 300;
        let mut mean = vec![Complex64::default(); 20];
        for seed in 0..trials {
            let cap = identity_capture(Stbc::Alamouti, 16, 4, 12, seed);
            let p = estimate_cross_correlation(&cap.streams[0], &cap.streams[1], &c).unwrap();
            for (m, v) in mean.iter_mut().zip(&p.values) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= trials as f64);
        assert!((mean[0].re - 10.0).abs() < 0.3, "main peak {}", mean[0]);
        assert!((mean[8].re - 2.5).abs() < 0.3, "alias 1 {}", mean[8]);
        assert!((mean[12].re - 4.5).abs() < 0.3, "alias 2 {}", mean[12]);
    }

    #[test]
    fn combine_feature_rules() {
        let f = vec![1.0, 2.0, 3.0];
        assert_eq!(combine_features(&[f.clone()]).unwrap(), f);
        let tripled = combine_features(&[f.clone(), f.clone(), f.clone()]).unwrap();
        assert_eq!(tripled, vec![3.0, 6.0, 9.0]);
        assert!(combine_features(&[f, vec![1.0]]).is_err());
    }

    #[test]
    fn identify_separates_the_schemes_noiselessly() {
        let c = cfg(64, 16, 8);
        let al = identity_capture(Stbc::Alamouti, 64, 16, 40, 1);
        let sm = identity_capture(Stbc::SpatialMux, 64, 16, 40, 2);
        let ra = identify(&al, &c).unwrap();
        let rs = identify(&sm, &c).unwrap();
        assert_eq!(ra.verdict, Stbc::Alamouti);
        assert!(ra.statistic >= ra.threshold);
        assert_eq!(rs.verdict, Stbc::SpatialMux);
        assert_eq!(ra.feature.len(), 80);
        assert_eq!(ra.pairs.len(), 1);
    }

    #[test]
    fn theoretical_identity_channel_values() {
        let c = cfg(16, 4, 2);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::default();
        let real = ChannelRealization {
            taps: vec![vec![vec![one], vec![zero]], vec![vec![zero], vec![one]]],
            tap_var: vec![1.0],
        };
        let t = theoretical_correlation(&real, 1.0, &c).unwrap();
        assert_eq!(t.values.len(), 20);
        assert!((t.values[0].re - 10.0).abs() < 1e-12);
        assert!((t.values[8].re - 2.5).abs() < 1e-12);
        assert!((t.values[12].re - 4.5).abs() < 1e-12);
        for (tau, v) in t.values.iter().enumerate() {
            if ![0, 8, 12].contains(&tau) {
                assert!(v.norm() == 0.0, "unexpected value at tau {tau}");
            }
        }
    }

    #[test]
    fn theoretical_vanishes_under_full_receive_correlation() {
        let cfg = cfg(16, 4, 2);
        let real = crate::channel::draw_channel(
            &crate::channel::ChannelConfig {
                n_taps: 4,
                ..crate::channel::ChannelConfig::default()
            },
            42,
        );
        let merged = crate::channel::apply_spatial_correlation(&real, 1.0).unwrap();
        let t = theoretical_correlation(&merged, 1.0, &cfg).unwrap();
        for v in t.values {
            assert!(v.norm() < 1e-14, "residual {v}");
        }
    }
}
