//! Constellation mapping.
//!
//! All constellations are normalized to unit average power, so the symbol
//! variance is 1 everywhere downstream.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Modulation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModulationKind {
    Psk,
    Qam,
}

/// An M-point constellation, M in {4, 16, 64}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModulationFormat {
    kind: ModulationKind,
    order: u32,
}

impl ModulationFormat {
    pub fn new(kind: ModulationKind, order: u32) -> Result<Self> {
        match (kind, order) {
            (ModulationKind::Psk, 4) | (ModulationKind::Qam, 4 | 16 | 64) => {
                Ok(Self { kind, order })
            }
            _ => Err(Error::Config(format!(
                "unsupported modulation {kind:?} order {order}"
            ))),
        }
    }

    pub fn qpsk() -> Self {
        Self {
            kind: ModulationKind::Psk,
            order: 4,
        }
    }

    pub fn qam16() -> Self {
        Self {
            kind: ModulationKind::Qam,
            order: 16,
        }
    }

    pub fn qam64() -> Self {
        Self {
            kind: ModulationKind::Qam,
            order: 64,
        }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn kind(&self) -> ModulationKind {
        self.kind
    }

    /// Constellation points, unit average power.
    pub fn constellation(&self) -> Vec<Complex64> {
        match self.kind {
            ModulationKind::Psk => {
                let m = self.order as usize;
                // pi/4 offset puts QPSK on (+-1 +-j)/sqrt(2)
                (0..m)
                    .map(|k| {
                        Complex64::from_polar(
                            1.0,
                            std::f64::consts::TAU * k as f64 / m as f64
                                + std::f64::consts::FRAC_PI_4,
                        )
                    })
                    .collect()
            }
            ModulationKind::Qam => {
                let side = (self.order as f64).sqrt() as i64;
                let mut points = Vec::with_capacity(self.order as usize);
                for i in 0..side {
                    for q in 0..side {
                        points.push(Complex64::new(
                            (2 * i - side + 1) as f64,
                            (2 * q - side + 1) as f64,
                        ));
                    }
                }
                let power =
                    points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64;
                let scale = power.sqrt().recip();
                points.iter().map(|p| p * scale).collect()
            }
        }
    }
}

/// Draws `count` i.i.d. uniform constellation symbols. Deterministic given the seed.
pub fn map_symbols(count: usize, fmt: ModulationFormat, rng_seed: u64) -> Vec<Complex64> {
    let points = fmt.constellation();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    (0..count).map(|_| points[rng.gen_range(0..points.len())]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn qpsk_points_are_quarter_diagonals() {
        let s = map_symbols(4, ModulationFormat::qpsk(), 3);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        for z in s {
            assert_abs_diff_eq!(z.re.abs(), inv_sqrt2, epsilon = 1e-12);
            assert_abs_diff_eq!(z.im.abs(), inv_sqrt2, epsilon = 1e-12);
        }
    }

    #[test]
    fn constellations_have_unit_average_power() {
        for fmt in [
            ModulationFormat::qpsk(),
            ModulationFormat::qam16(),
            ModulationFormat::qam64(),
        ] {
            let pts = fmt.constellation();
            assert_eq!(pts.len(), fmt.order() as usize);
            let p = pts.iter().map(|z| z.norm_sqr()).sum::<f64>() / pts.len() as f64;
            assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sample_mean_power_close_to_one() {
        let s = map_symbols(100_000, ModulationFormat::qam16(), 7);
        let p = s.iter().map(|z| z.norm_sqr()).sum::<f64>() / s.len() as f64;
        assert!((p - 1.0).abs() < 0.01, "mean power {p}");
    }

    #[test]
    fn deterministic_given_seed() {
        let a = map_symbols(257, ModulationFormat::qam64(), 99);
        let b = map_symbols(257, ModulationFormat::qam64(), 99);
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_invalid_order() {
        assert!(ModulationFormat::new(ModulationKind::Qam, 32).is_err());
        assert!(ModulationFormat::new(ModulationKind::Psk, 8).is_err());
        assert!(ModulationFormat::new(ModulationKind::Qam, 2).is_err());
    }
}
