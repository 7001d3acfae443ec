//! Seeded cell-to-cell parameter variation.
//!
//! Four independent channels scale the base parameters: capacity (electrode
//! areas), resistance (electrode specific resistances), the side-reaction
//! pair (SEI diffusivity and rate constant, correlated) and the crack-driven
//! loss rate. Every channel draws from its own random stream, so switching a
//! channel on or off leaves the samples of the others unchanged.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cell_model::CellParams;
use crate::{Error, Result};

/// Samples are redrawn beyond this many standard deviations.
pub const TRUNCATION: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariationSpec {
    pub sd_capacity: f64,
    pub sd_resistance: f64,
    pub sd_degradation: f64,
    /// Correlation of the SEI diffusivity and rate-constant factors.
    pub rho: f64,
    pub seed: u64,
}

impl Default for VariationSpec {
    fn default() -> Self {
        Self {
            sd_capacity: 0.004,
            sd_resistance: 0.025,
            sd_degradation: 0.10,
            rho: 0.7,
            seed: 0,
        }
    }
}

impl VariationSpec {
    pub fn none() -> Self {
        Self {
            sd_capacity: 0.0,
            sd_resistance: 0.0,
            sd_degradation: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sd_capacity", self.sd_capacity),
            ("sd_resistance", self.sd_resistance),
            ("sd_degradation", self.sd_degradation),
        ] {
            if !(v >= 0.0 && v * TRUNCATION < 1.0) {
                return Err(Error::InvalidParameter {
                    name: format!("variation.{name}"),
                    reason: format!("must lie in [0, {}), got {v}", 1.0 / TRUNCATION),
                });
            }
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidParameter {
                name: "variation.rho".into(),
                reason: format!("must lie in [-1, 1], got {}", self.rho),
            });
        }
        Ok(())
    }
}

/// Multiplicative factors applied to one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellFactors {
    pub capacity: f64,
    pub resistance: f64,
    pub sei_diffusivity: f64,
    pub sei_rate: f64,
    pub lam_rate: f64,
}

impl Default for CellFactors {
    fn default() -> Self {
        Self {
            capacity: 1.0,
            resistance: 1.0,
            sei_diffusivity: 1.0,
            sei_rate: 1.0,
            lam_rate: 1.0,
        }
    }
}

impl CellFactors {
    pub fn apply(&self, base: &CellParams) -> CellParams {
        let mut p = base.clone();
        p.anode.area *= self.capacity;
        p.cathode.area *= self.capacity;
        p.anode.specific_resistance *= self.resistance;
        p.cathode.specific_resistance *= self.resistance;
        p.sei.diffusivity_ref *= self.sei_diffusivity;
        p.sei.rate_constant_ref *= self.sei_rate;
        p.stress.lam_rate *= self.lam_rate;
        p
    }
}

fn truncated(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        if z.abs() <= TRUNCATION {
            return z;
        }
    }
}

fn stream(seed: u64, channel: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(channel);
    rng
}

/// Factors for `n` cells.
pub fn sample_factors(spec: &VariationSpec, n: usize) -> Result<Vec<CellFactors>> {
    spec.validate()?;
    let mut cap = stream(spec.seed, 1);
    let mut res = stream(spec.seed, 2);
    let mut sei = stream(spec.seed, 3);
    let mut lam = stream(spec.seed, 4);
    let s = spec.sd_degradation;
    let c = (1.0 - spec.rho * spec.rho).max(0.0).sqrt();
    Ok((0..n)
        .map(|_| {
            let zc = truncated(&mut cap);
            let zr = truncated(&mut res);
            let (zd, zk) = loop {
                let a = truncated(&mut sei);
                let b = truncated(&mut sei);
                let k = spec.rho * a + c * b;
                if k.abs() <= TRUNCATION {
                    break (a, k);
                }
            };
            let zl = truncated(&mut lam);
            CellFactors {
                capacity: 1.0 + spec.sd_capacity * zc,
                resistance: 1.0 + spec.sd_resistance * zr,
                sei_diffusivity: 1.0 + s * zd,
                sei_rate: 1.0 + s * zk,
                lam_rate: 1.0 + s * zl,
            }
        })
        .collect())
}

/// Parameter sets for `n` cells around `base`.
pub fn sample_population(base: &CellParams, spec: &VariationSpec, n: usize) -> Result<Vec<CellParams>> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n_cells".into(),
            reason: "must be at least 1".into(),
        });
    }
    Ok(sample_factors(spec, n)?.iter().map(|f| f.apply(base)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(x: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v.sqrt())
    }

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let (ma, sa) = stats(a);
        let (mb, sb) = stats(b);
        let n = a.len() as f64;
        a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / ((n - 1.0) * sa * sb)
    }

    #[test]
    fn zero_spread_gives_copies() {
        let base = CellParams::default();
        let pop = sample_population(&base, &VariationSpec::none(), 7).unwrap();
        assert!(pop.iter().all(|p| *p == base));
    }

    #[test]
    fn same_seed_same_population() {
        let spec = VariationSpec { seed: 99, ..VariationSpec::default() };
        let a = bincode::serialize(&sample_factors(&spec, 500).unwrap()).unwrap();
        let b = bincode::serialize(&sample_factors(&spec, 500).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn container_scale_statistics() {
        let spec = VariationSpec { seed: 3, ..VariationSpec::default() };
        let n = 18_900;
        let f = sample_factors(&spec, n).unwrap();
        let cap: Vec<f64> = f.iter().map(|x| x.capacity).collect();
        let res: Vec<f64> = f.iter().map(|x| x.resistance).collect();
        let d: Vec<f64> = f.iter().map(|x| x.sei_diffusivity).collect();
        let k: Vec<f64> = f.iter().map(|x| x.sei_rate).collect();
        let l: Vec<f64> = f.iter().map(|x| x.lam_rate).collect();
        let (m, s) = stats(&cap);
        assert!((0.0035..=0.0045).contains(&s), "{s}");
        for (x, sd) in [(&cap, 0.004), (&res, 0.025), (&d, 0.1), (&k, 0.1), (&l, 0.1)] {
            let (m, _) = stats(x);
            assert!((m - 1.0).abs() < 3.0 * sd / (n as f64).sqrt());
        }
        assert!((m - 1.0).abs() < 1e-3);
        assert!(corr(&cap, &d).abs() < 0.05);
        assert!(corr(&cap, &l).abs() < 0.05);
        assert!(corr(&d, &l).abs() < 0.05);
        assert!((corr(&d, &k) - 0.7).abs() < 0.03);
        let lim = 1.0 + 4.0 * 0.1 + 1e-12;
        assert!(d.iter().chain(&k).chain(&l).all(|x| *x <= lim && *x >= 2.0 - lim));
    }

    #[test]
    fn channels_are_independent_streams() {
        let all = VariationSpec { seed: 5, ..VariationSpec::default() };
        let deg_only = VariationSpec {
            sd_capacity: 0.0,
            sd_resistance: 0.0,
            ..all
        };
        let a = sample_factors(&all, 50).unwrap();
        let b = sample_factors(&deg_only, 50).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.lam_rate, y.lam_rate);
            assert_eq!(x.sei_rate, y.sei_rate);
            assert_eq!(y.capacity, 1.0);
        }
    }

    #[test]
    fn factors_land_on_the_right_parameters() {
        let base = CellParams::default();
        let f = CellFactors {
            capacity: 1.1,
            resistance: 0.9,
            sei_diffusivity: 1.2,
            sei_rate: 0.8,
            lam_rate: 1.3,
        };
        let p = f.apply(&base);
        assert_eq!(p.anode.area, base.anode.area * 1.1);
        assert_eq!(p.cathode.specific_resistance, base.cathode.specific_resistance * 0.9);
        assert_eq!(p.sei.diffusivity_ref, base.sei.diffusivity_ref * 1.2);
        assert_eq!(p.sei.rate_constant_ref, base.sei.rate_constant_ref * 0.8);
        assert_eq!(p.stress.lam_rate, base.stress.lam_rate * 1.3);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(VariationSpec { rho: 1.5, ..VariationSpec::default() }.validate().is_err());
        assert!(VariationSpec { sd_capacity: -0.1, ..VariationSpec::default() }.validate().is_err());
        assert!(sample_population(&CellParams::default(), &VariationSpec::default(), 0).is_err());
    }
}
