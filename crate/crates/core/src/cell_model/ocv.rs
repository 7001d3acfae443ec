use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const ANODE_CSV: &str = include_str!("../../data/ocv_anode.csv");
const CATHODE_CSV: &str = include_str!("../../data/ocv_cathode.csv");
const ENTROPIC_CSV: &str = include_str!("../../data/entropic.csv");

/// Piecewise-linear lookup table with strictly increasing abscissae.
///
/// Linear interpolation is monotone on every segment and reproduces the
/// tabulated values exactly at the knots. Queries outside the table are
/// clamped to the end values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1D {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// `(x0, 1/h)` when the knots are uniformly spaced.
    uniform: Option<(f64, f64)>,
}

impl Table1D {
    pub fn new(name: &str, xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let bad = |reason: &str| Error::Table {
            name: name.to_string(),
            reason: reason.to_string(),
        };
        if xs.len() != ys.len() {
            return Err(bad("column lengths differ"));
        }
        if xs.len() < 2 {
            return Err(bad("needs at least two rows"));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(bad("non-finite entry"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("abscissae must be strictly increasing"));
        }
        let h = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
        let uniform = xs
            .iter()
            .enumerate()
            .all(|(i, &x)| (x - (xs[0] + i as f64 * h)).abs() <= 1e-9 * h)
            .then_some((xs[0], 1.0 / h));
        Ok(Self { xs, ys, uniform })
    }

    /// Parses a two-column CSV with one header row.
    pub fn from_csv(name: &str, text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (lineno, line) in text.lines().enumerate().skip(1) {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',');
            let mut next = || -> Result<f64> {
                cols.next()
                    .and_then(|c| c.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Table {
                        name: name.to_string(),
                        reason: format!("line {}: expected two numeric columns", lineno + 1),
                    })
            };
            xs.push(next()?);
            ys.push(next()?);
        }
        Self::new(name, xs, ys)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    #[inline]
    fn segment(&self, x: f64) -> usize {
        let last = self.xs.len() - 2;
        match self.uniform {
            Some((x0, inv_h)) => {
                let s = ((x - x0) * inv_h).floor();
                if s <= 0.0 {
                    0
                } else {
                    (s as usize).min(last)
                }
            }
            None => self.xs.partition_point(|&k| k <= x).saturating_sub(1).min(last),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = self.segment(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        if x == x0 {
            return self.ys[i];
        }
        let t = (x - x0) / (x1 - x0);
        self.ys[i] + t * (self.ys[i + 1] - self.ys[i])
    }

    /// Slope of the segment containing `x` (zero outside the table).
    #[inline]
    pub fn slope(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] || x > self.xs[n - 1] {
            return 0.0;
        }
        let i = self.segment(x);
        (self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i])
    }
}

/// Open-circuit potentials of both electrodes against stoichiometry and the
/// entropic coefficient against state of charge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcvTables {
    pub anode: Table1D,
    pub cathode: Table1D,
    pub entropic: Table1D,
}

impl OcvTables {
    /// The shipped NMC/graphite placeholder curves.
    pub fn shipped() -> Self {
        Self::from_csv_text(ANODE_CSV, CATHODE_CSV, ENTROPIC_CSV)
            .expect("shipped OCV tables are valid")
    }

    pub fn from_csv_text(anode: &str, cathode: &str, entropic: &str) -> Result<Self> {
        Ok(Self {
            anode: Table1D::from_csv("ocv_anode", anode)?,
            cathode: Table1D::from_csv("ocv_cathode", cathode)?,
            entropic: Table1D::from_csv("entropic", entropic)?,
        })
    }

    pub fn anode_potential(&self, stoich: f64) -> f64 {
        self.anode.eval(stoich)
    }

    pub fn cathode_potential(&self, stoich: f64) -> f64 {
        self.cathode.eval(stoich)
    }

    pub fn entropic_coefficient(&self, soc: f64) -> f64 {
        self.entropic.eval(soc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knots_are_reproduced_exactly() {
        let t = OcvTables::shipped();
        for (x, y) in t.anode.xs().iter().zip(t.anode.ys()) {
            assert_eq!(t.anode.eval(*x), *y);
        }
        for (x, y) in t.entropic.xs().iter().zip(t.entropic.ys()) {
            assert_eq!(t.entropic.eval(*x), *y);
        }
    }

    #[test]
    fn interpolation_stays_within_segment_bounds() {
        let t = Table1D::new("t", vec![0.0, 1.0, 3.0], vec![2.0, 1.0, 4.0]).unwrap();
        assert!(t.uniform.is_none());
        for k in 0..=100 {
            let x = 3.0 * k as f64 / 100.0;
            let y = t.eval(x);
            let (lo, hi) = if x <= 1.0 { (1.0, 2.0) } else { (1.0, 4.0) };
            assert!(y >= lo - 1e-15 && y <= hi + 1e-15);
        }
        assert_eq!(t.eval(-1.0), 2.0);
        assert_eq!(t.eval(5.0), 4.0);
        assert_eq!(t.slope(2.0), 1.5);
    }

    #[test]
    fn rejects_unordered_tables() {
        assert!(Table1D::new("t", vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(Table1D::from_csv("t", "x,y\n0,1\nfoo,2\n").is_err());
    }
}
