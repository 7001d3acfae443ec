//! Current split inside a parallel group.
//!
//! Children are connected along a ladder: the group terminals sit before the
//! first child, and the contact resistance `R_k` in front of child `k`
//! carries the currents of child `k` and every child behind it. The path
//! voltage seen from the terminals through child `j` is
//!
//! ```text
//! P_j = V_j(I_j) - sum_{k<=j} R_k S_k,    S_k = sum_{m>=k} I_m
//! ```
//!
//! and the controller adjusts the child currents until all `P_j` agree,
//! keeping their sum equal to the imposed group current.

use serde::{Deserialize, Serialize};

use super::{Trial, Unit};
use crate::{Error, Result};

/// Controller settings and integral memory of one parallel group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiState {
    /// Accumulated path-voltage deviation per child (V s).
    pub integral_error: Vec<f64>,
    /// Fraction of the decoupled Newton correction applied per iteration.
    pub k_p: f64,
    /// Integral gain (A/(V s)).
    pub k_i: f64,
    /// Relative agreement required between path voltages.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl PiState {
    pub fn new(children: usize, gains: &PiGains) -> Self {
        Self {
            integral_error: vec![0.0; children],
            k_p: gains.k_p,
            k_i: gains.k_i,
            tolerance: gains.tolerance,
            max_iterations: gains.max_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PiGains {
    pub k_p: f64,
    pub k_i: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PiGains {
    fn default() -> Self {
        Self {
            k_p: 1.0,
            k_i: 0.1,
            tolerance: 1e-4,
            max_iterations: 50,
        }
    }
}

impl PiGains {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_p > 0.0 && self.k_p <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "pi.k_p".into(),
                reason: "must lie in (0, 1]".into(),
            });
        }
        if !(self.k_i >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "pi.k_i".into(),
                reason: "must be non-negative".into(),
            });
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter {
                name: "pi.tolerance".into(),
                reason: "must be positive".into(),
            });
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter {
                name: "pi.max_iterations".into(),
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Path voltages for the given child voltages and currents.
pub fn path_voltages(voltages: &[f64], currents: &[f64], contact_r: &[f64]) -> Vec<f64> {
    let n = currents.len();
    let mut behind = vec![0.0; n];
    let mut acc = 0.0;
    for k in (0..n).rev() {
        acc += currents[k];
        behind[k] = acc;
    }
    let mut drop = 0.0;
    (0..n)
        .map(|j| {
            drop += contact_r[j] * behind[j];
            voltages[j] - drop
        })
        .collect()
}

/// Ohmic loss in the ladder contacts.
pub fn ladder_loss(currents: &[f64], contact_r: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut loss = 0.0;
    for k in (0..currents.len()).rev() {
        acc += currents[k];
        loss += contact_r[k] * acc * acc;
    }
    loss
}

/// Solves `A x = b` in place by Gaussian elimination with partial pivoting.
fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Option<()> {
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[piv * n + col] == 0.0 || !a[piv * n + col].is_finite() {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            b.swap(piv, col);
        }
        let inv = 1.0 / a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] * inv;
            if f != 0.0 {
                for k in col..n {
                    a[row * n + k] -= f * a[col * n + k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col * n + k] * b[k];
        }
        b[col] = s / a[col * n + col];
    }
    Some(())
}

/// Linearised ladder: rows `sum_m J_jm dI_m - dV = rhs_j`, last row
/// `sum dI = rhs_n`. Returns `(dI, dV)`.
fn ladder_step(slopes: &[f64], contact_r: &[f64], rhs: &[f64]) -> Option<(Vec<f64>, f64)> {
    let n = slopes.len();
    let m = n + 1;
    let mut a = vec![0.0; m * m];
    let mut cum = Vec::with_capacity(n);
    let mut acc = 0.0;
    for r in contact_r {
        acc += r;
        cum.push(acc);
    }
    for j in 0..n {
        for k in 0..n {
            a[j * m + k] = -cum[j.min(k)];
        }
        a[j * m + j] += slopes[j];
        a[j * m + n] = -1.0;
        a[n * m + j] = 1.0;
    }
    let mut b = rhs.to_vec();
    solve_dense(&mut a, &mut b, m)?;
    let dv = b[n];
    b.truncate(n);
    Some((b, dv))
}

/// Outcome of a converged split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSolution {
    pub currents: Vec<f64>,
    pub paths: Vec<f64>,
    pub trials: Vec<Trial>,
    pub iterations: usize,
    pub residual: f64,
    /// Terminal voltage: current-weighted mean of the path voltages.
    pub voltage: f64,
    /// Small-signal slope of the terminal voltage against group current.
    pub slope: f64,
}

fn relative_spread(paths: &[f64]) -> f64 {
    let mean = paths.iter().sum::<f64>() / paths.len() as f64;
    let worst = paths.iter().map(|p| (p - mean).abs()).fold(0.0, f64::max);
    worst / mean.abs().max(1e-12)
}

fn evaluate(children: &mut [Unit], currents: &[f64], par: bool) -> Result<Vec<Trial>> {
    let results = super::map_children(children, par, |c, j| c.trial(currents[j], par));
    results.into_iter().collect()
}

/// Enforces `sum currents == total` by moving the rounding residue onto the
/// child with the largest current magnitude.
fn close_sum(currents: &mut [f64], total: f64) {
    let s: f64 = currents.iter().sum();
    let k = (0..currents.len())
        .max_by(|&a, &b| currents[a].abs().total_cmp(&currents[b].abs()))
        .expect("non-empty group");
    currents[k] += total - s;
}

/// Finds the current split of a parallel group carrying `total`.
///
/// `warm` is the split of the previous solve and `shares` its conductance
/// weights; any change of group current is distributed by those weights
/// before iterating.
pub fn solve_split(
    children: &mut [Unit],
    contact_r: &[f64],
    pi: &PiState,
    total: f64,
    warm: &[f64],
    shares: &[f64],
    par: bool,
) -> Result<SplitSolution> {
    let n = children.len();
    let mut currents: Vec<f64> = warm.to_vec();
    let delta = total - warm.iter().sum::<f64>();
    let mean_int = pi.integral_error.iter().sum::<f64>() / n as f64;
    for j in 0..n {
        currents[j] += delta * shares[j] + pi.k_i * (pi.integral_error[j] - mean_int);
    }
    close_sum(&mut currents, total);
    let target = (pi.tolerance * 1e-3).max(1e-12);

    let mut trials = match evaluate(children, &currents, par) {
        Ok(t) => t,
        Err(e) if e.is_limit_event() => {
            // fall back to the plain conductance-weighted split
            currents = shares.iter().map(|s| s * total).collect();
            close_sum(&mut currents, total);
            evaluate(children, &currents, par)?
        }
        Err(e) => return Err(e),
    };
    let mut iterations = 0;
    loop {
        let volts: Vec<f64> = trials.iter().map(|t| t.voltage).collect();
        let paths = path_voltages(&volts, &currents, contact_r);
        let residual = relative_spread(&paths);
        let slopes: Vec<f64> = trials.iter().map(|t| t.slope).collect();
        if residual <= target || iterations >= pi.max_iterations {
            if residual > pi.tolerance {
                return Err(Error::SplitNotConverged { iterations, residual });
            }
            let mut rhs = vec![0.0; n + 1];
            rhs[n] = 1.0;
            let slope = ladder_step(&slopes, contact_r, &rhs).map(|(_, dv)| dv).unwrap_or(f64::NAN);
            let weighted: f64 = paths.iter().zip(&currents).map(|(p, i)| p * i).sum();
            let abs_sum: f64 = currents.iter().map(|i| i.abs()).sum();
            let voltage = if total != 0.0 && total.abs() >= 1e-3 * abs_sum {
                weighted / total
            } else {
                paths.iter().sum::<f64>() / n as f64
            };
            return Ok(SplitSolution {
                currents,
                paths,
                trials,
                iterations,
                residual,
                voltage,
                slope,
            });
        }
        iterations += 1;
        let mut rhs: Vec<f64> = paths.iter().map(|p| -p).collect();
        rhs.push(0.0);
        let (mut step, _) = ladder_step(&slopes, contact_r, &rhs).ok_or(Error::SplitNotConverged {
            iterations,
            residual,
        })?;
        for s in step.iter_mut() {
            *s *= pi.k_p;
        }
        // halve the step while it saturates a child or fails to reduce the
        // spread; the last candidate is kept if it at least evaluates
        let mut accepted = None;
        for _ in 0..12 {
            let mut next: Vec<f64> = currents.iter().zip(&step).map(|(i, d)| i + d).collect();
            close_sum(&mut next, total);
            match evaluate(children, &next, par) {
                Ok(t) => {
                    let v: Vec<f64> = t.iter().map(|t| t.voltage).collect();
                    let improved = relative_spread(&path_voltages(&v, &next, contact_r)) < residual;
                    accepted = Some((next, t));
                    if improved {
                        break;
                    }
                }
                Err(e) if e.is_limit_event() => {}
                Err(e) => return Err(e),
            }
            for s in step.iter_mut() {
                *s *= 0.5;
            }
        }
        match accepted {
            Some((next, t)) => {
                currents = next;
                trials = t;
            }
            None => {
                // every shortened step saturates a child: report it
                let mut next: Vec<f64> = currents.iter().zip(&step).map(|(i, d)| i + d).collect();
                close_sum(&mut next, total);
                evaluate(children, &next, par)?;
                return Err(Error::SplitNotConverged { iterations, residual });
            }
        }
    }
}

/// Conductance weights `(1/|slope_j|) / sum` used to distribute changes of
/// the group current.
pub fn conductance_shares(slopes: &[f64]) -> Vec<f64> {
    let g: Vec<f64> = slopes
        .iter()
        .map(|s| if s.is_finite() && *s < 0.0 { -1.0 / s } else { 0.0 })
        .collect();
    let total: f64 = g.iter().sum();
    if total > 0.0 {
        g.iter().map(|x| x / total).collect()
    } else {
        vec![1.0 / slopes.len() as f64; slopes.len()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_voltage_matches_written_ladder() {
        let v = [3.7, 3.6, 3.65];
        let i = [2.0, 1.0, 3.0];
        let r = [0.1, 0.2, 0.3];
        let p = path_voltages(&v, &i, &r);
        assert!((p[0] - (3.7 - 0.1 * 6.0)).abs() < 1e-15);
        assert!((p[1] - (3.6 - 0.1 * 6.0 - 0.2 * 4.0)).abs() < 1e-15);
        assert!((p[2] - (3.65 - 0.1 * 6.0 - 0.2 * 4.0 - 0.3 * 3.0)).abs() < 1e-15);
        let loss = ladder_loss(&i, &r);
        assert!((loss - (0.1 * 36.0 + 0.2 * 16.0 + 0.3 * 9.0)).abs() < 1e-12);
    }

    #[test]
    fn tellegen_identity_for_weighted_terminal_voltage() {
        let v = [3.7, 3.6, 3.65, 3.62];
        let i = [2.0, -1.0, 3.0, 0.5];
        let r = [0.01, 0.02, 0.03, 0.04];
        let p = path_voltages(&v, &i, &r);
        let total: f64 = i.iter().sum();
        let vt = p.iter().zip(&i).map(|(p, i)| p * i).sum::<f64>() / total;
        let cells: f64 = v.iter().zip(&i).map(|(v, i)| v * i).sum();
        assert!((vt * total - (cells - ladder_loss(&i, &r))).abs() < 1e-12);
    }

    #[test]
    fn linear_ladder_solves_in_one_step() {
        // linear children V_j = E_j + s_j I
        let e = [3.7, 3.68, 3.71];
        let s = [-0.01, -0.02, -0.015];
        let r = [0.001, 0.002, 0.0];
        let total = 9.0;
        let mut cur = vec![3.0; 3];
        for _ in 0..2 {
            let v: Vec<f64> = (0..3).map(|j| e[j] + s[j] * cur[j]).collect();
            let p = path_voltages(&v, &cur, &r);
            let mut rhs: Vec<f64> = p.iter().map(|x| -x).collect();
            rhs.push(0.0);
            let (d, _) = ladder_step(&s, &r, &rhs).unwrap();
            for j in 0..3 {
                cur[j] += d[j];
            }
        }
        let v: Vec<f64> = (0..3).map(|j| e[j] + s[j] * cur[j]).collect();
        let p = path_voltages(&v, &cur, &r);
        assert!(relative_spread(&p) < 1e-14);
        assert!((cur.iter().sum::<f64>() - total).abs() < 1e-12);
    }

    #[test]
    fn shares_follow_conductance() {
        let s = conductance_shares(&[-0.01, -0.02]);
        assert!((s[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(conductance_shares(&[f64::NAN, 0.0]), vec![0.5, 0.5]);
    }
}
