//! Constant-current and constant-voltage driving of a unit tree.
//!
//! Limits always refer to the extreme cell: a charge stops when the highest
//! cell voltage reaches the upper limit, a discharge when the lowest reaches
//! the lower one. The constant-voltage phase holds that extreme cell at the
//! limit by adjusting the pack current every step.

use crate::pack_topology::{CommitTotals, Unit};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Charge,
    Discharge,
}

impl Direction {
    /// Sign of the pack current (positive discharges).
    pub fn sign(self) -> f64 {
        match self {
            Direction::Charge => -1.0,
            Direction::Discharge => 1.0,
        }
    }
}

/// Distance past the limit of the extreme cell at the latest trial; positive
/// when the limit is exceeded.
pub fn overshoot(unit: &Unit, dir: Direction, limit: f64) -> f64 {
    let (lo, hi) = unit.trial_cell_voltage_range();
    match dir {
        Direction::Charge => hi - limit,
        Direction::Discharge => limit - lo,
    }
}

/// Evaluates the prepared unit at `current`; `None` when a cell would pass
/// `limit` or saturate.
pub fn trial_within(unit: &mut Unit, current: f64, dir: Direction, limit: f64, par: bool) -> Result<Option<f64>> {
    match unit.trial(current, par) {
        Ok(_) => {
            let o = overshoot(unit, dir, limit);
            Ok(if o > 0.0 { None } else { Some(o) })
        }
        Err(e) if e.is_limit_event() => Ok(None),
        Err(e) => Err(e),
    }
}

/// Shortest step, as a fraction of the full one, worth taking at the end of
/// a constant-current phase.
const LAST_STEP_MIN: f64 = 1e-3;

/// Length of the final step of a constant-current phase whose full step
/// `dt` would pass `limit`: the longest prepared step, found by bisection,
/// that stays within the limit. `None` when it would be negligibly short.
/// The unit is left prepared for the returned step.
pub fn last_step(unit: &mut Unit, current: f64, dir: Direction, limit: f64, dt: f64, par: bool) -> Result<Option<f64>> {
    let (mut lo, mut hi) = (0.0, dt);
    for _ in 0..12 {
        let mid = 0.5 * (lo + hi);
        unit.prepare(mid, par)?;
        if trial_within(unit, current, dir, limit, par)?.is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo < LAST_STEP_MIN * dt {
        unit.prepare(dt, par)?;
        return Ok(None);
    }
    unit.prepare(lo, par)?;
    Ok(Some(lo))
}

const CV_VOLTAGE_TOL: f64 = 1e-5;

/// Pack current in the direction of `dir` that holds the extreme cell at
/// `limit` over the prepared step. `i_cc` bounds the magnitude and `hint`
/// is the previous step's current. Returns zero when even a resting pack is
/// beyond the limit.
pub fn cv_current(unit: &mut Unit, dir: Direction, limit: f64, i_cc: f64, hint: Option<f64>, par: bool) -> Result<f64> {
    let s = dir.sign();
    let g = |unit: &mut Unit, mag: f64| -> Result<f64> {
        match unit.trial(s * mag, par) {
            Ok(_) => Ok(overshoot(unit, dir, limit)),
            Err(e) if e.is_limit_event() => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    };
    let mut lo = 0.0;
    let mut g_lo = g(unit, 0.0)?;
    if g_lo >= 0.0 {
        return Ok(0.0);
    }
    let mut hi = i_cc.abs();
    let mut g_hi = g(unit, hi)?;
    if g_hi <= 0.0 {
        return Ok(s * hi);
    }
    if let Some(h) = hint {
        let m = h.abs();
        if m > lo && m < hi {
            let gm = g(unit, m)?;
            if gm.abs() < CV_VOLTAGE_TOL {
                return Ok(s * m);
            }
            if gm < 0.0 {
                lo = m;
                g_lo = gm;
            } else {
                hi = m;
                g_hi = gm;
            }
        }
    }
    // Illinois false position on the bracket [lo, hi].
    let mut side = 0;
    for _ in 0..60 {
        let m = if g_hi.is_finite() {
            let x = lo - g_lo * (hi - lo) / (g_hi - g_lo);
            if x > lo && x < hi {
                x
            } else {
                0.5 * (lo + hi)
            }
        } else {
            0.5 * (lo + hi)
        };
        let gm = g(unit, m)?;
        if gm.abs() < CV_VOLTAGE_TOL {
            return Ok(s * m);
        }
        if (hi - lo) < 1e-9 * i_cc.abs().max(1e-9) {
            return Ok(s * if gm > 0.0 { lo } else { m });
        }
        if gm < 0.0 {
            lo = m;
            g_lo = gm;
            if side == -1 {
                g_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = m;
            g_hi = gm;
            if side == 1 {
                g_lo *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::CvRegulation(format!(
        "no current holds the extreme cell at {limit} V (bracket {lo}..{hi} A)"
    )))
}

/// One committed step at the given current.
pub fn commit_at(unit: &mut Unit, current: f64, par: bool) -> Result<CommitTotals> {
    unit.trial(current, par)?;
    unit.commit(current, par)
}

/// Constant-current phase until the extreme cell reaches `limit` or
/// `max_time` elapses. Returns the charge moved (Ah, positive) and the
/// elapsed time.
pub fn cc_until(unit: &mut Unit, current: f64, limit: f64, dt: f64, max_time: f64, par: bool) -> Result<(f64, f64)> {
    let dir = if current < 0.0 { Direction::Charge } else { Direction::Discharge };
    let mut t = 0.0;
    let mut ah = 0.0;
    while t < max_time {
        unit.prepare(dt, par)?;
        if trial_within(unit, current, dir, limit, par)?.is_none() {
            break;
        }
        unit.commit(current, par)?;
        t += dt;
        ah += current.abs() * dt / 3600.0;
    }
    Ok((ah, t))
}

/// Constant-voltage hold at `limit` until the current magnitude drops below
/// `cutoff` (A). Returns the charge moved (Ah) and the elapsed time.
#[allow(clippy::too_many_arguments)]
pub fn cv_until(unit: &mut Unit, dir: Direction, limit: f64, i_cc: f64, cutoff: f64, dt: f64, max_time: f64, par: bool) -> Result<(f64, f64)> {
    let mut t = 0.0;
    let mut ah = 0.0;
    let mut hint = None;
    while t < max_time {
        unit.prepare(dt, par)?;
        let i = cv_current(unit, dir, limit, i_cc, hint, par)?;
        if i.abs() < cutoff {
            break;
        }
        commit_at(unit, i, par)?;
        hint = Some(i);
        t += dt;
        ah += i.abs() * dt / 3600.0;
    }
    Ok((ah, t))
}

/// Constant-current charge at `current` (A, magnitude) to `v_limit`, then a
/// constant-voltage hold until the current falls below `i_cutoff`. Returns
/// the accepted charge (Ah).
pub fn cccv_charge(unit: &mut Unit, current: f64, v_limit: f64, i_cutoff: f64, dt: f64, par: bool) -> Result<f64> {
    let i = -current.abs();
    let horizon = 50.0 * 3600.0;
    let (cc, t) = cc_until(unit, i, v_limit, dt, horizon, par)?;
    let (cv, _) = cv_until(unit, Direction::Charge, v_limit, current.abs(), i_cutoff, dt, horizon - t, par)?;
    Ok(cc + cv)
}
