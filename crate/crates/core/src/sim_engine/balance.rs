//! Dissipative equalisation of cell voltages.
//!
//! Each cell above the lowest open-circuit voltage is discharged through its
//! own model at a constant terminal voltage equal to that minimum until the
//! current has decayed below a small cutoff. The removed energy is dissipated.

use crate::cell_model::Cell;
use crate::pack_topology::Unit;
use crate::{Error, Result};

/// Balancing timestep (s).
pub const BALANCE_DT: f64 = 10.0;
/// Current cutoff as a C-rate.
pub const BALANCE_CUTOFF_C: f64 = 1e-3;
/// Cells within this of the target are left alone (V).
pub const BALANCE_TOLERANCE: f64 = 1e-4;

/// Energy flows of one balancing pass (J), summed over represented cells.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BalanceReport {
    /// `Σ∫V·I dt` through the balancing resistors.
    pub dissipated: f64,
    /// Change of stored electrochemical energy (negative).
    pub stored: f64,
    pub cell_ohmic: f64,
    pub cell_reaction: f64,
    pub sei_mol: f64,
    pub lam_mol: f64,
    /// Charge removed (A s), summed over represented cells.
    pub throughput: f64,
    pub cells_adjusted: usize,
}

fn discharge_to(cell: &mut Cell, target: f64, weight: f64, report: &mut BalanceReport) -> Result<()> {
    let cutoff = BALANCE_CUTOFF_C * cell.params.nominal_capacity;
    let cap = cell.params.nominal_capacity;
    let mut guess = 0.0;
    for _ in 0..100_000 {
        cell.prepare(BALANCE_DT)?;
        // terminal voltage falls with discharge current; find V(I) = target
        let f = |c: &Cell, i: f64| c.voltage_at(i).map(|b| b.voltage - target);
        let mut lo = 0.0;
        if f(cell, 0.0)? <= 0.0 {
            return Ok(());
        }
        let mut hi = if guess > 0.0 { 2.0 * guess } else { cutoff.max(1e-3) };
        while f(cell, hi)? > 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > 10.0 * cap {
                return Err(Error::CvRegulation(format!("balancing current exceeds {} A", 10.0 * cap)));
            }
        }
        for _ in 0..80 {
            let m = 0.5 * (lo + hi);
            if f(cell, m)? > 0.0 {
                lo = m;
            } else {
                hi = m;
            }
            if hi - lo < 1e-9 * cap {
                break;
            }
        }
        let i = lo;
        if i < cutoff {
            return Ok(());
        }
        let r = cell.commit(i)?;
        let dt = BALANCE_DT;
        report.dissipated += weight * r.breakdown.voltage * i * dt;
        report.stored += weight * r.stored_power * dt;
        report.cell_ohmic += weight * r.ohmic_loss * dt;
        report.cell_reaction += weight * r.reaction_loss * dt;
        report.sei_mol += weight * r.sei_consumed;
        report.lam_mol += weight * r.lam_isolated;
        report.throughput += weight * i * dt;
        guess = i;
    }
    Err(Error::CvRegulation("balancing did not settle".into()))
}

fn visit(u: &mut Unit, target: f64, report: &mut BalanceReport) -> Result<()> {
    let (cell, weight) = match u {
        Unit::Cell(c) => (&mut c.cell, 1.0),
        Unit::Scaled(s) => (&mut s.inner.cell, (s.series * s.parallel) as f64),
        Unit::Group(g) => {
            for c in g.children.iter_mut() {
                visit(c, target, report)?;
            }
            return Ok(());
        }
    };
    if cell.open_circuit_voltage()? > target + BALANCE_TOLERANCE {
        discharge_to(cell, target, weight, report)?;
        report.cells_adjusted += 1;
    }
    Ok(())
}

/// Brings every cell of the tree to the lowest open-circuit voltage.
pub fn weekly_balance(root: &mut Unit) -> Result<BalanceReport> {
    let mut target = f64::INFINITY;
    for c in root.cells() {
        target = target.min(c.open_circuit_voltage()?);
    }
    let mut report = BalanceReport::default();
    visit(root, target, &mut report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell_model::CellParams;
    use crate::pack_topology::{PiGains, TopologySpec};

    fn pair(socs: [f64; 2]) -> Unit {
        let mut k = 0;
        TopologySpec::block(2, 0.0)
            .build(&PiGains::default(), &mut |_| {
                let c = Cell::with_shipped_tables(CellParams::default(), 298.15)?;
                let mut c = Cell::at_soc(c.params.clone(), c.ocv().clone(), socs[k], 298.15)?;
                c.degradation_enabled = false;
                k += 1;
                Ok(c)
            })
            .unwrap()
    }

    #[test]
    fn balanced_pack_is_untouched() {
        let mut u = pair([0.5, 0.5]);
        let r = weekly_balance(&mut u).unwrap();
        assert_eq!(r, BalanceReport::default());
    }

    #[test]
    fn imbalance_is_removed_and_energy_accounted() {
        let mut u = pair([0.5, 0.56]);
        let r = weekly_balance(&mut u).unwrap();
        assert_eq!(r.cells_adjusted, 1);
        assert!(r.dissipated > 0.0);
        let v: Vec<f64> = u.cells().iter().map(|c| c.open_circuit_voltage().unwrap()).collect();
        assert!((v[0] - v[1]).abs() < 2e-3, "{v:?}");
        // stored energy released equals dissipated plus internal losses
        let closure = -r.stored - r.dissipated - r.cell_ohmic - r.cell_reaction;
        assert!(closure.abs() < 1e-9 * r.dissipated, "{closure}");
    }
}
