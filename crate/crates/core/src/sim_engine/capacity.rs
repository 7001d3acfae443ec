use rayon::prelude::*;

use super::protocol::{cc_until, cccv_charge, cv_until, Direction};
use crate::cell_model::Cell;
use crate::pack_topology::{CellUnit, Unit};
use crate::Result;

/// Timestep of the capacity check (s).
pub const CHECK_DT: f64 = 10.0;
/// Current cutoff of the constant-voltage phases as a C-rate.
pub const CHECK_CUTOFF_C: f64 = 0.05;

/// Capacity of a copy of `cell` as a fraction of its nominal value: a 1C
/// discharge with constant-voltage tail to the lower limit followed by a 1C
/// CCCV charge to the upper limit, isothermal at the reference temperature
/// and without ageing. The original cell is untouched.
pub fn measure_capacity(cell: &Cell) -> Result<f64> {
    let mut c = cell.clone();
    c.degradation_enabled = false;
    c.set_temperature(c.params.reference_temperature);
    let q = c.params.nominal_capacity;
    let (v_min, v_max) = (c.params.v_min, c.params.v_max);
    let mut u = Unit::Cell(CellUnit::new(c, 0));
    let horizon = 20.0 * 3600.0;
    cc_until(&mut u, q, v_min, CHECK_DT, horizon, false)?;
    cv_until(&mut u, Direction::Discharge, v_min, q, CHECK_CUTOFF_C * q, CHECK_DT, horizon, false)?;
    let ah = cccv_charge(&mut u, q, v_max, CHECK_CUTOFF_C * q, CHECK_DT, false)?;
    Ok(ah / q)
}

/// Capacities of every simulated cell in depth-first order together with
/// the number of physical cells each one represents.
pub fn measure_all(root: &Unit, par: bool) -> Result<(Vec<f64>, Vec<usize>)> {
    let cells = root.cells();
    let caps: Vec<Result<f64>> = if par {
        cells.par_iter().map(|c| measure_capacity(c)).collect()
    } else {
        cells.iter().map(|c| measure_capacity(c)).collect()
    };
    let caps = caps.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((caps, represented_counts(root)))
}

/// Physical cells behind each simulated cell, depth-first.
pub fn represented_counts(root: &Unit) -> Vec<usize> {
    fn go(u: &Unit, out: &mut Vec<usize>) {
        match u {
            Unit::Cell(_) => out.push(1),
            Unit::Scaled(s) => out.push(s.series * s.parallel),
            Unit::Group(g) => g.children.iter().for_each(|c| go(c, out)),
        }
    }
    let mut out = Vec::new();
    go(root, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell_model::CellParams;

    #[test]
    fn fresh_cell_is_near_nominal_and_untouched() {
        let cell = Cell::with_shipped_tables(CellParams::default(), 298.15).unwrap();
        let before = cell.state.clone();
        let f = measure_capacity(&cell).unwrap();
        assert!((f - 1.0).abs() < 0.02, "{f}");
        assert_eq!(cell.state, before);
    }

    #[test]
    fn aged_cell_measures_less() {
        let fresh = Cell::with_shipped_tables(CellParams::default(), 298.15).unwrap();
        let mut aged = fresh.clone();
        aged.state.degradation.eps_n *= 0.9;
        let shift = 0.05 * aged.params.anode.max_concentration;
        for c in aged.state.c_n.iter_mut() {
            *c -= shift;
        }
        assert!(measure_capacity(&aged).unwrap() < measure_capacity(&fresh).unwrap());
    }
}
