//! Splits a 1C charge across five parallel cells, one of them at half
//! capacity, with and without ladder contact resistances.

use gridtwin::cell_model::{Cell, CellParams};
use gridtwin::celsius;
use gridtwin::pack_topology::{PiGains, TopologySpec};
use gridtwin::variability::CellFactors;

fn main() -> gridtwin::Result<()> {
    let base = CellParams::default();
    let ocv = Cell::with_shipped_tables(base.clone(), celsius(25.0))?.ocv().clone();
    for contact in [0.0, 1e-3] {
        let mut make = |k: usize| {
            let factors = CellFactors {
                capacity: if k == 4 { 0.5 } else { 1.0 },
                ..CellFactors::default()
            };
            Cell::at_soc(factors.apply(&base), ocv.clone(), 0.5, celsius(25.0))
        };
        let mut block = TopologySpec::block(5, contact).build(&PiGains::default(), &mut make)?;
        let current = -5.0 * base.nominal_capacity;
        block.prepare(10.0, false)?;
        let t = block.trial(current, false)?;
        let totals = block.commit(current, false)?;
        let mut shares = Vec::new();
        block.for_each_cell_unit(&mut |u| shares.push(format!("{:.3}", u.current)));
        println!(
            "contacts {:.0} mOhm: block {:.4} V, contact loss {:.3} W, cell currents [{}] A",
            contact * 1e3,
            t.voltage,
            totals.contact,
            shares.join(", ")
        );
    }
    Ok(())
}
