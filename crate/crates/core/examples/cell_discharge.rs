//! Discharges one fresh cell at 1C from full and prints the voltage and heat.

use gridtwin::cell_model::{Cell, CellParams};
use gridtwin::celsius;

fn main() -> gridtwin::Result<()> {
    let params = CellParams::default();
    let ocv = Cell::with_shipped_tables(params.clone(), celsius(25.0))?.ocv().clone();
    let mut cell = Cell::at_soc(params, ocv, 1.0, celsius(25.0))?;
    let current = cell.params.nominal_capacity;
    let dt = 10.0;
    let mut elapsed = 0.0;
    println!("{:>8} {:>8} {:>8} {:>8}", "time_s", "soc", "V", "heat_W");
    loop {
        let r = cell.step(current, dt)?;
        elapsed += dt;
        if r.breakdown.voltage < cell.params.v_min {
            break;
        }
        if (elapsed as usize).is_multiple_of(300) {
            println!("{elapsed:>8.0} {:>8.3} {:>8.4} {:>8.4}", cell.soc(), r.breakdown.voltage, r.heat);
        }
    }
    println!("reached {:.2} V after {:.0} s ({:.3} Ah)", cell.params.v_min, elapsed, current * elapsed / 3600.0);
    Ok(())
}
