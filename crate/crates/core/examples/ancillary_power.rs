//! Fan, air-conditioning and converter power for a 140-cell module.

use gridtwin::ancillary::{ac_operate, converter_losses, fan_power, AcParams, ConverterParams, FanParams, REFERENCE_BATTERY_VOLTAGE};
use gridtwin::cell_model::CellParams;
use gridtwin::celsius;
use gridtwin::thermal_network::{CoolingMode, Environment};

fn main() -> gridtwin::Result<()> {
    let cells = 140;
    let fan = FanParams::default().sized_for(cells);
    println!("fan for {cells} cells: nominal {:.2} m/s, {:.2} W", fan.nominal_speed(), fan.nominal_power());
    for command in [0.25, 0.5, 0.75, 1.0] {
        println!("  command {command:.2}: {:.3} W", fan_power(fan.speed_for(command), &fan));
    }

    let ac = AcParams::default();
    for (mode, outside) in [(CoolingMode::Chiller, 30.0), (CoolingMode::DirectAir, 15.0), (CoolingMode::DirectAir, 35.0)] {
        let env = Environment {
            temperature: celsius(outside),
            mode,
        };
        let op = ac_operate(1.0, celsius(30.0), &env, &ac, &fan, cells)?;
        println!(
            "AC {mode:?} at {outside} °C outside: removes {:.1} W for {:.2} W{}",
            op.removed,
            op.electrical,
            if op.chilled { " (chiller fallback)" } else { "" }
        );
    }

    let cell = CellParams::default();
    let module_voltage = 20.0 * cell.nominal_voltage;
    let one_c = 7.0 * cell.nominal_capacity;
    let rating = 1.5 * module_voltage * one_c;
    let conv = ConverterParams::reference().rescaled(rating, module_voltage);
    println!("converter rescaled from {REFERENCE_BATTERY_VOLTAGE} V to {module_voltage} V, {rating:.0} W");
    for c_rate in [0.25, 0.5, 1.0] {
        let i = c_rate * one_c;
        let p = i * module_voltage;
        let l = converter_losses(i, module_voltage, p, &conv)?;
        println!("  {c_rate}C: {:.2} W lost ({:.2}% of {p:.0} W)", l.total(), 100.0 * l.total() / p);
    }
    Ok(())
}
