//! Builds the coupled thermal network of a small closed module, heats one
//! cell and lets the fans carry the heat to the container air.

use gridtwin::cell_model::{Cell, CellParams};
use gridtwin::celsius;
use gridtwin::pack_topology::{PiGains, TopologySpec};
use gridtwin::ancillary::FanParams;
use gridtwin::thermal_network::{Environment, HeatLedger, ThermalNetwork, ThermalParams};

fn main() -> gridtwin::Result<()> {
    let params = CellParams::default();
    let base = Cell::with_shipped_tables(params.clone(), celsius(25.0))?;
    let spec = TopologySpec::module(4, 3, 1e-4, 1e-4);
    let root = spec.build(&PiGains::default(), &mut |_| Ok(base.clone()))?;
    let env = Environment {
        temperature: celsius(25.0),
        ..Environment::default()
    };
    let t = &params.thermal;
    let mut net = ThermalNetwork::coupled(&root, &ThermalParams::default(), t.surface_area, t.lumped_capacity(), celsius(25.0), &env)?;
    println!("{} nodes, {} links, {} fans", net.nodes.len(), net.links.len(), net.fans.len());

    let speed = FanParams::default().sized_for(1).nominal_speed();
    for fan in 0..net.fans.len() {
        net.set_fan_speed(fan, speed)?;
    }
    let hot = net.cell_nodes[0];
    for minute in 1..=30 {
        let mut ledger = HeatLedger::default();
        for _ in 0..6 {
            net.clear_generation();
            net.nodes[hot].generated = 2.0;
            ledger = net.advance(10.0)?;
        }
        if minute % 5 == 0 {
            let cells: Vec<f64> = (0..net.cell_nodes.len()).map(|k| net.cell_temperature(k) - 273.15).collect();
            let max = cells.iter().cloned().fold(f64::MIN, f64::max);
            let min = cells.iter().cloned().fold(f64::MAX, f64::min);
            let container = net.nodes[net.container].temperature - 273.15;
            println!("{minute:>3} min: cells {min:.2}..{max:.2} °C, container {container:.2} °C, shell leak {:.3} W", ledger.leaked / 10.0);
        }
    }
    Ok(())
}
