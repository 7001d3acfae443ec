//! Cycles a small module with the coupled thermal model, saves a checkpoint
//! halfway and shows that the restored run ends in the same state.

use gridtwin::pack_topology::TopologySpec;
use gridtwin::sim_engine::scenario::LogOptions;
use gridtwin::sim_engine::{Engine, Scenario, ThermalMode};
use gridtwin::thermal_control::ControlVariant;
use gridtwin::variability::VariationSpec;

fn main() -> gridtwin::Result<()> {
    let scenario = Scenario {
        topology: TopologySpec::module(4, 3, 1e-4, 1e-4),
        thermal: ThermalMode::Coupled,
        control: ControlVariant::ProportionalHotspot,
        variation: VariationSpec::default(),
        cycles: 4,
        dt: 30.0,
        initial_soc: 0.0,
        log: LogOptions {
            capacity_every: Some(2),
            ..LogOptions::default()
        },
        ..Scenario::default()
    };
    let mut engine = Engine::new(scenario)?;
    engine.run_cycle()?;
    engine.run_cycle()?;
    let bytes = engine.checkpoint()?;
    println!("checkpoint after 2 cycles: {} bytes", bytes.len());
    engine.run()?;
    let mut restored = Engine::restore(&bytes)?;
    restored.run()?;

    println!("{:>5} {:>8} {:>8} {:>10} {:>9}", "cycle", "RTE", "usable", "cap_mean", "T_mean_C");
    for r in &engine.log.rows {
        println!(
            "{:>5} {:>8.4} {:>8.4} {:>10.5} {:>9.2}",
            r.cycle,
            r.round_trip_efficiency,
            r.usable_energy,
            r.capacity.mean,
            r.temperature_mean - 273.15
        );
    }
    let total = engine.log.rows.iter().fold(0.0, |a, r| a + r.ledger.losses());
    let identical = engine.checkpoint()? == restored.checkpoint()?;
    println!("total losses {:.1} kJ, restored run identical: {identical}", total / 1e3);
    Ok(())
}
