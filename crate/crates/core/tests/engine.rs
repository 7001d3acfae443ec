use gridtwin::pack_topology::TopologySpec;
use gridtwin::sim_engine::{Engine, ProtocolStep, Scenario, ThermalMode};
use gridtwin::thermal_control::ControlVariant;
use gridtwin::celsius;

fn single_cell(cycles: usize) -> Scenario {
    Scenario {
        cycles,
        dt: 30.0,
        ..Scenario::default()
    }
}

#[test]
fn single_cell_cycle_is_dissipative_and_closes() {
    let mut e = Engine::new(single_cell(2)).unwrap();
    e.run().unwrap();
    assert_eq!(e.log.rows.len(), 2);
    for r in &e.log.rows {
        assert!(r.ledger.relative_residual() < 1e-4, "{}", r.ledger.relative_residual());
    }
    // the first cycle starts half charged; the second is a full cycle
    {
        let r = &e.log.rows[1];
        let l = &r.ledger;
        assert!(l.dc_out <= l.dc_in);
        assert!(r.round_trip_efficiency > 0.5 && r.round_trip_efficiency < 1.0, "{}", r.round_trip_efficiency);
    }
}

#[test]
fn rest_only_relaxes_to_ambient() {
    let s = Scenario {
        topology: TopologySpec::module(2, 3, 1e-4, 1e-4),
        protocol: vec![ProtocolStep::rest(6.0 * 3600.0)],
        thermal: ThermalMode::Coupled,
        initial_temperature: celsius(35.0),
        control: ControlVariant::AlwaysOn,
        dt: 60.0,
        ..Scenario::default()
    };
    let mut e = Engine::new(s).unwrap();
    e.run().unwrap();
    let r = &e.log.rows[0];
    // only small equalising currents between cells at different temperatures
    assert!(r.ledger.cell_throughput < 1e-4 * 16.0 * 6.0 * 3600.0, "{}", r.ledger.cell_throughput);
    assert!(r.ledger.contact < 1e-3, "{}", r.ledger.contact);
    assert_eq!(r.ledger.converter_conduction, 0.0);
    for t in e.cell_temperatures() {
        assert!((t - celsius(15.0)).abs() < (celsius(35.0) - celsius(15.0)) * 0.5, "{t}");
    }
}

#[test]
fn checkpoint_continuation_is_bit_identical() {
    let s = Scenario {
        topology: TopologySpec::module(2, 3, 1e-4, 1e-4),
        thermal: ThermalMode::Coupled,
        control: ControlVariant::ProportionalHotspot,
        cycles: 2,
        dt: 30.0,
        log: gridtwin::sim_engine::scenario::LogOptions {
            capacity_every: Some(1),
            ..Default::default()
        },
        ..Scenario::default()
    };
    let mut a = Engine::new(s).unwrap();
    for _ in 0..157 {
        a.tick().unwrap();
    }
    let bytes = a.checkpoint().unwrap();
    let mut b = Engine::restore(&bytes).unwrap();
    a.run().unwrap();
    b.run().unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(bincode::serialize(&a.capacities).unwrap(), bincode::serialize(&b.capacities).unwrap());
}
