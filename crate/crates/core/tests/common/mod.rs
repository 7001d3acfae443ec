//! Property checks shared by the property tests and the acceptance report.
//! Each returns a short description on success and the reason on failure.

#![allow(dead_code)]

use gridtwin::cell_model::diffusion::RadialGrid;
use gridtwin::cell_model::{Cell, CellParams};
use gridtwin::celsius;
use gridtwin::degradation::{particle_stresses, ElectrodeMechanics, StressParams};
use gridtwin::pack_topology::TopologySpec;
use gridtwin::sim_engine::scenario::LogOptions;
use gridtwin::sim_engine::{Engine, Scenario, ThermalMode};
use gridtwin::thermal_control::{ac_command, fan_command, ControlStrategy, ControlVariant, Latch};
use gridtwin::variability::VariationSpec;

pub type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// A 3s3p module with spreads, coupled thermal model and capacity checks
/// every cycle.
pub fn small_module(cycles: usize) -> Scenario {
    Scenario {
        topology: TopologySpec::module(3, 3, 1e-4, 1e-4),
        thermal: ThermalMode::Coupled,
        control: ControlVariant::ProportionalHotspot,
        variation: VariationSpec::default(),
        cycles,
        dt: 30.0,
        log: LogOptions {
            capacity_every: Some(1),
            temperature_every: Some(300.0),
            trace_every: None,
        },
        ..Scenario::default()
    }
}

fn run_in_pool(threads: usize, s: Scenario) -> Engine {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| {
        let mut e = Engine::new(s).unwrap();
        e.run().unwrap();
        e
    })
}

pub fn determinism_across_threads() -> Check {
    let a = run_in_pool(1, small_module(2));
    let b = run_in_pool(4, small_module(2));
    ensure(a.log == b.log, || "metrics differ between 1 and 4 threads".into())?;
    ensure(a.temperatures == b.temperatures, || "temperature logs differ".into())?;
    let caps = |e: &Engine| e.capacities.iter().map(|c| c.capacities.clone()).collect::<Vec<_>>();
    ensure(caps(&a) == caps(&b), || "capacities differ".into())?;
    Ok("1 and 4 threads give identical logs".into())
}

/// Voltage trace of a 1C discharge from 90% to the lower limit.
fn discharge_trace(intervals: usize) -> Vec<f64> {
    let params = CellParams {
        radial_intervals: intervals,
        ..CellParams::default()
    };
    let ocv = Cell::with_shipped_tables(params.clone(), 298.15).unwrap().ocv().clone();
    let mut cell = Cell::at_soc(params, ocv, 0.9, 298.15).unwrap();
    cell.degradation_enabled = false;
    let i = cell.params.nominal_capacity;
    let mut out = Vec::new();
    while let Ok(r) = cell.step(i, 10.0) {
        if r.breakdown.voltage < cell.params.v_min {
            break;
        }
        out.push(r.breakdown.voltage);
    }
    out
}

pub fn grid_convergence() -> Check {
    let coarse = discharge_trace(10);
    let fine = discharge_trace(20);
    let n = coarse.len().min(fine.len());
    ensure(n > 100, || format!("discharge too short ({n} steps)"))?;
    let ms: f64 = coarse[..n].iter().zip(&fine[..n]).map(|(a, b)| ((a - b) / b).powi(2)).sum::<f64>() / n as f64;
    let rms = ms.sqrt();
    ensure(rms < 5e-3, || format!("relative RMS {rms:.2e} between 10 and 20 shells"))?;
    Ok(format!("relative RMS {rms:.2e} between 10 and 20 shells"))
}

fn mechanics() -> ElectrodeMechanics {
    StressParams::default().anode
}

pub fn stress_zero_identity() -> Check {
    let grid = RadialGrid::new(5.86e-6, 10).unwrap();
    let m = mechanics();
    let c = vec![17_000.0; grid.nodes()];
    let s = particle_stresses(&c, &grid, &m).unwrap();
    let scale = m.stress_scale() * 17_000.0;
    let worst = s
        .radial
        .iter()
        .chain(&s.tangential)
        .chain(&s.hydrostatic)
        .fold(0.0f64, |a, x| a.max(x.abs()));
    ensure(worst <= 1e-12 * scale, || format!("uniform profile leaves stress {worst:e} Pa"))?;
    Ok("uniform profile is stress free".into())
}

pub fn stress_parabolic_oracle() -> Check {
    let big_r = 5.86e-6;
    let grid = RadialGrid::new(big_r, 10).unwrap();
    let m = mechanics();
    let (c0, c2) = (12_000.0, 3.0e14);
    let c: Vec<f64> = (0..grid.nodes())
        .map(|k| c0 + c2 * grid.node_radius(k).powi(2))
        .collect();
    let s = particle_stresses(&c, &grid, &m).unwrap();
    let k = m.stress_scale();
    let mut worst = 0.0f64;
    let norm = (k * c2 * big_r * big_r).abs();
    for j in 0..grid.nodes() {
        let r = grid.node_radius(j);
        let sr = 2.0 * k * c2 * (big_r * big_r - r * r) / 5.0;
        let st = k * c2 * (2.0 * big_r * big_r - 4.0 * r * r) / 5.0;
        let sh = (sr + 2.0 * st) / 3.0;
        for (got, want) in [(s.radial[j], sr), (s.tangential[j], st), (s.hydrostatic[j], sh)] {
            worst = worst.max((got - want).abs() / norm);
        }
    }
    ensure(worst < 1e-6, || format!("largest relative deviation {worst:e}"))?;
    ensure((s.radial[0] - s.tangential[0]).abs() <= 1e-9 * norm, || "centre is not isotropic".into())?;
    Ok(format!("parabolic profile within {worst:.1e} of the closed form"))
}

pub fn control_laws() -> Check {
    let all = ControlVariant::ALL;
    for v in all {
        let s = ControlStrategy::new(v);
        let mut latch = Latch::default();
        let mut ac_latch = Latch::default();
        for k in 0..=500 {
            let t = celsius(0.0) + 0.1 * k as f64;
            for hot in [t, t + 3.0] {
                let f = fan_command(&s, t, hot, &mut latch);
                let a = ac_command(&s, t, hot, &mut ac_latch);
                ensure((0.0..=1.0).contains(&f) && (0.0..=1.0).contains(&a), || format!("{v:?} command out of range"))?;
            }
        }
    }
    let p4 = ControlStrategy::new(ControlVariant::ProportionalLocal);
    let mut l = Latch::default();
    ensure((fan_command(&p4, celsius(30.0), celsius(30.0), &mut l) - 0.5).abs() < 1e-12, || "variant 4 midpoint".into())?;
    ensure(fan_command(&p4, celsius(40.0), celsius(40.0), &mut l) == 1.0, || "variant 4 clamp".into())?;
    ensure((ac_command(&p4, celsius(22.5), celsius(22.5), &mut l) - 0.5).abs() < 1e-12, || "variant 4 AC midpoint".into())?;
    let p5 = ControlStrategy::new(ControlVariant::ProportionalHotspot);
    ensure(ac_command(&p5, celsius(19.0), celsius(40.0), &mut l) == 0.0, || "variant 5 AC gate".into())?;
    let p1 = ControlStrategy::new(ControlVariant::AlwaysOn);
    ensure(ac_command(&p1, celsius(18.0), celsius(18.0), &mut l) == 0.0, || "variant 1 AC cutoff".into())?;
    let p2 = ControlStrategy::new(ControlVariant::LocalOnOff);
    let mut latch = Latch::default();
    let seq: Vec<f64> = [24.0, 36.0, 26.0, 24.0]
        .iter()
        .map(|t| fan_command(&p2, celsius(*t), celsius(*t), &mut latch))
        .collect();
    ensure(seq == [0.0, 1.0, 1.0, 0.0], || format!("variant 2 hysteresis gave {seq:?}"))?;
    Ok("commands in [0, 1], clamps, gates and hysteresis hold".into())
}

pub fn checkpoint_continuation() -> Check {
    let mut a = Engine::new(small_module(2)).unwrap();
    for _ in 0..211 {
        a.tick().unwrap();
    }
    let bytes = a.checkpoint().unwrap();
    let mut b = Engine::restore(&bytes).unwrap();
    a.run().unwrap();
    b.run().unwrap();
    ensure(a.log == b.log, || "continued run differs".into())?;
    ensure(a.temperatures == b.temperatures, || "continued temperatures differ".into())?;
    Ok("restored run matches the uninterrupted one".into())
}
