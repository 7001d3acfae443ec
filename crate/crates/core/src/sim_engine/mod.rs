//! Scenario execution.
//!
//! An [`Engine`] owns the unit tree and the thermal network and advances both
//! one timestep at a time: control commands, electrical solve (which also
//! updates degradation), thermal exchange and energy bookkeeping. The full
//! state, including logs, can be checkpointed between any two timesteps.

pub mod balance;
pub mod capacity;
pub mod checkpoint;
pub mod ledger;
pub mod protocol;
pub mod scenario;

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::ancillary::{ac_operate, converter_losses, fan_power, AcOperation, ConverterLosses, ConverterParams, Fan};
use crate::cell_model::ocv::OcvTables;
use crate::cell_model::Cell;
use crate::pack_topology::{CommitTotals, Unit};
use crate::thermal_control::{ac_command, fan_command, ControlStrategy, Latch};
use crate::thermal_network::ThermalNetwork;
use crate::variability::{sample_population, CellFactors};
use crate::{Error, Result};

pub use balance::{weekly_balance, BalanceReport};
pub use capacity::{measure_all, measure_capacity};
pub use ledger::{Ledger, MetricsLog, MetricsRow, Stats};
pub use protocol::{cccv_charge, Direction};
pub use scenario::{daily_profile, CvHold, ProtocolStep, Scenario, ThermalMode};

/// Where the engine is within the current protocol step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    ConstantCurrent,
    ConstantVoltage,
    /// Current stopped at a limit; resting for the rest of a timed step.
    Hold,
    Rest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    CyclesDone,
    MaxFec,
    CapacityFloor,
    MaxTime,
    WallClock,
    EndOfLife,
}

/// Cell temperatures at one instant (K).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureRow {
    pub time: f64,
    pub cells: Vec<f64>,
    /// Container air; NaN without a coupled network.
    pub container: f64,
}

/// Per-cell currents and voltages at one committed step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub time: f64,
    pub pack_current: f64,
    pub pack_voltage: f64,
    pub currents: Vec<f64>,
    pub voltages: Vec<f64>,
    /// Contact-resistance drop in front of each child of the root group.
    pub contact_drops: Vec<f64>,
}

/// Capacity fractions of all simulated cells after a cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitySample {
    pub cycle: usize,
    pub capacities: Vec<f64>,
    pub weights: Vec<usize>,
}

impl CapacitySample {
    pub fn stats(&self) -> Stats {
        Stats::weighted(&self.capacities, &self.weights)
    }
}

/// Serializable progress of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub clock: f64,
    /// Completed cycles.
    pub cycle: usize,
    pub step: usize,
    pub step_elapsed: f64,
    pub phase: Phase,
    pub cv_hint: Option<f64>,
    pub fan_latches: Vec<Latch>,
    pub ac_latch: Latch,
    pub cycle_ledger: Ledger,
    pub total_ledger: Ledger,
    pub cycle_start: f64,
    pub temperature_integral: f64,
    pub temperature_min: f64,
    pub temperature_max: f64,
    pub spread_max: f64,
    pub last_balance: f64,
    pub next_temperature_log: f64,
    pub steps_taken: u64,
    pub end_of_life: bool,
    pub stopped: Option<StopReason>,
}

/// Everything the checkpoint carries.
#[derive(Serialize, Deserialize)]
struct Snapshot {
    scenario_toml: String,
    root: Unit,
    thermal: Option<ThermalNetwork>,
    progress: Progress,
    log: MetricsLog,
    temperatures: Vec<TemperatureRow>,
    traces: Vec<TraceRow>,
    capacities: Vec<CapacitySample>,
}

/// Outcome of one timestep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tick {
    pub dt: f64,
    pub current: f64,
    pub voltage: f64,
    /// The timestep closed a cycle.
    pub cycle_done: bool,
}

pub struct Engine {
    pub scenario: Scenario,
    pub root: Unit,
    pub thermal: Option<ThermalNetwork>,
    pub progress: Progress,
    pub log: MetricsLog,
    pub temperatures: Vec<TemperatureRow>,
    pub traces: Vec<TraceRow>,
    pub capacities: Vec<CapacitySample>,
    ocv: Arc<OcvTables>,
    counts: Vec<usize>,
    fans: Vec<Fan>,
    ac_fan: Option<Fan>,
    converter: ConverterParams,
    strategy: ControlStrategy,
    started: Instant,
}

/// Loads the scenario's open-circuit tables.
pub fn load_ocv(s: &Scenario) -> Result<Arc<OcvTables>> {
    match &s.ocv_files {
        None => Ok(Arc::new(OcvTables::shipped())),
        Some(f) => {
            let read = |p: &std::path::Path| {
                std::fs::read_to_string(p).map_err(|e| Error::Config {
                    path: p.to_path_buf(),
                    message: e.to_string(),
                })
            };
            Ok(Arc::new(OcvTables::from_csv_text(
                &read(&f.anode)?,
                &read(&f.cathode)?,
                &read(&f.entropic)?,
            )?))
        }
    }
}

impl Engine {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let ocv = load_ocv(&scenario)?;
        let n = scenario.topology.model_cells();
        let mut params = sample_population(&scenario.cell, &scenario.variation, n)?;
        for o in &scenario.overrides {
            let f = CellFactors {
                capacity: o.capacity,
                resistance: o.resistance,
                ..CellFactors::default()
            };
            params[o.index] = f.apply(&params[o.index]);
        }
        let mut root = scenario.topology.build(&scenario.pi, &mut |k| {
            let mut c = Cell::at_soc(params[k].clone(), ocv.clone(), scenario.initial_soc, scenario.initial_temperature)?;
            c.degradation_enabled = scenario.degradation;
            Ok(c)
        })?;
        root.set_degradation(scenario.degradation);
        let t0 = scenario.initial_temperature;
        let cp = &scenario.cell.thermal;
        let thermal = match scenario.thermal {
            ThermalMode::Isothermal => None,
            ThermalMode::Individual => Some(ThermalNetwork::individual(&root, cp.surface_area, cp.lumped_capacity(), t0, &scenario.environment)?),
            ThermalMode::Coupled => Some(ThermalNetwork::coupled(
                &root,
                &scenario.thermal_params,
                cp.surface_area,
                cp.lumped_capacity(),
                t0,
                &scenario.environment,
            )?),
        };
        let fan_count = thermal.as_ref().map_or(0, |t| t.fans.len());
        let progress = Progress {
            clock: 0.0,
            cycle: 0,
            step: 0,
            step_elapsed: 0.0,
            phase: initial_phase(&scenario.protocol[0]),
            cv_hint: None,
            fan_latches: vec![Latch::default(); fan_count],
            ac_latch: Latch::default(),
            cycle_ledger: Ledger::default(),
            total_ledger: Ledger::default(),
            cycle_start: 0.0,
            temperature_integral: 0.0,
            temperature_min: f64::INFINITY,
            temperature_max: f64::NEG_INFINITY,
            spread_max: 0.0,
            last_balance: 0.0,
            next_temperature_log: 0.0,
            steps_taken: 0,
            end_of_life: false,
            stopped: None,
        };
        let mut e = Self::assemble(scenario, root, thermal, progress, ocv)?;
        if e.scenario.log.capacity_every.is_some() {
            e.record_capacity(0)?;
        }
        Ok(e)
    }

    fn assemble(scenario: Scenario, root: Unit, thermal: Option<ThermalNetwork>, progress: Progress, ocv: Arc<OcvTables>) -> Result<Self> {
        let counts = capacity::represented_counts(&root);
        let fans = thermal
            .as_ref()
            .map(|t| t.fans.iter().map(|f| scenario.ancillary.fan.sized_for(f.cells_served)).collect())
            .unwrap_or_default();
        let ac_fan = thermal
            .as_ref()
            .filter(|t| t.has_container())
            .map(|_| scenario.ancillary.fan.sized_for(root.represented_cells()));
        let v_nom = scenario.topology.series_cells() as f64 * scenario.cell.nominal_voltage;
        let rating = scenario.ancillary.converter_c_rating * root.nominal_capacity() * v_nom;
        let converter = scenario.ancillary.converter.rescaled(rating, v_nom);
        let strategy = ControlStrategy {
            variant: scenario.control,
            thresholds: scenario.thresholds,
        };
        Ok(Self {
            scenario,
            root,
            thermal,
            progress,
            log: MetricsLog::default(),
            temperatures: Vec::new(),
            traces: Vec::new(),
            capacities: Vec::new(),
            ocv,
            counts,
            fans,
            ac_fan,
            converter,
            strategy,
            started: Instant::now(),
        })
    }

    pub fn ocv(&self) -> &Arc<OcvTables> {
        &self.ocv
    }

    /// Physical cells behind each simulated cell.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn converter_params(&self) -> &ConverterParams {
        &self.converter
    }

    pub fn is_finished(&self) -> bool {
        self.progress.stopped.is_some()
    }

    /// Cumulative full equivalent cycles.
    pub fn fec(&self) -> f64 {
        let n = self.root.represented_cells() as f64;
        self.progress.total_ledger.cell_throughput / 3600.0 / (2.0 * n * self.scenario.cell.nominal_capacity)
    }

    fn par(&self) -> bool {
        self.scenario.parallel
    }

    fn record_capacity(&mut self, cycle: usize) -> Result<Stats> {
        let (caps, weights) = measure_all(&self.root, self.par())?;
        let s = CapacitySample {
            cycle,
            capacities: caps,
            weights,
        };
        let stats = s.stats();
        self.capacities.push(s);
        Ok(stats)
    }

    /// Cell temperatures (K) in depth-first order.
    pub fn cell_temperatures(&self) -> Vec<f64> {
        self.root.cells().iter().map(|c| c.temperature()).collect()
    }

    /// Fan and AC commands for this timestep; returns their electrical
    /// power (W) and the AC operation.
    fn control(&mut self) -> Result<(f64, AcOperation)> {
        let Some(net) = self.thermal.as_mut() else {
            return Ok((0.0, AcOperation::default()));
        };
        if self.fans.is_empty() {
            return Ok((0.0, AcOperation::default()));
        }
        let mut fan_w = 0.0;
        for k in 0..net.fans.len() {
            let site = &net.fans[k];
            let t_local = net.nodes[site.node].temperature;
            let t_hot = net.max_cell_temperature(&site.cell_nodes);
            let cmd = fan_command(&self.strategy, t_local, t_hot, &mut self.progress.fan_latches[k]);
            let v = self.fans[k].speed_for(cmd);
            net.set_fan_speed(k, v)?;
            fan_w += fan_power(v, &self.fans[k]);
        }
        let ac = match &self.ac_fan {
            Some(fan) => {
                let t_c = net.nodes[net.container].temperature;
                let t_hot = net.max_cell_temperature(&net.cell_nodes);
                let cmd = ac_command(&self.strategy, t_c, t_hot, &mut self.progress.ac_latch);
                ac_operate(cmd, t_c, &self.scenario.environment, &self.scenario.ancillary.ac, fan, self.root.represented_cells())?
            }
            None => AcOperation::default(),
        };
        Ok((fan_w, ac))
    }

    fn step_current_magnitude(&self, c_rate: f64) -> f64 {
        c_rate * self.root.nominal_capacity()
    }

    /// Advances one timestep. Does nothing once the run has stopped.
    pub fn tick(&mut self) -> Result<Option<Tick>> {
        if self.is_finished() {
            return Ok(None);
        }
        if self.progress.step == 0 && self.progress.step_elapsed == 0.0 {
            self.maybe_balance()?;
        }
        let par = self.par();
        let step = self.scenario.protocol[self.progress.step].clone();
        let mut dt = match duration(&step) {
            Some(d) => self.scenario.dt.min(d - self.progress.step_elapsed),
            None => self.scenario.dt,
        };
        let (fan_w, ac) = self.control()?;
        self.root.prepare(dt, par)?;
        let (v_min, v_max) = (self.scenario.cell.v_min, self.scenario.cell.v_max);

        // pick the current, moving through phases that end without time passing
        let mut step_over = false;
        let mut ends_step = false;
        let current = loop {
            match (&step, self.progress.phase) {
                (ProtocolStep::Rest { .. }, _) | (_, Phase::Rest) | (_, Phase::Hold) => break 0.0,
                (ProtocolStep::Charge { c_rate, cv, .. } | ProtocolStep::Discharge { c_rate, cv, .. }, Phase::ConstantCurrent) => {
                    let dir = if step.is_discharge() { Direction::Discharge } else { Direction::Charge };
                    let limit = if step.is_discharge() { v_min } else { v_max };
                    let i = dir.sign() * self.step_current_magnitude(*c_rate);
                    if protocol::trial_within(&mut self.root, i, dir, limit, par)?.is_some() {
                        break i;
                    }
                    if cv.is_some() {
                        self.progress.phase = Phase::ConstantVoltage;
                        self.progress.cv_hint = None;
                    } else if duration(&step).is_some() {
                        self.progress.phase = Phase::Hold;
                    } else if let Some(h) = protocol::last_step(&mut self.root, i, dir, limit, dt, par)? {
                        dt = h;
                        ends_step = true;
                        break i;
                    } else {
                        step_over = true;
                        break 0.0;
                    }
                }
                (ProtocolStep::Charge { c_rate, cv, .. } | ProtocolStep::Discharge { c_rate, cv, .. }, Phase::ConstantVoltage) => {
                    let hold = cv.expect("constant-voltage phase has a hold");
                    let dir = if step.is_discharge() { Direction::Discharge } else { Direction::Charge };
                    let limit = hold.voltage.unwrap_or(if step.is_discharge() { v_min } else { v_max });
                    let i_cc = self.step_current_magnitude(*c_rate);
                    let i = protocol::cv_current(&mut self.root, dir, limit, i_cc, self.progress.cv_hint, par)?;
                    if i.abs() >= hold.cutoff_c * self.root.nominal_capacity() {
                        self.progress.cv_hint = Some(i);
                        break i;
                    }
                    if duration(&step).is_some() {
                        self.progress.phase = Phase::Hold;
                    } else {
                        step_over = true;
                        break 0.0;
                    }
                }
            }
        };
        if step_over {
            let done = self.advance_protocol()?;
            return Ok(Some(Tick {
                dt: 0.0,
                current: 0.0,
                voltage: self.root.terminal_voltage(),
                cycle_done: done,
            }));
        }
        let totals = protocol::commit_at(&mut self.root, current, par)?;
        let voltage = self.root.terminal_voltage();
        let conv_heat = self.book(&totals, current, voltage, dt, fan_w, &ac, step.is_discharge())?;
        self.thermal_update(dt, conv_heat, &ac)?;
        self.progress.clock += dt;
        self.progress.step_elapsed += dt;
        self.progress.steps_taken += 1;
        self.record_logs(current, voltage, dt);
        if totals.end_of_life {
            self.progress.end_of_life = true;
            if self.scenario.stop.end_of_life {
                self.progress.stopped = Some(StopReason::EndOfLife);
            }
        }
        let mut cycle_done = false;
        let finished_timed = duration(&step).is_some_and(|d| self.progress.step_elapsed >= d * (1.0 - 1e-12));
        if finished_timed || ends_step {
            cycle_done = self.advance_protocol()?;
        } else if let (None, ProtocolStep::Charge { c_rate, .. } | ProtocolStep::Discharge { c_rate, .. }) = (duration(&step), &step) {
            // safety net for untimed steps that never reach a limit
            if self.progress.step_elapsed > 4.0 * 3600.0 / c_rate {
                cycle_done = self.advance_protocol()?;
            }
        }
        if let Some(t) = self.scenario.stop.max_time {
            if self.progress.clock >= t && self.progress.stopped.is_none() {
                self.progress.stopped = Some(StopReason::MaxTime);
            }
        }
        if let Some(w) = self.scenario.stop.wall_clock {
            if self.started.elapsed().as_secs_f64() >= w && self.progress.stopped.is_none() {
                self.progress.stopped = Some(StopReason::WallClock);
            }
        }
        Ok(Some(Tick {
            dt,
            current,
            voltage,
            cycle_done,
        }))
    }

    /// Books one committed step; returns the converter heat (W).
    #[allow(clippy::too_many_arguments)]
    fn book(&mut self, t: &CommitTotals, current: f64, voltage: f64, dt: f64, fan_w: f64, ac: &AcOperation, discharging: bool) -> Result<f64> {
        let p_dc = voltage * current;
        let conv = if self.scenario.converter {
            converter_losses(current, voltage, p_dc, &self.converter)?
        } else {
            ConverterLosses::default()
        };
        let l = &mut self.progress.cycle_ledger;
        l.cell_ohmic += t.cell_ohmic * dt;
        l.cell_reaction += t.cell_reaction * dt;
        l.contact += t.contact * dt;
        l.delta_stored += t.stored * dt;
        l.cell_throughput += t.abs_current * dt;
        l.sei_mol += t.sei_mol;
        l.lam_mol += t.lam_mol;
        l.fan += fan_w * dt;
        l.ac += ac.electrical * dt;
        l.converter_conduction += conv.conduction * dt;
        l.converter_switching += conv.switching * dt;
        l.converter_passive += conv.passive * dt;
        l.book_grid(p_dc, conv.total(), fan_w + ac.electrical, dt, discharging);
        Ok(conv.total())
    }

    fn thermal_update(&mut self, dt: f64, converter_heat: f64, ac: &AcOperation) -> Result<()> {
        let Some(net) = self.thermal.as_mut() else {
            return Ok(());
        };
        net.clear_generation();
        let mut heats = Vec::with_capacity(net.cell_nodes.len());
        let mut k = 0;
        let counts = &self.counts;
        self.root.for_each_cell_unit(&mut |c| {
            heats.push(c.last.map_or(0.0, |r| r.heat) * counts[k] as f64);
            k += 1;
        });
        for (j, h) in heats.into_iter().enumerate() {
            let n = net.cell_nodes[j];
            net.nodes[n].generated += h;
        }
        let mut contact = Vec::with_capacity(net.group_heat_nodes.len());
        self.root.for_each_group(&mut |g| contact.push(g.contact_loss));
        for (j, q) in contact.into_iter().enumerate() {
            let n = net.group_heat_nodes[j];
            net.nodes[n].generated += q;
        }
        if net.has_container() {
            let c = net.container;
            net.nodes[c].generated += converter_heat;
            net.sink = ac.removed;
        }
        net.advance(dt)?;
        let net = &*net;
        let mut k = 0;
        self.root.for_each_cell_unit_mut(&mut |c| {
            c.cell.set_temperature(net.nodes[net.cell_nodes[k]].temperature);
            k += 1;
        });
        Ok(())
    }

    fn record_logs(&mut self, current: f64, voltage: f64, dt: f64) {
        let temps = self.cell_temperatures();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut sum = 0.0;
        let mut w = 0.0;
        for (t, &k) in temps.iter().zip(&self.counts) {
            lo = lo.min(*t);
            hi = hi.max(*t);
            sum += t * k as f64;
            w += k as f64;
        }
        let p = &mut self.progress;
        p.temperature_min = p.temperature_min.min(lo);
        p.temperature_max = p.temperature_max.max(hi);
        p.spread_max = p.spread_max.max(hi - lo);
        p.temperature_integral += sum / w * dt;
        if let Some(every) = self.scenario.log.temperature_every {
            if p.clock >= p.next_temperature_log - 1e-9 {
                let container = self
                    .thermal
                    .as_ref()
                    .filter(|t| t.has_container())
                    .map_or(f64::NAN, |t| t.nodes[t.container].temperature);
                self.temperatures.push(TemperatureRow {
                    time: p.clock,
                    cells: temps,
                    container,
                });
                while p.next_temperature_log <= p.clock + 1e-9 {
                    p.next_temperature_log += every;
                }
            }
        }
        if let Some(every) = self.scenario.log.trace_every {
            if every > 0 && (p.steps_taken - 1).is_multiple_of(every as u64) {
                let mut currents = Vec::new();
                let mut voltages = Vec::new();
                self.root.for_each_cell_unit(&mut |c| {
                    currents.push(c.current);
                    voltages.push(c.voltage);
                });
                let contact_drops = match &self.root {
                    Unit::Group(g) => root_contact_drops(g),
                    _ => Vec::new(),
                };
                self.traces.push(TraceRow {
                    time: p.clock,
                    pack_current: current,
                    pack_voltage: voltage,
                    currents,
                    voltages,
                    contact_drops,
                });
            }
        }
    }

    /// Moves to the next protocol step; returns whether a cycle closed.
    fn advance_protocol(&mut self) -> Result<bool> {
        let p = &mut self.progress;
        p.step += 1;
        p.step_elapsed = 0.0;
        p.cv_hint = None;
        if p.step < self.scenario.protocol.len() {
            p.phase = initial_phase(&self.scenario.protocol[p.step]);
            return Ok(false);
        }
        p.step = 0;
        p.phase = initial_phase(&self.scenario.protocol[0]);
        self.close_cycle()?;
        Ok(true)
    }

    fn close_cycle(&mut self) -> Result<()> {
        let cycle = self.progress.cycle + 1;
        self.progress.cycle = cycle;
        let ledger = self.progress.cycle_ledger;
        self.progress.total_ledger.add(&ledger);
        let last = cycle >= self.scenario.cycles;
        let capacity = match self.scenario.log.capacity_every {
            Some(every) if every > 0 && (cycle.is_multiple_of(every) || last) => self.record_capacity(cycle)?,
            _ => Stats::nan(),
        };
        let p = &self.progress;
        let span = p.clock - p.cycle_start;
        let isothermal = self.thermal.is_none();
        let t0 = self.scenario.initial_temperature;
        let row = MetricsRow {
            cycle,
            time: p.clock,
            fec: self.fec(),
            round_trip_efficiency: ledger.round_trip_efficiency(),
            usable_energy: ledger.discharge_out / self.scenario.energy_capacity(),
            capacity,
            temperature_mean: if span > 0.0 { p.temperature_integral / span } else { t0 },
            temperature_min: if isothermal { t0 } else { p.temperature_min },
            temperature_max: if isothermal { t0 } else { p.temperature_max },
            temperature_spread: p.spread_max,
            ledger,
        };
        self.log.rows.push(row);
        let p = &mut self.progress;
        p.cycle_ledger = Ledger::default();
        p.cycle_start = p.clock;
        p.temperature_integral = 0.0;
        p.temperature_min = f64::INFINITY;
        p.temperature_max = f64::NEG_INFINITY;
        p.spread_max = 0.0;
        if p.stopped.is_none() {
            let stop = &self.scenario.stop;
            p.stopped = if last {
                Some(StopReason::CyclesDone)
            } else if stop.max_fec.is_some_and(|f| row.fec >= f) {
                Some(StopReason::MaxFec)
            } else if stop.capacity_floor.is_some_and(|f| capacity.mean < f) {
                Some(StopReason::CapacityFloor)
            } else {
                None
            };
        }
        Ok(())
    }

    /// Runs the balancing pass when one is due, at a cycle boundary.
    fn maybe_balance(&mut self) -> Result<()> {
        let Some(every) = self.scenario.balance_every else {
            return Ok(());
        };
        if self.progress.clock - self.progress.last_balance < every - 1e-9 {
            return Ok(());
        }
        self.progress.last_balance = self.progress.clock;
        let r = weekly_balance(&mut self.root)?;
        let l = &mut self.progress.cycle_ledger;
        l.balancing += r.dissipated;
        l.delta_stored += r.stored;
        l.cell_ohmic += r.cell_ohmic;
        l.cell_reaction += r.cell_reaction;
        l.sei_mol += r.sei_mol;
        l.lam_mol += r.lam_mol;
        Ok(())
    }

    /// Runs timesteps until the current cycle closes or the run stops.
    pub fn run_cycle(&mut self) -> Result<()> {
        while let Some(t) = self.tick()? {
            if t.cycle_done {
                break;
            }
        }
        Ok(())
    }

    /// Runs to completion.
    pub fn run(&mut self) -> Result<()> {
        while self.tick()?.is_some() {}
        Ok(())
    }

    /// Serialises the complete engine state.
    pub fn checkpoint(&self) -> Result<Vec<u8>> {
        let scenario_toml = toml::to_string(&self.scenario).map_err(|e| Error::CheckpointCorrupt(format!("scenario: {e}")))?;
        let snap = SnapshotRef {
            scenario_toml,
            root: &self.root,
            thermal: &self.thermal,
            progress: &self.progress,
            log: &self.log,
            temperatures: &self.temperatures,
            traces: &self.traces,
            capacities: &self.capacities,
        };
        let payload = bincode::serialize(&snap).map_err(|e| Error::CheckpointCorrupt(e.to_string()))?;
        Ok(checkpoint::wrap(&payload))
    }

    /// Rebuilds an engine from [`Engine::checkpoint`] output.
    pub fn restore(bytes: &[u8]) -> Result<Self> {
        let payload = checkpoint::unwrap(bytes)?;
        let snap: Snapshot = bincode::deserialize(payload).map_err(|e| Error::CheckpointCorrupt(e.to_string()))?;
        let scenario: Scenario = toml::from_str(&snap.scenario_toml).map_err(|e| Error::CheckpointCorrupt(format!("scenario: {e}")))?;
        let ocv = load_ocv(&scenario)?;
        let mut root = snap.root;
        root.for_each_cell_unit_mut(&mut |c| c.cell.relink(ocv.clone()));
        let mut thermal = snap.thermal;
        if let Some(t) = thermal.as_mut() {
            t.relink()?;
        }
        let mut e = Self::assemble(scenario, root, thermal, snap.progress, ocv)?;
        e.log = snap.log;
        e.temperatures = snap.temperatures;
        e.traces = snap.traces;
        e.capacities = snap.capacities;
        Ok(e)
    }
}

#[derive(Serialize)]
struct SnapshotRef<'a> {
    scenario_toml: String,
    root: &'a Unit,
    thermal: &'a Option<ThermalNetwork>,
    progress: &'a Progress,
    log: &'a MetricsLog,
    temperatures: &'a Vec<TemperatureRow>,
    traces: &'a Vec<TraceRow>,
    capacities: &'a Vec<CapacitySample>,
}

fn initial_phase(step: &ProtocolStep) -> Phase {
    match step {
        ProtocolStep::Rest { .. } => Phase::Rest,
        _ => Phase::ConstantCurrent,
    }
}

fn duration(step: &ProtocolStep) -> Option<f64> {
    match step {
        ProtocolStep::Charge { duration, .. } | ProtocolStep::Discharge { duration, .. } => *duration,
        ProtocolStep::Rest { duration } => Some(*duration),
    }
}

fn root_contact_drops(g: &crate::pack_topology::Group) -> Vec<f64> {
    use crate::pack_topology::GroupKind;
    match g.kind {
        GroupKind::Series => g.contact_r.iter().map(|r| r * g.current).collect(),
        GroupKind::Parallel => {
            let mut behind = 0.0;
            let mut out = vec![0.0; g.split.len()];
            for k in (0..g.split.len()).rev() {
                behind += g.split[k];
                out[k] = g.contact_r[k] * behind;
            }
            out
        }
    }
}

/// Builds and runs a scenario to completion.
pub fn run(scenario: Scenario) -> Result<Engine> {
    let mut e = Engine::new(scenario)?;
    e.run()?;
    Ok(e)
}
