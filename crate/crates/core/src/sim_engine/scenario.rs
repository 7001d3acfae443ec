use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::ancillary::AncillaryParams;
use crate::cell_model::CellParams;
use crate::pack_topology::{PiGains, TopologySpec};
use crate::thermal_control::{ControlVariant, Thresholds};
use crate::thermal_network::{Environment, ThermalParams};
use crate::variability::VariationSpec;
use crate::{celsius, Error, Result};

/// One step of a cycling protocol. Currents are given as C-rates of the
/// pack's nominal capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProtocolStep {
    /// Constant-current charge until the first cell reaches its upper
    /// voltage limit, optionally followed by a constant-voltage hold.
    Charge {
        c_rate: f64,
        /// Fixed step length (s). The current stops at the voltage limit and
        /// the pack rests for the remainder.
        #[serde(default)]
        duration: Option<f64>,
        #[serde(default)]
        cv: Option<CvHold>,
    },
    Discharge {
        c_rate: f64,
        #[serde(default)]
        duration: Option<f64>,
        #[serde(default)]
        cv: Option<CvHold>,
    },
    Rest {
        duration: f64,
    },
}

/// Constant-voltage hold ending when the current magnitude falls below
/// `cutoff_c` (C-rate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvHold {
    pub cutoff_c: f64,
    /// Cell voltage held (V); defaults to the cell's limit.
    #[serde(default)]
    pub voltage: Option<f64>,
}

impl ProtocolStep {
    pub fn cc_charge(c_rate: f64) -> Self {
        ProtocolStep::Charge { c_rate, duration: None, cv: None }
    }

    pub fn cc_discharge(c_rate: f64) -> Self {
        ProtocolStep::Discharge { c_rate, duration: None, cv: None }
    }

    pub fn cccv_charge(c_rate: f64, cutoff_c: f64) -> Self {
        ProtocolStep::Charge {
            c_rate,
            duration: None,
            cv: Some(CvHold { cutoff_c, voltage: None }),
        }
    }

    pub fn timed(charge: bool, c_rate: f64, duration: f64) -> Self {
        if charge {
            ProtocolStep::Charge { c_rate, duration: Some(duration), cv: None }
        } else {
            ProtocolStep::Discharge { c_rate, duration: Some(duration), cv: None }
        }
    }

    pub fn rest(duration: f64) -> Self {
        ProtocolStep::Rest { duration }
    }

    pub fn is_discharge(&self) -> bool {
        matches!(self, ProtocolStep::Discharge { .. })
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(m));
        match self {
            ProtocolStep::Charge { c_rate, duration, cv } | ProtocolStep::Discharge { c_rate, duration, cv } => {
                if !(*c_rate > 0.0 && c_rate.is_finite()) {
                    return bad(format!("c_rate must be positive, got {c_rate}"));
                }
                if let Some(d) = duration {
                    if !(*d > 0.0) {
                        return bad(format!("duration must be positive, got {d}"));
                    }
                }
                if let Some(h) = cv {
                    if !(h.cutoff_c > 0.0 && h.cutoff_c < *c_rate) {
                        return bad(format!("CV cutoff {} must lie between 0 and the CC rate {c_rate}", h.cutoff_c));
                    }
                }
                Ok(())
            }
            ProtocolStep::Rest { duration } => {
                if !(*duration > 0.0) {
                    return bad(format!("rest duration must be positive, got {duration}"));
                }
                Ok(())
            }
        }
    }
}

/// The bundled daily grid profile: two cycles a day from midnight.
pub fn daily_profile() -> Vec<ProtocolStep> {
    let h = 3600.0;
    vec![
        ProtocolStep::rest(4.0 * h),
        ProtocolStep::timed(true, 1.0, h),
        ProtocolStep::rest(h),
        ProtocolStep::timed(false, 1.0, h),
        ProtocolStep::rest(4.0 * h),
        ProtocolStep::timed(true, 0.5, 2.0 * h),
        ProtocolStep::rest(4.0 * h),
        ProtocolStep::timed(false, 0.5, 2.0 * h),
        ProtocolStep::rest(5.0 * h),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThermalMode {
    /// Cells held at the initial temperature.
    Isothermal,
    /// Each cell cooled by still ambient air, no coupling.
    Individual,
    /// Full network with fans and the AC unit.
    Coupled,
}

/// Per-cell parameter change applied after sampling, by depth-first index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellOverride {
    pub index: usize,
    #[serde(default = "one")]
    pub capacity: f64,
    #[serde(default = "one")]
    pub resistance: f64,
}

fn one() -> f64 {
    1.0
}

/// Files replacing the shipped open-circuit tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OcvFiles {
    pub anode: PathBuf,
    pub cathode: PathBuf,
    pub entropic: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopConditions {
    /// Stop after this many full equivalent cycles.
    pub max_fec: Option<f64>,
    /// Stop once the mean measured capacity falls below this fraction.
    pub capacity_floor: Option<f64>,
    /// Stop once simulated time exceeds this (s).
    pub max_time: Option<f64>,
    /// Stop once the run has taken this long in real time (s).
    pub wall_clock: Option<f64>,
    /// Stop on the first cell reaching its end-of-life floor.
    pub end_of_life: bool,
}

impl Default for StopConditions {
    fn default() -> Self {
        Self {
            max_fec: None,
            capacity_floor: None,
            max_time: None,
            wall_clock: None,
            end_of_life: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogOptions {
    /// Interval of temperature rows (s); none disables them.
    pub temperature_every: Option<f64>,
    /// Record per-cell current and voltage every this many steps.
    pub trace_every: Option<usize>,
    /// Measure capacities every this many cycles (and at start and end).
    pub capacity_every: Option<usize>,
}

impl Default for LogOptions {
    fn default() -> Self {
        Self {
            temperature_every: None,
            trace_every: None,
            capacity_every: Some(50),
        }
    }
}

/// Everything needed to run one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub topology: TopologySpec,
    pub cell: CellParams,
    pub ocv_files: Option<OcvFiles>,
    pub variation: VariationSpec,
    pub overrides: Vec<CellOverride>,
    pub protocol: Vec<ProtocolStep>,
    /// Number of passes through the protocol.
    pub cycles: usize,
    /// Electrical timestep (s).
    pub dt: f64,
    pub initial_soc: f64,
    pub initial_temperature: f64,
    pub thermal: ThermalMode,
    pub thermal_params: ThermalParams,
    pub environment: Environment,
    pub control: ControlVariant,
    pub thresholds: Thresholds,
    pub ancillary: AncillaryParams,
    /// Include converter losses in the energy flow.
    pub converter: bool,
    pub degradation: bool,
    pub pi: PiGains,
    /// Equalise cells this often (s), at the next cycle boundary.
    pub balance_every: Option<f64>,
    pub stop: StopConditions,
    pub log: LogOptions,
    /// Step sibling subtrees on the thread pool.
    pub parallel: bool,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            topology: TopologySpec::Cell,
            cell: CellParams::default(),
            ocv_files: None,
            variation: VariationSpec::none(),
            overrides: Vec::new(),
            protocol: vec![ProtocolStep::cccv_charge(1.0, 0.05), ProtocolStep::cc_discharge(1.0)],
            cycles: 1,
            dt: 10.0,
            initial_soc: 0.5,
            initial_temperature: celsius(25.0),
            thermal: ThermalMode::Isothermal,
            thermal_params: ThermalParams::default(),
            environment: Environment::default(),
            control: ControlVariant::AlwaysOn,
            thresholds: Thresholds::default(),
            ancillary: AncillaryParams::default(),
            converter: true,
            degradation: true,
            pi: PiGains::default(),
            balance_every: None,
            stop: StopConditions::default(),
            log: LogOptions::default(),
            parallel: true,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.topology.validate()?;
        self.cell.validate()?;
        self.variation.validate()?;
        self.thermal_params.validate()?;
        self.environment.validate()?;
        self.thresholds.validate()?;
        self.ancillary.validate()?;
        self.pi.validate()?;
        if self.protocol.is_empty() {
            return Err(Error::Scenario("protocol has no steps".into()));
        }
        for s in &self.protocol {
            s.validate()?;
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Scenario(format!("dt must be positive, got {}", self.dt)));
        }
        if !(0.0..=1.0).contains(&self.initial_soc) {
            return Err(Error::Scenario(format!("initial_soc must lie in [0, 1], got {}", self.initial_soc)));
        }
        if !(self.initial_temperature > 0.0) {
            return Err(Error::Scenario(format!(
                "initial_temperature must be positive, got {}",
                self.initial_temperature
            )));
        }
        let n = self.topology.model_cells();
        for o in &self.overrides {
            if o.index >= n {
                return Err(Error::Scenario(format!("override index {} beyond {n} cells", o.index)));
            }
            if !(o.capacity > 0.0 && o.resistance > 0.0) {
                return Err(Error::Scenario(format!("override factors must be positive (cell {})", o.index)));
            }
        }
        if let Some(b) = self.balance_every {
            if !(b > 0.0) {
                return Err(Error::Scenario(format!("balance_every must be positive, got {b}")));
            }
        }
        Ok(())
    }

    /// Nominal pack capacity (Ah).
    pub fn pack_capacity(&self) -> f64 {
        self.topology.parallel_cells() as f64 * self.cell.nominal_capacity
    }

    /// Nominal energy capacity of all represented cells (J).
    pub fn energy_capacity(&self) -> f64 {
        self.topology.represented_cells() as f64 * self.cell.nominal_capacity * 3600.0 * self.cell.nominal_voltage
    }
}
