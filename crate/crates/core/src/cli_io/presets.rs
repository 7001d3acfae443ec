//! Bundled study scenarios.
//!
//! Every preset returns named variants that differ in one aspect only. The
//! default scale is one module (20 series blocks of 7 parallel cells); the
//! thermal and control studies can also run on a rack or a full container.

use serde::{Deserialize, Serialize};

use crate::celsius;
use crate::pack_topology::{TopologySpec, CONTACT_R_CELL, CONTACT_R_MODULE};
use crate::sim_engine::scenario::{CellOverride, LogOptions, StopConditions};
use crate::sim_engine::{daily_profile, ProtocolStep, Scenario, ThermalMode};
use crate::thermal_control::ControlVariant;
use crate::thermal_network::Environment;
use crate::variability::VariationSpec;
use crate::{Error, Result};

pub const PRESETS: [&str; 7] = ["fig5", "fig8", "contact_r", "cell2cell", "thermal", "control_week", "control_life"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Module,
    Rack,
    Container,
}

impl Scale {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "module" => Ok(Scale::Module),
            "rack" => Ok(Scale::Rack),
            "container" => Ok(Scale::Container),
            other => Err(Error::Scenario(format!("unknown scale `{other}` (module, rack, container)"))),
        }
    }

    /// Pack tree with the nominal contact resistances.
    pub fn topology(self) -> TopologySpec {
        let module = TopologySpec::module(20, 7, CONTACT_R_CELL, CONTACT_R_CELL);
        match self {
            // the module sits behind one module-level contact, as it would in a rack
            Scale::Module => TopologySpec::Series {
                count: 1,
                contact_r: CONTACT_R_MODULE,
                closed: false,
                child: Box::new(module),
            },
            Scale::Rack => TopologySpec::rack(15, module, CONTACT_R_MODULE),
            Scale::Container => TopologySpec::default_container(),
        }
    }
}

/// A named scenario within a preset.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub name: String,
    pub scenario: Scenario,
}

fn variant(name: &str, mut scenario: Scenario) -> Variant {
    scenario.name = name.to_string();
    Variant {
        name: name.to_string(),
        scenario,
    }
}

/// Plain 1C cycling between the voltage limits.
fn cc_cycle() -> Vec<ProtocolStep> {
    vec![ProtocolStep::cc_charge(1.0), ProtocolStep::cc_discharge(1.0)]
}

fn fig5_block(contact_r: f64) -> Scenario {
    Scenario {
        topology: TopologySpec::block(5, contact_r),
        // halving the electrode area also doubles the cell resistance
        overrides: vec![CellOverride {
            index: 4,
            capacity: 0.5,
            resistance: 1.0,
        }],
        protocol: cc_cycle(),
        initial_soc: 0.5,
        dt: 10.0,
        degradation: false,
        converter: false,
        thermal: ThermalMode::Isothermal,
        log: LogOptions {
            temperature_every: None,
            trace_every: Some(1),
            capacity_every: None,
        },
        ..Scenario::default()
    }
}

fn lifetime(cycles: usize) -> Scenario {
    Scenario {
        protocol: cc_cycle(),
        cycles,
        dt: 60.0,
        initial_soc: 0.0,
        thermal: ThermalMode::Isothermal,
        converter: true,
        degradation: true,
        log: LogOptions {
            temperature_every: None,
            trace_every: None,
            capacity_every: Some(50),
        },
        ..Scenario::default()
    }
}

fn control(scale: Scale, variant: ControlVariant, days: usize) -> Scenario {
    Scenario {
        topology: scale.topology(),
        protocol: daily_profile(),
        cycles: days,
        dt: 30.0,
        initial_soc: 0.02,
        initial_temperature: celsius(15.0),
        thermal: ThermalMode::Coupled,
        environment: Environment {
            temperature: celsius(15.0),
            ..Environment::default()
        },
        control: variant,
        variation: VariationSpec::default(),
        balance_every: Some(7.0 * 86_400.0),
        log: LogOptions {
            temperature_every: Some(600.0),
            trace_every: None,
            capacity_every: if days > 30 { Some(30) } else { None },
        },
        ..Scenario::default()
    }
}

/// Variants of the named preset at the given scale.
pub fn preset(name: &str, scale: Scale) -> Result<Vec<Variant>> {
    Ok(match name {
        "fig5" => vec![
            variant("fig5_no_contact", Scenario { cycles: 2, ..fig5_block(0.0) }),
            variant("fig5_1mohm", Scenario { cycles: 2, ..fig5_block(1e-3) }),
        ],
        "fig8" => {
            let mut s = fig5_block(0.0);
            s.cycles = 5;
            s.thermal = ThermalMode::Coupled;
            s.control = ControlVariant::AlwaysOn;
            s.initial_temperature = celsius(25.0);
            s.environment = Environment {
                temperature: celsius(25.0),
                ..Environment::default()
            };
            s.log = LogOptions {
                temperature_every: Some(60.0),
                trace_every: None,
                capacity_every: None,
            };
            vec![variant("fig8", s)]
        }
        "contact_r" => {
            let nominal = Scale::Module.topology();
            vec![
                variant(
                    "scaled_cell",
                    Scenario {
                        topology: TopologySpec::Scaled { series: 20, parallel: 7 },
                        ..lifetime(500)
                    },
                ),
                variant(
                    "nominal_contacts",
                    Scenario {
                        topology: nominal.clone(),
                        ..lifetime(500)
                    },
                ),
                variant(
                    "tenfold_contacts",
                    Scenario {
                        topology: nominal.scale_contacts(10.0),
                        ..lifetime(500)
                    },
                ),
            ]
        }
        "cell2cell" => {
            let base = Scenario {
                topology: Scale::Module.topology(),
                ..lifetime(1000)
            };
            let spread = VariationSpec::default();
            vec![
                variant(
                    "identical_cells",
                    Scenario {
                        variation: VariationSpec::none(),
                        ..base.clone()
                    },
                ),
                variant(
                    "capacity_resistance_spread",
                    Scenario {
                        variation: VariationSpec {
                            sd_degradation: 0.0,
                            ..spread
                        },
                        ..base.clone()
                    },
                ),
                variant(
                    "degradation_spread",
                    Scenario {
                        variation: VariationSpec {
                            sd_capacity: 0.0,
                            sd_resistance: 0.0,
                            ..spread
                        },
                        ..base.clone()
                    },
                ),
                variant("all_spreads", Scenario { variation: spread, ..base }),
            ]
        }
        "thermal" => {
            let base = Scenario {
                topology: scale.topology(),
                variation: VariationSpec::default(),
                initial_temperature: celsius(25.0),
                environment: Environment {
                    temperature: celsius(25.0),
                    ..Environment::default()
                },
                control: ControlVariant::AlwaysOn,
                ..lifetime(100)
            };
            [ThermalMode::Isothermal, ThermalMode::Individual, ThermalMode::Coupled]
                .into_iter()
                .map(|m| {
                    let name = match m {
                        ThermalMode::Isothermal => "isothermal",
                        ThermalMode::Individual => "individual",
                        ThermalMode::Coupled => "coupled",
                    };
                    variant(name, Scenario { thermal: m, ..base.clone() })
                })
                .collect()
        }
        "control_week" => ControlVariant::ALL
            .iter()
            .map(|v| variant(&format!("variant{}_{}", v.number(), v.name()), control(scale, *v, 7)))
            .collect(),
        "control_life" => ControlVariant::ALL
            .iter()
            .map(|v| {
                let mut s = control(scale, *v, 365);
                s.stop = StopConditions {
                    capacity_floor: Some(0.8),
                    ..StopConditions::default()
                };
                s.log.temperature_every = None;
                variant(&format!("variant{}_{}", v.number(), v.name()), s)
            })
            .collect(),
        other => return Err(Error::UnknownPreset(other.to_string())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_builds_valid_scenarios() {
        for name in PRESETS {
            let vs = preset(name, Scale::Module).unwrap();
            assert!(!vs.is_empty());
            for v in vs {
                v.scenario.validate().unwrap();
            }
        }
        assert!(matches!(preset("nope", Scale::Module), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn study_shapes() {
        let c = preset("contact_r", Scale::Module).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c[0].scenario.topology.represented_cells(), 140);
        assert_eq!(c[1].scenario.topology.model_cells(), 140);
        let w = preset("control_week", Scale::Module).unwrap();
        assert_eq!(w.len(), 5);
        assert!(w.iter().all(|v| v.scenario.cycles == 7));
        let f = preset("fig5", Scale::Module).unwrap();
        assert_eq!(f[0].scenario.topology.model_cells(), 5);
        assert_eq!(f[0].scenario.overrides[0].capacity, 0.5);
    }
}
