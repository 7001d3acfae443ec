//! Cell-resolved digital twin of grid-scale lithium-ion battery systems.
//!
//! Every cell carries its own single-particle electrochemical model with SEI
//! growth and stress-driven loss of active material. Cells are composed into
//! series/parallel trees with contact resistances, coupled to a lumped thermal
//! network with controllable fans and an air-conditioning unit, and driven by
//! cycling protocols that report efficiency, usable energy and the evolving
//! capacity distribution.
//!
//! The crate is organised bottom-up:
//!
//! * [`cell_model`] – radial diffusion, kinetics, voltage and heat of one cell
//! * [`degradation`] – SEI growth, pore clogging, particle stresses, cracking
//! * [`pack_topology`] – series/parallel trees and the current-split controller
//! * [`thermal_network`] – lumped thermal equivalent circuit
//! * [`ancillary`] – fans, AC unit and power converter losses
//! * [`thermal_control`] – the five cooling control strategies
//! * [`variability`] – seeded cell-to-cell parameter sampling
//! * [`sim_engine`] – scenario execution, energy ledger, checkpoints
//! * [`cli_io`] – configuration files, CSV output and bundled presets

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ancillary;
pub mod cell_model;
pub mod cli_io;
pub mod degradation;
pub mod error;
pub mod pack_topology;
pub mod sim_engine;
pub mod thermal_control;
pub mod thermal_network;
pub mod variability;

pub use error::{Electrode, Error, Result};

/// Faraday constant (C/mol).
pub const FARADAY: f64 = 96_485.332_12;
/// Universal gas constant (J/(mol K)).
pub const GAS_CONSTANT: f64 = 8.314_462_618;
/// Electrons transferred per intercalation reaction.
pub const ELECTRONS: f64 = 1.0;

/// Converts degrees Celsius to kelvin.
pub fn celsius(t: f64) -> f64 {
    t + 273.15
}
