//! SEI growth, pore clogging, particle stresses and crack-driven loss of
//! active material.
//!
//! Sign conventions follow the rest of the crate: positive cell current
//! discharges, SEI current density is positive when lithium is consumed, and
//! active-material fractions only ever decrease.

use serde::{Deserialize, Serialize};

use crate::cell_model::diffusion::RadialGrid;
use crate::cell_model::kinetics::arrhenius;
use crate::cell_model::CellParams;
use crate::{Electrode, Error, Result, ELECTRONS, FARADAY, GAS_CONSTANT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeiParams {
    /// Side-reaction rate constant at the reference temperature (mol/(m^2 s)).
    pub rate_constant_ref: f64,
    pub rate_activation: f64,
    /// Solvent transport coefficient through the layer (mol/(m s)).
    pub diffusivity_ref: f64,
    pub diffusivity_activation: f64,
    pub transfer_coefficient: f64,
    /// Equilibrium potential of the side reaction (V).
    pub reaction_potential: f64,
    /// Partial molar volume of SEI product (m^3/mol).
    pub sei_molar_volume: f64,
    /// Partial molar volume of intercalated lithium (m^3/mol).
    pub lithium_molar_volume: f64,
    /// Pore-clogging constant.
    pub clogging_constant: f64,
    /// Specific resistance of the layer per unit thickness (Ohm m^2 / m).
    pub resistivity: f64,
    /// Layer thickness of a fresh cell (m).
    pub initial_thickness: f64,
}

impl Default for SeiParams {
    fn default() -> Self {
        Self {
            rate_constant_ref: 3.0e-11,
            rate_activation: 4.0e4,
            diffusivity_ref: 2.0e-17,
            diffusivity_activation: 3.0e4,
            transfer_coefficient: 0.5,
            reaction_potential: 0.4,
            sei_molar_volume: 9.585e-5,
            lithium_molar_volume: 1.3e-5,
            clogging_constant: 2.0e-5,
            resistivity: 1.0e4,
            initial_thickness: 1.0e-8,
        }
    }
}

impl SeiParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sei.rate_constant_ref", self.rate_constant_ref),
            ("sei.diffusivity_ref", self.diffusivity_ref),
            ("sei.sei_molar_volume", self.sei_molar_volume),
            ("sei.lithium_molar_volume", self.lithium_molar_volume),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("sei.rate_activation", self.rate_activation),
            ("sei.diffusivity_activation", self.diffusivity_activation),
            ("sei.clogging_constant", self.clogging_constant),
            ("sei.resistivity", self.resistivity),
            ("sei.initial_thickness", self.initial_thickness),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be non-negative, got {v}")));
            }
        }
        if !(self.transfer_coefficient > 0.0 && self.transfer_coefficient < 1.0) {
            return Err(invalid("sei.transfer_coefficient", "must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectrodeMechanics {
    /// Partial molar volume of lithium in the host (m^3/mol).
    pub partial_molar_volume: f64,
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub yield_strength: f64,
}

impl ElectrodeMechanics {
    /// Prefactor `Omega Y / (3 (1 - nu))` shared by the stress formulas.
    pub fn stress_scale(&self) -> f64 {
        self.partial_molar_volume * self.youngs_modulus / (3.0 * (1.0 - self.poisson_ratio))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StressParams {
    pub anode: ElectrodeMechanics,
    pub cathode: ElectrodeMechanics,
    /// Loss-of-active-material rate constant (1/s).
    pub lam_rate: f64,
    /// Crack-growth exponent; the normalised amplitude is raised to `1/m`.
    pub lam_exponent: f64,
}

impl Default for StressParams {
    fn default() -> Self {
        Self {
            anode: ElectrodeMechanics {
                partial_molar_volume: 3.1e-6,
                youngs_modulus: 15.0e9,
                poisson_ratio: 0.3,
                yield_strength: 60.0e6,
            },
            cathode: ElectrodeMechanics {
                partial_molar_volume: 2.0e-6,
                youngs_modulus: 199.0e9,
                poisson_ratio: 0.3,
                yield_strength: 1.5e9,
            },
            lam_rate: 6.5e-8,
            lam_exponent: 1.0,
        }
    }
}

impl StressParams {
    pub fn mechanics(&self, e: Electrode) -> &ElectrodeMechanics {
        match e {
            Electrode::Anode => &self.anode,
            Electrode::Cathode => &self.cathode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (label, m) in [("anode", &self.anode), ("cathode", &self.cathode)] {
            if !(m.poisson_ratio > 0.0 && m.poisson_ratio < 0.5) {
                return Err(invalid(&format!("stress.{label}.poisson_ratio"), "must lie in (0, 0.5)".into()));
            }
            if !(m.yield_strength > 0.0) {
                return Err(invalid(&format!("stress.{label}.yield_strength"), "must be positive".into()));
            }
            if !(m.youngs_modulus > 0.0 && m.partial_molar_volume > 0.0) {
                return Err(invalid(&format!("stress.{label}"), "moduli and volumes must be positive".into()));
            }
        }
        if !(self.lam_exponent > 0.0) {
            return Err(invalid("stress.lam_exponent", "must be positive".into()));
        }
        if !(self.lam_rate >= 0.0) {
            return Err(invalid("stress.lam_rate", "must be non-negative".into()));
        }
        Ok(())
    }
}

fn invalid(name: &str, reason: String) -> Error {
    Error::InvalidParameter {
        name: name.to_string(),
        reason,
    }
}

/// Running extrema of the surface hydrostatic stress within one stress
/// cycle, plus the current-sign bookkeeping that delimits cycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressWindow {
    pub max: f64,
    pub min: f64,
    pub primed: bool,
}

impl Default for StressWindow {
    fn default() -> Self {
        Self {
            max: 0.0,
            min: 0.0,
            primed: false,
        }
    }
}

impl StressWindow {
    pub fn reset(&mut self) {
        self.primed = false;
    }

    pub fn observe(&mut self, sigma: f64) {
        if self.primed {
            self.max = self.max.max(sigma);
            self.min = self.min.min(sigma);
        } else {
            self.max = sigma;
            self.min = sigma;
            self.primed = true;
        }
    }

    pub fn amplitude(&self) -> f64 {
        if self.primed {
            self.max - self.min
        } else {
            0.0
        }
    }
}

/// Sign class of the applied current: -1 charge, 0 rest, +1 discharge.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurrentSignTracker {
    pub committed: i8,
    pub pending: i8,
    pub pending_steps: u32,
}

impl CurrentSignTracker {
    /// Feeds one step's current sign; returns true when a new stress cycle
    /// starts, i.e. the sign class changed and held for more than one step.
    pub fn update(&mut self, sign: i8) -> bool {
        if sign == self.committed {
            self.pending_steps = 0;
            self.pending = sign;
            return false;
        }
        if sign == self.pending {
            self.pending_steps += 1;
        } else {
            self.pending = sign;
            self.pending_steps = 1;
        }
        if self.pending_steps > 1 {
            self.committed = sign;
            self.pending_steps = 0;
            true
        } else {
            false
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationState {
    /// SEI thickness (m); never decreases.
    pub sei_thickness: f64,
    pub eps_n: f64,
    pub eps_p: f64,
    pub stress_n: StressWindow,
    pub stress_p: StressWindow,
    pub sign: CurrentSignTracker,
    /// Cumulative lithium consumed by the side reaction (mol).
    pub lost_li_sei: f64,
    /// Cumulative lithium isolated together with lost active material (mol).
    pub lost_li_lam_n: f64,
    pub lost_li_lam_p: f64,
    /// SEI current density applied during the last step (A/m^2).
    pub sei_current: f64,
    /// Anode overpotential of the last step (V), feeding the next SEI rate.
    pub last_eta_n: f64,
    pub end_of_life: bool,
}

impl DegradationState {
    pub fn fresh(params: &CellParams) -> Self {
        Self {
            sei_thickness: params.sei.initial_thickness,
            eps_n: params.anode.active_fraction,
            eps_p: params.cathode.active_fraction,
            stress_n: StressWindow::default(),
            stress_p: StressWindow::default(),
            sign: CurrentSignTracker::default(),
            lost_li_sei: 0.0,
            lost_li_lam_n: 0.0,
            lost_li_lam_p: 0.0,
            sei_current: 0.0,
            last_eta_n: 0.0,
            end_of_life: false,
        }
    }
}

/// SEI side-reaction current density with mixed kinetic and transport
/// limitation.
pub fn sei_current(eta_n: f64, u_n: f64, sei_thickness: f64, t: f64, p: &SeiParams, t_ref: f64) -> Result<f64> {
    if !(sei_thickness >= 0.0) {
        return Err(Error::Domain { what: "SEI thickness", value: sei_thickness });
    }
    let f = ELECTRONS * FARADAY / (GAS_CONSTANT * t);
    let k = arrhenius(p.rate_constant_ref, p.rate_activation, t, t_ref)?;
    let d = arrhenius(p.diffusivity_ref, p.diffusivity_activation, t, t_ref)?;
    let a = p.transfer_coefficient;
    let numerator = (-a * f * eta_n).exp();
    let kinetic = 1.0 / (ELECTRONS * FARADAY * k * (-a * f * (u_n - p.reaction_potential)).exp());
    let transport = sei_thickness / (ELECTRONS * FARADAY * d);
    Ok(numerator / (kinetic + transport))
}

/// Result of applying the side reaction over one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeiUpdate {
    /// Additional outward lithium flux at the anode surface (mol/(m^2 s)).
    pub sink_flux: f64,
    /// Lithium consumed during the step (mol).
    pub consumed: f64,
}

/// Grows the layer and books the consumed lithium for one step.
pub fn apply_sei(state: &mut DegradationState, i_sei: f64, anode_area_total: f64, p: &SeiParams, dt: f64) -> SeiUpdate {
    let molar = i_sei / (ELECTRONS * FARADAY);
    state.sei_thickness += molar * p.sei_molar_volume * dt;
    let consumed = molar * anode_area_total * dt;
    state.lost_li_sei += consumed;
    state.sei_current = i_sei;
    SeiUpdate {
        sink_flux: molar,
        consumed,
    }
}

/// Outcome of an active-material update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionUpdate {
    pub fraction: f64,
    pub hit_floor: bool,
}

/// Pore clogging of the anode by SEI product and intercalation traffic.
/// The intercalation contribution uses the current-density magnitude so
/// the fraction never grows back.
pub fn pore_clogging(eps_n: f64, i_sei: f64, i_n: f64, p: &SeiParams, dt: f64, floor: f64) -> FractionUpdate {
    let rate = p.clogging_constant * (p.sei_molar_volume * i_sei.max(0.0) + p.lithium_molar_volume * i_n.abs());
    floored(eps_n - rate * dt, floor)
}

fn floored(v: f64, floor: f64) -> FractionUpdate {
    if v <= floor {
        FractionUpdate {
            fraction: floor,
            hit_floor: true,
        }
    } else {
        FractionUpdate {
            fraction: v,
            hit_floor: false,
        }
    }
}

/// Radial, tangential and hydrostatic stress profiles of one particle.
#[derive(Debug, Clone, PartialEq)]
pub struct StressProfile {
    pub radial: Vec<f64>,
    pub tangential: Vec<f64>,
    pub hydrostatic: Vec<f64>,
}

/// Diffusion-induced stresses for a nodal concentration profile. The
/// integrals use quadratic interpolation on the finite-volume nodes, exact
/// for profiles quadratic in `r`.
pub fn particle_stresses(profile: &[f64], grid: &RadialGrid, mech: &ElectrodeMechanics) -> Result<StressProfile> {
    if profile.len() != grid.nodes() {
        return Err(Error::Domain {
            what: "profile length",
            value: profile.len() as f64,
        });
    }
    let scale = mech.stress_scale();
    let w = grid.partial_moment_weights();
    let big_r3 = grid.radius.powi(3);
    let dot = |row: &[f64]| row.iter().zip(profile).map(|(a, b)| a * b).sum::<f64>();
    let outer = dot(&w[grid.intervals]) / big_r3;
    let n = grid.nodes();
    let mut radial = Vec::with_capacity(n);
    let mut tangential = Vec::with_capacity(n);
    let mut hydrostatic = Vec::with_capacity(n);
    for k in 0..n {
        let inner = if k == 0 {
            profile[0] / 3.0
        } else {
            dot(&w[k]) / grid.node_radius(k).powi(3)
        };
        let sr = 2.0 * scale * (outer - inner);
        let st = scale * (2.0 * outer + inner - profile[k]);
        radial.push(sr);
        tangential.push(st);
        hydrostatic.push((sr + 2.0 * st) / 3.0);
    }
    Ok(StressProfile {
        radial,
        tangential,
        hydrostatic,
    })
}

/// Hydrostatic stress at the particle surface. The radial component vanishes
/// there, leaving `2/3` of the tangential one.
#[inline]
pub fn surface_hydrostatic_stress(profile: &[f64], grid: &RadialGrid, mech: &ElectrodeMechanics) -> f64 {
    let mean_third: f64 = grid.moment_weights.iter().zip(profile).map(|(w, c)| w * c).sum();
    let surface = profile[grid.intervals];
    let tangential = mech.stress_scale() * (3.0 * mean_third - surface);
    2.0 * tangential / 3.0
}

/// Loss of active material driven by the stress amplitude of the current
/// stress cycle.
pub fn crack_lam(eps: f64, window: &StressWindow, mech: &ElectrodeMechanics, p: &StressParams, dt: f64, floor: f64) -> FractionUpdate {
    let amp = window.amplitude().max(0.0);
    if amp == 0.0 || p.lam_rate == 0.0 {
        return FractionUpdate {
            fraction: eps,
            hit_floor: false,
        };
    }
    let rate = p.lam_rate * (amp / mech.yield_strength).powf(1.0 / p.lam_exponent);
    floored(eps - rate * dt, floor)
}

/// Total DC resistance of the cell from both electrodes and the SEI layer.
pub fn total_dc_resistance(state: &DegradationState, params: &CellParams) -> Result<f64> {
    let s_n = params.anode.active_surface(state.eps_n);
    let s_p = params.cathode.active_surface(state.eps_p);
    if !(s_n > 0.0) {
        return Err(Error::NoActiveMaterial {
            electrode: Electrode::Anode,
            fraction: state.eps_n,
        });
    }
    if !(s_p > 0.0) {
        return Err(Error::NoActiveMaterial {
            electrode: Electrode::Cathode,
            fraction: state.eps_p,
        });
    }
    Ok(params.anode.specific_resistance / s_n
        + params.cathode.specific_resistance / s_p
        + params.sei.resistivity * state.sei_thickness / s_n)
}
