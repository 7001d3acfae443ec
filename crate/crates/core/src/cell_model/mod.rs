//! Single-particle electrochemical model of one cell.
//!
//! A timestep is split in three phases so that pack-level solvers can probe
//! many candidate currents cheaply:
//!
//! 1. [`Cell::prepare`] evaluates temperature-dependent constants and the
//!    zero-flux part of the implicit diffusion step,
//! 2. [`Cell::voltage_at`] returns the terminal voltage for a trial current
//!    in constant time (the implicit step is linear in the surface flux),
//! 3. [`Cell::commit`] fixes the current, advances the profiles and applies
//!    degradation.

pub mod diffusion;
pub mod kinetics;
pub mod ocv;

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::degradation::{
    self, apply_sei, crack_lam, pore_clogging, sei_current, surface_hydrostatic_stress, DegradationState, SeiParams,
    StressParams,
};
use crate::{Electrode, Error, Result, ELECTRONS, FARADAY};
use diffusion::{check_bounds, DiffusionOperator, RadialGrid};
use kinetics::{arrhenius, overpotential};
use ocv::OcvTables;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectrodeParams {
    /// Solid diffusion constant at the reference temperature (m^2/s).
    pub diffusivity_ref: f64,
    pub diffusivity_activation: f64,
    /// Intercalation rate constant at the reference temperature.
    pub rate_constant_ref: f64,
    pub rate_activation: f64,
    pub particle_radius: f64,
    /// Initial active-material volume fraction.
    pub active_fraction: f64,
    /// Geometric electrode area (m^2).
    pub area: f64,
    pub thickness: f64,
    pub max_concentration: f64,
    /// Specific resistance (Ohm m^2).
    pub specific_resistance: f64,
    /// Stoichiometry at 0 % and 100 % state of charge.
    pub stoich_empty: f64,
    pub stoich_full: f64,
}

impl ElectrodeParams {
    /// Total electrochemically active surface `3 eps / R * A * tau` (m^2).
    pub fn active_surface(&self, eps: f64) -> f64 {
        3.0 * eps / self.particle_radius * self.area * self.thickness
    }

    /// Stoichiometry at a given state of charge.
    pub fn stoich_at(&self, soc: f64) -> f64 {
        self.stoich_empty + soc * (self.stoich_full - self.stoich_empty)
    }

    fn validate(&self, label: &str) -> Result<()> {
        let positive = [
            ("diffusivity_ref", self.diffusivity_ref),
            ("rate_constant_ref", self.rate_constant_ref),
            ("particle_radius", self.particle_radius),
            ("area", self.area),
            ("thickness", self.thickness),
            ("max_concentration", self.max_concentration),
            ("specific_resistance", self.specific_resistance),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: format!("{label}.{name}"),
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        for (name, v) in [
            ("diffusivity_activation", self.diffusivity_activation),
            ("rate_activation", self.rate_activation),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: format!("{label}.{name}"),
                    reason: format!("must be non-negative, got {v}"),
                });
            }
        }
        if !(self.active_fraction > 0.0 && self.active_fraction < 1.0) {
            return Err(Error::InvalidParameter {
                name: format!("{label}.active_fraction"),
                reason: "must lie in (0, 1)".into(),
            });
        }
        for (name, v) in [("stoich_empty", self.stoich_empty), ("stoich_full", self.stoich_full)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParameter {
                    name: format!("{label}.{name}"),
                    reason: "must lie in (0, 1)".into(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellThermalParams {
    pub density: f64,
    /// Cooled surface area, also used for every heat-exchange link (m^2).
    pub surface_area: f64,
    pub thickness: f64,
    /// Specific heat capacity (J/(kg K)).
    pub heat_capacity: f64,
}

impl CellThermalParams {
    /// Lumped heat capacity of the cell (J/K).
    pub fn lumped_capacity(&self) -> f64 {
        self.density * self.surface_area * self.thickness * self.heat_capacity
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellParams {
    pub anode: ElectrodeParams,
    pub cathode: ElectrodeParams,
    pub electrolyte_concentration: f64,
    pub transfer_coefficient: f64,
    pub thermal: CellThermalParams,
    pub reference_temperature: f64,
    pub v_min: f64,
    pub v_max: f64,
    /// Nominal capacity (Ah).
    pub nominal_capacity: f64,
    /// Nominal voltage used for energy normalisation (V).
    pub nominal_voltage: f64,
    pub radial_intervals: usize,
    /// Active fractions are floored at this share of their initial value.
    pub eps_floor_fraction: f64,
    pub sei: SeiParams,
    pub stress: StressParams,
}

impl Default for CellParams {
    fn default() -> Self {
        Self {
            anode: ElectrodeParams {
                diffusivity_ref: 3.3e-14,
                diffusivity_activation: 3.03e4,
                rate_constant_ref: 6.7e-12,
                rate_activation: 3.5e4,
                particle_radius: 5.86e-6,
                active_fraction: 0.75,
                area: 0.314,
                thickness: 85.2e-6,
                max_concentration: 33_133.0,
                specific_resistance: 1.0e-2,
                stoich_empty: 0.0279,
                stoich_full: 0.9014,
            },
            cathode: ElectrodeParams {
                diffusivity_ref: 4.0e-15,
                diffusivity_activation: 2.5e4,
                rate_constant_ref: 3.54e-11,
                rate_activation: 1.78e4,
                particle_radius: 5.22e-6,
                active_fraction: 0.665,
                area: 0.314,
                thickness: 75.6e-6,
                max_concentration: 63_104.0,
                specific_resistance: 8.0e-3,
                stoich_empty: 0.8787,
                stoich_full: 0.2958,
            },
            electrolyte_concentration: 1000.0,
            transfer_coefficient: 0.5,
            thermal: CellThermalParams {
                density: 2000.0,
                surface_area: 0.05,
                thickness: 3.7e-3,
                heat_capacity: 1000.0,
            },
            reference_temperature: 298.15,
            v_min: 2.7,
            v_max: 4.2,
            nominal_capacity: 16.0,
            nominal_voltage: 3.7,
            radial_intervals: 10,
            eps_floor_fraction: 0.01,
            sei: SeiParams::default(),
            stress: StressParams::default(),
        }
    }
}

impl CellParams {
    pub fn validate(&self) -> Result<()> {
        self.anode.validate("anode")?;
        self.cathode.validate("cathode")?;
        let positive = [
            ("electrolyte_concentration", self.electrolyte_concentration),
            ("thermal.density", self.thermal.density),
            ("thermal.surface_area", self.thermal.surface_area),
            ("thermal.thickness", self.thermal.thickness),
            ("thermal.heat_capacity", self.thermal.heat_capacity),
            ("reference_temperature", self.reference_temperature),
            ("nominal_capacity", self.nominal_capacity),
            ("nominal_voltage", self.nominal_voltage),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: name.into(),
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        if !(self.transfer_coefficient > 0.0 && self.transfer_coefficient < 1.0) {
            return Err(Error::InvalidParameter {
                name: "transfer_coefficient".into(),
                reason: "must lie in (0, 1)".into(),
            });
        }
        if !(self.v_min > 0.0 && self.v_min < self.v_max) {
            return Err(Error::InvalidParameter {
                name: "v_min".into(),
                reason: format!("need 0 < v_min < v_max, got {} and {}", self.v_min, self.v_max),
            });
        }
        if self.radial_intervals < 2 {
            return Err(Error::InvalidParameter {
                name: "radial_intervals".into(),
                reason: "need at least 2".into(),
            });
        }
        if !(self.eps_floor_fraction > 0.0 && self.eps_floor_fraction < 1.0) {
            return Err(Error::InvalidParameter {
                name: "eps_floor_fraction".into(),
                reason: "must lie in (0, 1)".into(),
            });
        }
        self.sei.validate()?;
        self.stress.validate()
    }

    pub fn electrode(&self, e: Electrode) -> &ElectrodeParams {
        match e {
            Electrode::Anode => &self.anode,
            Electrode::Cathode => &self.cathode,
        }
    }
}

/// Full mutable state of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellState {
    pub c_n: Vec<f64>,
    pub c_p: Vec<f64>,
    pub temperature: f64,
    pub degradation: DegradationState,
}

impl CellState {
    /// Uniform profiles at the given state of charge.
    pub fn uniform(params: &CellParams, soc: f64, temperature: f64) -> Self {
        let n = params.radial_intervals + 1;
        Self {
            c_n: vec![params.anode.stoich_at(soc) * params.anode.max_concentration; n],
            c_p: vec![params.cathode.stoich_at(soc) * params.cathode.max_concentration; n],
            temperature,
            degradation: DegradationState::fresh(params),
        }
    }
}

/// Outward surface fluxes `(j_n, j_p)` carried by cell current `current`
/// (positive discharges).
pub fn surface_flux_from_current(current: f64, params: &CellParams, eps_n: f64, eps_p: f64) -> Result<(f64, f64)> {
    if !(eps_n > 0.0) {
        return Err(Error::NoActiveMaterial { electrode: Electrode::Anode, fraction: eps_n });
    }
    if !(eps_p > 0.0) {
        return Err(Error::NoActiveMaterial { electrode: Electrode::Cathode, fraction: eps_p });
    }
    let nf = ELECTRONS * FARADAY;
    Ok((
        current / (nf * params.anode.active_surface(eps_n)),
        -current / (nf * params.cathode.active_surface(eps_p)),
    ))
}

/// Advances both particles of `state` by one implicit diffusion step under
/// the given outward surface fluxes, at the state's temperature.
pub fn diffusion_step(state: &CellState, params: &CellParams, j_n: f64, j_p: f64, dt: f64) -> Result<CellState> {
    let t = state.temperature;
    let t_ref = params.reference_temperature;
    let g_n = RadialGrid::new(params.anode.particle_radius, params.radial_intervals)?;
    let g_p = RadialGrid::new(params.cathode.particle_radius, params.radial_intervals)?;
    let d_n = arrhenius(params.anode.diffusivity_ref, params.anode.diffusivity_activation, t, t_ref)?;
    let d_p = arrhenius(params.cathode.diffusivity_ref, params.cathode.diffusivity_activation, t, t_ref)?;
    let mut out = state.clone();
    out.c_n = diffusion::implicit_step(&g_n, &state.c_n, d_n, j_n, dt, params.anode.max_concentration, Electrode::Anode)?;
    out.c_p =
        diffusion::implicit_step(&g_p, &state.c_p, d_p, j_p, dt, params.cathode.max_concentration, Electrode::Cathode)?;
    Ok(out)
}

/// Reversible heat and losses of one cell at current `current`.
pub fn heat_generation(current: f64, eta_n: f64, eta_p: f64, r_dc: f64, temperature: f64, dudt: f64) -> f64 {
    current * current * r_dc + current * (eta_n - eta_p) + current * temperature * dudt
}

/// Open-circuit, entropic, kinetic and ohmic parts of the terminal voltage.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VoltageBreakdown {
    pub voltage: f64,
    pub u_n: f64,
    pub u_p: f64,
    /// `(T - T_ref) dU/dT`.
    pub entropic: f64,
    pub eta_n: f64,
    pub eta_p: f64,
    pub r_dc: f64,
}

impl VoltageBreakdown {
    /// Effective open-circuit voltage including the entropic shift.
    pub fn open_circuit(&self) -> f64 {
        self.u_p - self.u_n + self.entropic
    }
}

#[allow(clippy::too_many_arguments)]
fn evaluate_voltage(
    current: f64,
    c_n_surf: f64,
    c_p_surf: f64,
    node: usize,
    params: &CellParams,
    ocv: &OcvTables,
    t: f64,
    k_n: f64,
    k_p: f64,
    s_n: f64,
    s_p: f64,
    r_dc: f64,
    dudt: f64,
) -> Result<VoltageBreakdown> {
    let (an, ca) = (&params.anode, &params.cathode);
    if !(c_n_surf > 0.0 && c_n_surf < an.max_concentration) {
        return Err(Error::Saturation { electrode: Electrode::Anode, node, value: c_n_surf });
    }
    if !(c_p_surf > 0.0 && c_p_surf < ca.max_concentration) {
        return Err(Error::Saturation { electrode: Electrode::Cathode, node, value: c_p_surf });
    }
    let alpha = params.transfer_coefficient;
    let c_el = params.electrolyte_concentration;
    let eta_n = overpotential(-current / s_n, c_n_surf, an.max_concentration, c_el, k_n, t, alpha)?;
    let eta_p = overpotential(current / s_p, c_p_surf, ca.max_concentration, c_el, k_p, t, alpha)?;
    let u_n = ocv.anode_potential(c_n_surf / an.max_concentration);
    let u_p = ocv.cathode_potential(c_p_surf / ca.max_concentration);
    let entropic = (t - params.reference_temperature) * dudt;
    let voltage = u_p - u_n + entropic - (eta_n - eta_p) - r_dc * current;
    Ok(VoltageBreakdown { voltage, u_n, u_p, entropic, eta_n, eta_p, r_dc })
}

/// Terminal voltage of a cell in `state` carrying `current`, evaluated at the
/// present surface concentrations.
pub fn terminal_voltage(state: &CellState, params: &CellParams, ocv: &OcvTables, current: f64, r_dc: f64) -> Result<f64> {
    let t = state.temperature;
    let t_ref = params.reference_temperature;
    let k_n = arrhenius(params.anode.rate_constant_ref, params.anode.rate_activation, t, t_ref)?;
    let k_p = arrhenius(params.cathode.rate_constant_ref, params.cathode.rate_activation, t, t_ref)?;
    let d = &state.degradation;
    let s_n = params.anode.active_surface(d.eps_n);
    let s_p = params.cathode.active_surface(d.eps_p);
    let n = params.radial_intervals;
    let soc = bulk_soc(&state.c_n, params, None);
    let dudt = ocv.entropic_coefficient(soc);
    evaluate_voltage(current, state.c_n[n], state.c_p[n], n, params, ocv, t, k_n, k_p, s_n, s_p, r_dc, dudt)
        .map(|b| b.voltage)
}

fn bulk_soc(c_n: &[f64], params: &CellParams, grid: Option<&RadialGrid>) -> f64 {
    let mean = match grid {
        Some(g) => g.shell_average(c_n),
        None => {
            let g = RadialGrid::new(params.anode.particle_radius, params.radial_intervals).expect("validated grid");
            g.shell_average(c_n)
        }
    };
    let x = mean / params.anode.max_concentration;
    ((x - params.anode.stoich_empty) / (params.anode.stoich_full - params.anode.stoich_empty)).clamp(0.0, 1.0)
}

fn shared_shipped_tables() -> Arc<OcvTables> {
    static TABLES: OnceLock<Arc<OcvTables>> = OnceLock::new();
    TABLES.get_or_init(|| Arc::new(OcvTables::shipped())).clone()
}

#[derive(Debug, Clone)]
struct Prepared {
    dt: f64,
    base_n: Vec<f64>,
    base_p: Vec<f64>,
    gain_n: f64,
    gain_p: f64,
    k_n: f64,
    k_p: f64,
    s_n: f64,
    s_p: f64,
    r_dc: f64,
    dudt: f64,
    i_sei: f64,
}

#[derive(Debug, Clone, Default)]
struct OperatorCache {
    anode: Option<DiffusionOperator>,
    cathode: Option<DiffusionOperator>,
    /// `(T, D_n, D_p, k_n, k_p)` of the last Arrhenius evaluation.
    rates: Option<(f64, [f64; 4])>,
}

/// What happened to a cell during one committed step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    pub current: f64,
    pub breakdown: VoltageBreakdown,
    /// `I^2 R_dc` (W).
    pub ohmic_loss: f64,
    /// `I (eta_n - eta_p)` (W).
    pub reaction_loss: f64,
    /// Total heat generation (W).
    pub heat: f64,
    /// Rate of change of stored electrochemical energy (W).
    pub stored_power: f64,
    /// Lithium consumed by the side reaction this step (mol).
    pub sei_consumed: f64,
    /// Lithium isolated by loss of active material this step (mol).
    pub lam_isolated: f64,
    pub end_of_life: bool,
}

/// One cell: parameters, state and the cached per-step solver data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cell {
    pub params: CellParams,
    pub state: CellState,
    pub degradation_enabled: bool,
    grid_n: RadialGrid,
    grid_p: RadialGrid,
    #[serde(skip, default = "shared_shipped_tables")]
    ocv: Arc<OcvTables>,
    #[serde(skip)]
    cache: OperatorCache,
    #[serde(skip)]
    prepared: Option<Prepared>,
    /// Buffers of the last committed step, reused by the next `prepare`.
    #[serde(skip)]
    spare: Option<Prepared>,
}

impl Cell {
    /// A fresh cell at 50 % state of charge and the given temperature.
    pub fn new(params: CellParams, ocv: Arc<OcvTables>, temperature: f64) -> Result<Self> {
        Self::at_soc(params, ocv, 0.5, temperature)
    }

    pub fn at_soc(params: CellParams, ocv: Arc<OcvTables>, soc: f64, temperature: f64) -> Result<Self> {
        params.validate()?;
        if !(temperature > 0.0) {
            return Err(Error::Domain { what: "temperature", value: temperature });
        }
        let grid_n = RadialGrid::new(params.anode.particle_radius, params.radial_intervals)?;
        let grid_p = RadialGrid::new(params.cathode.particle_radius, params.radial_intervals)?;
        let state = CellState::uniform(&params, soc, temperature);
        Ok(Self {
            params,
            state,
            degradation_enabled: true,
            grid_n,
            grid_p,
            ocv,
            cache: OperatorCache::default(),
            prepared: None,
            spare: None,
        })
    }

    /// A fresh cell using the shipped OCV tables.
    pub fn with_shipped_tables(params: CellParams, temperature: f64) -> Result<Self> {
        Self::new(params, shared_shipped_tables(), temperature)
    }

    pub fn ocv(&self) -> &Arc<OcvTables> {
        &self.ocv
    }

    /// Re-attaches shared tables after deserialisation.
    pub fn relink(&mut self, ocv: Arc<OcvTables>) {
        self.ocv = ocv;
        self.cache = OperatorCache::default();
        self.prepared = None;
    }

    pub fn grid(&self, e: Electrode) -> &RadialGrid {
        match e {
            Electrode::Anode => &self.grid_n,
            Electrode::Cathode => &self.grid_p,
        }
    }

    pub fn temperature(&self) -> f64 {
        self.state.temperature
    }

    pub fn set_temperature(&mut self, t: f64) {
        self.state.temperature = t;
    }

    /// Current DC resistance including SEI and lost active material.
    pub fn dc_resistance(&self) -> Result<f64> {
        degradation::total_dc_resistance(&self.state.degradation, &self.params)
    }

    /// Bulk state of charge from the mean anode stoichiometry.
    pub fn soc(&self) -> f64 {
        bulk_soc(&self.state.c_n, &self.params, Some(&self.grid_n))
    }

    /// Moles of cyclable lithium held in (anode, cathode).
    pub fn lithium_inventory(&self) -> (f64, f64) {
        let d = &self.state.degradation;
        let inv = |e: &ElectrodeParams, eps: f64, g: &RadialGrid, c: &[f64]| eps * e.area * e.thickness * g.shell_average(c);
        (
            inv(&self.params.anode, d.eps_n, &self.grid_n, &self.state.c_n),
            inv(&self.params.cathode, d.eps_p, &self.grid_p, &self.state.c_p),
        )
    }

    /// Open-circuit terminal voltage at the present state.
    pub fn open_circuit_voltage(&self) -> Result<f64> {
        terminal_voltage(&self.state, &self.params, &self.ocv, 0.0, 0.0)
    }

    fn rates(&mut self, t: f64) -> Result<[f64; 4]> {
        if let Some((tc, r)) = self.cache.rates {
            if tc == t {
                return Ok(r);
            }
        }
        let p = &self.params;
        let tr = p.reference_temperature;
        let r = [
            arrhenius(p.anode.diffusivity_ref, p.anode.diffusivity_activation, t, tr)?,
            arrhenius(p.cathode.diffusivity_ref, p.cathode.diffusivity_activation, t, tr)?,
            arrhenius(p.anode.rate_constant_ref, p.anode.rate_activation, t, tr)?,
            arrhenius(p.cathode.rate_constant_ref, p.cathode.rate_activation, t, tr)?,
        ];
        self.cache.rates = Some((t, r));
        Ok(r)
    }

    /// Evaluates everything that does not depend on the current for a step
    /// of length `dt`.
    pub fn prepare(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::Domain { what: "timestep", value: dt });
        }
        let t = self.state.temperature;
        let [d_n, d_p, k_n, k_p] = self.rates(t)?;
        let key_n = d_n * dt;
        if self.cache.anode.as_ref().map(|o| o.key) != Some(key_n) {
            self.cache.anode = Some(DiffusionOperator::new(&self.grid_n, d_n, dt));
        }
        let key_p = d_p * dt;
        if self.cache.cathode.as_ref().map(|o| o.key) != Some(key_p) {
            self.cache.cathode = Some(DiffusionOperator::new(&self.grid_p, d_p, dt));
        }
        let mut prep = self.prepared.take().or_else(|| self.spare.take()).unwrap_or_else(|| Prepared {
            dt,
            base_n: Vec::new(),
            base_p: Vec::new(),
            gain_n: 0.0,
            gain_p: 0.0,
            k_n,
            k_p,
            s_n: 0.0,
            s_p: 0.0,
            r_dc: 0.0,
            dudt: 0.0,
            i_sei: 0.0,
        });
        let op_n = self.cache.anode.as_ref().expect("operator built");
        let op_p = self.cache.cathode.as_ref().expect("operator built");
        op_n.base_profile(&self.grid_n, &self.state.c_n, &mut prep.base_n);
        op_p.base_profile(&self.grid_p, &self.state.c_p, &mut prep.base_p);
        let n = self.params.radial_intervals;
        prep.gain_n = op_n.gain[n];
        prep.gain_p = op_p.gain[n];
        prep.dt = dt;
        prep.k_n = k_n;
        prep.k_p = k_p;
        let d = &self.state.degradation;
        prep.s_n = self.params.anode.active_surface(d.eps_n);
        prep.s_p = self.params.cathode.active_surface(d.eps_p);
        prep.r_dc = degradation::total_dc_resistance(d, &self.params)?;
        prep.dudt = self.ocv.entropic_coefficient(self.soc());
        prep.i_sei = if self.degradation_enabled {
            let u_n = self.ocv.anode_potential(self.state.c_n[n] / self.params.anode.max_concentration);
            sei_current(d.last_eta_n, u_n, d.sei_thickness, t, &self.params.sei, self.params.reference_temperature)?
        } else {
            0.0
        };
        self.prepared = Some(prep);
        Ok(())
    }

    fn prepared(&self) -> Result<&Prepared> {
        self.prepared
            .as_ref()
            .ok_or_else(|| Error::Scenario("cell stepped without prepare".into()))
    }

    #[inline]
    fn fluxes(&self, p: &Prepared, current: f64) -> (f64, f64) {
        let nf = ELECTRONS * FARADAY;
        ((current / p.s_n + p.i_sei) / nf, -current / (p.s_p * nf))
    }

    /// Terminal voltage at the end of the prepared step if `current` flows.
    pub fn voltage_at(&self, current: f64) -> Result<VoltageBreakdown> {
        let p = self.prepared()?;
        let n = self.params.radial_intervals;
        let (j_n, j_p) = self.fluxes(p, current);
        let c_n = p.base_n[n] + j_n * p.gain_n;
        let c_p = p.base_p[n] + j_p * p.gain_p;
        evaluate_voltage(
            current,
            c_n,
            c_p,
            n,
            &self.params,
            &self.ocv,
            self.state.temperature,
            p.k_n,
            p.k_p,
            p.s_n,
            p.s_p,
            p.r_dc,
            p.dudt,
        )
    }

    /// Fixes `current` for the prepared step and advances the state.
    pub fn commit(&mut self, current: f64) -> Result<StepReport> {
        let breakdown = self.voltage_at(current)?;
        let p = self.prepared.take().expect("checked by voltage_at");
        let (j_n, j_p) = self.fluxes(&p, current);
        let op_n = self.cache.anode.as_ref().expect("operator built");
        let op_p = self.cache.cathode.as_ref().expect("operator built");
        let mut c_n = p.base_n.clone();
        for (c, g) in c_n.iter_mut().zip(&op_n.gain) {
            *c += j_n * g;
        }
        let mut c_p = p.base_p.clone();
        for (c, g) in c_p.iter_mut().zip(&op_p.gain) {
            *c += j_p * g;
        }
        if let Err(e) = check_bounds(&c_n, self.params.anode.max_concentration, Electrode::Anode)
            .and_then(|_| check_bounds(&c_p, self.params.cathode.max_concentration, Electrode::Cathode))
        {
            self.prepared = Some(p);
            return Err(e);
        }
        self.state.c_n = c_n;
        self.state.c_p = c_p;

        let t = self.state.temperature;
        let ohmic_loss = current * current * p.r_dc;
        let reaction_loss = current * (breakdown.eta_n - breakdown.eta_p);
        let heat = heat_generation(current, breakdown.eta_n, breakdown.eta_p, p.r_dc, t, p.dudt);
        let mut report = StepReport {
            current,
            breakdown,
            ohmic_loss,
            reaction_loss,
            heat,
            stored_power: -breakdown.open_circuit() * current,
            ..StepReport::default()
        };
        if self.degradation_enabled {
            self.degrade(&p, current, breakdown.eta_n, &mut report);
        }
        self.spare = Some(p);
        Ok(report)
    }

    fn degrade(&mut self, p: &Prepared, current: f64, eta_n: f64, report: &mut StepReport) {
        let dt = p.dt;
        let params = &self.params;
        let d = &mut self.state.degradation;
        let sei = apply_sei(d, p.i_sei, p.s_n, &params.sei, dt);
        report.sei_consumed = sei.consumed;
        d.last_eta_n = eta_n;

        let floor_n = params.eps_floor_fraction * params.anode.active_fraction;
        let floor_p = params.eps_floor_fraction * params.cathode.active_fraction;
        let clog = pore_clogging(d.eps_n, p.i_sei, current / p.s_n, &params.sei, dt, floor_n);
        let mut eps_n = clog.fraction;
        let mut eps_p = d.eps_p;
        let mut eol = clog.hit_floor;

        let sign = if current > 0.0 {
            1
        } else if current < 0.0 {
            -1
        } else {
            0
        };
        if d.sign.update(sign) {
            d.stress_n.reset();
            d.stress_p.reset();
        }
        let sigma_n = surface_hydrostatic_stress(&self.state.c_n, &self.grid_n, &params.stress.anode);
        let sigma_p = surface_hydrostatic_stress(&self.state.c_p, &self.grid_p, &params.stress.cathode);
        d.stress_n.observe(sigma_n);
        d.stress_p.observe(sigma_p);
        if current != 0.0 {
            let lam_n = crack_lam(eps_n, &d.stress_n, &params.stress.anode, &params.stress, dt, floor_n);
            let lam_p = crack_lam(eps_p, &d.stress_p, &params.stress.cathode, &params.stress, dt, floor_p);
            eps_n = lam_n.fraction;
            eps_p = lam_p.fraction;
            eol |= lam_n.hit_floor || lam_p.hit_floor;
        }
        let mean_n = self.grid_n.shell_average(&self.state.c_n);
        let mean_p = self.grid_p.shell_average(&self.state.c_p);
        let iso_n = (d.eps_n - eps_n) * params.anode.area * params.anode.thickness * mean_n;
        let iso_p = (d.eps_p - eps_p) * params.cathode.area * params.cathode.thickness * mean_p;
        d.lost_li_lam_n += iso_n;
        d.lost_li_lam_p += iso_p;
        d.eps_n = eps_n;
        d.eps_p = eps_p;
        d.end_of_life |= eol;
        report.lam_isolated = iso_n + iso_p;
        report.end_of_life = d.end_of_life;
    }

    /// Convenience: prepare and commit one step at fixed current.
    pub fn step(&mut self, current: f64, dt: f64) -> Result<StepReport> {
        self.prepare(dt)?;
        self.commit(current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fresh() -> Cell {
        Cell::with_shipped_tables(CellParams::default(), 298.15).unwrap()
    }

    #[test]
    fn default_parameters_validate() {
        CellParams::default().validate().unwrap();
        let p = CellParams {
            v_min: 5.0,
            ..CellParams::default()
        };
        assert!(p.validate().is_err());
        let p = CellParams {
            transfer_coefficient: 1.0,
            ..CellParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn electrode_windows_are_balanced() {
        let total = |soc: f64| {
            let c = Cell::at_soc(CellParams::default(), fresh().ocv.clone(), soc, 298.15).unwrap();
            let (n, p) = c.lithium_inventory();
            n + p
        };
        let mid = total(0.5);
        for soc in [0.0, 0.2, 1.0] {
            assert!((total(soc) / mid - 1.0).abs() < 1e-4, "soc {soc}");
        }
    }

    #[test]
    fn flux_from_current() {
        let p = CellParams::default();
        let (e_n, e_p) = (p.anode.active_fraction, p.cathode.active_fraction);
        assert_eq!(surface_flux_from_current(0.0, &p, e_n, e_p).unwrap(), (0.0, 0.0));
        let (a, b) = surface_flux_from_current(16.0, &p, e_n, e_p).unwrap();
        let (a2, b2) = surface_flux_from_current(16.0, &p, e_n / 2.0, e_p / 2.0).unwrap();
        assert!((a2 / a - 2.0).abs() < 1e-12 && (b2 / b - 2.0).abs() < 1e-12);
        assert!(a > 0.0 && b < 0.0);
        let oracle = 16.0 / (FARADAY * 3.0 * 0.75 / 5.86e-6 * 0.314 * 85.2e-6);
        assert!(((a - oracle) / oracle).abs() < 1e-12);
        assert!(surface_flux_from_current(1.0, &p, 0.0, e_p).is_err());
    }

    #[test]
    fn open_circuit_voltage_is_table_difference() {
        let cell = fresh();
        let p = &cell.params;
        let ocv = OcvTables::shipped();
        let expected = ocv.cathode_potential(p.cathode.stoich_at(0.5)) - ocv.anode_potential(p.anode.stoich_at(0.5));
        let v = terminal_voltage(&cell.state, p, &ocv, 0.0, cell.dc_resistance().unwrap()).unwrap();
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn voltage_falls_with_current() {
        let mut cell = fresh();
        cell.prepare(2.0).unwrap();
        let mut last = f64::INFINITY;
        for k in -20..=20 {
            let v = cell.voltage_at(k as f64 * 1.6).unwrap().voltage;
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn trial_voltage_matches_commit() {
        let mut cell = fresh();
        cell.prepare(2.0).unwrap();
        let trial = cell.voltage_at(16.0).unwrap();
        let rep = cell.commit(16.0).unwrap();
        assert_eq!(trial.voltage, rep.breakdown.voltage);
        assert!(cell.voltage_at(1.0).is_err());
    }

    #[test]
    fn heat_terms() {
        assert_eq!(heat_generation(0.0, 0.1, -0.1, 0.002, 300.0, 1e-4), 0.0);
        for k in -32..=32 {
            let i = k as f64;
            let mut cell = fresh();
            cell.prepare(2.0).unwrap();
            let b = cell.voltage_at(i).unwrap();
            assert!(i * i * b.r_dc + i * (b.eta_n - b.eta_p) >= 0.0);
        }
    }

    #[test]
    fn lithium_is_conserved_without_degradation() {
        let mut cell = fresh();
        cell.degradation_enabled = false;
        let (n0, p0) = cell.lithium_inventory();
        let mut q = 0.0;
        for _ in 0..300 {
            cell.step(16.0, 2.0).unwrap();
            q += 16.0 * 2.0;
        }
        let (n1, p1) = cell.lithium_inventory();
        let dn = n1 - n0;
        assert!(((dn + q / FARADAY) / (q / FARADAY)).abs() < 1e-9);
        assert!(((p1 - p0 - q / FARADAY) / (q / FARADAY)).abs() < 1e-9);
    }
}
