//! Fans, air conditioning and the two-stage power converter.

use serde::{Deserialize, Serialize};

use crate::thermal_network::{CoolingMode, Environment};
use crate::{Error, Result};

/// Convective coefficient (W/(m^2 K)) for air speed `v` (m/s).
pub fn fan_convection(v: f64) -> Result<f64> {
    if !(v >= 0.0) {
        return Err(Error::Domain { what: "air speed", value: v });
    }
    Ok(12.12 - 1.16 * v + 11.6 * v.sqrt())
}

/// Fan data per cell served. A fan for `n` cells has `n` times the area and
/// flow, so every fan runs at the same air speeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FanParams {
    pub area_per_cell: f64,
    pub flow_per_cell: f64,
    pub efficiency: f64,
    pub air_density: f64,
    pub air_heat_capacity: f64,
}

impl Default for FanParams {
    fn default() -> Self {
        Self {
            area_per_cell: 2.5e-5,
            flow_per_cell: 5e-4,
            efficiency: 0.55,
            air_density: 1.2,
            air_heat_capacity: 1005.0,
        }
    }
}

/// A fan sized for a number of cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fan {
    pub area: f64,
    pub nominal_flow: f64,
    pub efficiency: f64,
    pub air_density: f64,
    pub air_heat_capacity: f64,
}

impl FanParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("area_per_cell", self.area_per_cell),
            ("flow_per_cell", self.flow_per_cell),
            ("efficiency", self.efficiency),
            ("air_density", self.air_density),
            ("air_heat_capacity", self.air_heat_capacity),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: format!("fan.{name}"),
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        if self.efficiency > 1.0 {
            return Err(Error::InvalidParameter {
                name: "fan.efficiency".into(),
                reason: "must not exceed 1".into(),
            });
        }
        Ok(())
    }

    pub fn sized_for(&self, cells: usize) -> Fan {
        let n = cells as f64;
        Fan {
            area: self.area_per_cell * n,
            nominal_flow: self.flow_per_cell * n,
            efficiency: self.efficiency,
            air_density: self.air_density,
            air_heat_capacity: self.air_heat_capacity,
        }
    }
}

impl Fan {
    pub fn nominal_speed(&self) -> f64 {
        self.nominal_flow / self.area
    }

    /// Electrical power at nominal speed, which is also the power cap.
    pub fn nominal_power(&self) -> f64 {
        self.air_density * self.area * self.nominal_speed().powi(3) / self.efficiency
    }

    /// Air speed for a normalised command in `[0, 1]`.
    pub fn speed_for(&self, command: f64) -> f64 {
        command.clamp(0.0, 1.0) * self.nominal_speed()
    }

    pub fn max_mass_flow(&self) -> f64 {
        self.air_density * self.nominal_flow
    }
}

/// Electrical power of a fan at air speed `v`.
pub fn fan_power(v: f64, fan: &Fan) -> f64 {
    if !(v > 0.0) {
        return 0.0;
    }
    (fan.air_density * fan.area * v.powi(3) / fan.efficiency).min(fan.nominal_power())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcParams {
    pub cop: f64,
    /// Cooling capacity at full command, per cell (W).
    pub capacity_per_cell: f64,
}

impl Default for AcParams {
    fn default() -> Self {
        Self {
            cop: 3.0,
            capacity_per_cell: 3.0,
        }
    }
}

impl AcParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cop > 0.0) {
            return Err(Error::InvalidParameter {
                name: "ac.cop".into(),
                reason: format!("must be positive, got {}", self.cop),
            });
        }
        if !(self.capacity_per_cell >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "ac.capacity_per_cell".into(),
                reason: format!("must be non-negative, got {}", self.capacity_per_cell),
            });
        }
        Ok(())
    }
}

/// Electrical power needed to remove `demand` watts of heat from air at
/// `t_hot` to an environment at `t_cold`.
pub fn ac_power(demand: f64, t_hot: f64, t_cold: f64, env: &Environment, p: &AcParams, fan: &Fan) -> Result<f64> {
    if !(demand >= 0.0) {
        return Err(Error::Domain { what: "cooling demand", value: demand });
    }
    if demand == 0.0 {
        return Ok(0.0);
    }
    match env.mode {
        CoolingMode::Chiller => Ok(demand / p.cop),
        CoolingMode::DirectAir => {
            if !(t_hot > t_cold) {
                return Err(Error::NoCoolingCapability { t_hot, t_cold });
            }
            let mass_flow = demand / (fan.air_heat_capacity * (t_hot - t_cold));
            let v = mass_flow / (fan.air_density * fan.area);
            Ok(fan.air_density * fan.area * v.powi(3) / fan.efficiency)
        }
    }
}

/// Heat actually removed and electrical power drawn by the AC unit.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AcOperation {
    pub removed: f64,
    pub electrical: f64,
    /// Whether direct-air cooling fell back to the chiller.
    pub chilled: bool,
}

/// Runs the AC unit at `command` of its capacity. Direct-air cooling is
/// limited by the intake fan's maximum flow and falls back to the chiller
/// when outside air is not colder than the container.
pub fn ac_operate(command: f64, t_container: f64, env: &Environment, p: &AcParams, fan: &Fan, cells: usize) -> Result<AcOperation> {
    let demand = command.clamp(0.0, 1.0) * p.capacity_per_cell * cells as f64;
    if demand == 0.0 {
        return Ok(AcOperation::default());
    }
    if env.mode == CoolingMode::DirectAir && t_container > env.temperature {
        let reach = fan.max_mass_flow() * fan.air_heat_capacity * (t_container - env.temperature);
        let removed = demand.min(reach);
        let electrical = ac_power(removed, t_container, env.temperature, env, p, fan)?;
        return Ok(AcOperation {
            removed,
            electrical,
            chilled: false,
        });
    }
    let chiller = Environment {
        mode: CoolingMode::Chiller,
        ..*env
    };
    Ok(AcOperation {
        removed: demand,
        electrical: ac_power(demand, t_container, env.temperature, &chiller, p, fan)?,
        chilled: env.mode == CoolingMode::DirectAir,
    })
}

/// Two-stage converter: DC/DC from the battery to a fixed bus, then DC/AC
/// to the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConverterParams {
    /// Semiconductor voltage drop per stage (V).
    pub switch_drop: f64,
    pub switching_frequency: f64,
    pub turn_on_energy: f64,
    pub turn_off_energy: f64,
    /// DC/DC filter equivalent resistance (Ohm).
    pub dc_filter_resistance: f64,
    /// DC-link capacitor equivalent resistance (Ohm).
    pub link_resistance: f64,
    /// AC filter equivalent resistance (Ohm).
    pub ac_filter_resistance: f64,
    pub bus_voltage: f64,
    /// RMS line voltage on the grid side.
    pub ac_voltage: f64,
    pub rating: f64,
}

impl Default for ConverterParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// Loss decomposition of the converter (W).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConverterLosses {
    pub conduction: f64,
    pub switching: f64,
    pub passive: f64,
}

impl ConverterLosses {
    pub fn total(&self) -> f64 {
        self.conduction + self.switching + self.passive
    }
}

/// Nominal DC voltage of the reference converter's battery.
pub const REFERENCE_BATTERY_VOLTAGE: f64 = 1110.0;

impl ConverterParams {
    /// 1 MW converter for a battery of nominal 1110 V.
    pub fn reference() -> Self {
        Self {
            switch_drop: 2.5,
            switching_frequency: 4000.0,
            turn_on_energy: 0.05,
            turn_off_energy: 0.07,
            dc_filter_resistance: 4.0e-3,
            link_resistance: 1.0e-3,
            ac_filter_resistance: 1.5e-3,
            bus_voltage: 1500.0,
            ac_voltage: 690.0,
            rating: 1.0e6,
        }
    }

    /// Scales the converter to `rating` watts for a battery of nominal
    /// voltage `battery_voltage`. Loss fractions at the same C-rate are
    /// unchanged.
    pub fn rescaled(&self, rating: f64, battery_voltage: f64) -> Self {
        let kv = battery_voltage / REFERENCE_BATTERY_VOLTAGE;
        let kp = rating / self.rating;
        let ki = kp / kv;
        Self {
            switch_drop: self.switch_drop * kv,
            switching_frequency: self.switching_frequency,
            turn_on_energy: self.turn_on_energy * kp,
            turn_off_energy: self.turn_off_energy * kp,
            dc_filter_resistance: self.dc_filter_resistance * kv / ki,
            link_resistance: self.link_resistance * kv / ki,
            ac_filter_resistance: self.ac_filter_resistance * kv / ki,
            bus_voltage: self.bus_voltage * kv,
            ac_voltage: self.ac_voltage * kv,
            rating,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("switch_drop", self.switch_drop),
            ("switching_frequency", self.switching_frequency),
            ("turn_on_energy", self.turn_on_energy),
            ("turn_off_energy", self.turn_off_energy),
            ("dc_filter_resistance", self.dc_filter_resistance),
            ("link_resistance", self.link_resistance),
            ("ac_filter_resistance", self.ac_filter_resistance),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: format!("converter.{name}"),
                    reason: format!("must be non-negative, got {v}"),
                });
            }
        }
        for (name, v) in [("bus_voltage", self.bus_voltage), ("ac_voltage", self.ac_voltage), ("rating", self.rating)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: format!("converter.{name}"),
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Conduction loss of one stage.
pub fn stage_conduction(current: f64, switch_drop: f64, modulation: f64) -> f64 {
    current.abs() * switch_drop * modulation
}

/// Switching loss of one stage.
pub fn stage_switching(frequency: f64, e_on: f64, e_off: f64) -> f64 {
    frequency * (e_on + e_off)
}

/// Converter losses while the battery carries `i_batt` at `v_batt` and the
/// AC side exchanges `p_ac` watts. Both stages are gated off at zero
/// current.
pub fn converter_losses(i_batt: f64, v_batt: f64, p_ac: f64, p: &ConverterParams) -> Result<ConverterLosses> {
    let p_dc = (i_batt * v_batt).abs();
    if p_dc > p.rating * (1.0 + 1e-9) || p_ac.abs() > p.rating * (1.0 + 1e-9) {
        return Err(Error::RatingExceeded {
            power: p_dc.max(p_ac.abs()),
            rating: p.rating,
        });
    }
    if i_batt == 0.0 {
        return Ok(ConverterLosses::default());
    }
    let d1 = (v_batt / p.bus_voltage).clamp(0.0, 1.0);
    let d2 = (std::f64::consts::SQRT_2 * p.ac_voltage / p.bus_voltage).clamp(0.0, 1.0);
    let i_bus = p_dc / p.bus_voltage;
    let i_ac = p_ac.abs() / (3f64.sqrt() * p.ac_voltage);
    let conduction = stage_conduction(i_batt, p.switch_drop, d1) + stage_conduction(i_bus, p.switch_drop, d2);
    let switching = 2.0 * stage_switching(p.switching_frequency, p.turn_on_energy, p.turn_off_energy);
    let passive = i_batt * i_batt * p.dc_filter_resistance
        + i_bus * i_bus * p.link_resistance
        + 3.0 * i_ac * i_ac * p.ac_filter_resistance;
    Ok(ConverterLosses {
        conduction,
        switching,
        passive,
    })
}

/// All ancillary parameters of a system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AncillaryParams {
    pub fan: FanParams,
    pub ac: AcParams,
    /// Reference converter, rescaled to each system's rating.
    pub converter: ConverterParams,
    /// Converter rating as a multiple of the battery's 1C power.
    pub converter_c_rating: f64,
}

impl Default for AncillaryParams {
    fn default() -> Self {
        Self {
            fan: FanParams::default(),
            ac: AcParams::default(),
            converter: ConverterParams::reference(),
            converter_c_rating: 1.5,
        }
    }
}

impl AncillaryParams {
    pub fn validate(&self) -> Result<()> {
        self.fan.validate()?;
        self.ac.validate()?;
        self.converter.validate()?;
        if !(self.converter_c_rating > 0.0) {
            return Err(Error::InvalidParameter {
                name: "converter_c_rating".into(),
                reason: format!("must be positive, got {}", self.converter_c_rating),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn convection_values() {
        assert_relative_eq!(fan_convection(0.0).unwrap(), 12.12);
        assert_relative_eq!(fan_convection(1.0).unwrap(), 22.56, epsilon = 1e-12);
        assert!(fan_convection(-1.0).is_err());
        let mut last = fan_convection(0.0).unwrap();
        for k in 1..=250 {
            let h = fan_convection(k as f64 * 0.1).unwrap();
            assert!(h > last);
            last = h;
        }
    }

    #[test]
    fn fan_power_is_cubic_and_capped() {
        let fan = FanParams::default().sized_for(140);
        assert_eq!(fan_power(0.0, &fan), 0.0);
        let p1 = fan_power(4.0, &fan);
        assert_relative_eq!(fan_power(8.0, &fan), 8.0 * p1, max_relative = 1e-12);
        assert_relative_eq!(fan_power(100.0, &fan), fan.nominal_power());
        assert_relative_eq!(fan.nominal_speed(), 20.0);
    }

    #[test]
    fn reference_fan_draws_about_its_rating() {
        // 0.3 m diameter, 65 m^3/min
        let area = std::f64::consts::PI * 0.15 * 0.15;
        let fan = Fan {
            area,
            nominal_flow: 65.0 / 60.0,
            efficiency: FanParams::default().efficiency,
            air_density: 1.2,
            air_heat_capacity: 1005.0,
        };
        let p = fan.nominal_power();
        assert!((p - 550.0).abs() < 0.2 * 550.0, "{p}");
    }

    #[test]
    fn cooling_per_watt_falls_with_speed() {
        let fan = FanParams::default().sized_for(1);
        let mut last = f64::INFINITY;
        for k in 1..=40 {
            let v = k as f64 * 0.5;
            let r = fan_convection(v).unwrap() / fan_power(v, &fan);
            assert!(r < last);
            last = r;
        }
    }

    #[test]
    fn ac_power_cases() {
        let fan = FanParams::default().sized_for(140);
        let p = AcParams::default();
        let chiller = Environment {
            temperature: 300.0,
            mode: CoolingMode::Chiller,
        };
        let direct = Environment {
            temperature: 288.15,
            mode: CoolingMode::DirectAir,
        };
        assert_eq!(ac_power(0.0, 300.0, 288.0, &direct, &p, &fan).unwrap(), 0.0);
        assert_relative_eq!(ac_power(3000.0, 300.0, 300.0, &chiller, &p, &fan).unwrap(), 1000.0);
        // halving the temperature difference doubles the mass flow: power x8
        let a = ac_power(200.0, 298.0, 288.0, &direct, &p, &fan).unwrap();
        let b = ac_power(200.0, 293.0, 288.0, &direct, &p, &fan).unwrap();
        assert_relative_eq!(b, 8.0 * a, max_relative = 1e-12);
        assert!(matches!(
            ac_power(200.0, 288.0, 290.0, &direct, &p, &fan),
            Err(Error::NoCoolingCapability { .. })
        ));
    }

    #[test]
    fn ac_falls_back_to_chiller_when_outside_is_warmer() {
        let fan = FanParams::default().sized_for(10);
        let p = AcParams::default();
        let hot = Environment {
            temperature: 310.0,
            mode: CoolingMode::DirectAir,
        };
        let op = ac_operate(1.0, 300.0, &hot, &p, &fan, 10).unwrap();
        assert!(op.chilled);
        assert_relative_eq!(op.electrical, 30.0 / 3.0);
    }

    #[test]
    fn direct_air_removal_is_flow_limited() {
        let fan = FanParams::default().sized_for(10);
        let p = AcParams {
            capacity_per_cell: 100.0,
            ..AcParams::default()
        };
        let env = Environment::default();
        let op = ac_operate(1.0, env.temperature + 1.0, &env, &p, &fan, 10).unwrap();
        assert_relative_eq!(op.removed, fan.max_mass_flow() * 1005.0, max_relative = 1e-12);
        assert_relative_eq!(op.electrical, fan.nominal_power(), max_relative = 1e-9);
    }

    #[test]
    fn converter_cases() {
        let p = ConverterParams::reference();
        let idle = converter_losses(0.0, 1100.0, 0.0, &p).unwrap();
        assert_eq!(idle.total(), 0.0);
        let on = converter_losses(1e-3, 1100.0, 1.1, &p).unwrap();
        assert_relative_eq!(on.switching, 2.0 * 4000.0 * 0.12, max_relative = 1e-12);
        assert_relative_eq!(stage_conduction(100.0, 1.0, 0.5), 50.0);
        assert!(matches!(
            converter_losses(1000.0, 1100.0, 0.0, &p),
            Err(Error::RatingExceeded { .. })
        ));
    }

    #[test]
    fn rescaling_keeps_loss_fractions() {
        let reference = ConverterParams::reference();
        let i_ref = 900.0;
        let l_ref = converter_losses(i_ref, 1110.0, 9.9e5, &reference).unwrap().total() / (i_ref * 1110.0);
        let small = reference.rescaled(8.3e3, 74.0);
        let i = i_ref * (8.3e3 / 1e6) / (74.0 / 1110.0);
        let l = converter_losses(i, 74.0, 9.9e5 * 8.3e-3, &small).unwrap().total() / (i * 74.0);
        assert_relative_eq!(l, l_ref, max_relative = 1e-9);
    }
}
