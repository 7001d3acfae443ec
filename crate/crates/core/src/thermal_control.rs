//! Fan and air-conditioning control laws.
//!
//! Commands are normalised to `[0, 1]` of the actuator's nominal power. The
//! on/off variants keep a latch per actuator so they only switch after the
//! opposite threshold has been crossed.

use serde::{Deserialize, Serialize};

use crate::{celsius, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlVariant {
    AlwaysOn,
    LocalOnOff,
    HotspotOnOff,
    ProportionalLocal,
    ProportionalHotspot,
}

impl ControlVariant {
    pub const ALL: [ControlVariant; 5] = [
        ControlVariant::AlwaysOn,
        ControlVariant::LocalOnOff,
        ControlVariant::HotspotOnOff,
        ControlVariant::ProportionalLocal,
        ControlVariant::ProportionalHotspot,
    ];

    pub fn number(self) -> usize {
        Self::ALL.iter().position(|v| *v == self).unwrap_or(0) + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            ControlVariant::AlwaysOn => "always_on",
            ControlVariant::LocalOnOff => "local_on_off",
            ControlVariant::HotspotOnOff => "hotspot_on_off",
            ControlVariant::ProportionalLocal => "proportional_local",
            ControlVariant::ProportionalHotspot => "proportional_hotspot",
        }
    }
}

/// Switching temperatures (K).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Fans switch on above this, and reach full power here when proportional.
    pub fan_high: f64,
    /// Fans switch off below this, and start here when proportional.
    pub fan_low: f64,
    /// AC cut-off and proportional start on the local temperature.
    pub ac_low: f64,
    /// AC switch-on (local on/off) and full power (local proportional).
    pub ac_high: f64,
    /// AC switch-on on the hot spot (hot-spot on/off) and full power
    /// (hot-spot proportional).
    pub ac_hotspot: f64,
    /// Start of the hot-spot proportional AC band.
    pub ac_hotspot_low: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            fan_high: celsius(35.0),
            fan_low: celsius(25.0),
            ac_low: celsius(20.0),
            ac_high: celsius(25.0),
            ac_hotspot: celsius(30.0),
            ac_hotspot_low: celsius(25.0),
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        let pairs = [
            ("fan_low", self.fan_low, "fan_high", self.fan_high),
            ("ac_low", self.ac_low, "ac_high", self.ac_high),
            ("ac_hotspot_low", self.ac_hotspot_low, "ac_hotspot", self.ac_hotspot),
        ];
        for (lo_name, lo, hi_name, hi) in pairs {
            if !(hi > lo) {
                return Err(Error::InvalidParameter {
                    name: format!("thresholds.{hi_name}"),
                    reason: format!("must exceed {lo_name} ({hi} <= {lo})"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlStrategy {
    pub variant: ControlVariant,
    pub thresholds: Thresholds,
}

impl ControlStrategy {
    pub fn new(variant: ControlVariant) -> Self {
        Self {
            variant,
            thresholds: Thresholds::default(),
        }
    }
}

/// Hysteresis state of one actuator, initially off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Latch {
    pub on: bool,
}

impl Latch {
    fn update(&mut self, switch_on: bool, switch_off: bool) -> f64 {
        if self.on {
            if switch_off {
                self.on = false;
            }
        } else if switch_on {
            self.on = true;
        }
        if self.on {
            1.0
        } else {
            0.0
        }
    }
}

fn ramp(t: f64, lo: f64, hi: f64) -> f64 {
    ((t - lo) / (hi - lo)).clamp(0.0, 1.0)
}

/// Normalised fan power.
pub fn fan_command(s: &ControlStrategy, t_local: f64, t_hot: f64, latch: &mut Latch) -> f64 {
    let th = &s.thresholds;
    match s.variant {
        ControlVariant::AlwaysOn => 1.0,
        ControlVariant::LocalOnOff => latch.update(t_local > th.fan_high, t_local < th.fan_low),
        ControlVariant::HotspotOnOff => latch.update(t_hot > th.fan_high, t_hot < th.fan_low),
        ControlVariant::ProportionalLocal => ramp(t_local, th.fan_low, th.fan_high),
        ControlVariant::ProportionalHotspot => ramp(t_hot, th.fan_low, th.fan_high),
    }
}

/// Normalised AC cooling power.
pub fn ac_command(s: &ControlStrategy, t_local: f64, t_hot: f64, latch: &mut Latch) -> f64 {
    let th = &s.thresholds;
    match s.variant {
        ControlVariant::AlwaysOn => {
            if t_local < th.ac_low {
                0.0
            } else {
                1.0
            }
        }
        ControlVariant::LocalOnOff => latch.update(t_local > th.ac_high, t_local < th.ac_low),
        ControlVariant::HotspotOnOff => latch.update(t_hot > th.ac_hotspot, t_local < th.ac_low),
        ControlVariant::ProportionalLocal => ramp(t_local, th.ac_low, th.ac_high),
        ControlVariant::ProportionalHotspot => {
            if t_local > th.ac_low {
                ramp(t_hot, th.ac_hotspot_low, th.ac_hotspot)
            } else {
                0.0
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(x: f64) -> f64 {
        celsius(x)
    }

    #[test]
    fn proportional_fan_midpoint_and_clamp() {
        let s = ControlStrategy::new(ControlVariant::ProportionalLocal);
        let mut l = Latch::default();
        assert!((fan_command(&s, c(30.0), c(30.0), &mut l) - 0.5).abs() < 1e-12);
        assert_eq!(fan_command(&s, c(40.0), c(40.0), &mut l), 1.0);
        assert_eq!(fan_command(&s, c(10.0), c(40.0), &mut l), 0.0);
        assert!((ac_command(&s, c(22.5), c(22.5), &mut l) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn local_on_off_hysteresis() {
        let s = ControlStrategy::new(ControlVariant::LocalOnOff);
        let mut l = Latch::default();
        let cmds: Vec<f64> = [24.0, 36.0, 26.0, 24.0]
            .iter()
            .map(|t| fan_command(&s, c(*t), c(*t), &mut l))
            .collect();
        assert_eq!(cmds, vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn gates_and_always_on() {
        let s5 = ControlStrategy::new(ControlVariant::ProportionalHotspot);
        let s1 = ControlStrategy::new(ControlVariant::AlwaysOn);
        let mut l = Latch::default();
        assert_eq!(ac_command(&s5, c(19.0), c(40.0), &mut l), 0.0);
        assert_eq!(ac_command(&s5, c(21.0), c(40.0), &mut l), 1.0);
        assert_eq!(ac_command(&s1, c(18.0), c(18.0), &mut l), 0.0);
        assert_eq!(ac_command(&s1, c(21.0), c(18.0), &mut l), 1.0);
        assert_eq!(fan_command(&s1, c(0.0), c(0.0), &mut l), 1.0);
    }

    #[test]
    fn hotspot_on_off_ac_uses_both_temperatures() {
        let s = ControlStrategy::new(ControlVariant::HotspotOnOff);
        let mut l = Latch::default();
        assert_eq!(ac_command(&s, c(22.0), c(29.0), &mut l), 0.0);
        assert_eq!(ac_command(&s, c(22.0), c(31.0), &mut l), 1.0);
        assert_eq!(ac_command(&s, c(21.0), c(22.0), &mut l), 1.0);
        assert_eq!(ac_command(&s, c(19.5), c(22.0), &mut l), 0.0);
    }

    #[test]
    fn bad_thresholds_are_rejected() {
        let t = Thresholds {
            fan_low: celsius(40.0),
            ..Thresholds::default()
        };
        assert!(t.validate().is_err());
        assert!(Thresholds::default().validate().is_ok());
    }

    proptest! {
        #[test]
        fn commands_stay_in_unit_interval(v in 0usize..5, tl in 250.0f64..350.0, th in 250.0f64..350.0, on in any::<bool>()) {
            let s = ControlStrategy::new(ControlVariant::ALL[v]);
            let mut l = Latch { on };
            let f = fan_command(&s, tl, th, &mut l);
            let a = ac_command(&s, tl, th, &mut l);
            prop_assert!((0.0..=1.0).contains(&f) && (0.0..=1.0).contains(&a));
        }

        #[test]
        fn proportional_laws_are_continuous(t in 280.0f64..320.0) {
            let s = ControlStrategy::new(ControlVariant::ProportionalLocal);
            let mut l = Latch::default();
            let a = fan_command(&s, t, t, &mut l);
            let b = fan_command(&s, t + 1e-6, t + 1e-6, &mut l);
            prop_assert!((a - b).abs() <= 1e-6 / 10.0 + 1e-12);
        }

        #[test]
        fn hysteresis_never_chatters(path in proptest::collection::vec(290.0f64..315.0, 1..60)) {
            let s = ControlStrategy::new(ControlVariant::LocalOnOff);
            let th = s.thresholds;
            let mut l = Latch::default();
            let mut last = 0.0;
            for t in path {
                let cmd = fan_command(&s, t, t, &mut l);
                if cmd != last {
                    if cmd == 1.0 { prop_assert!(t > th.fan_high); } else { prop_assert!(t < th.fan_low); }
                }
                last = cmd;
            }
        }
    }
}
