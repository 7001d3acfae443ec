//! Energy bookkeeping at the grid interface.
//!
//! Every quantity is an energy in joules accumulated over one cycle. The
//! closure identity is
//! `grid_in - grid_out = delta_stored + losses`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Ledger {
    pub grid_in: f64,
    pub grid_out: f64,
    pub delta_stored: f64,
    pub cell_ohmic: f64,
    pub cell_reaction: f64,
    pub contact: f64,
    pub converter_conduction: f64,
    pub converter_switching: f64,
    pub converter_passive: f64,
    pub fan: f64,
    pub ac: f64,
    pub balancing: f64,
    /// Net grid export during discharge steps.
    pub discharge_out: f64,
    /// Energy at the battery terminals while charging and discharging.
    pub dc_in: f64,
    pub dc_out: f64,
    /// Ampere-seconds summed over represented cells.
    pub cell_throughput: f64,
    pub sei_mol: f64,
    pub lam_mol: f64,
}

impl Ledger {
    pub fn losses(&self) -> f64 {
        self.cell_ohmic
            + self.cell_reaction
            + self.contact
            + self.converter_conduction
            + self.converter_switching
            + self.converter_passive
            + self.fan
            + self.ac
            + self.balancing
    }

    pub fn cooling(&self) -> f64 {
        self.fan + self.ac
    }

    pub fn converter(&self) -> f64 {
        self.converter_conduction + self.converter_switching + self.converter_passive
    }

    /// `grid_in - grid_out - delta_stored - losses`.
    pub fn residual(&self) -> f64 {
        self.grid_in - self.grid_out - self.delta_stored - self.losses()
    }

    pub fn relative_residual(&self) -> f64 {
        let scale = self.grid_in.abs().max(self.grid_out.abs()).max(self.losses().abs());
        if scale == 0.0 {
            0.0
        } else {
            self.residual().abs() / scale
        }
    }

    /// Round-trip efficiency at the grid interface.
    pub fn round_trip_efficiency(&self) -> f64 {
        if self.grid_in > 0.0 {
            self.grid_out / self.grid_in
        } else {
            f64::NAN
        }
    }

    /// Books the grid side of one step given the battery terminal power
    /// `p_dc` (W, positive when discharging).
    pub fn book_grid(&mut self, p_dc: f64, converter: f64, auxiliary: f64, dt: f64, discharging: bool) {
        let net = p_dc - converter - auxiliary;
        if net >= 0.0 {
            self.grid_out += net * dt;
        } else {
            self.grid_in -= net * dt;
        }
        if discharging {
            self.discharge_out += net * dt;
        }
        if p_dc >= 0.0 {
            self.dc_out += p_dc * dt;
        } else {
            self.dc_in -= p_dc * dt;
        }
    }

    pub fn add(&mut self, o: &Ledger) {
        self.grid_in += o.grid_in;
        self.grid_out += o.grid_out;
        self.delta_stored += o.delta_stored;
        self.cell_ohmic += o.cell_ohmic;
        self.cell_reaction += o.cell_reaction;
        self.contact += o.contact;
        self.converter_conduction += o.converter_conduction;
        self.converter_switching += o.converter_switching;
        self.converter_passive += o.converter_passive;
        self.fan += o.fan;
        self.ac += o.ac;
        self.balancing += o.balancing;
        self.discharge_out += o.discharge_out;
        self.dc_in += o.dc_in;
        self.dc_out += o.dc_out;
        self.cell_throughput += o.cell_throughput;
        self.sei_mol += o.sei_mol;
        self.lam_mol += o.lam_mol;
    }
}

/// Mean, standard deviation and extremes of a weighted sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn nan() -> Self {
        Self {
            mean: f64::NAN,
            sd: f64::NAN,
            min: f64::NAN,
            max: f64::NAN,
        }
    }

    /// Population statistics of `values` with integer `weights`.
    pub fn weighted(values: &[f64], weights: &[usize]) -> Self {
        let w: f64 = weights.iter().map(|&k| k as f64).sum();
        if values.is_empty() || w == 0.0 {
            return Self::nan();
        }
        let mean = values.iter().zip(weights).map(|(v, &k)| v * k as f64).sum::<f64>() / w;
        let var = values.iter().zip(weights).map(|(v, &k)| (v - mean).powi(2) * k as f64).sum::<f64>() / w;
        Self {
            mean,
            sd: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Per-cycle summary row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub cycle: usize,
    /// Simulated time at the end of the cycle (s).
    pub time: f64,
    /// Cumulative full equivalent cycles.
    pub fec: f64,
    pub round_trip_efficiency: f64,
    /// Discharge export over the nominal energy capacity.
    pub usable_energy: f64,
    pub capacity: Stats,
    /// Time-averaged mean cell temperature (K).
    pub temperature_mean: f64,
    pub temperature_min: f64,
    pub temperature_max: f64,
    /// Largest instantaneous cell-to-cell temperature spread (K).
    pub temperature_spread: f64,
    pub ledger: Ledger,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsLog {
    pub rows: Vec<MetricsRow>,
}

impl MetricsLog {
    /// Rows that carry a capacity measurement.
    pub fn capacity_rows(&self) -> impl Iterator<Item = &MetricsRow> {
        self.rows.iter().filter(|r| r.capacity.mean.is_finite())
    }
}
