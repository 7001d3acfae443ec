//! CSV files written by a run.
//!
//! | file | columns |
//! |------|---------|
//! | `metrics.csv` | [`METRICS_COLUMNS`] |
//! | `ledger.csv` | `cycle` then [`LEDGER_COLUMNS`] then `residual` |
//! | `temperatures.csv` | `time`, `container`, `cell_0` … `cell_{n-1}` (K) |
//! | `capacity_hist_<cycle>.csv` | `bin_low`, `bin_high`, `count` |
//! | `traces.csv` | `time`, `pack_current`, `pack_voltage`, `current_k` …, `voltage_k` …, `contact_drop_k` … |
//!
//! Numbers use Rust's shortest round-trip formatting.

use std::path::Path;

use crate::sim_engine::{CapacitySample, Engine, Ledger};
use crate::{Error, Result};

pub const METRICS_COLUMNS: [&str; 17] = [
    "cycle",
    "time",
    "fec",
    "round_trip_efficiency",
    "usable_energy",
    "capacity_mean",
    "capacity_sd",
    "capacity_min",
    "capacity_max",
    "temperature_mean",
    "temperature_min",
    "temperature_max",
    "temperature_spread",
    "grid_in",
    "grid_out",
    "cooling",
    "losses",
];

pub const LEDGER_COLUMNS: [&str; 18] = [
    "grid_in",
    "grid_out",
    "delta_stored",
    "cell_ohmic",
    "cell_reaction",
    "contact",
    "converter_conduction",
    "converter_switching",
    "converter_passive",
    "fan",
    "ac",
    "balancing",
    "discharge_out",
    "dc_in",
    "dc_out",
    "cell_throughput",
    "sei_mol",
    "lam_mol",
];

/// Width of a capacity histogram bin (fraction of nominal).
pub const HIST_BIN: f64 = 0.001;

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(format!("{}: {e}", path.display())))
}

fn write_rows(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(r.iter().map(|x| x.to_string())).map_err(|e| csv_err(path, e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn ledger_values(l: &Ledger) -> [f64; 18] {
    [
        l.grid_in,
        l.grid_out,
        l.delta_stored,
        l.cell_ohmic,
        l.cell_reaction,
        l.contact,
        l.converter_conduction,
        l.converter_switching,
        l.converter_passive,
        l.fan,
        l.ac,
        l.balancing,
        l.discharge_out,
        l.dc_in,
        l.dc_out,
        l.cell_throughput,
        l.sei_mol,
        l.lam_mol,
    ]
}

pub fn write_metrics(engine: &Engine, path: &Path) -> Result<()> {
    let header: Vec<String> = METRICS_COLUMNS.iter().map(|s| s.to_string()).collect();
    let rows = engine.log.rows.iter().map(|r| {
        vec![
            r.cycle as f64,
            r.time,
            r.fec,
            r.round_trip_efficiency,
            r.usable_energy,
            r.capacity.mean,
            r.capacity.sd,
            r.capacity.min,
            r.capacity.max,
            r.temperature_mean,
            r.temperature_min,
            r.temperature_max,
            r.temperature_spread,
            r.ledger.grid_in,
            r.ledger.grid_out,
            r.ledger.cooling(),
            r.ledger.losses(),
        ]
    });
    write_rows(path, &header, rows)
}

pub fn write_ledger(engine: &Engine, path: &Path) -> Result<()> {
    let mut header = vec!["cycle".to_string()];
    header.extend(LEDGER_COLUMNS.iter().map(|s| s.to_string()));
    header.push("residual".into());
    let rows = engine.log.rows.iter().map(|r| {
        let mut v = vec![r.cycle as f64];
        v.extend(ledger_values(&r.ledger));
        v.push(r.ledger.residual());
        v
    });
    write_rows(path, &header, rows)
}

pub fn write_temperatures(engine: &Engine, path: &Path) -> Result<()> {
    let n = engine.root.model_cells();
    let mut header = vec!["time".to_string(), "container".to_string()];
    header.extend((0..n).map(|k| format!("cell_{k}")));
    let rows = engine.temperatures.iter().map(|r| {
        let mut v = vec![r.time, r.container];
        v.extend(&r.cells);
        v
    });
    write_rows(path, &header, rows)
}

pub fn write_traces(engine: &Engine, path: &Path) -> Result<()> {
    let n = engine.root.model_cells();
    let drops = engine.traces.first().map_or(0, |t| t.contact_drops.len());
    let mut header = vec!["time".to_string(), "pack_current".into(), "pack_voltage".into()];
    header.extend((0..n).map(|k| format!("current_{k}")));
    header.extend((0..n).map(|k| format!("voltage_{k}")));
    header.extend((0..drops).map(|k| format!("contact_drop_{k}")));
    let rows = engine.traces.iter().map(|r| {
        let mut v = vec![r.time, r.pack_current, r.pack_voltage];
        v.extend(&r.currents);
        v.extend(&r.voltages);
        v.extend(&r.contact_drops);
        v
    });
    write_rows(path, &header, rows)
}

/// Histogram rows `(bin_low, bin_high, count)` with bins aligned to
/// multiples of [`HIST_BIN`] and counts in represented cells.
pub fn histogram(sample: &CapacitySample) -> Vec<(f64, f64, usize)> {
    let mut bins: std::collections::BTreeMap<i64, usize> = Default::default();
    for (c, w) in sample.capacities.iter().zip(&sample.weights) {
        *bins.entry((c / HIST_BIN).floor() as i64).or_default() += w;
    }
    bins.into_iter()
        .map(|(k, n)| (k as f64 * HIST_BIN, (k + 1) as f64 * HIST_BIN, n))
        .collect()
}

pub fn write_histogram(sample: &CapacitySample, path: &Path) -> Result<()> {
    let header = vec!["bin_low".to_string(), "bin_high".into(), "count".into()];
    write_rows(path, &header, histogram(sample).into_iter().map(|(a, b, n)| vec![a, b, n as f64]))
}

/// Writes every file that has content into `dir`.
pub fn write_all(engine: &Engine, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_metrics(engine, &dir.join("metrics.csv"))?;
    write_ledger(engine, &dir.join("ledger.csv"))?;
    write_temperatures(engine, &dir.join("temperatures.csv"))?;
    for s in &engine.capacities {
        write_histogram(s, &dir.join(format!("capacity_hist_{}.csv", s.cycle)))?;
    }
    if !engine.traces.is_empty() {
        write_traces(engine, &dir.join("traces.csv"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_bins_and_weights() {
        let s = CapacitySample {
            cycle: 3,
            capacities: vec![0.9504, 0.9506, 0.9519],
            weights: vec![1, 2, 5],
        };
        let h = histogram(&s);
        assert_eq!(h.len(), 2);
        assert_eq!(h[0].2, 3);
        assert_eq!(h[1].2, 5);
        assert!((h[1].0 - 0.951).abs() < 1e-12);
    }
}
