//! Samples cell-to-cell variation for 1000 cells and reports the spread of
//! each factor. The same seed always gives the same population.

use gridtwin::variability::{sample_factors, VariationSpec};

fn summary(name: &str, xs: impl Iterator<Item = f64>) {
    let v: Vec<f64> = xs.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let min = v.iter().cloned().fold(f64::MAX, f64::min);
    let max = v.iter().cloned().fold(f64::MIN, f64::max);
    println!("{name:<16} mean {mean:.4}  sd {sd:.4}  range {min:.4}..{max:.4}");
}

fn main() -> gridtwin::Result<()> {
    let spec = VariationSpec::default();
    let f = sample_factors(&spec, 1000)?;
    println!("seed {}", spec.seed);
    summary("capacity", f.iter().map(|c| c.capacity));
    summary("resistance", f.iter().map(|c| c.resistance));
    summary("sei_diffusivity", f.iter().map(|c| c.sei_diffusivity));
    summary("sei_rate", f.iter().map(|c| c.sei_rate));
    summary("lam_rate", f.iter().map(|c| c.lam_rate));
    assert_eq!(f, sample_factors(&spec, 1000)?);
    Ok(())
}
