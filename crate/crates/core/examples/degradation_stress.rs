//! Evaluates particle stresses for a lithiation gradient and the SEI side
//! reaction rate as the film thickens.

use gridtwin::cell_model::diffusion::RadialGrid;
use gridtwin::cell_model::CellParams;
use gridtwin::celsius;
use gridtwin::degradation::{particle_stresses, sei_current};

fn main() -> gridtwin::Result<()> {
    let params = CellParams::default();
    let radius = params.anode.particle_radius;
    let grid = RadialGrid::new(radius, 10)?;
    // surface richer than the centre, as during charging
    let profile: Vec<f64> = (0..grid.nodes())
        .map(|k| 15_000.0 + 8_000.0 * (grid.node_radius(k) / radius).powi(2))
        .collect();
    let s = particle_stresses(&profile, &grid, &params.stress.anode)?;
    println!("{:>8} {:>12} {:>12} {:>12}", "r/R", "radial_MPa", "tangent_MPa", "hydro_MPa");
    for k in 0..grid.nodes() {
        println!(
            "{:>8.2} {:>12.3} {:>12.3} {:>12.3}",
            grid.node_radius(k) / radius,
            s.radial[k] / 1e6,
            s.tangential[k] / 1e6,
            s.hydrostatic[k] / 1e6
        );
    }

    println!("\n{:>12} {:>14}", "sei_nm", "i_sei_A_m2");
    for nm in [5.0, 10.0, 20.0, 50.0, 100.0] {
        let i = sei_current(0.0, 0.1, nm * 1e-9, celsius(25.0), &params.sei, params.reference_temperature)?;
        println!("{nm:>12.0} {i:>14.3e}");
    }
    Ok(())
}
