//! Runs both variants of the `fig5` preset and writes their CSV output to
//! a directory given on the command line (default `out/fig5`).

use std::path::PathBuf;

use gridtwin::cli_io::{csv_out, preset, Scale};
use gridtwin::sim_engine::Engine;

fn main() -> gridtwin::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out/fig5"));
    for v in preset("fig5", Scale::Module)? {
        let mut e = Engine::new(v.scenario)?;
        e.run()?;
        let dir = out.join(&v.name);
        csv_out::write_all(&e, &dir)?;
        let first = e.traces.iter().find(|t| t.pack_current > 0.0).expect("a discharge step");
        let currents: Vec<String> = first.currents.iter().map(|i| format!("{i:.2}")).collect();
        println!("{}: discharge starts with cell currents [{}] A, wrote {}", v.name, currents.join(", "), dir.display());
    }
    Ok(())
}
