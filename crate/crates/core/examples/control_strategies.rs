//! Fan and AC commands of the five control strategies over a temperature
//! sweep, with a hot spot 3 K above the local reading.

use gridtwin::celsius;
use gridtwin::thermal_control::{ac_command, fan_command, ControlStrategy, ControlVariant, Latch};

fn main() {
    let temps: Vec<f64> = (0..=8).map(|k| 16.0 + 3.0 * k as f64).collect();
    print!("{:<26}", "strategy");
    for t in &temps {
        print!("{t:>10.0}");
    }
    println!();
    for v in ControlVariant::ALL {
        let s = ControlStrategy::new(v);
        let (mut fan_latch, mut ac_latch) = (Latch::default(), Latch::default());
        let mut row = format!("{:<26}", format!("{} {}", v.number(), v.name()));
        for t in &temps {
            let local = celsius(*t);
            let f = fan_command(&s, local, local + 3.0, &mut fan_latch);
            let a = ac_command(&s, local, local + 3.0, &mut ac_latch);
            row.push_str(&format!("{:>10}", format!("{f:.2}/{a:.2}")));
        }
        println!("{row}");
    }
    println!("(fan/AC command, rising temperature)");
}
