//! Runs a preset scenario through the config layer and writes its report,
//! as the `circle-rds` binary does.
//!
//! `cargo run --release --example run_preset -- det-simple /tmp/report`

use std::path::PathBuf;

use circle_rds::presets::preset;
use circle_rds::runner::run;

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "det-simple".into());
    let dir = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join(&name));
    let config = preset(&name).expect("known preset");
    println!("{}", config.to_toml());
    let report = run(&config, None).expect("valid config");
    for check in &report.checks {
        println!("check {}: {}", check.kind, if check.passed { "passed" } else { "failed" });
    }
    println!("status: {:?}", report.status);
    for path in report.write_to(&dir).expect("writable output directory") {
        println!("wrote {}", path.display());
    }
}
