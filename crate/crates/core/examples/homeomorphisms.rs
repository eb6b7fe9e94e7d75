//! Parsing circle homeomorphisms, inverting them and finding fixed points.

use circle_rds::circle::{d, CirclePoint};
use circle_rds::homeo::HomeoSpec;

fn main() {
    let maps = [
        "rotation(0.6180339887)",
        "sine(0.1)",
        "mobius(0.0, 0.3, 0.2)",
        "pwl[(0,0),(0.5,0.3)]",
        "compose[rotation(0.95), sine(0.1), rotation(0.05)]",
    ];
    let x = CirclePoint::new(0.37);
    for text in maps {
        let f: HomeoSpec = text.parse().expect("valid map");
        let y = f.apply(x);
        let back = f.apply_inverse(y);
        println!("{f}");
        println!("  f(0.37) = {y}, round trip error {:.1e}", d(back, x));
        println!("  f'(0.37) = {:.6}", f.derivative(x));
        for p in f.fixed_points().points() {
            println!("  fixed point {} ({:?}, derivative {:.4})", p.point, p.stability, p.derivative);
        }
        println!("  simple: {:?}", f.classify_simple(1000, 1e-9));
    }

    match "sine(0.5)".parse::<HomeoSpec>() {
        Ok(_) => unreachable!(),
        Err(e) => println!("sine(0.5) is rejected: {e}"),
    }
}
