//! The circle SDE dX = sin(2πkx) dt + dW integrated on fixed-point lifts.

use circle_rds::analysis::sync_test;
use circle_rds::circle::{Arc, CirclePoint, Lift};
use circle_rds::sde::{least_period_divisor, witness_path, DriftSpec, SdeModel};

fn main() {
    let h = 1.0 / 256.0;
    let sine1 = SdeModel::new(DriftSpec::sine(1).unwrap(), 1.0, h).unwrap();
    let sine2 = SdeModel::new(DriftSpec::sine(2).unwrap(), 1.0, h).unwrap();

    println!("least period divisor of sine:1 = {}", least_period_divisor(sine1.drift(), 1e-9));
    println!("least period divisor of sine:2 = {}", least_period_divisor(sine2.drift(), 1e-9));

    let v = sync_test(&sine1, CirclePoint::new(0.1), CirclePoint::new(0.6), 1, 500, 50, 1e-4);
    println!("sine:1, T = 50: {:.3} of paths within 1e-4", v.fraction);

    // two lifts half a turn apart stay exactly half a turn apart
    let lo = Lift::new(0.2);
    let rows = sine2.integrate_flow(&sine2.path(1, 0), &[lo, lo.shift(0.5)], 50.0).unwrap();
    let exact = rows.iter().all(|r| r[1].to_bits() - r[0].to_bits() == 1i128 << 63);
    println!("sine:2, gap 1/2 exact at all {} steps: {exact}", rows.len());

    let w = witness_path(&sine1, Arc::new(0.1, 0.4), 100.0).unwrap();
    println!(
        "witness for Arc(0.1 -> 0.4): anchor {:.4}, shorter from t = {:.4}, shortest {:.4}",
        w.anchor, w.contraction_time, w.min_length
    );
    match witness_path(&sine2, Arc::new(0.1, 0.4), 100.0) {
        Ok(_) => unreachable!(),
        Err(e) => println!("sine:2 has no witness: {e}"),
    }
}
