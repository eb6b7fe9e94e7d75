//! Crack points: where arcs from a base point switch from contracting to
//! covering the circle.

use circle_rds::analysis::{crack_equivariance, crack_law, crack_point, reverse_stationary_measure, OccupationParams};
use circle_rds::circle::CirclePoint;
use circle_rds::homeo::HomeoSpec;
use circle_rds::rds::{IfsModel, NoiseRealization};

fn main() {
    let model = IfsModel::uniform(vec![
        "rotation(0.6180339887)".parse::<HomeoSpec>().unwrap(),
        "sine(0.1)".parse().unwrap(),
    ])
    .unwrap();
    let seed = 1;

    for stream in 0..3 {
        let w = NoiseRealization::new(seed, stream);
        let c = crack_point(&model, &w, CirclePoint::ZERO, 2000, 1e-4);
        println!("realization {stream}: {:?} at {:?} (width {:.1e})", c.status, c.location, c.bracket_width);
    }

    let eq = crack_equivariance(&model, seed, 20, 2, 2000, 1e-4);
    let worst = eq.iter().filter_map(|e| e.residual).fold(0.0, f64::max);
    println!("equivariance over 20 realizations: worst residual {worst:.1e}");

    let law = crack_law(&model, seed, 500, 2000, 1e-4, 64);
    println!(
        "crack law: {} present, max bin mass {:.4} (atom threshold {:.4})",
        law.present, law.max_bin_mass, law.atom_threshold
    );
    let rho = reverse_stationary_measure(
        &model,
        seed,
        &OccupationParams {
            start: CirclePoint::new(0.123),
            burn_in: 100,
            samples: 1000,
            realizations: 500,
            bins: 64,
        },
    )
    .unwrap();
    println!("total variation to the reverse-stationary measure: {:.3}", rho.tv_distance(&law.histogram, 64));
}
