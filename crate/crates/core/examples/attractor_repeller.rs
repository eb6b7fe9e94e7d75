//! The random attractor by pullback, the repeller as crack point, and the
//! collapse of a point cloud onto the attractor.

use circle_rds::analysis::{attractor_equivariance, attractor_repeller, PairParams};
use circle_rds::homeo::HomeoSpec;
use circle_rds::rds::IfsModel;

fn main() {
    let model = IfsModel::uniform(vec![
        "rotation(0.6180339887)".parse::<HomeoSpec>().unwrap(),
        "sine(0.1)".parse().unwrap(),
    ])
    .unwrap();
    let params = PairParams {
        realizations: 20,
        ..PairParams::default()
    };
    let est = attractor_repeller(&model, 1, &params).unwrap();
    for r in est.records.iter().take(5) {
        println!(
            "realization {}: a = {}, r = {:?}, d(a, r) = {:.4}, cloud spread {:.1e}",
            r.stream,
            r.attractor,
            r.repeller.map(|p| p.value()),
            r.pair_distance.unwrap_or(f64::NAN),
            r.cloud_spread
        );
    }
    println!(
        "converged {}/{}, separated {}, smallest d(a, r) {:?}",
        est.converged,
        est.records.len(),
        est.separated,
        est.min_pair_distance
    );
    let shifted = attractor_equivariance(&model, 1, &params, 1).unwrap();
    println!("a(θω) against f(a(ω)): worst {:.1e}", shifted.iter().copied().fold(0.0, f64::max));
}
