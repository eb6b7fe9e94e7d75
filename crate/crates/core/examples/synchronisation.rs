//! Synchronisation by noise for a rotation and a sine map chosen at random,
//! against two rotations, which never synchronise.

use circle_rds::analysis::{
    compressibility_test, local_stability_test, lyapunov_exponent, minimality_check, sync_test, Direction,
};
use circle_rds::circle::{Arc, CirclePoint};
use circle_rds::homeo::HomeoSpec;
use circle_rds::rds::{IfsModel, NoiseRealization};

fn ifs(generators: &[&str]) -> IfsModel {
    IfsModel::uniform(generators.iter().map(|g| g.parse::<HomeoSpec>().unwrap()).collect()).unwrap()
}

fn main() {
    let seed = 1;
    let p = CirclePoint::new;
    for model in [ifs(&["rotation(0.6180339887)", "sine(0.1)"]), ifs(&["rotation(0.6180339887)", "rotation(0.4142135624)"])] {
        let names: Vec<String> = model.generators().iter().map(|g| g.to_string()).collect();
        println!("{}", names.join(" | "));
        println!("  common fixed points: {}", model.deterministic_fixed_points().points().len());
        let reverse = minimality_check(&model, Direction::Reverse, 256, 4096);
        println!("  reverse minimal at 256 cells: {}", reverse.minimal);
        let arcs = [Arc::new(0.0, 0.5), Arc::new(0.9, 0.85)];
        for w in compressibility_test(&model, &arcs, seed, 100, 100) {
            println!("  arc {:?}: shorter in some probe: {} (time {:?})", w.arc, w.found, w.time);
        }
        let v = sync_test(&model, p(0.1), p(0.6), seed, 500, 500, 1e-6);
        println!(
            "  sync fraction {:.3}, median distance at T=500 {:.2e}, gap never changed in {} realizations",
            v.fraction, v.median_curve[500], v.constant_gap_realizations
        );
        let s = local_stability_test(&model, p(0.3), seed, 500, 500, &[0.1, 0.01, 0.001], 1e-4);
        println!("  arcs around 0.3 contracting, by radius {:?}: {:?}", s.radii, s.fractions);
        let l = lyapunov_exponent(&model, &NoiseRealization::new(seed, 0), p(0.3), 100_000).unwrap();
        println!("  Lyapunov exponent {l:.4}");
    }
}
