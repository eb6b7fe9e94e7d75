//! Stationary measures, contraction probabilities and Birkhoff averages.

use circle_rds::analysis::{
    birkhoff_average, lemma34_check, martingale_check, reverse_stationary_measure, stationary_measure, OccupationParams,
};
use circle_rds::circle::{Arc, CirclePoint};
use circle_rds::homeo::HomeoSpec;
use circle_rds::rds::{IfsModel, NoiseRealization};

fn main() {
    let model = IfsModel::uniform(vec![
        "rotation(0.6180339887)".parse::<HomeoSpec>().unwrap(),
        "sine(0.1)".parse().unwrap(),
    ])
    .unwrap();
    let seed = 1;
    let params = OccupationParams {
        start: CirclePoint::new(0.123),
        burn_in: 100,
        samples: 1000,
        realizations: 1000,
        bins: 64,
    };
    let forward = stationary_measure(&model, seed, &params);
    let reverse = reverse_stationary_measure(&model, seed, &params).unwrap();
    let j = Arc::new(0.0, 0.5);
    println!("stationary mass of {j:?}: {:.4}", forward.arc_mass(&j));
    println!("reverse-stationary mass of {j:?}: {:.4}", reverse.arc_mass(&j));
    println!("spreads: {:.4} and {:.4}", forward.spread(), reverse.spread());

    for arc in [j, j.complement()] {
        let c = lemma34_check(&model, &reverse, arc, seed, 2000, 2000, 1e-4);
        println!(
            "{arc:?}: contracted in {:.4} of realizations, predicted {:.4}",
            c.empirical, c.predicted
        );
    }

    let m = martingale_check(&model, &reverse, j, seed, 20, 20, 2000, 10);
    println!("martingale: max deviation {:.4}, bound {:.4}", m.max_deviation, m.bound);

    for x in [0.1, 0.7] {
        let avg = birkhoff_average(&model, &NoiseRealization::new(seed, 0), CirclePoint::new(x), j, 100_000);
        println!("time average from {x}: {avg:.4}");
    }
}
