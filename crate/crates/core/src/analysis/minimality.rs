use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::circle::{d_plus_bits, CirclePoint};
use crate::rds::IfsModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Words in the generators.
    Forward,
    /// Words in the inverse generators.
    Reverse,
}

/// Cell-level reachability under the generators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimalityEvidence {
    pub direction: Direction,
    pub grid: usize,
    pub max_word_length: usize,
    /// Every cell reaches every cell within `max_word_length` maps.
    pub minimal: bool,
    /// Longest shortest word needed between any two cells, if all are reachable.
    pub depth: Option<usize>,
    /// A closed class of cells that is not the whole circle.
    pub obstruction: Option<Vec<usize>>,
}

fn cell_start(c: usize, grid: usize) -> CirclePoint {
    CirclePoint::from_bits(((c as u128) << 64).div_euclid(grid as u128) as u64)
}

fn cell_of(bits: u128, grid: usize) -> usize {
    ((bits * grid as u128) >> 64) as usize
}

/// Cells met by the image of `[c/G, (c+1)/G)`.
fn image_cells(f: impl Fn(CirclePoint) -> CirclePoint, c: usize, grid: usize) -> Vec<usize> {
    let ys = f(cell_start(c, grid));
    let ye = f(cell_start((c + 1) % grid, grid));
    let len = d_plus_bits(ys, ye) as u128;
    let first = cell_of(ys.to_bits() as u128, grid);
    if len == 0 {
        return vec![first];
    }
    let last = cell_of(ys.to_bits() as u128 + len - 1, grid);
    (first..=last).map(|k| k % grid).collect()
}

/// Builds the graph "cell `i` → every cell its image under some generator
/// meets" on `grid` equal cells and checks that each cell reaches each other
/// cell within `max_word_length` steps. Reaching is an over-approximation of
/// point dynamics at resolution `1/grid`, so a positive answer is evidence,
/// while a closed proper class is an obstruction at that resolution.
pub fn minimality_check(model: &IfsModel, direction: Direction, grid: usize, max_word_length: usize) -> MinimalityEvidence {
    assert!(grid >= 2);
    let edges: Vec<Vec<usize>> = (0..grid)
        .map(|c| {
            let mut out: Vec<usize> = model
                .generators()
                .iter()
                .flat_map(|g| match direction {
                    Direction::Forward => image_cells(|x| g.apply(x), c, grid),
                    Direction::Reverse => image_cells(|x| g.apply_inverse(x), c, grid),
                })
                .collect();
            out.sort_unstable();
            out.dedup();
            out
        })
        .collect();

    // BFS depth from every cell; usize::MAX marks unreachable
    let depths: Vec<Vec<usize>> = (0..grid)
        .map(|s| {
            let mut depth = vec![usize::MAX; grid];
            depth[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(c) = queue.pop_front() {
                for &n in &edges[c] {
                    if depth[n] == usize::MAX {
                        depth[n] = depth[c] + 1;
                        queue.push_back(n);
                    }
                }
            }
            depth
        })
        .collect();

    let longest = depths.iter().flatten().copied().max().unwrap_or(0);
    let minimal = longest <= max_word_length;
    let obstruction = if longest == usize::MAX {
        closed_class(&depths)
    } else {
        None
    };
    MinimalityEvidence {
        direction,
        grid,
        max_word_length,
        minimal,
        depth: (longest != usize::MAX).then_some(longest),
        obstruction,
    }
}

/// The smallest set of cells closed under reachability that is not everything.
fn closed_class(depths: &[Vec<usize>]) -> Option<Vec<usize>> {
    let grid = depths.len();
    (0..grid)
        .map(|s| (0..grid).filter(|&t| depths[s][t] != usize::MAX).collect::<Vec<_>>())
        .filter(|reach| reach.len() < grid)
        .min_by_key(|reach| reach.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homeo::HomeoSpec;

    #[test]
    fn irrational_rotation_is_minimal() {
        let m = IfsModel::singleton(HomeoSpec::rotation(2f64.sqrt() - 1.0).unwrap());
        let e = minimality_check(&m, Direction::Forward, 256, 4096);
        assert!(e.minimal, "{e:?}");
        assert!(minimality_check(&m, Direction::Reverse, 256, 4096).minimal);
    }

    #[test]
    fn sine_is_not_minimal() {
        let m = IfsModel::singleton(HomeoSpec::sine(0.1).unwrap());
        let e = minimality_check(&m, Direction::Forward, 256, 4096);
        assert!(!e.minimal);
        let cells = e.obstruction.unwrap();
        assert!(cells.contains(&128) || cells.contains(&127), "{cells:?}");
        assert!(cells.len() < 8);
        // the inverse map traps cells at the repeller instead
        let r = minimality_check(&m, Direction::Reverse, 256, 4096);
        let cells = r.obstruction.unwrap();
        assert!(cells.contains(&0) || cells.contains(&255), "{cells:?}");
    }

    #[test]
    fn half_turn_is_not_minimal() {
        let m = IfsModel::singleton(HomeoSpec::rotation(0.5).unwrap());
        let e = minimality_check(&m, Direction::Forward, 256, 4096);
        assert!(!e.minimal);
        assert_eq!(e.obstruction.unwrap().len(), 2);
    }

    #[test]
    fn word_length_bound_is_respected() {
        let m = IfsModel::singleton(HomeoSpec::rotation(2f64.sqrt() - 1.0).unwrap());
        let e = minimality_check(&m, Direction::Forward, 256, 3);
        assert!(!e.minimal);
        assert!(e.depth.unwrap() > 3);
        assert!(e.obstruction.is_none());
    }
}
