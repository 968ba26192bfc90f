//! Rapidly-exploring random tree over the voxel occupancy grid, with
//! deterministic seeding and greedy path shortcutting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embodied::voxel::OccupancyGrid;
use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::num::{cast, Real};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RrtParams<S> {
    pub step_m: S,
    pub goal_bias: f64,
    pub max_iters: usize,
    pub goal_tol: S,
    pub seed: u64,
}

impl<S: Real> RrtParams<S> {
    /// Spec defaults: step and goal tolerance at twice the grid resolution.
    pub fn for_grid(grid: &OccupancyGrid<S>, seed: u64) -> Self {
        let two: S = cast(2.0);
        Self {
            step_m: grid.resolution * two,
            goal_bias: 0.1,
            max_iters: 10_000,
            goal_tol: grid.resolution * two,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NavPlan<S> {
    pub waypoints: Vec<Vec3<S>>,
    pub found: bool,
    pub iterations_used: usize,
    pub rng_seed: u64,
}

impl<S: Real> NavPlan<S> {
    pub fn length(&self) -> S {
        self.waypoints.windows(2).map(|w| w[0].distance(w[1])).sum()
    }
}

/// Segment collision check: samples at half-resolution spacing, endpoints
/// included.
pub fn segment_free<S: Real>(grid: &OccupancyGrid<S>, a: Vec3<S>, b: Vec3<S>) -> bool {
    let spacing = grid.resolution * cast(0.5);
    let len = a.distance(b);
    let steps = (len / spacing).to_f64().unwrap().ceil().max(1.0) as usize;
    for i in 0..=steps {
        let t: S = cast(i as f64 / steps as f64);
        if !grid.is_free(a + (b - a) * t) {
            return false;
        }
    }
    true
}

/// Classic RRT: uniform free-space sampling with goal bias, nearest-node
/// extension, half-resolution segment collision checks, greedy shortcut of
/// the extracted path. Deterministic for a given seed.
pub fn plan_rrt<S: Real>(
    grid: &OccupancyGrid<S>,
    start: Vec3<S>,
    goal: Vec3<S>,
    params: &RrtParams<S>,
) -> Result<NavPlan<S>> {
    if !grid.is_free(start) || !grid.is_free(goal) {
        return Err(Error::InvalidEndpoint);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (min, max) = (grid.world_min(), grid.world_max());
    let extent = max - min;
    let sample_free = |rng: &mut ChaCha8Rng| -> Vec3<S> {
        for _ in 0..64 {
            let p = min
                + Vec3::new(
                    extent.x * cast(rng.random::<f64>()),
                    extent.y * cast(rng.random::<f64>()),
                    extent.z * cast(rng.random::<f64>()),
                );
            if grid.is_free(p) {
                return p;
            }
        }
        goal // degenerate grids: fall back to the goal
    };

    let mut nodes: Vec<(Vec3<S>, usize)> = vec![(start, usize::MAX)];
    for iteration in 1..=params.max_iters {
        let target = if rng.random::<f64>() < params.goal_bias {
            goal
        } else {
            sample_free(&mut rng)
        };
        // nearest node, ties to the lower index
        let mut nearest = 0usize;
        let mut best = S::infinity();
        for (i, (p, _)) in nodes.iter().enumerate() {
            let d = p.distance(target);
            if d < best {
                best = d;
                nearest = i;
            }
        }
        let from = nodes[nearest].0;
        let to = if best <= params.step_m {
            target
        } else {
            from + (target - from) * (params.step_m / best)
        };
        if !grid.is_free(to) || !segment_free(grid, from, to) {
            continue;
        }
        nodes.push((to, nearest));
        if to.distance(goal) <= params.goal_tol {
            let mut path = Vec::new();
            let mut cursor = nodes.len() - 1;
            while cursor != usize::MAX {
                path.push(nodes[cursor].0);
                cursor = nodes[cursor].1;
            }
            path.reverse();
            let path = shortcut(grid, path);
            return Ok(NavPlan {
                waypoints: path,
                found: true,
                iterations_used: iteration,
                rng_seed: params.seed,
            });
        }
    }
    Err(Error::NoPathFound { iterations: params.max_iters })
}

/// Greedy shortcut: from each kept waypoint jump to the farthest later
/// waypoint reachable by a free straight segment.
fn shortcut<S: Real>(grid: &OccupancyGrid<S>, path: Vec<Vec3<S>>) -> Vec<Vec3<S>> {
    if path.len() <= 2 {
        return path;
    }
    let mut out = vec![path[0]];
    let mut i = 0usize;
    while i < path.len() - 1 {
        let mut j = path.len() - 1;
        while j > i + 1 {
            if segment_free(grid, path[i], path[j]) {
                break;
            }
            j -= 1;
        }
        out.push(path[j]);
        i = j;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty_grid(n: usize, resolution: f64) -> OccupancyGrid<f64> {
        OccupancyGrid::new(Vec3::zero(), resolution, (n, n, n))
    }

    #[test]
    fn empty_grid_connects_start_and_goal() {
        let grid = empty_grid(32, 0.5);
        let start = Vec3::new(0.5, 0.5, 1.0);
        let goal = Vec3::new(10.0, 0.5, 1.0);
        let params = RrtParams::for_grid(&grid, 7);
        let plan = plan_rrt(&grid, start, goal, &params).unwrap();
        assert!(plan.found);
        assert_eq!(plan.waypoints[0], start);
        assert!(plan.waypoints.last().unwrap().distance(goal) <= params.goal_tol);
        for w in plan.waypoints.windows(2) {
            assert!(segment_free(&grid, w[0], w[1]));
        }
    }

    #[test]
    fn solid_wall_separates_start_from_goal() {
        let mut grid = empty_grid(16, 0.5);
        let mid = grid.dims.0 / 2;
        for iz in 0..grid.dims.2 {
            for iy in 0..grid.dims.1 {
                let idx = grid.index(mid, iy, iz);
                grid.occupied[idx] = true;
            }
        }
        let params = RrtParams { max_iters: 400, ..RrtParams::for_grid(&grid, 3) };
        let err = plan_rrt(
            &grid,
            Vec3::new(1.0, 4.0, 4.0),
            Vec3::new(7.0, 4.0, 4.0),
            &params,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoPathFound { iterations: 400 }));
    }

    #[test]
    fn occupied_endpoint_is_invalid() {
        let mut grid = empty_grid(8, 1.0);
        let idx = grid.index(1, 1, 1);
        grid.occupied[idx] = true;
        let params = RrtParams::for_grid(&grid, 1);
        let err = plan_rrt(
            &grid,
            Vec3::new(1.5, 1.5, 1.5),
            Vec3::new(6.0, 6.0, 6.0),
            &params,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidEndpoint));
    }

    #[test]
    fn identical_seeds_give_identical_paths() {
        let mut grid = empty_grid(24, 0.5);
        // scatter some obstacles
        for k in 0..400usize {
            let i = (k * 2654435761) % grid.occupied.len();
            grid.occupied[i] = true;
        }
        let start = Vec3::new(0.4, 0.4, 0.4);
        let goal = Vec3::new(11.0, 11.0, 11.0);
        if !grid.is_free(start) || !grid.is_free(goal) {
            return; // scatter hit an endpoint; irrelevant for this test
        }
        let params = RrtParams::for_grid(&grid, 99);
        let a = plan_rrt(&grid, start, goal, &params);
        let b = plan_rrt(&grid, start, goal, &params);
        match (a, b) {
            (Ok(pa), Ok(pb)) => assert_eq!(pa, pb),
            (Err(_), Err(_)) => {}
            _ => panic!("nondeterministic outcome"),
        }
    }

    #[test]
    fn shortcut_never_lengthens_the_path() {
        let grid = empty_grid(32, 0.5);
        let zigzag = vec![
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(3.0, 5.0, 1.0),
            Vec3::new(5.0, 1.0, 1.0),
            Vec3::new(7.0, 5.0, 1.0),
            Vec3::new(9.0, 1.0, 1.0),
        ];
        let before: f64 = zigzag.windows(2).map(|w| w[0].distance(w[1])).sum();
        let cut = shortcut(&grid, zigzag.clone());
        let after: f64 = cut.windows(2).map(|w| w[0].distance(w[1])).sum();
        assert!(after <= before + 1e-9);
        assert_eq!(cut.first(), zigzag.first());
        assert_eq!(cut.last(), zigzag.last());
        for w in cut.windows(2) {
            assert!(segment_free(&grid, w[0], w[1]));
        }
    }
}
