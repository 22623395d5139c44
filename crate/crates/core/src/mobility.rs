//! Client placement, Gauss-Markov mobility and cluster membership.
//!
//! The simulation area is a `width x height` rectangle tiled by a
//! `cols x rows` grid of cluster rectangles, one per server, indexed
//! row-major from the origin corner. Cells are half-open toward the origin:
//! a point on a shared edge belongs to the cell with the smaller index.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Area {
    width: f64,
    height: f64,
    cols: usize,
    rows: usize,
}

impl Area {
    pub fn new(width: f64, height: f64, cols: usize, rows: usize) -> Result<Self> {
        let mut problems = Vec::new();
        if !(width.is_finite() && width > 0.0) || !(height.is_finite() && height > 0.0) {
            problems.push(format!("area must have positive finite size, got {width} x {height}"));
        }
        if cols == 0 || rows == 0 {
            problems.push(format!("cluster grid must be at least 1 x 1, got {cols} x {rows}"));
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        Ok(Self {
            width,
            height,
            cols,
            rows,
        })
    }

    /// Tiles the area with `clusters` cells, choosing the factorisation
    /// whose cells are closest to square. A 100 x 200 m area with 10
    /// clusters yields a 2 x 5 grid of 50 x 40 m cells.
    pub fn with_clusters(width: f64, height: f64, clusters: usize) -> Result<Self> {
        if clusters == 0 {
            return Err(Error::config("cluster count must be positive"));
        }
        let best = (1..=clusters)
            .filter(|c| clusters.is_multiple_of(*c))
            .map(|cols| (cols, clusters / cols))
            .min_by(|a, b| {
                let skew = |(c, r): (usize, usize)| ((width / c as f64) / (height / r as f64)).ln().abs();
                skew(*a).total_cmp(&skew(*b))
            })
            .expect("1 always divides");
        Self::new(width, height, best.0, best.1)
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.cols, self.rows)
    }

    pub fn cluster_count(&self) -> usize {
        self.cols * self.rows
    }

    pub fn cell_size(&self) -> (f64, f64) {
        (self.width / self.cols as f64, self.height / self.rows as f64)
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    pub fn cluster_rect(&self, n: usize) -> Rect {
        let (cw, ch) = self.cell_size();
        let (col, row) = (n % self.cols, n / self.cols);
        Rect {
            x0: col as f64 * cw,
            y0: row as f64 * ch,
            x1: (col + 1) as f64 * cw,
            y1: (row + 1) as f64 * ch,
        }
    }

    /// Server sites sit at the centre of their cluster.
    pub fn cluster_center(&self, n: usize) -> Point {
        self.cluster_rect(n).center()
    }

    /// Cluster index of a point inside the area. Cell `k` along an axis
    /// covers `(k*size, (k+1)*size]`, except cell 0 which also owns the
    /// origin edge.
    pub fn cluster_of(&self, p: Point) -> usize {
        let (cw, ch) = self.cell_size();
        let col = axis_cell(p.x, cw, self.cols);
        let row = axis_cell(p.y, ch, self.rows);
        row * self.cols + col
    }
}

fn axis_cell(coord: f64, size: f64, count: usize) -> usize {
    if coord <= 0.0 {
        return 0;
    }
    let idx = (coord / size).ceil() as usize;
    idx.saturating_sub(1).min(count - 1)
}

/// Gauss-Markov parameters. None of these are given for the target
/// deployment; the defaults are modest pedestrian values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilityParams {
    /// Velocity memory in `[0, 1]`; 1 is straight-line motion, 0 memoryless.
    pub memory: f64,
    /// Magnitude of each client's mean velocity, m/s.
    pub mean_speed: f64,
    /// Standard deviation of the per-axis Gaussian perturbation, m/s.
    pub perturbation_std: f64,
}

impl Default for MobilityParams {
    fn default() -> Self {
        Self {
            memory: 0.85,
            mean_speed: 1.0,
            perturbation_std: 0.25,
        }
    }
}

impl MobilityParams {
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(0.0..=1.0).contains(&self.memory) {
            v.push(format!("mobility.memory must lie in [0, 1], got {}", self.memory));
        }
        if !(self.mean_speed >= 0.0 && self.mean_speed.is_finite()) {
            v.push(format!("mobility.mean_speed must be >= 0, got {}", self.mean_speed));
        }
        if !(self.perturbation_std >= 0.0 && self.perturbation_std.is_finite()) {
            v.push(format!(
                "mobility.perturbation_std must be >= 0, got {}",
                self.perturbation_std
            ));
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClientState {
    pub id: usize,
    pub position: Point,
    /// Current velocity, m/s per axis.
    pub velocity: Point,
    /// Long-run mean velocity the process reverts to.
    pub mean_velocity: Point,
}

/// Places `count` clients independently and uniformly over the area (a
/// homogeneous Poisson point process conditioned on its count). Each client
/// gets a uniformly random mean heading at `params.mean_speed` and starts
/// moving at that mean velocity.
pub fn init_ppp(area: &Area, count: usize, params: &MobilityParams, seed: u64) -> Result<Vec<ClientState>> {
    if !(area.width > 0.0 && area.height > 0.0) {
        return Err(Error::config("cannot place clients in a zero-size area"));
    }
    let clients = (0..count)
        .map(|id| {
            let mut rng = rng::stream(seed, Stream::Placement, id as u64, 0);
            let position = Point::new(
                rng.random::<f64>() * area.width,
                rng.random::<f64>() * area.height,
            );
            let heading = rng.random::<f64>() * std::f64::consts::TAU;
            let mean_velocity = Point::new(params.mean_speed * heading.cos(), params.mean_speed * heading.sin());
            ClientState {
                id,
                position,
                velocity: mean_velocity,
                mean_velocity,
            }
        })
        .collect();
    Ok(clients)
}

/// One Gauss-Markov step with perturbation drawn from `rng`.
pub fn step_gauss_markov<R: Rng + ?Sized>(
    client: &ClientState,
    area: &Area,
    dt: f64,
    params: &MobilityParams,
    rng: &mut R,
) -> ClientState {
    let wx: f64 = StandardNormal.sample(rng);
    let wy: f64 = StandardNormal.sample(rng);
    let w = Point::new(wx * params.perturbation_std, wy * params.perturbation_std);
    step_with_perturbation(client, area, dt, params.memory, w)
}

/// Deterministic core of the Gauss-Markov step:
/// `v' = m*v + (1-m)*v_mean + sqrt(1-m^2)*w`, then `x' = x + v'*dt`,
/// reflected back into the area. Reflection also flips the matching
/// component of the current and mean velocity, so the client heads away
/// from the wall it hit.
pub fn step_with_perturbation(client: &ClientState, area: &Area, dt: f64, memory: f64, w: Point) -> ClientState {
    let keep = (1.0 - memory * memory).max(0.0).sqrt();
    let vx = memory * client.velocity.x + (1.0 - memory) * client.mean_velocity.x + keep * w.x;
    let vy = memory * client.velocity.y + (1.0 - memory) * client.mean_velocity.y + keep * w.y;

    let (x, fx) = reflect(client.position.x + vx * dt, area.width);
    let (y, fy) = reflect(client.position.y + vy * dt, area.height);
    let sx = if fx { -1.0 } else { 1.0 };
    let sy = if fy { -1.0 } else { 1.0 };

    ClientState {
        id: client.id,
        position: Point::new(x, y),
        velocity: Point::new(sx * vx, sy * vy),
        mean_velocity: Point::new(sx * client.mean_velocity.x, sy * client.mean_velocity.y),
    }
}

/// Folds a coordinate into `[0, max]` by mirror reflection. Returns the
/// folded coordinate and whether the direction of travel is reversed (an
/// odd number of bounces).
fn reflect(coord: f64, max: f64) -> (f64, bool) {
    if (0.0..=max).contains(&coord) {
        return (coord, false);
    }
    // on the unfolded line, [2k*max, (2k+1)*max] are direct copies of the
    // area and the intervals in between are mirror images
    let period = 2.0 * max;
    let folded = coord.rem_euclid(period);
    if folded <= max {
        (folded, false)
    } else {
        ((period - folded).clamp(0.0, max), true)
    }
}

/// Partition of client indices by cluster: `sets[n]` holds the clients
/// inside cluster `n`, in ascending client order.
pub fn cluster_membership(clients: &[ClientState], area: &Area) -> Vec<Vec<usize>> {
    let mut sets = vec![Vec::new(); area.cluster_count()];
    for (m, c) in clients.iter().enumerate() {
        sets[area.cluster_of(c.position)].push(m);
    }
    sets
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn default_area() -> Area {
        Area::with_clusters(100.0, 200.0, 10).unwrap()
    }

    #[test]
    fn default_grid_is_two_by_five() {
        let a = default_area();
        assert_eq!(a.grid(), (2, 5));
        assert_eq!(a.cell_size(), (50.0, 40.0));
    }

    #[test]
    fn zero_size_area_is_rejected() {
        assert!(Area::new(0.0, 10.0, 1, 1).is_err());
        assert!(Area::new(10.0, 10.0, 0, 1).is_err());
    }

    #[test]
    fn ppp_places_everyone_inside() {
        let a = default_area();
        let cs = init_ppp(&a, 200, &MobilityParams::default(), 3).unwrap();
        assert_eq!(cs.len(), 200);
        assert!(cs.iter().all(|c| a.contains(c.position)));
    }

    #[test]
    fn ppp_empty_and_deterministic() {
        let a = default_area();
        assert!(init_ppp(&a, 0, &MobilityParams::default(), 1).unwrap().is_empty());
        let p = init_ppp(&a, 50, &MobilityParams::default(), 99).unwrap();
        let q = init_ppp(&a, 50, &MobilityParams::default(), 99).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn full_memory_is_linear_motion() {
        let a = default_area();
        let c = ClientState {
            id: 0,
            position: Point::new(10.0, 10.0),
            velocity: Point::new(1.0, 0.5),
            mean_velocity: Point::new(-3.0, 2.0),
        };
        let next = step_with_perturbation(&c, &a, 0.1, 1.0, Point::new(0.0, 0.0));
        assert_eq!(next.velocity, c.velocity);
        assert!((next.position.x - 10.1).abs() < 1e-12);
        assert!((next.position.y - 10.05).abs() < 1e-12);
        // memory 1 ignores the perturbation entirely
        let noisy = step_with_perturbation(&c, &a, 0.1, 1.0, Point::new(5.0, -5.0));
        assert_eq!(noisy.velocity, c.velocity);
    }

    #[test]
    fn zero_memory_forgets_previous_velocity() {
        let a = default_area();
        let mean = Point::new(1.0, 0.0);
        let make = |v: Point| ClientState {
            id: 0,
            position: Point::new(50.0, 50.0),
            velocity: v,
            mean_velocity: mean,
        };
        let w = Point::new(0.2, -0.1);
        let a1 = step_with_perturbation(&make(Point::new(9.0, 9.0)), &a, 0.1, 0.0, w);
        let a2 = step_with_perturbation(&make(Point::new(-4.0, 0.0)), &a, 0.1, 0.0, w);
        assert_eq!(a1.velocity, a2.velocity);
        assert_eq!(a1.velocity, Point::new(1.2, -0.1));
    }

    #[test]
    fn outward_motion_at_boundary_is_reflected() {
        let a = default_area();
        let c = ClientState {
            id: 0,
            position: Point::new(100.0, 0.0),
            velocity: Point::new(2.0, -3.0),
            mean_velocity: Point::new(2.0, -3.0),
        };
        let next = step_with_perturbation(&c, &a, 1.0, 1.0, Point::new(0.0, 0.0));
        // 100 + 2 -> mirrored to 98; 0 - 3 -> mirrored to 3
        assert!((next.position.x - 98.0).abs() < 1e-12);
        assert!((next.position.y - 3.0).abs() < 1e-12);
        assert!(next.velocity.x < 0.0 && next.velocity.y > 0.0);
        assert!(a.contains(next.position));
    }

    #[test]
    fn reflect_handles_multiple_bounces() {
        // 25 on a [0,10] axis: 25 -> 20 period -> 5, two bounces, same direction
        assert_eq!(reflect(25.0, 10.0), (5.0, false));
        // 15: one bounce off the far wall
        assert_eq!(reflect(15.0, 10.0), (5.0, true));
        // -3: one bounce off the origin wall
        assert_eq!(reflect(-3.0, 10.0), (3.0, true));
        // -13: off the origin wall, then the far wall
        assert_eq!(reflect(-13.0, 10.0), (7.0, false));
    }

    #[test]
    fn random_steps_stay_inside() {
        let a = Area::new(5.0, 5.0, 1, 1).unwrap();
        let params = MobilityParams {
            memory: 0.3,
            mean_speed: 20.0,
            perturbation_std: 10.0,
        };
        let mut cs = init_ppp(&a, 30, &params, 4).unwrap();
        let mut rng = seeded(5);
        for _ in 0..500 {
            cs = cs.iter().map(|c| step_gauss_markov(c, &a, 0.1, &params, &mut rng)).collect();
            assert!(cs.iter().all(|c| a.contains(c.position)));
        }
    }

    #[test]
    fn all_clients_in_first_cell() {
        let a = default_area();
        let cs: Vec<ClientState> = (0..7)
            .map(|id| ClientState {
                id,
                position: Point::new(1.0 + id as f64, 2.0),
                velocity: Point::new(0.0, 0.0),
                mean_velocity: Point::new(0.0, 0.0),
            })
            .collect();
        let sets = cluster_membership(&cs, &a);
        assert_eq!(sets[0], (0..7).collect::<Vec<_>>());
        assert!(sets[1..].iter().all(Vec::is_empty));
    }

    #[test]
    fn shared_edges_go_to_smaller_index() {
        let a = default_area();
        // vertical edge between cells 0 and 1
        assert_eq!(a.cluster_of(Point::new(50.0, 10.0)), 0);
        // horizontal edge between cells 0 and 2
        assert_eq!(a.cluster_of(Point::new(10.0, 40.0)), 0);
        // corner shared by 0, 1, 2, 3
        assert_eq!(a.cluster_of(Point::new(50.0, 40.0)), 0);
        // outer boundary
        assert_eq!(a.cluster_of(Point::new(100.0, 200.0)), 9);
        assert_eq!(a.cluster_of(Point::new(0.0, 0.0)), 0);
        assert_eq!(a.cluster_of(Point::new(50.0000001, 40.0)), 1);
    }

    #[test]
    fn membership_partitions_random_placements() {
        let a = default_area();
        let mut rng = seeded(11);
        for trial in 0..1000 {
            let count = rng.random_range(0..40);
            let cs = init_ppp(&a, count, &MobilityParams::default(), trial).unwrap();
            let sets = cluster_membership(&cs, &a);
            let mut seen = vec![0u32; count];
            for (n, set) in sets.iter().enumerate() {
                let r = a.cluster_rect(n);
                for &m in set {
                    seen[m] += 1;
                    let p = cs[m].position;
                    // brute-force point-in-rectangle check
                    assert!(p.x >= r.x0 && p.x <= r.x1 && p.y >= r.y0 && p.y <= r.y1);
                }
            }
            assert!(seen.iter().all(|&s| s == 1));
            assert_eq!(sets.iter().map(Vec::len).sum::<usize>(), count);
        }
    }
}
