//! Transmission points along the UAV path.
//!
//! Two mobility models are provided: an Archimedes spiral from the cell
//! centre to the edge, sampled at equal flight-time spacing, and a random
//! chord walk that bounces between points on the cell boundary. Arbitrary
//! waypoint lists round-trip through a small CSV format (`n,x_m,y_m,h_m`).

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One transmission point of the UAV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    /// 1-based index along the trajectory.
    pub n: usize,
    pub x: f64,
    pub y: f64,
    /// Altitude in metres.
    pub h_a: f64,
    /// Horizontal distance to the base station, `sqrt(x² + y²)`.
    pub r_a: f64,
}

impl TrajectoryPoint {
    pub fn new(n: usize, x: f64, y: f64, h_a: f64) -> Self {
        Self {
            n,
            x,
            y,
            h_a,
            r_a: x.hypot(y),
        }
    }

    /// Same horizontal position at another altitude.
    pub fn at_height(&self, h_a: f64) -> Self {
        Self { h_a, ..*self }
    }
}

/// Archimedes spiral `r = (R / 2πM) φ`, flown at speed `v` with one
/// transmission every `T` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct SpiralConfig {
    /// Number of rounds `M` before reaching the cell edge.
    pub rounds: u32,
    pub speed: f64,
    pub period: f64,
    pub cell_radius: f64,
    pub height: f64,
    /// Optional per-point altitude, indexed by `n - 1`.
    pub heights: Option<Vec<f64>>,
}

impl SpiralConfig {
    /// 3 rounds over a 500 m cell at 15 m/s, transmitting every 30 s.
    pub fn reference(height: f64) -> Self {
        Self {
            rounds: 3,
            speed: 15.0,
            period: 30.0,
            cell_radius: 500.0,
            height,
            heights: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.rounds < 1 {
            return Err(Error::config("spiral needs at least one round"));
        }
        if !(self.speed > 0.0) || !(self.period > 0.0) || !(self.cell_radius > 0.0) {
            return Err(Error::config(
                "spiral speed, period and radius must be positive",
            ));
        }
        Ok(())
    }

    /// Total arc length of the spiral from the centre to the edge.
    pub fn arc_length(&self) -> f64 {
        let phi = 2.0 * PI * self.rounds as f64;
        self.cell_radius * (phi * (1.0 + phi * phi).sqrt() + phi.asinh()) / (2.0 * phi)
    }
}

/// Number of transmissions along the spiral: arc length over `v T`, floored.
pub fn spiral_point_count(cfg: &SpiralConfig) -> Result<usize> {
    cfg.validate()?;
    let n = (cfg.arc_length() / (cfg.speed * cfg.period)).floor();
    if n < 1.0 {
        return Err(Error::config(
            "spiral is shorter than one transmission period",
        ));
    }
    Ok(n as usize)
}

/// Transmission points `r[n] = R sqrt(n/N)`, `n = 1..=N`, placed on the spiral.
pub fn spiral_points(cfg: &SpiralConfig) -> Result<Vec<TrajectoryPoint>> {
    let count = spiral_point_count(cfg)?;
    if let Some(h) = &cfg.heights {
        if h.len() != count {
            return Err(Error::config(format!(
                "{} per-point heights given for {count} spiral points",
                h.len()
            )));
        }
    }
    let turns = 2.0 * PI * cfg.rounds as f64;
    Ok((1..=count)
        .map(|n| {
            let r = if n == count {
                cfg.cell_radius
            } else {
                cfg.cell_radius * (n as f64 / count as f64).sqrt()
            };
            let phi = turns * r / cfg.cell_radius;
            let h = cfg.heights.as_ref().map_or(cfg.height, |hs| hs[n - 1]);
            TrajectoryPoint {
                n,
                x: r * phi.cos(),
                y: r * phi.sin(),
                h_a: h,
                r_a: r,
            }
        })
        .collect())
}

/// Random walk along chords of the cell: straight flight at a random inward
/// heading until the boundary, then a fresh inward heading.
#[derive(Debug, Clone, PartialEq)]
pub struct ChordWalkConfig {
    pub seed: u64,
    pub n_points: usize,
    pub speed: f64,
    pub period: f64,
    pub cell_radius: f64,
    pub height: f64,
}

/// A direction change on the cell boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryTurn {
    pub x: f64,
    pub y: f64,
    /// Heading angle (radians, from +x) flown after the turn.
    pub heading: f64,
    /// Index `n` of the first point recorded after this turn.
    pub next_point: usize,
}

/// Full output of a chord walk: the recorded points and every boundary turn,
/// starting with the initial heading at the start point.
#[derive(Debug, Clone, PartialEq)]
pub struct ChordWalk {
    pub points: Vec<TrajectoryPoint>,
    pub turns: Vec<BoundaryTurn>,
}

fn inward_heading(rng: &mut ChaCha8Rng, x: f64, y: f64) -> f64 {
    let normal = (-y).atan2(-x);
    // uniform on the open half-plane of inward directions
    let mut u: f64 = rng.random();
    while u == 0.0 {
        u = rng.random();
    }
    normal - PI / 2.0 + PI * u
}

/// Distance along `(dx, dy)` from an interior point to the circle of radius `r`.
fn distance_to_boundary(x: f64, y: f64, dx: f64, dy: f64, r: f64) -> f64 {
    // |p + t d|² = r², |d| = 1
    let b = x * dx + y * dy;
    let c = x * x + y * y - r * r;
    let disc = (b * b - c).max(0.0);
    let root = disc.sqrt();
    // stable larger root
    if b >= 0.0 {
        let t = -b - root;
        if t != 0.0 {
            c / t
        } else {
            0.0
        }
    } else {
        -b + root
    }
}

/// Runs the chord walk and returns points together with the boundary turns.
pub fn chord_walk(cfg: &ChordWalkConfig) -> Result<ChordWalk> {
    if cfg.n_points < 1 {
        return Err(Error::config("chord walk needs at least one point"));
    }
    if !(cfg.speed > 0.0) || !(cfg.period > 0.0) || !(cfg.cell_radius > 0.0) {
        return Err(Error::config(
            "chord walk speed, period and radius must be positive",
        ));
    }
    let radius = cfg.cell_radius;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start: f64 = rng.random::<f64>() * 2.0 * PI;
    let (mut x, mut y) = (radius * start.cos(), radius * start.sin());
    let mut heading = inward_heading(&mut rng, x, y);
    let mut turns = vec![BoundaryTurn {
        x,
        y,
        heading,
        next_point: 1,
    }];
    let step = cfg.speed * cfg.period;
    let mut points = Vec::with_capacity(cfg.n_points);

    while points.len() < cfg.n_points {
        let mut remaining = step;
        loop {
            let (dx, dy) = (heading.cos(), heading.sin());
            let to_edge = distance_to_boundary(x, y, dx, dy, radius);
            if remaining <= to_edge {
                x += remaining * dx;
                y += remaining * dy;
                break;
            }
            // reach the boundary, turn, keep flying for the rest of the period
            x += to_edge * dx;
            y += to_edge * dy;
            let r = x.hypot(y);
            x *= radius / r;
            y *= radius / r;
            remaining -= to_edge;
            heading = inward_heading(&mut rng, x, y);
            turns.push(BoundaryTurn {
                x,
                y,
                heading,
                next_point: points.len() + 1,
            });
        }
        let r = x.hypot(y);
        if r > radius {
            x *= radius / r;
            y *= radius / r;
        }
        let mut p = TrajectoryPoint::new(points.len() + 1, x, y, cfg.height);
        p.r_a = p.r_a.min(radius);
        points.push(p);
    }
    Ok(ChordWalk { points, turns })
}

pub fn chord_walk_points(cfg: &ChordWalkConfig) -> Result<Vec<TrajectoryPoint>> {
    Ok(chord_walk(cfg)?.points)
}

/// Header of the trajectory CSV format.
pub const CSV_HEADER: [&str; 4] = ["n", "x_m", "y_m", "h_m"];

/// Writes points as `n,x_m,y_m,h_m` with shortest round-trip float formatting.
pub fn write_csv<W: Write>(writer: W, points: &[TrajectoryPoint]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for p in points {
        w.write_record([
            p.n.to_string(),
            p.x.to_string(),
            p.y.to_string(),
            p.h_a.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trajectory CSV; `r_A` is recomputed from the coordinates.
///
/// Indices must be strictly increasing and every point must lie inside the
/// cell of radius `cell_radius` (boundary allowed).
pub fn read_csv<R: Read>(reader: R, cell_radius: f64) -> Result<Vec<TrajectoryPoint>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::config(format!(
            "trajectory CSV header must be {}, got {}",
            CSV_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut points: Vec<TrajectoryPoint> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let field = |k: usize| -> Result<&str> {
            rec.get(k).ok_or_else(|| {
                Error::config(format!("line {line}: missing column {}", CSV_HEADER[k]))
            })
        };
        let n: usize = field(0)?.parse().map_err(|_| {
            Error::config(format!(
                "line {line}: bad index {:?}",
                field(0).unwrap_or("")
            ))
        })?;
        let num = |k: usize| -> Result<f64> {
            let s = field(k)?;
            s.parse().map_err(|_| {
                Error::config(format!("line {line}: bad {} value {s:?}", CSV_HEADER[k]))
            })
        };
        let p = TrajectoryPoint::new(n, num(1)?, num(2)?, num(3)?);
        if let Some(prev) = points.last() {
            if p.n <= prev.n {
                return Err(Error::config(format!(
                    "line {line}: index {} not increasing",
                    p.n
                )));
            }
        }
        if p.r_a > cell_radius * (1.0 + 1e-12) {
            return Err(Error::config(format!(
                "line {line}: point at r = {} lies outside the cell",
                p.r_a
            )));
        }
        points.push(p);
    }
    if points.is_empty() {
        return Err(Error::config("trajectory CSV has no points"));
    }
    Ok(points)
}
