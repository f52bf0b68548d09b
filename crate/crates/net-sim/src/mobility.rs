//! Random-waypoint mobility with lazy position advancement.

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn distance(&self, other: &Position) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Area {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityParams {
    pub speed_min: f64,
    pub speed_max: f64,
    pub pause_ms: u64,
}

/// Per-node movement state. Positions advance lazily: `advance_to` walks the
/// waypoint segments up to the query time, so the number of RNG draws depends
/// only on the trajectory, never on when queries happen.
#[derive(Debug, Clone)]
pub struct MobilityState {
    pub pos: Position,
    pub waypoint: Position,
    pub speed_mps: f64,
    /// Internal clock in fractional milliseconds, so segment arrivals are
    /// not quantized and advancement is independent of query granularity.
    pub pause_until: f64,
    pub updated_at: f64,
}

impl MobilityState {
    pub fn new(pos: Position, params: &MobilityParams, area: Area, rng: &mut impl Rng) -> Self {
        let mut m = MobilityState {
            pos,
            waypoint: pos,
            speed_mps: 0.0,
            pause_until: 0.0,
            updated_at: 0.0,
        };
        if params.speed_max > 0.0 {
            m.retarget(params, area, rng);
        }
        m
    }

    fn retarget(&mut self, params: &MobilityParams, area: Area, rng: &mut impl Rng) {
        self.waypoint = Position {
            x: rng.gen_range(0.0..=area.x),
            y: rng.gen_range(0.0..=area.y),
        };
        self.speed_mps = if params.speed_max > params.speed_min {
            rng.gen_range(params.speed_min..=params.speed_max)
        } else {
            params.speed_max
        };
    }

    /// Advance the position to simulation time `t` (milliseconds).
    pub fn advance_to(
        &mut self,
        t: u64,
        params: &MobilityParams,
        area: Area,
        rng: &mut impl Rng,
    ) {
        let t = t as f64;
        while self.updated_at < t {
            if self.speed_mps <= 0.0 {
                self.updated_at = t;
                return;
            }
            if self.updated_at < self.pause_until {
                self.updated_at = self.pause_until.min(t);
                continue;
            }
            let dist = self.pos.distance(&self.waypoint);
            if dist < 1e-9 {
                // Arrived: pause, then pick the next waypoint and speed.
                self.pause_until = self.updated_at + params.pause_ms as f64;
                self.retarget(params, area, rng);
                if params.pause_ms == 0 && self.pos.distance(&self.waypoint) < 1e-9 {
                    // Degenerate draw onto the current point; treat as time passing.
                    self.updated_at = t;
                }
                continue;
            }
            let dt_ms = t - self.updated_at;
            let reach_ms = dist / self.speed_mps * 1000.0;
            if dt_ms < reach_ms {
                let frac = dt_ms / reach_ms;
                self.pos.x += (self.waypoint.x - self.pos.x) * frac;
                self.pos.y += (self.waypoint.y - self.pos.y) * frac;
                self.updated_at = t;
            } else {
                self.pos = self.waypoint;
                self.updated_at += reach_ms;
            }
        }
    }
}

/// One explicit movement step of `dt_ms`, used directly by unit tests;
/// `advance_to` is the same walk driven by absolute time.
pub fn mobility_step(
    m: &mut MobilityState,
    dt_ms: u64,
    params: &MobilityParams,
    area: Area,
    rng: &mut impl Rng,
) {
    let target = m.updated_at.round() as u64 + dt_ms;
    m.advance_to(target, params, area, rng);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const AREA: Area = Area { x: 25.0, y: 25.0 };

    fn params(min: f64, max: f64) -> MobilityParams {
        MobilityParams {
            speed_min: min,
            speed_max: max,
            pause_ms: 2000,
        }
    }

    #[test]
    fn zero_speed_never_moves() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let start = Position { x: 3.0, y: 4.0 };
        let mut m = MobilityState::new(start, &params(0.0, 0.0), AREA, &mut rng);
        mobility_step(&mut m, 10_000, &params(0.0, 0.0), AREA, &mut rng);
        assert_eq!(m.pos, start);
    }

    #[test]
    fn straight_line_reaches_waypoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = params(5.0, 5.0);
        let mut m = MobilityState::new(Position { x: 0.0, y: 0.0 }, &p, AREA, &mut rng);
        // Pin the waypoint: 3-4-5 triangle at 5 m/s takes exactly 1 s.
        m.waypoint = Position { x: 3.0, y: 4.0 };
        m.speed_mps = 5.0;
        mobility_step(&mut m, 1000, &p, AREA, &mut rng);
        assert!((m.pos.x - 3.0).abs() < 1e-9);
        assert!((m.pos.y - 4.0).abs() < 1e-9);
    }

    #[test]
    fn long_walks_stay_in_bounds() {
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = params(0.5, 2.0);
            let mut m = MobilityState::new(Position { x: 12.0, y: 12.0 }, &p, AREA, &mut rng);
            for _ in 0..100_000 {
                mobility_step(&mut m, 100, &p, AREA, &mut rng);
                assert!((0.0..=AREA.x).contains(&m.pos.x), "x = {}", m.pos.x);
                assert!((0.0..=AREA.y).contains(&m.pos.y), "y = {}", m.pos.y);
            }
        }
    }

    #[test]
    fn advancement_is_independent_of_query_granularity() {
        let p = params(0.5, 2.0);
        let mut rng_a = ChaCha8Rng::seed_from_u64(7);
        let mut rng_b = ChaCha8Rng::seed_from_u64(7);
        let mut a = MobilityState::new(Position { x: 1.0, y: 1.0 }, &p, AREA, &mut rng_a);
        let mut b = MobilityState::new(Position { x: 1.0, y: 1.0 }, &p, AREA, &mut rng_b);
        a.advance_to(60_000, &p, AREA, &mut rng_a);
        for t in (0..=60_000).step_by(500) {
            b.advance_to(t, &p, AREA, &mut rng_b);
        }
        assert!((a.pos.x - b.pos.x).abs() < 1e-6);
        assert!((a.pos.y - b.pos.y).abs() < 1e-6);
    }
}
