use crate::envs::{check_action, EnvSpec, EnvState, Environment, POINTMASS_MAZE};
use crate::error::Result;
use crate::rng::Rng;

pub const ARENA_HALF_WIDTH: f64 = 1.0;
pub const WALL_THICKNESS: f64 = 0.1;
/// Side of the open square at the centre joining the four rooms.
pub const CORRIDOR_WIDTH: f64 = 0.4;

const DT: f64 = 0.05;
const VELOCITY_DECAY: f64 = 0.95;
const ACTION_GAIN: f64 = 0.05;
const ACTION_SCALE: f64 = 1.0;
const RESET_NOISE: f64 = 0.02;

/// Open axis-aligned rectangle; its boundary is free space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wall {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Wall {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x > self.x.0 && x < self.x.1 && y > self.y.0 && y < self.y.1
    }
}

const HT: f64 = WALL_THICKNESS / 2.0;
const HC: f64 = CORRIDOR_WIDTH / 2.0;

/// Plus-shaped wall set: four arms from the central opening to the arena edge,
/// leaving one room per corner.
pub const MAZE_WALLS: [Wall; 4] = [
    Wall { x: (-HT, HT), y: (HC, ARENA_HALF_WIDTH) },
    Wall { x: (-HT, HT), y: (-ARENA_HALF_WIDTH, -HC) },
    Wall { x: (HC, ARENA_HALF_WIDTH), y: (-HT, HT) },
    Wall { x: (-ARENA_HALF_WIDTH, -HC), y: (-HT, HT) },
];

pub fn inside_wall(x: f64, y: f64) -> bool {
    MAZE_WALLS.iter().any(|w| w.contains(x, y))
}

/// Point mass in a four-room maze. Observation is `(x, y, vx, vy)`.
#[derive(Debug, Clone)]
pub struct PointMassMaze {
    spec: EnvSpec,
    reset_noise: f64,
}

impl PointMassMaze {
    pub fn new(episode_length: usize) -> Self {
        Self {
            spec: EnvSpec {
                env_id: POINTMASS_MAZE.to_string(),
                obs_dim: 4,
                act_dim: 2,
                action_low: vec![-1.0; 2],
                action_high: vec![1.0; 2],
                episode_length,
            },
            reset_noise: RESET_NOISE,
        }
    }

    pub fn with_reset_noise(mut self, noise: f64) -> Self {
        self.reset_noise = noise;
        self
    }
}

/// Moves one coordinate, stopping at the arena edge or the first wall face.
/// Returns the new coordinate and whether motion was blocked.
fn advance(pos: f64, vel: f64, other: f64, horizontal: bool) -> (f64, bool) {
    let mut next = pos + DT * vel;
    let mut blocked = false;
    if next.abs() > ARENA_HALF_WIDTH {
        next = next.clamp(-ARENA_HALF_WIDTH, ARENA_HALF_WIDTH);
        blocked = true;
    }
    for w in &MAZE_WALLS {
        let (span, across) = if horizontal { (w.x, w.y) } else { (w.y, w.x) };
        let hit = next > span.0 && next < span.1 && other > across.0 && other < across.1;
        if hit {
            next = if pos <= span.0 { span.0 } else { span.1 };
            blocked = true;
        }
    }
    (next, blocked)
}

impl Environment for PointMassMaze {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&self, rng: &mut Rng) -> EnvState {
        let mut physics = vec![0.0; 4];
        if self.reset_noise > 0.0 {
            physics[0] = rng.uniform(-self.reset_noise, self.reset_noise);
            physics[1] = rng.uniform(-self.reset_noise, self.reset_noise);
        }
        EnvState {
            physics,
            step_index: 0,
        }
    }

    fn step(&self, state: &EnvState, action: &[f64]) -> Result<EnvState> {
        let a = check_action(&self.spec, action)?;
        let (x, y) = (state.physics[0], state.physics[1]);
        let mut vx = VELOCITY_DECAY * state.physics[2] + ACTION_GAIN * a[0] * ACTION_SCALE;
        let mut vy = VELOCITY_DECAY * state.physics[3] + ACTION_GAIN * a[1] * ACTION_SCALE;
        let (nx, bx) = advance(x, vx, y, true);
        if bx {
            vx = 0.0;
        }
        let (ny, by) = advance(y, vy, nx, false);
        if by {
            vy = 0.0;
        }
        Ok(EnvState {
            physics: vec![nx, ny, vx, vy],
            step_index: state.step_index + 1,
        })
    }
}
