//! Reward-free environments and the reward functions used to relabel them.

mod cartpole;
mod occupancy;
mod pointmass;
mod reward;

pub use cartpole::{cartpole_energy, Cartpole, CartpoleParams};
pub use occupancy::{maze_occupancy, write_occupancy_csv, OccupancyGrid};
pub use pointmass::{inside_wall, PointMassMaze, Wall, ARENA_HALF_WIDTH, CORRIDOR_WIDTH, MAZE_WALLS, WALL_THICKNESS};
pub use reward::{make_reward, reward_for, reward_ids, rewards_for_env, CartpoleSwingup, ReachGoal, RewardFn, GOAL_RADIUS};

use crate::error::{Error, Result};
use crate::rng::Rng;

pub const POINTMASS_MAZE: &str = "pointmass_maze";
pub const CARTPOLE: &str = "cartpole";

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub env_id: String,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    pub episode_length: usize,
}

impl EnvSpec {
    pub fn clip_action(&self, action: &mut [f64]) {
        for ((a, lo), hi) in action.iter_mut().zip(&self.action_low).zip(&self.action_high) {
            *a = a.clamp(*lo, *hi);
        }
    }
}

/// Physical state; the observation is the physical state itself.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub physics: Vec<f64>,
    pub step_index: usize,
}

impl EnvState {
    pub fn observation(&self) -> &[f64] {
        &self.physics
    }
}

/// Deterministic dynamics with a stochastic reset.
pub trait Environment: Send + Sync + std::fmt::Debug {
    fn spec(&self) -> &EnvSpec;

    fn reset(&self, rng: &mut Rng) -> EnvState;

    /// Actions outside the box are clipped; non-finite actions are rejected.
    fn step(&self, state: &EnvState, action: &[f64]) -> Result<EnvState>;
}

pub(crate) fn check_action(spec: &EnvSpec, action: &[f64]) -> Result<Vec<f64>> {
    if action.len() != spec.act_dim {
        return Err(Error::shape("Environment::step action", spec.act_dim, action.len()));
    }
    if action.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite {
            context: "action",
            detail: format!("{action:?}"),
        });
    }
    let mut a = action.to_vec();
    spec.clip_action(&mut a);
    Ok(a)
}

type EnvCtor = fn(usize) -> Box<dyn Environment>;

const ENV_REGISTRY: &[(&str, EnvCtor)] = &[
    (POINTMASS_MAZE, |len| Box::new(PointMassMaze::new(len))),
    (CARTPOLE, |len| Box::new(Cartpole::new(len))),
];

pub fn env_ids() -> Vec<&'static str> {
    ENV_REGISTRY.iter().map(|(id, _)| *id).collect()
}

/// Builds a registered environment with the given episode length.
pub fn make_env(env_id: &str, episode_length: usize) -> Result<Box<dyn Environment>> {
    ENV_REGISTRY
        .iter()
        .find(|(id, _)| *id == env_id)
        .map(|(_, ctor)| ctor(episode_length))
        .ok_or_else(|| Error::Unknown {
            kind: "environment",
            id: env_id.to_string(),
        })
}
