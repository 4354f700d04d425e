//! Reward functions r(s, a, s′), registered by id and tied to one environment.

use crate::envs::{CARTPOLE, POINTMASS_MAZE};
use crate::error::{Error, Result};

pub const GOAL_RADIUS: f64 = 0.1;
const GOAL_OFFSET: f64 = 0.75;

pub trait RewardFn: Send + Sync + std::fmt::Debug {
    fn reward_id(&self) -> &str;

    fn env_id(&self) -> &str;

    fn eval(&self, obs: &[f64], action: &[f64], next_obs: &[f64]) -> f64;
}

/// Sparse goal reward for the maze: 1 inside the goal disc, else 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachGoal {
    pub id: &'static str,
    pub goal: [f64; 2],
    pub radius: f64,
}

impl RewardFn for ReachGoal {
    fn reward_id(&self) -> &str {
        self.id
    }

    fn env_id(&self) -> &str {
        POINTMASS_MAZE
    }

    fn eval(&self, _obs: &[f64], _action: &[f64], next_obs: &[f64]) -> f64 {
        let dx = next_obs[0] - self.goal[0];
        let dy = next_obs[1] - self.goal[1];
        if (dx * dx + dy * dy).sqrt() < self.radius {
            1.0
        } else {
            0.0
        }
    }
}

/// Smooth upright-and-centred reward in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct CartpoleSwingup;

impl RewardFn for CartpoleSwingup {
    fn reward_id(&self) -> &str {
        "swingup"
    }

    fn env_id(&self) -> &str {
        CARTPOLE
    }

    fn eval(&self, _obs: &[f64], _action: &[f64], next_obs: &[f64]) -> f64 {
        let (x, theta) = (next_obs[0], next_obs[2]);
        (1.0 + theta.cos()) / 2.0 * (-x * x / 2.0).exp()
    }
}

const REACH: [(&str, [f64; 2]); 4] = [
    ("reach_top_left", [-GOAL_OFFSET, GOAL_OFFSET]),
    ("reach_top_right", [GOAL_OFFSET, GOAL_OFFSET]),
    ("reach_bottom_left", [-GOAL_OFFSET, -GOAL_OFFSET]),
    ("reach_bottom_right", [GOAL_OFFSET, -GOAL_OFFSET]),
];

pub fn reward_ids() -> Vec<&'static str> {
    REACH.iter().map(|(id, _)| *id).chain(["swingup"]).collect()
}

pub fn rewards_for_env(env_id: &str) -> Vec<&'static str> {
    match env_id {
        POINTMASS_MAZE => REACH.iter().map(|(id, _)| *id).collect(),
        CARTPOLE => vec!["swingup"],
        _ => Vec::new(),
    }
}

pub fn make_reward(reward_id: &str) -> Result<Box<dyn RewardFn>> {
    if reward_id == "swingup" {
        return Ok(Box::new(CartpoleSwingup));
    }
    REACH
        .iter()
        .find(|(id, _)| *id == reward_id)
        .map(|(id, goal)| {
            Box::new(ReachGoal {
                id,
                goal: *goal,
                radius: GOAL_RADIUS,
            }) as Box<dyn RewardFn>
        })
        .ok_or_else(|| Error::Unknown {
            kind: "reward",
            id: reward_id.to_string(),
        })
}

/// Looks up a reward and checks it belongs to `env_id`.
pub fn reward_for(env_id: &str, reward_id: &str) -> Result<Box<dyn RewardFn>> {
    let r = make_reward(reward_id)?;
    if r.env_id() != env_id {
        return Err(Error::EnvMismatch {
            reward: reward_id.to_string(),
            reward_env: r.env_id().to_string(),
            env: env_id.to_string(),
        });
    }
    Ok(r)
}
