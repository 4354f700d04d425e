use std::f64::consts::PI;

use crate::envs::{check_action, EnvSpec, EnvState, Environment, CARTPOLE};
use crate::error::Result;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartpoleParams {
    pub cart_mass: f64,
    pub pole_mass: f64,
    /// Distance from pivot to the pole's centre of mass.
    pub half_length: f64,
    pub gravity: f64,
    pub force_scale: f64,
    pub dt: f64,
}

impl Default for CartpoleParams {
    fn default() -> Self {
        Self {
            cart_mass: 1.0,
            pole_mass: 0.1,
            half_length: 0.5,
            gravity: 9.8,
            force_scale: 10.0,
            dt: 0.02,
        }
    }
}

const RESET_NOISE: f64 = 0.05;

/// Cart-pole starting with the pole hanging down. Observation is
/// `(x, ẋ, θ, θ̇)` with θ = 0 upright, wrapped to (−π, π].
#[derive(Debug, Clone)]
pub struct Cartpole {
    spec: EnvSpec,
    params: CartpoleParams,
    reset_noise: f64,
}

impl Cartpole {
    pub fn new(episode_length: usize) -> Self {
        Self {
            spec: EnvSpec {
                env_id: CARTPOLE.to_string(),
                obs_dim: 4,
                act_dim: 1,
                action_low: vec![-1.0],
                action_high: vec![1.0],
                episode_length,
            },
            params: CartpoleParams::default(),
            reset_noise: RESET_NOISE,
        }
    }

    pub fn with_reset_noise(mut self, noise: f64) -> Self {
        self.reset_noise = noise;
        self
    }

    pub fn params(&self) -> &CartpoleParams {
        &self.params
    }

    fn derivatives(&self, s: [f64; 4], force: f64) -> [f64; 4] {
        let p = &self.params;
        let total = p.cart_mass + p.pole_mass;
        let (sin, cos) = s[2].sin_cos();
        let temp = (force + p.pole_mass * p.half_length * s[3] * s[3] * sin) / total;
        let theta_acc = (p.gravity * sin - cos * temp)
            / (p.half_length * (4.0 / 3.0 - p.pole_mass * cos * cos / total));
        let x_acc = temp - p.pole_mass * p.half_length * theta_acc * cos / total;
        [s[1], x_acc, s[3], theta_acc]
    }
}

pub(crate) fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Total mechanical energy (pivot height as zero potential).
pub fn cartpole_energy(params: &CartpoleParams, s: &[f64]) -> f64 {
    let (x_dot, theta, theta_dot) = (s[1], s[2], s[3]);
    let (m, l) = (params.pole_mass, params.half_length);
    let total = params.cart_mass + m;
    0.5 * total * x_dot * x_dot
        + m * l * x_dot * theta_dot * theta.cos()
        + 0.5 * m * l * l * (4.0 / 3.0) * theta_dot * theta_dot
        + m * params.gravity * l * theta.cos()
}

impl Environment for Cartpole {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&self, rng: &mut Rng) -> EnvState {
        let mut physics = vec![0.0, 0.0, PI, 0.0];
        if self.reset_noise > 0.0 {
            for v in &mut physics {
                *v += rng.uniform(-self.reset_noise, self.reset_noise);
            }
            physics[2] = wrap_angle(physics[2]);
        }
        EnvState {
            physics,
            step_index: 0,
        }
    }

    fn step(&self, state: &EnvState, action: &[f64]) -> Result<EnvState> {
        let a = check_action(&self.spec, action)?;
        let force = self.params.force_scale * a[0];
        let dt = self.params.dt;
        let s: [f64; 4] = state.physics[..4].try_into().expect("cartpole state has 4 entries");
        // Classic RK4 with the force held over the step.
        let shift = |base: [f64; 4], k: [f64; 4], h: f64| {
            let mut out = base;
            for i in 0..4 {
                out[i] += h * k[i];
            }
            out
        };
        let k1 = self.derivatives(s, force);
        let k2 = self.derivatives(shift(s, k1, dt / 2.0), force);
        let k3 = self.derivatives(shift(s, k2, dt / 2.0), force);
        let k4 = self.derivatives(shift(s, k3, dt), force);
        let mut next = [0.0; 4];
        for i in 0..4 {
            next[i] = s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        next[2] = wrap_angle(next[2]);
        Ok(EnvState {
            physics: next.to_vec(),
            step_index: state.step_index + 1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_reset_hangs_down() {
        let env = Cartpole::new(200).with_reset_noise(0.0);
        assert_eq!(env.reset(&mut Rng::new(1)).physics, vec![0.0, 0.0, PI, 0.0]);
    }

    #[test]
    fn upright_rest_is_fixed_point() {
        let env = Cartpole::new(200);
        let s = EnvState {
            physics: vec![0.0; 4],
            step_index: 0,
        };
        let next = env.step(&s, &[0.0]).unwrap();
        assert!(next.physics.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn angle_wraps() {
        assert!((wrap_angle(PI + 0.1) - (-PI + 0.1)).abs() < 1e-12);
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        let env = Cartpole::new(200);
        for seed in 0..20 {
            let s = env.reset(&mut Rng::new(seed));
            assert!(s.physics[2] > -PI && s.physics[2] <= PI);
        }
    }

    #[test]
    fn energy_conserved_without_force() {
        let env = Cartpole::new(1000);
        let mut s = EnvState {
            physics: vec![0.0, 0.0, 2.0, 0.0],
            step_index: 0,
        };
        let e0 = cartpole_energy(env.params(), &s.physics);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            s = env.step(&s, &[0.0]).unwrap();
            worst = worst.max((cartpole_energy(env.params(), &s.physics) - e0).abs());
        }
        assert!(worst / e0.abs() < 0.01, "drift {worst} vs {e0}");
    }
}
