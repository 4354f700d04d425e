use crate::error::{Error, Result};
use crate::nn::{AdamState, ForwardCache, Matrix, Mlp, OutputHead, TargetCopy};
use crate::rng::Rng;

/// Deterministic actor, twin critics, their EMA targets and optimisers.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    pub actor: Mlp,
    pub critic1: Mlp,
    pub critic2: Mlp,
    pub actor_target: TargetCopy,
    pub critic1_target: TargetCopy,
    pub critic2_target: TargetCopy,
    actor_opt: AdamState,
    critic1_opt: AdamState,
    critic2_opt: AdamState,
    obs_dim: usize,
    act_dim: usize,
}

/// Conservative penalty inputs for one critic update.
#[derive(Debug, Clone)]
pub struct CqlTerm {
    pub alpha: f64,
    /// `n · k` actions, `k` consecutive rows per batch element.
    pub sampled_actions: Matrix,
    pub n_samples: usize,
}

/// Gaussian noise clipped to ±`clip`, one row per sample.
pub fn smoothing_noise(rows: usize, cols: usize, stddev: f64, clip: f64, rng: &mut Rng) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for v in m.as_mut_slice() {
        *v = (stddev * rng.normal()).clamp(-clip, clip);
    }
    m
}

fn log_mean_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + (sum / values.len() as f64).ln()
}

/// Mean over the batch of `log mean_j exp Q(s, a_j) − Q(s, a_data)`.
/// `q_sampled` holds `k` consecutive values per batch element.
pub fn cql_penalty(q_sampled: &[f64], q_data: &[f64]) -> f64 {
    let n = q_data.len();
    if n == 0 {
        return 0.0;
    }
    let k = q_sampled.len() / n;
    q_data
        .iter()
        .enumerate()
        .map(|(b, qd)| log_mean_exp(&q_sampled[b * k..(b + 1) * k]) - qd)
        .sum::<f64>()
        / n as f64
}

fn clip_unit(m: &mut Matrix) {
    m.map_inplace(|v| v.clamp(-1.0, 1.0));
}

impl ActorCritic {
    pub fn new(obs_dim: usize, act_dim: usize, hidden_dim: usize, n_hidden: usize, tau: f64, rng: &mut Rng) -> Result<Self> {
        let mut actor_sizes = vec![obs_dim];
        actor_sizes.extend(std::iter::repeat_n(hidden_dim, n_hidden));
        actor_sizes.push(act_dim);
        let mut critic_sizes = vec![obs_dim + act_dim];
        critic_sizes.extend(std::iter::repeat_n(hidden_dim, n_hidden));
        critic_sizes.push(1);

        let actor = Mlp::new(&actor_sizes, OutputHead::Tanh, rng)?;
        let critic1 = Mlp::new(&critic_sizes, OutputHead::Identity, rng)?;
        let critic2 = Mlp::new(&critic_sizes, OutputHead::Identity, rng)?;
        Ok(Self {
            actor_target: TargetCopy::new(&actor, tau)?,
            critic1_target: TargetCopy::new(&critic1, tau)?,
            critic2_target: TargetCopy::new(&critic2, tau)?,
            actor_opt: AdamState::new(actor.n_params()),
            critic1_opt: AdamState::new(critic1.n_params()),
            critic2_opt: AdamState::new(critic2.n_params()),
            actor,
            critic1,
            critic2,
            obs_dim,
            act_dim,
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn act_dim(&self) -> usize {
        self.act_dim
    }

    pub fn act(&self, obs: &Matrix) -> Result<Matrix> {
        self.actor.predict(obs)
    }

    pub fn q(critic: &Mlp, obs: &Matrix, actions: &Matrix) -> Result<Vec<f64>> {
        Ok(critic.predict(&obs.hcat(actions)?)?.into_vec())
    }

    /// `y = r + γ · min(Q1′, Q2′)(s′, clip(π′(s′) + ε))` with the given ε.
    pub fn td3_targets_with_noise(
        &self,
        rewards: &[f64],
        next_obs: &Matrix,
        noise: &Matrix,
        discount: f64,
    ) -> Result<Vec<f64>> {
        if rewards.len() != next_obs.rows() {
            return Err(Error::shape("td3 targets rewards", next_obs.rows(), rewards.len()));
        }
        let mut next_actions = self.actor_target.net().predict(next_obs)?;
        if noise.rows() != next_actions.rows() || noise.cols() != next_actions.cols() {
            return Err(Error::shape(
                "td3 targets noise",
                format!("{}x{}", next_actions.rows(), next_actions.cols()),
                format!("{}x{}", noise.rows(), noise.cols()),
            ));
        }
        for (a, e) in next_actions.as_mut_slice().iter_mut().zip(noise.as_slice()) {
            *a += e;
        }
        clip_unit(&mut next_actions);
        let q1 = Self::q(self.critic1_target.net(), next_obs, &next_actions)?;
        let q2 = Self::q(self.critic2_target.net(), next_obs, &next_actions)?;
        Ok(rewards
            .iter()
            .zip(q1.iter().zip(&q2))
            .map(|(r, (a, b))| r + discount * a.min(*b))
            .collect())
    }

    /// One Adam step on both critics towards `targets`, with an optional
    /// conservative penalty. Returns the total critic loss.
    pub fn update_critics(
        &mut self,
        obs: &Matrix,
        actions: &Matrix,
        targets: &[f64],
        lr: f64,
        cql: Option<&CqlTerm>,
    ) -> Result<f64> {
        let n = obs.rows();
        let inputs = obs.hcat(actions)?;
        let sampled_inputs = match cql {
            Some(term) => Some(obs.repeat_rows(term.n_samples).hcat(&term.sampled_actions)?),
            None => None,
        };
        let mut total = 0.0;
        for which in 0..2 {
            let critic = if which == 0 { &self.critic1 } else { &self.critic2 };
            let (q, cache) = critic.forward(&inputs)?;
            let alpha = cql.map_or(0.0, |t| t.alpha);
            let mut upstream = Matrix::zeros(n, 1);
            let mut loss = 0.0;
            for (i, (qv, y)) in q.as_slice().iter().zip(targets).enumerate() {
                let diff = qv - y;
                loss += diff * diff;
                upstream.set(i, 0, 2.0 * diff / n as f64 - alpha / n as f64);
            }
            loss /= n as f64;
            let (mut grads, _) = critic.backward(&cache, &upstream)?;
            if let (Some(term), Some(sampled)) = (cql, &sampled_inputs) {
                let (qs, scache) = critic.forward(sampled)?;
                let k = term.n_samples;
                let mut up = Matrix::zeros(n * k, 1);
                for b in 0..n {
                    let row = &qs.as_slice()[b * k..(b + 1) * k];
                    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let z: f64 = row.iter().map(|v| (v - max).exp()).sum();
                    for (j, q) in row.iter().enumerate() {
                        up.set(b * k + j, 0, term.alpha * (q - max).exp() / z / n as f64);
                    }
                }
                let (sgrads, _) = critic.backward(&scache, &up)?;
                grads.iter_mut().zip(&sgrads).for_each(|(g, s)| *g += s);
                loss += term.alpha * cql_penalty(qs.as_slice(), q.as_slice());
            }
            if !loss.is_finite() {
                return Err(Error::NonFinite {
                    context: "critic loss",
                    detail: format!("critic {} loss {loss}", which + 1),
                });
            }
            total += loss;
            if which == 0 {
                self.critic1_opt.step(self.critic1.params_mut(), &grads, lr)?;
            } else {
                self.critic2_opt.step(self.critic2.params_mut(), &grads, lr)?;
            }
        }
        Ok(total)
    }

    /// Actor forward pass plus ∂Q1(s, π(s))/∂a for each row; the critic is
    /// only read.
    pub fn policy_q_gradient(&self, obs: &Matrix) -> Result<(Matrix, ForwardCache, Vec<f64>, Matrix)> {
        let (pi, cache) = self.actor.forward(obs)?;
        let (q, qcache) = self.critic1.forward(&obs.hcat(&pi)?)?;
        let ones = Matrix::from_vec(obs.rows(), 1, vec![1.0; obs.rows()])?;
        let (_, dinput) = self.critic1.backward(&qcache, &ones)?;
        let dq_da = dinput.columns(self.obs_dim, self.obs_dim + self.act_dim);
        Ok((pi, cache, q.into_vec(), dq_da))
    }

    /// Backpropagates `∂loss/∂π(s)` through the actor and takes one Adam step.
    pub fn apply_actor_gradient(&mut self, cache: &ForwardCache, dloss_dpi: &Matrix, lr: f64) -> Result<()> {
        let (grads, _) = self.actor.backward(cache, dloss_dpi)?;
        self.actor_opt.step(self.actor.params_mut(), &grads, lr)
    }

    /// EMA step on every target network.
    pub fn update_targets(&mut self) -> Result<()> {
        self.actor_target.update(&self.actor)?;
        self.critic1_target.update(&self.critic1)?;
        self.critic2_target.update(&self.critic2)
    }
}

/// `∂/∂π mean_b w_b‖π(s_b) − a_b‖²`; `weights = None` means all ones.
pub fn bc_gradient(pi: &Matrix, actions: &Matrix, weights: Option<&[f64]>) -> Matrix {
    let n = pi.rows() as f64;
    let mut g = Matrix::zeros(pi.rows(), pi.cols());
    for r in 0..pi.rows() {
        let w = weights.map_or(1.0, |w| w[r]);
        for ((gv, p), a) in g.row_mut(r).iter_mut().zip(pi.row(r)).zip(actions.row(r)) {
            *gv = 2.0 * (p - a) / n * w;
        }
    }
    g
}

pub(crate) fn bc_loss(pi: &Matrix, actions: &Matrix, weights: Option<&[f64]>) -> f64 {
    let n = pi.rows() as f64;
    (0..pi.rows())
        .map(|r| {
            let w = weights.map_or(1.0, |w| w[r]);
            w * pi
                .row(r)
                .iter()
                .zip(actions.row(r))
                .map(|(p, a)| (p - a) * (p - a))
                .sum::<f64>()
        })
        .sum::<f64>()
        / n
}
