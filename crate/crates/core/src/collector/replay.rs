use crate::nn::Matrix;
use crate::rng::Rng;

/// Fixed-capacity ring buffer of transitions with their skill/task vector
/// and extrinsic reward.
#[derive(Debug, Clone)]
pub struct Replay {
    capacity: usize,
    obs_dim: usize,
    act_dim: usize,
    meta_dim: usize,
    len: usize,
    next: usize,
    obs: Vec<f64>,
    actions: Vec<f64>,
    next_obs: Vec<f64>,
    meta: Vec<f64>,
    extrinsic: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ReplaySample {
    pub obs: Matrix,
    pub actions: Matrix,
    pub next_obs: Matrix,
    pub meta: Option<Matrix>,
    pub extrinsic: Vec<f64>,
}

impl Replay {
    pub fn new(capacity: usize, obs_dim: usize, act_dim: usize, meta_dim: usize) -> Self {
        Self {
            capacity,
            obs_dim,
            act_dim,
            meta_dim,
            len: 0,
            next: 0,
            obs: Vec::new(),
            actions: Vec::new(),
            next_obs: Vec::new(),
            meta: Vec::new(),
            extrinsic: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, obs: &[f64], action: &[f64], next_obs: &[f64], meta: &[f64], extrinsic: f64) {
        fn put(buf: &mut Vec<f64>, slot: usize, width: usize, v: &[f64]) {
            if buf.len() < (slot + 1) * width {
                buf.extend_from_slice(v);
            } else {
                buf[slot * width..(slot + 1) * width].copy_from_slice(v);
            }
        }
        let slot = self.next;
        put(&mut self.obs, slot, self.obs_dim, obs);
        put(&mut self.actions, slot, self.act_dim, action);
        put(&mut self.next_obs, slot, self.obs_dim, next_obs);
        put(&mut self.meta, slot, self.meta_dim, meta);
        put(&mut self.extrinsic, slot, 1, &[extrinsic]);
        self.next = (self.next + 1) % self.capacity;
        self.len = (self.len + 1).min(self.capacity);
    }

    /// `n` transitions drawn uniformly with replacement.
    pub(crate) fn sample(&self, n: usize, rng: &mut Rng) -> ReplaySample {
        let idx: Vec<usize> = (0..n).map(|_| rng.below(self.len)).collect();
        let gather = |buf: &[f64], w: usize| {
            let mut data = Vec::with_capacity(n * w);
            for &i in &idx {
                data.extend_from_slice(&buf[i * w..(i + 1) * w]);
            }
            Matrix::from_vec(n, w, data).expect("gathered buffer matches shape")
        };
        ReplaySample {
            obs: gather(&self.obs, self.obs_dim),
            actions: gather(&self.actions, self.act_dim),
            next_obs: gather(&self.next_obs, self.obs_dim),
            meta: (self.meta_dim > 0).then(|| gather(&self.meta, self.meta_dim)),
            extrinsic: idx.iter().map(|&i| self.extrinsic[i]).collect(),
        }
    }
}
