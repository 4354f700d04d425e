use crate::error::{Error, Result};

/// Adam moments for one flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        Self {
            first_moment: vec![0.0; n_params],
            second_moment: vec![0.0; n_params],
            step_count: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }

    /// One bias-corrected Adam update. Leaves everything untouched if any
    /// gradient entry is non-finite.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], learning_rate: f64) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(Error::shape(
                "AdamState::step",
                self.first_moment.len(),
                format!("params {} / grads {}", params.len(), grads.len()),
            ));
        }
        if let Some((i, g)) = grads.iter().enumerate().find(|(_, g)| !g.is_finite()) {
            return Err(Error::NonFinite {
                context: "adam gradient",
                detail: format!("entry {i} = {g}"),
            });
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut().zip(self.second_moment.iter_mut()))
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_grads_leave_params() {
        let mut p = vec![0.5, -1.0, 2.0];
        let mut s = AdamState::new(3);
        s.step(&mut p, &[0.0; 3], 0.1).unwrap();
        assert_eq!(p, vec![0.5, -1.0, 2.0]);
        assert_eq!(s.step_count(), 1);
    }

    #[test]
    fn first_step_by_hand() {
        // m̂ = 1, v̂ = 1 after bias correction, so the step is lr / (1 + eps).
        let mut p = vec![0.0];
        let mut s = AdamState::new(1);
        s.step(&mut p, &[1.0], 0.1).unwrap();
        assert!((p[0] + 0.1).abs() < 1e-6);
    }

    #[test]
    fn non_finite_gradient_is_reported() {
        let mut p = vec![1.0, 1.0];
        let mut s = AdamState::new(2);
        let err = s.step(&mut p, &[0.0, f64::NAN], 0.1).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
        assert_eq!(p, vec![1.0, 1.0]);
        assert_eq!(s.step_count(), 0);
    }

    #[test]
    fn shape_mismatch() {
        let mut s = AdamState::new(2);
        assert!(s.step(&mut [0.0; 3], &[0.0; 3], 0.1).is_err());
    }
}
