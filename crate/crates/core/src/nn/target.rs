use crate::error::{Error, Result};
use crate::nn::Mlp;

/// Slowly tracking copy of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetCopy {
    net: Mlp,
    tau: f64,
}

impl TargetCopy {
    pub fn new(online: &Mlp, tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::Config(format!("tau {tau} outside [0, 1]")));
        }
        Ok(Self {
            net: online.clone(),
            tau,
        })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `target ← (1 − τ)·target + τ·online`, elementwise.
    pub fn update(&mut self, online: &Mlp) -> Result<()> {
        if online.sizes() != self.net.sizes() {
            return Err(Error::shape(
                "TargetCopy::update",
                format!("{:?}", self.net.sizes()),
                format!("{:?}", online.sizes()),
            ));
        }
        let tau = self.tau;
        if tau == 1.0 {
            self.net.params_mut().copy_from_slice(online.params());
            return Ok(());
        }
        for (t, &o) in self.net.params_mut().iter_mut().zip(online.params()) {
            let (lo, hi) = if *t <= o { (*t, o) } else { (o, *t) };
            // Written as an increment so equal inputs stay fixed; the clamp
            // absorbs rounding at the ends of the interval.
            *t = (*t + tau * (o - *t)).clamp(lo, hi);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::OutputHead;

    fn net(v: f64) -> Mlp {
        Mlp::from_params(&[1, 1], OutputHead::Identity, vec![v, v]).unwrap()
    }

    #[test]
    fn tau_one_copies() {
        let mut t = TargetCopy::new(&net(0.3), 1.0).unwrap();
        t.update(&net(-4.1)).unwrap();
        assert_eq!(t.net().params(), &[-4.1, -4.1]);
    }

    #[test]
    fn tau_zero_freezes() {
        let mut t = TargetCopy::new(&net(0.3), 0.0).unwrap();
        t.update(&net(-4.1)).unwrap();
        assert_eq!(t.net().params(), &[0.3, 0.3]);
    }

    #[test]
    fn interpolates() {
        let mut t = TargetCopy::new(&net(0.0), 0.01).unwrap();
        t.update(&net(1.0)).unwrap();
        assert!((t.net().params()[0] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_tau_and_shape() {
        assert!(TargetCopy::new(&net(0.0), 1.5).is_err());
        let mut t = TargetCopy::new(&net(0.0), 0.5).unwrap();
        let other = Mlp::zeros(&[2, 1], OutputHead::Identity).unwrap();
        assert!(t.update(&other).is_err());
    }
}
