use super::{NnError, Tensor};

/// Classical (heavy-ball) momentum SGD:
/// `v <- momentum * v + grad`, `p <- p - lr * v`.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdMomentum {
    pub lr: f64,
    pub momentum: f64,
    velocity: Vec<Vec<f64>>,
}

impl SgdMomentum {
    pub fn new(lr: f64, momentum: f64) -> Result<Self, NnError> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(NnError::InvalidArgument(format!("learning rate {lr} must be positive")));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(NnError::InvalidArgument(format!("momentum {momentum} must lie in [0, 1)")));
        }
        Ok(Self { lr, momentum, velocity: Vec::new() })
    }

    pub fn velocity(&self) -> &[Vec<f64>] {
        &self.velocity
    }

    /// Drops accumulated velocity; the next step starts from zero.
    pub fn reset(&mut self) {
        self.velocity.clear();
    }

    /// Applies one update using each parameter's gradient buffer (absent = zero).
    pub fn step(&mut self, params: &mut [&mut Tensor]) -> Result<(), NnError> {
        if self.velocity.is_empty() {
            self.velocity = params.iter().map(|p| vec![0.0; p.len()]).collect();
        }
        if self.velocity.len() != params.len()
            || self.velocity.iter().zip(params.iter()).any(|(v, p)| v.len() != p.len())
        {
            return Err(NnError::ShapeMismatch {
                context: "optimizer velocity".into(),
                expected: format!("{} parameter tensors", self.velocity.len()),
                found: format!("{} parameter tensors", params.len()),
            });
        }
        for (param, velocity) in params.iter_mut().zip(&mut self.velocity) {
            let (data, grad) = param.data_and_grad_mut();
            for ((p, v), &g) in data.iter_mut().zip(velocity.iter_mut()).zip(grad.iter()) {
                *v = self.momentum * *v + g;
                *p -= self.lr * *v;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(p: f64, g: f64) -> Tensor {
        let mut t = Tensor::new(vec![1], vec![p]).unwrap();
        t.grad_mut()[0] = g;
        t
    }

    #[test]
    fn vanilla_sgd_without_momentum() {
        let mut opt = SgdMomentum::new(0.1, 0.0).unwrap();
        let mut p = scalar(1.0, 2.0);
        opt.step(&mut [&mut p]).unwrap();
        assert_eq!(p.data()[0], 1.0 - 0.1 * 2.0);
        assert!((p.data()[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn two_momentum_steps() {
        let mut opt = SgdMomentum::new(0.1, 0.9).unwrap();
        let mut p = scalar(0.0, 1.0);
        opt.step(&mut [&mut p]).unwrap();
        opt.step(&mut [&mut p]).unwrap();
        // v = 1 then 1.9; p = -(0.1 + 0.19)
        assert!((opt.velocity()[0][0] - 1.9).abs() < 1e-15);
        assert!((p.data()[0] + 0.29).abs() < 1e-15);
    }

    #[test]
    fn velocity_carries_through_zero_gradient() {
        let mut opt = SgdMomentum::new(0.1, 0.9).unwrap();
        let mut p = scalar(0.0, 1.0);
        opt.step(&mut [&mut p]).unwrap();
        let before = p.data()[0];
        p.grad_mut()[0] = 0.0;
        opt.step(&mut [&mut p]).unwrap();
        assert!((before - p.data()[0] - 0.1 * 0.9 * 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_hyperparameters_and_shapes() {
        assert!(SgdMomentum::new(0.0, 0.5).is_err());
        assert!(SgdMomentum::new(0.1, 1.0).is_err());
        let mut opt = SgdMomentum::new(0.1, 0.5).unwrap();
        let mut a = scalar(0.0, 1.0);
        opt.step(&mut [&mut a]).unwrap();
        let mut b = Tensor::zeros(vec![2]).unwrap();
        assert!(opt.step(&mut [&mut b]).is_err());
    }
}
