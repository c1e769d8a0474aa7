use super::Scalar;

/// RMSProp hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsProp {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
}

impl Default for RmsProp {
    fn default() -> Self {
        RmsProp { learning_rate: 1e-3, decay: 0.9, epsilon: 1e-8 }
    }
}

impl RmsProp {
    /// One update of `params` in place:
    /// `s = decay * s + (1 - decay) * g^2; w -= lr * g / (sqrt(s) + eps)`,
    /// then `w` is clipped to [-1, 1] when `clip_latent` is set.
    pub fn step<S: Scalar>(&self, params: &mut [S], grads: &[S], accum: &mut [S], clip_latent: bool) {
        assert!(params.len() == grads.len() && grads.len() == accum.len(), "rmsprop shape mismatch");
        let decay = S::from_f64(self.decay);
        let keep = S::from_f64(1.0 - self.decay);
        let lr = S::from_f64(self.learning_rate);
        let eps = S::from_f64(self.epsilon);
        for ((w, &g), s) in params.iter_mut().zip(grads).zip(accum.iter_mut()) {
            *s = decay * *s + keep * g * g;
            *w -= lr * g / (s.sqrt() + eps);
            if clip_latent {
                if *w > S::ONE {
                    *w = S::ONE;
                } else if *w < -S::ONE {
                    *w = -S::ONE;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let opt = RmsProp::default();
        let mut w = vec![0.3f32, -0.7];
        let mut s = vec![0.0f32; 2];
        opt.step(&mut w, &[0.0, 0.0], &mut s, true);
        assert_eq!(w, [0.3, -0.7]);
    }

    #[test]
    fn first_step_value() {
        let opt = RmsProp::default();
        let mut w = vec![0.0f64];
        let mut s = vec![0.0f64];
        opt.step(&mut w, &[1.0], &mut s, false);
        let expected = -1e-3 / (0.1f64.sqrt() + 1e-8);
        assert!((w[0] - expected).abs() < 1e-15);
        assert!((s[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn latent_clip() {
        let opt = RmsProp { learning_rate: 10.0, ..RmsProp::default() };
        let mut w = vec![0.9f32, -0.9];
        let mut s = vec![0.0f32; 2];
        opt.step(&mut w, &[-5.0, 5.0], &mut s, true);
        assert_eq!(w, [1.0, -1.0]);
    }
}
