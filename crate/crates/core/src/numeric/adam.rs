use super::Dense;
use crate::error::{Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Per-parameter Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Dense,
    pub second_moment: Dense,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(param: &Dense) -> Self {
        AdamState {
            first_moment: Dense::zeros_like(param),
            second_moment: Dense::zeros_like(param),
            step_count: 0,
        }
    }

    /// One bias-corrected Adam update of `param` in place.
    pub fn step(&mut self, param: &mut Dense, grad: &Dense, lr: f64) -> Result<()> {
        if param.shape() != grad.shape() || param.shape() != self.first_moment.shape() {
            return Err(Error::Dimension(format!(
                "adam step: param {:?}, grad {:?}, state {:?}",
                param.shape(),
                grad.shape(),
                self.first_moment.shape()
            )));
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let bias1 = 1.0 - BETA1.powi(t);
        let bias2 = 1.0 - BETA2.powi(t);
        let m = self.first_moment.as_mut_slice();
        let v = self.second_moment.as_mut_slice();
        for (((p, &g), m), v) in param
            .as_mut_slice()
            .iter_mut()
            .zip(grad.as_slice())
            .zip(m.iter_mut())
            .zip(v.iter_mut())
        {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *p -= lr * m_hat / (v_hat.sqrt() + EPSILON);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_param() {
        let mut p = Dense::from_rows(&[vec![1.0, -2.0], vec![0.5, 3.0]]).unwrap();
        let before = p.clone();
        let mut st = AdamState::new(&p);
        for _ in 0..5 {
            st.step(&mut p, &Dense::zeros(2, 2), 0.01).unwrap();
        }
        assert_eq!(p, before);
        assert_eq!(st.step_count, 5);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = Dense::column(vec![1.0]);
        let mut st = AdamState::new(&p);
        st.step(&mut p, &Dense::column(vec![1.0]), 0.001).unwrap();
        // m_hat = v_hat = 1, so the update is lr / (1 + eps)
        let expected = 1.0 - 0.001 / (1.0 + EPSILON);
        assert!((p.get(0, 0) - expected).abs() < 1e-15);
        assert!((p.get(0, 0) - 0.999).abs() < 1e-10);
    }

    #[test]
    fn trajectories_are_bitwise_reproducible() {
        let run = || {
            let mut p = Dense::column(vec![0.3, -0.7, 2.0]);
            let mut st = AdamState::new(&p);
            for i in 0..50 {
                let g = p.map(|x| 2.0 * x + i as f64 * 1e-3);
                st.step(&mut p, &g, 0.05).unwrap();
            }
            p
        };
        let a = run();
        let b = run();
        assert!(a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = Dense::zeros(2, 2);
        let mut st = AdamState::new(&p);
        assert!(matches!(
            st.step(&mut p, &Dense::zeros(2, 1), 0.1),
            Err(Error::Dimension(_))
        ));
    }
}
