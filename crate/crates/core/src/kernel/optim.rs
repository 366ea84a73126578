use super::Matrix;
use crate::error::{Error, Result};

/// Adam with decoupled weight decay (`p -= lr·wd·p` before the moment update).
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    first: Vec<Matrix>,
    second: Vec<Matrix>,
}

impl Adam {
    pub fn new(lr: f64, weight_decay: f64, shapes: &[(usize, usize)]) -> Self {
        Adam {
            lr,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            first: shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect(),
            second: shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut [&mut Matrix], grads: &[&Matrix]) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != params.len() {
            return Err(Error::structural(format!(
                "optimizer tracks {} tensors, got {} params and {} grads",
                self.first.len(),
                params.len(),
                grads.len()
            )));
        }
        for (p, g) in params.iter().zip(grads) {
            g.ensure_finite("gradient")?;
            if p.shape() != g.shape() {
                return Err(Error::structural("parameter/gradient shape mismatch"));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = self.first[k].as_mut_slice();
            let v = self.second[k].as_mut_slice();
            for (((pv, &gv), mv), vv) in
                p.as_mut_slice().iter_mut().zip(g.as_slice()).zip(m.iter_mut()).zip(v.iter_mut())
            {
                *pv -= self.lr * self.weight_decay * *pv;
                *mv = self.beta1 * *mv + (1.0 - self.beta1) * gv;
                *vv = self.beta2 * *vv + (1.0 - self.beta2) * gv * gv;
                let mhat = *mv / bc1;
                let vhat = *vv / bc2;
                *pv -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = Matrix::from_rows(&[[1.0, -1.0]]).unwrap();
        let g = Matrix::from_rows(&[[2.0, -0.5]]).unwrap();
        let mut opt = Adam::new(0.1, 0.0, &[(1, 2)]);
        opt.step(&mut [&mut p], &[&g]).unwrap();
        assert!((p.get(0, 0) - 0.9).abs() < 1e-6);
        assert!((p.get(0, 1) + 0.9).abs() < 1e-6);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut p = Matrix::filled(1, 1, 5.0);
        let mut opt = Adam::new(0.1, 0.0, &[(1, 1)]);
        for _ in 0..500 {
            let g = p.scale(2.0);
            opt.step(&mut [&mut p], &[&g]).unwrap();
        }
        assert!(p.get(0, 0).abs() < 0.05);
    }

    #[test]
    fn rejects_nan_gradient() {
        let mut p = Matrix::zeros(1, 1);
        let mut opt = Adam::new(0.1, 0.0, &[(1, 1)]);
        assert!(opt.step(&mut [&mut p], &[&Matrix::filled(1, 1, f64::NAN)]).is_err());
        assert_eq!(opt.steps_taken(), 0);
    }
}
