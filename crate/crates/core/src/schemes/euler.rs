use crate::error::Result;
use crate::model::Problem;
use crate::state::State;

use super::{Scheme, StepInputs};

/// Euler-Maruyama: `x + b(x) h + sum_j sigma^j(x) dW^j`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Euler;

impl Scheme for Euler {
    fn name(&self) -> &'static str {
        "euler"
    }

    fn step(&self, problem: &Problem, x: &State, inputs: &StepInputs) -> Result<State> {
        inputs.check(problem)?;
        let fields = problem.fields.as_ref();
        let mut out = *x;
        out.axpy(inputs.h, &fields.drift(x));
        for j in 1..=fields.noise_dim() {
            out.axpy(inputs.dw[j - 1], &fields.sigma(j, x));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::problem;

    #[test]
    fn gbm_arithmetic() {
        let p = problem("gbm1d").unwrap();
        let got = Euler
            .step(
                &p,
                &State::from_slice(&[1.0]),
                &StepInputs::new(0.01, &[0.1], 1),
            )
            .unwrap()[0];
        assert!((got - 1.051).abs() < 1e-15);
    }

    #[test]
    fn heisenberg_from_origin() {
        let p = problem("heisenberg").unwrap();
        let got = Euler
            .step(
                &p,
                &State::zeros(2),
                &StepInputs::new(0.01, &[0.4, -0.2], 1),
            )
            .unwrap();
        assert_eq!(got.to_vec(), vec![0.4, 0.0]);
    }

    #[test]
    fn zero_increments_follow_drift() {
        let p = problem("diag-comm").unwrap();
        let x = State::from_slice(&[1.0, 2.0]);
        let got = Euler
            .step(&p, &x, &StepInputs::new(0.1, &[0.0, 0.0], 1))
            .unwrap();
        let mut want = x;
        want.axpy(0.1, &p.fields.drift(&x));
        assert_eq!(got, want);
    }
}
