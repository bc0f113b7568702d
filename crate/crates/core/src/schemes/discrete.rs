use crate::error::Result;
use crate::model::Problem;
use crate::state::State;

use super::{Scheme, StepInputs};

/// Adapted surrogate of the NV scheme: a Milstein step whose cross terms
/// `(d sigma^j) sigma^m dW^m dW^j` run over the ordered pairs `eta m < eta j`
/// (so `m < j` for `eta = +1` and `m > j` for `eta = -1`). Diagonal terms enter
/// only through `1/2 (d sigma^j) sigma^j ((dW^j)^2 - h)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DiscreteNv;

impl Scheme for DiscreteNv {
    fn name(&self) -> &'static str {
        "discrete-nv"
    }

    fn step(&self, problem: &Problem, x: &State, inputs: &StepInputs) -> Result<State> {
        inputs.check(problem)?;
        let fields = problem.fields.as_ref();
        let d = fields.noise_dim();
        let h = inputs.h;
        let dw = &inputs.dw;

        let sig: Vec<State> = (1..=d).map(|j| fields.sigma(j, x)).collect();
        let mut out = *x;
        out.axpy(h, &fields.drift(x));
        for j in 1..=d {
            let dwj = dw[j - 1];
            out.axpy(dwj, &sig[j - 1]);
            let djj = fields.sigma_jvp(j, x, &sig[j - 1]);
            out.axpy(0.5 * (dwj * dwj - h), &djj);
        }
        for j in 1..=d {
            for m in 1..=d {
                let ordered = if inputs.eta == 1 { m < j } else { m > j };
                if !ordered {
                    continue;
                }
                let djm = fields.sigma_jvp(j, x, &sig[m - 1]);
                out.axpy(dw[m - 1] * dw[j - 1], &djm);
            }
        }
        Ok(out)
    }
}
