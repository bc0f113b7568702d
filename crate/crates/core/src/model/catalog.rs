//! Built-in test problems. Each one carries a closed-form anchor: exact flows
//! for every field, and for `gbm1d` / `heisenberg` an exact pathwise solution.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::randomness::PathBundle;
use crate::state::{Matrix, State};

use super::{AffineField, AffineFieldSet, ClosedForm, Problem};

pub const GBM_MU: f64 = 0.1;
pub const GBM_SIGMA: f64 = 0.5;

/// `X_t = x0 exp((mu - s^2/2) t + s W_t)`.
#[derive(Debug, Clone, Copy)]
pub struct GbmSolution {
    pub mu: f64,
    pub sigma: f64,
}

impl GbmSolution {
    pub fn value_at(&self, x0: f64, t: f64, w: f64) -> f64 {
        x0 * ((self.mu - 0.5 * self.sigma * self.sigma) * t + self.sigma * w).exp()
    }
}

impl ClosedForm for GbmSolution {
    fn fine_path(&self, x0: &State, bundle: &PathBundle) -> Vec<State> {
        let h = bundle.step();
        let mut w = 0.0;
        let mut out = Vec::with_capacity(bundle.n_fine() + 1);
        out.push(*x0);
        for k in 0..bundle.n_fine() {
            w += bundle.dw(k)[0];
            let t = (k + 1) as f64 * h;
            out.push(State::from_slice(&[self.value_at(x0[0], t, w)]));
        }
        out
    }
}

/// `X^1_t = x^1 + W^1_t`, `X^2_t = x^2 + int_0^t X^1_s dW^2_s` (Itô), the
/// integral taken as a left-point sum on the fine grid.
#[derive(Debug, Clone, Copy)]
pub struct HeisenbergSolution;

impl ClosedForm for HeisenbergSolution {
    fn fine_path(&self, x0: &State, bundle: &PathBundle) -> Vec<State> {
        let mut x = *x0;
        let mut out = Vec::with_capacity(bundle.n_fine() + 1);
        out.push(x);
        for k in 0..bundle.n_fine() {
            let dw = bundle.dw(k);
            x[1] += x[0] * dw[1];
            x[0] += dw[0];
            out.push(x);
        }
        out
    }
}

fn gbm1d() -> Problem {
    let fields = AffineFieldSet::linear(
        Matrix::diagonal(&[GBM_MU]),
        vec![Matrix::diagonal(&[GBM_SIGMA])],
    );
    Problem::new(
        "gbm1d",
        Arc::new(fields),
        State::from_slice(&[1.0]),
        1.0,
        true,
    )
    .expect("catalog problem is valid")
    .with_exact(Arc::new(GbmSolution {
        mu: GBM_MU,
        sigma: GBM_SIGMA,
    }))
    .with_description("geometric Brownian motion dX = 0.1 X dt + 0.5 X dW")
}

fn heisenberg() -> Problem {
    let fields = AffineFieldSet::new(
        AffineField::linear(Matrix::zeros(2)),
        vec![
            AffineField::constant(State::from_slice(&[1.0, 0.0])),
            AffineField::linear(Matrix::from_rows(&[&[0.0, 0.0], &[1.0, 0.0]])),
        ],
    );
    Problem::new("heisenberg", Arc::new(fields), State::zeros(2), 1.0, false)
        .expect("catalog problem is valid")
        .with_exact(Arc::new(HeisenbergSolution))
        .with_description("sigma1 = (1, 0), sigma2 = (0, x1), b = 0; bracket (0, -1)")
}

fn diag_comm() -> Problem {
    let fields = AffineFieldSet::linear(
        Matrix::from_rows(&[&[-0.5, 1.0], &[-1.0, -0.5]]),
        vec![Matrix::diagonal(&[0.5, 0.0]), Matrix::diagonal(&[0.0, 0.4])],
    );
    Problem::new(
        "diag-comm",
        Arc::new(fields),
        State::from_slice(&[1.0, 1.0]),
        1.0,
        true,
    )
    .expect("catalog problem is valid")
    .with_description("sigma1 = (0.5 x1, 0), sigma2 = (0, 0.4 x2), rotating linear drift")
}

fn linear_nc() -> Problem {
    let fields = AffineFieldSet::linear(
        Matrix::diagonal(&[0.05, -0.1]),
        vec![
            Matrix::from_rows(&[&[0.2, 0.4], &[0.0, 0.1]]),
            Matrix::from_rows(&[&[0.1, 0.0], &[0.4, 0.3]]),
        ],
    );
    Problem::new(
        "linear-nc",
        Arc::new(fields),
        State::from_slice(&[1.0, 1.0]),
        1.0,
        false,
    )
    .expect("catalog problem is valid")
    .with_description("sigma_j = A_j x with non-commuting A_1, A_2")
}

/// The built-in problems, in a fixed order.
pub fn catalog() -> Vec<Problem> {
    vec![gbm1d(), heisenberg(), diag_comm(), linear_nc()]
}

/// Looks a catalog problem up by id.
pub fn problem(id: &str) -> Result<Problem> {
    catalog()
        .into_iter()
        .find(|p| p.id == id)
        .ok_or_else(|| Error::Unknown {
            kind: "problem",
            name: id.to_string(),
        })
}
