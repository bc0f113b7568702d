use crate::linalg::{expm, expm2};
use crate::state::{Matrix, State, MAX_DIM};

use super::VectorFieldSet;

/// `V(x) = A x + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineField {
    pub matrix: Matrix,
    pub offset: State,
}

impl AffineField {
    pub fn linear(matrix: Matrix) -> Self {
        let n = matrix.dim();
        AffineField {
            matrix,
            offset: State::zeros(n),
        }
    }

    pub fn constant(offset: State) -> Self {
        AffineField {
            matrix: Matrix::zeros(offset.dim()),
            offset,
        }
    }

    pub fn new(matrix: Matrix, offset: State) -> Self {
        assert_eq!(matrix.dim(), offset.dim());
        AffineField { matrix, offset }
    }

    #[inline]
    pub fn eval(&self, x: &State) -> State {
        self.matrix.mul_vec(x).add(&self.offset)
    }

    fn has_offset(&self) -> bool {
        self.offset.iter().any(|&c| c != 0.0)
    }
}

/// `x -> M x + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub matrix: Matrix,
    pub offset: Option<State>,
}

impl AffineMap {
    #[inline]
    pub fn apply(&self, x: &State) -> State {
        let mut y = *x;
        self.apply_mut(&mut y);
        y
    }

    #[inline]
    pub fn apply_mut(&self, x: &mut State) {
        let n = x.dim();
        let mut y = [0.0; MAX_DIM];
        for (i, out) in y[..n].iter_mut().enumerate() {
            // same accumulation order as `Matrix::mul_vec`
            let mut acc = 0.0;
            for (k, v) in x.iter().enumerate() {
                acc += self.matrix[(i, k)] * v;
            }
            *out = acc;
        }
        x.copy_from_slice(&y[..n]);
        if let Some(c) = &self.offset {
            for (v, c) in x.iter_mut().zip(c.iter()) {
                *v += c;
            }
        }
    }
}

/// How the closed-form flow of an affine field is evaluated.
#[derive(Debug, Clone)]
enum FlowKind {
    /// `A` diagonal, `c = 0`: componentwise exponentials.
    Diagonal(Vec<f64>),
    /// Augmented generator squares to zero: `x + t (A x + c)` is exact.
    Nilpotent,
    /// `n = 2`, `c = 0`: closed-form 2x2 exponential.
    Planar,
    /// Anything else: exponential of the augmented `(n+1)x(n+1)` generator.
    Augmented,
}

impl FlowKind {
    fn classify(field: &AffineField) -> Self {
        let a = &field.matrix;
        let has_offset = field.has_offset();
        if !has_offset && a.is_diagonal() {
            let diag = (0..a.dim()).map(|i| a[(i, i)]).collect();
            return FlowKind::Diagonal(diag);
        }
        let a_sq_zero = a.mul(a).is_zero();
        let a_c_zero = a.mul_vec(&field.offset).iter().all(|&v| v == 0.0);
        if a_sq_zero && a_c_zero {
            return FlowKind::Nilpotent;
        }
        if !has_offset && a.dim() == 2 {
            return FlowKind::Planar;
        }
        FlowKind::Augmented
    }
}

/// Field set whose drift and Brownian fields are all affine.
///
/// The Stratonovich drift of such a set is again affine,
/// `A_0 = A_b - 1/2 sum_j A_j^2`, `c_0 = c_b - 1/2 sum_j A_j c_j`, so every
/// field (index 0 included) has a closed-form flow.
#[derive(Debug, Clone)]
pub struct AffineFieldSet {
    drift: AffineField,
    sigmas: Vec<AffineField>,
    strat_drift: AffineField,
    kinds: Vec<FlowKind>,
    exact_flows: bool,
}

impl AffineFieldSet {
    pub fn new(drift: AffineField, sigmas: Vec<AffineField>) -> Self {
        let n = drift.matrix.dim();
        assert!(!sigmas.is_empty(), "at least one Brownian field required");
        assert!(sigmas.iter().all(|s| s.matrix.dim() == n));
        let mut a0 = drift.matrix.clone();
        let mut c0 = drift.offset;
        for s in &sigmas {
            a0 = a0.add_scaled(-0.5, &s.matrix.mul(&s.matrix));
            c0.axpy(-0.5, &s.matrix.mul_vec(&s.offset));
        }
        let strat_drift = AffineField::new(a0, c0);
        let kinds = std::iter::once(&strat_drift)
            .chain(sigmas.iter())
            .map(FlowKind::classify)
            .collect();
        AffineFieldSet {
            drift,
            sigmas,
            strat_drift,
            kinds,
            exact_flows: true,
        }
    }

    /// All fields linear: `b(x) = B x`, `sigma^j(x) = A_j x`.
    pub fn linear(drift: Matrix, sigmas: Vec<Matrix>) -> Self {
        AffineFieldSet::new(
            AffineField::linear(drift),
            sigmas.into_iter().map(AffineField::linear).collect(),
        )
    }

    /// Same coefficients with closed-form flows hidden, forcing the
    /// Runge-Kutta fallback.
    pub fn without_exact_flows(mut self) -> Self {
        self.exact_flows = false;
        self
    }

    /// The affine Stratonovich drift.
    pub fn stratonovich_field(&self) -> &AffineField {
        &self.strat_drift
    }

    fn field(&self, index: usize) -> &AffineField {
        if index == 0 {
            &self.strat_drift
        } else {
            &self.sigmas[index - 1]
        }
    }

    fn affine_flow(&self, index: usize, t: f64, x: &mut State) {
        let field = self.field(index);
        match &self.kinds[index] {
            FlowKind::Diagonal(diag) => {
                for (v, &a) in x.iter_mut().zip(diag) {
                    if a != 0.0 {
                        *v *= (a * t).exp();
                    }
                }
            }
            FlowKind::Nilpotent => {
                let v = field.eval(x);
                x.axpy(t, &v);
            }
            FlowKind::Planar => {
                let e = expm2(&field.matrix, t);
                let (x0, x1) = (x[0], x[1]);
                for (i, row) in e.iter().enumerate() {
                    // same accumulation order as `Matrix::mul_vec`
                    let mut acc = 0.0;
                    acc += row[0] * x0;
                    acc += row[1] * x1;
                    x[i] = acc;
                }
            }
            FlowKind::Augmented => self.dense_flow(index, t).apply_mut(x),
        }
    }

    fn dense_flow(&self, index: usize, t: f64) -> AffineMap {
        let field = self.field(index);
        let n = field.matrix.dim();
        if let FlowKind::Planar = self.kinds[index] {
            let e = expm2(&field.matrix, t);
            return AffineMap {
                matrix: Matrix::from_rows(&[&e[0], &e[1]]),
                offset: None,
            };
        }
        let mut aug = Matrix::zeros(n + 1);
        for i in 0..n {
            for k in 0..n {
                aug[(i, k)] = t * field.matrix[(i, k)];
            }
            aug[(i, n)] = t * field.offset[i];
        }
        let e = expm(&aug);
        let mut matrix = Matrix::zeros(n);
        let mut offset = State::zeros(n);
        for i in 0..n {
            for k in 0..n {
                matrix[(i, k)] = e[(i, k)];
            }
            offset[i] = e[(i, n)];
        }
        AffineMap {
            matrix,
            offset: Some(offset),
        }
    }
}

impl VectorFieldSet for AffineFieldSet {
    fn state_dim(&self) -> usize {
        self.drift.matrix.dim()
    }

    fn noise_dim(&self) -> usize {
        self.sigmas.len()
    }

    #[inline]
    fn drift(&self, x: &State) -> State {
        self.drift.eval(x)
    }

    #[inline]
    fn drift_jvp(&self, _x: &State, v: &State) -> State {
        self.drift.matrix.mul_vec(v)
    }

    #[inline]
    fn sigma(&self, j: usize, x: &State) -> State {
        self.sigmas[j - 1].eval(x)
    }

    #[inline]
    fn sigma_jvp(&self, j: usize, _x: &State, v: &State) -> State {
        self.sigmas[j - 1].matrix.mul_vec(v)
    }

    fn exact_flow(&self, field: usize, t: f64, x: &State) -> Option<State> {
        if !self.has_exact_flow(field) {
            return None;
        }
        let mut y = *x;
        self.affine_flow(field, t, &mut y);
        Some(y)
    }

    #[inline]
    fn exact_flow_mut(&self, field: usize, t: f64, x: &mut State) -> bool {
        if !self.has_exact_flow(field) {
            return false;
        }
        self.affine_flow(field, t, x);
        true
    }

    fn has_exact_flow(&self, field: usize) -> bool {
        self.exact_flows && field <= self.sigmas.len()
    }

    fn flow_map(&self, field: usize, t: f64) -> Option<AffineMap> {
        if !self.has_exact_flow(field) {
            return None;
        }
        match self.kinds[field] {
            FlowKind::Planar | FlowKind::Augmented => Some(self.dense_flow(field, t)),
            _ => None,
        }
    }
}
