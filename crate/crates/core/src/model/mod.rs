//! SDE problem definitions.
//!
//! An Itô SDE `dX = b(X) dt + sum_j sigma^j(X) dW^j` is described by a
//! [`VectorFieldSet`]. Brownian fields are indexed `1..=d`; index `0` denotes
//! the Stratonovich drift `sigma^0 = b - 1/2 sum_j (d sigma^j) sigma^j` wherever
//! a single index covers all fields (flows, the NV composition).
//!
//! Jacobians follow the convention `(d sigma^j)_{ik} = d sigma^{ij} / d x_k` and
//! are exposed primarily as Jacobian-vector products, which is all the schemes
//! need; full matrices are assembled from them on demand.

mod affine;
mod catalog;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::randomness::PathBundle;
use crate::state::{Matrix, State, MAX_DIM};

pub use affine::{AffineField, AffineFieldSet, AffineMap};
pub use catalog::{catalog, problem, GbmSolution, HeisenbergSolution, GBM_MU, GBM_SIGMA};

/// Coefficients of an SDE together with their analytic Jacobians.
pub trait VectorFieldSet: Send + Sync {
    /// State dimension `n`.
    fn state_dim(&self) -> usize;
    /// Brownian dimension `d`.
    fn noise_dim(&self) -> usize;

    /// Itô drift `b(x)`.
    fn drift(&self, x: &State) -> State;
    /// `(d b)(x) v`.
    fn drift_jvp(&self, x: &State, v: &State) -> State;

    /// Brownian field `sigma^j(x)`, `j` in `1..=d`.
    fn sigma(&self, j: usize, x: &State) -> State;
    /// `(d sigma^j)(x) v`, `j` in `1..=d`.
    fn sigma_jvp(&self, j: usize, x: &State, v: &State) -> State;

    /// Closed-form flow `exp(t V) x` of field `field` (0 = Stratonovich drift),
    /// if one is known.
    fn exact_flow(&self, _field: usize, _t: f64, _x: &State) -> Option<State> {
        None
    }

    /// In-place variant of [`exact_flow`](Self::exact_flow); returns `false`
    /// and leaves `x` untouched when no closed form is known.
    fn exact_flow_mut(&self, field: usize, t: f64, x: &mut State) -> bool {
        match self.exact_flow(field, t, x) {
            Some(y) => {
                *x = y;
                true
            }
            None => false,
        }
    }

    /// Whether [`exact_flow`](Self::exact_flow) is available for `field`.
    fn has_exact_flow(&self, _field: usize) -> bool {
        false
    }

    /// The flow of `field` at fixed time `t` as an affine map, when that is
    /// cheaper to reuse than to recompute. Whenever this returns `Some`,
    /// applying the map must equal [`exact_flow`](Self::exact_flow) bit for bit.
    fn flow_map(&self, _field: usize, _t: f64) -> Option<AffineMap> {
        None
    }

    /// Full Jacobian of `sigma^j` at `x`.
    fn jac_sigma(&self, j: usize, x: &State) -> Matrix {
        assemble_jacobian(x.dim(), |v| self.sigma_jvp(j, x, v))
    }

    /// Full Jacobian of the drift at `x`.
    fn jac_drift(&self, x: &State) -> Matrix {
        assemble_jacobian(x.dim(), |v| self.drift_jvp(x, v))
    }
}

fn assemble_jacobian(n: usize, jvp: impl Fn(&State) -> State) -> Matrix {
    let mut m = Matrix::zeros(n);
    for k in 0..n {
        m.set_column(k, &jvp(&State::unit(n, k)));
    }
    m
}

fn check_state(fields: &dyn VectorFieldSet, x: &State) -> Result<()> {
    if x.dim() != fields.state_dim() {
        return Err(Error::invalid(format!(
            "state has dimension {}, problem expects {}",
            x.dim(),
            fields.state_dim()
        )));
    }
    Ok(())
}

/// `sum_j (d sigma^j) sigma^j (x)`, twice the Itô-to-Stratonovich correction.
#[inline]
pub(crate) fn ito_correction(fields: &dyn VectorFieldSet, x: &State) -> State {
    let mut acc = State::zeros(x.dim());
    for j in 1..=fields.noise_dim() {
        let s = fields.sigma(j, x);
        acc = acc.add(&fields.sigma_jvp(j, x, &s));
    }
    acc
}

#[inline]
pub(crate) fn stratonovich_drift_unchecked(fields: &dyn VectorFieldSet, x: &State) -> State {
    let mut out = fields.drift(x);
    out.axpy(-0.5, &ito_correction(fields, x));
    out
}

/// Stratonovich drift `sigma^0(x) = b(x) - 1/2 sum_j (d sigma^j)(x) sigma^j(x)`.
pub fn stratonovich_drift(fields: &dyn VectorFieldSet, x: &State) -> Result<State> {
    check_state(fields, x)?;
    Ok(stratonovich_drift_unchecked(fields, x))
}

/// Value of field `index` at `x`, where index 0 is the Stratonovich drift.
#[inline]
pub(crate) fn field_value(fields: &dyn VectorFieldSet, index: usize, x: &State) -> State {
    if index == 0 {
        stratonovich_drift_unchecked(fields, x)
    } else {
        fields.sigma(index, x)
    }
}

#[inline]
pub(crate) fn lie_bracket_unchecked(
    fields: &dyn VectorFieldSet,
    j: usize,
    m: usize,
    x: &State,
) -> State {
    let sj = fields.sigma(j, x);
    let sm = fields.sigma(m, x);
    fields
        .sigma_jvp(m, x, &sj)
        .sub(&fields.sigma_jvp(j, x, &sm))
}

/// Lie bracket `[sigma^j, sigma^m](x) = (d sigma^m) sigma^j - (d sigma^j) sigma^m`
/// for `1 <= m < j <= d`.
pub fn lie_bracket(fields: &dyn VectorFieldSet, j: usize, m: usize, x: &State) -> Result<State> {
    check_state(fields, x)?;
    let d = fields.noise_dim();
    if !(1 <= m && m < j && j <= d) {
        return Err(Error::invalid(format!(
            "bracket indices must satisfy 1 <= m < j <= {d}, got j={j}, m={m}"
        )));
    }
    Ok(lie_bracket_unchecked(fields, j, m, x))
}

/// All brackets `[sigma^j, sigma^m]`, `m < j`, of one field set.
#[derive(Clone)]
pub struct BracketTable {
    fields: Arc<dyn VectorFieldSet>,
    pairs: Vec<(usize, usize)>,
}

impl BracketTable {
    pub fn new(fields: Arc<dyn VectorFieldSet>) -> Self {
        let d = fields.noise_dim();
        let pairs = (1..=d).flat_map(|j| (1..j).map(move |m| (j, m))).collect();
        BracketTable { fields, pairs }
    }

    /// `(j, m)` pairs in lexicographic order of `j`, then `m`.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn eval(&self, j: usize, m: usize, x: &State) -> Result<State> {
        lie_bracket(self.fields.as_ref(), j, m, x)
    }

    /// Largest bracket norm at `x`.
    pub fn max_norm(&self, x: &State) -> f64 {
        self.pairs
            .iter()
            .map(|&(j, m)| lie_bracket_unchecked(self.fields.as_ref(), j, m, x).norm())
            .fold(0.0, f64::max)
    }
}

/// Exact solution evaluated pathwise from a Brownian path.
pub trait ClosedForm: Send + Sync {
    /// Solution at every fine time `k * T / N_fine`, `k = 0..=N_fine`, driven by
    /// the bundle's fine increments.
    fn fine_path(&self, x0: &State, bundle: &PathBundle) -> Vec<State>;
}

/// An SDE with starting point and horizon.
#[derive(Clone)]
pub struct Problem {
    pub id: String,
    pub description: String,
    pub fields: Arc<dyn VectorFieldSet>,
    pub x0: State,
    pub horizon: f64,
    /// Asserted by construction: all Brownian brackets vanish.
    pub commutative: bool,
    pub exact: Option<Arc<dyn ClosedForm>>,
}

impl Problem {
    pub fn new(
        id: impl Into<String>,
        fields: Arc<dyn VectorFieldSet>,
        x0: State,
        horizon: f64,
        commutative: bool,
    ) -> Result<Self> {
        let (n, d) = (fields.state_dim(), fields.noise_dim());
        if n == 0 || n > MAX_DIM || d == 0 || d > MAX_DIM {
            return Err(Error::invalid(format!(
                "dimensions n={n}, d={d} outside 1..={MAX_DIM}"
            )));
        }
        check_state(fields.as_ref(), &x0)?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        Ok(Problem {
            id: id.into(),
            description: String::new(),
            fields,
            x0,
            horizon,
            commutative,
            exact: None,
        })
    }

    pub fn with_exact(mut self, exact: Arc<dyn ClosedForm>) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn with_description(mut self, text: impl Into<String>) -> Self {
        self.description = text.into();
        self
    }

    pub fn state_dim(&self) -> usize {
        self.fields.state_dim()
    }

    pub fn noise_dim(&self) -> usize {
        self.fields.noise_dim()
    }

    pub fn brackets(&self) -> BracketTable {
        BracketTable::new(self.fields.clone())
    }

    pub fn descriptor(&self) -> ProblemDescriptor {
        ProblemDescriptor {
            id: self.id.clone(),
            n: self.state_dim(),
            d: self.noise_dim(),
            horizon: self.horizon,
            x0: self.x0.to_vec(),
            commutative_flag: self.commutative,
            exact_solution: self.exact.is_some(),
            description: self.description.clone(),
        }
    }
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("id", &self.id)
            .field("n", &self.state_dim())
            .field("d", &self.noise_dim())
            .field("x0", &self.x0)
            .field("horizon", &self.horizon)
            .field("commutative", &self.commutative)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

/// JSON descriptor exported by the `problems` command.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ProblemDescriptor {
    pub id: String,
    pub n: usize,
    pub d: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub x0: Vec<f64>,
    pub commutative_flag: bool,
    pub exact_solution: bool,
    pub description: String,
}
