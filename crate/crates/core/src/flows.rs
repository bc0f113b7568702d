//! ODE flows `exp(t V) x0` of single vector fields.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{field_value, Problem, VectorFieldSet};
use crate::randomness::{family, StreamKey};
use crate::state::State;

/// Runge-Kutta fallback controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowSettings {
    /// Largest RK4 substep.
    pub delta_max: f64,
    /// Fewest RK4 substeps per flow.
    pub substeps_min: usize,
}

impl Default for FlowSettings {
    fn default() -> Self {
        FlowSettings {
            delta_max: 0.05,
            substeps_min: 4,
        }
    }
}

impl FlowSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_max > 0.0 && self.delta_max.is_finite()) || self.substeps_min == 0 {
            return Err(Error::invalid(format!(
                "flow settings need delta_max > 0 and substeps_min >= 1, got {self:?}"
            )));
        }
        Ok(())
    }

    fn substeps(&self, t: f64) -> usize {
        self.substeps_min
            .max((t.abs() / self.delta_max).ceil() as usize)
    }
}

/// Which flow to evaluate: field 0 is the Stratonovich drift, `1..=d` the
/// Brownian fields. `t` may be negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowRequest {
    pub field_index: usize,
    pub t: f64,
    pub x0: State,
}

/// Evaluates `exp(t V) x0`, exactly when the problem registers a closed form,
/// otherwise by classical RK4.
pub fn flow(problem: &Problem, req: &FlowRequest, settings: &FlowSettings) -> Result<State> {
    let fields = problem.fields.as_ref();
    if req.field_index > fields.noise_dim() {
        return Err(Error::invalid(format!(
            "field index {} exceeds d = {}",
            req.field_index,
            fields.noise_dim()
        )));
    }
    if req.x0.dim() != fields.state_dim() {
        return Err(Error::invalid(format!(
            "flow start has dimension {}, problem expects {}",
            req.x0.dim(),
            fields.state_dim()
        )));
    }
    if !req.t.is_finite() {
        return Err(Error::invalid(format!("flow time {} is not finite", req.t)));
    }
    flow_fields(fields, req.field_index, req.t, &req.x0, settings)
}

/// Unchecked flow.
#[inline]
pub(crate) fn flow_fields(
    fields: &dyn VectorFieldSet,
    index: usize,
    t: f64,
    x0: &State,
    settings: &FlowSettings,
) -> Result<State> {
    let mut x = *x0;
    if flow_in_place(fields, index, t, &mut x, settings) {
        Ok(x)
    } else {
        Err(Error::Explosion {
            field: index,
            time: t,
            start: x0.to_vec(),
        })
    }
}

/// In-place flow used by the schemes; `false` when the result is not finite.
#[inline]
pub(crate) fn flow_in_place(
    fields: &dyn VectorFieldSet,
    index: usize,
    t: f64,
    x: &mut State,
    settings: &FlowSettings,
) -> bool {
    if t == 0.0 {
        return true;
    }
    if !fields.exact_flow_mut(index, t, x) {
        *x = rk4_flow(fields, index, t, x, settings);
    }
    x.is_finite()
}

/// Fixed-step RK4 with `max(substeps_min, ceil(|t| / delta_max))` steps; a
/// negative `t` integrates with negative steps.
pub(crate) fn rk4_flow(
    fields: &dyn VectorFieldSet,
    index: usize,
    t: f64,
    x0: &State,
    settings: &FlowSettings,
) -> State {
    let m = settings.substeps(t);
    let dt = t / m as f64;
    let f = |x: &State| field_value(fields, index, x);
    let mut x = *x0;
    for _ in 0..m {
        let k1 = f(&x);
        let mut y = x;
        y.axpy(0.5 * dt, &k1);
        let k2 = f(&y);
        let mut y = x;
        y.axpy(0.5 * dt, &k2);
        let k3 = f(&y);
        let mut y = x;
        y.axpy(dt, &k3);
        let k4 = f(&y);
        x.axpy(dt / 6.0, &k1);
        x.axpy(dt / 3.0, &k2);
        x.axpy(dt / 3.0, &k3);
        x.axpy(dt / 6.0, &k4);
        if !x.is_finite() {
            break;
        }
    }
    x
}

/// Largest RK4-vs-closed-form deviation for one field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowCheckRow {
    pub field: usize,
    pub trials: usize,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowCheckReport {
    pub problem: String,
    pub settings: FlowSettings,
    pub rows: Vec<FlowCheckRow>,
}

impl FlowCheckReport {
    pub fn max_deviation(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.max_deviation)
            .fold(0.0, f64::max)
    }
}

/// Range of flow times sampled by the self-check.
pub const SELFCHECK_MAX_TIME: f64 = 0.5;
/// Half-width of the box state samples are drawn from.
pub const SELFCHECK_BOX: f64 = 2.0;

/// Compares the RK4 fallback against every registered closed-form flow at
/// `trials` random `(t, x0)`, `|t| <= 0.5`, `x0` in `[-2, 2]^n`.
pub fn flow_selfcheck(
    problem: &Problem,
    trials: usize,
    settings: &FlowSettings,
    seed: u64,
) -> Result<FlowCheckReport> {
    settings.validate()?;
    let fields = problem.fields.as_ref();
    let n = fields.state_dim();
    let exact: Vec<usize> = (0..=fields.noise_dim())
        .filter(|&i| fields.has_exact_flow(i))
        .collect();
    if exact.is_empty() {
        return Err(Error::invalid(format!(
            "problem `{}` registers no exact flow to check against",
            problem.id
        )));
    }
    let key = StreamKey::new(seed, family::FLOW_CHECK);
    let mut rows = Vec::with_capacity(exact.len());
    for index in exact {
        let mut rng = key.aux_rng(index as u64);
        let mut worst: f64 = 0.0;
        for _ in 0..trials {
            let t = rng.random_range(-SELFCHECK_MAX_TIME..=SELFCHECK_MAX_TIME);
            let mut x = State::zeros(n);
            for v in x.iter_mut() {
                *v = rng.random_range(-SELFCHECK_BOX..=SELFCHECK_BOX);
            }
            let reference = fields
                .exact_flow(index, t, &x)
                .expect("exact flow registered");
            let approx = rk4_flow(fields, index, t, &x, settings);
            worst = worst.max(approx.sub(&reference).norm());
        }
        rows.push(FlowCheckRow {
            field: index,
            trials,
            max_deviation: worst,
        });
    }
    Ok(FlowCheckReport {
        problem: problem.id.clone(),
        settings: *settings,
        rows,
    })
}
