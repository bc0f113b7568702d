use crate::error::{Error, Result};
use crate::flows::{flow_in_place, FlowSettings};
use crate::model::Problem;
use crate::randomness::{GridSpec, PathBundle};
use crate::state::State;

use super::{Scheme, StepInputs, Trajectory, TrajectoryKind};

/// Ninomiya-Victoir splitting.
///
/// A step is the operator product
/// `exp(h/2 s0) exp(dW^d s_d) ... exp(dW^1 s_1) exp(h/2 s0)` for `eta = +1`
/// and the same with the Brownian factors reversed for `eta = -1`. Products
/// act right to left: for `eta = +1` the state first follows the drift for
/// `h/2`, then `sigma^1` for time `dW^1`, ..., `sigma^d`, then the drift again.
///
/// On `sigma^1 = (1, 0)`, `sigma^2 = (0, x1)` from the origin, `eta = +1`
/// gives `(dW^1, 0)` after the first flow and `(dW^1, dW^1 dW^2)` after the
/// second, while `eta = -1` gives `(dW^1, 0)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NinomiyaVictoir {
    pub flows: FlowSettings,
}

impl NinomiyaVictoir {
    pub fn new(flows: FlowSettings) -> Self {
        NinomiyaVictoir { flows }
    }

    #[inline]
    pub(crate) fn step_unchecked(
        &self,
        problem: &Problem,
        x: &State,
        inputs: &StepInputs,
    ) -> Result<State> {
        let half = 0.5 * inputs.h;
        let fields = problem.fields.as_ref();
        self.advance(problem, x, half, &inputs.dw, inputs.eta, |y| {
            flow_in_place(fields, 0, half, y, &self.flows)
        })
    }

    /// One step with the drift half-flow supplied by the caller. A non-finite
    /// flow result is reported against the step's starting state.
    #[inline]
    fn advance(
        &self,
        problem: &Problem,
        x: &State,
        half: f64,
        dw: &[f64],
        eta: i8,
        drift: impl Fn(&mut State) -> bool,
    ) -> Result<State> {
        let fields = problem.fields.as_ref();
        let blown = |field: usize, time: f64| Error::Explosion {
            field,
            time,
            start: x.to_vec(),
        };
        let mut y = *x;
        if !drift(&mut y) {
            return Err(blown(0, half));
        }
        let d = dw.len();
        for i in 0..d {
            let j = if eta == 1 { i + 1 } else { d - i };
            if !flow_in_place(fields, j, dw[j - 1], &mut y, &self.flows) {
                return Err(blown(j, dw[j - 1]));
            }
        }
        if !drift(&mut y) {
            return Err(blown(0, half));
        }
        Ok(y)
    }

    /// Runs on `grid` but keeps only every `record`-th state.
    pub(crate) fn recorded_trajectory(
        &self,
        problem: &Problem,
        bundle: &PathBundle,
        grid: &GridSpec,
        record: usize,
    ) -> Result<Trajectory> {
        grid.stride_in(bundle)?;
        if record == 0 || grid.n_steps % record != 0 {
            return Err(Error::invalid(format!(
                "cannot record every {record}th of {} states",
                grid.n_steps
            )));
        }
        let h = grid.step();
        let half = 0.5 * h;
        let fields = problem.fields.as_ref();
        let map = fields.flow_map(0, half);
        let drift = |y: &mut State| match &map {
            Some(map) => {
                map.apply_mut(y);
                y.is_finite()
            }
            None => flow_in_place(fields, 0, half, y, &self.flows),
        };
        let coarse = bundle.coarsen(grid.n_steps)?;
        let mut x = problem.x0;
        let mut states = Vec::with_capacity(grid.n_steps / record + 1);
        states.push(x);
        for k in 0..grid.n_steps {
            x = self.advance(problem, &x, half, coarse.dw(k), coarse.eta(k), drift)?;
            if (k + 1) % record == 0 {
                states.push(x);
            }
        }
        Ok(Trajectory {
            grid: GridSpec::new(grid.n_steps / record, grid.horizon)?,
            states,
            kind: TrajectoryKind::Scheme,
        })
    }
}

impl Scheme for NinomiyaVictoir {
    fn name(&self) -> &'static str {
        "nv"
    }

    fn step(&self, problem: &Problem, x: &State, inputs: &StepInputs) -> Result<State> {
        inputs.check(problem)?;
        self.step_unchecked(problem, x, inputs)
    }

    /// Same states as iterating [`step`](Scheme::step), with the drift
    /// half-step frozen once per grid when the problem offers it.
    fn trajectory(
        &self,
        problem: &Problem,
        bundle: &PathBundle,
        grid: &GridSpec,
    ) -> Result<Trajectory> {
        self.recorded_trajectory(problem, bundle, grid, 1)
    }
}
