use crate::error::{Error, Result};
use crate::flows::FlowSettings;
use crate::model::Problem;
use crate::randomness::{GridSpec, PathBundle};
use crate::state::State;

use super::{NinomiyaVictoir, Scheme, StepInputs, Trajectory, TrajectoryKind};

/// Reference solution on a grid.
///
/// Uses the problem's closed form evaluated on the bundle's fine increments
/// when one exists. Otherwise runs NV on the bundle's own (finer) grid and
/// restricts it, labelling the result as a proxy.
#[derive(Debug, Clone, Copy, Default)]
pub struct Exact {
    pub flows: FlowSettings,
}

impl Exact {
    pub fn new(flows: FlowSettings) -> Self {
        Exact { flows }
    }
}

impl Scheme for Exact {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn step(&self, problem: &Problem, _x: &State, _inputs: &StepInputs) -> Result<State> {
        Err(Error::invalid(format!(
            "`exact` has no one-step map; request a trajectory for `{}`",
            problem.id
        )))
    }

    fn trajectory(
        &self,
        problem: &Problem,
        bundle: &PathBundle,
        grid: &GridSpec,
    ) -> Result<Trajectory> {
        let stride = grid.stride_in(bundle)?;
        if let Some(exact) = &problem.exact {
            let fine = exact.fine_path(&problem.x0, bundle);
            return Ok(Trajectory {
                grid: *grid,
                states: fine.into_iter().step_by(stride).collect(),
                kind: TrajectoryKind::Exact,
            });
        }
        if stride == 1 {
            return Err(Error::ReferenceUnavailable(problem.id.clone()));
        }
        let fine_grid = GridSpec::new(bundle.n_fine(), grid.horizon)?;
        let mut out = NinomiyaVictoir::new(self.flows)
            .recorded_trajectory(problem, bundle, &fine_grid, stride)?;
        out.kind = TrajectoryKind::Proxy {
            n_fine: bundle.n_fine(),
        };
        Ok(out)
    }
}
