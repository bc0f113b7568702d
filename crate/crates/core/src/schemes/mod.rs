//! One-step maps and trajectory drivers, registered by name.
//!
//! | name          | scheme                                                   |
//! |---------------|----------------------------------------------------------|
//! | `nv`          | Ninomiya-Victoir splitting                               |
//! | `discrete-nv` | adapted Milstein-type surrogate with sign-ordered cross terms |
//! | `euler`       | Euler-Maruyama baseline                                  |
//! | `exact`       | closed form, or NV on the bundle's fine grid as a proxy  |

mod discrete;
mod euler;
mod exact;
mod nv;

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flows::FlowSettings;
use crate::model::Problem;
use crate::randomness::{GridSpec, PathBundle};
use crate::state::State;

pub use discrete::DiscreteNv;
pub use euler::Euler;
pub use exact::Exact;
pub use nv::NinomiyaVictoir;

/// Inputs of one step `t_k -> t_{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInputs {
    pub h: f64,
    /// Brownian increments, one per coordinate.
    pub dw: State,
    /// Rademacher sign selecting the composition order.
    pub eta: i8,
}

impl StepInputs {
    pub fn new(h: f64, dw: &[f64], eta: i8) -> Self {
        StepInputs {
            h,
            dw: State::from_slice(dw),
            eta,
        }
    }

    fn check(&self, problem: &Problem) -> Result<()> {
        if self.dw.dim() != problem.noise_dim() {
            return Err(Error::invalid(format!(
                "step has {} increments, problem has d = {}",
                self.dw.dim(),
                problem.noise_dim()
            )));
        }
        if !(self.h > 0.0) {
            return Err(Error::invalid(format!(
                "step size must be positive, got {}",
                self.h
            )));
        }
        if self.eta != 1 && self.eta != -1 {
            return Err(Error::invalid(format!(
                "eta must be +1 or -1, got {}",
                self.eta
            )));
        }
        Ok(())
    }
}

/// Provenance of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TrajectoryKind {
    Scheme,
    Exact,
    /// NV on a refined grid standing in for the exact solution.
    Proxy {
        n_fine: usize,
    },
}

/// Scheme states at the grid times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: GridSpec,
    /// `states[k]` approximates `X_{t_k}`, `k = 0..=N`.
    pub states: Vec<State>,
    pub kind: TrajectoryKind,
}

impl Trajectory {
    pub fn terminal(&self) -> &State {
        self.states
            .last()
            .expect("trajectory has at least the initial state")
    }

    /// Restriction to a coarser grid of `n_steps` steps.
    pub fn subsample(&self, n_steps: usize) -> Result<Trajectory> {
        let grid = GridSpec::new(n_steps, self.grid.horizon)?;
        if self.grid.n_steps % n_steps != 0 {
            return Err(Error::invalid(format!(
                "{n_steps} does not divide {} steps",
                self.grid.n_steps
            )));
        }
        let stride = self.grid.n_steps / n_steps;
        Ok(Trajectory {
            grid,
            states: self.states.iter().step_by(stride).copied().collect(),
            kind: self.kind,
        })
    }

    /// `max_k ||self_k - other_k||` over a common grid.
    pub fn max_distance(&self, other: &Trajectory) -> f64 {
        debug_assert_eq!(self.states.len(), other.states.len());
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| a.sub(b).norm())
            .fold(0.0, f64::max)
    }
}

/// A discretization scheme for the problem's SDE.
pub trait Scheme: Send + Sync {
    /// Registry name.
    fn name(&self) -> &'static str;

    /// One step from `x` at `t_k` to `t_{k+1}`.
    fn step(&self, problem: &Problem, x: &State, inputs: &StepInputs) -> Result<State>;

    /// Iterates [`step`](Self::step) on the bundle coarsened to `grid`.
    fn trajectory(
        &self,
        problem: &Problem,
        bundle: &PathBundle,
        grid: &GridSpec,
    ) -> Result<Trajectory> {
        stepping_trajectory(self, problem, bundle, grid)
    }
}

pub(crate) fn stepping_trajectory<S: Scheme + ?Sized>(
    scheme: &S,
    problem: &Problem,
    bundle: &PathBundle,
    grid: &GridSpec,
) -> Result<Trajectory> {
    grid.stride_in(bundle)?;
    let coarse = bundle.coarsen(grid.n_steps)?;
    let h = grid.step();
    let mut x = problem.x0;
    let mut states = Vec::with_capacity(grid.n_steps + 1);
    states.push(x);
    for k in 0..grid.n_steps {
        let inputs = StepInputs::new(h, coarse.dw(k), coarse.eta(k));
        x = scheme.step(problem, &x, &inputs)?;
        states.push(x);
    }
    Ok(Trajectory {
        grid: *grid,
        states,
        kind: TrajectoryKind::Scheme,
    })
}

/// Name-indexed set of schemes.
pub struct SchemeRegistry {
    entries: Vec<Box<dyn Scheme>>,
}

impl SchemeRegistry {
    pub fn empty() -> Self {
        SchemeRegistry {
            entries: Vec::new(),
        }
    }

    /// `nv`, `discrete-nv`, `euler` and `exact`.
    pub fn builtin(flows: FlowSettings) -> Self {
        let mut r = SchemeRegistry::empty();
        r.register(Box::new(NinomiyaVictoir::new(flows)));
        r.register(Box::new(DiscreteNv));
        r.register(Box::new(Euler));
        r.register(Box::new(Exact::new(flows)));
        r
    }

    /// Adds a scheme, replacing any previous one of the same name.
    pub fn register(&mut self, scheme: Box<dyn Scheme>) {
        self.entries.retain(|s| s.name() != scheme.name());
        self.entries.push(scheme);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Scheme> {
        self.entries
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
            .ok_or_else(|| Error::Unknown {
                kind: "scheme",
                name: name.to_string(),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|s| s.name()).collect()
    }
}

impl Default for SchemeRegistry {
    fn default() -> Self {
        SchemeRegistry::builtin(FlowSettings::default())
    }
}

impl fmt::Debug for SchemeRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SchemeRegistry")
            .field("schemes", &self.names())
            .finish()
    }
}

/// Ninomiya-Victoir step with default flow settings.
pub fn nv_step(problem: &Problem, x: &State, inputs: &StepInputs) -> Result<State> {
    NinomiyaVictoir::default().step(problem, x, inputs)
}

pub fn nv_trajectory(
    problem: &Problem,
    bundle: &PathBundle,
    grid: &GridSpec,
) -> Result<Trajectory> {
    NinomiyaVictoir::default().trajectory(problem, bundle, grid)
}

pub fn discrete_nv_step(problem: &Problem, x: &State, inputs: &StepInputs) -> Result<State> {
    DiscreteNv.step(problem, x, inputs)
}

pub fn euler_step(problem: &Problem, x: &State, inputs: &StepInputs) -> Result<State> {
    Euler.step(problem, x, inputs)
}

pub fn exact_trajectory(
    problem: &Problem,
    bundle: &PathBundle,
    grid: &GridSpec,
) -> Result<Trajectory> {
    Exact::default().trajectory(problem, bundle, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::problem;
    use crate::randomness::make_bundle;

    #[test]
    fn registry_lookup() {
        let r = SchemeRegistry::default();
        assert_eq!(r.names(), vec!["nv", "discrete-nv", "euler", "exact"]);
        assert_eq!(r.get("euler").unwrap().name(), "euler");
        assert!(matches!(r.get("rk45"), Err(Error::Unknown { .. })));
    }

    #[test]
    fn register_replaces_same_name() {
        let mut r = SchemeRegistry::default();
        r.register(Box::new(Euler));
        assert_eq!(r.names().len(), 4);
    }

    #[test]
    fn step_inputs_are_validated() {
        let p = problem("heisenberg").unwrap();
        let x = State::zeros(2);
        assert!(nv_step(&p, &x, &StepInputs::new(0.1, &[0.1], 1)).is_err());
        assert!(euler_step(&p, &x, &StepInputs::new(0.0, &[0.1, 0.2], 1)).is_err());
        assert!(discrete_nv_step(&p, &x, &StepInputs::new(0.1, &[0.1, 0.2], 0)).is_err());
    }

    #[test]
    fn trajectory_starts_at_x0_and_has_n_plus_one_states() {
        let p = problem("linear-nc").unwrap();
        let b = make_bundle(5, 0, 16, 2, 1.0);
        let g = GridSpec::new(8, 1.0).unwrap();
        for name in ["nv", "discrete-nv", "euler", "exact"] {
            let t = SchemeRegistry::default()
                .get(name)
                .unwrap()
                .trajectory(&p, &b, &g)
                .unwrap();
            assert_eq!(t.states.len(), 9);
            assert_eq!(t.states[0], p.x0);
        }
    }

    #[test]
    fn subsample_keeps_grid_points() {
        let p = problem("heisenberg").unwrap();
        let b = make_bundle(5, 0, 16, 2, 1.0);
        let t = nv_trajectory(&p, &b, &GridSpec::new(16, 1.0).unwrap()).unwrap();
        let s = t.subsample(4).unwrap();
        assert_eq!(s.states.len(), 5);
        assert_eq!(s.states[2], t.states[8]);
        assert!(t.subsample(3).is_err());
    }
}
