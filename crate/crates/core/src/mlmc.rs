//! Multilevel Monte Carlo on top of the NV scheme.
//!
//! Level `l` runs NV with `N_l = N_0 2^l` steps. For `l >= 1` the fine and
//! coarse runs share one bundle: the coarse run sees summed increments and the
//! sign of the first fine substep of each coarse step. Per-level sample counts
//! are fixed.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analysis::stats::{mean, ols, sample_variance};
use crate::error::{Error, Result};
use crate::flows::FlowSettings;
use crate::model::Problem;
use crate::parallel::map_paths;
use crate::randomness::{family, GridSpec, StreamKey};
use crate::schemes::{NinomiyaVictoir, Scheme};
use crate::state::State;

/// Scalar functional of the terminal state.
pub trait Payoff: Send + Sync {
    fn name(&self) -> String;
    fn eval(&self, x: &State) -> f64;
    /// Smallest state dimension the payoff can read.
    fn required_dim(&self) -> usize {
        1
    }
}

/// `x_k` (1-based).
#[derive(Debug, Clone, Copy)]
pub struct Coordinate(pub usize);

impl Payoff for Coordinate {
    fn name(&self) -> String {
        format!("coord{}", self.0)
    }
    fn eval(&self, x: &State) -> f64 {
        x[self.0 - 1]
    }
    fn required_dim(&self) -> usize {
        self.0
    }
}

/// Euclidean norm.
#[derive(Debug, Clone, Copy)]
pub struct Norm2;

impl Payoff for Norm2 {
    fn name(&self) -> String {
        "norm2".into()
    }
    fn eval(&self, x: &State) -> f64 {
        x.norm()
    }
}

/// `max(x_1 - K, 0)`.
#[derive(Debug, Clone, Copy)]
pub struct Call {
    pub strike: f64,
}

impl Payoff for Call {
    fn name(&self) -> String {
        format!("call({})", self.strike)
    }
    fn eval(&self, x: &State) -> f64 {
        (x[0] - self.strike).max(0.0)
    }
}

impl fmt::Debug for dyn Payoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Parses `identity`, `coord<k>`, `norm2` or `call(<K>)`.
pub fn payoff_by_name(name: &str) -> Result<Box<dyn Payoff>> {
    let unknown = || Error::Unknown {
        kind: "payoff",
        name: name.to_string(),
    };
    let name = name.trim();
    if name == "identity" {
        return Ok(Box::new(Coordinate(1)));
    }
    if name == "norm2" {
        return Ok(Box::new(Norm2));
    }
    if let Some(k) = name.strip_prefix("coord") {
        let k: usize = k.parse().map_err(|_| unknown())?;
        if k == 0 {
            return Err(unknown());
        }
        return Ok(Box::new(Coordinate(k)));
    }
    if let Some(rest) = name.strip_prefix("call(").and_then(|r| r.strip_suffix(')')) {
        let strike: f64 = rest.trim().parse().map_err(|_| unknown())?;
        return Ok(Box::new(Call { strike }));
    }
    Err(unknown())
}

fn check_payoff(problem: &Problem, payoff: &dyn Payoff) -> Result<()> {
    if payoff.required_dim() > problem.state_dim() {
        return Err(Error::invalid(format!(
            "payoff `{}` does not apply to problem `{}` (n = {})",
            payoff.name(),
            problem.id,
            problem.state_dim()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlmcSettings {
    /// Steps at level 0.
    pub n0: usize,
    /// First level included in the variance-decay fit.
    pub beta_fit_from: usize,
    pub flows: FlowSettings,
}

impl Default for MlmcSettings {
    fn default() -> Self {
        MlmcSettings {
            n0: 1,
            beta_fit_from: 2,
            flows: FlowSettings::default(),
        }
    }
}

impl MlmcSettings {
    pub fn steps_at(&self, level: usize) -> usize {
        self.n0 << level
    }
}

/// Samples of `f(X^{N_l}_T) - f(X^{N_{l-1}}_T)` on coupled paths, or of
/// `f(X^{N_0}_T)` at level 0.
pub fn level_difference_samples(
    problem: &Problem,
    payoff: &dyn Payoff,
    level: usize,
    paths: usize,
    master_seed: u64,
    settings: &MlmcSettings,
) -> Result<Vec<f64>> {
    if settings.n0 == 0 || level > 40 {
        return Err(Error::invalid("need n0 >= 1 and level <= 40"));
    }
    check_payoff(problem, payoff)?;
    let nv = NinomiyaVictoir::new(settings.flows);
    let n_fine = settings.steps_at(level);
    let fine = GridSpec::new(n_fine, problem.horizon)?;
    let coarse = (level > 0)
        .then(|| GridSpec::new(n_fine / 2, problem.horizon))
        .transpose()?;
    let key = StreamKey::new(master_seed, family::MLMC_LEVEL_BASE + level as u64);
    map_paths(paths, |i| {
        let bundle = key.bundle(i, n_fine, problem.noise_dim(), problem.horizon);
        let pf = payoff.eval(nv.trajectory(problem, &bundle, &fine)?.terminal());
        match &coarse {
            None => Ok(pf),
            Some(g) => {
                let pc = payoff.eval(nv.trajectory(problem, &bundle, g)?.terminal());
                Ok(pf - pc)
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelStats {
    pub level: usize,
    #[serde(rename = "N")]
    pub n_steps: usize,
    pub paths: usize,
    pub mean_diff: f64,
    pub var_diff: f64,
    /// Scheme steps simulated at this level.
    pub cost: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MlmcReport {
    pub problem: String,
    pub payoff: String,
    pub levels: Vec<LevelStats>,
    pub estimate: f64,
    pub stderr: f64,
    pub total_cost: u64,
    /// Fitted `beta` in `var_diff ~ 2^{-beta l}` over levels `>= beta_fit_from`.
    pub beta_fit: Option<f64>,
}

/// Telescoping estimator of `E[f(X_T)]` with levels `0..=l_max`.
pub fn mlmc_estimate(
    problem: &Problem,
    payoff: &dyn Payoff,
    l_max: usize,
    paths_per_level: usize,
    master_seed: u64,
    settings: &MlmcSettings,
) -> Result<MlmcReport> {
    if l_max < 1 {
        return Err(Error::invalid("MLMC needs at least levels 0 and 1"));
    }
    if paths_per_level < 2 {
        return Err(Error::invalid("at least two paths per level required"));
    }
    let mut levels = Vec::with_capacity(l_max + 1);
    for level in 0..=l_max {
        let samples = level_difference_samples(
            problem,
            payoff,
            level,
            paths_per_level,
            master_seed,
            settings,
        )?;
        let n = settings.steps_at(level);
        let steps_per_path = if level == 0 { n } else { n + n / 2 };
        levels.push(LevelStats {
            level,
            n_steps: n,
            paths: paths_per_level,
            mean_diff: mean(&samples),
            var_diff: sample_variance(&samples),
            cost: (steps_per_path * paths_per_level) as u64,
        });
    }
    let estimate = levels.iter().map(|l| l.mean_diff).sum();
    let stderr = levels
        .iter()
        .map(|l| l.var_diff / l.paths as f64)
        .sum::<f64>()
        .sqrt();
    let total_cost = levels.iter().map(|l| l.cost).sum();
    Ok(MlmcReport {
        problem: problem.id.clone(),
        payoff: payoff.name(),
        beta_fit: fit_beta(&levels, settings.beta_fit_from),
        levels,
        estimate,
        stderr,
        total_cost,
    })
}

/// Variances at or below `(64 eps)^2` times the level-0 second moment are
/// floating-point noise of differences that vanish identically.
fn roundoff_floor(levels: &[LevelStats]) -> f64 {
    let scale = levels
        .iter()
        .find(|l| l.level == 0)
        .map_or(0.0, |l| l.var_diff + l.mean_diff * l.mean_diff);
    (64.0 * f64::EPSILON).powi(2) * scale
}

/// OLS of `-log2 var_diff` on the level, over levels `>= from` (and `>= 1`)
/// whose variance is above the round-off floor. `None` with fewer than two
/// such levels.
pub fn fit_beta(levels: &[LevelStats], from: usize) -> Option<f64> {
    let floor = roundoff_floor(levels);
    let (x, y): (Vec<f64>, Vec<f64>) = levels
        .iter()
        .filter(|l| l.level >= from.max(1) && l.var_diff > floor)
        .map(|l| (l.level as f64, -l.var_diff.log2()))
        .unzip();
    (x.len() >= 2).then(|| ols(&x, &y).0)
}
