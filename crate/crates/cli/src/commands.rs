use std::fmt::Write as _;

use nvsim_core::analysis::{
    fit_rate, limit_law, source_term_variance, strong_error_ladder, SourceTermSpec,
};
use nvsim_core::flows::flow_selfcheck;
use nvsim_core::mlmc::{mlmc_estimate, payoff_by_name, MlmcSettings};
use nvsim_core::model::{catalog, problem};
use nvsim_core::schemes::SchemeRegistry;
use nvsim_core::Error;
use serde_json::json;

use crate::config::{CommandKind, RunConfig};
use crate::error::CliError;
use crate::output::{num, Sink, Table};

/// Strong errors below this are treated as floating-point noise.
const ROUNDOFF_ERROR: f64 = 1e-12;

/// File stems a command writes: `(tables, json-only summaries)`.
pub fn stems(command: CommandKind) -> (&'static [&'static str], &'static [&'static str]) {
    match command {
        CommandKind::Problems => (&["problems"], &[]),
        CommandKind::FlowCheck => (&["flow_check"], &[]),
        CommandKind::Convergence => (&["rate"], &[]),
        CommandKind::LimitLaw => (&["limit_law"], &[]),
        CommandKind::SourceTerm => (&["source_term"], &[]),
        CommandKind::Mlmc => (&["mlmc"], &["mlmc"]),
    }
}

/// Runs the command, writes its files and returns the text for stdout.
pub fn run(cfg: &RunConfig, sink: &Sink) -> Result<String, CliError> {
    match cfg.command {
        CommandKind::Problems => problems(sink),
        CommandKind::FlowCheck => flow_check(cfg, sink),
        CommandKind::Convergence => convergence(cfg, sink),
        CommandKind::LimitLaw => limit(cfg, sink),
        CommandKind::SourceTerm => source_term(cfg, sink),
        CommandKind::Mlmc => mlmc(cfg, sink),
    }
}

fn problems(sink: &Sink) -> Result<String, CliError> {
    let descriptors: Vec<_> = catalog().iter().map(|p| p.descriptor()).collect();
    let mut table = Table::new(&[
        "id",
        "n",
        "d",
        "T",
        "commutative",
        "exact_solution",
        "description",
    ]);
    let mut text = String::new();
    for p in &descriptors {
        table.push(vec![
            p.id.clone(),
            p.n.to_string(),
            p.d.to_string(),
            num(p.horizon),
            p.commutative_flag.to_string(),
            p.exact_solution.to_string(),
            p.description.clone(),
        ]);
        let _ = writeln!(text, "{:<12} n={} d={}  {}", p.id, p.n, p.d, p.description);
    }
    sink.write_table("problems", &table, json!({ "problems": descriptors }))?;
    Ok(text)
}

fn flow_check(cfg: &RunConfig, sink: &Sink) -> Result<String, CliError> {
    let p = problem(&cfg.problem)?;
    let report = flow_selfcheck(&p, cfg.trials, &cfg.study.flows, cfg.seed)?;
    let mut table = Table::new(&["problem", "field", "trials", "max_deviation"]);
    let mut text = String::new();
    for row in &report.rows {
        table.push(vec![
            p.id.clone(),
            row.field.to_string(),
            row.trials.to_string(),
            num(row.max_deviation),
        ]);
        let _ = writeln!(
            text,
            "field {}: max deviation {:.3e}",
            row.field, row.max_deviation
        );
    }
    let _ = writeln!(text, "max deviation {:.3e}", report.max_deviation());
    sink.write_table(
        "flow_check",
        &table,
        json!({ "report": report, "max_deviation": report.max_deviation() }),
    )?;
    Ok(text)
}

fn convergence(cfg: &RunConfig, sink: &Sink) -> Result<String, CliError> {
    let p = problem(&cfg.problem)?;
    let registry = SchemeRegistry::builtin(cfg.study.flows);
    let scheme = registry.get(&cfg.scheme)?;
    let study = strong_error_ladder(
        &p,
        scheme,
        &cfg.nladder,
        cfg.paths,
        cfg.seed,
        cfg.p,
        &cfg.study,
    )?;
    let (fit, fit_error) = match fit_rate(&study.points) {
        Ok(f) => (Some(f), None),
        Err(e @ Error::DegenerateFit(_)) => (None, Some(e)),
        // too few ladder points to fit: report the errors alone
        Err(Error::InvalidInput(_)) => (None, None),
        Err(e) => return Err(e.into()),
    };

    let mut table = Table::new(&["problem", "scheme", "N", "h", "err", "stderr", "p"]);
    let mut text = String::new();
    for pt in &study.points {
        table.push(vec![
            p.id.clone(),
            scheme.name().to_string(),
            pt.n_steps.to_string(),
            num(pt.h),
            num(pt.err),
            num(pt.stderr),
            pt.p.to_string(),
        ]);
        let _ = writeln!(
            text,
            "N={:<5} err={:.5e} stderr={:.2e}",
            pt.n_steps, pt.err, pt.stderr
        );
    }
    let fit_json = fit.as_ref().map(|f| {
        json!({
            "slope": f.slope,
            "intercept": f.intercept,
            "r_squared": f.r_squared,
            "excluded": f.excluded,
        })
    });
    if let Some(f) = &fit {
        let _ = writeln!(text, "slope {:.4}  R^2 {:.4}", f.slope, f.r_squared);
        if study.points.iter().all(|pt| pt.err < ROUNDOFF_ERROR) {
            let _ = writeln!(
                text,
                "note: all errors are at round-off level, the slope carries no rate"
            );
        }
        if f.has_warnings() {
            let _ = writeln!(
                text,
                "warning: zero error at N in {:?}, left out of the fit",
                f.excluded
            );
        }
    }
    sink.write_table(
        "rate",
        &table,
        json!({
            "problem": p.id,
            "scheme": scheme.name(),
            "reference": study.reference,
            "n_fine": study.n_fine,
            "points": study.points,
            "fit": fit_json,
        }),
    )?;
    match fit_error {
        Some(e) => Err(e.into()),
        None => Ok(text),
    }
}

fn limit(cfg: &RunConfig, sink: &Sink) -> Result<String, CliError> {
    let p = problem(&cfg.problem)?;
    let r = limit_law(&p, cfg.n_steps, cfg.paths, cfg.nfine, cfg.seed, &cfg.study)?;
    let mut table = Table::new(&[
        "problem",
        "N",
        "coord",
        "mean_scheme",
        "mean_limit",
        "var_scheme",
        "var_limit",
        "ks_stat",
        "ks_pvalue",
    ]);
    let mut text = String::new();
    for i in 0..r.ks_stat.len() {
        table.push(vec![
            p.id.clone(),
            r.n_steps.to_string(),
            (i + 1).to_string(),
            num(r.mean_scheme[i]),
            num(r.mean_limit[i]),
            num(r.cov_scheme[i][i]),
            num(r.cov_limit[i][i]),
            num(r.ks_stat[i]),
            num(r.ks_pvalue[i]),
        ]);
        let _ = writeln!(
            text,
            "coord {}: var scheme {:.4} limit {:.4}  KS D={:.4} p={:.3}",
            i + 1,
            r.cov_scheme[i][i],
            r.cov_limit[i][i],
            r.ks_stat[i],
            r.ks_pvalue[i]
        );
    }
    sink.write_table(
        "limit_law",
        &table,
        json!({ "problem": p.id, "nfine_limit": cfg.nfine, "report": r }),
    )?;
    Ok(text)
}

fn source_term(cfg: &RunConfig, sink: &Sink) -> Result<String, CliError> {
    let spec = SourceTermSpec::new(cfg.n_steps, cfg.j, cfg.m, cfg.t, cfg.horizon);
    let e = source_term_variance(&spec, cfg.paths, cfg.seed)?;
    let mut table = Table::new(&["N", "j", "m", "t", "var_est", "stderr", "theory"]);
    table.push(vec![
        spec.n_steps.to_string(),
        spec.j.to_string(),
        spec.m.to_string(),
        num(spec.t),
        num(e.var_est),
        num(e.stderr),
        num(e.theory),
    ]);
    sink.write_table("source_term", &table, json!({ "estimate": e }))?;
    Ok(format!(
        "Var(Y) = {:.5} +- {:.5}  (theory {:.5})\n",
        e.var_est, e.stderr, e.theory
    ))
}

fn mlmc(cfg: &RunConfig, sink: &Sink) -> Result<String, CliError> {
    let p = problem(&cfg.problem)?;
    let payoff = payoff_by_name(&cfg.payoff)?;
    let settings = MlmcSettings {
        n0: cfg.n0,
        flows: cfg.study.flows,
        ..MlmcSettings::default()
    };
    let r = mlmc_estimate(
        &p,
        payoff.as_ref(),
        cfg.levels,
        cfg.paths_per_level,
        cfg.seed,
        &settings,
    )?;
    let mut table = Table::new(&["level", "N", "mean_diff", "var_diff", "cost"]);
    let mut text = String::new();
    for l in &r.levels {
        table.push(vec![
            l.level.to_string(),
            l.n_steps.to_string(),
            num(l.mean_diff),
            num(l.var_diff),
            l.cost.to_string(),
        ]);
        let _ = writeln!(
            text,
            "level {:<2} N={:<5} mean {:+.4e} var {:.4e}",
            l.level, l.n_steps, l.mean_diff, l.var_diff
        );
    }
    let _ = writeln!(text, "estimate {:.6} +- {:.6}", r.estimate, r.stderr);
    match r.beta_fit {
        Some(b) => {
            let _ = writeln!(text, "beta_fit {b:.4}");
        }
        None => {
            let _ = writeln!(
                text,
                "beta_fit undefined (fewer than two fit levels above round-off)"
            );
        }
    }
    let body = json!({
        "problem": r.problem,
        "payoff": r.payoff,
        "estimate": r.estimate,
        "stderr": r.stderr,
        "total_cost": r.total_cost,
        "beta_fit": r.beta_fit,
        "beta_fit_from": settings.beta_fit_from,
        "levels": r.levels,
    });
    sink.write_table("mlmc", &table, body.clone())?;
    if !cfg.format.json() {
        sink.write_json("mlmc", body)?;
    }
    Ok(text)
}
