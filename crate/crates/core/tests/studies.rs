use nvsim_core::analysis::stats::{batched_stderr, mean, sample_variance};
use nvsim_core::analysis::{
    coupled_distance, fit_rate, ks_two_sample, simulate_limit_sde, source_term_variance,
    strong_error_ladder, ErrorPoint, SourceTermSpec, StudySettings,
};
use nvsim_core::model::{catalog, problem};
use nvsim_core::randomness::{make_bundle, GridSpec};
use nvsim_core::schemes::SchemeRegistry;
use nvsim_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn ladder_errors(
    id: &str,
    scheme: &str,
    ladder: &[usize],
    paths: usize,
    refine: usize,
) -> Vec<ErrorPoint> {
    let p = problem(id).unwrap();
    let reg = SchemeRegistry::default();
    let settings = StudySettings {
        refine_factor: refine,
        ..StudySettings::default()
    };
    strong_error_ladder(
        &p,
        reg.get(scheme).unwrap(),
        ladder,
        paths,
        42,
        1,
        &settings,
    )
    .unwrap()
    .points
}

#[test]
fn heisenberg_error_halves_when_n_quadruples() {
    let pts = ladder_errors("heisenberg", "nv", &[64, 256], 4000, 64);
    let ratio = pts[0].err / pts[1].err;
    assert!((ratio - 2.0).abs() <= 0.25 * 2.0, "ratio {ratio}");
}

#[test]
fn diag_comm_error_quarters_when_n_quadruples() {
    let pts = ladder_errors("diag-comm", "nv", &[64, 256], 4000, 16);
    let ratio = pts[0].err / pts[1].err;
    assert!((ratio - 4.0).abs() <= 0.3 * 4.0, "ratio {ratio}");
}

#[test]
fn euler_on_gbm_has_strong_order_one_half() {
    let pts = ladder_errors("gbm1d", "euler", &[8, 16, 32, 64, 128, 256], 4000, 64);
    let fit = fit_rate(&pts).unwrap();
    assert!((0.35..=0.65).contains(&fit.slope), "slope {}", fit.slope);
}

#[test]
fn gbm_nv_errors_are_roundoff() {
    let pts = ladder_errors("gbm1d", "nv", &[8, 32, 128], 200, 64);
    assert!(pts.iter().all(|pt| pt.err <= 1e-12), "{pts:?}");
}

#[test]
fn surrogate_second_moments_stay_bounded() {
    let reg = SchemeRegistry::default();
    let scheme = reg.get("discrete-nv").unwrap();
    let paths = 4000;
    for p in catalog() {
        let grid_at = |n: usize| GridSpec::new(n, p.horizon).unwrap();
        // per grid, squared norms by path at each grid point
        let mut sq: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
        for i in 0..paths {
            let b = make_bundle(3, i as u64, 512, p.noise_dim(), p.horizon);
            for (slot, n) in [8usize, 512].into_iter().enumerate() {
                let traj = scheme.trajectory(&p, &b, &grid_at(n)).unwrap();
                sq[slot].push(traj.states.iter().map(|x| x.norm().powi(2)).collect());
            }
        }
        let worst = |rows: &[Vec<f64>]| {
            let k = (0..rows[0].len())
                .max_by(|&a, &b| {
                    let ma: f64 = rows.iter().map(|r| r[a]).sum();
                    let mb: f64 = rows.iter().map(|r| r[b]).sum();
                    ma.total_cmp(&mb)
                })
                .unwrap();
            let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            (mean(&col), batched_stderr(&col, 20, mean))
        };
        let (m8, s8) = worst(&sq[0]);
        let (m512, s512) = worst(&sq[1]);
        let se = (s8 * s8 + s512 * s512).sqrt();
        assert!(
            (m8 - m512).abs() < 3.0 * se.max(1e-12),
            "{}: {m8} vs {m512} (se {se})",
            p.id
        );
    }
}

#[test]
fn surrogate_distance_vanishes_on_heisenberg() {
    let p = problem("heisenberg").unwrap();
    let reg = SchemeRegistry::default();
    let pts = coupled_distance(
        &p,
        reg.get("nv").unwrap(),
        reg.get("discrete-nv").unwrap(),
        &[8, 32],
        500,
        42,
        1,
        &StudySettings::default(),
    )
    .unwrap();
    assert!(pts.iter().all(|pt| pt.err <= 1e-12));
}

#[test]
fn heisenberg_limit_variance_is_one_half() {
    // the bracket is the constant unit vector, so V_T ~ N(0, T^2 / 2) exactly
    let p = problem("heisenberg").unwrap();
    let v: Vec<f64> = simulate_limit_sde(&p, 10_000, 256, 7)
        .unwrap()
        .iter()
        .map(|s| s[1])
        .collect();
    let var = sample_variance(&v);
    let se = batched_stderr(&v, 20, sample_variance);
    assert!((var - 0.5).abs() < 3.0 * se, "{var} +- {se}");
}

#[test]
fn limit_variance_is_stable_under_refinement() {
    let p = problem("linear-nc").unwrap();
    let var_at = |n_fine: usize| {
        let v: Vec<f64> = simulate_limit_sde(&p, 10_000, n_fine, 11)
            .unwrap()
            .iter()
            .map(|s| s[1])
            .collect();
        (sample_variance(&v), batched_stderr(&v, 20, sample_variance))
    };
    let (a, sa) = var_at(512);
    let (b, sb) = var_at(1024);
    assert!(a > 0.0);
    assert!(
        (a - b).abs() < 2.0 * (sa * sa + sb * sb).sqrt(),
        "{a} vs {b}"
    );
}

fn normals(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> Vec<f64> {
    (0..n)
        .map(|_| shift + rng.sample::<f64, _>(StandardNormal))
        .collect()
}

#[test]
fn ks_pvalues_are_calibrated_under_the_null() {
    let reps = 200;
    let pvalues: Vec<f64> = (0..reps)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = normals(&mut rng, 10_000, 0.0);
            let b = normals(&mut rng, 10_000, 0.0);
            ks_two_sample(&a, &b).unwrap().p_value
        })
        .collect();
    let passing = pvalues.iter().filter(|&&p| p > 0.01).count();
    assert!(passing as f64 >= 0.95 * reps as f64, "{passing}/{reps}");
    for q in [0.1, 0.5, 0.9] {
        let frac = pvalues.iter().filter(|&&p| p <= q).count() as f64 / reps as f64;
        let sd = (q * (1.0 - q) / reps as f64).sqrt();
        assert!((frac - q).abs() <= 3.0 * sd, "quantile {q}: {frac}");
    }
}

#[test]
fn ks_detects_a_shift() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = normals(&mut rng, 10_000, 0.0);
    let b = normals(&mut rng, 10_000, 0.1);
    assert!(ks_two_sample(&a, &b).unwrap().p_value < 1e-4);
}

/// Expected variance of the left-point estimator at a grid time `t`: each
/// active step adds `N h^2 (1 - 1/S) / 2`.
fn discretized_theory(n: usize, t: f64, horizon: f64, substeps: usize) -> f64 {
    let h = horizon / n as f64;
    let active = (t / h).round();
    n as f64 * active * h * h * (1.0 - 1.0 / substeps as f64) / 2.0
}

#[test]
fn source_term_variance_matches_quadratic_variation() {
    for (n, t) in [(4, 1.0), (64, 1.0), (8, 0.5)] {
        let spec = SourceTermSpec::new(n, 2, 1, t, 1.0);
        let e = source_term_variance(&spec, 40_000, 42).unwrap();
        let want = discretized_theory(n, t, 1.0, spec.substeps);
        assert!(
            (e.var_est - want).abs() < 3.0 * e.stderr,
            "N={n} t={t}: {e:?}"
        );
        assert!((e.theory - t / 2.0).abs() < 1e-15);
    }
    let half = source_term_variance(&SourceTermSpec::new(8, 2, 1, 0.5, 1.0), 40_000, 5).unwrap();
    assert!((half.var_est - 0.25).abs() < 0.015, "{half:?}");
}

#[test]
fn studies_are_identical_across_thread_counts() {
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| ladder_errors("linear-nc", "nv", &[4, 16], 300, 8))
    };
    let one = run(1);
    let three = run(3);
    for (a, b) in one.iter().zip(&three) {
        assert_eq!(a.err.to_bits(), b.err.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }
}

#[test]
fn rate_fit_recovers_an_exact_power_law() {
    let pts: Vec<ErrorPoint> = [8usize, 16, 32, 64]
        .iter()
        .map(|&n| {
            let h = 1.0 / n as f64;
            ErrorPoint {
                n_steps: n,
                h,
                err: 3.0 * h.powf(0.75),
                stderr: 0.0,
                p: 1,
            }
        })
        .collect();
    let fit = fit_rate(&pts).unwrap();
    assert!((fit.slope - 0.75).abs() < 1e-12);
    assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
    assert!((fit.r_squared - 1.0).abs() < 1e-12);

    let zeros: Vec<ErrorPoint> = pts.iter().map(|p| ErrorPoint { err: 0.0, ..*p }).collect();
    assert!(matches!(fit_rate(&zeros), Err(Error::DegenerateFit(_))));
    let mut gap = pts.clone();
    gap[1].err = 0.0;
    let fit = fit_rate(&gap).unwrap();
    assert_eq!(fit.excluded, vec![16]);
}
