use std::sync::Arc;

use nvsim_core::flows::{flow, flow_selfcheck, FlowRequest, FlowSettings};
use nvsim_core::model::{catalog, problem, AffineFieldSet, Problem};
use nvsim_core::{Error, Matrix, State};
use proptest::prelude::*;

fn run(p: &Problem, field: usize, t: f64, x: &State) -> State {
    let req = FlowRequest {
        field_index: field,
        t,
        x0: *x,
    };
    flow(p, &req, &FlowSettings::default()).unwrap()
}

/// `exp(t A) x` by a plain Taylor sum, no scaling.
fn taylor_expm_apply(a: &Matrix, t: f64, x: &State) -> State {
    let mut term = *x;
    let mut sum = *x;
    for k in 1..60 {
        term = a.mul_vec(&term).scaled(t / k as f64);
        sum = sum.add(&term);
    }
    sum
}

#[test]
fn selfcheck_thresholds() {
    let s = FlowSettings::default();
    let heis = flow_selfcheck(&problem("heisenberg").unwrap(), 1000, &s, 42).unwrap();
    assert!(heis.max_deviation() <= 1e-13, "{heis:?}");
    let gbm = flow_selfcheck(&problem("gbm1d").unwrap(), 1000, &s, 42).unwrap();
    let drift = gbm.rows.iter().find(|r| r.field == 0).unwrap();
    assert!(drift.max_deviation <= 1e-10, "{gbm:?}");
}

#[test]
fn selfcheck_needs_exact_flows() {
    let hidden = AffineFieldSet::linear(Matrix::zeros(1), vec![Matrix::diagonal(&[0.3])])
        .without_exact_flows();
    let p = Problem::new(
        "hidden",
        Arc::new(hidden),
        State::from_slice(&[1.0]),
        1.0,
        true,
    )
    .unwrap();
    assert!(matches!(
        flow_selfcheck(&p, 10, &FlowSettings::default(), 0),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn linear_flows_match_taylor_series() {
    // the Stratonovich drift of linear fields: B - 1/2 sum A_j^2
    let b = Matrix::diagonal(&[0.05, -0.1]);
    let a1 = Matrix::from_rows(&[&[0.2, 0.4], &[0.0, 0.1]]);
    let a2 = Matrix::from_rows(&[&[0.1, 0.0], &[0.4, 0.3]]);
    let a0 = b
        .add_scaled(-0.5, &a1.mul(&a1))
        .add_scaled(-0.5, &a2.mul(&a2));
    let p = problem("linear-nc").unwrap();
    let x = State::from_slice(&[0.7, -1.2]);
    for t in [-0.9, -0.1, 0.3, 1.4] {
        for (field, a) in [(0, &a0), (1, &a1), (2, &a2)] {
            let got = run(&p, field, t, &x);
            let want = taylor_expm_apply(a, t, &x);
            assert!(got.sub(&want).norm() < 1e-13, "field {field} t={t}");
        }
    }
}

#[test]
fn rk4_fallback_converges_to_closed_form() {
    let p = problem("linear-nc").unwrap();
    let hidden = AffineFieldSet::linear(
        Matrix::diagonal(&[0.05, -0.1]),
        vec![
            Matrix::from_rows(&[&[0.2, 0.4], &[0.0, 0.1]]),
            Matrix::from_rows(&[&[0.1, 0.0], &[0.4, 0.3]]),
        ],
    )
    .without_exact_flows();
    let q = Problem::new("hidden", Arc::new(hidden), p.x0, 1.0, false).unwrap();
    let x = State::from_slice(&[1.0, -0.5]);
    let coarse = FlowSettings {
        delta_max: 0.1,
        substeps_min: 1,
    };
    let fine = FlowSettings {
        delta_max: 0.05,
        substeps_min: 1,
    };
    for field in 0..=2 {
        let exact = run(&p, field, 0.8, &x);
        let req = FlowRequest {
            field_index: field,
            t: 0.8,
            x0: x,
        };
        let e1 = flow(&q, &req, &coarse).unwrap().sub(&exact).norm();
        let e2 = flow(&q, &req, &fine).unwrap().sub(&exact).norm();
        assert!(e1 < 1e-7, "field {field}: {e1}");
        // fourth order: halving the step cuts the error about 16-fold
        assert!(e2 < e1 / 10.0 || e2 < 1e-15, "field {field}: {e1} -> {e2}");
    }
}

#[test]
fn zero_time_is_identity_and_requests_are_validated() {
    let p = problem("diag-comm").unwrap();
    let x = State::from_slice(&[0.3, 0.4]);
    assert_eq!(run(&p, 0, 0.0, &x), x);
    let s = FlowSettings::default();
    let bad_field = FlowRequest {
        field_index: 3,
        t: 0.1,
        x0: x,
    };
    assert!(flow(&p, &bad_field, &s).is_err());
    let bad_dim = FlowRequest {
        field_index: 1,
        t: 0.1,
        x0: State::zeros(3),
    };
    assert!(flow(&p, &bad_dim, &s).is_err());
    let bad_time = FlowRequest {
        field_index: 1,
        t: f64::NAN,
        x0: x,
    };
    assert!(flow(&p, &bad_time, &s).is_err());
}

#[test]
fn exploding_flow_is_reported() {
    let p = problem("gbm1d").unwrap();
    let req = FlowRequest {
        field_index: 1,
        t: 5000.0,
        x0: State::from_slice(&[1.0]),
    };
    match flow(&p, &req, &FlowSettings::default()) {
        Err(e @ Error::Explosion { .. }) => assert!(e.is_numerical()),
        other => panic!("expected explosion, got {other:?}"),
    }
}

fn catalog_case() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (0usize..4).prop_flat_map(|i| {
        let p = &catalog()[i];
        let n = p.state_dim();
        let d = p.noise_dim();
        (Just(i), 0..=d, prop::collection::vec(-2.0f64..2.0, n))
    })
}

proptest! {
    #[test]
    fn exact_flows_form_a_group(
        (i, field, x) in catalog_case(),
        t1 in -1.0f64..1.0,
        t2 in -1.0f64..1.0,
    ) {
        let p = &catalog()[i];
        let x = State::from_slice(&x);
        let direct = run(p, field, t1 + t2, &x);
        let composed = run(p, field, t2, &run(p, field, t1, &x));
        prop_assert!(direct.sub(&composed).norm() <= 1e-12 * (1.0 + x.norm()));
        let back = run(p, field, -t1, &run(p, field, t1, &x));
        prop_assert!(back.sub(&x).norm() <= 1e-12 * (1.0 + x.norm()));
    }
}
