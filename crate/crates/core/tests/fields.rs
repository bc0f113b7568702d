use nvsim_core::model::{catalog, lie_bracket, problem, stratonovich_drift};
use nvsim_core::{Matrix, State};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FD_STEP: f64 = 1e-6;

/// Central finite differences of `f` at `x`.
fn fd_jacobian(f: impl Fn(&State) -> State, x: &State) -> Matrix {
    let n = x.dim();
    let mut jac = Matrix::zeros(n);
    for k in 0..n {
        let mut up = *x;
        let mut down = *x;
        up[k] += FD_STEP;
        down[k] -= FD_STEP;
        let col = f(&up).sub(&f(&down)).scaled(0.5 / FD_STEP);
        jac.set_column(k, &col);
    }
    jac
}

fn sample_points(n: usize, count: usize, seed: u64) -> Vec<State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            State::from_slice(&v)
        })
        .collect()
}

fn assert_close_rel(a: &Matrix, b: &Matrix, tol: f64, what: &str) {
    let n = a.dim();
    for i in 0..n {
        for k in 0..n {
            let (x, y) = (a[(i, k)], b[(i, k)]);
            assert!(
                (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0),
                "{what} ({i},{k}): {x} vs {y}"
            );
        }
    }
}

#[test]
fn analytic_jacobians_match_finite_differences() {
    for p in catalog() {
        let f = p.fields.as_ref();
        for (i, x) in sample_points(p.state_dim(), 100, 17).iter().enumerate() {
            let fd = fd_jacobian(|y| f.drift(y), x);
            assert_close_rel(&f.jac_drift(x), &fd, 1e-5, &format!("{} drift #{i}", p.id));
            for j in 1..=f.noise_dim() {
                let fd = fd_jacobian(|y| f.sigma(j, y), x);
                assert_close_rel(
                    &f.jac_sigma(j, x),
                    &fd,
                    1e-5,
                    &format!("{} sigma{j} #{i}", p.id),
                );
            }
        }
    }
}

#[test]
fn stratonovich_drift_matches_finite_difference_correction() {
    for p in catalog() {
        let f = p.fields.as_ref();
        for x in sample_points(p.state_dim(), 20, 3) {
            let mut want = f.drift(&x);
            for j in 1..=f.noise_dim() {
                let jac = fd_jacobian(|y| f.sigma(j, y), &x);
                want.axpy(-0.5, &jac.mul_vec(&f.sigma(j, &x)));
            }
            let got = stratonovich_drift(f, &x).unwrap();
            assert!(
                got.sub(&want).norm() < 1e-7 * (1.0 + want.norm()),
                "{}",
                p.id
            );
        }
    }
}

#[test]
fn gbm_stratonovich_drift_by_hand() {
    let p = problem("gbm1d").unwrap();
    let x = State::from_slice(&[2.0]);
    let got = stratonovich_drift(p.fields.as_ref(), &x).unwrap()[0];
    assert!((got - (0.1 - 0.5 * 0.25) * 2.0).abs() < 1e-15);
}

#[test]
fn brackets_match_finite_difference_oracle() {
    for p in catalog() {
        let f = p.fields.as_ref();
        for x in sample_points(p.state_dim(), 20, 5) {
            for j in 2..=f.noise_dim() {
                for m in 1..j {
                    let dj = fd_jacobian(|y| f.sigma(j, y), &x);
                    let dm = fd_jacobian(|y| f.sigma(m, y), &x);
                    let want = dm
                        .mul_vec(&f.sigma(j, &x))
                        .sub(&dj.mul_vec(&f.sigma(m, &x)));
                    let got = lie_bracket(f, j, m, &x).unwrap();
                    assert!(
                        got.sub(&want).norm() < 1e-7 * (1.0 + want.norm()),
                        "{}",
                        p.id
                    );
                }
            }
        }
    }
}

#[test]
fn commutative_catalog_entries_have_vanishing_brackets() {
    for p in catalog().into_iter().filter(|p| p.commutative) {
        for x in sample_points(p.state_dim(), 50, 9) {
            assert_eq!(p.brackets().max_norm(&x), 0.0, "{}", p.id);
        }
    }
}

#[test]
fn heisenberg_bracket_has_unit_norm_everywhere() {
    let p = problem("heisenberg").unwrap();
    for x in sample_points(2, 50, 11) {
        let b = lie_bracket(p.fields.as_ref(), 2, 1, &x).unwrap();
        assert_eq!(b.norm(), 1.0);
    }
}

#[test]
fn linear_nc_is_genuinely_noncommutative() {
    let p = problem("linear-nc").unwrap();
    let x = State::from_slice(&[1.0, 1.0]);
    assert!(p.brackets().max_norm(&x) > 0.1);
}

#[test]
fn bracket_indices_are_validated() {
    let p = problem("heisenberg").unwrap();
    let x = State::zeros(2);
    let f = p.fields.as_ref();
    assert!(lie_bracket(f, 1, 2, &x).is_err());
    assert!(lie_bracket(f, 3, 1, &x).is_err());
    assert!(lie_bracket(f, 1, 1, &x).is_err());
    assert!(lie_bracket(f, 2, 1, &State::zeros(3)).is_err());
}

proptest! {
    #[test]
    fn bracket_is_antisymmetric(
        id in prop::sample::select(vec!["heisenberg", "diag-comm", "linear-nc"]),
        x0 in -3.0f64..3.0,
        x1 in -3.0f64..3.0,
    ) {
        let p = problem(id).unwrap();
        let f = p.fields.as_ref();
        let x = State::from_slice(&[x0, x1]);
        let b = lie_bracket(f, 2, 1, &x).unwrap();
        // [sigma^1, sigma^2] written out with the roles swapped
        let swapped = f
            .sigma_jvp(2, &x, &f.sigma(1, &x))
            .sub(&f.sigma_jvp(1, &x, &f.sigma(2, &x)));
        prop_assert!(b.add(&swapped).norm() <= 1e-12);
    }
}
