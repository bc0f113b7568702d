//! Matrix exponentials used by the closed-form flows of affine vector fields.

use crate::state::{Matrix, State};

/// `exp(t M) v` for a 2x2 matrix, in closed form.
///
/// With `mu = tr(M)/2` and `K = M - mu I` we have `K^2 = delta I`, so
/// `exp(tM) = e^{mu t} (c(t) I + s(t) K)` where `c`, `s` are the hyperbolic or
/// trigonometric pair depending on the sign of `delta`.
pub fn expm2_apply(m: &Matrix, t: f64, v: &State) -> State {
    let e = expm2(m, t);
    let mut out = State::zeros(2);
    for i in 0..2 {
        // same accumulation order as `Matrix::mul_vec`
        let mut acc = 0.0;
        acc += e[i][0] * v[0];
        acc += e[i][1] * v[1];
        out[i] = acc;
    }
    out
}

/// `exp(t M)` for a 2x2 matrix, see [`expm2_apply`].
pub fn expm2(m: &Matrix, t: f64) -> [[f64; 2]; 2] {
    debug_assert_eq!(m.dim(), 2);
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let mu = 0.5 * (a + d);
    let half_gap = 0.5 * (a - d);
    let delta = half_gap * half_gap + b * c;
    let (cc, ss) = cosh_sinhc(delta, t);
    let scale = (mu * t).exp();
    let k = [[half_gap, b], [c, -half_gap]];
    let mut e = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let id = if i == j { cc } else { 0.0 };
            e[i][j] = scale * (id + ss * k[i][j]);
        }
    }
    e
}

/// Returns `(cosh(t sqrt(delta)), sinh(t sqrt(delta)) / sqrt(delta))`, continued
/// analytically to `delta <= 0`.
fn cosh_sinhc(delta: f64, t: f64) -> (f64, f64) {
    let z = delta * t * t;
    if z.abs() < 1e-4 {
        let c = 1.0 + z / 2.0 + z * z / 24.0 + z * z * z / 720.0;
        let s = t * (1.0 + z / 6.0 + z * z / 120.0 + z * z * z / 5040.0);
        (c, s)
    } else if delta > 0.0 {
        let q = delta.sqrt();
        ((q * t).cosh(), (q * t).sinh() / q)
    } else {
        let q = (-delta).sqrt();
        ((q * t).cos(), (q * t).sin() / q)
    }
}

/// `exp(M)` by scaling and squaring with a truncated Taylor series.
pub fn expm(m: &Matrix) -> Matrix {
    let n = m.dim();
    let norm = m.norm1();
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    let scaled = m.scaled(0.5f64.powi(squarings as i32));
    // ||scaled|| <= 0.5: 20 terms put the remainder far below f64 epsilon.
    let mut result = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    for k in 1..=20 {
        term = term.mul(&scaled).scaled(1.0 / k as f64);
        result = result.add_scaled(1.0, &term);
        if term.norm1() < 1e-18 * result.norm1() {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.mul(&result);
    }
    result
}
