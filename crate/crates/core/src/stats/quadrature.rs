//! Finite-interval quadrature.
//!
//! Tanh-sinh nodes cluster at the interval ends without touching them, so
//! integrable endpoint singularities such as `ln|x|` at zero are handled.

/// Integral of `f` over `[a, b]` to tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    quadrature::double_exponential::integrate(f, a, b, tol).integral
}
