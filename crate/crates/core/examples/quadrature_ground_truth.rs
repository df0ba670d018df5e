//! Reference evidence by adaptive 2D quadrature, for the built-in Rosenbrock
//! problem and for an integrand with a closed form.

use learned_harmonic::benchmarks::{quadrature_log_evidence, BenchmarkProblem, Box2, GridSpec};

fn main() -> learned_harmonic::Result<()> {
    // ∫∫ exp(-(x² + 4y²)/2) = 2π / 2 = π
    let q = quadrature_log_evidence(
        |p: &[f64]| -0.5 * (p[0] * p[0] + 4.0 * p[1] * p[1]),
        Box2 { x: (-10.0, 10.0), y: (-10.0, 10.0) },
        GridSpec::default(),
    )?;
    println!("gaussian: {:.8} vs ln(pi) {:.8} ({} intervals)", q.log_z, std::f64::consts::PI.ln(), q.intervals);

    let truth = BenchmarkProblem::rosenbrock().ground_truth()?;
    println!("rosenbrock: log z = {:.6} ({:?})", truth.log_z.unwrap_or(f64::NAN), truth.source);
    Ok(())
}
