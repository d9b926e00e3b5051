//! Eigenfunctions on the real Grassmannian SO(m+n)/SO(m)×SO(n) from a
//! rank-one isotropic matrix `A = u·uᵀ`, with a rank-two negative control.
//!
//! ```bash
//! cargo run -p pharmonic --example grassmann_eigenfunction
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;
use pharmonic::functions::{build_a_example, phi_matrix, validate_eigen_matrix};
use pharmonic::group::{sample_block_diagonal, sample_so, Form};
use pharmonic::operators::{check_eigen, check_invariance, OperatorContext};

fn main() -> pharmonic::Result<()> {
    let (m, n) = (2, 3);
    let dim = m + n;
    let w: Vec<Complex64> = (1..dim).map(|k| Complex64::new(k as f64, 0.0)).collect();
    let a = build_a_example(&w, m, n)?;
    let v = validate_eigen_matrix(a.matrix());
    println!("A: symmetric {:.1e}, trace {:.1e}, A² {:.1e}, σ₂/σ₁ {:.1e}", v.symmetry, v.trace, v.square, v.rank_ratio);

    let points: Vec<_> = (0..20).map(|s| sample_so(dim, s)).collect();
    let lambda = Complex64::new(-(dim as f64), 0.0);
    let mu = Complex64::new(-2.0, 0.0);
    let ctx = OperatorContext::grassmann(m, n, Form::Compact);
    let report = check_eigen(&a.phi(), lambda, mu, &points, &ctx, 1e-9);
    println!("Φ_A eigen (λ={}, μ=-2): pass={} max tau {:.1e}", -(dim as i64), report.pass, report.max_residual("tau").unwrap());

    let k = |s: u64| sample_block_diagonal(&[m, n], s);
    let inv = check_invariance(&a.phi(), &k, &points, 5, 7, 1e-10);
    println!("SO({m})×SO({n}) invariance: {:.1e}", inv.max_residual("invariance").unwrap());

    // Traceless and symmetric but rank two: τ still matches, κ does not.
    let i = Complex64::new(0.0, 1.0);
    let u = [Complex64::new(1.0, 0.0), i, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
    let x = [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), i, Complex64::new(0.0, 0.0)];
    let b = DMatrix::from_fn(dim, dim, |r, c| u[r] * u[c] + x[r] * x[c]);
    println!("rank-2 matrix fails: {:?}", validate_eigen_matrix(&b).failures());
    let control = check_eigen(&phi_matrix(&b, 0..m), lambda, mu, &points, &ctx, 1e-9);
    println!("rank-2 control: tau pass={:?}, kappa max {:.2e}", control.check_passed("tau"), control.max_residual("kappa").unwrap());
    Ok(())
}
