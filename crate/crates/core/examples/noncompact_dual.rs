//! The non-compact dual SO₀(m,n)/SO(m)×SO(n): the dual function is an
//! eigenfunction with both eigenvalues negated, and the p-harmonic
//! construction carries over.
//!
//! ```bash
//! cargo run --release -p pharmonic --example noncompact_dual
//! ```

use num_complex::Complex64;
use pharmonic::functions::{build_a_example, build_p_harmonic};
use pharmonic::group::{sample_so_mn, Form};
use pharmonic::operators::{check_eigen, check_p_harmonic, OperatorContext};

fn main() -> pharmonic::Result<()> {
    let (m, n) = (2, 2);
    let dim = m + n;
    let w: Vec<Complex64> = (1..dim).map(|k| Complex64::new(k as f64, 0.5)).collect();
    let dual = build_a_example(&w, m, n)?.phi().dualize(m);
    let points = (0..10).map(|s| sample_so_mn(m, n, s, 0.5)).collect::<pharmonic::Result<Vec<_>>>()?;
    println!("membership residual of first sample: {:.1e}", points[0].membership_residual());

    let ctx = OperatorContext::grassmann(m, n, Form::Indefinite);
    let lambda = Complex64::new(dim as f64, 0.0);
    let mu = Complex64::new(2.0, 0.0);
    let r = check_eigen(&dual, lambda, mu, &points, &ctx, 1e-9);
    println!("dual eigen (λ={dim}, μ=2): pass={} tau {:.1e} kappa {:.1e}", r.pass, r.max_residual("tau").unwrap(), r.max_residual("kappa").unwrap());

    let wrong = check_eigen(&dual, -lambda, -mu, &points, &ctx, 1e-9);
    println!("with compact eigenvalues instead: pass={}", wrong.pass);

    let f = build_p_harmonic(&dual, lambda, mu, 2, Complex64::new(1.0, 0.0), Complex64::new(0.5, -0.25))?;
    let r = check_p_harmonic(&f, 2, &points, &ctx, 1e-7, 1e-3);
    println!("dual biharmonic: |τ²| {:.1e}, pass={}", r.max_residual("tau_p").unwrap(), r.pass);
    Ok(())
}
