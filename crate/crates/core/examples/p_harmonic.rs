//! Proper p-harmonic functions built from a Grassmannian eigenfunction,
//! checked by nested-jet evaluation of τ^p and τ^(p-1).
//!
//! ```bash
//! cargo run --release -p pharmonic --example p_harmonic
//! ```

use num_complex::Complex64;
use pharmonic::functions::{build_a_example, build_p_harmonic, classify_case};
use pharmonic::group::{sample_so, Form, GroupPoint};
use pharmonic::operators::{accept_samples, check_p_harmonic, OperatorContext, Tolerances};

fn main() -> pharmonic::Result<()> {
    let c1 = Complex64::new(1.0, 0.0);
    let c2 = Complex64::new(0.5, -0.25);
    for (m, n) in [(1, 1), (1, 2), (2, 2)] {
        let dim = m + n;
        let w: Vec<Complex64> = (1..dim).map(|k| Complex64::new(k as f64, 0.5)).collect();
        let phi = build_a_example(&w, m, n)?.phi();
        let lambda = Complex64::new(-(dim as f64), 0.0);
        let mu = Complex64::new(-2.0, 0.0);
        let ctx = OperatorContext::grassmann(m, n, Form::Compact);
        for p in 1..=3u32 {
            let f = build_p_harmonic(&phi, lambda, mu, p, c1, c2)?;
            let sampler = |s: u64| Ok(sample_so(dim, s));
            let probe = |x: &GroupPoint| f.evaluate_at(x).map(|_| ());
            let acc = accept_samples(&sampler, &probe, 10, 500, 11)?;
            let tol = Tolerances::default().for_depth(p as usize);
            let r = check_p_harmonic(&f, p as usize, &acc.points, &ctx, tol, 1e-3);
            println!(
                "(m,n)=({m},{n}) {:?} p={p}: |τ^p| {:.1e}  max |τ^(p-1)| {:.2e}  pass={}",
                classify_case(lambda, mu)?,
                r.max_residual("tau_p").unwrap(),
                r.max_residual("tau_p_minus_1").unwrap(),
                r.pass
            );
        }
    }
    Ok(())
}
