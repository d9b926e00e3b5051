//! Truncated Taylor arithmetic: exact derivatives from ordinary evaluation.
//!
//! ```bash
//! cargo run -p pharmonic --example jets
//! ```

use num_complex::Complex64;
use pharmonic::jets::{analytic, Analytic, JetScalar, Scalar};

fn main() -> pharmonic::Result<()> {
    let c = |re: f64| Complex64::new(re, 0.0);

    // (3 + ε)² = 9 + 6ε + ε²
    let t = JetScalar::variable(c(3.0), 2);
    println!("(3+e)^2      = {}", t.clone() * t.clone());

    // log(1 + ε) = ε - ε²/2
    let one_plus = JetScalar::variable(c(1.0), 2);
    println!("log(1+e)     = {}", analytic(Analytic::Log, &one_plus)?);

    // Second derivative of s^(1/2) at s = 4 is -1/32; coefficient 2 holds half of it.
    let s = JetScalar::variable(c(4.0), 2);
    let r = analytic(Analytic::Sqrt, &s)?;
    println!("d2 sqrt(s)|4 = {}", 2.0 * r.coeff_complex(2));

    // Two nested variables give mixed partials of f(x, y) = x²y at (1, 2).
    let x = JetScalar::lift(c(1.0), 2) + JetScalar::variable_nested(0, 2);
    let y = JetScalar::lift(c(2.0), 2) + JetScalar::variable_nested(1, 2);
    let f = x.clone() * x * y;
    let fxy = f.coeff_at_depth(0, 1).coeff_at_depth(0, 1).base();
    println!("d2f/dxdy     = {fxy}  (expected 2)");

    // Branch cut: log of a negative real is rejected rather than guessed.
    let neg = JetScalar::variable(c(-1.0), 2);
    println!("log(-1+e)    -> {:?}", neg.ln().err());
    Ok(())
}
