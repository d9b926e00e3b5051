//! Exact verification over Gaussian rationals: τ acts on φ^a·(log φ)^b
//! through the eigenvalues alone, so τ^p(Φ_p) = 0 can be decided exactly.
//!
//! ```bash
//! cargo run -p pharmonic --example symbolic_calculus
//! ```

use pharmonic::symcalc::{sym_build_phi_p, sym_tau_iter, sym_verify_all_coefficients, EigenParams, GaussianRational};

fn main() -> pharmonic::Result<()> {
    let cases = [("log power", EigenParams::from_integers(-3, 0)), ("equal", EigenParams::from_integers(-2, -2)), ("general", EigenParams::from_integers(-5, -2))];
    for (name, params) in &cases {
        for p in [1, 2, 4, 8] {
            let v = sym_verify_all_coefficients(params, p)?;
            println!("{name:>9} p={p}: p-harmonic for all c = {}, proper for generic c = {}", v.p_harmonic_all, v.proper_generic);
        }
    }

    let params = EigenParams::from_integers(-4, -2);
    let phi = sym_build_phi_p(&params, 3, &GaussianRational::one(), &GaussianRational::from_integers(1, -1))?;
    println!("Φ_3         = {phi}");
    for k in 1..=3 {
        println!("τ^{k}(Φ_3)    = {}", sym_tau_iter(&phi, k, &params));
    }
    println!("dual τ²(Φ_3) = {}", sym_tau_iter(&phi, 2, &params.negated()));
    Ok(())
}
