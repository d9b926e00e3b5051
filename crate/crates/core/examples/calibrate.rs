//! Metric calibration: the coordinate functions of SO(N) are eigenfunctions
//! of the Laplace–Beltrami operator with eigenvalue -(N-1)/2 only for the
//! metric `-trace(XY)`. A rescaled basis breaks the identity.
//!
//! ```bash
//! cargo run -p pharmonic --example calibrate
//! ```

use pharmonic::group::{sample_so, so_basis, Signature};
use pharmonic::operators::{check_coordinate_identities, OperatorContext};

fn main() {
    for dim in 2..=6 {
        let points: Vec<_> = (0..10).map(|s| sample_so(dim, s)).collect();
        let report = check_coordinate_identities(&points, &OperatorContext::full(dim), 1e-9);
        println!(
            "SO({dim}): tau {:.1e}  kappa {:.1e}  pass={}",
            report.max_residual("tau").unwrap(),
            report.max_residual("kappa").unwrap(),
            report.pass
        );
    }

    let dim = 4;
    let scaled = so_basis(dim).iter().map(|b| b.rescaled(1.05)).collect();
    let ctx = OperatorContext::unchecked(scaled, Signature::Compact(dim));
    let points: Vec<_> = (0..10).map(|s| sample_so(dim, s)).collect();
    let report = check_coordinate_identities(&points, &ctx, 1e-9);
    println!("SO({dim}) with basis scaled by 1.05: tau {:.1e} pass={}", report.max_residual("tau").unwrap(), report.pass);
}
