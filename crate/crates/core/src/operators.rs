//! Laplace–Beltrami `τ`, conformality `κ` and iterated `τᵖ`, computed by
//! differentiating along the curves `t ↦ x·exp(tZ)` for an orthonormal basis.
//!
//! Every curve used is a geodesic through its base point (bi-invariant
//! metric on the compact group, symmetric-space geodesics for the
//! `m`-directions), so `τ(f)(x) = Σ_Z d²/dt² f(x·exp(tZ))|₀` and
//! `κ(f,g)(x) = Σ_Z f'·g'`. Derivatives come from jets, so they are exact up
//! to roundoff.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::ExprNode;
use crate::group::{
    block_k_basis, gram, m_basis, so_basis, BasisVector, Form, GroupPoint, Signature,
    SquareMatrix,
};
use crate::jets::{JetScalar, Scalar};
use crate::report::VerificationReport;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default cap on the iteration count of `τᵖ`.
pub const DEFAULT_MAX_DEPTH: usize = 5;

/// Pass thresholds by identity type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Polynomial identities (single application of `τ` or `κ`).
    pub polynomial: f64,
    /// Identities involving `τ²`.
    pub second_order: f64,
    /// Growth factor per further iteration level.
    pub per_level: f64,
    /// Global multiplier applied to all of the above.
    pub scale: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { polynomial: 1e-9, second_order: 1e-7, per_level: 10.0, scale: 1.0 }
    }
}

impl Tolerances {
    /// Threshold for an identity that applies `τ` `depth` times.
    pub fn for_depth(&self, depth: usize) -> f64 {
        let base = match depth {
            0 | 1 => self.polynomial,
            d => self.second_order * self.per_level.powi(d as i32 - 2),
        };
        base * self.scale
    }
}

#[derive(Debug, Clone)]
pub struct OperatorContext {
    basis: Vec<BasisVector>,
    signature: Signature,
    pub tolerances: Tolerances,
    pub max_depth: usize,
}

impl OperatorContext {
    /// Validates that `basis` is nonempty and orthonormal for the signed
    /// trace form of `signature`.
    pub fn new(basis: Vec<BasisVector>, signature: Signature) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::Config("operator basis is empty".into()));
        }
        let g = gram(&basis, signature.form());
        let k = basis.len();
        let dev = (g - nalgebra::DMatrix::<f64>::identity(k, k)).abs().max();
        if dev > 1e-12 {
            return Err(Error::Config(format!("operator basis is not orthonormal (deviation {dev:e})")));
        }
        Ok(Self::unchecked(basis, signature))
    }

    /// Skips the orthonormality check; used to exercise wrongly scaled bases.
    pub fn unchecked(basis: Vec<BasisVector>, signature: Signature) -> Self {
        OperatorContext {
            basis,
            signature,
            tolerances: Tolerances::default(),
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }

    /// Full basis of `so(N)`.
    pub fn full(dim: usize) -> Self {
        Self::unchecked(so_basis(dim), Signature::Compact(dim))
    }

    /// `m`-directions of `SO(m+n)/SO(m)×SO(n)` or of its non-compact dual.
    pub fn grassmann(m: usize, n: usize, form: Form) -> Self {
        let signature = match form {
            Form::Compact => Signature::Compact(m + n),
            Form::Indefinite => Signature::Indefinite { m, n },
        };
        Self::unchecked(m_basis(m, n, form), signature)
    }

    /// Block-diagonal `k`-directions for a partition of `N`.
    pub fn isotropy(blocks: &[usize]) -> Result<Self> {
        let basis = block_k_basis(blocks);
        Self::new(basis, Signature::Compact(blocks.iter().sum()))
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn basis(&self) -> &[BasisVector] {
        &self.basis
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }
}

fn second_derivative_at(v: &JetScalar, depth: usize) -> JetScalar {
    v.coeff_at_depth(depth, 2).scale(Complex64::new(2.0, 0.0))
}

fn sum_jets(acc: Option<JetScalar>, v: JetScalar) -> JetScalar {
    match acc {
        Some(a) => a + v,
        None => v,
    }
}

fn curve(x: &SquareMatrix<JetScalar>, z: &BasisVector, depth: usize, order: usize) -> SquareMatrix<JetScalar> {
    crate::group::curve_point_jet(x, z, &JetScalar::variable_nested(depth, order))
}

/// `τ^p(f)` at a jet-valued point whose entries carry `depth` outer variables.
pub fn tau_iter_jet(
    f: &ExprNode,
    p: usize,
    x: &SquareMatrix<JetScalar>,
    depth: usize,
    ctx: &OperatorContext,
) -> Result<JetScalar> {
    if p == 0 {
        return f.evaluate(x);
    }
    let mut acc = None;
    for z in &ctx.basis {
        let y = curve(x, z, depth, 2);
        let inner = tau_iter_jet(f, p - 1, &y, depth + 1, ctx)?;
        acc = Some(sum_jets(acc, second_derivative_at(&inner, depth)));
    }
    let out = acc.unwrap_or(JetScalar::Const(ZERO));
    if !out.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(out)
}

/// Laplace–Beltrami operator at `x`.
pub fn tau(f: &ExprNode, x: &GroupPoint, ctx: &OperatorContext) -> Result<Complex64> {
    tau_iter(f, 1, x, ctx)
}

/// `τ^p(f)(x)` by nesting one jet level per application of `τ`.
pub fn tau_iter(f: &ExprNode, p: usize, x: &GroupPoint, ctx: &OperatorContext) -> Result<Complex64> {
    if p > ctx.max_depth {
        return Err(Error::DepthExceeded(p, ctx.max_depth));
    }
    Ok(tau_iter_jet(f, p, &x.to_jets(), 0, ctx)?.base())
}

/// Contribution of each basis direction to `τ(f)(x)`.
pub fn tau_per_direction(f: &ExprNode, x: &GroupPoint, ctx: &OperatorContext) -> Result<Vec<Complex64>> {
    let xj = x.to_jets();
    ctx.basis
        .iter()
        .map(|z| Ok(second_derivative_at(&f.evaluate(&curve(&xj, z, 0, 2))?, 0).base()))
        .collect()
}

/// `τ` of several functions, sharing the curve points.
pub fn tau_many(fs: &[ExprNode], x: &GroupPoint, ctx: &OperatorContext) -> Result<Vec<Complex64>> {
    let xj = x.to_jets();
    let mut out = vec![ZERO; fs.len()];
    for z in &ctx.basis {
        let y = curve(&xj, z, 0, 2);
        for (o, f) in out.iter_mut().zip(fs) {
            *o += 2.0 * f.evaluate(&y)?.coeff_complex(2);
        }
    }
    Ok(out)
}

/// First derivatives `Z(f)(x)`, indexed `[direction][function]`.
pub fn gradients(fs: &[ExprNode], x: &GroupPoint, ctx: &OperatorContext) -> Result<Vec<Vec<Complex64>>> {
    let xj = x.to_jets();
    ctx.basis
        .iter()
        .map(|z| {
            let y = curve(&xj, z, 0, 1);
            fs.iter().map(|f| Ok(f.evaluate(&y)?.coeff_complex(1))).collect()
        })
        .collect()
}

/// `κ(f_i, f_j)(x)` for all pairs.
pub fn kappa_matrix(fs: &[ExprNode], x: &GroupPoint, ctx: &OperatorContext) -> Result<Vec<Vec<Complex64>>> {
    let grads = gradients(fs, x, ctx)?;
    let k = fs.len();
    let mut out = vec![vec![ZERO; k]; k];
    for g in &grads {
        for i in 0..k {
            for j in 0..k {
                out[i][j] += g[i] * g[j];
            }
        }
    }
    Ok(out)
}

/// Conformality operator `κ(f, g)(x) = Σ_Z Z(f)·Z(g)`.
pub fn kappa(f: &ExprNode, g: &ExprNode, x: &GroupPoint, ctx: &OperatorContext) -> Result<Complex64> {
    let grads = gradients(&[f.clone(), g.clone()], x, ctx)?;
    Ok(grads.iter().map(|d| d[0] * d[1]).sum())
}

/// `|r| / (1 + |f| + |f|²)`.
pub fn normalized(residual: Complex64, f: Complex64) -> f64 {
    let a = f.norm();
    residual.norm() / (1.0 + a + a * a)
}

/// `|r| / ((1 + |f|)(1 + |g|))`.
pub fn normalized_pair(residual: Complex64, f: Complex64, g: Complex64) -> f64 {
    residual.norm() / ((1.0 + f.norm()) * (1.0 + g.norm()))
}

/// Values below this are treated as a vanishing function in degeneracy checks.
pub const DEGENERATE_FLOOR: f64 = 1e-12;

/// `τ(f) = λf` and `κ(f,f) = μf²` at every point.
pub fn check_eigen(
    f: &ExprNode,
    lambda: Complex64,
    mu: Complex64,
    points: &[GroupPoint],
    ctx: &OperatorContext,
    tol: f64,
) -> VerificationReport {
    let mut report = VerificationReport::new("check_eigen");
    let mut max_value: f64 = 0.0;
    for (i, x) in points.iter().enumerate() {
        let res = (|| -> Result<(Complex64, Complex64, Complex64)> {
            let v = f.evaluate_at(x)?;
            let t = tau(f, x, ctx)?;
            let k = kappa(f, f, x, ctx)?;
            Ok((v, t, k))
        })();
        match res {
            Ok((v, t, k)) => {
                max_value = max_value.max(v.norm());
                report.push("tau", i, normalized(t - lambda * v, v), tol);
                report.push("kappa", i, normalized(k - mu * v * v, v), tol);
            }
            Err(e) => {
                report.push_failure("tau", i, tol, &e.to_string());
                report.push_failure("kappa", i, tol, &e.to_string());
            }
        }
    }
    flag_degenerate(&mut report, max_value, points.len());
    report
}

fn flag_degenerate(report: &mut VerificationReport, max_value: f64, count: usize) {
    if count > 0 && max_value < DEGENERATE_FLOOR {
        report.push("nondegenerate", 0, 1.0, 0.0);
        report.diagnose("function vanishes at every sample; eigen relations hold trivially");
    }
}

/// Eigen relations for each member plus `κ(φ,ψ) = μφψ` for every pair.
pub fn check_eigenfamily(
    fs: &[ExprNode],
    lambda: Complex64,
    mu: Complex64,
    points: &[GroupPoint],
    ctx: &OperatorContext,
    tol: f64,
) -> VerificationReport {
    let mut report = VerificationReport::new("check_eigenfamily");
    let mut max_value: f64 = 0.0;
    for (i, x) in points.iter().enumerate() {
        type FamilyData = (Vec<Complex64>, Vec<Complex64>, Vec<Vec<Complex64>>);
        let res = (|| -> Result<FamilyData> {
            let vals = fs.iter().map(|f| f.evaluate_at(x)).collect::<Result<Vec<_>>>()?;
            Ok((vals, tau_many(fs, x, ctx)?, kappa_matrix(fs, x, ctx)?))
        })();
        match res {
            Ok((vals, taus, kap)) => {
                let mut tau_res: f64 = 0.0;
                let mut pair_res: f64 = 0.0;
                for a in 0..fs.len() {
                    max_value = max_value.max(vals[a].norm());
                    tau_res = tau_res.max(normalized(taus[a] - lambda * vals[a], vals[a]));
                    for b in 0..fs.len() {
                        pair_res = pair_res.max(normalized_pair(
                            kap[a][b] - mu * vals[a] * vals[b],
                            vals[a],
                            vals[b],
                        ));
                    }
                }
                report.push("tau", i, tau_res, tol);
                report.push("kappa_pairs", i, pair_res, tol);
            }
            Err(e) => {
                report.push_failure("tau", i, tol, &e.to_string());
                report.push_failure("kappa_pairs", i, tol, &e.to_string());
            }
        }
    }
    flag_degenerate(&mut report, max_value, points.len());
    report
}

/// `τ(fg) = τ(f)g + 2κ(f,g) + fτ(g)`.
pub fn verify_product_rule(
    f: &ExprNode,
    g: &ExprNode,
    points: &[GroupPoint],
    ctx: &OperatorContext,
    tol: f64,
) -> VerificationReport {
    let mut report = VerificationReport::new("product_rule");
    let fg = f.clone() * g.clone();
    for (i, x) in points.iter().enumerate() {
        let res = (|| -> Result<f64> {
            let fs = [f.clone(), g.clone(), fg.clone()];
            let taus = tau_many(&fs, x, ctx)?;
            let vf = f.evaluate_at(x)?;
            let vg = g.evaluate_at(x)?;
            let k = kappa(f, g, x, ctx)?;
            let rhs = taus[0] * vg + 2.0 * k + vf * taus[1];
            Ok(normalized_pair(taus[2] - rhs, vf, vg))
        })();
        match res {
            Ok(r) => report.push("product_rule", i, r, tol),
            Err(e) => report.push_failure("product_rule", i, tol, &e.to_string()),
        }
    }
    report
}

/// Largest normalized change `|f(x·k) - f(x)| / (1 + |f(x)|)` over `trials`
/// subgroup elements per point, reported per point.
pub fn check_invariance(
    f: &ExprNode,
    subgroup: &dyn Fn(u64) -> GroupPoint,
    points: &[GroupPoint],
    trials: usize,
    seed: u64,
    tol: f64,
) -> VerificationReport {
    let mut report = VerificationReport::new("invariance");
    for (i, x) in points.iter().enumerate() {
        let res = (|| -> Result<f64> {
            let v = f.evaluate_at(x)?;
            let mut worst: f64 = 0.0;
            for t in 0..trials {
                let k = subgroup(crate::group::derive_seed(seed, i as u64, t as u64));
                let w = f.evaluate_at(&x.right_mul(&k))?;
                worst = worst.max((w - v).norm() / (1.0 + v.norm()));
            }
            Ok(worst)
        })();
        match res {
            Ok(r) => report.push("invariance", i, r, tol),
            Err(e) => report.push_failure("invariance", i, tol, &e.to_string()),
        }
    }
    report
}

/// Searches for a subgroup element whose right action changes `f` by more
/// than `threshold` (absolute). Returns `(point, trial, change)`.
pub fn find_non_invariance(
    f: &ExprNode,
    subgroup: &dyn Fn(u64) -> GroupPoint,
    points: &[GroupPoint],
    trials: usize,
    seed: u64,
    threshold: f64,
) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for (i, x) in points.iter().enumerate() {
        let Ok(v) = f.evaluate_at(x) else { continue };
        for t in 0..trials {
            let k = subgroup(crate::group::derive_seed(seed, i as u64, t as u64));
            let Ok(w) = f.evaluate_at(&x.right_mul(&k)) else { continue };
            let change = (w - v).norm();
            if best.is_none_or(|b| change > b.2) {
                best = Some((i, t, change));
            }
        }
        if best.is_some_and(|b| b.2 > threshold) {
            return best;
        }
    }
    best
}

/// `|τ^p(f)| ≤ tol` and `|τ^(p-1)(f)| ≥ floor`, both normalized by `f(x)`.
pub fn check_p_harmonic(
    f: &ExprNode,
    p: usize,
    points: &[GroupPoint],
    ctx: &OperatorContext,
    tol: f64,
    floor: f64,
) -> VerificationReport {
    let mut report = VerificationReport::new("check_p_harmonic");
    if p == 0 {
        report.push_failure("tau_p", 0, tol, "p must be at least 1");
        return report;
    }
    let mut best_lower: f64 = 0.0;
    for (i, x) in points.iter().enumerate() {
        let res = (|| -> Result<(Complex64, Complex64, Complex64)> {
            let v = f.evaluate_at(x)?;
            let top = tau_iter(f, p, x, ctx)?;
            let below = if p == 1 { v } else { tau_iter(f, p - 1, x, ctx)? };
            Ok((v, top, below))
        })();
        match res {
            Ok((v, top, below)) => {
                report.push("tau_p", i, normalized(top, v), tol);
                best_lower = best_lower.max(normalized(below, v));
            }
            Err(e) => report.push_failure("tau_p", i, tol, &e.to_string()),
        }
    }
    // Properness asks for τ^(p-1) not vanishing identically: one generic point suffices.
    report.push_lower("tau_p_minus_1", 0, best_lower, floor);
    report
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Coordinate functions on `SO(N)`: `τ(x_{jα}) = -(N-1)/2·x_{jα}` and
/// `κ(x_{jα}, x_{kβ}) = -(x_{jβ}x_{kα} - δ_{jk}δ_{αβ})/2`. One record per
/// point holding the worst index combination.
pub fn check_coordinate_identities(points: &[GroupPoint], ctx: &OperatorContext, tol: f64) -> VerificationReport {
    let mut report = VerificationReport::new("coordinate_identities");
    for (i, x) in points.iter().enumerate() {
        let dim = x.dim();
        let fs: Vec<ExprNode> = (0..dim * dim).map(|k| ExprNode::Entry(k / dim, k % dim)).collect();
        let res = (|| -> Result<(Vec<Complex64>, Vec<Vec<Complex64>>)> {
            Ok((tau_many(&fs, x, ctx)?, kappa_matrix(&fs, x, ctx)?))
        })();
        let (taus, kap) = match res {
            Ok(v) => v,
            Err(e) => {
                report.push_failure("tau", i, tol, &e.to_string());
                report.push_failure("kappa", i, tol, &e.to_string());
                continue;
            }
        };
        let e = x.entries();
        let eig = -(dim as f64 - 1.0) / 2.0;
        let mut tau_res: f64 = 0.0;
        let mut kap_res: f64 = 0.0;
        for a in 0..dim * dim {
            let (j, al) = (a / dim, a % dim);
            let v = Complex64::new(e[(j, al)], 0.0);
            tau_res = tau_res.max(normalized(taus[a] - eig * v, v));
            for b in 0..dim * dim {
                let (k, be) = (b / dim, b % dim);
                let expect = -0.5 * (e[(j, be)] * e[(k, al)] - delta(j, k) * delta(al, be));
                let w = Complex64::new(e[(k, be)], 0.0);
                kap_res = kap_res.max(normalized_pair(kap[a][b] - expect, v, w));
            }
        }
        report.push("tau", i, tau_res, tol);
        report.push("kappa", i, kap_res, tol);
    }
    report
}

/// `φ̂_{jα} = Σ_{t<m} x_{jt}x_{αt}` on `SO(m+n)`:
/// `τ(φ̂_{jα}) = -(m+n)φ̂_{jα} + δ_{jα}m` and
/// `κ(φ̂_{jα}, φ̂_{kβ}) = -(φ̂_{jβ}φ̂_{kα} + φ̂_{jk}φ̂_{αβ})
///   + (δ_{jk}φ̂_{αβ} + δ_{jβ}φ̂_{αk} + δ_{αk}φ̂_{jβ} + δ_{αβ}φ̂_{jk})/2`.
pub fn check_phi_hat_identities(
    m: usize,
    n: usize,
    points: &[GroupPoint],
    ctx: &OperatorContext,
    tol: f64,
) -> VerificationReport {
    let mut report = VerificationReport::new("phi_hat_identities");
    let dim = m + n;
    let pairs: Vec<(usize, usize)> = (0..dim).flat_map(|j| (j..dim).map(move |a| (j, a))).collect();
    let fs: Vec<ExprNode> = pairs.iter().map(|&(j, a)| crate::functions::phi_hat_cols(j, a, 0..m)).collect();
    for (i, x) in points.iter().enumerate() {
        let e = x.entries();
        let ph = |j: usize, a: usize| -> f64 { (0..m).map(|t| e[(j, t)] * e[(a, t)]).sum() };
        let res = (|| -> Result<(Vec<Complex64>, Vec<Vec<Complex64>>)> {
            Ok((tau_many(&fs, x, ctx)?, kappa_matrix(&fs, x, ctx)?))
        })();
        let (taus, kap) = match res {
            Ok(v) => v,
            Err(err) => {
                report.push_failure("tau", i, tol, &err.to_string());
                report.push_failure("kappa", i, tol, &err.to_string());
                continue;
            }
        };
        let mut tau_res: f64 = 0.0;
        let mut kap_res: f64 = 0.0;
        for (u, &(j, a)) in pairs.iter().enumerate() {
            let v = Complex64::new(ph(j, a), 0.0);
            let expect = -(dim as f64) * ph(j, a) + delta(j, a) * m as f64;
            tau_res = tau_res.max(normalized(taus[u] - expect, v));
            for (w, &(k, b)) in pairs.iter().enumerate() {
                let expect = -(ph(j, b) * ph(k, a) + ph(j, k) * ph(a, b))
                    + 0.5
                        * (delta(j, k) * ph(a, b)
                            + delta(j, b) * ph(a, k)
                            + delta(a, k) * ph(j, b)
                            + delta(a, b) * ph(j, k));
                let g = Complex64::new(ph(k, b), 0.0);
                kap_res = kap_res.max(normalized_pair(kap[u][w] - expect, v, g));
            }
        }
        report.push("tau", i, tau_res, tol);
        report.push("kappa", i, kap_res, tol);
    }
    report
}

/// For a right-`K`-invariant `f` on `SO(m+n)`: every isotropy direction
/// contributes at most `direction_tol` to `τ(f)`, and `τ` over the full basis
/// matches `τ` over the `m`-directions to `lift_tol` relative.
pub fn check_lift(
    f: &ExprNode,
    m: usize,
    n: usize,
    points: &[GroupPoint],
    lift_tol: f64,
    direction_tol: f64,
) -> VerificationReport {
    let mut report = VerificationReport::new("lift");
    let iso = OperatorContext::unchecked(crate::group::k_basis(m, n), Signature::Compact(m + n));
    let full = OperatorContext::full(m + n);
    let part = OperatorContext::grassmann(m, n, Form::Compact);
    for (i, x) in points.iter().enumerate() {
        let res = (|| -> Result<(f64, f64)> {
            let dirs = if iso.basis.is_empty() { vec![] } else { tau_per_direction(f, x, &iso)? };
            let worst = dirs.iter().map(|d| d.norm()).fold(0.0, f64::max);
            let tf = tau(f, x, &full)?;
            let tm = tau(f, x, &part)?;
            Ok((worst, (tf - tm).norm() / (1.0 + tf.norm())))
        })();
        match res {
            Ok((worst, rel)) => {
                report.push("k_direction", i, worst, direction_tol);
                report.push("full_vs_m", i, rel, lift_tol);
            }
            Err(e) => {
                report.push_failure("k_direction", i, direction_tol, &e.to_string());
                report.push_failure("full_vs_m", i, lift_tol, &e.to_string());
            }
        }
    }
    report
}

/// Sample points accepted for a verification run and the number rejected.
#[derive(Debug, Clone)]
pub struct Acceptance {
    pub points: Vec<GroupPoint>,
    pub rejected: usize,
}

impl Acceptance {
    pub fn rejection_rate(&self) -> f64 {
        let total = self.points.len() + self.rejected;
        if total == 0 {
            0.0
        } else {
            self.rejected as f64 / total as f64
        }
    }
}

/// Draws points from `sampler(derive_seed(seed, 0, k))` for `k = 0, 1, …`,
/// keeping those where `probe` succeeds, until `wanted` are accepted.
pub fn accept_samples(
    sampler: &dyn Fn(u64) -> Result<GroupPoint>,
    probe: &dyn Fn(&GroupPoint) -> Result<()>,
    wanted: usize,
    max_attempts: usize,
    seed: u64,
) -> Result<Acceptance> {
    let mut points = Vec::with_capacity(wanted);
    let mut rejected = 0;
    for k in 0..max_attempts {
        if points.len() == wanted {
            break;
        }
        let x = sampler(crate::group::derive_seed(seed, 0, k as u64))?;
        match probe(&x) {
            Ok(()) => points.push(x),
            Err(Error::BranchCut { .. } | Error::BelowBranchFloor(_) | Error::NonFinite) => rejected += 1,
            Err(e) => return Err(e),
        }
    }
    if points.len() < wanted {
        return Err(Error::SamplesExhausted {
            accepted: points.len(),
            wanted,
            attempts: points.len() + rejected,
        });
    }
    Ok(Acceptance { points, rejected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{build_a_example, phi_hat};
    use crate::group::{sample_so, Form};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn constants_are_harmonic() {
        let x = sample_so(4, 1);
        let ctx = OperatorContext::full(4);
        let k = ExprNode::Const(Complex64::new(2.0, -1.0));
        assert_eq!(tau(&k, &x, &ctx).unwrap(), ZERO);
        assert_eq!(kappa(&ExprNode::Entry(0, 1), &k, &x, &ctx).unwrap(), ZERO);
    }

    #[test]
    fn coordinate_eigenvalue() {
        for n in 2..=5 {
            let x = sample_so(n, n as u64);
            let ctx = OperatorContext::full(n);
            for j in 0..n {
                for a in 0..n {
                    let t = tau(&ExprNode::Entry(j, a), &x, &ctx).unwrap();
                    let expect = -(n as f64 - 1.0) / 2.0 * x.entries()[(j, a)];
                    assert!((t - c(expect)).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn coordinate_kappa() {
        let n = 4;
        let x = sample_so(n, 3);
        let e = x.entries();
        let ctx = OperatorContext::full(n);
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        for (j, a, k, b) in [(0, 0, 0, 0), (0, 1, 2, 3), (1, 2, 1, 2), (3, 0, 0, 3)] {
            let v = kappa(&ExprNode::Entry(j, a), &ExprNode::Entry(k, b), &x, &ctx).unwrap();
            let expect = -0.5 * (e[(j, b)] * e[(k, a)] - delta(j, k) * delta(a, b));
            assert!((v - c(expect)).norm() < 1e-13);
        }
    }

    #[test]
    fn phi_hat_tau() {
        let (m, n) = (2, 3);
        let x = sample_so(5, 8);
        let ctx = OperatorContext::full(5);
        for j in 0..5 {
            for a in 0..5 {
                let f = phi_hat(j, a, m, n).unwrap();
                let v = f.evaluate_at(&x).unwrap();
                let d = if j == a { m as f64 } else { 0.0 };
                let t = tau(&f, &x, &ctx).unwrap();
                assert!((t - (-(5.0) * v + d)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn iterated_tau_base_cases() {
        let x = sample_so(3, 2);
        let ctx = OperatorContext::full(3);
        let f = phi_hat(0, 1, 1, 2).unwrap();
        assert_eq!(tau_iter(&f, 0, &x, &ctx).unwrap(), f.evaluate_at(&x).unwrap());
        assert!((tau_iter(&f, 1, &x, &ctx).unwrap() - tau(&f, &x, &ctx).unwrap()).norm() < 1e-15);
        // φ̂_{01} is an eigenfunction with eigenvalue -3, so τ² = 9·φ̂.
        let t2 = tau_iter(&f, 2, &x, &ctx).unwrap();
        assert!((t2 - 9.0 * f.evaluate_at(&x).unwrap()).norm() < 1e-12);
        assert!(matches!(tau_iter(&f, 6, &x, &ctx), Err(Error::DepthExceeded(6, 5))));
    }

    #[test]
    fn eigen_check_on_example_matrix() {
        let w = [Complex64::new(0.4, 1.0), Complex64::new(-1.2, 0.3), Complex64::new(0.7, -0.6)];
        let a = build_a_example(&w, 2, 2).unwrap();
        let points: Vec<_> = (0..5).map(|s| sample_so(4, s)).collect();
        let r = check_eigen(&a.phi(), c(-4.0), c(-2.0), &points, &OperatorContext::full(4), 1e-9);
        assert!(r.pass, "{r:?}");
        let r = check_eigen(
            &a.phi(),
            c(-4.0),
            c(-2.0),
            &points,
            &OperatorContext::grassmann(2, 2, Form::Compact),
            1e-9,
        );
        assert!(r.pass, "{r:?}");
        let wrong = check_eigen(&a.phi(), c(-3.0), c(-2.0), &points, &OperatorContext::full(4), 1e-9);
        assert!(!wrong.pass);
    }

    #[test]
    fn degenerate_function_is_flagged() {
        let points: Vec<_> = (0..3).map(|s| sample_so(3, s)).collect();
        let zero = ExprNode::Const(ZERO);
        let r = check_eigen(&zero, c(-3.0), c(-2.0), &points, &OperatorContext::full(3), 1e-9);
        assert!(!r.pass);
        assert_eq!(r.check_passed("nondegenerate"), Some(false));
    }

    #[test]
    fn context_validation() {
        assert!(OperatorContext::new(vec![], Signature::Compact(2)).is_err());
        let scaled: Vec<_> = so_basis(3).iter().map(|b| b.rescaled(2.0)).collect();
        assert!(OperatorContext::new(scaled, Signature::Compact(3)).is_err());
        assert!(OperatorContext::new(so_basis(3), Signature::Compact(3)).is_ok());
    }

    #[test]
    fn rescaled_basis_breaks_calibration() {
        let x = sample_so(3, 4);
        let scaled: Vec<_> = so_basis(3).iter().map(|b| b.rescaled(1.1)).collect();
        let ctx = OperatorContext::unchecked(scaled, Signature::Compact(3));
        let f = ExprNode::Entry(0, 2);
        let t = tau(&f, &x, &ctx).unwrap();
        assert!((t - c(-x.entries()[(0, 2)])).norm() > 1e-3);
    }

    #[test]
    fn isotropy_directions_annihilate_phi() {
        let (m, n) = (2, 3);
        let x = sample_so(5, 21);
        let iso = OperatorContext::isotropy(&[m, n]).unwrap();
        let f = phi_hat(1, 4, m, n).unwrap();
        let grads = gradients(std::slice::from_ref(&f), &x, &iso).unwrap();
        assert!(grads.iter().all(|g| g[0].norm() < 1e-14));
        assert!(tau(&f, &x, &iso).unwrap().norm() < 1e-13);
        let full = tau(&f, &x, &OperatorContext::full(5)).unwrap();
        let part = tau(&f, &x, &OperatorContext::grassmann(m, n, Form::Compact)).unwrap();
        assert!((full - part).norm() < 1e-13);
    }

    #[test]
    fn linearity_and_symmetry() {
        let x = sample_so(4, 5);
        let ctx = OperatorContext::full(4);
        let f = ExprNode::Entry(0, 1) * ExprNode::Entry(2, 3);
        let g = (ExprNode::Entry(1, 1) + ExprNode::constant(c(2.0))).log();
        let a = Complex64::new(0.3, -2.0);
        let lhs = tau(&(f.clone().scaled(a) + g.clone()), &x, &ctx).unwrap();
        let rhs = a * tau(&f, &x, &ctx).unwrap() + tau(&g, &x, &ctx).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
        let k1 = kappa(&f, &g, &x, &ctx).unwrap();
        let k2 = kappa(&g, &f, &x, &ctx).unwrap();
        assert!((k1 - k2).norm() < 1e-15);
    }

    #[test]
    fn product_rule_holds() {
        let points: Vec<_> = (0..4).map(|s| sample_so(4, 40 + s)).collect();
        let f = ExprNode::Entry(0, 1) * ExprNode::Entry(3, 2) + ExprNode::Entry(1, 1);
        let g = ExprNode::Entry(2, 0) + ExprNode::constant(c(3.0));
        let r = verify_product_rule(&f, &g, &points, &OperatorContext::full(4), 1e-12);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn rank_two_matrix_fails_kappa() {
        let (m, n) = (2, 2);
        let u = [c(1.0), Complex64::new(0.0, 1.0), c(0.0), c(0.0)];
        let v = [c(0.0), c(0.0), c(1.0), Complex64::new(0.0, 1.0)];
        let a = nalgebra::DMatrix::from_fn(4, 4, |i, j| u[i] * u[j] + v[i] * v[j]);
        assert!(!crate::functions::validate_eigen_matrix(&a).pass);
        let f = crate::functions::phi_matrix(&a, m..m + n);
        let points: Vec<_> = (0..4).map(|s| sample_so(4, s)).collect();
        let r = check_eigen(&f, c(-4.0), c(-2.0), &points, &OperatorContext::full(4), 1e-9);
        assert_eq!(r.check_passed("tau"), Some(true));
        assert_eq!(r.check_passed("kappa"), Some(false));
    }

    #[test]
    fn sphere_case_eigenvalues() {
        // m = 1: SO(n+1)/SO(n) is the sphere and φ is a restricted harmonic polynomial.
        let n = 3;
        let w = [c(0.8), Complex64::new(0.1, 0.5), c(-0.4)];
        let a = build_a_example(&w, 1, n).unwrap();
        let points: Vec<_> = (0..4).map(|s| sample_so(n + 1, 70 + s)).collect();
        let r = check_eigen(&a.phi(), c(-(n as f64 + 1.0)), c(-2.0), &points, &OperatorContext::full(n + 1), 1e-9);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn orthogonal_isotropic_family() {
        let mut rng = crate::group::rng_from_seed(9);
        let (m, n) = (1, 4);
        let fam = crate::functions::isotropic_family(n + m, 2, &mut rng);
        let fs: Vec<_> = fam
            .iter()
            .map(|u| crate::functions::build_a_from_isotropic(u, m, n).unwrap().phi())
            .collect();
        let points: Vec<_> = (0..3).map(|s| sample_so(5, 90 + s)).collect();
        let r = check_eigenfamily(&fs, c(-5.0), c(-2.0), &points, &OperatorContext::full(5), 1e-9);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn dual_eigenvalues_flip_sign() {
        let (m, n) = (2, 2);
        let w = [Complex64::new(0.4, 1.0), Complex64::new(-1.2, 0.3), Complex64::new(0.7, -0.6)];
        let dual = build_a_example(&w, m, n).unwrap().phi().dualize(m);
        let points: Vec<_> = (0..4).map(|s| crate::group::sample_so_mn(m, n, s, 0.6).unwrap()).collect();
        let ctx = OperatorContext::grassmann(m, n, Form::Indefinite);
        let r = check_eigen(&dual, c(4.0), c(2.0), &points, &ctx, 1e-9);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn invariance_and_witness() {
        let (m, n) = (2, 2);
        let f = phi_hat(0, 3, m, n).unwrap();
        let points: Vec<_> = (0..3).map(|s| sample_so(4, s)).collect();
        let k = |s: u64| crate::group::sample_block_diagonal(&[m, n], s);
        assert!(check_invariance(&f, &k, &points, 4, 1, 1e-12).pass);
        let g = ExprNode::Entry(0, 0);
        let (_, _, change) = find_non_invariance(&g, &k, &points, 4, 1, 1e-3).unwrap();
        assert!(change > 1e-3);
    }

    #[test]
    fn numerical_p_harmonicity() {
        use crate::functions::build_p_harmonic;
        let w = [Complex64::new(0.9, 0.2), Complex64::new(-0.3, 0.8)];
        let (m, n) = (1, 2);
        let phi = build_a_example(&w, m, n).unwrap().phi();
        let ctx = OperatorContext::grassmann(m, n, Form::Compact);
        let sampler = |s: u64| Ok(sample_so(3, s));
        for p in 2..=3 {
            let f = build_p_harmonic(&phi, c(-3.0), c(-2.0), p, c(1.0), Complex64::new(0.5, -0.25)).unwrap();
            let probe = |x: &GroupPoint| tau_iter(&f, p as usize, x, &ctx).map(|_| ());
            let acc = accept_samples(&sampler, &probe, 10, 200, 5).unwrap();
            let r = check_p_harmonic(&f, p as usize, &acc.points, &ctx, 1e-5, 1e-3);
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn sample_exhaustion() {
        let sampler = |s: u64| Ok(sample_so(3, s));
        let never = |_: &GroupPoint| Err(Error::BranchCut { re: -1.0, im: 0.0 });
        assert!(matches!(
            accept_samples(&sampler, &never, 3, 10, 0),
            Err(Error::SamplesExhausted { accepted: 0, wanted: 3, attempts: 10 })
        ));
        let always = |_: &GroupPoint| Ok(());
        let acc = accept_samples(&sampler, &always, 3, 10, 0).unwrap();
        assert_eq!((acc.points.len(), acc.rejected), (3, 0));
    }

    #[test]
    fn coordinate_and_phi_hat_identities() {
        let points: Vec<_> = (0..3).map(|s| sample_so(5, 500 + s)).collect();
        let r = check_coordinate_identities(&points, &OperatorContext::full(5), 1e-12);
        assert!(r.pass, "{r:?}");
        let r = check_phi_hat_identities(2, 3, &points, &OperatorContext::full(5), 1e-12);
        assert!(r.pass, "{r:?}");
        let scaled: Vec<_> = so_basis(5).iter().map(|b| b.rescaled(0.9)).collect();
        let bad = OperatorContext::unchecked(scaled, Signature::Compact(5));
        assert!(!check_coordinate_identities(&points, &bad, 1e-9).pass);
    }

    #[test]
    fn lift_check() {
        let w = [Complex64::new(0.4, 1.0), Complex64::new(-1.2, 0.3), Complex64::new(0.7, -0.6)];
        let phi = build_a_example(&w, 2, 2).unwrap().phi();
        let points: Vec<_> = (0..3).map(|s| sample_so(4, s)).collect();
        assert!(check_lift(&phi, 2, 2, &points, 1e-9, 1e-11).pass);
        assert!(!check_lift(&ExprNode::Entry(0, 0), 2, 2, &points, 1e-9, 1e-11).pass);
    }

    #[test]
    fn tolerance_schedule() {
        let t = Tolerances::default();
        assert_eq!(t.for_depth(1), 1e-9);
        assert_eq!(t.for_depth(2), 1e-7);
        assert!((t.for_depth(3) - 1e-6).abs() < 1e-20);
    }
}
