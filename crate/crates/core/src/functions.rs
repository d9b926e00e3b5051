//! Expression trees for the functions under study and their coefficient data.
//!
//! Indices are zero-based throughout: `Entry(j, α)` is the matrix coordinate
//! in row `j`, column `α`.

use std::ops::Range;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{sample_so_with, GroupPoint, SquareMatrix};
use crate::jets::{as_natural_exponent, Scalar};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Tolerance for the structural conditions on coefficient matrices.
pub const EIGEN_MATRIX_TOL: f64 = 1e-10;

/// Relative tolerance for `uᵀu = 0`.
pub const ISOTROPY_TOL: f64 = 1e-12;

/// Complex-valued function of the matrix entries, evaluable over any [`Scalar`].
#[derive(Debug, Clone, PartialEq)]
pub enum ExprNode {
    Entry(usize, usize),
    Const(Complex64),
    Sum(Vec<ExprNode>),
    Product(Vec<ExprNode>),
    /// Natural exponents are evaluated by repeated multiplication, all
    /// others through the principal branch.
    Pow(Box<ExprNode>, Complex64),
    Log(Box<ExprNode>),
}

impl ExprNode {
    pub fn constant(c: Complex64) -> Self {
        ExprNode::Const(c)
    }

    pub fn pow(self, e: Complex64) -> Self {
        ExprNode::Pow(Box::new(self), e)
    }

    pub fn log(self) -> Self {
        ExprNode::Log(Box::new(self))
    }

    pub fn scaled(self, c: Complex64) -> Self {
        if c == ONE {
            self
        } else {
            ExprNode::Product(vec![ExprNode::Const(c), self])
        }
    }

    pub fn evaluate<S: Scalar>(&self, x: &SquareMatrix<S>) -> Result<S> {
        match self {
            ExprNode::Entry(j, a) => {
                let dim = x.dim();
                if *j >= dim || *a >= dim {
                    return Err(Error::IndexOutOfRange(*j, *a, dim));
                }
                Ok(x.get(*j, *a).clone())
            }
            ExprNode::Const(c) => Ok(S::constant(*c)),
            ExprNode::Sum(children) => {
                let mut acc: Option<S> = None;
                for c in children {
                    let v = c.evaluate(x)?;
                    acc = Some(match acc {
                        Some(a) => a + v,
                        None => v,
                    });
                }
                Ok(acc.unwrap_or_else(S::zero))
            }
            ExprNode::Product(children) => {
                let mut acc: Option<S> = None;
                for c in children {
                    let v = match c {
                        ExprNode::Const(k) => {
                            acc = Some(match acc {
                                Some(a) => a.scale(*k),
                                None => S::constant(*k),
                            });
                            continue;
                        }
                        other => other.evaluate(x)?,
                    };
                    acc = Some(match acc {
                        Some(a) => a * v,
                        None => v,
                    });
                }
                Ok(acc.unwrap_or_else(S::one))
            }
            ExprNode::Pow(child, e) => {
                let v = child.evaluate(x)?;
                match as_natural_exponent(*e) {
                    Some(k) => Ok(v.powi(k)),
                    None => v.powc(*e),
                }
            }
            ExprNode::Log(child) => child.evaluate(x)?.ln(),
        }
    }

    pub fn evaluate_at(&self, x: &GroupPoint) -> Result<Complex64> {
        self.evaluate(&x.to_complex())
    }

    /// Replaces every `Entry(j, α)` by `f(j, α)`.
    pub fn substitute(&self, f: &impl Fn(usize, usize) -> ExprNode) -> ExprNode {
        match self {
            ExprNode::Entry(j, a) => f(*j, *a),
            ExprNode::Const(c) => ExprNode::Const(*c),
            ExprNode::Sum(cs) => ExprNode::Sum(cs.iter().map(|c| c.substitute(f)).collect()),
            ExprNode::Product(cs) => {
                ExprNode::Product(cs.iter().map(|c| c.substitute(f)).collect())
            }
            ExprNode::Pow(c, e) => ExprNode::Pow(Box::new(c.substitute(f)), *e),
            ExprNode::Log(c) => ExprNode::Log(Box::new(c.substitute(f))),
        }
    }

    /// The function `g ↦ f(J g J⁻¹)` with `J = diag(I_m, i·I_n)`, which
    /// carries `SO₀(m,n)` into the complex orthogonal group. This is the
    /// dual of a `K`-invariant function on the compact group.
    pub fn dualize(&self, m: usize) -> ExprNode {
        self.substitute(&|j, a| {
            let factor = match (j < m, a < m) {
                (true, false) => -I,
                (false, true) => I,
                _ => ONE,
            };
            ExprNode::Entry(j, a).scaled(factor)
        })
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            ExprNode::Entry(..) | ExprNode::Const(_) => 1,
            ExprNode::Sum(cs) | ExprNode::Product(cs) => 1 + cs.iter().map(|c| c.size()).sum::<usize>(),
            ExprNode::Pow(c, _) | ExprNode::Log(c) => 1 + c.size(),
        }
    }
}

impl std::ops::Add for ExprNode {
    type Output = ExprNode;

    fn add(self, rhs: ExprNode) -> ExprNode {
        match self {
            ExprNode::Sum(mut cs) => {
                cs.push(rhs);
                ExprNode::Sum(cs)
            }
            lhs => ExprNode::Sum(vec![lhs, rhs]),
        }
    }
}

impl std::ops::Mul for ExprNode {
    type Output = ExprNode;

    fn mul(self, rhs: ExprNode) -> ExprNode {
        match self {
            ExprNode::Product(mut cs) => {
                cs.push(rhs);
                ExprNode::Product(cs)
            }
            lhs => ExprNode::Product(vec![lhs, rhs]),
        }
    }
}

/// `Σ_{t ∈ cols} x_{jt} x_{αt}`.
pub fn phi_hat_cols(j: usize, a: usize, cols: Range<usize>) -> ExprNode {
    ExprNode::Sum(
        cols.map(|t| ExprNode::Product(vec![ExprNode::Entry(j, t), ExprNode::Entry(a, t)]))
            .collect(),
    )
}

/// `φ̂_{jα}(x) = Σ_{t<m} x_{jt} x_{αt}` on `SO(m+n)`.
pub fn phi_hat(j: usize, a: usize, m: usize, n: usize) -> Result<ExprNode> {
    let dim = m + n;
    if j >= dim || a >= dim {
        return Err(Error::IndexOutOfRange(j, a, dim));
    }
    Ok(phi_hat_cols(j, a, 0..m))
}

/// `Σ a_{jα} φ̂_{jα}` over the given column window, for any square `A`.
pub fn phi_matrix(a: &DMatrix<Complex64>, cols: Range<usize>) -> ExprNode {
    let dim = a.nrows();
    let mut terms = Vec::new();
    for j in 0..dim {
        for al in 0..dim {
            let c = a[(j, al)];
            if c != ZERO {
                terms.push(phi_hat_cols(j, al, cols.clone()).scaled(c));
            }
        }
    }
    ExprNode::Sum(terms)
}

/// Per-condition residuals of a candidate coefficient matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixValidation {
    /// `max|A - Aᵀ| / ‖A‖`
    pub symmetry: f64,
    /// `|trace A| / ‖A‖`
    pub trace: f64,
    /// `max|A²| / ‖A‖²`
    pub square: f64,
    /// `σ₂ / σ₁`, or `NaN` for the zero matrix.
    pub rank_ratio: f64,
    /// Largest singular value.
    pub scale: f64,
    pub symmetric_ok: bool,
    pub traceless_ok: bool,
    pub square_zero_ok: bool,
    pub rank_one_ok: bool,
    pub pass: bool,
}

impl MatrixValidation {
    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.symmetric_ok {
            out.push("symmetry");
        }
        if !self.traceless_ok {
            out.push("trace");
        }
        if !self.square_zero_ok {
            out.push("square");
        }
        if !self.rank_one_ok {
            out.push("rank");
        }
        out
    }
}

/// Checks symmetry, zero trace, `A² = 0` and rank one.
pub fn validate_eigen_matrix(a: &DMatrix<Complex64>) -> MatrixValidation {
    let mut sv: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    let s1 = sv.first().copied().unwrap_or(0.0);
    let s2 = sv.get(1).copied().unwrap_or(0.0);
    let norm = a.iter().map(|z| z.norm()).fold(0.0, f64::max);

    if norm == 0.0 {
        return MatrixValidation {
            symmetry: 0.0,
            trace: 0.0,
            square: 0.0,
            rank_ratio: f64::NAN,
            scale: 0.0,
            symmetric_ok: true,
            traceless_ok: true,
            square_zero_ok: true,
            rank_one_ok: false,
            pass: false,
        };
    }
    let symmetry = (a - a.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max) / norm;
    let trace = a.trace().norm() / norm;
    let square = (a * a).iter().map(|z| z.norm()).fold(0.0, f64::max) / (norm * norm);
    let rank_ratio = s2 / s1;
    let symmetric_ok = symmetry <= EIGEN_MATRIX_TOL;
    let traceless_ok = trace <= EIGEN_MATRIX_TOL;
    let square_zero_ok = square <= EIGEN_MATRIX_TOL;
    let rank_one_ok = rank_ratio <= EIGEN_MATRIX_TOL;
    MatrixValidation {
        symmetry,
        trace,
        square,
        rank_ratio,
        scale: s1,
        symmetric_ok,
        traceless_ok,
        square_zero_ok,
        rank_one_ok,
        pass: symmetric_ok && traceless_ok && square_zero_ok && rank_one_ok,
    }
}

/// Complex symmetric, traceless, square-zero, rank-one coefficient matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenMatrix {
    a: DMatrix<Complex64>,
    m: usize,
    n: usize,
}

impl EigenMatrix {
    pub fn new(a: DMatrix<Complex64>, m: usize, n: usize) -> Result<Self> {
        if a.nrows() != m + n || a.ncols() != m + n {
            return Err(Error::DimensionMismatch { expected: m + n, got: a.nrows() });
        }
        let v = validate_eigen_matrix(&a);
        if !v.pass {
            return Err(Error::InvalidEigenMatrix(v.failures().join(", ")));
        }
        Ok(EigenMatrix { a, m, n })
    }

    /// Skips the structural checks; used for negative controls.
    pub fn unchecked(a: DMatrix<Complex64>, m: usize, n: usize) -> Self {
        EigenMatrix { a, m, n }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.a
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    /// `Φ̂_A(x) = Σ a_{jα} φ̂_{jα}(x)`.
    pub fn phi(&self) -> ExprNode {
        phi_matrix(&self.a, 0..self.m)
    }
}

pub fn is_isotropic(u: &[Complex64]) -> bool {
    let norm2: f64 = u.iter().map(|z| z.norm_sqr()).sum();
    let q: Complex64 = u.iter().map(|z| z * z).sum();
    norm2 > 0.0 && q.norm() <= ISOTROPY_TOL * norm2
}

/// `A = u·uᵀ` for an isotropic `u`.
pub fn build_a_from_isotropic(u: &[Complex64], m: usize, n: usize) -> Result<EigenMatrix> {
    if u.len() != m + n {
        return Err(Error::DimensionMismatch { expected: m + n, got: u.len() });
    }
    let norm2: f64 = u.iter().map(|z| z.norm_sqr()).sum();
    if norm2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    let q: Complex64 = u.iter().map(|z| z * z).sum();
    if q.norm() > ISOTROPY_TOL * norm2 {
        return Err(Error::NotIsotropic(q.norm()));
    }
    let dim = m + n;
    let a = DMatrix::from_fn(dim, dim, |i, j| u[i] * u[j]);
    EigenMatrix::new(a, m, n)
}

/// The isotropic vector `(√p(w), i·w₁, …, i·w_{N-1})` with `p(w) = Σ w_k²`
/// and the principal square root.
pub fn example_isotropic_vector(w: &[Complex64]) -> Result<Vec<Complex64>> {
    if w.iter().all(|z| *z == ZERO) {
        return Err(Error::ZeroVector);
    }
    let p: Complex64 = w.iter().map(|z| z * z).sum();
    let mut u = Vec::with_capacity(w.len() + 1);
    u.push(p.sqrt());
    u.extend(w.iter().map(|z| I * z));
    Ok(u)
}

/// The matrix with first row `(p(w), i w₁√p(w), …)` and lower-right block
/// `-w_i w_j`.
pub fn build_a_example(w: &[Complex64], m: usize, n: usize) -> Result<EigenMatrix> {
    if w.len() + 1 != m + n {
        return Err(Error::DimensionMismatch { expected: m + n - 1, got: w.len() });
    }
    let u = example_isotropic_vector(w)?;
    let dim = m + n;
    EigenMatrix::new(DMatrix::from_fn(dim, dim, |i, j| u[i] * u[j]), m, n)
}

/// `size` mutually orthogonal isotropic vectors in `ℂ^dim` built from the
/// columns of a Haar orthogonal matrix, each scaled by a random complex factor.
pub fn isotropic_family<R: Rng + ?Sized>(dim: usize, size: usize, rng: &mut R) -> Vec<Vec<Complex64>> {
    assert!(2 * size <= dim, "at most dim/2 orthogonal isotropic vectors exist");
    let q = sample_so_with(dim, rng);
    (0..size)
        .map(|k| {
            let c = Complex64::new(rng.random_range(0.5..1.5), rng.random_range(-0.5..0.5));
            (0..dim).map(|i| c * Complex64::new(q[(i, 2 * k)], q[(i, 2 * k + 1)])).collect()
        })
        .collect()
}

/// Which formula of the p-harmonic construction applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PHarmonicCase {
    /// `μ = 0, λ ≠ 0`: `c₁·log(φ)^{p-1}`.
    LogPower,
    /// `λ = μ ≠ 0`: `c₁·log(φ)^{2p-1} + c₂·log(φ)^{2p-2}`.
    EqualEigenvalues,
    /// `μ ≠ 0, λ ≠ μ`: `c₁·φ^{1-λ/μ}·log(φ)^{p-1} + c₂·log(φ)^{p-1}`.
    General,
}

pub fn classify_case(lambda: Complex64, mu: Complex64) -> Result<PHarmonicCase> {
    match (lambda == ZERO, mu == ZERO) {
        (true, true) | (true, false) => Err(Error::UnsupportedCase {
            lambda: lambda.to_string(),
            mu: mu.to_string(),
        }),
        (false, true) => Ok(PHarmonicCase::LogPower),
        (false, false) if lambda == mu => Ok(PHarmonicCase::EqualEigenvalues),
        (false, false) => Ok(PHarmonicCase::General),
    }
}

fn log_power(phi: &ExprNode, k: u32) -> Option<ExprNode> {
    match k {
        0 => None,
        1 => Some(phi.clone().log()),
        _ => Some(phi.clone().log().pow(Complex64::new(k as f64, 0.0))),
    }
}

fn term(c: Complex64, factors: Vec<Option<ExprNode>>) -> ExprNode {
    let mut parts = vec![ExprNode::Const(c)];
    parts.extend(factors.into_iter().flatten());
    ExprNode::Product(parts)
}

/// The proper p-harmonic composition built from an eigenfunction `φ` with
/// eigenvalues `(λ, μ)`.
pub fn build_p_harmonic(
    phi: &ExprNode,
    lambda: Complex64,
    mu: Complex64,
    p: u32,
    c1: Complex64,
    c2: Complex64,
) -> Result<ExprNode> {
    if p == 0 {
        return Err(Error::Config("p must be at least 1".into()));
    }
    Ok(match classify_case(lambda, mu)? {
        PHarmonicCase::LogPower => term(c1, vec![log_power(phi, p - 1)]),
        PHarmonicCase::EqualEigenvalues => ExprNode::Sum(vec![
            term(c1, vec![log_power(phi, 2 * p - 1)]),
            term(c2, vec![log_power(phi, 2 * p - 2)]),
        ]),
        PHarmonicCase::General => {
            let e = ONE - lambda / mu;
            ExprNode::Sum(vec![
                term(c1, vec![Some(phi.clone().pow(e)), log_power(phi, p - 1)]),
                term(c2, vec![log_power(phi, p - 1)]),
            ])
        }
    })
}

/// Coefficient data for one block of a flag manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagBlock {
    pub c1: Complex64,
    pub c2: Complex64,
    /// Mutually orthogonal isotropic vectors in `ℂⁿ`; the first one
    /// generates the block term of the summed function.
    pub family: Vec<Vec<Complex64>>,
}

/// `F(n₁,…,n_t) = SO(n)/SO(n₁)×…×SO(n_t)` with per-block coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagSpec {
    blocks: Vec<usize>,
    data: Vec<FlagBlock>,
}

impl FlagSpec {
    pub fn new(blocks: Vec<usize>, data: Vec<FlagBlock>) -> Result<Self> {
        validate_partition(&blocks)?;
        if data.len() != blocks.len() {
            return Err(Error::InvalidPartition(format!(
                "{} blocks but {} coefficient sets",
                blocks.len(),
                data.len()
            )));
        }
        let n: usize = blocks.iter().sum();
        for (k, b) in data.iter().enumerate() {
            if b.family.is_empty() {
                return Err(Error::InvalidPartition(format!("block {k} has no generator")));
            }
            for u in &b.family {
                if u.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: u.len() });
                }
                if !is_isotropic(u) {
                    return Err(Error::NotIsotropic(u.iter().map(|z| z * z).sum::<Complex64>().norm()));
                }
            }
        }
        Ok(FlagSpec { blocks, data })
    }

    /// Random generic coefficients. Blocks of width one carry a family of
    /// `n/2` mutually orthogonal isotropic generators; wider blocks carry
    /// a single generator.
    pub fn random<R: Rng + ?Sized>(blocks: Vec<usize>, rng: &mut R) -> Result<Self> {
        validate_partition(&blocks)?;
        let n: usize = blocks.iter().sum();
        let data = blocks
            .iter()
            .map(|&b| {
                let size = if b == 1 { (n / 2).max(1) } else { 1 };
                let mut coeff = || {
                    Complex64::new(rng.random_range(0.5..1.5), rng.random_range(-0.5..0.5))
                };
                let c1 = coeff();
                let c2 = coeff();
                FlagBlock { c1, c2, family: isotropic_family(n, size, rng) }
            })
            .collect();
        FlagSpec::new(blocks, data)
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn block_data(&self) -> &[FlagBlock] {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    /// Column window of block `k`.
    pub fn window(&self, k: usize) -> Range<usize> {
        let start: usize = self.blocks[..k].iter().sum();
        start..start + self.blocks[k]
    }

    /// Eigenvalues `(λ_k, μ_k) = (-n, -2)` shared by every block.
    pub fn eigenvalues(&self) -> (Complex64, Complex64) {
        (Complex64::new(-(self.dim() as f64), 0.0), Complex64::new(-2.0, 0.0))
    }

    /// The eigenfamily of block `k`: one function per family vector.
    pub fn block_family(&self, k: usize) -> Vec<ExprNode> {
        self.data[k]
            .family
            .iter()
            .map(|u| {
                let n = u.len();
                phi_matrix(&DMatrix::from_fn(n, n, |i, j| u[i] * u[j]), self.window(k))
            })
            .collect()
    }
}

fn validate_partition(blocks: &[usize]) -> Result<()> {
    if blocks.len() < 2 {
        return Err(Error::InvalidPartition(format!("need at least two blocks, got {}", blocks.len())));
    }
    if blocks.contains(&0) {
        return Err(Error::InvalidPartition("block sizes must be positive".into()));
    }
    Ok(())
}

/// `Σ_k c_{1,k}·φ̂_k^{1-λ_k/μ_k}·log(φ̂_k)^{p-1} + c_{2,k}·log(φ̂_k)^{p-1}`,
/// dispatched per block through [`build_p_harmonic`].
pub fn build_flag_sum(spec: &FlagSpec, p: u32) -> Result<ExprNode> {
    let (lambda, mu) = spec.eigenvalues();
    let mut terms = Vec::with_capacity(spec.blocks.len());
    for (k, b) in spec.data.iter().enumerate() {
        let phi = spec.block_family(k).swap_remove(0);
        terms.push(build_p_harmonic(&phi, lambda, mu, p, b.c1, b.c2)?);
    }
    Ok(ExprNode::Sum(terms))
}

/// Parses `re:im` (or a bare real).
pub fn parse_complex_cell(cell: &str) -> Result<Complex64> {
    let cell = cell.trim();
    let parse = |s: &str| {
        s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("'{cell}': {e}")))
    };
    match cell.split_once(':') {
        Some((re, im)) => Ok(Complex64::new(parse(re)?, parse(im)?)),
        None => Ok(Complex64::new(parse(cell)?, 0.0)),
    }
}

/// Comma-separated `re:im` cells.
pub fn parse_complex_vector(text: &str) -> Result<Vec<Complex64>> {
    text.trim().split(',').map(parse_complex_cell).collect()
}

/// Row-major CSV of `re:im` cells, one matrix row per line.
pub fn parse_matrix_csv(text: &str) -> Result<DMatrix<Complex64>> {
    let rows: Vec<Vec<Complex64>> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(parse_complex_vector)
        .collect::<Result<_>>()?;
    square_from_rows(rows)
}

/// JSON array of rows, each cell a `[re, im]` pair.
pub fn parse_matrix_json(text: &str) -> Result<DMatrix<Complex64>> {
    let rows: Vec<Vec<[f64; 2]>> =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    square_from_rows(
        rows.into_iter()
            .map(|r| r.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
            .collect(),
    )
}

/// JSON array of `[re, im]` pairs.
pub fn parse_vector_json(text: &str) -> Result<Vec<Complex64>> {
    let cells: Vec<[f64; 2]> = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(cells.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
}

fn square_from_rows(rows: Vec<Vec<Complex64>>) -> Result<DMatrix<Complex64>> {
    let dim = rows.len();
    if dim == 0 {
        return Err(Error::Parse("empty matrix".into()));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

/// Loads a coefficient matrix, choosing JSON or CSV by extension.
pub fn load_matrix(path: &Path) -> Result<DMatrix<Complex64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        parse_matrix_json(&text)
    } else {
        parse_matrix_csv(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{rng_from_seed, sample_block_diagonal, sample_so};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_w(len: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = rng_from_seed(seed);
        (0..len).map(|_| c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))).collect()
    }

    #[test]
    fn phi_hat_m1_is_a_product() {
        let f = phi_hat(2, 1, 1, 2).unwrap();
        let x = sample_so(3, 4);
        let e = x.entries();
        assert!((f.evaluate_at(&x).unwrap() - c(e[(2, 0)] * e[(1, 0)], 0.0)).norm() < 1e-15);
        assert!(matches!(phi_hat(3, 0, 1, 2), Err(Error::IndexOutOfRange(3, 0, 3))));
    }

    #[test]
    fn phi_hat_at_identity() {
        let id = GroupPoint::identity(crate::group::Signature::Compact(5));
        for j in 0..5 {
            for a in 0..5 {
                let v = phi_hat(j, a, 2, 3).unwrap().evaluate_at(&id).unwrap();
                let expect = if j == a && j < 2 { 1.0 } else { 0.0 };
                assert_eq!(v, c(expect, 0.0));
            }
        }
    }

    #[test]
    fn diagonal_phi_hat_sums_to_m() {
        for seed in 0..5 {
            let x = sample_so(5, seed);
            let s: Complex64 =
                (0..5).map(|j| phi_hat(j, j, 2, 3).unwrap().evaluate_at(&x).unwrap()).sum();
            assert!((s - c(2.0, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn isotropic_builder() {
        let u = [c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)];
        let a = build_a_from_isotropic(&u, 2, 2).unwrap();
        let expect = DMatrix::from_row_slice(
            4,
            4,
            &[
                c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0),
                c(0.0, 1.0), c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
                c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
                c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0),
            ],
        );
        assert_eq!(a.matrix(), &expect);

        let k = c(0.3, -2.0);
        let scaled: Vec<_> = u.iter().map(|z| z * k).collect();
        let b = build_a_from_isotropic(&scaled, 2, 2).unwrap();
        assert!((b.matrix() - expect * (k * k)).iter().all(|z| z.norm() < 1e-14));

        assert_eq!(build_a_from_isotropic(&[c(0.0, 0.0); 3], 1, 2), Err(Error::ZeroVector));
        assert!(matches!(
            build_a_from_isotropic(&[c(1.0, 0.0), c(1.0, 0.0)], 1, 1),
            Err(Error::NotIsotropic(_))
        ));
    }

    #[test]
    fn example_matrix_in_dimension_four() {
        let a = build_a_example(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], 2, 2).unwrap();
        let m = a.matrix();
        assert_eq!(m[(0, 0)], c(1.0, 0.0));
        assert_eq!(m[(0, 1)], c(0.0, 1.0));
        assert_eq!(m[(1, 0)], c(0.0, 1.0));
        assert_eq!(m[(1, 1)], c(-1.0, 0.0));
        for i in 0..4 {
            for j in 0..4 {
                if i >= 2 || j >= 2 {
                    assert_eq!(m[(i, j)], c(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn example_matrices_satisfy_conditions() {
        for seed in 0..20 {
            let w = random_w(4, seed);
            let a = build_a_example(&w, 2, 3).unwrap();
            let m = a.matrix();
            let p: Complex64 = w.iter().map(|z| z * z).sum();
            assert!((m[(0, 0)] - p).norm() < 1e-12);
            assert!((m[(2, 3)] + w[1] * w[2]).norm() < 1e-12);
            let v = validate_eigen_matrix(m);
            assert!(v.pass, "{v:?}");
        }
        assert_eq!(build_a_example(&[c(0.0, 0.0); 3], 2, 2), Err(Error::ZeroVector));
    }

    #[test]
    fn validator_negatives() {
        let zero = DMatrix::<Complex64>::zeros(4, 4);
        let v = validate_eigen_matrix(&zero);
        assert!(!v.pass && !v.rank_one_ok);

        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(1.0, 0.0),
            c(-1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
        ]));
        let v = validate_eigen_matrix(&d);
        assert!(v.symmetric_ok && v.traceless_ok);
        assert!(!v.square_zero_ok && !v.rank_one_ok && !v.pass);
        assert!((v.rank_ratio - 1.0).abs() < 1e-15);
    }

    #[test]
    fn phi_a_at_identity_is_block_trace() {
        let a = build_a_example(&random_w(3, 7), 2, 2).unwrap();
        let id = GroupPoint::identity(crate::group::Signature::Compact(4));
        let expect = a.matrix()[(0, 0)] + a.matrix()[(1, 1)];
        assert!((a.phi().evaluate_at(&id).unwrap() - expect).norm() < 1e-13);
    }

    #[test]
    fn phi_a_m1_is_a_square() {
        let u = [c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)];
        let a = build_a_from_isotropic(&u, 1, 2).unwrap();
        for seed in 0..5 {
            let x = sample_so(3, seed);
            let e = x.entries();
            let expect = (c(e[(0, 0)], 0.0) + c(0.0, e[(1, 0)])).powi(2);
            assert!((a.phi().evaluate_at(&x).unwrap() - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn phi_is_linear_in_a() {
        let a = build_a_example(&random_w(4, 1), 2, 3).unwrap();
        let b = build_a_example(&random_w(4, 2), 2, 3).unwrap();
        let sum = phi_matrix(&(a.matrix() + b.matrix()), 0..2);
        for seed in 0..5 {
            let x = sample_so(5, seed);
            let lhs = sum.evaluate_at(&x).unwrap();
            let rhs = a.phi().evaluate_at(&x).unwrap() + b.phi().evaluate_at(&x).unwrap();
            assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn phi_a_is_right_k_invariant() {
        for (m, n) in [(1, 2), (2, 2), (2, 3), (3, 4)] {
            let a = build_a_example(&random_w(m + n - 1, m as u64), m, n).unwrap();
            let f = a.phi();
            for seed in 0..10 {
                let x = sample_so(m + n, seed);
                let k = sample_block_diagonal(&[m, n], 1000 + seed);
                let v = f.evaluate_at(&x).unwrap();
                let w = f.evaluate_at(&x.right_mul(&k)).unwrap();
                assert!((v - w).norm() <= 1e-10 * (1.0 + v.norm()));
            }
        }
    }

    #[test]
    fn p_harmonic_cases() {
        let phi = ExprNode::Entry(0, 0);
        let one = c(1.0, 0.0);
        let two = c(2.0, 0.0);
        let f = build_p_harmonic(&phi, c(-3.0, 0.0), c(0.0, 0.0), 2, two, one).unwrap();
        assert_eq!(f, ExprNode::Product(vec![ExprNode::Const(two), phi.clone().log()]));

        let f = build_p_harmonic(&phi, c(-2.0, 0.0), c(-2.0, 0.0), 1, two, one).unwrap();
        assert_eq!(
            f,
            ExprNode::Sum(vec![
                ExprNode::Product(vec![ExprNode::Const(two), phi.clone().log()]),
                ExprNode::Product(vec![ExprNode::Const(one)]),
            ])
        );

        let f = build_p_harmonic(&phi, c(-4.0, 0.0), c(-2.0, 0.0), 1, two, one).unwrap();
        assert_eq!(
            f,
            ExprNode::Sum(vec![
                ExprNode::Product(vec![ExprNode::Const(two), phi.clone().pow(c(-1.0, 0.0))]),
                ExprNode::Product(vec![ExprNode::Const(one)]),
            ])
        );

        let zero = c(0.0, 0.0);
        assert!(matches!(
            build_p_harmonic(&phi, zero, zero, 2, one, one),
            Err(Error::UnsupportedCase { .. })
        ));
        assert!(matches!(
            build_p_harmonic(&phi, zero, c(-2.0, 0.0), 2, one, one),
            Err(Error::UnsupportedCase { .. })
        ));
    }

    #[test]
    fn p_harmonic_values() {
        // c₁ φ^{-1} log φ + c₂ log φ at a plain point
        let x = GroupPoint::identity(crate::group::Signature::Compact(2));
        let phi = ExprNode::Sum(vec![ExprNode::Entry(0, 0), ExprNode::Const(c(1.0, 0.5))]);
        let f = build_p_harmonic(&phi, c(-4.0, 0.0), c(-2.0, 0.0), 2, c(1.0, 0.0), c(0.5, 0.0))
            .unwrap();
        let v = c(2.0, 0.5);
        let expect = v.powf(-1.0) * v.ln() + 0.5 * v.ln();
        assert!((f.evaluate_at(&x).unwrap() - expect).norm() < 1e-14);
    }

    #[test]
    fn flag_partitions() {
        let mut rng = rng_from_seed(1);
        assert!(matches!(FlagSpec::random(vec![4], &mut rng), Err(Error::InvalidPartition(_))));
        assert!(matches!(FlagSpec::random(vec![2, 0, 2], &mut rng), Err(Error::InvalidPartition(_))));
        let spec = FlagSpec::random(vec![1, 1, 2], &mut rng).unwrap();
        assert_eq!(spec.window(2), 2..4);
        assert_eq!(spec.block_family(0).len(), 2);
        assert_eq!(spec.block_family(2).len(), 1);
        match build_flag_sum(&spec, 2).unwrap() {
            ExprNode::Sum(terms) => assert_eq!(terms.len(), 3),
            other => panic!("{other:?}"),
        }
        let two = FlagSpec::random(vec![2, 2], &mut rng).unwrap();
        match build_flag_sum(&two, 3).unwrap() {
            ExprNode::Sum(terms) => assert_eq!(terms.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flag_sum_is_block_invariant() {
        let mut rng = rng_from_seed(5);
        for blocks in [vec![1, 1, 2], vec![2, 1, 1], vec![2, 2]] {
            let spec = FlagSpec::random(blocks.clone(), &mut rng).unwrap();
            let f = build_flag_sum(&spec, 2).unwrap();
            let mut checked = 0;
            for seed in 0..20 {
                let x = sample_so(4, seed);
                let Ok(v) = f.evaluate_at(&x) else { continue };
                let k = sample_block_diagonal(&blocks, 77 + seed);
                let w = f.evaluate_at(&x.right_mul(&k)).unwrap();
                assert!((v - w).norm() <= 1e-10 * (1.0 + v.norm()));
                checked += 1;
            }
            assert!(checked > 10);
        }
    }

    #[test]
    fn dualize_scales_off_diagonal_blocks() {
        let f = ExprNode::Sum(vec![
            ExprNode::Entry(0, 0),
            ExprNode::Entry(0, 2),
            ExprNode::Entry(2, 0),
            ExprNode::Entry(2, 2),
        ]);
        let x = SquareMatrix::from_fn(3, |_, _| c(1.0, 0.0));
        assert_eq!(f.dualize(2).evaluate(&x).unwrap(), c(2.0, 0.0));
        let g = ExprNode::Entry(0, 2).dualize(2);
        assert_eq!(g.evaluate(&x).unwrap(), c(0.0, -1.0));
    }

    #[test]
    fn parsing() {
        assert_eq!(parse_complex_cell(" 1.5:-2 ").unwrap(), c(1.5, -2.0));
        assert_eq!(parse_complex_cell("3").unwrap(), c(3.0, 0.0));
        assert!(parse_complex_cell("a:b").is_err());
        assert_eq!(parse_complex_vector("1:0,2:1").unwrap(), vec![c(1.0, 0.0), c(2.0, 1.0)]);
        let m = parse_matrix_csv("1:0,0:1\n0:1,-1:0\n").unwrap();
        assert_eq!(m[(1, 0)], c(0.0, 1.0));
        assert!(parse_matrix_csv("1:0,0:1\n0:1\n").is_err());
        let j = parse_matrix_json("[[[1,0],[0,1]],[[0,1],[-1,0]]]").unwrap();
        assert_eq!(j, m);
        assert_eq!(parse_vector_json("[[1,2]]").unwrap(), vec![c(1.0, 2.0)]);
    }
}
