//! Matrix models of `SO(N)` and `SO₀(m,n)`.
//!
//! Lie-algebra bases are orthonormal for `g(X,Y) = -trace(XY)` on the compact
//! algebra and `+trace(XY)` on the symmetric part of the indefinite one. With
//! this scale the matrix coefficients of the standard representation satisfy
//! `τ(x_{jα}) = -(N-1)/2 · x_{jα}`.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::{JetScalar, Scalar};

/// Entrywise tolerance for the defining group relations.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// Default sampling radius for the non-compact dual.
pub const DEFAULT_RADIUS: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signature {
    Compact(usize),
    Indefinite { m: usize, n: usize },
}

impl Signature {
    pub fn dim(&self) -> usize {
        match *self {
            Signature::Compact(n) => n,
            Signature::Indefinite { m, n } => m + n,
        }
    }

    pub fn form(&self) -> Form {
        match self {
            Signature::Compact(_) => Form::Compact,
            Signature::Indefinite { .. } => Form::Indefinite,
        }
    }

    /// `diag(I_m, -I_n)` for the indefinite form, the identity otherwise.
    pub fn eta(&self) -> DMatrix<f64> {
        match *self {
            Signature::Compact(n) => DMatrix::identity(n, n),
            Signature::Indefinite { m, n } => {
                DMatrix::from_fn(m + n, m + n, |i, j| match (i == j, i < m) {
                    (true, true) => 1.0,
                    (true, false) => -1.0,
                    _ => 0.0,
                })
            }
        }
    }
}

/// Which real form a Lie-algebra basis belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    Compact,
    Indefinite,
}

impl Form {
    /// `-trace(XY)` (compact) or `+trace(XY)` (indefinite, symmetric part).
    pub fn inner(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        let tr = (x * y).trace();
        match self {
            Form::Compact => -tr,
            Form::Indefinite => tr,
        }
    }
}

/// An element of `SO(N)` or `SO₀(m,n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPoint {
    entries: DMatrix<f64>,
    signature: Signature,
}

impl GroupPoint {
    /// Validates the defining relations to [`MEMBERSHIP_TOL`].
    pub fn new(entries: DMatrix<f64>, signature: Signature) -> Result<Self> {
        let point = GroupPoint { entries, signature };
        let dim = signature.dim();
        if point.entries.nrows() != dim || point.entries.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: point.entries.nrows() });
        }
        let res = point.membership_residual();
        if res > MEMBERSHIP_TOL {
            return Err(Error::Config(format!("matrix is not a group element (residual {res:e})")));
        }
        Ok(point)
    }

    pub fn identity(signature: Signature) -> Self {
        let dim = signature.dim();
        GroupPoint { entries: DMatrix::identity(dim, dim), signature }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Largest entrywise violation of `xᵀηx = η`, including `|det x - 1|`
    /// for the compact case.
    pub fn membership_residual(&self) -> f64 {
        let eta = self.signature.eta();
        let lhs = self.entries.transpose() * &eta * &self.entries;
        let mut res = (lhs - eta).abs().max();
        if let Signature::Compact(_) = self.signature {
            res = res.max((self.entries.determinant() - 1.0).abs());
        }
        res
    }

    /// Right multiplication `x·k`; the signature of `self` is kept.
    pub fn right_mul(&self, k: &GroupPoint) -> GroupPoint {
        GroupPoint { entries: &self.entries * &k.entries, signature: self.signature }
    }

    pub fn to_complex(&self) -> SquareMatrix<Complex64> {
        SquareMatrix::from_fn(self.dim(), |i, j| Complex64::new(self.entries[(i, j)], 0.0))
    }

    pub fn to_jets(&self) -> SquareMatrix<JetScalar> {
        SquareMatrix::from_fn(self.dim(), |i, j| {
            JetScalar::Const(Complex64::new(self.entries[(i, j)], 0.0))
        })
    }
}

/// Tag of a basis vector relative to a Cartan decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockTag {
    /// Vector of the undecomposed algebra.
    Full,
    /// Isotropy (block-diagonal) part.
    K,
    /// Orthogonal complement.
    M,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisVector {
    pub matrix: DMatrix<f64>,
    pub label: (usize, usize),
    pub tag: BlockTag,
    nonzeros: Vec<(usize, usize, f64)>,
}

impl BasisVector {
    pub fn new(matrix: DMatrix<f64>, label: (usize, usize), tag: BlockTag) -> Self {
        let nonzeros = nonzeros(&matrix);
        BasisVector { matrix, label, tag, nonzeros }
    }

    fn skew(dim: usize, r: usize, s: usize, tag: BlockTag) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(r, s)] = FRAC_1_SQRT_2;
        m[(s, r)] = -FRAC_1_SQRT_2;
        Self::new(m, (r, s), tag)
    }

    fn symmetric(dim: usize, r: usize, s: usize, tag: BlockTag) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(r, s)] = FRAC_1_SQRT_2;
        m[(s, r)] = FRAC_1_SQRT_2;
        Self::new(m, (r, s), tag)
    }

    /// The same direction with its matrix multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        Self::new(&self.matrix * factor, self.label, self.tag)
    }

    pub fn nonzeros(&self) -> &[(usize, usize, f64)] {
        &self.nonzeros
    }
}

fn nonzeros(m: &DMatrix<f64>) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if m[(i, j)] != 0.0 {
                out.push((i, j, m[(i, j)]));
            }
        }
    }
    out
}

/// `{(E_rs - E_sr)/√2 : r < s}`, size `N(N-1)/2`.
pub fn so_basis(dim: usize) -> Vec<BasisVector> {
    assert!(dim >= 2, "so(N) needs N >= 2");
    let mut out = Vec::with_capacity(dim * (dim - 1) / 2);
    for r in 0..dim {
        for s in r + 1..dim {
            out.push(BasisVector::skew(dim, r, s, BlockTag::Full));
        }
    }
    out
}

/// Off-diagonal block directions of the Cartan decomposition, size `m·n`.
pub fn m_basis(m: usize, n: usize, form: Form) -> Vec<BasisVector> {
    assert!(m >= 1 && n >= 1, "m_basis needs m, n >= 1");
    let dim = m + n;
    let mut out = Vec::with_capacity(m * n);
    for j in 0..m {
        for a in m..dim {
            out.push(match form {
                Form::Compact => BasisVector::skew(dim, j, a, BlockTag::M),
                Form::Indefinite => BasisVector::symmetric(dim, j, a, BlockTag::M),
            });
        }
    }
    out
}

/// Basis of `so(m) ⊕ so(n)`.
pub fn k_basis(m: usize, n: usize) -> Vec<BasisVector> {
    block_k_basis(&[m, n])
}

/// Basis of `so(n₁) ⊕ … ⊕ so(n_t)` inside `so(Σ n_i)`.
pub fn block_k_basis(blocks: &[usize]) -> Vec<BasisVector> {
    let dim: usize = blocks.iter().sum();
    let mut out = Vec::new();
    let mut start = 0;
    for &b in blocks {
        for r in start..start + b {
            for s in r + 1..start + b {
                out.push(BasisVector::skew(dim, r, s, BlockTag::K));
            }
        }
        start += b;
    }
    out
}

/// Complement of [`block_k_basis`]: skew directions mixing two different blocks.
pub fn block_m_basis(blocks: &[usize]) -> Vec<BasisVector> {
    let dim: usize = blocks.iter().sum();
    let owner: Vec<usize> = blocks
        .iter()
        .enumerate()
        .flat_map(|(k, &b)| std::iter::repeat_n(k, b))
        .collect();
    let mut out = Vec::new();
    for r in 0..dim {
        for s in r + 1..dim {
            if owner[r] != owner[s] {
                out.push(BasisVector::skew(dim, r, s, BlockTag::M));
            }
        }
    }
    out
}

/// Gram matrix of `basis` under the signed trace form.
pub fn gram(basis: &[BasisVector], form: Form) -> DMatrix<f64> {
    let k = basis.len();
    DMatrix::from_fn(k, k, |i, j| form.inner(&basis[i].matrix, &basis[j].matrix))
}

/// Matrix exponential by scaling and squaring (Padé).
pub fn expm(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.clone().exp()
}

/// Independent per-item seed derived from a run seed (splitmix64 mixing).
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Haar-distributed element of `SO(N)` drawn from `rng`.
pub fn sample_so_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    assert!(dim >= 1);
    if dim == 1 {
        return DMatrix::identity(1, 1);
    }
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// Haar-distributed element of `SO(N)`, deterministic in `seed`.
pub fn sample_so(dim: usize, seed: u64) -> GroupPoint {
    assert!(dim >= 2, "sample_so needs N >= 2");
    let mut rng = rng_from_seed(seed);
    GroupPoint { entries: sample_so_with(dim, &mut rng), signature: Signature::Compact(dim) }
}

/// Random block-diagonal element of `SO(n₁) × … × SO(n_t)`.
pub fn sample_block_diagonal_with<R: Rng + ?Sized>(blocks: &[usize], rng: &mut R) -> DMatrix<f64> {
    let dim: usize = blocks.iter().sum();
    let mut out = DMatrix::zeros(dim, dim);
    let mut start = 0;
    for &b in blocks {
        let q = sample_so_with(b, rng);
        out.view_mut((start, start), (b, b)).copy_from(&q);
        start += b;
    }
    out
}

pub fn sample_block_diagonal(blocks: &[usize], seed: u64) -> GroupPoint {
    let mut rng = rng_from_seed(seed);
    let dim = blocks.iter().sum();
    GroupPoint {
        entries: sample_block_diagonal_with(blocks, &mut rng),
        signature: Signature::Compact(dim),
    }
}

/// `k·exp(a)` with `k ∈ SO(m)×SO(n)` Haar and `a` uniform in the radius box
/// of the indefinite `m`-basis coordinates.
pub fn sample_so_mn(m: usize, n: usize, seed: u64, radius: f64) -> Result<GroupPoint> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::Config(format!("radius must be finite and non-negative, got {radius}")));
    }
    let mut rng = rng_from_seed(seed);
    let k = sample_block_diagonal_with(&[m, n], &mut rng);
    let mut a = DMatrix::zeros(m + n, m + n);
    if radius > 0.0 {
        for p in m_basis(m, n, Form::Indefinite) {
            let c: f64 = rng.random_range(-radius..=radius);
            a += p.matrix * c;
        }
    }
    Ok(GroupPoint { entries: k * expm(&a), signature: Signature::Indefinite { m, n } })
}

/// Dense square matrix over any [`Scalar`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<S> {
    dim: usize,
    data: Vec<S>,
}

impl<S: Clone> SquareMatrix<S> {
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        SquareMatrix { dim, data }
    }

    pub fn from_rows(dim: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: data.len() });
        }
        Ok(SquareMatrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.dim + j]
    }

    pub fn map<T: Clone>(&self, f: impl Fn(&S) -> T) -> SquareMatrix<T> {
        SquareMatrix { dim: self.dim, data: self.data.iter().map(f).collect() }
    }

    pub fn iter(&self) -> impl Iterator<Item = &S> {
        self.data.iter()
    }
}

impl<S: Scalar> SquareMatrix<S> {
    /// `self · Z` for a real sparse `Z`.
    pub fn mul_basis(&self, z: &BasisVector) -> Self {
        let dim = self.dim;
        let mut out: Vec<Option<S>> = vec![None; dim * dim];
        for &(k, j, v) in z.nonzeros() {
            for i in 0..dim {
                let term = self.data[i * dim + k].scale_real(v);
                let slot = &mut out[i * dim + j];
                *slot = Some(match slot.take() {
                    Some(acc) => acc + term,
                    None => term,
                });
            }
        }
        SquareMatrix { dim, data: out.into_iter().map(|s| s.unwrap_or_else(S::zero)).collect() }
    }

    pub fn mul_real(&self, r: &DMatrix<f64>) -> Self {
        let dim = self.dim;
        SquareMatrix::from_fn(dim, |i, j| {
            let mut acc = S::zero();
            for k in 0..dim {
                let v = r[(k, j)];
                if v != 0.0 {
                    acc = acc + self.get(i, k).scale_real(v);
                }
            }
            acc
        })
    }
}

/// `x · exp(t Z)` with jet-valued `t`, exact in the truncated algebra.
///
/// The real constant term `t₀` of `t` is applied through [`expm`]; the
/// nilpotent remainder `ν = t - t₀` through the terminating series
/// `Σ νⁱ Zⁱ / i!`.
pub fn curve_point(x: &GroupPoint, z: &BasisVector, t: &JetScalar) -> SquareMatrix<JetScalar> {
    curve_point_jet(&x.to_jets(), z, t)
}

/// [`curve_point`] for a base point that is already jet-valued.
pub fn curve_point_jet(
    x: &SquareMatrix<JetScalar>,
    z: &BasisVector,
    t: &JetScalar,
) -> SquareMatrix<JetScalar> {
    let t0 = t.base();
    let base = if t0.re != 0.0 { x.mul_real(&expm(&(&z.matrix * t0.re))) } else { x.clone() };
    let nu = t.clone() - JetScalar::Const(Complex64::new(t0.re, 0.0));
    let bound = nu.degree_bound();

    // ν⁰ carries the jet shape of t so that the result is jet-valued.
    let mut nu_pow = nu.scale(Complex64::new(0.0, 0.0)) + JetScalar::one();
    let mut term = base;
    let mut acc: Vec<JetScalar> = term.data.iter().map(|e| e.clone() * nu_pow.clone()).collect();
    for i in 1..=bound {
        nu_pow = nu_pow * nu.clone();
        if nu_pow.is_zero() {
            break;
        }
        term = term.mul_basis(z).map(|e| e.scale_real(1.0 / i as f64));
        for (a, e) in acc.iter_mut().zip(term.data.iter()) {
            if !e.is_zero() {
                *a = a.clone() + e.clone() * nu_pow.clone();
            }
        }
    }
    SquareMatrix { dim: x.dim, data: acc }
}
