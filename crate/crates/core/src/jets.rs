//! Truncated Taylor arithmetic over complex numbers.
//!
//! A [`JetScalar`] is a polynomial in one nilpotent variable `ε` with
//! `ε^(k+1) = 0`. Coefficients may themselves be jets, which gives
//! multivariate truncated arithmetic: the nesting depth of a coefficient is
//! the index of the variable it is a series in. Constants are stored as
//! [`JetScalar::Const`] and broadcast to any nesting shape, so lifted matrix
//! entries cost nothing until a curve variable touches them.
//!
//! Every function evaluated by this crate is generic over [`Scalar`], which
//! is implemented both for plain [`ComplexScalar`] and for [`JetScalar`].

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexScalar = Complex64;

/// Smallest magnitude accepted as the argument of `log` or a non-integer power.
pub const BRANCH_FLOOR: f64 = 1e-6;

/// Arguments whose angle is within this distance of `π` count as on the cut.
pub const BRANCH_ANGLE_MARGIN: f64 = 1e-6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Rejects arguments that are too small or too close to the negative real axis.
pub fn check_branch(z: Complex64) -> Result<()> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::NonFinite);
    }
    let r = z.norm();
    if r < BRANCH_FLOOR {
        return Err(Error::BelowBranchFloor(r));
    }
    if std::f64::consts::PI - z.arg().abs() < BRANCH_ANGLE_MARGIN {
        return Err(Error::BranchCut { re: z.re, im: z.im });
    }
    Ok(())
}

fn finite(z: Complex64) -> Result<Complex64> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::NonFinite)
    }
}

/// Principal logarithm with branch-cut rejection.
pub fn principal_ln(z: Complex64) -> Result<Complex64> {
    check_branch(z)?;
    finite(z.ln())
}

/// Principal power `exp(e * log z)` with branch-cut rejection.
pub fn principal_pow(z: Complex64, e: Complex64) -> Result<Complex64> {
    check_branch(z)?;
    finite((e * z.ln()).exp())
}

/// Returns `Some(k)` when `e` is exactly a non-negative integer.
pub fn as_natural_exponent(e: Complex64) -> Option<u32> {
    if e.im == 0.0 && e.re >= 0.0 && e.re.fract() == 0.0 && e.re <= u32::MAX as f64 {
        Some(e.re as u32)
    } else {
        None
    }
}

/// Scalar ring with the analytic functions needed by expression evaluation.
pub trait Scalar:
    Clone
    + fmt::Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn constant(c: Complex64) -> Self;

    /// Constant term at the deepest nesting level.
    fn base(&self) -> Complex64;

    fn scale(&self, k: Complex64) -> Self;

    fn recip(&self) -> Result<Self>;

    fn ln(&self) -> Result<Self>;

    fn powc(&self, e: Complex64) -> Result<Self>;

    fn is_finite(&self) -> bool;

    fn zero() -> Self {
        Self::constant(ZERO)
    }

    fn one() -> Self {
        Self::constant(ONE)
    }

    fn scale_real(&self, k: f64) -> Self {
        self.scale(Complex64::new(k, 0.0))
    }

    fn powi(&self, k: u32) -> Self {
        let mut acc = Self::one();
        let mut sq = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * sq.clone();
            }
            k >>= 1;
            if k > 0 {
                sq = sq.clone() * sq;
            }
        }
        acc
    }
}

impl Scalar for Complex64 {
    fn constant(c: Complex64) -> Self {
        c
    }

    fn base(&self) -> Complex64 {
        *self
    }

    fn scale(&self, k: Complex64) -> Self {
        self * k
    }

    fn recip(&self) -> Result<Self> {
        if *self == ZERO {
            return Err(Error::DivisionByZero);
        }
        finite(self.inv())
    }

    fn ln(&self) -> Result<Self> {
        principal_ln(*self)
    }

    fn powc(&self, e: Complex64) -> Result<Self> {
        principal_pow(*self, e)
    }

    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Truncated Taylor series, possibly nested.
///
/// `Series(c)` holds `c.len() = order + 1` coefficients in the variable of
/// its nesting level. `Const` is a constant in every variable.
#[derive(Clone, Debug, PartialEq)]
pub enum JetScalar {
    Const(Complex64),
    Series(Vec<JetScalar>),
}

impl JetScalar {
    /// `(c, 0, …, 0)` with `order + 1` coefficients.
    pub fn lift(c: Complex64, order: usize) -> Self {
        assert!(order >= 1, "jet order must be at least 1");
        let mut coeffs = vec![JetScalar::Const(ZERO); order + 1];
        coeffs[0] = JetScalar::Const(c);
        JetScalar::Series(coeffs)
    }

    /// `(c, 1, 0, …, 0)`: the curve parameter shifted by `c`.
    pub fn variable(c: Complex64, order: usize) -> Self {
        let mut v = Self::lift(c, order);
        if let JetScalar::Series(ref mut coeffs) = v {
            coeffs[1] = JetScalar::Const(ONE);
        }
        v
    }

    /// A fresh nilpotent variable living at nesting level `depth`
    /// (0 = outermost), constant in all outer variables.
    pub fn variable_nested(depth: usize, order: usize) -> Self {
        let mut v = Self::variable(ZERO, order);
        for _ in 0..depth {
            let mut coeffs = vec![JetScalar::Const(ZERO); order + 1];
            coeffs[0] = v;
            v = JetScalar::Series(coeffs);
        }
        v
    }

    pub fn from_coeffs(coeffs: Vec<JetScalar>) -> Self {
        assert!(coeffs.len() >= 2, "a series needs at least two coefficients");
        JetScalar::Series(coeffs)
    }

    pub fn from_complex_coeffs(coeffs: &[Complex64]) -> Self {
        Self::from_coeffs(coeffs.iter().map(|&c| JetScalar::Const(c)).collect())
    }

    /// Truncation order of the outermost level, `None` for a constant.
    pub fn order(&self) -> Option<usize> {
        match self {
            JetScalar::Const(_) => None,
            JetScalar::Series(c) => Some(c.len() - 1),
        }
    }

    /// Coefficient `i` of the outermost variable.
    pub fn coeff(&self, i: usize) -> JetScalar {
        match self {
            JetScalar::Const(c) => JetScalar::Const(if i == 0 { *c } else { ZERO }),
            JetScalar::Series(cs) => cs.get(i).cloned().unwrap_or(JetScalar::Const(ZERO)),
        }
    }

    /// Coefficient `i` of the variable at nesting level `depth`, keeping the
    /// dependence on all other variables.
    pub fn coeff_at_depth(&self, depth: usize, i: usize) -> JetScalar {
        if depth == 0 {
            return self.coeff(i);
        }
        match self {
            JetScalar::Const(c) => JetScalar::Const(if i == 0 { *c } else { ZERO }),
            JetScalar::Series(cs) => {
                JetScalar::Series(cs.iter().map(|c| c.coeff_at_depth(depth - 1, i)).collect())
            }
        }
    }

    /// Coefficient as a plain complex number; panics if it is still a series.
    pub fn coeff_complex(&self, i: usize) -> Complex64 {
        match self.coeff(i) {
            JetScalar::Const(c) => c,
            s @ JetScalar::Series(_) => s.try_constant().expect("coefficient is a nested series"),
        }
    }

    /// Collapses a series whose non-constant coefficients are all zero.
    fn try_constant(&self) -> Option<Complex64> {
        match self {
            JetScalar::Const(c) => Some(*c),
            JetScalar::Series(cs) => {
                if cs[1..].iter().all(JetScalar::is_zero) {
                    cs[0].try_constant()
                } else {
                    None
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            JetScalar::Const(c) => *c == ZERO,
            JetScalar::Series(cs) => cs.iter().all(JetScalar::is_zero),
        }
    }

    /// Upper bound on the total degree: powers of a nilpotent jet above
    /// this vanish.
    pub fn degree_bound(&self) -> usize {
        match self {
            JetScalar::Const(_) => 0,
            JetScalar::Series(cs) => {
                cs.len() - 1 + cs.iter().map(JetScalar::degree_bound).max().unwrap_or(0)
            }
        }
    }

    pub fn try_add(&self, rhs: &JetScalar) -> Result<JetScalar> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn try_sub(&self, rhs: &JetScalar) -> Result<JetScalar> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &JetScalar, op: fn(Complex64, Complex64) -> Complex64) -> Result<JetScalar> {
        use JetScalar::*;
        Ok(match (self, rhs) {
            (Const(a), Const(b)) => Const(op(*a, *b)),
            (Const(_), Series(bs)) => {
                let mut out = Vec::with_capacity(bs.len());
                out.push(self.zip_with(&bs[0], op)?);
                for b in &bs[1..] {
                    out.push(Const(ZERO).zip_with(b, op)?);
                }
                Series(out)
            }
            (Series(as_), Const(_)) => {
                let mut out = Vec::with_capacity(as_.len());
                out.push(as_[0].zip_with(rhs, op)?);
                for a in &as_[1..] {
                    out.push(a.zip_with(&Const(ZERO), op)?);
                }
                Series(out)
            }
            (Series(as_), Series(bs)) => {
                if as_.len() != bs.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "orders {} and {}",
                        as_.len() - 1,
                        bs.len() - 1
                    )));
                }
                Series(
                    as_.iter()
                        .zip(bs)
                        .map(|(a, b)| a.zip_with(b, op))
                        .collect::<Result<_>>()?,
                )
            }
        })
    }

    /// Cauchy product truncated at the common order.
    pub fn try_mul(&self, rhs: &JetScalar) -> Result<JetScalar> {
        use JetScalar::*;
        Ok(match (self, rhs) {
            (Const(a), Const(b)) => Const(a * b),
            (Const(a), s @ Series(_)) | (s @ Series(_), Const(a)) => s.scale(*a),
            (Series(as_), Series(bs)) => {
                if as_.len() != bs.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "orders {} and {}",
                        as_.len() - 1,
                        bs.len() - 1
                    )));
                }
                let len = as_.len();
                let mut out = Vec::with_capacity(len);
                for i in 0..len {
                    let mut acc = Const(ZERO);
                    for j in 0..=i {
                        if as_[j].is_zero() || bs[i - j].is_zero() {
                            continue;
                        }
                        acc = acc.try_add(&as_[j].try_mul(&bs[i - j])?)?;
                    }
                    out.push(acc);
                }
                Series(out)
            }
        })
    }

    pub fn try_div(&self, rhs: &JetScalar) -> Result<JetScalar> {
        self.try_mul(&rhs.recip()?)
    }

    /// Multiplies every outer coefficient by a value of the next level.
    fn scale_by_inner(coeffs: &[JetScalar], k: &JetScalar) -> Result<JetScalar> {
        Ok(JetScalar::Series(
            coeffs.iter().map(|c| c.try_mul(k)).collect::<Result<_>>()?,
        ))
    }

    /// Splits `a0 + h` into the constant coefficient and `q = h / a0`.
    fn split_normalized(coeffs: &[JetScalar]) -> Result<(JetScalar, JetScalar, JetScalar)> {
        let a0 = coeffs[0].clone();
        let inv = a0.recip()?;
        let mut h = coeffs.to_vec();
        h[0] = JetScalar::Const(ZERO);
        let q = Self::scale_by_inner(&h, &inv)?;
        Ok((a0, inv, q))
    }

    /// `Σ_{i=0}^{k} w_i q^i` for a nilpotent `q` of order `k`.
    fn power_series(q: &JetScalar, weights: &[Complex64]) -> Result<JetScalar> {
        let len = match q {
            JetScalar::Series(c) => c.len(),
            JetScalar::Const(_) => 1,
        };
        let mut acc = JetScalar::Const(weights[0]);
        let mut qi = JetScalar::Const(ONE);
        for &w in weights.iter().take(len).skip(1) {
            qi = qi.try_mul(q)?;
            if w != ZERO {
                acc = acc.try_add(&qi.scale(w))?;
            }
        }
        Ok(acc)
    }

    /// Lifts an inner-level value to a constant series at the outer level.
    fn embed(inner: JetScalar, len: usize) -> JetScalar {
        match inner {
            JetScalar::Const(_) => inner,
            s => {
                let mut coeffs = vec![JetScalar::Const(ZERO); len];
                coeffs[0] = s;
                JetScalar::Series(coeffs)
            }
        }
    }

    fn times_inner(self, inner: &JetScalar, len: usize) -> Result<JetScalar> {
        match self {
            JetScalar::Const(c) => Ok(Self::embed(inner.scale(c), len)),
            JetScalar::Series(cs) => Self::scale_by_inner(&cs, inner),
        }
    }
}

impl Scalar for JetScalar {
    fn constant(c: Complex64) -> Self {
        JetScalar::Const(c)
    }

    fn base(&self) -> Complex64 {
        match self {
            JetScalar::Const(c) => *c,
            JetScalar::Series(cs) => cs[0].base(),
        }
    }

    fn scale(&self, k: Complex64) -> Self {
        match self {
            JetScalar::Const(c) => JetScalar::Const(c * k),
            JetScalar::Series(cs) => JetScalar::Series(cs.iter().map(|c| c.scale(k)).collect()),
        }
    }

    fn recip(&self) -> Result<Self> {
        match self {
            JetScalar::Const(c) => Ok(JetScalar::Const(c.recip()?)),
            JetScalar::Series(cs) => {
                let (_, inv, q) = Self::split_normalized(cs)?;
                let weights: Vec<Complex64> = (0..cs.len())
                    .map(|i| if i % 2 == 0 { ONE } else { -ONE })
                    .collect();
                Self::power_series(&q, &weights)?.times_inner(&inv, cs.len())
            }
        }
    }

    fn ln(&self) -> Result<Self> {
        match self {
            JetScalar::Const(c) => Ok(JetScalar::Const(principal_ln(*c)?)),
            JetScalar::Series(cs) => {
                let (a0, _, q) = Self::split_normalized(cs)?;
                let head = a0.ln()?;
                let mut weights = vec![ZERO; cs.len()];
                for (i, w) in weights.iter_mut().enumerate().skip(1) {
                    let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
                    *w = Complex64::new(sign / i as f64, 0.0);
                }
                let tail = Self::power_series(&q, &weights)?;
                tail.try_add(&Self::embed(head, cs.len()))
            }
        }
    }

    fn powc(&self, e: Complex64) -> Result<Self> {
        match self {
            JetScalar::Const(c) => Ok(JetScalar::Const(principal_pow(*c, e)?)),
            JetScalar::Series(cs) => {
                let (a0, _, q) = Self::split_normalized(cs)?;
                let head = a0.powc(e)?;
                let mut weights = Vec::with_capacity(cs.len());
                let mut binom = ONE;
                for i in 0..cs.len() {
                    weights.push(binom);
                    binom = binom * (e - i as f64) / (i as f64 + 1.0);
                }
                Self::power_series(&q, &weights)?.times_inner(&head, cs.len())
            }
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            JetScalar::Const(c) => c.re.is_finite() && c.im.is_finite(),
            JetScalar::Series(cs) => cs.iter().all(Scalar::is_finite),
        }
    }
}

impl Add for JetScalar {
    type Output = JetScalar;

    fn add(self, rhs: JetScalar) -> JetScalar {
        self.try_add(&rhs).expect("jet addition")
    }
}

impl Sub for JetScalar {
    type Output = JetScalar;

    fn sub(self, rhs: JetScalar) -> JetScalar {
        self.try_sub(&rhs).expect("jet subtraction")
    }
}

impl Mul for JetScalar {
    type Output = JetScalar;

    fn mul(self, rhs: JetScalar) -> JetScalar {
        self.try_mul(&rhs).expect("jet multiplication")
    }
}

impl Neg for JetScalar {
    type Output = JetScalar;

    fn neg(self) -> JetScalar {
        self.scale(-ONE)
    }
}

impl From<Complex64> for JetScalar {
    fn from(c: Complex64) -> Self {
        JetScalar::Const(c)
    }
}

impl fmt::Display for JetScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JetScalar::Const(c) => write!(f, "{c}"),
            JetScalar::Series(cs) => {
                write!(f, "(")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// The analytic functions exposed for direct jet composition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Analytic {
    Log,
    Sqrt,
    Pow(Complex64),
}

/// Applies the principal branch of `f` to `a`.
pub fn analytic<S: Scalar>(f: Analytic, a: &S) -> Result<S> {
    match f {
        Analytic::Log => a.ln(),
        Analytic::Sqrt => a.powc(Complex64::new(0.5, 0.0)),
        Analytic::Pow(e) => a.powc(e),
    }
}
