//! Exact calculus on combinations of `T(a,b) = φ^a·(log φ)^b` for an
//! eigenfunction `φ` with eigenvalues `(λ, μ)`.
//!
//! For `f` composed with `φ`, `τ(f∘φ) = λφ·f'(φ) + μφ²·f''(φ)`. Applied to
//! `s^a·log^b s` this gives
//!
//! ```text
//! τ T(a,b) = [aλ + a(a-1)μ]·T(a,b) + b[λ + (2a-1)μ]·T(a,b-1) + b(b-1)μ·T(a,b-2)
//! ```
//!
//! All coefficients are Gaussian rationals, so a zero result is an exact zero.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::functions::{ExprNode, PHarmonicCase};
use crate::jets::Scalar;

/// Complex number with exact rational real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GaussianRational {
    pub re: BigRational,
    pub im: BigRational,
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl GaussianRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussianRational { re, im }
    }

    pub fn from_integers(re: i64, im: i64) -> Self {
        GaussianRational::new(rat(re), rat(im))
    }

    pub fn real(re: BigRational) -> Self {
        GaussianRational::new(re, BigRational::zero())
    }

    /// Exact conversion of a finite double-precision pair.
    pub fn from_complex(z: Complex64) -> Result<Self> {
        let conv = |v: f64| BigRational::from_float(v).ok_or(Error::NonFinite);
        Ok(GaussianRational::new(conv(z.re)?, conv(z.im)?))
    }

    pub fn zero() -> Self {
        GaussianRational::new(BigRational::zero(), BigRational::zero())
    }

    pub fn one() -> Self {
        GaussianRational::real(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        let d = rhs.norm_sqr();
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(GaussianRational::new(
            (&self.re * &rhs.re + &self.im * &rhs.im) / &d,
            (&self.im * &rhs.re - &self.re * &rhs.im) / &d,
        ))
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        GaussianRational::new(&self.re * k, &self.im * k)
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

impl Add for GaussianRational {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        GaussianRational::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for GaussianRational {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        GaussianRational::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Mul for GaussianRational {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        GaussianRational::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
        )
    }
}

impl Neg for GaussianRational {
    type Output = Self;
    fn neg(self) -> Self {
        GaussianRational::new(-self.re, -self.im)
    }
}

impl From<i64> for GaussianRational {
    fn from(n: i64) -> Self {
        GaussianRational::from_integers(n, 0)
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", self.re),
            (true, false) => write!(f, "{}i", self.im),
            (false, false) => {
                let sign = if self.im.is_negative() { '-' } else { '+' };
                write!(f, "({}{}{}i)", self.re, sign, self.im.abs())
            }
        }
    }
}

/// One term `coeff·φ^a·(log φ)^b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymTerm {
    pub coeff: GaussianRational,
    pub a: BigRational,
    pub b: u32,
}

/// Finite combination of terms keyed by `(a, b)`; zero coefficients are dropped.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymExpr {
    terms: BTreeMap<(BigRational, u32), GaussianRational>,
}

impl SymExpr {
    pub fn zero() -> Self {
        SymExpr::default()
    }

    /// `coeff·T(a,b)`.
    pub fn term(coeff: GaussianRational, a: BigRational, b: u32) -> Self {
        let mut e = SymExpr::zero();
        e.add_term(coeff, a, b);
        e
    }

    /// `T(a,b)` with unit coefficient.
    pub fn basis(a: BigRational, b: u32) -> Self {
        SymExpr::term(GaussianRational::one(), a, b)
    }

    pub fn add_term(&mut self, coeff: GaussianRational, a: BigRational, b: u32) {
        if coeff.is_zero() {
            return;
        }
        let key = (a, b);
        let merged = match self.terms.remove(&key) {
            Some(c) => c + coeff,
            None => coeff,
        };
        if !merged.is_zero() {
            self.terms.insert(key, merged);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, a: &BigRational, b: u32) -> GaussianRational {
        self.terms.get(&(a.clone(), b)).cloned().unwrap_or_else(GaussianRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = SymTerm> + '_ {
        self.terms.iter().map(|((a, b), c)| SymTerm { coeff: c.clone(), a: a.clone(), b: *b })
    }

    pub fn scale(&self, k: &GaussianRational) -> SymExpr {
        let mut out = SymExpr::zero();
        for ((a, b), c) in &self.terms {
            out.add_term(c.clone() * k.clone(), a.clone(), *b);
        }
        out
    }
}

impl Add for SymExpr {
    type Output = SymExpr;
    fn add(mut self, rhs: SymExpr) -> SymExpr {
        for ((a, b), c) in rhs.terms {
            self.add_term(c, a, b);
        }
        self
    }
}

impl fmt::Display for SymExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, t) in self.terms().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}·T({},{})", t.coeff, t.a, t.b)?;
        }
        Ok(())
    }
}

/// Eigenvalues `(λ, μ)` of the underlying function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EigenParams {
    pub lambda: GaussianRational,
    pub mu: GaussianRational,
}

impl EigenParams {
    pub fn new(lambda: GaussianRational, mu: GaussianRational) -> Self {
        EigenParams { lambda, mu }
    }

    pub fn from_integers(lambda: i64, mu: i64) -> Self {
        EigenParams::new(lambda.into(), mu.into())
    }

    /// Parameters of the dual function: `(-λ, -μ)`.
    pub fn negated(&self) -> Self {
        EigenParams::new(-self.lambda.clone(), -self.mu.clone())
    }

    pub fn case(&self) -> Result<PHarmonicCase> {
        match (self.lambda.is_zero(), self.mu.is_zero()) {
            (true, _) => Err(Error::UnsupportedCase {
                lambda: self.lambda.to_string(),
                mu: self.mu.to_string(),
            }),
            (false, true) => Ok(PHarmonicCase::LogPower),
            (false, false) if self.lambda == self.mu => Ok(PHarmonicCase::EqualEigenvalues),
            (false, false) => Ok(PHarmonicCase::General),
        }
    }

    /// `1 - λ/μ`, required to be real.
    pub fn general_exponent(&self) -> Result<BigRational> {
        let q = self.lambda.checked_div(&self.mu)?;
        if !q.is_real() {
            return Err(Error::NonRationalExponent);
        }
        Ok(BigRational::one() - q.re)
    }
}

/// Image of `e` under `τ`.
pub fn sym_tau(e: &SymExpr, params: &EigenParams) -> SymExpr {
    let (l, m) = (&params.lambda, &params.mu);
    let one = BigRational::one();
    let two = rat(2);
    let mut out = SymExpr::zero();
    for ((a, b), c) in &e.terms {
        let am1 = a - &one;
        // aλ + a(a-1)μ
        let diag = l.scale(a) + m.scale(&(a * &am1));
        out.add_term(c.clone() * diag, a.clone(), *b);
        if *b >= 1 {
            let bq = rat(*b as i64);
            // b[λ + (2a-1)μ]
            let lower1 = (l.clone() + m.scale(&(&two * a - &one))).scale(&bq);
            out.add_term(c.clone() * lower1, a.clone(), b - 1);
        }
        if *b >= 2 {
            let k = rat(*b as i64 * (*b as i64 - 1));
            out.add_term(c.clone() * m.scale(&k), a.clone(), b - 2);
        }
    }
    out
}

/// `k`-fold application of [`sym_tau`].
pub fn sym_tau_iter(e: &SymExpr, k: usize, params: &EigenParams) -> SymExpr {
    let mut out = e.clone();
    for _ in 0..k {
        if out.is_zero() {
            break;
        }
        out = sym_tau(&out, params);
    }
    out
}

/// The three-case p-harmonic combination.
pub fn sym_build_phi_p(
    params: &EigenParams,
    p: u32,
    c1: &GaussianRational,
    c2: &GaussianRational,
) -> Result<SymExpr> {
    if p == 0 {
        return Err(Error::Config("p must be at least 1".into()));
    }
    let zero = BigRational::zero();
    Ok(match params.case()? {
        PHarmonicCase::LogPower => SymExpr::term(c1.clone(), zero, p - 1),
        PHarmonicCase::EqualEigenvalues => {
            SymExpr::term(c1.clone(), zero.clone(), 2 * p - 1) + SymExpr::term(c2.clone(), zero, 2 * p - 2)
        }
        PHarmonicCase::General => {
            let e = params.general_exponent()?;
            SymExpr::term(c1.clone(), e, p - 1) + SymExpr::term(c2.clone(), zero, p - 1)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub p_harmonic: bool,
    pub proper: bool,
    pub tau_pm1: SymExpr,
}

/// Exact check that `τ^p(Φ_p) = 0` and `τ^(p-1)(Φ_p) ≠ 0`.
pub fn sym_verify_p_harmonic(
    params: &EigenParams,
    p: u32,
    c1: &GaussianRational,
    c2: &GaussianRational,
) -> Result<Verdict> {
    let phi = sym_build_phi_p(params, p, c1, c2)?;
    let tau_pm1 = sym_tau_iter(&phi, p as usize - 1, params);
    let tau_p = sym_tau(&tau_pm1, params);
    Ok(Verdict { p_harmonic: tau_p.is_zero(), proper: !tau_pm1.is_zero(), tau_pm1 })
}

/// Verdict over all coefficient pairs, derived by linearity from `(1,0)` and `(0,1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientVerdict {
    /// `τ^p(Φ_p) = 0` for every `(c₁, c₂)`.
    pub p_harmonic_all: bool,
    /// `τ^(p-1)(Φ_p) ≠ 0` outside a proper subspace of coefficient pairs.
    pub proper_generic: bool,
    pub first: Verdict,
    pub second: Verdict,
}

pub fn sym_verify_all_coefficients(params: &EigenParams, p: u32) -> Result<CoefficientVerdict> {
    let first = sym_verify_p_harmonic(params, p, &GaussianRational::one(), &GaussianRational::zero())?;
    let second = sym_verify_p_harmonic(params, p, &GaussianRational::zero(), &GaussianRational::one())?;
    Ok(CoefficientVerdict {
        p_harmonic_all: first.p_harmonic && second.p_harmonic,
        proper_generic: first.proper || second.proper,
        first,
        second,
    })
}

fn as_natural(a: &BigRational) -> Option<u32> {
    if a.is_integer() && !a.is_negative() {
        a.to_integer().to_u32()
    } else {
        None
    }
}

fn to_f64(a: &BigRational) -> f64 {
    a.to_f64().unwrap_or(f64::NAN)
}

/// `Σ coeff·v^a·log(v)^b` with principal branches.
pub fn sym_evaluate<S: Scalar>(e: &SymExpr, v: &S) -> Result<S> {
    let mut log_v: Option<S> = None;
    let mut acc: Option<S> = None;
    for t in e.terms() {
        let mut term = match as_natural(&t.a) {
            Some(k) => v.powi(k),
            None => v.powc(Complex64::new(to_f64(&t.a), 0.0))?,
        };
        if t.b > 0 {
            if log_v.is_none() {
                log_v = Some(v.ln()?);
            }
            term = term * log_v.as_ref().expect("set above").powi(t.b);
        }
        let term = term.scale(t.coeff.to_complex());
        acc = Some(match acc {
            Some(a) => a + term,
            None => term,
        });
    }
    Ok(acc.unwrap_or_else(S::zero))
}

/// The expression tree of `e` with `φ` substituted.
pub fn compose(e: &SymExpr, phi: &ExprNode) -> ExprNode {
    let parts = e
        .terms()
        .map(|t| {
            let mut factors = vec![ExprNode::Const(t.coeff.to_complex())];
            if !t.a.is_zero() {
                factors.push(phi.clone().pow(Complex64::new(to_f64(&t.a), 0.0)));
            }
            match t.b {
                0 => {}
                1 => factors.push(phi.clone().log()),
                b => factors.push(phi.clone().log().pow(Complex64::new(b as f64, 0.0))),
            }
            ExprNode::Product(factors)
        })
        .collect();
    ExprNode::Sum(parts)
}
