//! Exact arithmetic over the Gaussian rationals ℚ(i): scalars, polynomials in
//! `z` and reduced rational functions.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num::bigint::BigInt;
use num::complex::Complex64;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::numeric::roots::polynomial_roots;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot parse exact number `{0}`")]
    Parse(String),
}

/// `re + i·im` with arbitrary-precision rational parts.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct GaussRat {
    pub re: BigRational,
    pub im: BigRational,
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn rat_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // huge numerators/denominators: scale down before converting
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

fn parse_rat(s: &str) -> Result<BigRational, ExactError> {
    let s = s.trim();
    let err = || ExactError::Parse(s.to_string());
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(ExactError::ZeroDenominator);
        }
        return Ok(BigRational::new(n, d));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Ok(BigRational::from_integer(n));
    }
    parse_decimal(s).ok_or_else(err)
}

/// Exact value of a decimal literal such as `-1.25e-3`.
fn parse_decimal(s: &str) -> Option<BigRational> {
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(k) => (&s[..k], s[k + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if frac.contains(['+', '-']) || (int.is_empty() && frac.is_empty()) {
        return None;
    }
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    let shift = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let p = num::pow(ten, shift.unsigned_abs() as usize);
    Some(if shift >= 0 { BigRational::from_integer(digits * p) } else { BigRational::new(digits, p) })
}

/// Exact rational value of a finite double.
pub fn rat_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

impl GaussRat {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussRat { re, im }
    }

    pub fn from_int(re: i64, im: i64) -> Self {
        GaussRat::new(rat(re), rat(im))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        GaussRat::new(BigRational::new(num.into(), den.into()), BigRational::zero())
    }

    pub fn i() -> Self {
        GaussRat::from_int(0, 1)
    }

    /// Parse a real exact number (`"3"`, `"-5/32"`, `"0.25"`).
    pub fn parse_real(s: &str) -> Result<Self, ExactError> {
        Ok(GaussRat::new(parse_rat(s)?, BigRational::zero()))
    }

    pub fn from_parts_str(re: &str, im: &str) -> Result<Self, ExactError> {
        Ok(GaussRat::new(parse_rat(re)?, parse_rat(im)?))
    }

    pub fn from_f64_pair(re: f64, im: f64) -> Option<Self> {
        Some(GaussRat::new(rat_from_f64(re)?, rat_from_f64(im)?))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussRat::new(self.re.clone(), -self.im.clone())
    }

    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn inv(&self) -> Result<Self, ExactError> {
        if self.is_zero() {
            return Err(ExactError::DivisionByZero);
        }
        let n = self.norm_sqr();
        Ok(GaussRat::new(&self.re / &n, -(&self.im / &n)))
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(rat_to_f64(&self.re), rat_to_f64(&self.im))
    }
}

impl Zero for GaussRat {
    fn zero() -> Self {
        GaussRat::new(BigRational::zero(), BigRational::zero())
    }
    fn is_zero(&self) -> bool {
        GaussRat::is_zero(self)
    }
}

impl One for GaussRat {
    fn one() -> Self {
        GaussRat::new(BigRational::one(), BigRational::zero())
    }
}

impl Add for &GaussRat {
    type Output = GaussRat;
    fn add(self, o: &GaussRat) -> GaussRat {
        GaussRat::new(&self.re + &o.re, &self.im + &o.im)
    }
}

impl Add for GaussRat {
    type Output = GaussRat;
    fn add(self, o: GaussRat) -> GaussRat {
        &self + &o
    }
}

impl Sub for &GaussRat {
    type Output = GaussRat;
    fn sub(self, o: &GaussRat) -> GaussRat {
        GaussRat::new(&self.re - &o.re, &self.im - &o.im)
    }
}

impl Mul for &GaussRat {
    type Output = GaussRat;
    fn mul(self, o: &GaussRat) -> GaussRat {
        GaussRat::new(&self.re * &o.re - &self.im * &o.im, &self.re * &o.im + &self.im * &o.re)
    }
}

impl Mul for GaussRat {
    type Output = GaussRat;
    fn mul(self, o: GaussRat) -> GaussRat {
        &self * &o
    }
}

impl Neg for &GaussRat {
    type Output = GaussRat;
    fn neg(self) -> GaussRat {
        GaussRat::new(-self.re.clone(), -self.im.clone())
    }
}

impl fmt::Display for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "{}i", self.im)
        } else {
            let sign = if self.im.is_negative() { "-" } else { "+" };
            write!(f, "({}{}{}i)", self.re, sign, self.im.abs())
        }
    }
}

/// Polynomial in `z`, coefficients low to high, no trailing zeros.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Poly {
    c: Vec<GaussRat>,
}

impl Poly {
    pub fn new(mut c: Vec<GaussRat>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        Poly { c }
    }

    pub fn zero() -> Self {
        Poly { c: vec![] }
    }

    pub fn constant(a: GaussRat) -> Self {
        Poly::new(vec![a])
    }

    pub fn one() -> Self {
        Poly::constant(GaussRat::one())
    }

    /// The monomial `z`.
    pub fn z() -> Self {
        Poly::new(vec![GaussRat::zero(), GaussRat::one()])
    }

    /// Integer coefficients, low to high.
    pub fn from_ints(c: &[i64]) -> Self {
        Poly::new(c.iter().map(|&x| GaussRat::from_int(x, 0)).collect())
    }

    pub fn coeffs(&self) -> &[GaussRat] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    pub fn lead(&self) -> GaussRat {
        self.c.last().cloned().unwrap_or_else(GaussRat::zero)
    }

    pub fn coeff(&self, k: usize) -> GaussRat {
        self.c.get(k).cloned().unwrap_or_else(GaussRat::zero)
    }

    pub fn scale(&self, a: &GaussRat) -> Poly {
        Poly::new(self.c.iter().map(|x| x * a).collect())
    }

    pub fn monic(&self) -> Poly {
        if self.is_zero() {
            return self.clone();
        }
        let inv = self.lead().inv().expect("nonzero lead");
        self.scale(&inv)
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, x)| x * &GaussRat::from_int(k as i64, 0))
                .collect(),
        )
    }

    /// Euclidean division over the field ℚ(i).
    pub fn div_rem(&self, d: &Poly) -> Result<(Poly, Poly), ExactError> {
        let dd = d.degree().ok_or(ExactError::DivisionByZero)?;
        let inv = d.lead().inv()?;
        let mut r = self.c.clone();
        let Some(nd) = self.degree() else {
            return Ok((Poly::zero(), Poly::zero()));
        };
        if nd < dd {
            return Ok((Poly::zero(), self.clone()));
        }
        let mut q = vec![GaussRat::zero(); nd - dd + 1];
        for k in (0..=nd - dd).rev() {
            let coef = &r[k + dd] * &inv;
            if coef.is_zero() {
                continue;
            }
            for (j, dj) in d.c.iter().enumerate() {
                r[k + j] = &r[k + j] - &(&coef * dj);
            }
            q[k] = coef;
        }
        r.truncate(dd);
        Ok((Poly::new(q), Poly::new(r)))
    }

    /// Monic gcd (zero if both are zero).
    pub fn gcd(a: &Poly, b: &Poly) -> Poly {
        if a.is_zero() || b.is_zero() {
            return if a.is_zero() { b.monic() } else { a.monic() };
        }
        if a.degree() == Some(0) || b.degree() == Some(0) {
            return Poly::one();
        }
        let (mut x, mut y) = (a.monic(), b.monic());
        while !y.is_zero() {
            let (_, r) = x.div_rem(&y).expect("nonzero divisor");
            x = y;
            y = r.monic();
        }
        x
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.c.iter().rev().fold(Complex64::default(), |acc, a| acc * z + a.to_c64())
    }

    pub fn eval_exact(&self, z: &GaussRat) -> GaussRat {
        self.c.iter().rev().fold(GaussRat::zero(), |acc, a| &(&acc * z) + a)
    }

    pub fn to_c64(&self) -> Vec<Complex64> {
        self.c.iter().map(|a| a.to_c64()).collect()
    }

    /// Square-free decomposition: `self = lead · Π f_k^k`, returned as
    /// `(f_k, k)` pairs with monic, pairwise coprime, square-free `f_k`.
    pub fn square_free(&self) -> Vec<(Poly, u32)> {
        let mut out = Vec::new();
        if self.degree().unwrap_or(0) == 0 {
            return out;
        }
        // Yun's algorithm (characteristic zero)
        let f = self.monic();
        let fp = f.derivative();
        let a0 = Poly::gcd(&f, &fp);
        let mut b = f.div_rem(&a0).expect("gcd divides").0;
        let mut c = fp.div_rem(&a0).expect("gcd divides").0;
        let mut d = &c - &b.derivative();
        let mut k = 1;
        while b.degree().unwrap_or(0) > 0 {
            let a = Poly::gcd(&b, &d);
            if a.degree().unwrap_or(0) > 0 {
                out.push((a.clone(), k));
            }
            b = b.div_rem(&a).expect("gcd divides").0;
            c = d.div_rem(&a).expect("gcd divides").0;
            d = &c - &b.derivative();
            k += 1;
        }
        out
    }

    /// Numeric roots with exact multiplicities (via square-free decomposition).
    pub fn roots(&self) -> Vec<(Complex64, u32)> {
        let mut out = Vec::new();
        for (f, k) in self.square_free() {
            for r in polynomial_roots(&f.to_c64()) {
                out.push((r, k));
            }
        }
        out.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
        out
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        Poly::new((0..n).map(|k| &self.coeff(k) + &o.coeff(k)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        Poly::new((0..n).map(|k| &self.coeff(k) - &o.coeff(k)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut c = vec![GaussRat::zero(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                c[i + j] = &c[i + j] + &(a * b);
            }
        }
        Poly::new(c)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::new(self.c.iter().map(|x| -x).collect())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.c.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, a) in self.c.iter().enumerate().rev() {
            if a.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{a}·z")?,
                _ => write!(f, "{a}·z^{k}")?,
            }
        }
        Ok(())
    }
}

/// Reduced quotient `num/den` with monic denominator.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct RationalFunction {
    num: Poly,
    den: Poly,
}

impl RationalFunction {
    pub fn new(num: Poly, den: Poly) -> Result<Self, ExactError> {
        if den.is_zero() {
            return Err(ExactError::ZeroDenominator);
        }
        if num.is_zero() {
            return Ok(Self::zero());
        }
        let g = Poly::gcd(&num, &den);
        let (mut n, _) = num.div_rem(&g)?;
        let (mut d, _) = den.div_rem(&g)?;
        let lead_inv = d.lead().inv()?;
        n = n.scale(&lead_inv);
        d = d.scale(&lead_inv);
        Ok(RationalFunction { num: n, den: d })
    }

    /// `num/den` for coprime inputs: only the leading coefficient of `den`
    /// is normalized.
    fn normalized(num: Poly, den: Poly) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        let inv = den.lead().inv().expect("nonzero denominator");
        if inv.is_one() {
            return RationalFunction { num, den };
        }
        RationalFunction { num: num.scale(&inv), den: den.scale(&inv) }
    }

    pub fn zero() -> Self {
        RationalFunction { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Self {
        Self::constant(GaussRat::one())
    }

    pub fn constant(a: GaussRat) -> Self {
        RationalFunction { num: Poly::constant(a), den: Poly::one() }
    }

    pub fn from_poly(p: Poly) -> Self {
        RationalFunction { num: p, den: Poly::one() }
    }

    pub fn z() -> Self {
        Self::from_poly(Poly::z())
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_constant(&self) -> bool {
        self.num.degree().unwrap_or(0) == 0 && self.den.degree() == Some(0)
    }

    pub fn inv(&self) -> Result<Self, ExactError> {
        if self.is_zero() {
            return Err(ExactError::DivisionByZero);
        }
        RationalFunction::new(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, o: &RationalFunction) -> Result<Self, ExactError> {
        Ok(self * &o.inv()?)
    }

    pub fn scale(&self, a: &GaussRat) -> Self {
        if a.is_zero() {
            return Self::zero();
        }
        RationalFunction { num: self.num.scale(a), den: self.den.clone() }
    }

    pub fn pow(&self, e: u32) -> Self {
        RationalFunction { num: self.num.pow(e), den: self.den.pow(e) }
    }

    pub fn derivative(&self) -> Self {
        let n = &(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative());
        let d = &self.den * &self.den;
        RationalFunction::new(n, d).expect("nonzero denominator")
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.num.eval(z) / self.den.eval(z)
    }

    /// Order of the pole at ∞ (`deg num − deg den`, may be ≤ 0).
    pub fn degree_at_infinity(&self) -> i64 {
        match self.num.degree() {
            None => i64::MIN,
            Some(d) => d as i64 - self.den.degree().unwrap_or(0) as i64,
        }
    }

    /// Leading coefficient of the expansion at ∞.
    pub fn lead_at_infinity(&self) -> GaussRat {
        &self.num.lead() * &self.den.lead().inv().expect("monic")
    }
}

/// Double-precision snapshot of a rational function for fast evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct NumericRf {
    num: Vec<Complex64>,
    den: Vec<Complex64>,
}

fn horner(c: &[Complex64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::default(), |acc, a| acc * z + a)
}

impl NumericRf {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        horner(&self.num, z) / horner(&self.den, z)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_empty()
    }
}

impl RationalFunction {
    pub fn numeric(&self) -> NumericRf {
        NumericRf { num: self.num.to_c64(), den: self.den.to_c64() }
    }
}

impl Add for &RationalFunction {
    type Output = RationalFunction;
    fn add(self, o: &RationalFunction) -> RationalFunction {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        // a/b + c/d with g = gcd(b, d): only factors of g can cancel
        let g = Poly::gcd(&self.den, &o.den);
        let (b1, _) = self.den.div_rem(&g).expect("nonzero");
        let (d1, _) = o.den.div_rem(&g).expect("nonzero");
        let n = &(&self.num * &d1) + &(&o.num * &b1);
        if n.is_zero() {
            return RationalFunction::zero();
        }
        let h = Poly::gcd(&n, &g);
        let (n, _) = n.div_rem(&h).expect("nonzero");
        let (g1, _) = g.div_rem(&h).expect("nonzero");
        RationalFunction::normalized(n, &(&b1 * &d1) * &g1)
    }
}

impl Sub for &RationalFunction {
    type Output = RationalFunction;
    fn sub(self, o: &RationalFunction) -> RationalFunction {
        self + &(-o)
    }
}

impl Mul for &RationalFunction {
    type Output = RationalFunction;
    fn mul(self, o: &RationalFunction) -> RationalFunction {
        if self.is_zero() || o.is_zero() {
            return RationalFunction::zero();
        }
        // cross-cancel the reduced factors
        let g1 = Poly::gcd(&self.num, &o.den);
        let g2 = Poly::gcd(&o.num, &self.den);
        let (a, _) = self.num.div_rem(&g1).expect("nonzero");
        let (d, _) = o.den.div_rem(&g1).expect("nonzero");
        let (c, _) = o.num.div_rem(&g2).expect("nonzero");
        let (b, _) = self.den.div_rem(&g2).expect("nonzero");
        RationalFunction::normalized(&a * &c, &b * &d)
    }
}

impl Neg for &RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        RationalFunction { num: -&self.num, den: self.den.clone() }
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.degree() == Some(0) {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

impl FromStr for GaussRat {
    type Err = ExactError;
    fn from_str(s: &str) -> Result<Self, ExactError> {
        GaussRat::parse_real(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rf(num: &[i64], den: &[i64]) -> RationalFunction {
        RationalFunction::new(Poly::from_ints(num), Poly::from_ints(den)).unwrap()
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(rf(&[0, 0, 1], &[1]).derivative(), rf(&[0, 2], &[1]));
        assert_eq!(rf(&[1], &[0, 1]).derivative(), rf(&[-1], &[0, 0, 1]));
        assert_eq!(rf(&[-1, 0, 1], &[1]).derivative(), rf(&[0, 2], &[1]));
    }

    #[test]
    fn reduction_and_monic_denominator() {
        let f = rf(&[-2, 0, 2], &[2, 2]);
        assert_eq!(f, rf(&[-1, 1], &[1]));
        let g = RationalFunction::new(Poly::from_ints(&[1]), Poly::from_ints(&[0, 3])).unwrap();
        assert_eq!(g.den().lead(), GaussRat::one());
    }

    #[test]
    fn parsing() {
        assert_eq!(GaussRat::parse_real("-5/32").unwrap(), GaussRat::from_ratio(-5, 32));
        assert_eq!(GaussRat::parse_real("0.25").unwrap(), GaussRat::from_ratio(1, 4));
        assert!(GaussRat::parse_real("1/0").is_err());
        assert!(GaussRat::parse_real("abc").is_err());
        assert_eq!(GaussRat::parse_real("0.1").unwrap(), GaussRat::from_ratio(1, 10));
        assert_eq!(GaussRat::parse_real("-1.5e-2").unwrap(), GaussRat::from_ratio(-3, 200));
        assert_eq!(GaussRat::parse_real("2E3").unwrap(), GaussRat::from_int(2000, 0));
        assert!(GaussRat::parse_real("1.-2").is_err());
    }

    #[test]
    fn square_free_multiplicities() {
        // (z-1)^2 (z+2)
        let p = &Poly::from_ints(&[-1, 1]).pow(2) * &Poly::from_ints(&[2, 1]);
        let sf = p.square_free();
        assert_eq!(sf.len(), 2);
        let roots = p.roots();
        assert_eq!(roots.len(), 2);
        assert!((roots[0].0 - Complex64::new(-2.0, 0.0)).norm() < 1e-12 && roots[0].1 == 1);
        assert!((roots[1].0 - Complex64::new(1.0, 0.0)).norm() < 1e-12 && roots[1].1 == 2);
    }

    #[test]
    fn gaussian_arithmetic() {
        let i = GaussRat::i();
        assert_eq!(&i * &i, GaussRat::from_int(-1, 0));
        let a = GaussRat::from_int(3, 4);
        assert_eq!(&a * &a.inv().unwrap(), GaussRat::one());
    }
}
