//! Sparse polynomials in `z` and `z̄` with double-precision complex coefficients.
//!
//! A [`ComplexPolynomial`] is kept in normal form: terms sorted by
//! `(holo, anti)` exponent pair, no duplicate keys and no zero coefficients.
//! Text syntax: variables `z1..zN`, conjugates `zb1..zbN`, operators
//! `+ - * ^`, parentheses and complex literals such as `(2-0.5i)`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Exponent vector of a monomial.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, k: usize) -> Self {
        let mut v = vec![0; n];
        v[k] = 1;
        MultiIndex(v)
    }

    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl std::ops::Index<usize> for MultiIndex {
    type Output = u32;
    fn index(&self, i: usize) -> &u32 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub holo: MultiIndex,
    pub anti: MultiIndex,
    pub coeff: Complex64,
}

impl Term {
    #[inline]
    fn eval(&self, z: &[Complex64], zc: &[Complex64]) -> Complex64 {
        let mut acc = self.coeff;
        for k in 0..z.len() {
            let a = self.holo.0[k];
            if a != 0 {
                acc *= z[k].powu(a);
            }
            let b = self.anti.0[k];
            if b != 0 {
                acc *= zc[k].powu(b);
            }
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPolynomial {
    dim: usize,
    terms: Vec<Term>,
}

type Key = (MultiIndex, MultiIndex);

impl ComplexPolynomial {
    pub fn zero(dim: usize) -> Self {
        ComplexPolynomial {
            dim,
            terms: Vec::new(),
        }
    }

    pub fn constant(dim: usize, c: Complex64) -> Self {
        Self::monomial(dim, MultiIndex::zeros(dim), MultiIndex::zeros(dim), c)
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, Complex64::new(1.0, 0.0))
    }

    /// The coordinate function `z_k` (0-based `k`).
    pub fn var(dim: usize, k: usize) -> Self {
        Self::monomial(
            dim,
            MultiIndex::unit(dim, k),
            MultiIndex::zeros(dim),
            Complex64::new(1.0, 0.0),
        )
    }

    /// The conjugate coordinate `z̄_k` (0-based `k`).
    pub fn conj_var(dim: usize, k: usize) -> Self {
        Self::monomial(
            dim,
            MultiIndex::zeros(dim),
            MultiIndex::unit(dim, k),
            Complex64::new(1.0, 0.0),
        )
    }

    pub fn monomial(dim: usize, holo: MultiIndex, anti: MultiIndex, coeff: Complex64) -> Self {
        assert_eq!(holo.len(), dim);
        assert_eq!(anti.len(), dim);
        let mut map = BTreeMap::new();
        map.insert((holo, anti), coeff);
        Self::from_map(dim, map)
    }

    /// Builds a polynomial from `(holo, anti, coeff)` triples, merging duplicates.
    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Vec<u32>, Complex64)>,
    {
        let mut map: BTreeMap<Key, Complex64> = BTreeMap::new();
        for (h, a, c) in terms {
            if h.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: h.len(),
                });
            }
            if a.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: a.len(),
                });
            }
            *map.entry((MultiIndex(h), MultiIndex(a))).or_default() += c;
        }
        Ok(Self::from_map(dim, map))
    }

    fn from_map(dim: usize, map: BTreeMap<Key, Complex64>) -> Self {
        let terms = map
            .into_iter()
            .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
            .map(|((holo, anti), coeff)| Term { holo, anti, coeff })
            .collect();
        ComplexPolynomial { dim, terms }
    }

    fn to_map(&self) -> BTreeMap<Key, Complex64> {
        self.terms
            .iter()
            .map(|t| ((t.holo.clone(), t.anti.clone()), t.coeff))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_holomorphic(&self) -> bool {
        self.terms.iter().all(|t| t.anti.is_zero())
    }

    /// Total degree in `z` and `z̄` together.
    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.holo.total() + t.anti.total())
            .max()
            .unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff.norm())
            .fold(0.0, f64::max)
    }

    pub fn eval(&self, z: &[Complex64]) -> Result<Complex64> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        Ok(self.eval_unchecked(z))
    }

    /// Evaluation without the length check; panics on short input.
    #[inline]
    pub fn eval_unchecked(&self, z: &[Complex64]) -> Complex64 {
        let mut zc = [Complex64::new(0.0, 0.0); 8];
        if self.dim <= zc.len() {
            for (c, v) in zc.iter_mut().zip(z) {
                *c = v.conj();
            }
            self.terms.iter().map(|t| t.eval(z, &zc[..self.dim])).sum()
        } else {
            let zc: Vec<Complex64> = z.iter().map(|v| v.conj()).collect();
            self.terms.iter().map(|t| t.eval(z, &zc)).sum()
        }
    }

    /// Swaps holomorphic and anti-holomorphic exponents and conjugates coefficients.
    pub fn conj(&self) -> Self {
        let map = self
            .terms
            .iter()
            .map(|t| ((t.anti.clone(), t.holo.clone()), t.coeff.conj()))
            .collect();
        Self::from_map(self.dim, map)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let map = self
            .terms
            .iter()
            .map(|t| ((t.holo.clone(), t.anti.clone()), t.coeff * c))
            .collect();
        Self::from_map(self.dim, map)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(self.dim);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// `∂/∂z_j` (0-based `j`).
    pub fn dz(&self, j: usize) -> Result<Self> {
        self.check_index(j)?;
        Ok(self.differentiate(j, false))
    }

    /// `∂/∂z̄_j` (0-based `j`).
    pub fn dzbar(&self, j: usize) -> Result<Self> {
        self.check_index(j)?;
        Ok(self.differentiate(j, true))
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j >= self.dim {
            return Err(Error::IndexOutOfRange {
                index: j,
                dim: self.dim,
            });
        }
        Ok(())
    }

    fn differentiate(&self, j: usize, anti: bool) -> Self {
        let mut map = BTreeMap::new();
        for t in &self.terms {
            let (mut h, mut a) = (t.holo.clone(), t.anti.clone());
            let e = if anti { &mut a.0[j] } else { &mut h.0[j] };
            if *e == 0 {
                continue;
            }
            let c = t.coeff * *e as f64;
            *e -= 1;
            *map.entry((h, a)).or_default() += c;
        }
        Self::from_map(self.dim, map)
    }

    /// Substitutes `z_k = s` (and `z̄_k = s̄`), dropping variable `k`.
    pub fn restrict(&self, k: usize, s: Complex64) -> Result<Self> {
        self.check_index(k)?;
        let mut map: BTreeMap<Key, Complex64> = BTreeMap::new();
        for t in &self.terms {
            let c = t.coeff * s.powu(t.holo[k]) * s.conj().powu(t.anti[k]);
            let mut h = t.holo.0.clone();
            let mut a = t.anti.0.clone();
            h.remove(k);
            a.remove(k);
            *map.entry((MultiIndex(h), MultiIndex(a))).or_default() += c;
        }
        Ok(Self::from_map(self.dim - 1, map))
    }

    /// Renames variables: variable `k` of `self` becomes variable `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: perm.len(),
            });
        }
        let mut seen = vec![false; self.dim];
        for &p in perm {
            if p >= self.dim || seen[p] {
                return Err(Error::InvalidArgument(format!(
                    "{perm:?} is not a permutation"
                )));
            }
            seen[p] = true;
        }
        let map = self
            .terms
            .iter()
            .map(|t| {
                let mut h = vec![0; self.dim];
                let mut a = vec![0; self.dim];
                for k in 0..self.dim {
                    h[perm[k]] = t.holo[k];
                    a[perm[k]] = t.anti[k];
                }
                ((MultiIndex(h), MultiIndex(a)), t.coeff)
            })
            .collect();
        Ok(Self::from_map(self.dim, map))
    }

    /// Pullback along a holomorphic map: `z_k ↦ images[k]`, `z̄_k ↦ conj(images[k])`.
    pub fn compose(&self, images: &[ComplexPolynomial]) -> Result<Self> {
        if images.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: images.len(),
            });
        }
        let m = images.first().map(|p| p.dim).unwrap_or(0);
        if images.iter().any(|p| p.dim != m) {
            return Err(Error::InvalidArgument(
                "chart components differ in dimension".into(),
            ));
        }
        let conjs: Vec<_> = images.iter().map(|p| p.conj()).collect();
        let mut acc = Self::zero(m);
        for t in &self.terms {
            let mut prod = Self::constant(m, t.coeff);
            for k in 0..self.dim {
                if t.holo[k] > 0 {
                    prod = &prod * &images[k].pow(t.holo[k]);
                }
                if t.anti[k] > 0 {
                    prod = &prod * &conjs[k].pow(t.anti[k]);
                }
            }
            acc = &acc + &prod;
        }
        Ok(acc)
    }

    /// Parses the text syntax in dimension `dim`.
    pub fn parse(s: &str, dim: usize) -> Result<Self> {
        let mut p = Parser {
            src: s.as_bytes(),
            pos: 0,
            dim,
        };
        let poly = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("trailing input"));
        }
        Ok(poly)
    }

    /// Largest variable index (1-based) mentioned in `s`; used to infer dimensions.
    pub fn max_var_index(s: &str) -> usize {
        let b = s.as_bytes();
        let mut best = 0;
        let mut i = 0;
        while i < b.len() {
            if b[i] == b'z' {
                let mut j = i + 1;
                if j < b.len() && b[j] == b'b' {
                    j += 1;
                }
                let start = j;
                while j < b.len() && b[j].is_ascii_digit() {
                    j += 1;
                }
                if let Ok(v) = s[start..j].parse::<usize>() {
                    best = best.max(v);
                }
                i = j.max(i + 1);
            } else {
                i += 1;
            }
        }
        best
    }
}

impl Add for &ComplexPolynomial {
    type Output = ComplexPolynomial;
    fn add(self, rhs: &ComplexPolynomial) -> ComplexPolynomial {
        assert_eq!(
            self.dim, rhs.dim,
            "dimension mismatch in polynomial addition"
        );
        let mut map = self.to_map();
        for t in &rhs.terms {
            *map.entry((t.holo.clone(), t.anti.clone())).or_default() += t.coeff;
        }
        ComplexPolynomial::from_map(self.dim, map)
    }
}

impl Sub for &ComplexPolynomial {
    type Output = ComplexPolynomial;
    fn sub(self, rhs: &ComplexPolynomial) -> ComplexPolynomial {
        self + &(-rhs)
    }
}

impl Neg for &ComplexPolynomial {
    type Output = ComplexPolynomial;
    fn neg(self) -> ComplexPolynomial {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &ComplexPolynomial {
    type Output = ComplexPolynomial;
    fn mul(self, rhs: &ComplexPolynomial) -> ComplexPolynomial {
        assert_eq!(
            self.dim, rhs.dim,
            "dimension mismatch in polynomial product"
        );
        let mut map: BTreeMap<Key, Complex64> = BTreeMap::new();
        for a in &self.terms {
            for b in &rhs.terms {
                *map.entry((a.holo.add(&b.holo), a.anti.add(&b.anti)))
                    .or_default() += a.coeff * b.coeff;
            }
        }
        ComplexPolynomial::from_map(self.dim, map)
    }
}

fn fmt_real(x: f64) -> String {
    format!("{x:?}")
}

impl fmt::Display for ComplexPolynomial {
    /// Writes the polynomial back in the parser's syntax.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            let c = t.coeff;
            let sign = if c.im < 0.0 || (c.im == 0.0 && c.im.is_sign_negative()) {
                "-"
            } else {
                "+"
            };
            write!(f, "({}{}{}i)", fmt_real(c.re), sign, fmt_real(c.im.abs()))?;
            for k in 0..self.dim {
                match t.holo[k] {
                    0 => {}
                    1 => write!(f, "*z{}", k + 1)?,
                    e => write!(f, "*z{}^{}", k + 1, e)?,
                }
                match t.anti[k] {
                    0 => {}
                    1 => write!(f, "*zb{}", k + 1)?,
                    e => write!(f, "*zb{}^{}", k + 1, e)?,
                }
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<ComplexPolynomial> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                b'-' => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<ComplexPolynomial> {
        let mut acc = self.power()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = &acc * &self.power()?;
        }
        Ok(acc)
    }

    fn power(&mut self) -> Result<ComplexPolynomial> {
        let base = self.unary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let e: u32 = std::str::from_utf8(&self.src[start..self.pos])
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| self.err("expected non-negative integer exponent"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<ComplexPolynomial> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-&self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<ComplexPolynomial> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b'z') => {
                self.pos += 1;
                let conj = self.src.get(self.pos) == Some(&b'b');
                if conj {
                    self.pos += 1;
                }
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let idx: usize = std::str::from_utf8(&self.src[start..self.pos])
                    .ok()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| self.err("expected variable index"))?;
                if idx == 0 || idx > self.dim {
                    return Err(Error::IndexOutOfRange {
                        index: idx,
                        dim: self.dim,
                    });
                }
                Ok(if conj {
                    ComplexPolynomial::conj_var(self.dim, idx - 1)
                } else {
                    ComplexPolynomial::var(self.dim, idx - 1)
                })
            }
            Some(b'i') => {
                self.pos += 1;
                Ok(ComplexPolynomial::constant(
                    self.dim,
                    Complex64::new(0.0, 1.0),
                ))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.src.len() {
                    let c = self.src[self.pos];
                    let exp_sign = (c == b'+' || c == b'-')
                        && self.pos > start
                        && matches!(self.src[self.pos - 1], b'e' | b'E');
                    if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let v: f64 = std::str::from_utf8(&self.src[start..self.pos])
                    .ok()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| self.err("malformed number"))?;
                if self.src.get(self.pos) == Some(&b'i') {
                    self.pos += 1;
                    Ok(ComplexPolynomial::constant(
                        self.dim,
                        Complex64::new(0.0, v),
                    ))
                } else {
                    Ok(ComplexPolynomial::constant(
                        self.dim,
                        Complex64::new(v, 0.0),
                    ))
                }
            }
            _ => Err(self.err("unexpected token")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        let p = ComplexPolynomial::parse("z1", 1).unwrap();
        assert_eq!(p.eval(&[c(2.0, 0.0)]).unwrap(), c(2.0, 0.0));
        let p = ComplexPolynomial::parse("z1*zb1", 1).unwrap();
        assert!((p.eval(&[c(3.0, 4.0)]).unwrap() - c(25.0, 0.0)).norm() < 1e-12);
        let p = ComplexPolynomial::parse("z1^2+z2^2+z1^3", 2).unwrap();
        assert!((p.eval(&[c(1.0, 0.0), c(0.0, 1.0)]).unwrap() - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn eval_dimension_mismatch() {
        let p = ComplexPolynomial::parse("z1", 2).unwrap();
        assert!(matches!(
            p.eval(&[c(1.0, 0.0)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn wirtinger_examples() {
        let p = ComplexPolynomial::parse("z1^3", 1).unwrap();
        assert_eq!(
            p.dz(0).unwrap(),
            ComplexPolynomial::parse("3*z1^2", 1).unwrap()
        );
        assert!(p.dzbar(0).unwrap().is_zero());
        let g = ComplexPolynomial::parse("z1^2+z2^2+z1^3", 2).unwrap();
        assert_eq!(
            g.dz(0).unwrap(),
            ComplexPolynomial::parse("2*z1+3*z1^2", 2).unwrap()
        );
        assert!(matches!(p.dz(1), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn parses_complex_literals_and_conjugates() {
        let p = ComplexPolynomial::parse("(0+1i)*z1*zb2^2", 2).unwrap();
        let z = [c(1.0, 1.0), c(0.5, -2.0)];
        let expect = c(0.0, 1.0) * z[0] * z[1].conj().powu(2);
        assert!((p.eval(&z).unwrap() - expect).norm() < 1e-12);
        let q = ComplexPolynomial::parse("(2-0.5i) - 3e-1*z1", 1).unwrap();
        assert!((q.eval(&[c(1.0, 0.0)]).unwrap() - c(1.7, -0.5)).norm() < 1e-12);
        assert!(ComplexPolynomial::parse("z3", 2).is_err());
        assert!(ComplexPolynomial::parse("z1 +", 1).is_err());
        assert!(ComplexPolynomial::parse("z1^x", 1).is_err());
    }

    #[test]
    fn display_round_trips() {
        let p = ComplexPolynomial::parse("(0.25-3i)*z1*zb2^2 - z2^4 + 7", 2).unwrap();
        let q = ComplexPolynomial::parse(&p.to_string(), 2).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn restrict_and_compose() {
        let p = ComplexPolynomial::parse("z2^2+z3*z1", 3).unwrap();
        let r = p.restrict(2, c(0.3, 0.0)).unwrap();
        assert_eq!(r, ComplexPolynomial::parse("z2^2+0.3*z1", 2).unwrap());
        // cusp chart t -> (t^2, t^3)
        let chart = [
            ComplexPolynomial::parse("z1^2", 1).unwrap(),
            ComplexPolynomial::parse("z1^3", 1).unwrap(),
        ];
        let h = ComplexPolynomial::parse("z1*zb2", 2).unwrap();
        assert_eq!(
            h.compose(&chart).unwrap(),
            ComplexPolynomial::parse("z1^2*zb1^3", 1).unwrap()
        );
    }

    fn arb_poly(dim: usize) -> impl Strategy<Value = ComplexPolynomial> {
        let term = (
            proptest::collection::vec(0u32..4, dim),
            proptest::collection::vec(0u32..4, dim),
            -2.0f64..2.0,
            -2.0f64..2.0,
        );
        proptest::collection::vec(term, 1..6).prop_map(move |ts| {
            ComplexPolynomial::from_terms(
                dim,
                ts.into_iter().map(|(h, a, re, im)| (h, a, c(re, im))),
            )
            .unwrap()
        })
    }

    fn arb_point(dim: usize) -> impl Strategy<Value = Vec<Complex64>> {
        proptest::collection::vec((-1.2f64..1.2, -1.2f64..1.2).prop_map(|(a, b)| c(a, b)), dim)
    }

    proptest! {
        #[test]
        fn wirtinger_derivatives_commute(p in arb_poly(3), j in 0usize..3, k in 0usize..3) {
            let a = p.dz(j).unwrap().dzbar(k).unwrap();
            let b = p.dzbar(k).unwrap().dz(j).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn conj_commutes_with_eval(p in arb_poly(2), z in arb_point(2)) {
            let lhs = p.eval(&z).unwrap().conj();
            let rhs = p.conj().eval(&z).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
        }

        #[test]
        fn finite_differences_match_wirtinger(p in arb_poly(2), z in arb_point(2), j in 0usize..2) {
            let h = 1e-5;
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[j] += c(h, 0.0);
            zm[j] -= c(h, 0.0);
            let dx = (p.eval(&zp).unwrap() - p.eval(&zm).unwrap()) / (2.0 * h);
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[j] += c(0.0, h);
            zm[j] -= c(0.0, h);
            let dy = (p.eval(&zp).unwrap() - p.eval(&zm).unwrap()) / (2.0 * h);
            let dz = p.dz(j).unwrap().eval(&z).unwrap();
            let dzb = p.dzbar(j).unwrap().eval(&z).unwrap();
            // ∂_x = ∂_z + ∂_z̄ and ∂_y = i(∂_z − ∂_z̄)
            let ex = dz + dzb;
            let ey = c(0.0, 1.0) * (dz - dzb);
            let scale = 1.0 + ex.norm() + ey.norm();
            prop_assert!((dx - ex).norm() <= 1e-6 * scale);
            prop_assert!((dy - ey).norm() <= 1e-6 * scale);
        }
    }
}
