//! Sparse multivariate polynomials over the complex numbers.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A single term `coeff * x_0^e_0 * ... * x_{N-1}^e_{N-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coeff: Complex64,
    pub exponents: Vec<u32>,
}

impl Monomial {
    pub fn new(coeff: Complex64, exponents: Vec<u32>) -> Self {
        Self { coeff, exponents }
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

/// Graded lexicographic order, highest degree first.
fn grlex(a: &[u32], b: &[u32]) -> Ordering {
    let da: u32 = a.iter().sum();
    let db: u32 = b.iter().sum();
    db.cmp(&da).then_with(|| b.cmp(a))
}

/// Polynomial in canonical form: merged exponents, no zero terms, grlex order.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    n_vars: usize,
    monomials: Vec<Monomial>,
}

impl Polynomial {
    /// Builds a canonical polynomial, merging repeated exponent vectors.
    pub fn new(n_vars: usize, monomials: Vec<Monomial>) -> Result<Self> {
        let mut merged: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        for m in monomials {
            if m.exponents.len() != n_vars {
                return Err(Error::DimensionMismatch { expected: n_vars, got: m.exponents.len() });
            }
            if !(m.coeff.re.is_finite() && m.coeff.im.is_finite()) {
                return Err(Error::NonFinite);
            }
            *merged.entry(m.exponents).or_insert(ZERO) += m.coeff;
        }
        Ok(Self::from_merged(n_vars, merged))
    }

    fn from_merged(n_vars: usize, merged: BTreeMap<Vec<u32>, Complex64>) -> Self {
        let mut monomials: Vec<Monomial> = merged
            .into_iter()
            .filter(|(_, c)| *c != ZERO)
            .map(|(exponents, coeff)| Monomial { coeff, exponents })
            .collect();
        monomials.sort_by(|a, b| grlex(&a.exponents, &b.exponents));
        Self { n_vars, monomials }
    }

    pub fn zero(n_vars: usize) -> Self {
        Self { n_vars, monomials: Vec::new() }
    }

    pub fn constant(n_vars: usize, c: Complex64) -> Self {
        let monomials = if c == ZERO { Vec::new() } else { vec![Monomial::new(c, vec![0; n_vars])] };
        Self { n_vars, monomials }
    }

    pub fn variable(n_vars: usize, index: usize) -> Result<Self> {
        if index >= n_vars {
            return Err(Error::IndexOutOfRange { index, n_vars });
        }
        let mut e = vec![0; n_vars];
        e[index] = 1;
        Ok(Self { n_vars, monomials: vec![Monomial::new(ONE, e)] })
    }

    /// Affine-linear polynomial `sum_i coeffs[i] x_i + constant`.
    pub fn linear(coeffs: &[Complex64], constant: Complex64) -> Self {
        let n = coeffs.len();
        let mut terms: Vec<Monomial> = coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let mut e = vec![0; n];
                e[i] = 1;
                Monomial::new(c, e)
            })
            .collect();
        terms.push(Monomial::new(constant, vec![0; n]));
        Self::new(n, terms).expect("linear terms are well formed")
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    /// True for a nonzero constant.
    pub fn is_constant(&self) -> bool {
        !self.is_zero() && self.degree() == 0
    }

    pub fn degree(&self) -> u32 {
        self.monomials.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Largest coefficient magnitude; zero for the zero polynomial.
    pub fn coeff_norm(&self) -> f64 {
        self.monomials.iter().map(|m| m.coeff.norm()).fold(0.0, f64::max)
    }

    /// `sum |c_m| prod (1 + |x_i|)^{e_i}`: the size of the terms whose sum is
    /// `p(x)`, used to judge when a value is zero up to roundoff and point error.
    pub fn magnitude(&self, x: &[Complex64]) -> f64 {
        self.monomials
            .iter()
            .map(|m| {
                m.exponents
                    .iter()
                    .zip(x)
                    .filter(|(e, _)| **e > 0)
                    .fold(m.coeff.norm(), |acc, (&e, xi)| acc * (1.0 + xi.norm()).powi(e as i32))
            })
            .sum()
    }

    /// Sum of coefficient times `dir^e` over the top-degree monomials: the
    /// leading coefficient of the restriction to a line with direction `dir`,
    /// together with the size of its terms.
    pub fn leading_form(&self, dir: &[Complex64]) -> (Complex64, f64) {
        let d = self.degree();
        let mut value = ZERO;
        let mut size = 0.0;
        for m in self.monomials.iter().filter(|m| m.degree() == d) {
            let mut term = m.coeff;
            for (xi, &e) in dir.iter().zip(&m.exponents) {
                term *= xi.powu(e);
            }
            value += term;
            size += term.norm();
        }
        (value, size)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let merged = self.monomials.iter().map(|m| (m.exponents.clone(), m.coeff * c)).collect();
        Self::from_merged(self.n_vars, merged)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::constant(self.n_vars, ONE);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    pub fn evaluate(&self, x: &[Complex64]) -> Result<Complex64> {
        self.check_len(x.len())?;
        Ok(self.eval(x))
    }

    /// Evaluation without the length check; summation follows storage order.
    pub(crate) fn eval(&self, x: &[Complex64]) -> Complex64 {
        let mut acc = ZERO;
        for m in &self.monomials {
            let mut term = m.coeff;
            for (xi, &e) in x.iter().zip(&m.exponents) {
                if e > 0 {
                    term *= xi.powu(e);
                }
            }
            acc += term;
        }
        acc
    }

    /// Value and gradient in one pass; `grad` is overwritten.
    pub(crate) fn eval_with_gradient(&self, x: &[Complex64], grad: &mut [Complex64]) -> Complex64 {
        grad.iter_mut().for_each(|g| *g = ZERO);
        let mut acc = ZERO;
        let mut pw: Vec<(usize, Complex64, Complex64)> = Vec::new();
        for m in &self.monomials {
            pw.clear();
            for (i, &e) in m.exponents.iter().enumerate() {
                if e > 0 {
                    let lower = x[i].powu(e - 1);
                    pw.push((i, lower * x[i], lower * e as f64));
                }
            }
            let mut term = m.coeff;
            for &(_, p, _) in &pw {
                term *= p;
            }
            acc += term;
            for k in 0..pw.len() {
                let mut d = m.coeff * pw[k].2;
                for (l, &(_, p, _)) in pw.iter().enumerate() {
                    if l != k {
                        d *= p;
                    }
                }
                grad[pw[k].0] += d;
            }
        }
        acc
    }

    pub fn differentiate(&self, var_index: usize) -> Result<Self> {
        if var_index >= self.n_vars {
            return Err(Error::IndexOutOfRange { index: var_index, n_vars: self.n_vars });
        }
        let mut merged = BTreeMap::new();
        for m in &self.monomials {
            let e = m.exponents[var_index];
            if e == 0 {
                continue;
            }
            let mut exps = m.exponents.clone();
            exps[var_index] -= 1;
            *merged.entry(exps).or_insert(ZERO) += m.coeff * e as f64;
        }
        Ok(Self::from_merged(self.n_vars, merged))
    }

    /// Coefficients `c_0..c_d` of `s -> p(base + s*dir)`, `d` the total degree.
    pub fn restrict_to_line(&self, base: &[Complex64], dir: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(base.len())?;
        self.check_len(dir.len())?;
        let d = self.degree() as usize;
        let mut out = vec![ZERO; d + 1];
        for m in &self.monomials {
            let mut term = vec![m.coeff];
            for (i, &e) in m.exponents.iter().enumerate() {
                for _ in 0..e {
                    term = mul_univariate(&term, &[base[i], dir[i]]);
                }
            }
            for (k, c) in term.into_iter().enumerate() {
                out[k] += c;
            }
        }
        Ok(out)
    }

    /// Same polynomial in `n_total` variables, its variables placed at `offset..`.
    pub fn embed(&self, n_total: usize, offset: usize) -> Result<Self> {
        if offset + self.n_vars > n_total {
            return Err(Error::DimensionMismatch { expected: n_total, got: offset + self.n_vars });
        }
        let monomials = self
            .monomials
            .iter()
            .map(|m| {
                let mut e = vec![0; n_total];
                e[offset..offset + self.n_vars].copy_from_slice(&m.exponents);
                Monomial::new(m.coeff, e)
            })
            .collect();
        Self::new(n_total, monomials)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n_vars {
            return Err(Error::DimensionMismatch { expected: self.n_vars, got: len });
        }
        Ok(())
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        assert_eq!(self.n_vars, other.n_vars, "polynomials over different variable sets");
        let mut merged: BTreeMap<Vec<u32>, Complex64> =
            self.monomials.iter().map(|m| (m.exponents.clone(), m.coeff)).collect();
        for m in &other.monomials {
            *merged.entry(m.exponents.clone()).or_insert(ZERO) += m.coeff * sign;
        }
        Self::from_merged(self.n_vars, merged)
    }
}

fn mul_univariate(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.combine(rhs, 1.0)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.combine(rhs, -1.0)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial::zero(self.n_vars).combine(self, -1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n_vars, rhs.n_vars, "polynomials over different variable sets");
        let mut merged: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        for a in &self.monomials {
            for b in &rhs.monomials {
                let e: Vec<u32> = a.exponents.iter().zip(&b.exponents).map(|(x, y)| x + y).collect();
                *merged.entry(e).or_insert(ZERO) += a.coeff * b.coeff;
            }
        }
        Polynomial::from_merged(self.n_vars, merged)
    }
}

/// A list of polynomials sharing one variable set.
#[derive(Clone, Debug, PartialEq)]
pub struct PolySystem {
    n_vars: usize,
    polys: Vec<Polynomial>,
    names: Vec<String>,
}

impl PolySystem {
    pub fn new(n_vars: usize, polys: Vec<Polynomial>) -> Result<Self> {
        let names = (1..=n_vars).map(|i| format!("x{i}")).collect();
        Self::with_names(names, polys)
    }

    pub fn with_names(names: Vec<String>, polys: Vec<Polynomial>) -> Result<Self> {
        let n_vars = names.len();
        if n_vars == 0 {
            return Err(Error::InvalidArgument("a system needs at least one variable".into()));
        }
        for p in &polys {
            if p.n_vars() != n_vars {
                return Err(Error::DimensionMismatch { expected: n_vars, got: p.n_vars() });
            }
        }
        Ok(Self { n_vars, polys, names })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn polys(&self) -> &[Polynomial] {
        &self.polys
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.polys.iter().map(Polynomial::degree).collect()
    }

    /// The first `k` polynomials, same variables.
    pub fn prefix(&self, k: usize) -> Self {
        Self { n_vars: self.n_vars, polys: self.polys[..k].to_vec(), names: self.names.clone() }
    }

    pub fn evaluate(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.n_vars {
            return Err(Error::DimensionMismatch { expected: self.n_vars, got: x.len() });
        }
        Ok(self.polys.iter().map(|p| p.eval(x)).collect())
    }

    /// `m x N` matrix of partial derivatives at `x`.
    pub fn jacobian(&self, x: &[Complex64]) -> Result<ComplexMatrix> {
        if x.len() != self.n_vars {
            return Err(Error::DimensionMismatch { expected: self.n_vars, got: x.len() });
        }
        let mut jac = ComplexMatrix::zeros(self.polys.len(), self.n_vars);
        for (i, p) in self.polys.iter().enumerate() {
            p.eval_with_gradient(x, jac.row_mut(i));
        }
        Ok(jac)
    }

    /// Rows `sum_j R[i][j] f_j`, expanded to canonical form.
    pub fn randomize(&self, r: &ComplexMatrix) -> Result<Self> {
        if r.cols() != self.polys.len() {
            return Err(Error::DimensionMismatch { expected: self.polys.len(), got: r.cols() });
        }
        let polys = (0..r.rows())
            .map(|i| {
                let mut merged: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
                for (j, p) in self.polys.iter().enumerate() {
                    let rij = r[(i, j)];
                    for m in p.monomials() {
                        *merged.entry(m.exponents.clone()).or_insert(ZERO) += rij * m.coeff;
                    }
                }
                Polynomial::from_merged(self.n_vars, merged)
            })
            .collect();
        Ok(Self { n_vars: self.n_vars, polys, names: self.names.clone() })
    }

    /// Removes identically zero polynomials, returning their original indices.
    pub fn drop_zero(&self) -> (Self, Vec<usize>) {
        let mut dropped = Vec::new();
        let mut polys = Vec::new();
        for (i, p) in self.polys.iter().enumerate() {
            if p.is_zero() {
                dropped.push(i);
            } else {
                polys.push(p.clone());
            }
        }
        (Self { n_vars: self.n_vars, polys, names: self.names.clone() }, dropped)
    }

    pub(crate) fn from_parts(names: Vec<String>, polys: Vec<Polynomial>) -> Self {
        Self { n_vars: names.len(), polys, names }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_matrix, Rng};
    use crate::parse::parse_system;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&r| c(r, 0.0)).collect()
    }

    fn single(text: &str) -> Polynomial {
        parse_system(text).unwrap().polys()[0].clone()
    }

    #[test]
    fn evaluate_examples() {
        let sphere = single("vars: x,y,z; x^2+y^2+z^2-1;");
        assert_eq!(sphere.evaluate(&real(&[1.0, 0.0, 0.0])).unwrap(), c(0.0, 0.0));
        let p = single("vars: x,y; x*y^2;");
        assert_eq!(p.evaluate(&real(&[2.0, 3.0])).unwrap(), c(18.0, 0.0));
        let f1 = single("vars: x,y,z; (y - x^2)*(x^2+y^2+z^2-1)*(x-0.5);");
        assert_eq!(f1.evaluate(&real(&[0.5, 0.5, 0.5])).unwrap().norm(), 0.0);
        assert_eq!(
            p.evaluate(&real(&[1.0])),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        );
    }

    #[test]
    fn differentiate_examples() {
        let p = single("vars: x,y; x^2 + y;");
        assert_eq!(p.differentiate(0).unwrap(), single("vars: x,y; 2*x;"));
        let q = single("vars: x,y; x^2;");
        assert!(q.differentiate(1).unwrap().is_zero());
        let r = single("vars: x,y; x*y^2;");
        assert_eq!(r.differentiate(0).unwrap(), single("vars: x,y; y^2;"));
        assert_eq!(r.differentiate(2), Err(Error::IndexOutOfRange { index: 2, n_vars: 2 }));
    }

    #[test]
    fn jacobian_examples() {
        let s = parse_system("vars: x,y; x^2+y^2-1;").unwrap();
        let j = s.jacobian(&real(&[1.0, 0.0])).unwrap();
        assert_eq!(j.row(0), &real(&[2.0, 0.0])[..]);
        let s = parse_system("vars: x,y; x-y; x+y;").unwrap();
        let j = s.jacobian(&[c(0.3, 1.0), c(-2.0, 0.5)]).unwrap();
        assert_eq!(j.row(0), &real(&[1.0, -1.0])[..]);
        assert_eq!(j.row(1), &real(&[1.0, 1.0])[..]);
    }

    /// Central finite differences, independent of the analytic gradient path.
    fn fd_jacobian(sys: &PolySystem, x: &[Complex64], h: f64) -> ComplexMatrix {
        let n = sys.n_vars();
        let mut out = ComplexMatrix::zeros(sys.len(), n);
        for j in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            let fp = sys.evaluate(&xp).unwrap();
            let fm = sys.evaluate(&xm).unwrap();
            for i in 0..sys.len() {
                out[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        out
    }

    fn random_poly(rng: &mut Rng, n_vars: usize, degree: u32, terms: usize) -> Polynomial {
        let mut monomials = Vec::new();
        for _ in 0..terms {
            let mut e = vec![0u32; n_vars];
            let d = (rng.uniform() * (degree as f64 + 1.0)) as u32;
            for _ in 0..d.min(degree) {
                let i = (rng.uniform() * n_vars as f64) as usize;
                e[i.min(n_vars - 1)] += 1;
            }
            monomials.push(Monomial::new(rng.complex_normal(), e));
        }
        Polynomial::new(n_vars, monomials).unwrap()
    }

    #[test]
    fn jacobian_matches_finite_differences_on_quadric() {
        let mut rng = Rng::new(21);
        let p = random_poly(&mut rng, 3, 2, 10);
        let sys = PolySystem::new(3, vec![p]).unwrap();
        let x = rng.complex_vector(3);
        let j = sys.jacobian(&x).unwrap();
        let fd = fd_jacobian(&sys, &x, 1e-6);
        for k in 0..3 {
            let (a, b) = (j[(0, k)], fd[(0, k)]);
            assert!((a - b).norm() <= 1e-6 * a.norm().max(1.0));
        }
    }

    #[test]
    fn jacobian_matches_finite_differences_random() {
        let mut rng = Rng::new(100);
        for case in 0..100 {
            let n = 1 + case % 4;
            let m = 1 + case % 3;
            let polys = (0..m).map(|_| random_poly(&mut rng, n, 4, 6)).collect();
            let sys = PolySystem::new(n, polys).unwrap();
            let x: Vec<Complex64> = rng.complex_vector(n).iter().map(|z| z * 0.5).collect();
            let j = sys.jacobian(&x).unwrap();
            let fd = fd_jacobian(&sys, &x, 1e-6);
            let scale = j.as_slice().iter().map(|z| z.norm()).fold(1.0, f64::max);
            for (a, b) in j.as_slice().iter().zip(fd.as_slice()) {
                assert!((a - b).norm() <= 1e-6 * scale, "case {case}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn randomize_examples() {
        let s = parse_system("vars: x,y; x-1; y-1;").unwrap();
        assert_eq!(s.randomize(&ComplexMatrix::identity(2)).unwrap(), s);
        let r = ComplexMatrix::from_real_rows(&[&[1.0, 1.0]]).unwrap();
        let out = s.randomize(&r).unwrap();
        assert_eq!(out, parse_system("vars: x,y; x+y-2;").unwrap());
        assert!(s.randomize(&ComplexMatrix::identity(3)).is_err());
    }

    #[test]
    fn randomized_evaluation_is_linear() {
        let mut rng = Rng::new(8);
        let polys = (0..3).map(|_| random_poly(&mut rng, 3, 3, 8)).collect();
        let sys = PolySystem::new(3, polys).unwrap();
        for _ in 0..20 {
            let r = random_matrix(&mut rng, 2, 3);
            let x = rng.complex_vector(3);
            let lhs = sys.randomize(&r).unwrap().evaluate(&x).unwrap();
            let rhs = r.mul_vec(&sys.evaluate(&x).unwrap()).unwrap();
            for (a, b) in lhs.iter().zip(&rhs) {
                assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0));
            }
        }
    }

    #[test]
    fn restrict_examples() {
        let sphere = single("vars: x,y,z; x^2+y^2+z^2-1;");
        let zero = real(&[0.0, 0.0, 0.0]);
        let e1 = real(&[1.0, 0.0, 0.0]);
        assert_eq!(sphere.restrict_to_line(&zero, &e1).unwrap(), real(&[-1.0, 0.0, 1.0]));
        let lin = single("vars: x,y,z; x-0.5;");
        assert_eq!(lin.restrict_to_line(&zero, &e1).unwrap(), real(&[-0.5, 1.0]));
    }

    #[test]
    fn restriction_commutes_with_evaluation() {
        let mut rng = Rng::new(4);
        for _ in 0..30 {
            let p = random_poly(&mut rng, 3, 5, 12);
            let base = rng.complex_vector(3);
            let dir = rng.complex_vector(3);
            let coeffs = p.restrict_to_line(&base, &dir).unwrap();
            let s = rng.complex_normal();
            let mut horner = c(0.0, 0.0);
            for ck in coeffs.iter().rev() {
                horner = horner * s + ck;
            }
            let pt: Vec<Complex64> = base.iter().zip(&dir).map(|(b, d)| b + s * d).collect();
            let direct = p.evaluate(&pt).unwrap();
            assert!((horner - direct).norm() <= 1e-12 * direct.norm().max(1.0) * 10.0);
        }
    }

    #[test]
    fn embed_shifts_variables() {
        let p = single("vars: x,y; x*y^2 + 3;");
        let e = p.embed(5, 2).unwrap();
        let x = real(&[7.0, 7.0, 2.0, 3.0, 7.0]);
        assert_eq!(e.evaluate(&x).unwrap(), c(21.0, 0.0));
        assert!(p.embed(3, 2).is_err());
    }

    proptest! {
        #[test]
        fn product_evaluates_as_product(seed in 0u64..500) {
            let mut rng = Rng::new(seed);
            let a = random_poly(&mut rng, 2, 3, 5);
            let b = random_poly(&mut rng, 2, 3, 5);
            let x = rng.complex_vector(2);
            let lhs = (&a * &b).evaluate(&x).unwrap();
            let rhs = a.evaluate(&x).unwrap() * b.evaluate(&x).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm().max(1.0));
        }
    }
}
