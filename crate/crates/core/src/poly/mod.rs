//! Sparse multivariate polynomials over ℂ.

mod parse;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{Matrix, C64};

pub use parse::{parse_polynomials, parse_system, ParseError, ParseErrorKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Exponent vector of a monomial.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(n_vars: usize) -> Self {
        Monomial(vec![0; n_vars])
    }

    pub fn var(n_vars: usize, j: usize) -> Self {
        let mut e = vec![0; n_vars];
        e[j] = 1;
        Monomial(e)
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn n_vars(&self) -> usize {
        self.0.len()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: C64,
    pub monomial: Monomial,
}

/// A normalized polynomial: no repeated monomials, no zero coefficients.
/// Terms are kept in descending graded-lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    n_vars: usize,
    terms: Vec<Term>,
}

impl Polynomial {
    pub fn zero(n_vars: usize) -> Self {
        Polynomial {
            n_vars,
            terms: Vec::new(),
        }
    }

    pub fn constant(n_vars: usize, c: C64) -> Self {
        Self::from_terms(n_vars, [(c, Monomial::one(n_vars))])
    }

    pub fn variable(n_vars: usize, j: usize) -> Self {
        Self::from_terms(n_vars, [(C64::new(1.0, 0.0), Monomial::var(n_vars, j))])
    }

    /// Collects like terms and drops zero coefficients.
    pub fn from_terms<I>(n_vars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (C64, Monomial)>,
    {
        let mut acc: BTreeMap<(u32, Monomial), C64> = BTreeMap::new();
        for (coeff, m) in terms {
            assert_eq!(m.n_vars(), n_vars, "monomial arity");
            *acc.entry((m.total_degree(), m))
                .or_insert(C64::new(0.0, 0.0)) += coeff;
        }
        let terms = acc
            .into_iter()
            .rev()
            .filter(|(_, c)| *c != C64::new(0.0, 0.0))
            .map(|((_, monomial), coeff)| Term { coeff, monomial })
            .collect();
        Polynomial { n_vars, terms }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `-1` for the zero polynomial.
    pub fn degree(&self) -> i64 {
        self.terms
            .iter()
            .map(|t| i64::from(t.monomial.total_degree()))
            .max()
            .unwrap_or(-1)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        Self::from_terms(
            self.n_vars,
            self.terms
                .iter()
                .chain(&other.terms)
                .map(|t| (t.coeff, t.monomial.clone())),
        )
    }

    pub fn scale(&self, s: C64) -> Polynomial {
        Self::from_terms(
            self.n_vars,
            self.terms.iter().map(|t| (t.coeff * s, t.monomial.clone())),
        )
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                out.push((a.coeff * b.coeff, a.monomial.mul(&b.monomial)));
            }
        }
        Self::from_terms(self.n_vars, out)
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut result = Polynomial::constant(self.n_vars, C64::new(1.0, 0.0));
        for _ in 0..e {
            result = result.mul(self);
        }
        result
    }

    fn max_exponent(&self) -> u32 {
        self.terms
            .iter()
            .flat_map(|t| t.monomial.0.iter().copied())
            .max()
            .unwrap_or(0)
    }

    /// Evaluates against a precomputed power table.
    fn eval_with(&self, powers: &PowerTable) -> C64 {
        self.terms
            .iter()
            .map(|t| t.coeff * powers.monomial(&t.monomial))
            .sum()
    }

    /// Writes the gradient into `row`, using the power table.
    fn gradient_with(&self, powers: &PowerTable, row: &mut [C64]) {
        for r in row.iter_mut() {
            *r = C64::new(0.0, 0.0);
        }
        for t in &self.terms {
            let e = &t.monomial.0;
            for j in 0..self.n_vars {
                if e[j] == 0 {
                    continue;
                }
                let mut prod = t.coeff * f64::from(e[j]);
                for (l, &el) in e.iter().enumerate() {
                    let k = if l == j { el - 1 } else { el };
                    if k > 0 {
                        prod *= powers.get(l, k);
                    }
                }
                row[j] += prod;
            }
        }
    }

    pub fn evaluate(&self, x: &[C64]) -> Result<C64, PolyError> {
        check_len(self.n_vars, x)?;
        Ok(self.eval_with(&PowerTable::new(x, self.max_exponent())))
    }
}

fn check_len(expected: usize, x: &[C64]) -> Result<(), PolyError> {
    if x.len() != expected {
        Err(PolyError::DimensionMismatch {
            expected,
            got: x.len(),
        })
    } else {
        Ok(())
    }
}

/// `x_j^k` for all `j` and `k ≤ max_exp`, built once per evaluation point.
struct PowerTable {
    stride: usize,
    table: Vec<C64>,
}

impl PowerTable {
    fn new(x: &[C64], max_exp: u32) -> Self {
        let stride = max_exp as usize + 1;
        let mut table = Vec::with_capacity(x.len() * stride);
        for &xj in x {
            let mut p = C64::new(1.0, 0.0);
            table.push(p);
            for _ in 0..max_exp {
                p *= xj;
                table.push(p);
            }
        }
        PowerTable { stride, table }
    }

    #[inline]
    fn get(&self, var: usize, k: u32) -> C64 {
        self.table[var * self.stride + k as usize]
    }

    #[inline]
    fn monomial(&self, m: &Monomial) -> C64 {
        let mut p = C64::new(1.0, 0.0);
        for (j, &e) in m.0.iter().enumerate() {
            if e > 0 {
                p *= self.get(j, e);
            }
        }
        p
    }
}

/// A list of polynomials in a shared set of named variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialSystem {
    var_names: Vec<String>,
    polys: Vec<Polynomial>,
}

impl PolynomialSystem {
    pub fn new(var_names: Vec<String>, polys: Vec<Polynomial>) -> Self {
        for p in &polys {
            assert_eq!(p.n_vars(), var_names.len(), "polynomial arity");
        }
        PolynomialSystem { var_names, polys }
    }

    pub fn default_names(n: usize) -> Vec<String> {
        (1..=n).map(|k| format!("x{k}")).collect()
    }

    pub fn n_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn n_polys(&self) -> usize {
        self.polys.len()
    }

    pub fn is_square(&self) -> bool {
        self.n_polys() == self.n_vars()
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn polys(&self) -> &[Polynomial] {
        &self.polys
    }

    pub fn degrees(&self) -> Vec<i64> {
        self.polys.iter().map(Polynomial::degree).collect()
    }

    pub fn total_degree(&self) -> u128 {
        self.polys
            .iter()
            .map(|p| p.degree().max(0) as u128)
            .product()
    }

    fn max_exponent(&self) -> u32 {
        self.polys
            .iter()
            .map(Polynomial::max_exponent)
            .max()
            .unwrap_or(0)
    }

    pub fn evaluate(&self, x: &[C64]) -> Result<Vec<C64>, PolyError> {
        check_len(self.n_vars(), x)?;
        let powers = PowerTable::new(x, self.max_exponent());
        Ok(self.polys.iter().map(|p| p.eval_with(&powers)).collect())
    }

    pub fn jacobian(&self, x: &[C64]) -> Result<Matrix, PolyError> {
        check_len(self.n_vars(), x)?;
        let powers = PowerTable::new(x, self.max_exponent());
        let mut jac = Matrix::zeros(self.n_polys(), self.n_vars());
        for (k, p) in self.polys.iter().enumerate() {
            p.gradient_with(&powers, jac.row_mut(k));
        }
        Ok(jac)
    }

    /// Value and Jacobian sharing a single power table.
    pub fn evaluate_with_jacobian(&self, x: &[C64]) -> Result<(Vec<C64>, Matrix), PolyError> {
        check_len(self.n_vars(), x)?;
        let powers = PowerTable::new(x, self.max_exponent());
        let mut jac = Matrix::zeros(self.n_polys(), self.n_vars());
        let mut vals = Vec::with_capacity(self.n_polys());
        for (k, p) in self.polys.iter().enumerate() {
            vals.push(p.eval_with(&powers));
            p.gradient_with(&powers, jac.row_mut(k));
        }
        Ok((vals, jac))
    }

    /// Renders the system in the text file format accepted by
    /// [`parse_system`]. Coefficients are printed with round-trip precision.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.n_vars());
        let _ = writeln!(out, "{}", self.var_names.join(" "));
        for p in &self.polys {
            let _ = writeln!(out, "{};", format_polynomial(p, &self.var_names));
        }
        out
    }
}

fn format_coefficient(c: C64) -> String {
    match (c.re == 0.0, c.im == 0.0) {
        (_, true) => format!("{:?}", c.re),
        (true, false) => format!("{:?}*i", c.im),
        (false, false) => format!("({:?}+{:?}*i)", c.re, c.im),
    }
}

pub fn format_polynomial(p: &Polynomial, names: &[String]) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut parts = Vec::with_capacity(p.terms().len());
    for t in p.terms() {
        let mut factors = vec![format_coefficient(t.coeff)];
        for (j, &e) in t.monomial.0.iter().enumerate() {
            match e {
                0 => {}
                1 => factors.push(names[j].clone()),
                _ => factors.push(format!("{}^{}", names[j], e)),
            }
        }
        parts.push(factors.join("*"));
    }
    parts.join(" + ")
}

impl fmt::Display for PolynomialSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_file_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::c;

    fn worked_example() -> PolynomialSystem {
        parse_system("2\nx1 x2\nx1^2*x2;\nx1^2*(x2^2 + x1);\n").unwrap()
    }

    #[test]
    fn worked_example_degrees() {
        let f = worked_example();
        assert_eq!(f.degrees(), vec![3, 4]);
        assert_eq!(f.total_degree(), 12);
    }

    #[test]
    fn constant_and_zero_degrees() {
        assert_eq!(Polynomial::constant(2, c(5.0, 0.0)).degree(), 0);
        assert_eq!(Polynomial::zero(2).degree(), -1);
        let p = Polynomial::variable(2, 0);
        assert!(p.add(&p.scale(c(-1.0, 0.0))).is_zero());
    }

    #[test]
    fn evaluate_worked_example() {
        let f = worked_example();
        let v = f.evaluate(&[c(0.0, 0.0), c(3.7, -1.2)]).unwrap();
        assert_eq!(v, vec![c(0.0, 0.0), c(0.0, 0.0)]);
        let v = f.evaluate(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(v, vec![c(1.0, 0.0), c(2.0, 0.0)]);
    }

    #[test]
    fn jacobian_row_of_first_equation() {
        let f = worked_example();
        let j = f.jacobian(&[c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
        assert_eq!(j[(0, 0)], c(12.0, 0.0));
        assert_eq!(j[(0, 1)], c(4.0, 0.0));
    }

    #[test]
    fn linear_jacobian_is_constant() {
        let s = parse_system("2\n*\n3*x1 - x2 + 1;\n(2+i)*x2 + x1;\n").unwrap();
        let a = s.jacobian(&[c(0.1, 0.2), c(-4.0, 1.0)]).unwrap();
        let b = s.jacobian(&[c(9.0, 0.0), c(0.0, 7.0)]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[(1, 1)], c(2.0, 1.0));
    }

    #[test]
    fn dimension_mismatch() {
        let f = worked_example();
        assert_eq!(
            f.evaluate(&[c(1.0, 0.0)]),
            Err(PolyError::DimensionMismatch {
                expected: 2,
                got: 1
            })
        );
        assert!(f.jacobian(&[]).is_err());
    }

    #[test]
    fn file_string_round_trip() {
        let f = parse_system("3\na b c\n(1.5-2*i)*a*b^2 - c ;\n0.1*a + i;\n").unwrap();
        let again = parse_system(&f.to_file_string()).unwrap();
        assert_eq!(f, again);
    }
}
