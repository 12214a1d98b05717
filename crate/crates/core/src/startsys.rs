//! Total-degree start systems `x_k^{d_k} − c_k = 0`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{Matrix, RandomSource, C64};
use crate::poly::PolynomialSystem;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StartSystemError {
    #[error("polynomial {index} is identically zero")]
    ZeroPolynomial { index: usize },
    #[error("system is not square: {polys} polynomials in {vars} variables")]
    NonSquareSystem { polys: usize, vars: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartSystem {
    degrees: Vec<u32>,
    constants: Vec<C64>,
}

impl StartSystem {
    pub fn new(degrees: Vec<u32>, constants: Vec<C64>) -> Self {
        assert_eq!(degrees.len(), constants.len());
        assert!(
            degrees.iter().all(|&d| d >= 1),
            "start degrees must be positive"
        );
        StartSystem { degrees, constants }
    }

    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn constants(&self) -> &[C64] {
        &self.constants
    }

    /// Number of start roots, the product of the degrees.
    pub fn root_count(&self) -> u128 {
        self.degrees.iter().map(|&d| u128::from(d)).product()
    }

    pub fn evaluate(&self, x: &[C64]) -> Vec<C64> {
        x.iter()
            .zip(&self.degrees)
            .zip(&self.constants)
            .map(|((xk, &d), ck)| xk.powu(d) - ck)
            .collect()
    }

    /// The Jacobian is diagonal: `d_k·x_k^{d_k−1}`.
    pub fn jacobian(&self, x: &[C64]) -> Matrix {
        let diag: Vec<C64> = x
            .iter()
            .zip(&self.degrees)
            .map(|(xk, &d)| xk.powu(d - 1) * f64::from(d))
            .collect();
        Matrix::from_diagonal(&diag)
    }

    /// The root with multi-index given by the mixed-radix digits of `index`
    /// (first coordinate varies fastest).
    pub fn root(&self, index: u128) -> Vec<C64> {
        assert!(index < self.root_count(), "root index out of range");
        let mut rest = index;
        self.degrees
            .iter()
            .zip(&self.constants)
            .map(|(&d, c)| {
                let k = (rest % u128::from(d)) as f64;
                rest /= u128::from(d);
                let d = f64::from(d);
                let modulus = c.norm().powf(1.0 / d);
                let angle = (c.arg() + TAU * k) / d;
                C64::from_polar(modulus, angle)
            })
            .collect()
    }

    /// All roots, produced lazily in index order.
    pub fn roots(&self) -> impl Iterator<Item = Vec<C64>> + '_ {
        (0..self.root_count()).map(move |k| self.root(k))
    }
}

fn target_degrees(target: &PolynomialSystem) -> Result<Vec<u32>, StartSystemError> {
    if !target.is_square() {
        return Err(StartSystemError::NonSquareSystem {
            polys: target.n_polys(),
            vars: target.n_vars(),
        });
    }
    target
        .polys()
        .iter()
        .enumerate()
        .map(|(index, p)| {
            if p.is_zero() {
                Err(StartSystemError::ZeroPolynomial { index })
            } else {
                // constant nonzero equations get a linear start equation
                Ok((p.degree() as u32).max(1))
            }
        })
        .collect()
}

/// Start system matched to the degrees of `target`, with unit-modulus
/// random constants.
pub fn build_start_system(
    target: &PolynomialSystem,
    rng: &mut RandomSource,
) -> Result<StartSystem, StartSystemError> {
    let degrees = target_degrees(target)?;
    let constants = degrees.iter().map(|_| rng.unit_complex()).collect();
    Ok(StartSystem::new(degrees, constants))
}

/// Start system for an embedded system `E_i` in variables `(x, z_1..z_i)`:
/// `x_k^{d_k} − c_k` for the original equations and `z_j − 1` for the
/// slice rows.
pub fn build_embedded_start_system(
    base: &PolynomialSystem,
    level: usize,
    rng: &mut RandomSource,
) -> Result<StartSystem, StartSystemError> {
    let mut degrees = target_degrees(base)?;
    let mut constants: Vec<C64> = degrees.iter().map(|_| rng.unit_complex()).collect();
    if level > 0 {
        // with slack terms every original row is at least linear
        degrees.iter_mut().for_each(|d| *d = (*d).max(1));
    }
    degrees.extend(std::iter::repeat_n(1, level));
    constants.extend(std::iter::repeat_n(C64::new(1.0, 0.0), level));
    Ok(StartSystem::new(degrees, constants))
}

pub fn enumerate_start_roots(g: &StartSystem) -> impl Iterator<Item = Vec<C64>> + '_ {
    g.roots()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{c, norm_inf, solve};
    use crate::poly::parse_system;

    fn worked_example() -> PolynomialSystem {
        parse_system("2\n*\nx1^2*x2;\nx1^2*(x2^2 + x1);\n").unwrap()
    }

    #[test]
    fn worked_example_start_system() {
        let g = build_start_system(&worked_example(), &mut RandomSource::new(1)).unwrap();
        assert_eq!(g.degrees(), &[3, 4]);
        assert_eq!(g.root_count(), 12);
        for ck in g.constants() {
            assert!((ck.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn embedded_level_one_has_twelve_roots() {
        let g =
            build_embedded_start_system(&worked_example(), 1, &mut RandomSource::new(1)).unwrap();
        assert_eq!(g.degrees(), &[3, 4, 1]);
        assert_eq!(g.root_count(), 12);
        assert_eq!(g.constants()[2], c(1.0, 0.0));
        for r in g.roots() {
            assert!((r[2] - c(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn linear_system_has_one_root() {
        let s = parse_system("2\n*\nx1 + 2*x2 - 1;\n3*x1 - x2;\n").unwrap();
        let g = build_start_system(&s, &mut RandomSource::new(0)).unwrap();
        assert_eq!(g.degrees(), &[1, 1]);
        assert_eq!(g.roots().count(), 1);
    }

    #[test]
    fn zero_polynomial_rejected() {
        let s = parse_system("2\n*\nx1 - x1;\nx2;\n").unwrap();
        assert_eq!(
            build_start_system(&s, &mut RandomSource::new(0)),
            Err(StartSystemError::ZeroPolynomial { index: 0 })
        );
        let s = parse_system("2\n*\nx1;\n").unwrap();
        assert!(matches!(
            build_start_system(&s, &mut RandomSource::new(0)),
            Err(StartSystemError::NonSquareSystem { .. })
        ));
    }

    #[test]
    fn small_closed_form_roots() {
        let g = StartSystem::new(vec![1, 1], vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let roots: Vec<_> = g.roots().collect();
        assert_eq!(roots, vec![vec![c(1.0, 0.0), c(1.0, 0.0)]]);

        let g = StartSystem::new(vec![2], vec![c(1.0, 0.0)]);
        let roots: Vec<_> = g.roots().collect();
        assert_eq!(roots.len(), 2);
        assert!((roots[0][0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((roots[1][0] - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn degree_3_4_roots_are_distinct_and_exact() {
        let g = build_start_system(&worked_example(), &mut RandomSource::new(99)).unwrap();
        let roots: Vec<_> = g.roots().collect();
        assert_eq!(roots.len(), 12);
        for r in &roots {
            assert!(norm_inf(&g.evaluate(r)) < 1e-12);
            // one Newton step barely moves an exact root
            let step = solve(&g.jacobian(r), &g.evaluate(r)).unwrap();
            assert!(norm_inf(&step) < 1e-12);
        }
        for a in 0..roots.len() {
            for b in a + 1..roots.len() {
                let d: Vec<C64> = roots[a].iter().zip(&roots[b]).map(|(p, q)| p - q).collect();
                assert!(norm_inf(&d) > 0.1);
            }
        }
    }
}
