//! Embedded systems `E_i` and the homotopies that connect them.
//!
//! For a square system `f` in `n` variables, `E_i` lives on `(x, z_1..z_i)`:
//!
//! ```text
//! f_k(x) + Σ_{j≤i} λ_{k,j} z_j = 0     k = 1..n
//! L_j(x) + z_j                = 0     j = 1..i
//! ```
//!
//! with random hyperplanes `L_j(x) = a_j + a_{j,1} x_1 + … + a_{j,n} x_n`.
//! `E_0` is `f` itself.

use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{Matrix, RandomSource, C64};
use crate::poly::{Monomial, Polynomial, PolynomialSystem};
use crate::startsys::StartSystem;
use crate::tracker::Homotopy;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EmbedError {
    #[error("level {level} out of range 0..={n}")]
    LevelOutOfRange { level: usize, n: usize },
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("system is not square: {polys} polynomials in {vars} variables")]
    NonSquareSystem { polys: usize, vars: usize },
}

/// `L(x) = constant + Σ coefficients[k]·x_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub constant: C64,
    pub coefficients: Vec<C64>,
}

impl Hyperplane {
    pub fn evaluate(&self, x: &[C64]) -> C64 {
        self.constant
            + self
                .coefficients
                .iter()
                .zip(x)
                .map(|(a, xk)| a * xk)
                .sum::<C64>()
    }
}

/// One generic point of the parameter space: slices, slack multipliers and
/// the unimodular constants used to reparametrize the homotopies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSample {
    pub seed: u64,
    pub hyperplanes: Vec<Hyperplane>,
    /// `lambda_columns[j][k]` multiplies `z_{j+1}` in equation `k+1`.
    pub lambda_columns: Vec<Vec<C64>>,
    /// Detour constant for the cascade homotopies.
    pub eta: C64,
    /// Constant multiplying the start system in the total-degree homotopy.
    pub gamma: C64,
}

impl ParameterSample {
    pub fn n(&self) -> usize {
        self.hyperplanes.len()
    }

    /// `λ_{k,j}` with 1-based `j` as in the embedding formula.
    #[inline]
    pub fn lambda(&self, k: usize, j: usize) -> C64 {
        self.lambda_columns[j - 1][k]
    }
}

/// Draws all hyperplane constants and coefficients, all λ entries, η and γ
/// as unit-modulus complex numbers with uniform angle.
pub fn sample_parameters(n: usize, rng: &mut RandomSource) -> ParameterSample {
    assert!(n >= 1, "need at least one variable");
    let hyperplanes = (0..n)
        .map(|_| Hyperplane {
            constant: rng.unit_complex(),
            coefficients: (0..n).map(|_| rng.unit_complex()).collect(),
        })
        .collect();
    let lambda_columns = (0..n)
        .map(|_| (0..n).map(|_| rng.unit_complex()).collect())
        .collect();
    let eta = rng.unit_complex();
    let gamma = rng.unit_complex();
    ParameterSample {
        seed: rng.seed(),
        hyperplanes,
        lambda_columns,
        eta,
        gamma,
    }
}

/// The level-`i` embedded system `E_i(f)`.
#[derive(Debug, Clone)]
pub struct EmbeddedSystem {
    base: Arc<PolynomialSystem>,
    params: Arc<ParameterSample>,
    level: usize,
}

pub fn embed(
    base: Arc<PolynomialSystem>,
    params: Arc<ParameterSample>,
    level: usize,
) -> Result<EmbeddedSystem, EmbedError> {
    EmbeddedSystem::new(base, params, level)
}

impl EmbeddedSystem {
    pub fn new(
        base: Arc<PolynomialSystem>,
        params: Arc<ParameterSample>,
        level: usize,
    ) -> Result<Self, EmbedError> {
        if !base.is_square() {
            return Err(EmbedError::NonSquareSystem {
                polys: base.n_polys(),
                vars: base.n_vars(),
            });
        }
        let n = base.n_vars();
        if level > n || params.n() != n {
            return Err(EmbedError::LevelOutOfRange { level, n });
        }
        Ok(EmbeddedSystem {
            base,
            params,
            level,
        })
    }

    pub fn n(&self) -> usize {
        self.base.n_vars()
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// `n + i` variables and equations.
    pub fn dim(&self) -> usize {
        self.n() + self.level
    }

    pub fn base(&self) -> &Arc<PolynomialSystem> {
        &self.base
    }

    pub fn params(&self) -> &Arc<ParameterSample> {
        &self.params
    }

    /// The first `level` hyperplanes.
    pub fn slices(&self) -> &[Hyperplane] {
        &self.params.hyperplanes[..self.level]
    }

    /// Indices of the slack coordinates `z_1..z_i` in a point.
    pub fn slack_range(&self) -> Range<usize> {
        self.n()..self.dim()
    }

    fn check(&self, point: &[C64]) -> Result<(), EmbedError> {
        if point.len() != self.dim() {
            return Err(EmbedError::DimensionMismatch {
                expected: self.dim(),
                got: point.len(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, point: &[C64]) -> Result<Vec<C64>, EmbedError> {
        Ok(self.evaluate_with_jacobian(point)?.0)
    }

    pub fn jacobian(&self, point: &[C64]) -> Result<Matrix, EmbedError> {
        Ok(self.evaluate_with_jacobian(point)?.1)
    }

    pub fn evaluate_with_jacobian(&self, point: &[C64]) -> Result<(Vec<C64>, Matrix), EmbedError> {
        self.check(point)?;
        Ok(cascade_rows(
            &self.base,
            &self.params,
            self.level,
            point,
            C64::new(1.0, 0.0),
            false,
        ))
    }

    /// Expands `E_i` into an ordinary polynomial system in `(x, z_1..z_i)`.
    pub fn to_polynomial_system(&self) -> PolynomialSystem {
        let n = self.n();
        let dim = self.dim();
        let widen = |m: &Monomial| {
            let mut e = m.0.clone();
            e.resize(dim, 0);
            Monomial(e)
        };
        let mut polys = Vec::with_capacity(dim);
        for (k, p) in self.base.polys().iter().enumerate() {
            let terms = p
                .terms()
                .iter()
                .map(|t| (t.coeff, widen(&t.monomial)))
                .chain(
                    (1..=self.level)
                        .map(|j| (self.params.lambda(k, j), Monomial::var(dim, n + j - 1))),
                );
            polys.push(Polynomial::from_terms(dim, terms));
        }
        for (j, h) in self.slices().iter().enumerate() {
            let terms = std::iter::once((h.constant, Monomial::one(dim)))
                .chain(
                    h.coefficients
                        .iter()
                        .enumerate()
                        .map(|(l, a)| (*a, Monomial::var(dim, l))),
                )
                .chain(std::iter::once((
                    C64::new(1.0, 0.0),
                    Monomial::var(dim, n + j),
                )));
            polys.push(Polynomial::from_terms(dim, terms));
        }
        let mut names = self.base.var_names().to_vec();
        names.extend((1..=self.level).map(|j| format!("z{j}")));
        PolynomialSystem::new(names, polys)
    }
}

/// Rows of the cascade homotopy `H_i` at complex `t`, and its Jacobian with
/// respect to the point. With `t = 1` this is `E_i`; with `t = 0` it is
/// `E_{i−1}` followed by the row `z_i`.
fn cascade_rows(
    base: &PolynomialSystem,
    params: &ParameterSample,
    level: usize,
    point: &[C64],
    t: C64,
    scale_last: bool,
) -> (Vec<C64>, Matrix) {
    let n = base.n_vars();
    let dim = n + level;
    let (x, z) = point.split_at(n);
    let (fx, jf) = base
        .evaluate_with_jacobian(x)
        .expect("point length checked by caller");
    let mut vals = Vec::with_capacity(dim);
    let mut jac = Matrix::zeros(dim, dim);
    let last_weight = |j: usize| {
        if scale_last && j == level {
            t
        } else {
            C64::new(1.0, 0.0)
        }
    };

    for k in 0..n {
        let mut v = fx[k];
        for j in 1..=level {
            let coeff = params.lambda(k, j) * last_weight(j);
            v += coeff * z[j - 1];
            jac[(k, n + j - 1)] = coeff;
        }
        vals.push(v);
        jac.row_mut(k)[..n].copy_from_slice(jf.row(k));
    }
    for j in 1..=level {
        let h = &params.hyperplanes[j - 1];
        let w = last_weight(j);
        vals.push(w * h.evaluate(x) + z[j - 1]);
        let row = n + j - 1;
        for (l, a) in h.coefficients.iter().enumerate() {
            jac[(row, l)] = w * a;
        }
        jac[(row, n + j - 1)] = C64::new(1.0, 0.0);
    }
    (vals, jac)
}

fn check_cascade_args(
    base: &PolynomialSystem,
    params: &ParameterSample,
    level: usize,
    point: &[C64],
) -> Result<(), EmbedError> {
    let n = base.n_vars();
    if !base.is_square() {
        return Err(EmbedError::NonSquareSystem {
            polys: base.n_polys(),
            vars: n,
        });
    }
    if level == 0 || level > n || params.n() != n {
        return Err(EmbedError::LevelOutOfRange { level, n });
    }
    if point.len() != n + level {
        return Err(EmbedError::DimensionMismatch {
            expected: n + level,
            got: point.len(),
        });
    }
    Ok(())
}

/// Evaluates `H_i(x, z_1..z_i, t)`:
///
/// ```text
/// f_k(x) + Σ_{j<i} λ_{k,j} z_j + t·λ_{k,i} z_i
/// L_j(x) + z_j                              j < i
/// t·L_i(x) + z_i
/// ```
///
/// `t` is complex; the tracker feeds it along a detour from 1 to 0 shaped by
/// the random constant η of the parameter sample.
pub fn cascade_homotopy_eval(
    base: &PolynomialSystem,
    params: &ParameterSample,
    level: usize,
    point: &[C64],
    t: C64,
) -> Result<Vec<C64>, EmbedError> {
    check_cascade_args(base, params, level, point)?;
    Ok(cascade_rows(base, params, level, point, t, true).0)
}

/// Jacobian of [`cascade_homotopy_eval`] with respect to the point.
pub fn cascade_homotopy_jacobian(
    base: &PolynomialSystem,
    params: &ParameterSample,
    level: usize,
    point: &[C64],
    t: C64,
) -> Result<Matrix, EmbedError> {
    check_cascade_args(base, params, level, point)?;
    Ok(cascade_rows(base, params, level, point, t, true).1)
}

/// `∂H_i/∂t`: `λ_{k,i} z_i` on the first `n` rows, `L_i(x)` on the last.
fn cascade_dt(
    base: &PolynomialSystem,
    params: &ParameterSample,
    level: usize,
    point: &[C64],
) -> Vec<C64> {
    let n = base.n_vars();
    let zi = point[n + level - 1];
    let mut d = vec![C64::new(0.0, 0.0); n + level];
    for (k, dk) in d.iter_mut().enumerate().take(n) {
        *dk = params.lambda(k, level) * zi;
    }
    d[n + level - 1] = params.hyperplanes[level - 1].evaluate(&point[..n]);
    d
}

/// Maps the real path parameter `s ∈ [0, 1]` onto the complex arc
/// `t(s) = η s / (η s + 1 − s)`, which runs from `t(1) = 1` to `t(0) = 0`.
pub fn eta_detour(eta: C64, s: f64) -> (C64, C64) {
    let denom = eta * s + (1.0 - s);
    (eta * s / denom, eta / (denom * denom))
}

/// `H_i` as a path to track from solutions of `E_i` (s = 1) to solutions of
/// `(E_{i−1}, z_i)` (s = 0).
#[derive(Debug, Clone)]
pub struct CascadeHomotopy {
    system: EmbeddedSystem,
}

impl CascadeHomotopy {
    pub fn new(system: EmbeddedSystem) -> Result<Self, EmbedError> {
        if system.level() == 0 {
            return Err(EmbedError::LevelOutOfRange {
                level: 0,
                n: system.n(),
            });
        }
        Ok(CascadeHomotopy { system })
    }

    pub fn system(&self) -> &EmbeddedSystem {
        &self.system
    }
}

impl Homotopy for CascadeHomotopy {
    fn dim(&self) -> usize {
        self.system.dim()
    }

    fn evaluate_with_jacobian(&self, x: &[C64], s: f64) -> (Vec<C64>, Matrix) {
        let (t, _) = eta_detour(self.system.params.eta, s);
        cascade_rows(
            &self.system.base,
            &self.system.params,
            self.system.level,
            x,
            t,
            true,
        )
    }

    fn ds(&self, x: &[C64], s: f64) -> Vec<C64> {
        let (_, dt) = eta_detour(self.system.params.eta, s);
        cascade_dt(&self.system.base, &self.system.params, self.system.level, x)
            .into_iter()
            .map(|v| v * dt)
            .collect()
    }

    /// At the end of the path `z_i` is pinned to zero; the remaining slacks
    /// decide whether an endpoint lies on a component.
    fn slack_indices(&self) -> Range<usize> {
        let n = self.system.n();
        n..n + self.system.level - 1
    }
}

/// `γ·s·g(x) + (1 − s)·E(x)`, from start roots at `s = 1` to `E` at `s = 0`.
#[derive(Debug, Clone)]
pub struct StartHomotopy {
    target: EmbeddedSystem,
    start: StartSystem,
    gamma: C64,
}

impl StartHomotopy {
    pub fn new(target: EmbeddedSystem, start: StartSystem, gamma: C64) -> Result<Self, EmbedError> {
        if start.dim() != target.dim() {
            return Err(EmbedError::DimensionMismatch {
                expected: target.dim(),
                got: start.dim(),
            });
        }
        Ok(StartHomotopy {
            target,
            start,
            gamma,
        })
    }

    pub fn target(&self) -> &EmbeddedSystem {
        &self.target
    }

    pub fn start(&self) -> &StartSystem {
        &self.start
    }
}

/// Evaluates the start homotopy at real `t`.
pub fn start_homotopy_eval(
    target: &EmbeddedSystem,
    g: &StartSystem,
    gamma: C64,
    point: &[C64],
    t: f64,
) -> Result<Vec<C64>, EmbedError> {
    if g.dim() != target.dim() {
        return Err(EmbedError::DimensionMismatch {
            expected: target.dim(),
            got: g.dim(),
        });
    }
    let tv = target.evaluate(point)?;
    Ok(g.evaluate(point)
        .iter()
        .zip(&tv)
        .map(|(gv, fv)| gamma * t * gv + (1.0 - t) * fv)
        .collect())
}

impl Homotopy for StartHomotopy {
    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn evaluate_with_jacobian(&self, x: &[C64], s: f64) -> (Vec<C64>, Matrix) {
        let (fv, fj) = self
            .target
            .evaluate_with_jacobian(x)
            .expect("tracker keeps dimensions fixed");
        let gv = self.start.evaluate(x);
        let gj = self.start.jacobian(x);
        let a = self.gamma * s;
        let b = 1.0 - s;
        let vals = gv.iter().zip(&fv).map(|(g, f)| a * g + b * f).collect();
        let mut jac = fj;
        for i in 0..jac.rows() {
            for j in 0..jac.cols() {
                jac[(i, j)] = a * gj[(i, j)] + b * jac[(i, j)];
            }
        }
        (vals, jac)
    }

    fn ds(&self, x: &[C64], _s: f64) -> Vec<C64> {
        let fv = self
            .target
            .evaluate(x)
            .expect("tracker keeps dimensions fixed");
        self.start
            .evaluate(x)
            .iter()
            .zip(&fv)
            .map(|(g, f)| self.gamma * g - f)
            .collect()
    }

    fn slack_indices(&self) -> Range<usize> {
        self.target.slack_range()
    }
}
