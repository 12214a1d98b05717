//! Dense complex linear algebra and seeded random constants.
//!
//! Everything here works in double precision. Matrices are small (the
//! Jacobians of embedded systems), so a row-major `Vec` with partial
//! pivoting LU is all the path tracker needs.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

pub type C64 = Complex64;

/// Relative pivot threshold: a pivot below `PIVOT_TOL * max|column|` flags
/// the factorization as singular.
pub const PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular to working precision (column {column})")]
    SingularMatrix { column: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Max-modulus norm of a complex vector.
pub fn norm_inf(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn norm_1(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).sum()
}

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix {
            rows: r,
            cols,
            data,
        }
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[C64]) -> Result<Vec<C64>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Induced infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| norm_1(self.row(i)))
            .fold(0.0, f64::max)
    }

    /// Induced 1-norm (max absolute column sum).
    pub fn norm_1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        norm_inf(&self.data)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Packed LU factors with the row permutation: `P·A = L·U`, `L` unit lower.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lu: Matrix,
    /// `perm[k]` is the row of the original matrix that ended up in row `k`.
    perm: Vec<usize>,
    singular_column: Option<usize>,
    norm_inf: f64,
}

impl LuFactors {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_singular(&self) -> bool {
        self.singular_column.is_some()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn lower(&self) -> Matrix {
        let mut l = Matrix::identity(self.n);
        for i in 0..self.n {
            for j in 0..i {
                l[(i, j)] = self.lu[(i, j)];
            }
        }
        l
    }

    pub fn upper(&self) -> Matrix {
        let mut u = Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in i..self.n {
                u[(i, j)] = self.lu[(i, j)];
            }
        }
        u
    }

    fn check(&self, b: &[C64]) -> Result<(), LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n,
                got: b.len(),
            });
        }
        match self.singular_column {
            Some(column) => Err(LinalgError::SingularMatrix { column }),
            None => Ok(()),
        }
    }

    /// Solves `A·x = b`.
    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>, LinalgError> {
        self.check(b)?;
        let n = self.n;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        Ok(x)
    }

    /// Solves `A^H·x = b` (conjugate transpose).
    #[allow(clippy::needless_range_loop)]
    pub fn solve_adjoint(&self, b: &[C64]) -> Result<Vec<C64>, LinalgError> {
        self.check(b)?;
        let n = self.n;
        // A^H = U^H L^H P, so solve U^H y = b, L^H w = y, x = P^T w.
        let mut y = b.to_vec();
        for i in 0..n {
            let mut acc = y[i];
            for j in 0..i {
                acc -= self.lu[(j, i)].conj() * y[j];
            }
            y[i] = acc / self.lu[(i, i)].conj();
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in i + 1..n {
                acc -= self.lu[(j, i)].conj() * y[j];
            }
            y[i] = acc;
        }
        let mut x = vec![C64::new(0.0, 0.0); n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        Ok(x)
    }
}

/// LU factorization with partial pivoting.
///
/// A column whose best remaining pivot is below `PIVOT_TOL` times the
/// largest entry of that column in the original matrix marks the factors as
/// singular. Elimination continues past it, so the factors are still
/// returned; solves on them report [`LinalgError::SingularMatrix`].
pub fn lu_factor(m: &Matrix) -> Result<LuFactors, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let n = m.rows();
    let col_scale: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|i| m[(i, j)].norm()).fold(0.0, f64::max))
        .collect();
    let mut lu = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut singular_column = None;

    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, lu[(i, k)].norm()))
            .fold(
                (k, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if pmax == 0.0 || pmax < PIVOT_TOL * col_scale[k] {
            singular_column.get_or_insert(k);
            continue;
        }
        if p != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
            perm.swap(k, p);
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let factor = lu[(i, k)] / pivot;
            lu[(i, k)] = factor;
            if factor == C64::new(0.0, 0.0) {
                continue;
            }
            for j in k + 1..n {
                let u = lu[(k, j)];
                lu[(i, j)] -= factor * u;
            }
        }
    }

    Ok(LuFactors {
        n,
        lu,
        perm,
        singular_column,
        norm_inf: m.norm_inf(),
    })
}

pub fn lu_solve(f: &LuFactors, b: &[C64]) -> Result<Vec<C64>, LinalgError> {
    f.solve(b)
}

/// Factor and solve in one go.
pub fn solve(a: &Matrix, b: &[C64]) -> Result<Vec<C64>, LinalgError> {
    lu_factor(a)?.solve(b)
}

fn unit_sign(z: C64) -> C64 {
    let r = z.norm();
    if r == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        z / r
    }
}

/// Estimates the infinity-norm condition number `‖A‖∞·‖A⁻¹‖∞`.
///
/// `‖A⁻¹‖∞ = ‖A⁻ᴴ‖₁` is estimated with Hager's method in Higham's complex
/// form, plus Higham's alternating-sign safeguard. Returns `f64::INFINITY`
/// for singular factors.
pub fn condition_estimate(f: &LuFactors) -> f64 {
    if f.is_singular() {
        return f64::INFINITY;
    }
    let n = f.n;
    if n == 0 {
        return 1.0;
    }
    // B = A^{-H}: B·v is solve_adjoint, B^H·v is solve.
    let apply = |v: &[C64]| f.solve_adjoint(v);
    let apply_h = |v: &[C64]| f.solve(v);

    let mut x = vec![C64::new(1.0 / n as f64, 0.0); n];
    let mut estimate = 0.0;
    let mut last_j = usize::MAX;
    for iter in 0..5 {
        let Ok(y) = apply(&x) else {
            return f64::INFINITY;
        };
        let y_norm = norm_1(&y);
        if iter > 0 && y_norm <= estimate {
            break;
        }
        estimate = y_norm;
        let xi: Vec<C64> = y.iter().map(|&v| unit_sign(v)).collect();
        let Ok(z) = apply_h(&xi) else {
            return f64::INFINITY;
        };
        let (j, zmax) =
            z.iter()
                .enumerate()
                .map(|(i, v)| (i, v.norm()))
                .fold(
                    (0, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
        if zmax <= ztx || j == last_j {
            break;
        }
        last_j = j;
        x = vec![C64::new(0.0, 0.0); n];
        x[j] = C64::new(1.0, 0.0);
    }

    // Alternating-sign test vector guards against the rare cases where the
    // iteration stalls at a local maximum.
    let alt: Vec<C64> = (0..n)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            C64::new(sign * (1.0 + i as f64 / (n.max(2) - 1) as f64), 0.0)
        })
        .collect();
    if let Ok(w) = apply(&alt) {
        let alt_est = 2.0 * norm_1(&w) / (3.0 * n as f64);
        estimate = f64::max(estimate, alt_est);
    }

    f.norm_inf * estimate
}

/// Deterministic source of random constants.
///
/// Identical seeds produce bit-identical streams. Parallel consumers take a
/// [`RandomSource::child`] stream instead of sharing one source.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha20Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource {
            seed,
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream derived from this source's seed and `index`.
    pub fn child(&self, index: u64) -> RandomSource {
        RandomSource::new(splitmix64(self.seed ^ splitmix64(index.wrapping_add(1))))
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    pub fn unit_complex(&mut self) -> C64 {
        random_unit_complex(self)
    }
}

/// Draws `exp(iθ)` with θ uniform on `[0, 2π)`.
///
/// Normalizes a rejection-sampled point of the unit disc. Only IEEE-exact
/// operations are involved, so a seed gives the same bits in every build
/// (libm `sin`/`cos` may differ in the last place between call sites).
pub fn random_unit_complex(r: &mut RandomSource) -> C64 {
    loop {
        let u = 2.0 * r.uniform() - 1.0;
        let v = 2.0 * r.uniform() - 1.0;
        let rr = u * u + v * v;
        if (1e-4..=1.0).contains(&rr) {
            let m = rr.sqrt();
            return C64::new(u / m, v / m);
        }
    }
}
