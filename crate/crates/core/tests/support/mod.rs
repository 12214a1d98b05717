//! Randomized property checks shared by the `properties` and `acceptance`
//! test targets. Each check runs at least `cases` generated inputs and
//! returns the first counterexample as an error string.

#![allow(dead_code)]

use std::ops::Range;
use std::sync::Arc;

use homotopy_cascade::cascade::{
    run_cascade, CascadeConfig, LevelStats, SolutionClass, WitnessPoint,
};
use homotopy_cascade::embedding::{embed, sample_parameters, CascadeHomotopy};
use homotopy_cascade::numeric::{norm_inf, Matrix, RandomSource, C64};
use homotopy_cascade::poly::{parse_system, Monomial, Polynomial, PolynomialSystem};
use homotopy_cascade::report::RunReport;
use homotopy_cascade::startsys::StartSystem;
use homotopy_cascade::tracker::{predict, Homotopy};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub const LINE_AND_POINT: &str = include_str!("../../data/line_and_point.sys");
pub const CYCLIC4: &str = include_str!("../../data/cyclic4.sys");
pub const TWO_LINES: &str = include_str!("../../data/two_lines.sys");

pub fn line_and_point() -> PolynomialSystem {
    parse_system(LINE_AND_POINT).unwrap()
}

pub fn check<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

pub fn complex(range: f64) -> impl Strategy<Value = C64> {
    (-range..range, -range..range).prop_map(|(re, im)| C64::new(re, im))
}

pub fn point(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec(complex(1.5), n)
}

pub fn polynomial(n: usize, max_exp: u32) -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((complex(2.0), prop::collection::vec(0..=max_exp, n)), 1..6)
        .prop_map(move |terms| {
            Polynomial::from_terms(n, terms.into_iter().map(|(c, e)| (c, Monomial(e))))
        })
        .prop_filter("nonzero", |p| !p.is_zero())
}

pub fn system(n: Range<usize>, max_exp: u32) -> impl Strategy<Value = PolynomialSystem> {
    n.prop_flat_map(move |n| prop::collection::vec(polynomial(n, max_exp), n))
        .prop_map(|polys| {
            let n = polys.len();
            PolynomialSystem::new(PolynomialSystem::default_names(n), polys)
        })
}

/// Square systems in two variables, half of them sharing a random linear
/// factor so that a curve sits in the solution set.
pub fn small_system() -> impl Strategy<Value = PolynomialSystem> {
    (
        prop::collection::vec(polynomial(2, 1), 2),
        prop::collection::vec(complex(1.0), 3),
        any::<bool>(),
    )
        .prop_map(|(polys, line, shared)| {
            let factor = Polynomial::from_terms(
                2,
                [
                    (line[0], Monomial(vec![0, 0])),
                    (line[1], Monomial(vec![1, 0])),
                    (line[2], Monomial(vec![0, 1])),
                ],
            );
            let polys = if shared {
                polys.iter().map(|p| p.mul(&factor)).collect()
            } else {
                polys
            };
            PolynomialSystem::new(PolynomialSystem::default_names(2), polys)
        })
        .prop_filter("no zero rows", |f| f.polys().iter().all(|p| !p.is_zero()))
}

const FD_STEP: f64 = 1e-6;

/// Central differences along each real coordinate direction; for
/// holomorphic maps this is the complex derivative.
fn fd_jacobian(eval: impl Fn(&[C64]) -> Vec<C64>, x: &[C64], rows: usize) -> Matrix {
    let mut jac = Matrix::zeros(rows, x.len());
    for j in 0..x.len() {
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        plus[j] += FD_STEP;
        minus[j] -= FD_STEP;
        let (fp, fm) = (eval(&plus), eval(&minus));
        for k in 0..rows {
            jac[(k, j)] = (fp[k] - fm[k]) / (2.0 * FD_STEP);
        }
    }
    jac
}

fn close_matrices(a: &Matrix, b: &Matrix) -> Result<(), TestCaseError> {
    let scale = a.max_abs().max(1.0);
    for r in 0..a.rows() {
        for c in 0..a.cols() {
            let d = (a[(r, c)] - b[(r, c)]).norm();
            prop_assert!(
                d <= 1e-6 * scale,
                "entry ({r},{c}): {} vs {}",
                a[(r, c)],
                b[(r, c)]
            );
        }
    }
    Ok(())
}

pub fn poly_jacobian_matches_fd(cases: u32) -> Result<(), String> {
    let strategy = system(1..5, 4).prop_flat_map(|f| {
        let n = f.n_vars();
        (Just(f), point(n))
    });
    check(cases, strategy, |(f, x)| {
        let exact = f.jacobian(&x).unwrap();
        let fd = fd_jacobian(|y| f.evaluate(y).unwrap(), &x, f.n_polys());
        close_matrices(&exact, &fd)
    })
}

pub fn embedding_jacobian_matches_fd(cases: u32) -> Result<(), String> {
    let strategy = system(1..4, 3).prop_flat_map(|f| {
        let n = f.n_vars();
        (Just(f), 0..=n, any::<u64>(), point(2 * n), 0.0..1.0f64)
    });
    check(cases, strategy, |(f, level, seed, x, s)| {
        let n = f.n_vars();
        let params = Arc::new(sample_parameters(n, &mut RandomSource::new(seed)));
        let e = embed(Arc::new(f), params, level).unwrap();
        let x = &x[..n + level];
        let exact = e.jacobian(x).unwrap();
        let fd = fd_jacobian(|y| e.evaluate(y).unwrap(), x, e.dim());
        close_matrices(&exact, &fd)?;

        if level > 0 {
            let h = CascadeHomotopy::new(e).unwrap();
            let (_, exact) = h.evaluate_with_jacobian(x, s);
            let fd = fd_jacobian(|y| h.evaluate(y, s), x, h.dim());
            close_matrices(&exact, &fd)?;
            // derivative in the path parameter
            let ds = h.ds(x, s);
            let (a, b) = (h.evaluate(x, s + FD_STEP), h.evaluate(x, s - FD_STEP));
            for k in 0..ds.len() {
                let fd = (a[k] - b[k]) / (2.0 * FD_STEP);
                prop_assert!((fd - ds[k]).norm() <= 1e-5 * ds[k].norm().max(1.0));
            }
        }
        Ok(())
    })
}

pub fn start_roots_are_exact(cases: u32) -> Result<(), String> {
    let strategy = prop::collection::vec((1u32..=5, complex(1.0)), 1..5)
        .prop_filter("nonzero constants", |v| {
            v.iter().all(|(_, c)| c.norm() > 1e-3)
        });
    check(cases, strategy, |entries| {
        let (degrees, constants): (Vec<u32>, Vec<C64>) = entries.into_iter().unzip();
        let g = StartSystem::new(degrees.clone(), constants);
        let roots: Vec<Vec<C64>> = g.roots().collect();
        let expected: u128 = degrees.iter().map(|&d| u128::from(d)).product();
        prop_assert_eq!(roots.len() as u128, expected);
        prop_assert_eq!(g.root_count(), expected);
        for r in &roots {
            prop_assert!(norm_inf(&g.evaluate(r)) < 1e-12);
        }
        for a in 0..roots.len() {
            for b in a + 1..roots.len() {
                let d = roots[a]
                    .iter()
                    .zip(&roots[b])
                    .map(|(p, q)| (p - q).norm())
                    .fold(0.0, f64::max);
                prop_assert!(d > 1e-6, "roots {a} and {b} coincide");
            }
        }
        Ok(())
    })
}

fn conserved(row: &LevelStats) -> bool {
    row.on_component + row.slack_nonzero + row.diverged + row.singular + row.failed == row.paths
}

pub fn conservation_and_recycling(cases: u32) -> Result<(), String> {
    check(cases, (small_system(), any::<u64>()), |(f, seed)| {
        let cfg = CascadeConfig {
            seed,
            ..CascadeConfig::default()
        };
        let out = run_cascade(&f, &cfg).unwrap();
        prop_assert_eq!(out.stats.len(), out.top_level + 1);
        for row in &out.stats {
            prop_assert!(conserved(row), "{:?}", row);
        }
        for pair in out.stats.windows(2) {
            prop_assert_eq!(pair[1].paths, pair[0].slack_nonzero);
        }
        for pair in out.levels.windows(2) {
            let n = f.n_vars();
            let recycled: Vec<Vec<C64>> = pair[0]
                .results
                .iter()
                .zip(&pair[0].classes)
                .filter(|(_, c)| **c == SolutionClass::NonsingularSlack)
                .map(|(r, _)| r.endpoint[..n + pair[0].level].to_vec())
                .collect();
            prop_assert_eq!(&pair[1].starts, &recycled);
        }
        Ok(())
    })
}

pub fn top_level_purity(cases: u32) -> Result<(), String> {
    check(cases, (system(1..3, 2), any::<u64>()), |(f, seed)| {
        let n = f.n_vars();
        let cfg = CascadeConfig {
            seed,
            top_level: Some(n),
            ..CascadeConfig::default()
        };
        let out = run_cascade(&f, &cfg).unwrap();
        prop_assert_eq!(out.stats[0].level, n);
        prop_assert_eq!(out.stats[0].on_component, 0);
        Ok(())
    })
}

/// `H(x, s) = x − p(s)` with a cubic `p` per coordinate.
pub struct CubicPath {
    pub coeffs: Vec<[C64; 4]>,
}

impl CubicPath {
    pub fn at(&self, s: f64) -> Vec<C64> {
        self.coeffs
            .iter()
            .map(|c| c[0] + c[1] * s + c[2] * s * s + c[3] * s * s * s)
            .collect()
    }
}

impl Homotopy for CubicPath {
    fn dim(&self) -> usize {
        self.coeffs.len()
    }

    fn evaluate_with_jacobian(&self, x: &[C64], s: f64) -> (Vec<C64>, Matrix) {
        let p = self.at(s);
        let v = x.iter().zip(&p).map(|(a, b)| a - b).collect();
        (v, Matrix::identity(self.dim()))
    }

    fn ds(&self, _x: &[C64], s: f64) -> Vec<C64> {
        self.coeffs
            .iter()
            .map(|c| -(c[1] + c[2] * (2.0 * s) + c[3] * (3.0 * s * s)))
            .collect()
    }
}

pub fn euler_second_order(cases: u32) -> Result<(), String> {
    let coeffs = prop::collection::vec(prop::array::uniform4(complex(2.0)), 1..4);
    check(cases, (coeffs, 0.3..0.9f64), |(coeffs, s)| {
        let h = CubicPath { coeffs };
        // the second derivative term must dominate at the probed steps
        prop_assume!(h
            .coeffs
            .iter()
            .all(|c| (c[2] + c[3] * (3.0 * s)).norm() > 0.5));
        let error = |step: f64| {
            let guess = predict(&h, &[(s, h.at(s))], step).unwrap();
            let exact = h.at(s - step);
            norm_inf(
                &guess
                    .iter()
                    .zip(&exact)
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>(),
            )
        };
        let ratio = error(1e-3) / error(5e-4);
        prop_assert!(
            (ratio - 4.0).abs() < 0.1,
            "halving the step scaled the error by {ratio}"
        );
        Ok(())
    })
}

fn finite_or_inf() -> impl Strategy<Value = f64> {
    prop_oneof![
        prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO,
        Just(f64::INFINITY),
    ]
}

fn witness_point(n: usize) -> impl Strategy<Value = WitnessPoint> {
    let any_complex = (
        prop::num::f64::NORMAL | prop::num::f64::ZERO,
        prop::num::f64::NORMAL | prop::num::f64::ZERO,
    )
        .prop_map(|(re, im)| C64::new(re, im));
    (
        prop::collection::vec(any_complex, n),
        1usize..5,
        prop::num::f64::POSITIVE | prop::num::f64::ZERO,
        finite_or_inf(),
    )
        .prop_map(|(point, multiplicity, residual, condition)| WitnessPoint {
            point,
            multiplicity,
            residual,
            condition,
        })
}

pub fn base_report() -> RunReport {
    let cfg = CascadeConfig::default();
    RunReport::from_cascade(&run_cascade(&line_and_point(), &cfg).unwrap(), &cfg)
}

pub fn report_round_trip(cases: u32) -> Result<(), String> {
    let base = base_report();
    let strategy = (
        prop::collection::vec(witness_point(2), 0..4),
        prop::collection::vec(witness_point(2), 0..4),
        any::<u64>(),
        prop::num::f64::POSITIVE,
    );
    check(cases, strategy, |(isolated, witnesses, seed, wall)| {
        let mut report = base.clone();
        report.isolated_solutions = isolated;
        report.supersets[0].points = witnesses;
        report.seed = seed;
        report.stats[0].wall_ms = wall;
        let json = report.to_json();
        let back = RunReport::from_json(&json).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(&back, &report);
        prop_assert_eq!(back.to_json(), json);
        Ok(())
    })
}

/// Report JSON with timings zeroed.
pub fn untimed(mut report: RunReport) -> String {
    for row in &mut report.stats {
        row.wall_ms = 0.0;
    }
    report.totals.wall_ms = 0.0;
    report.to_json()
}

pub fn seed_determinism(cases: u32) -> Result<(), String> {
    let f = line_and_point();
    let pools: Vec<rayon::ThreadPool> = [1, 3]
        .iter()
        .map(|&n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .unwrap()
        })
        .collect();
    check(cases, any::<u64>(), |seed| {
        let cfg = CascadeConfig {
            seed,
            ..CascadeConfig::default()
        };
        let runs: Vec<String> = pools
            .iter()
            .map(|pool| {
                untimed(RunReport::from_cascade(
                    &pool.install(|| run_cascade(&f, &cfg)).unwrap(),
                    &cfg,
                ))
            })
            .collect();
        prop_assert_eq!(&runs[0], &runs[1]);
        Ok(())
    })
}
