//! The cascade: solve the top embedded system from a total-degree start
//! system, then remove one slack variable per level, sorting endpoints into
//! witness candidates (slacks zero) and nonsingular solutions that seed the
//! next level.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{
    embed, sample_parameters, CascadeHomotopy, EmbedError, Hyperplane, ParameterSample,
    StartHomotopy,
};
use crate::numeric::{condition_estimate, lu_factor, norm_inf, Matrix, RandomSource, C64};
use crate::poly::PolynomialSystem;
use crate::startsys::{build_embedded_start_system, StartSystemError};
use crate::tracker::{track_path, ConfigError, Homotopy, PathResult, PathStatus, TrackerConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CascadeError {
    #[error("system is not square: {polys} polynomials in {vars} variables")]
    NonSquareSystem { polys: usize, vars: usize },
    #[error("polynomial {index} is identically zero")]
    ZeroPolynomial { index: usize },
    #[error("top level {top} exceeds the number of variables {n}")]
    TopLevelOutOfRange { top: usize, n: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl From<StartSystemError> for CascadeError {
    fn from(e: StartSystemError) -> Self {
        match e {
            StartSystemError::ZeroPolynomial { index } => CascadeError::ZeroPolynomial { index },
            StartSystemError::NonSquareSystem { polys, vars } => {
                CascadeError::NonSquareSystem { polys, vars }
            }
        }
    }
}

impl From<EmbedError> for CascadeError {
    fn from(e: EmbedError) -> Self {
        match e {
            EmbedError::NonSquareSystem { polys, vars } => {
                CascadeError::NonSquareSystem { polys, vars }
            }
            EmbedError::LevelOutOfRange { level, n } => {
                CascadeError::TopLevelOutOfRange { top: level, n }
            }
            EmbedError::DimensionMismatch { .. } => {
                unreachable!("cascade builds matching dimensions")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CascadeConfig {
    /// Slack vectors at or below this size count as zero.
    pub tol_z: f64,
    /// Largest condition number accepted as nonsingular.
    pub cond_max: f64,
    /// Endpoints closer than this (max norm) are identified.
    pub cluster_tol: f64,
    /// Residual bound for classification and witness verification.
    pub residual_tol: f64,
    /// Level of the first embedded system; `None` means `n − 1`.
    pub top_level: Option<usize>,
    pub seed: u64,
    pub tracker: TrackerConfig,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig {
            tol_z: 1e-8,
            cond_max: 1e8,
            cluster_tol: 1e-6,
            residual_tol: 1e-8,
            top_level: None,
            seed: 0,
            tracker: TrackerConfig::default(),
        }
    }
}

impl CascadeConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.tracker.validate()?;
        let positive = [
            self.tol_z,
            self.cond_max,
            self.cluster_tol,
            self.residual_tol,
        ];
        if !positive.iter().all(|v| *v > 0.0) {
            return Err(ConfigError::Invalid(
                "tol_z, cond_max, cluster_tol and residual_tol must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolutionClass {
    /// Slack variables vanish: a witness candidate.
    OnComponent,
    /// Slacks nonzero and well conditioned. At level 0 there are no slacks
    /// left and this class marks an isolated nonsingular solution.
    NonsingularSlack,
    Diverged,
    /// Finite but ill-conditioned with nonzero slacks, or singular at level 0.
    SingularUnresolved,
    /// The tracker gave up on the path.
    Failed,
}

pub fn classify_endpoint(r: &PathResult, level: usize, cfg: &CascadeConfig) -> SolutionClass {
    match r.status {
        PathStatus::Diverged => SolutionClass::Diverged,
        PathStatus::Failed => SolutionClass::Failed,
        PathStatus::Converged => {
            if level > 0 && r.slack_norm <= cfg.tol_z {
                SolutionClass::OnComponent
            } else if r.condition <= cfg.cond_max && r.residual <= cfg.residual_tol {
                SolutionClass::NonsingularSlack
            } else {
                SolutionClass::SingularUnresolved
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessPoint {
    /// Coordinates in the original variables.
    pub point: Vec<C64>,
    pub multiplicity: usize,
    pub residual: f64,
    #[serde(with = "crate::report::nonfinite")]
    pub condition: f64,
}

/// `X_i`: witness candidates on the slice `L_1 = … = L_i = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessSuperset {
    pub level: usize,
    pub points: Vec<WitnessPoint>,
    pub slice: Vec<Hyperplane>,
}

impl WitnessSuperset {
    /// Witness count with multiplicities.
    pub fn degree(&self) -> usize {
        self.points.iter().map(|p| p.multiplicity).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    /// Index of the embedded system whose solutions the row counts.
    pub level: usize,
    pub paths: usize,
    pub on_component: usize,
    pub slack_nonzero: usize,
    pub diverged: usize,
    pub singular: usize,
    pub failed: usize,
    pub wall_ms: f64,
}

impl LevelStats {
    fn tally(level: usize, classes: &[SolutionClass], wall_ms: f64) -> Self {
        let count = |c: SolutionClass| classes.iter().filter(|k| **k == c).count();
        LevelStats {
            level,
            paths: classes.len(),
            on_component: count(SolutionClass::OnComponent),
            slack_nonzero: count(SolutionClass::NonsingularSlack),
            diverged: count(SolutionClass::Diverged),
            singular: count(SolutionClass::SingularUnresolved),
            failed: count(SolutionClass::Failed),
            wall_ms,
        }
    }

    pub fn is_conserved(&self) -> bool {
        self.on_component + self.slack_nonzero + self.diverged + self.singular + self.failed
            == self.paths
    }
}

/// Column sums over the rows.
pub fn totals(rows: &[LevelStats]) -> LevelStats {
    rows.iter().fold(
        LevelStats {
            level: 0,
            paths: 0,
            on_component: 0,
            slack_nonzero: 0,
            diverged: 0,
            singular: 0,
            failed: 0,
            wall_ms: 0.0,
        },
        |acc, r| LevelStats {
            level: 0,
            paths: acc.paths + r.paths,
            on_component: acc.on_component + r.on_component,
            slack_nonzero: acc.slack_nonzero + r.slack_nonzero,
            diverged: acc.diverged + r.diverged,
            singular: acc.singular + r.singular,
            failed: acc.failed + r.failed,
            wall_ms: acc.wall_ms + r.wall_ms,
        },
    )
}

/// Every tracked path of one level, in start order.
#[derive(Debug, Clone)]
pub struct LevelRecord {
    pub level: usize,
    pub starts: Vec<Vec<C64>>,
    pub results: Vec<PathResult>,
    pub classes: Vec<SolutionClass>,
}

#[derive(Debug, Clone)]
pub struct CascadeOutput {
    pub system: Arc<PolynomialSystem>,
    pub top_level: usize,
    /// Verified, clustered witness candidates, highest level first. The
    /// level-0 entry holds every finite endpoint of the last homotopy.
    pub supersets: Vec<WitnessSuperset>,
    pub isolated_solutions: Vec<WitnessPoint>,
    pub singular_solutions: Vec<WitnessPoint>,
    pub stats: Vec<LevelStats>,
    pub top_dimension: Option<usize>,
    pub parameters: ParameterSample,
    pub levels: Vec<LevelRecord>,
}

impl CascadeOutput {
    pub fn superset(&self, level: usize) -> Option<&WitnessSuperset> {
        self.supersets.iter().find(|w| w.level == level)
    }

    pub fn record(&self, level: usize) -> Option<&LevelRecord> {
        self.levels.iter().find(|r| r.level == level)
    }

    pub fn total_paths(&self) -> usize {
        self.stats.iter().map(|r| r.paths).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub representative: usize,
    pub members: Vec<usize>,
}

impl Cluster {
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max)
}

/// Single-linkage clustering at `cluster_tol`. Each cluster's representative
/// is its member with the smallest residual; clusters come out in order of
/// their first member.
pub fn cluster_witnesses(
    points: &[Vec<C64>],
    residuals: &[f64],
    cfg: &CascadeConfig,
) -> Vec<Cluster> {
    assert_eq!(points.len(), residuals.len());
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for a in 0..n {
        for b in a + 1..n {
            if distance(&points[a], &points[b]) < cfg.cluster_tol {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = clusters.len();
            clusters.push(Cluster {
                representative: i,
                members: Vec::new(),
            });
        }
        let c = &mut clusters[slot[root]];
        c.members.push(i);
        if residuals[i] < residuals[c.representative] {
            c.representative = i;
        }
    }
    clusters
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessCheck {
    /// `max(‖f(w)‖∞, |L_j(w)|)` at the stored point.
    pub residual: f64,
    pub refined: Vec<C64>,
    pub refined_residual: f64,
    pub displacement: f64,
    #[serde(with = "crate::report::nonfinite")]
    pub condition: f64,
    pub pass: bool,
}

fn appended_residual(w: &[C64], f: &PolynomialSystem, slice: &[Hyperplane]) -> (Vec<C64>, Matrix) {
    let (mut vals, jf) = f
        .evaluate_with_jacobian(w)
        .expect("witness dimension matches the system");
    let n = w.len();
    let mut jac = Matrix::zeros(vals.len() + slice.len(), n);
    for k in 0..jf.rows() {
        jac.row_mut(k).copy_from_slice(jf.row(k));
    }
    for (j, h) in slice.iter().enumerate() {
        vals.push(h.evaluate(w));
        jac.row_mut(jf.rows() + j).copy_from_slice(&h.coefficients);
    }
    (vals, jac)
}

/// Gauss–Newton step on the stacked system; `None` when the normal
/// equations are singular.
fn gauss_newton_step(vals: &[C64], jac: &Matrix) -> Option<(Vec<C64>, f64)> {
    let n = jac.cols();
    let mut normal = Matrix::zeros(n, n);
    let mut rhs = vec![C64::new(0.0, 0.0); n];
    for (r, v) in vals.iter().enumerate() {
        let row = jac.row(r);
        for a in 0..n {
            let ca = row[a].conj();
            rhs[a] += ca * v;
            for b in 0..n {
                normal[(a, b)] += ca * row[b];
            }
        }
    }
    let lu = lu_factor(&normal).ok()?;
    let step = lu.solve(&rhs).ok()?;
    Some((step, condition_estimate(&lu).sqrt()))
}

/// Checks a stored witness against `f` and the slice it was computed on.
///
/// The pass/fail verdict is on the stored point. A few Gauss–Newton steps on
/// the stacked system `(f, L_1..L_i)` are also run and reported so callers
/// can see how far the point sits from the nearest numerical solution.
pub fn verify_witness(
    w: &[C64],
    f: &PolynomialSystem,
    slice: &[Hyperplane],
    cfg: &CascadeConfig,
) -> WitnessCheck {
    let (vals, mut jac) = appended_residual(w, f, slice);
    let residual = norm_inf(&vals);
    let mut x = w.to_vec();
    let mut current = vals;
    let mut condition = f64::INFINITY;
    for _ in 0..cfg.tracker.endpoint_refine_iters {
        let Some((step, cond)) = gauss_newton_step(&current, &jac) else {
            condition = f64::INFINITY;
            break;
        };
        condition = cond;
        let mut trial = x.clone();
        for (xi, di) in trial.iter_mut().zip(&step) {
            *xi -= di;
        }
        let (v, j) = appended_residual(&trial, f, slice);
        let (next, now) = (norm_inf(&v), norm_inf(&current));
        if next.is_nan() || next > now {
            break;
        }
        x = trial;
        current = v;
        jac = j;
        if norm_inf(&step) < cfg.tracker.newton_tol * 1e-3 {
            break;
        }
    }
    WitnessCheck {
        residual,
        displacement: distance(&x, w),
        refined_residual: norm_inf(&current),
        refined: x,
        condition,
        pass: residual <= cfg.residual_tol,
    }
}

fn check_system(f: &PolynomialSystem) -> Result<(), CascadeError> {
    if !f.is_square() {
        return Err(CascadeError::NonSquareSystem {
            polys: f.n_polys(),
            vars: f.n_vars(),
        });
    }
    if let Some(index) = f.polys().iter().position(|p| p.is_zero()) {
        return Err(CascadeError::ZeroPolynomial { index });
    }
    Ok(())
}

/// Tracks all starts in parallel; results come back in start order.
fn track_all<H: Homotopy>(h: &H, starts: &[Vec<C64>], cfg: &TrackerConfig) -> Vec<PathResult> {
    starts.par_iter().map(|s| track_path(h, s, cfg)).collect()
}

/// Seed streams: parameters, start-system constants.
const PARAMETER_STREAM: u64 = 0;
const START_STREAM: u64 = 1;

pub fn draw_parameters(n: usize, seed: u64) -> ParameterSample {
    let root = RandomSource::new(seed);
    let mut sample = sample_parameters(n, &mut root.child(PARAMETER_STREAM));
    sample.seed = seed;
    sample
}

/// Plain total-degree homotopy to `f` (no slack variables).
#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub record: LevelRecord,
    pub stats: LevelStats,
    pub parameters: ParameterSample,
    pub isolated_solutions: Vec<WitnessPoint>,
    pub singular_solutions: Vec<WitnessPoint>,
}

fn solve_level(
    f: &Arc<PolynomialSystem>,
    params: &Arc<ParameterSample>,
    level: usize,
    cfg: &CascadeConfig,
) -> Result<(LevelRecord, f64), CascadeError> {
    let started = Instant::now();
    let target = embed(f.clone(), params.clone(), level)?;
    let mut rng = RandomSource::new(cfg.seed).child(START_STREAM);
    let g = build_embedded_start_system(f, level, &mut rng)?;
    let starts: Vec<Vec<C64>> = g.roots().collect();
    let h = StartHomotopy::new(target, g, params.gamma)?;
    let results = track_all(&h, &starts, &cfg.tracker);
    let classes = results
        .iter()
        .map(|r| classify_endpoint(r, level, cfg))
        .collect();
    Ok((
        LevelRecord {
            level,
            starts,
            results,
            classes,
        },
        started.elapsed().as_secs_f64() * 1e3,
    ))
}

fn points_of_class(record: &LevelRecord, class: SolutionClass, n: usize) -> Vec<WitnessPoint> {
    record
        .results
        .iter()
        .zip(&record.classes)
        .filter(|(_, c)| **c == class)
        .map(|(r, _)| WitnessPoint {
            point: r.endpoint[..n].to_vec(),
            multiplicity: 1,
            residual: r.residual,
            condition: r.condition,
        })
        .collect()
}

/// Solves `f = 0` by the total-degree homotopy alone.
pub fn solve_total_degree(
    f: &PolynomialSystem,
    cfg: &CascadeConfig,
) -> Result<SolveOutput, CascadeError> {
    cfg.validate()?;
    check_system(f)?;
    let n = f.n_vars();
    let f = Arc::new(f.clone());
    let params = Arc::new(draw_parameters(n, cfg.seed));
    let (record, wall_ms) = solve_level(&f, &params, 0, cfg)?;
    let stats = LevelStats::tally(0, &record.classes, wall_ms);
    Ok(SolveOutput {
        isolated_solutions: points_of_class(&record, SolutionClass::NonsingularSlack, n),
        singular_solutions: points_of_class(&record, SolutionClass::SingularUnresolved, n),
        record,
        stats,
        parameters: (*params).clone(),
    })
}

/// Clusters the `OnComponent` endpoints of a level and keeps the clusters
/// whose representative verifies against `f` and the slice.
fn witness_superset(
    f: &PolynomialSystem,
    record: &LevelRecord,
    slice: &[Hyperplane],
    cfg: &CascadeConfig,
    include: impl Fn(SolutionClass) -> bool,
) -> WitnessSuperset {
    let n = f.n_vars();
    let picked: Vec<&PathResult> = record
        .results
        .iter()
        .zip(&record.classes)
        .filter(|(_, c)| include(**c))
        .map(|(r, _)| r)
        .collect();
    let points: Vec<Vec<C64>> = picked.iter().map(|r| r.endpoint[..n].to_vec()).collect();
    let residuals: Vec<f64> = picked.iter().map(|r| r.residual).collect();
    let points = cluster_witnesses(&points, &residuals, cfg)
        .into_iter()
        .filter_map(|c| {
            let r = picked[c.representative];
            let x = &r.endpoint[..n];
            verify_witness(x, f, slice, cfg).pass.then(|| WitnessPoint {
                point: x.to_vec(),
                multiplicity: c.multiplicity(),
                residual: r.residual,
                condition: r.condition,
            })
        })
        .collect();
    WitnessSuperset {
        level: record.level,
        points,
        slice: slice.to_vec(),
    }
}

/// Runs the whole cascade on `f`.
pub fn run_cascade(
    f: &PolynomialSystem,
    cfg: &CascadeConfig,
) -> Result<CascadeOutput, CascadeError> {
    cfg.validate()?;
    check_system(f)?;
    let n = f.n_vars();
    let top = cfg.top_level.unwrap_or(n - 1);
    if top > n {
        return Err(CascadeError::TopLevelOutOfRange { top, n });
    }
    let f = Arc::new(f.clone());
    let params = Arc::new(draw_parameters(n, cfg.seed));

    let (first, wall_ms) = solve_level(&f, &params, top, cfg)?;
    let mut stats = vec![LevelStats::tally(top, &first.classes, wall_ms)];
    let mut levels = vec![first];

    for level in (1..=top).rev() {
        let started = Instant::now();
        let previous = levels.last().expect("at least the top level");
        // solutions of E_level with z_level != 0 seed H_level
        let starts: Vec<Vec<C64>> = previous
            .results
            .iter()
            .zip(&previous.classes)
            .filter(|(_, c)| **c == SolutionClass::NonsingularSlack)
            .map(|(r, _)| r.endpoint[..n + level].to_vec())
            .collect();
        let h = CascadeHomotopy::new(embed(f.clone(), params.clone(), level)?)?;
        let results = track_all(&h, &starts, &cfg.tracker);
        let classes: Vec<SolutionClass> = results
            .iter()
            .map(|r| classify_endpoint(r, level - 1, cfg))
            .collect();
        let wall_ms = started.elapsed().as_secs_f64() * 1e3;
        stats.push(LevelStats::tally(level - 1, &classes, wall_ms));
        levels.push(LevelRecord {
            level: level - 1,
            starts,
            results,
            classes,
        });
    }

    let mut supersets = Vec::with_capacity(levels.len());
    for record in &levels {
        let slice = &params.hyperplanes[..record.level];
        let superset = if record.level > 0 {
            witness_superset(&f, record, slice, cfg, |c| c == SolutionClass::OnComponent)
        } else {
            witness_superset(&f, record, slice, cfg, |c| {
                matches!(
                    c,
                    SolutionClass::NonsingularSlack | SolutionClass::SingularUnresolved
                )
            })
        };
        supersets.push(superset);
    }

    let bottom = levels.last().expect("at least one level");
    let isolated_solutions = points_of_class(bottom, SolutionClass::NonsingularSlack, n);
    let singular_solutions = points_of_class(bottom, SolutionClass::SingularUnresolved, n);

    let top_dimension = supersets
        .iter()
        .filter(|w| w.level > 0 && !w.points.is_empty())
        .map(|w| w.level)
        .max()
        .or_else(|| {
            supersets
                .iter()
                .any(|w| w.level == 0 && !w.points.is_empty())
                .then_some(0)
        });

    Ok(CascadeOutput {
        system: f,
        top_level: top,
        supersets,
        isolated_solutions,
        singular_solutions,
        stats,
        top_dimension,
        parameters: (*params).clone(),
        levels,
    })
}

/// Same cascade with an independent parameter sample drawn from `seed`.
pub fn rerun_with_fresh_slice(
    f: &PolynomialSystem,
    cfg: &CascadeConfig,
    seed: u64,
) -> Result<CascadeOutput, CascadeError> {
    run_cascade(
        f,
        &CascadeConfig {
            seed,
            ..cfg.clone()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::c;
    use crate::poly::parse_system;

    fn result(status: PathStatus, slack: f64, condition: f64, residual: f64) -> PathResult {
        PathResult {
            endpoint: vec![c(0.0, 0.0); 3],
            status,
            residual,
            condition,
            slack_norm: slack,
            steps_taken: 0,
            rejected_steps: 0,
            t_reached: 0.0,
        }
    }

    #[test]
    fn classification_rules() {
        let cfg = CascadeConfig::default();
        let conv = PathStatus::Converged;
        assert_eq!(
            classify_endpoint(&result(conv, 0.0, 1e12, 0.0), 1, &cfg),
            SolutionClass::OnComponent
        );
        assert_eq!(
            classify_endpoint(&result(conv, 0.5, f64::INFINITY, 0.0), 1, &cfg),
            SolutionClass::SingularUnresolved
        );
        assert_eq!(
            classify_endpoint(&result(conv, 0.5, 10.0, 1e-14), 1, &cfg),
            SolutionClass::NonsingularSlack
        );
        assert_eq!(
            classify_endpoint(&result(PathStatus::Diverged, 0.0, 1.0, 0.0), 1, &cfg),
            SolutionClass::Diverged
        );
        assert_eq!(
            classify_endpoint(&result(PathStatus::Failed, 0.0, 1.0, 0.0), 2, &cfg),
            SolutionClass::Failed
        );
        // no slacks remain at level 0
        assert_eq!(
            classify_endpoint(&result(conv, 0.0, 10.0, 1e-14), 0, &cfg),
            SolutionClass::NonsingularSlack
        );
        assert_eq!(
            classify_endpoint(&result(conv, 0.0, 1e12, 1e-14), 0, &cfg),
            SolutionClass::SingularUnresolved
        );
    }

    #[test]
    fn clustering() {
        let cfg = CascadeConfig::default();
        let p = vec![c(0.5, 0.5), c(1.0, 0.0)];
        let q = vec![c(1.5, 0.5), c(1.0, 0.0)];
        let clusters = cluster_witnesses(&[p.clone(), q.clone()], &[0.0, 0.0], &cfg);
        assert_eq!(clusters.len(), 2);

        let copies = vec![p.clone(); 5];
        let clusters = cluster_witnesses(&copies, &[3e-12, 1e-12, 2e-12, 5e-12, 4e-12], &cfg);
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].multiplicity(), 5);
        assert_eq!(clusters[0].representative, 1);

        // single linkage chains through an intermediate point
        let a = vec![c(0.0, 0.0)];
        let b = vec![c(0.8e-6, 0.0)];
        let d = vec![c(1.6e-6, 0.0)];
        let clusters = cluster_witnesses(&[a, d, b], &[0.0; 3], &cfg);
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].members, vec![0, 1, 2]);
    }

    #[test]
    fn verify_exact_and_perturbed() {
        let f = parse_system("2\n*\nx1*x2;\nx1^2 - x1*x2;\n").unwrap();
        let slice = vec![Hyperplane {
            constant: c(-1.0, 0.0),
            coefficients: vec![c(0.0, 0.0), c(1.0, 0.0)],
        }];
        let cfg = CascadeConfig::default();
        let exact = verify_witness(&[c(0.0, 0.0), c(1.0, 0.0)], &f, &slice, &cfg);
        assert!(exact.pass);
        assert_eq!(exact.residual, 0.0);
        let off = verify_witness(&[c(1e-3, 0.0), c(1.0, 0.0)], &f, &slice, &cfg);
        assert!(!off.pass);
        assert!(off.refined_residual < off.residual);
    }

    #[test]
    fn rejects_bad_input() {
        let cfg = CascadeConfig::default();
        let f = parse_system("2\n*\nx1 + x2;\n").unwrap();
        assert!(matches!(
            run_cascade(&f, &cfg),
            Err(CascadeError::NonSquareSystem { .. })
        ));
        let f = parse_system("2\n*\nx1 - x1;\nx2;\n").unwrap();
        assert_eq!(
            run_cascade(&f, &cfg).unwrap_err(),
            CascadeError::ZeroPolynomial { index: 0 }
        );
        let f = parse_system("2\n*\nx1;\nx2;\n").unwrap();
        let cfg3 = CascadeConfig {
            top_level: Some(3),
            ..CascadeConfig::default()
        };
        assert!(matches!(
            run_cascade(&f, &cfg3),
            Err(CascadeError::TopLevelOutOfRange { .. })
        ));
    }

    #[test]
    fn totals_are_column_sums() {
        let rows = vec![
            LevelStats::tally(
                1,
                &[SolutionClass::Diverged, SolutionClass::OnComponent],
                1.0,
            ),
            LevelStats::tally(0, &[SolutionClass::NonsingularSlack], 2.0),
        ];
        let t = totals(&rows);
        assert_eq!(
            (t.paths, t.diverged, t.on_component, t.slack_nonzero),
            (3, 1, 1, 1)
        );
        assert!(rows.iter().all(LevelStats::is_conserved));
    }
}
