//! Predictor–corrector path tracking from `s = 1` to `s = 0`.
//!
//! The path parameter is real; any complex detour lives inside the
//! [`Homotopy`] implementation. Steps are predicted along the tangent
//! (Euler), corrected by a few Newton iterations at the new `s`, and
//! accepted or rejected on corrector convergence. Near `s = 0` the tracker
//! stops at `t_endgame` and polishes the endpoint with Newton at `s = 0`.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{condition_estimate, lu_factor, norm_inf, Matrix, C64};

/// A square family `H(x, s) = 0` with `H(·, 1)` the start and `H(·, 0)` the
/// target.
pub trait Homotopy: Sync {
    fn dim(&self) -> usize;

    /// Value and Jacobian with respect to `x`.
    fn evaluate_with_jacobian(&self, x: &[C64], s: f64) -> (Vec<C64>, Matrix);

    fn evaluate(&self, x: &[C64], s: f64) -> Vec<C64> {
        self.evaluate_with_jacobian(x, s).0
    }

    /// `∂H/∂s`.
    fn ds(&self, x: &[C64], s: f64) -> Vec<C64>;

    /// Coordinates whose magnitude at the endpoint is reported as
    /// [`PathResult::slack_norm`].
    fn slack_indices(&self) -> Range<usize> {
        0..0
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackError {
    #[error("Jacobian is singular at s = {s}")]
    SingularJacobian { s: f64 },
    #[error("no accepted point to predict from")]
    EmptyHistory,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid tracker configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub step_initial: f64,
    pub step_min: f64,
    pub step_max: f64,
    pub step_expand: f64,
    pub step_shrink: f64,
    /// Consecutive accepted steps before the step grows.
    pub expand_after: usize,
    pub divergence_threshold: f64,
    pub t_endgame: f64,
    /// Below this `s` a step underflow ends the path with the endgame
    /// checks instead of a failure.
    pub endgame_zone: f64,
    pub endpoint_refine_iters: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            newton_tol: 1e-10,
            max_newton_iters: 4,
            step_initial: 0.05,
            step_min: 1e-12,
            step_max: 0.1,
            step_expand: 2.0,
            step_shrink: 0.5,
            expand_after: 3,
            divergence_threshold: 1e8,
            t_endgame: 1e-8,
            endgame_zone: 1e-4,
            endpoint_refine_iters: 50,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if !(self.step_min > 0.0
            && self.step_min <= self.step_initial
            && self.step_initial <= self.step_max)
        {
            return bad("need 0 < step_min <= step_initial <= step_max");
        }
        if !(self.newton_tol > 0.0 && self.divergence_threshold > 0.0 && self.t_endgame > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0 && self.step_expand >= 1.0) {
            return bad("need 0 < step_shrink < 1 <= step_expand");
        }
        if self.max_newton_iters == 0 || self.t_endgame >= 1.0 {
            return bad("need max_newton_iters >= 1 and t_endgame < 1");
        }
        if !(self.endgame_zone >= self.t_endgame && self.endgame_zone < 1.0) {
            return bad("need t_endgame <= endgame_zone < 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathStatus {
    Converged,
    Diverged,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub endpoint: Vec<C64>,
    pub status: PathStatus,
    pub residual: f64,
    #[serde(with = "crate::report::nonfinite")]
    pub condition: f64,
    pub slack_norm: f64,
    pub steps_taken: usize,
    pub rejected_steps: usize,
    pub t_reached: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub x: Vec<C64>,
    /// `‖H(x)‖∞` at the returned point.
    pub residual: f64,
    /// Corrections that were still above tolerance.
    pub iterations: usize,
    pub converged: bool,
    pub corrections: Vec<f64>,
}

fn tol_for(cfg: &TrackerConfig, x: &[C64]) -> f64 {
    cfg.newton_tol * norm_inf(x).max(1.0)
}

/// Newton iteration on `H(·, s)`.
///
/// Stops as soon as a correction falls below `newton_tol` (scaled by
/// `max(1, ‖x‖∞)`) or after `max_newton_iters` corrections.
pub fn newton_correct<H: Homotopy + ?Sized>(
    h: &H,
    s: f64,
    x: &[C64],
    cfg: &TrackerConfig,
) -> Result<NewtonOutcome, TrackError> {
    let mut x = x.to_vec();
    let mut corrections = Vec::with_capacity(cfg.max_newton_iters);
    for k in 0..cfg.max_newton_iters {
        let (v, jac) = h.evaluate_with_jacobian(&x, s);
        let lu = lu_factor(&jac).map_err(|_| TrackError::SingularJacobian { s })?;
        let dx = lu
            .solve(&v)
            .map_err(|_| TrackError::SingularJacobian { s })?;
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi -= di;
        }
        let size = norm_inf(&dx);
        corrections.push(size);
        if !size.is_finite() {
            break;
        }
        if size < tol_for(cfg, &x) {
            let residual = norm_inf(&h.evaluate(&x, s));
            return Ok(NewtonOutcome {
                x,
                residual,
                iterations: k,
                converged: true,
                corrections,
            });
        }
    }
    let residual = norm_inf(&h.evaluate(&x, s));
    Ok(NewtonOutcome {
        x,
        residual,
        iterations: corrections.len(),
        converged: false,
        corrections,
    })
}

/// Tangent `dx/ds = −J⁻¹ ∂H/∂s`.
pub fn tangent<H: Homotopy + ?Sized>(h: &H, x: &[C64], s: f64) -> Result<Vec<C64>, TrackError> {
    let (_, jac) = h.evaluate_with_jacobian(x, s);
    let rhs: Vec<C64> = h.ds(x, s).into_iter().map(|v| -v).collect();
    lu_factor(&jac)
        .and_then(|lu| lu.solve(&rhs))
        .map_err(|_| TrackError::SingularJacobian { s })
}

/// Predicts the path point at `s − step` from the accepted history
/// (most recent last).
///
/// Uses the Euler tangent; when the Jacobian solve fails and two accepted
/// points are available, falls back to the secant through them.
pub fn predict<H: Homotopy + ?Sized>(
    h: &H,
    history: &[(f64, Vec<C64>)],
    step: f64,
) -> Result<Vec<C64>, TrackError> {
    let (s, x) = history.last().ok_or(TrackError::EmptyHistory)?;
    match tangent(h, x, *s) {
        Ok(dx) => Ok(x.iter().zip(&dx).map(|(xi, di)| xi - di * step).collect()),
        Err(err) => {
            if history.len() < 2 {
                return Err(err);
            }
            let (s_prev, x_prev) = &history[history.len() - 2];
            let ratio = step / (s_prev - s);
            Ok(x.iter()
                .zip(x_prev)
                .map(|(a, b)| a + (a - b) * ratio)
                .collect())
        }
    }
}

/// Newton at `s = 0` without rejection. Returns the point with the smallest
/// residual seen, that residual, and the condition of the Jacobian there
/// measured against unit scale, `‖J⁻¹‖·max(‖J‖, 1)` (`+∞` when numerically
/// singular). A Jacobian that vanishes uniformly at an endpoint keeps a
/// small scale-invariant condition number, so the plain estimate would
/// pass it as regular.
pub fn refine_endpoint<H: Homotopy + ?Sized>(
    h: &H,
    x: &[C64],
    cfg: &TrackerConfig,
) -> (Vec<C64>, f64, f64) {
    let mut x = x.to_vec();
    let (mut v, mut jac) = h.evaluate_with_jacobian(&x, 0.0);
    let mut best = (x.clone(), norm_inf(&v), jac.clone());
    for _ in 0..cfg.endpoint_refine_iters {
        let Ok(dx) = lu_factor(&jac).and_then(|lu| lu.solve(&v)) else {
            break;
        };
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi -= di;
        }
        (v, jac) = h.evaluate_with_jacobian(&x, 0.0);
        let residual = norm_inf(&v);
        if !residual.is_finite() {
            break;
        }
        if residual <= best.1 {
            best = (x.clone(), residual, jac.clone());
        }
        if norm_inf(&dx) < 1e-3 * tol_for(cfg, &x) {
            break;
        }
    }
    let scale = best.2.norm_inf();
    let condition = lu_factor(&best.2).map_or(f64::INFINITY, |lu| {
        condition_estimate(&lu) * (1.0 / scale).max(1.0)
    });
    (best.0, best.1, condition)
}

fn slack_norm<H: Homotopy + ?Sized>(h: &H, x: &[C64]) -> f64 {
    norm_inf(&x[h.slack_indices()])
}

/// Growth exponent `d log‖x‖ / d log(1/s)` over the last two decades.
fn growth_rate(norms: &[(f64, f64)]) -> Option<f64> {
    let &(s_end, n_end) = norms.last()?;
    let &(s_back, n_back) = norms.iter().rev().find(|(s, _)| *s >= 100.0 * s_end)?;
    if n_back <= 0.0 || n_end <= 0.0 {
        return None;
    }
    Some((n_end / n_back).ln() / (s_back / s_end).ln())
}

/// Growth exponent above which a path still blowing up at the endgame is
/// declared divergent.
const DIVERGENT_GROWTH: f64 = 0.05;

/// Tracks one path from `start` (a solution of `H(·, 1)`) towards `s = 0`.
pub fn track_path<H: Homotopy + ?Sized>(h: &H, start: &[C64], cfg: &TrackerConfig) -> PathResult {
    let mut s = 1.0;
    let mut x = start.to_vec();
    let mut step = cfg.step_initial;
    let mut history: Vec<(f64, Vec<C64>)> = Vec::with_capacity(2);
    let mut norms: Vec<(f64, f64)> = Vec::new();
    let mut streak = 0;
    let mut steps_taken = 0;
    let mut rejected_steps = 0;

    let finish = |x: Vec<C64>, status, s, steps_taken, rejected_steps| {
        let residual = norm_inf(&h.evaluate(&x, s));
        PathResult {
            slack_norm: slack_norm(h, &x),
            endpoint: x,
            status,
            residual,
            condition: f64::INFINITY,
            steps_taken,
            rejected_steps,
            t_reached: s,
        }
    };

    // polish the start point
    if let Ok(out) = newton_correct(h, s, &x, cfg) {
        if out.residual.is_finite() {
            x = out.x;
        }
    }
    history.push((s, x.clone()));
    norms.push((s, norm_inf(&x)));

    while s > cfg.t_endgame {
        let size = norm_inf(&x);
        if !size.is_finite() || size > cfg.divergence_threshold {
            return finish(x, PathStatus::Diverged, s, steps_taken, rejected_steps);
        }

        let s_next = (s - step).max(0.5 * s).max(cfg.t_endgame);
        let accepted = predict(h, &history, s - s_next)
            .ok()
            .and_then(|guess| newton_correct(h, s_next, &guess, cfg).ok())
            .filter(|out| out.converged && contracting(&out.corrections));

        match accepted {
            Some(out) => {
                s = s_next;
                x = out.x;
                steps_taken += 1;
                if history.len() == 2 {
                    history.remove(0);
                }
                history.push((s, x.clone()));
                norms.push((s, norm_inf(&x)));
                streak += 1;
                if streak >= cfg.expand_after {
                    step = (step * cfg.step_expand).min(cfg.step_max);
                    streak = 0;
                }
            }
            None => {
                rejected_steps += 1;
                streak = 0;
                step *= cfg.step_shrink;
                let size = norm_inf(&x);
                let growing =
                    norms.len() >= 2 && norms[norms.len() - 1].1 > norms[norms.len() - 2].1;
                if step < 10.0 * cfg.step_min && size > 1e6 && growing {
                    return finish(x, PathStatus::Diverged, s, steps_taken, rejected_steps);
                }
                if step < cfg.step_min {
                    if s <= cfg.endgame_zone {
                        break;
                    }
                    return finish(x, PathStatus::Failed, s, steps_taken, rejected_steps);
                }
            }
        }
    }

    if norm_inf(&x) >= 1.0 && growth_rate(&norms).is_some_and(|g| g > DIVERGENT_GROWTH) {
        return finish(x, PathStatus::Diverged, s, steps_taken, rejected_steps);
    }

    let (endpoint, residual, condition) = refine_endpoint(h, &x, cfg);
    let status = if residual <= 10.0 * cfg.newton_tol {
        PathStatus::Converged
    } else if norm_inf(&endpoint) > cfg.divergence_threshold {
        PathStatus::Diverged
    } else {
        PathStatus::Failed
    };
    PathResult {
        slack_norm: slack_norm(h, &endpoint),
        endpoint,
        status,
        residual,
        condition,
        steps_taken,
        rejected_steps,
        t_reached: if status == PathStatus::Converged {
            0.0
        } else {
            s
        },
    }
}

/// Successive Newton corrections must shrink.
fn contracting(corrections: &[f64]) -> bool {
    corrections
        .windows(2)
        .all(|w| w[1] <= 0.5 * w[0] || w[1] == 0.0)
}
