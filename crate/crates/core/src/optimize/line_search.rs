use super::dot;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchConfig {
    pub c1: f64,
    pub c2: f64,
    /// Total objective evaluations allowed (bracketing and zoom together).
    pub max_steps: usize,
    /// Upper bound on the step reached by bracket expansion.
    pub max_step: f64,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        LineSearchConfig {
            c1: 1e-4,
            c2: 0.9,
            max_steps: 50,
            max_step: 1e10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LineSearchOutcome {
    pub step: f64,
    pub value: f64,
    pub grad: Vec<f64>,
    pub evaluations: usize,
    /// `true` when the step satisfies the strong Wolfe conditions. On failure
    /// the outcome carries the lowest sufficient-decrease point found (step 0
    /// if there was none).
    pub converged: bool,
}

const EXPANSION: f64 = 4.0;

struct Trial {
    step: f64,
    value: f64,
    slope: f64,
    grad: Vec<f64>,
}

/// Strong-Wolfe line search: bracketing followed by a safeguarded cubic zoom.
pub fn wolfe_line_search<F>(
    objective: &mut F,
    x: &[f64],
    value0: f64,
    grad0: &[f64],
    direction: &[f64],
    initial_step: f64,
    cfg: &LineSearchConfig,
) -> Result<LineSearchOutcome>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    if !(cfg.c1 > 0.0 && cfg.c1 < cfg.c2 && cfg.c2 < 1.0) || cfg.max_steps == 0 {
        return Err(Error::Config(format!(
            "invalid line search configuration {cfg:?}"
        )));
    }
    let slope0 = dot(grad0, direction);
    if !(slope0 < 0.0) {
        return Err(Error::Usage(format!(
            "line search direction is not a descent direction (gᵀd = {slope0:e})"
        )));
    }
    if !(initial_step > 0.0) {
        return Err(Error::Usage(format!(
            "initial step must be positive, got {initial_step}"
        )));
    }

    let mut evaluations = 0;
    let mut trial_point = vec![0.0; x.len()];
    let mut probe = |step: f64, evaluations: &mut usize| -> Result<Trial> {
        for i in 0..x.len() {
            trial_point[i] = x[i] + step * direction[i];
        }
        *evaluations += 1;
        let (value, grad) = objective(&trial_point)?;
        let slope = dot(&grad, direction);
        // Overflowing trials count as insufficient decrease.
        let (value, slope) = if value.is_finite() && slope.is_finite() {
            (value, slope)
        } else {
            (f64::INFINITY, f64::NAN)
        };
        Ok(Trial {
            step,
            value,
            slope,
            grad,
        })
    };
    let armijo = |t: &Trial| t.value <= value0 + cfg.c1 * t.step * slope0;
    let curvature = |t: &Trial| t.slope.abs() <= -cfg.c2 * slope0;

    let start = Trial {
        step: 0.0,
        value: value0,
        slope: slope0,
        grad: grad0.to_vec(),
    };
    let mut prev = start;
    let mut step = initial_step.min(cfg.max_step);
    let mut best: Option<Trial> = None;

    let (mut lo, mut hi) = loop {
        if evaluations >= cfg.max_steps {
            return Ok(finish(best, evaluations, false));
        }
        let t = probe(step, &mut evaluations)?;
        if !armijo(&t) || (prev.step > 0.0 && t.value >= prev.value) {
            break (prev, t);
        }
        if curvature(&t) {
            return Ok(finish(Some(t), evaluations, true));
        }
        if t.slope >= 0.0 {
            break (t, prev);
        }
        if step >= cfg.max_step {
            return Ok(finish(Some(t), evaluations, false));
        }
        step = (step * EXPANSION).min(cfg.max_step);
        prev = t;
        best = Some(prev_clone(&prev));
    };

    if lo.step > 0.0 {
        best = Some(prev_clone(&lo));
    }
    while evaluations < cfg.max_steps {
        let step = interpolate(&lo, &hi);
        if step == lo.step || step == hi.step {
            break;
        }
        let t = probe(step, &mut evaluations)?;
        if !armijo(&t) || t.value >= lo.value {
            hi = t;
        } else {
            if curvature(&t) {
                return Ok(finish(Some(t), evaluations, true));
            }
            if t.slope * (hi.step - lo.step) >= 0.0 {
                hi = lo;
            }
            lo = t;
            best = Some(prev_clone(&lo));
        }
    }
    Ok(finish(best, evaluations, false))
}

fn prev_clone(t: &Trial) -> Trial {
    Trial {
        step: t.step,
        value: t.value,
        slope: t.slope,
        grad: t.grad.clone(),
    }
}

fn finish(best: Option<Trial>, evaluations: usize, converged: bool) -> LineSearchOutcome {
    match best {
        Some(t) => LineSearchOutcome {
            step: t.step,
            value: t.value,
            grad: t.grad,
            evaluations,
            converged,
        },
        None => LineSearchOutcome {
            step: 0.0,
            value: f64::NAN,
            grad: Vec::new(),
            evaluations,
            converged: false,
        },
    }
}

/// Minimizer of the cubic through both end points, kept at least 10% of the
/// interval away from either end; bisection when the cubic is unusable.
fn interpolate(lo: &Trial, hi: &Trial) -> f64 {
    let (a, b) = (lo.step, hi.step);
    let (left, right) = if a < b { (a, b) } else { (b, a) };
    let width = right - left;
    let mid = 0.5 * (a + b);
    if !hi.value.is_finite() || !hi.slope.is_finite() {
        return mid;
    }
    let d1 = lo.slope + hi.slope - 3.0 * (lo.value - hi.value) / (a - b);
    let disc = d1 * d1 - lo.slope * hi.slope;
    if disc < 0.0 {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let denom = hi.slope - lo.slope + 2.0 * d2;
    if denom == 0.0 {
        return mid;
    }
    let c = b - (b - a) * (hi.slope + d2 - d1) / denom;
    if !c.is_finite() {
        return mid;
    }
    c.clamp(left + 0.1 * width, right - 0.1 * width)
}
