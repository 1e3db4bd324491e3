//! Box-constrained limited-memory BFGS.
//!
//! Projected-gradient variant: the quasi-Newton direction is computed on the
//! free variables (those not pinned at a bound by the gradient) and the line
//! search moves along the projected path `P(x + a d)` with an Armijo test.
//! Iterates are monotone, so the returned point is always the best seen.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsbSettings {
    pub history: usize,
    pub max_iterations: usize,
    /// Stop when the infinity norm of the projected gradient drops below this.
    pub pgtol: f64,
    /// Stop when the relative decrease of the objective drops below this.
    pub ftol: f64,
}

impl Default for LbfgsbSettings {
    fn default() -> Self {
        Self {
            history: 10,
            max_iterations: 50,
            pgtol: 1e-6,
            ftol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ProjectedGradient,
    RelativeDecrease,
    LineSearchFailed,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
    /// Objective value after each accepted step, starting with the initial point.
    pub trace: Vec<f64>,
}

/// Minimizes `f` over the box `[lower, upper]`. The objective returns `None`
/// where it cannot be evaluated; the line search treats that as infinite.
/// Returns `None` only if the (projected) starting point cannot be evaluated.
pub fn minimize<F>(
    mut objective: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    settings: &LbfgsbSettings,
) -> Option<Minimum>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    assert!(lower.len() == n && upper.len() == n);
    let project = |x: &mut [f64]| {
        for i in 0..n {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };

    let mut x = x0.to_vec();
    project(&mut x);
    let (mut f, mut g) = objective(&x)?;
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut evaluations = 1;
    let mut trace = vec![f];
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();

    for iteration in 0..settings.max_iterations {
        let pg_norm = (0..n)
            .map(|i| ((x[i] - g[i]).clamp(lower[i], upper[i]) - x[i]).abs())
            .fold(0.0, f64::max);
        if pg_norm < settings.pgtol {
            return Some(finish(x, f, iteration, evaluations, Termination::ProjectedGradient, trace));
        }

        let active: Vec<bool> = (0..n)
            .map(|i| (x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0))
            .collect();

        let mut d = two_loop(&g, &memory);
        for i in 0..n {
            if active[i] {
                d[i] = 0.0;
            }
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            memory.clear();
            d = g.iter().zip(&active).map(|(gi, a)| if *a { 0.0 } else { -gi }).collect();
            slope = dot(&g, &d);
            if !(slope < 0.0) {
                return Some(finish(x, f, iteration, evaluations, Termination::ProjectedGradient, trace));
            }
        }

        let mut step = if memory.is_empty() {
            (1.0 / norm(&d)).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            project(&mut trial);
            let moved: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            if norm(&moved) == 0.0 {
                break;
            }
            evaluations += 1;
            if let Some((ft, gt)) = objective(&trial) {
                if ft.is_finite()
                    && gt.iter().all(|v| v.is_finite())
                    && ft <= f + 1e-4 * dot(&g, &moved)
                {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }

        let Some((x_new, f_new, g_new)) = accepted else {
            return Some(finish(x, f, iteration, evaluations, Termination::LineSearchFailed, trace));
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * dot(&y, &y) {
            if memory.len() == settings.history {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }

        let decrease = f - f_new;
        x = x_new;
        g = g_new;
        let scale = f.abs().max(f_new.abs()).max(1.0);
        f = f_new;
        trace.push(f);
        if decrease <= settings.ftol * scale {
            return Some(finish(x, f, iteration + 1, evaluations, Termination::RelativeDecrease, trace));
        }
    }
    let iterations = settings.max_iterations;
    Some(finish(x, f, iterations, evaluations, Termination::MaxIterations, trace))
}

fn finish(
    x: Vec<f64>,
    f: f64,
    iterations: usize,
    evaluations: usize,
    termination: Termination,
    trace: Vec<f64>,
) -> Minimum {
    Minimum {
        x,
        f,
        iterations,
        evaluations,
        termination,
        trace,
    }
}

fn two_loop(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
