//! Limited-memory BFGS with a backtracking (Armijo) line search.
//!
//! Every accepted step strictly decreases the objective. When the
//! quasi-Newton direction fails to produce a decrease the history is
//! dropped and steepest descent is tried; if that fails too the run stops.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsParams {
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop once `max_i |g_i| < tolerance`.
    pub tolerance: f64,
    /// Sufficient-decrease constant.
    pub armijo: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsParams {
    fn default() -> Self {
        LbfgsParams {
            memory: 6,
            max_iterations: 500,
            tolerance: 1e-4,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub x: Vec<f64>,
    pub loss: f64,
    pub grad_max_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// Objective after each accepted step, starting with the initial value.
    pub trace: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(g: &[f64]) -> f64 {
    g.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Two-loop recursion: returns `-H g`.
fn direction(g: &[f64], hist: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(hist.len());
    for (s, y, rho) in hist.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = hist.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    for qi in q.iter_mut() {
        *qi = -*qi;
    }
    q
}

/// Minimize `f` from `x0`. `f` returns the objective and its gradient.
pub fn minimize<F, E>(mut f: F, x0: Vec<f64>, params: &LbfgsParams) -> Result<Outcome, E>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>), E>,
{
    let mut x = x0;
    let (mut fx, mut g) = f(&x)?;
    let mut trace = alloc::vec![fx];
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let termination = loop {
        if max_norm(&g) < params.tolerance {
            break Termination::Converged;
        }
        if iterations >= params.max_iterations {
            break Termination::MaxIterations;
        }
        let mut accepted = None;
        // first attempt uses the quasi-Newton direction, the retry steepest descent
        for attempt in 0..2 {
            let use_history = attempt == 0 && !hist.is_empty();
            if attempt == 1 && !hist.is_empty() {
                hist.clear();
            } else if attempt == 1 {
                break;
            }
            let mut d = if use_history {
                direction(&g, &hist)
            } else {
                g.iter().map(|v| -v).collect()
            };
            let mut slope = dot(&g, &d);
            if slope >= 0.0 {
                d = g.iter().map(|v| -v).collect();
                slope = dot(&g, &d);
            }
            let mut step = if use_history {
                1.0
            } else {
                1.0 / libm::sqrt(dot(&d, &d)).max(1e-12)
            };
            for _ in 0..=params.max_backtracks {
                let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
                let (ft, gt) = f(&trial)?;
                if ft.is_finite() && ft <= fx + params.armijo * step * slope && ft < fx {
                    accepted = Some((trial, ft, gt));
                    break;
                }
                step *= params.backtrack;
            }
            if accepted.is_some() {
                break;
            }
        }
        let Some((xn, fnew, gn)) = accepted else {
            break Termination::LineSearchFailed;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            if hist.len() == params.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        fx = fnew;
        g = gn;
        trace.push(fx);
        iterations += 1;
    };
    Ok(Outcome {
        grad_max_norm: max_norm(&g),
        x,
        loss: fx,
        iterations,
        termination,
        trace,
    })
}
