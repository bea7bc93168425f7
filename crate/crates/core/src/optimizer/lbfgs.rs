//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimConfig {
    pub memory_pairs: usize,
    pub max_iters: usize,
    /// Stop once the gradient's infinity norm drops to this.
    pub grad_tol: f64,
    /// Stop once the relative loss change over `loss_window` iterations drops to this.
    pub loss_tol: f64,
    pub loss_window: usize,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
    pub max_line_search_steps: usize,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            memory_pairs: 10,
            max_iters: 1000,
            grad_tol: 1e-12,
            loss_tol: 1e-14,
            loss_window: 5,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
            max_line_search_steps: 40,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.wolfe_c1 && self.wolfe_c1 < self.wolfe_c2 && self.wolfe_c2 < 1.0) {
            return Err(Error::Config("Wolfe constants need 0 < c1 < c2 < 1".into()));
        }
        if self.memory_pairs == 0 || self.max_line_search_steps == 0 || self.loss_window == 0 {
            return Err(Error::Config("memory_pairs, loss_window and max_line_search_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StopReason {
    GradTol,
    LossTol,
    MaxIters,
    LineSearchFail,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            StopReason::GradTol => "GradTol",
            StopReason::LossTol => "LossTol",
            StopReason::MaxIters => "MaxIters",
            StopReason::LineSearchFail => "LineSearchFail",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct Minimization {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub reason: StopReason,
    /// Objective value at the start point and after every accepted step.
    pub trace: Vec<f64>,
    pub diagnostic: Option<String>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn all_finite(f: f64, g: &[f64]) -> bool {
    f.is_finite() && g.iter().all(|x| x.is_finite())
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// `-H·g` with the two-loop recursion and `γ = sᵀy / yᵀy` initial scaling.
fn two_loop(g: &[f64], memory: &VecDeque<Pair>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for p in memory.iter().rev() {
        let a = p.rho * dot(&p.s, &q);
        for (qi, yi) in q.iter_mut().zip(&p.y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some(last) = memory.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        for qi in &mut q {
            *qi *= gamma;
        }
    }
    for (p, a) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = p.rho * dot(&p.y, &q);
        for (qi, si) in q.iter_mut().zip(&p.s) {
            *qi += (a - b) * si;
        }
    }
    for qi in &mut q {
        *qi = -*qi;
    }
    q
}

struct Probe {
    alpha: f64,
    f: f64,
    g: Vec<f64>,
    slope: f64,
}

enum SearchError {
    NonFinite(f64),
    Exhausted,
}

/// Minimizer of the cubic through two points with slopes, or `None`.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> Option<f64> {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if !(disc >= 0.0) {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let x = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    x.is_finite().then_some(x)
}

struct LineSearch<'a, F> {
    objective: &'a mut F,
    x: &'a [f64],
    d: &'a [f64],
    f0: f64,
    slope0: f64,
    c1: f64,
    c2: f64,
    budget: usize,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> (f64, Vec<f64>)> LineSearch<'_, F> {
    fn probe(&mut self, alpha: f64) -> std::result::Result<Probe, SearchError> {
        if self.evaluations >= self.budget {
            return Err(SearchError::Exhausted);
        }
        self.evaluations += 1;
        let xt: Vec<f64> = self.x.iter().zip(self.d).map(|(xi, di)| xi + alpha * di).collect();
        let (f, g) = (self.objective)(&xt);
        if !all_finite(f, &g) {
            return Err(SearchError::NonFinite(alpha));
        }
        let slope = dot(&g, self.d);
        Ok(Probe { alpha, f, g, slope })
    }

    fn armijo(&self, p: &Probe) -> bool {
        p.f <= self.f0 + self.c1 * p.alpha * self.slope0
    }

    fn curvature(&self, p: &Probe) -> bool {
        p.slope.abs() <= -self.c2 * self.slope0
    }

    /// Bracketing phase, then [`Self::zoom`].
    fn run(&mut self, alpha0: f64) -> std::result::Result<Probe, SearchError> {
        let mut prev = Probe { alpha: 0.0, f: self.f0, g: Vec::new(), slope: self.slope0 };
        let mut alpha = alpha0;
        let mut first = true;
        loop {
            let cur = self.probe(alpha)?;
            if !self.armijo(&cur) || (!first && cur.f >= prev.f) {
                return self.zoom(prev, cur);
            }
            if self.curvature(&cur) {
                return Ok(cur);
            }
            if cur.slope >= 0.0 {
                return self.zoom(cur, prev);
            }
            alpha = cur.alpha * 2.0;
            prev = cur;
            first = false;
        }
    }

    /// `lo` satisfies sufficient decrease and has the lower value; the
    /// minimizer lies between `lo` and `hi`.
    fn zoom(&mut self, mut lo: Probe, mut hi: Probe) -> std::result::Result<Probe, SearchError> {
        loop {
            let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
            let width = b - a;
            if width <= f64::EPSILON * b.max(1e-300) {
                return self.settle(lo);
            }
            let guess = cubic_min(lo.alpha, lo.f, lo.slope, hi.alpha, hi.f, hi.slope);
            let alpha = match guess {
                Some(t) if t > a + 0.1 * width && t < b - 0.1 * width => t,
                _ => 0.5 * (a + b),
            };
            let cur = match self.probe(alpha) {
                Ok(p) => p,
                Err(SearchError::Exhausted) => return self.settle(lo),
                Err(e) => return Err(e),
            };
            if !self.armijo(&cur) || cur.f >= lo.f {
                hi = cur;
            } else {
                if self.curvature(&cur) {
                    return Ok(cur);
                }
                if cur.slope * (hi.alpha - lo.alpha) >= 0.0 {
                    hi = lo;
                }
                lo = cur;
            }
        }
    }

    /// Bracket collapsed or budget spent: keep `lo` if it is an actual decrease.
    fn settle(&self, lo: Probe) -> std::result::Result<Probe, SearchError> {
        if lo.alpha > 0.0 && lo.f < self.f0 && !lo.g.is_empty() {
            Ok(lo)
        } else {
            Err(SearchError::Exhausted)
        }
    }
}

/// Minimizes `objective` from `x0`. The objective returns value and gradient.
pub fn minimize<F>(mut objective: F, x0: Vec<f64>, cfg: &OptimConfig) -> Minimization
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = x0;
    let (mut f, mut g) = objective(&x);
    let mut evaluations = 1;
    let mut trace = vec![f];
    let done = |x, f, g, iterations, evaluations, reason, trace, diagnostic| Minimization {
        x,
        value: f,
        grad: g,
        iterations,
        evaluations,
        reason,
        trace,
        diagnostic,
    };
    if !all_finite(f, &g) {
        let msg = format!("objective is not finite at the start point (value {f})");
        return done(x, f, g, 0, evaluations, StopReason::LineSearchFail, trace, Some(msg));
    }
    if norm_inf(&g) <= cfg.grad_tol {
        return done(x, f, g, 0, evaluations, StopReason::GradTol, trace, None);
    }

    let mut memory: VecDeque<Pair> = VecDeque::with_capacity(cfg.memory_pairs);
    for iter in 0..cfg.max_iters {
        let mut restarted = false;
        let probe = loop {
            let mut d = two_loop(&g, &memory);
            let mut slope = dot(&g, &d);
            if !(slope < 0.0) {
                memory.clear();
                d = g.iter().map(|x| -x).collect();
                slope = dot(&g, &d);
            }
            let alpha0 = if memory.is_empty() { (1.0 / norm_inf(&g).max(1e-300)).min(1.0) } else { 1.0 };
            let mut ls = LineSearch {
                objective: &mut objective,
                x: &x,
                d: &d,
                f0: f,
                slope0: slope,
                c1: cfg.wolfe_c1,
                c2: cfg.wolfe_c2,
                budget: cfg.max_line_search_steps,
                evaluations: 0,
            };
            let result = ls.run(alpha0);
            evaluations += ls.evaluations;
            match result {
                Ok(p) => break (p, d),
                Err(SearchError::NonFinite(alpha)) => {
                    let msg = format!("objective not finite at step {alpha:e} in iteration {}", iter + 1);
                    return done(x, f, g, iter, evaluations, StopReason::LineSearchFail, trace, Some(msg));
                }
                Err(SearchError::Exhausted) if !restarted && !memory.is_empty() => {
                    memory.clear();
                    restarted = true;
                }
                Err(SearchError::Exhausted) => {
                    let msg = format!("no acceptable step in iteration {}", iter + 1);
                    return done(x, f, g, iter, evaluations, StopReason::LineSearchFail, trace, Some(msg));
                }
            }
        };
        let (p, d) = probe;
        let s: Vec<f64> = d.iter().map(|di| p.alpha * di).collect();
        let y: Vec<f64> = p.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let (ns, ny) = (dot(&s, &s).sqrt(), dot(&y, &y).sqrt());
        if sy > 1e-14 * ns * ny {
            if memory.len() == cfg.memory_pairs {
                memory.pop_front();
            }
            memory.push_back(Pair { s: s.clone(), y, rho: 1.0 / sy });
        }
        for (xi, si) in x.iter_mut().zip(&s) {
            *xi += si;
        }
        f = p.f;
        g = p.g;
        trace.push(f);
        let iterations = iter + 1;

        if norm_inf(&g) <= cfg.grad_tol {
            return done(x, f, g, iterations, evaluations, StopReason::GradTol, trace, None);
        }
        if trace.len() > cfg.loss_window {
            let old = trace[trace.len() - 1 - cfg.loss_window];
            if (old - f).abs() <= cfg.loss_tol * f.abs().max(f64::MIN_POSITIVE) {
                return done(x, f, g, iterations, evaluations, StopReason::LossTol, trace, None);
            }
        }
    }
    done(x, f, g, cfg.max_iters, evaluations, StopReason::MaxIters, trace, None)
}
