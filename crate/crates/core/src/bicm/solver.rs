use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::likelihood::{link_sigmoid, link_softplus};
use super::model::{BicmModel, ClassState, DegreeClass};
use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, Layer};

/// Solver configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Max-norm tolerance on the degree residuals.
    pub tol: f64,
    pub max_iterations: usize,
    /// Starting damping of the fixed-point update; adapted as steps are
    /// accepted or rejected.
    pub initial_damping: f64,
    /// Number of fixed-point iterations without the residual halving after
    /// which the solver switches to Newton steps.
    pub stall_window: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tol: 1e-8,
            max_iterations: 5000,
            initial_damping: 0.5,
            stall_window: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverPhase {
    FixedPoint,
    Newton,
}

/// Fits the model to `graph`.
pub fn fit(graph: &BipartiteGraph, options: &FitOptions) -> Result<BicmModel> {
    fit_traced(graph, options).map(|(model, _)| model)
}

/// Like [`fit`], also returning the log-likelihood of every accepted
/// iterate (degenerate links contribute exactly zero and are left out).
pub fn fit_traced(graph: &BipartiteGraph, options: &FitOptions) -> Result<(BicmModel, Vec<f64>)> {
    if !(options.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {}",
            options.tol
        )));
    }
    if graph.edge_count() == 0 {
        return Err(Error::DegenerateNetwork);
    }
    let mut top = degree_classes(&graph.top_degrees());
    let mut bottom = degree_classes(&graph.bottom_degrees());
    let (full_top, full_bottom) = strip_degenerate(&mut top, &mut bottom, graph);

    let active_top: Vec<usize> = active(&top);
    let active_bottom: Vec<usize> = active(&bottom);
    let mut trace = Vec::new();
    let (residual, iterations) = if active_top.is_empty() {
        (0.0, 0)
    } else {
        let system = Reduced {
            top_target: active_top
                .iter()
                .map(|&c| (top[c].0 - full_bottom) as f64)
                .collect(),
            top_mult: active_top.iter().map(|&c| top[c].1.len() as f64).collect(),
            bottom_target: active_bottom
                .iter()
                .map(|&c| (bottom[c].0 - full_top) as f64)
                .collect(),
            bottom_mult: active_bottom
                .iter()
                .map(|&c| bottom[c].1.len() as f64)
                .collect(),
        };
        let (a, b, residual, iterations) = system.solve(options, &mut trace)?;
        for (&c, &v) in active_top.iter().zip(&a) {
            top[c].2 = Some(ClassState::Free { log_multiplier: v });
        }
        for (&c, &v) in active_bottom.iter().zip(&b) {
            bottom[c].2 = Some(ClassState::Free { log_multiplier: v });
        }
        (residual, iterations)
    };

    let finish = |classes: Vec<(usize, Vec<usize>, Option<ClassState>)>| -> Vec<DegreeClass> {
        classes
            .into_iter()
            .map(|(degree, members, state)| DegreeClass {
                degree,
                members,
                state: state.expect("every class is either solved or stripped"),
            })
            .collect()
    };
    let model = BicmModel::new(
        finish(top),
        finish(bottom),
        graph.layer_len(Layer::Top),
        graph.layer_len(Layer::Bottom),
        residual,
        iterations,
    )?;
    Ok((model, trace))
}

type Classes = Vec<(usize, Vec<usize>, Option<ClassState>)>;

fn degree_classes(degrees: &[usize]) -> Classes {
    let mut by_degree: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &d) in degrees.iter().enumerate() {
        by_degree.entry(d).or_default().push(i);
    }
    by_degree.into_iter().map(|(d, m)| (d, m, None)).collect()
}

fn active(classes: &Classes) -> Vec<usize> {
    classes
        .iter()
        .enumerate()
        .filter(|(_, c)| c.2.is_none())
        .map(|(i, _)| i)
        .collect()
}

/// Removes zero- and full-degree classes, cascading until every remaining
/// class has a residual degree strictly between 0 and the number of active
/// nodes opposite. Returns the number of full top and full bottom nodes.
fn strip_degenerate(
    top: &mut Classes,
    bottom: &mut Classes,
    graph: &BipartiteGraph,
) -> (usize, usize) {
    let mut active_top = graph.top_count();
    let mut active_bottom = graph.bottom_count();
    let (mut full_top, mut full_bottom) = (0usize, 0usize);
    let mut stage = 0usize;
    loop {
        let mut changed = false;
        for class in top.iter_mut().filter(|c| c.2.is_none()) {
            let residual = class.0 - full_bottom;
            if residual == 0 || residual == active_bottom {
                class.2 = Some(if residual == 0 {
                    ClassState::Empty { stage }
                } else {
                    full_top += class.1.len();
                    ClassState::Full { stage }
                });
                active_top -= class.1.len();
                stage += 1;
                changed = true;
            }
        }
        for class in bottom.iter_mut().filter(|c| c.2.is_none()) {
            let residual = class.0 - full_top;
            if residual == 0 || residual == active_top {
                class.2 = Some(if residual == 0 {
                    ClassState::Empty { stage }
                } else {
                    full_bottom += class.1.len();
                    ClassState::Full { stage }
                });
                active_bottom -= class.1.len();
                stage += 1;
                changed = true;
            }
        }
        if !changed {
            return (full_top, full_bottom);
        }
    }
}

/// Degree-class system left after stripping: one unknown per class.
struct Reduced {
    top_target: Vec<f64>,
    top_mult: Vec<f64>,
    bottom_target: Vec<f64>,
    bottom_mult: Vec<f64>,
}

struct Eval {
    /// `P_cd` row-major over active classes.
    prob: Vec<Vec<f64>>,
    top_expected: Vec<f64>,
    bottom_expected: Vec<f64>,
    residual: f64,
    loglik: f64,
}

impl Reduced {
    fn evaluate(&self, a: &[f64], b: &[f64]) -> Eval {
        let rows: Vec<(Vec<f64>, f64, f64)> = a
            .par_iter()
            .map(|&ac| {
                let mut row = Vec::with_capacity(b.len());
                let mut expected = 0.0;
                let mut soft = 0.0;
                for (&bd, &nd) in b.iter().zip(&self.bottom_mult) {
                    let p = link_sigmoid(ac, bd);
                    expected += nd * p;
                    soft += nd * link_softplus(ac, bd);
                    row.push(p);
                }
                (row, expected, soft)
            })
            .collect();
        let mut bottom_expected = vec![0.0; b.len()];
        let mut loglik = 0.0;
        let mut top_expected = Vec::with_capacity(a.len());
        let mut prob = Vec::with_capacity(a.len());
        for (c, (row, expected, soft)) in rows.into_iter().enumerate() {
            let mc = self.top_mult[c];
            for (d, p) in row.iter().enumerate() {
                bottom_expected[d] += mc * p;
            }
            loglik += mc * (self.top_target[c] * a[c] - soft);
            top_expected.push(expected);
            prob.push(row);
        }
        for d in 0..b.len() {
            loglik += self.bottom_mult[d] * self.bottom_target[d] * b[d];
        }
        let residual = max_abs_diff(&top_expected, &self.top_target)
            .max(max_abs_diff(&bottom_expected, &self.bottom_target));
        Eval {
            prob,
            top_expected,
            bottom_expected,
            residual,
            loglik,
        }
    }

    fn bottom_expected(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        b.par_iter()
            .map(|&bd| {
                a.iter()
                    .zip(&self.top_mult)
                    .map(|(&ac, &mc)| mc * link_sigmoid(ac, bd))
                    .sum()
            })
            .collect()
    }

    fn solve(
        &self,
        options: &FitOptions,
        trace: &mut Vec<f64>,
    ) -> Result<(Vec<f64>, Vec<f64>, f64, usize)> {
        let edges: f64 = self
            .top_target
            .iter()
            .zip(&self.top_mult)
            .map(|(k, m)| k * m)
            .sum();
        let scale = edges.sqrt();
        let mut a: Vec<f64> = self.top_target.iter().map(|k| (k / scale).ln()).collect();
        let mut b: Vec<f64> = self
            .bottom_target
            .iter()
            .map(|h| (h / scale).ln())
            .collect();
        let mut current = self.evaluate(&a, &b);
        trace.push(current.loglik);

        let mut phase = SolverPhase::FixedPoint;
        let mut damping = options.initial_damping.clamp(1e-3, 1.0);
        let mut history = vec![current.residual];
        let mut iterations = 0;
        while current.residual > options.tol && iterations < options.max_iterations {
            iterations += 1;
            if phase == SolverPhase::FixedPoint {
                let w = options.stall_window;
                let stalled =
                    history.len() > w && current.residual > 0.5 * history[history.len() - 1 - w];
                if stalled || damping < 1e-6 {
                    log::debug!("bicm: switching to Newton after {iterations} iterations");
                    phase = SolverPhase::Newton;
                }
            }
            let accepted = match phase {
                SolverPhase::FixedPoint => {
                    let (na, nb) = self.fixed_point_proposal(&a, &b, &current);
                    let ca: Vec<f64> = a
                        .iter()
                        .zip(&na)
                        .map(|(o, n)| o + damping * (n - o))
                        .collect();
                    let cb: Vec<f64> = b
                        .iter()
                        .zip(&nb)
                        .map(|(o, n)| o + damping * (n - o))
                        .collect();
                    let candidate = self.evaluate(&ca, &cb);
                    if ascends(current.loglik, candidate.loglik) {
                        damping = (damping * 1.5).min(1.0);
                        Some((ca, cb, candidate))
                    } else {
                        damping *= 0.5;
                        None
                    }
                }
                SolverPhase::Newton => match self.newton_step(&a, &b, &current) {
                    Some(step) => Some(step),
                    None => break,
                },
            };
            if let Some((na, nb, eval)) = accepted {
                a = na;
                b = nb;
                current = eval;
                trace.push(current.loglik);
            }
            history.push(current.residual);
        }
        if current.residual > options.tol {
            return Err(Error::NonConvergence {
                iterations,
                residual: current.residual,
            });
        }
        Ok((a, b, current.residual, iterations))
    }

    /// `x ← k / Σ_α y/(1 + x y)` followed by the dual update using the new
    /// `x`, written in log space as `ln x + ln k − ln ⟨k⟩`.
    fn fixed_point_proposal(&self, a: &[f64], b: &[f64], eval: &Eval) -> (Vec<f64>, Vec<f64>) {
        let na: Vec<f64> = a
            .iter()
            .zip(&self.top_target)
            .zip(&eval.top_expected)
            .map(|((&ac, &k), &e)| ac + k.ln() - e.max(f64::MIN_POSITIVE).ln())
            .collect();
        let f = self.bottom_expected(&na, b);
        let nb: Vec<f64> = b
            .iter()
            .zip(&self.bottom_target)
            .zip(&f)
            .map(|((&bd, &h), &e)| bd + h.ln() - e.max(f64::MIN_POSITIVE).ln())
            .collect();
        (na, nb)
    }

    /// Newton step on the gauge-fixed system (last bottom multiplier held)
    /// with backtracking on the log-likelihood.
    fn newton_step(&self, a: &[f64], b: &[f64], eval: &Eval) -> Option<(Vec<f64>, Vec<f64>, Eval)> {
        let nt = a.len();
        let nb = b.len();
        let dim = nt + nb - 1;
        let mut hess = DMatrix::<f64>::zeros(dim, dim);
        let mut grad = DVector::<f64>::zeros(dim);
        for c in 0..nt {
            grad[c] = self.top_mult[c] * (self.top_target[c] - eval.top_expected[c]);
        }
        for d in 0..nb - 1 {
            grad[nt + d] = self.bottom_mult[d] * (self.bottom_target[d] - eval.bottom_expected[d]);
        }
        for c in 0..nt {
            let mc = self.top_mult[c];
            for d in 0..nb {
                let p = eval.prob[c][d];
                let w = mc * self.bottom_mult[d] * p * (1.0 - p);
                hess[(c, c)] += w;
                if d < nb - 1 {
                    hess[(nt + d, nt + d)] += w;
                    hess[(c, nt + d)] = w;
                    hess[(nt + d, c)] = w;
                }
            }
        }
        let delta = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => hess.lu().solve(&grad)?,
        };
        let mut t = 1.0;
        for _ in 0..60 {
            let ca: Vec<f64> = (0..nt).map(|c| a[c] + t * delta[c]).collect();
            let cb: Vec<f64> = (0..nb)
                .map(|d| {
                    if d < nb - 1 {
                        b[d] + t * delta[nt + d]
                    } else {
                        b[d]
                    }
                })
                .collect();
            let candidate = self.evaluate(&ca, &cb);
            if candidate.loglik.is_finite() && ascends(eval.loglik, candidate.loglik) {
                return Some((ca, cb, candidate));
            }
            t *= 0.5;
        }
        None
    }
}

/// Accepts a step whose log-likelihood did not drop beyond rounding noise.
fn ascends(old: f64, new: f64) -> bool {
    new >= old - 1e-12 * old.abs().max(1.0)
}

fn max_abs_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}
