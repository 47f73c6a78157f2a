//! Exact until probabilities: backward-reachability precomputation followed
//! by Gauss-Seidel iteration over the undecided states.

use thiserror::Error;

use crate::dtmc::{Dtmc, StateSet};
use crate::formula::{FormulaError, StateFormula, UntilQuery};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NmcError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("solver did not converge within {iterations} iterations (last change {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("state {state} out of range for {n} states")]
    StateOutOfRange { state: usize, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmcOptions {
    /// Stop once no state changes by this much in one sweep.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NmcOptions {
    fn default() -> Self {
        NmcOptions {
            tol: 1e-10,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    pub values: Vec<f64>,
    pub converged: bool,
    /// Gauss-Seidel sweeps, or backward steps for bounded queries.
    pub iterations: usize,
    /// Largest per-state change in the final sweep.
    pub residual: f64,
}

pub fn sat_set(model: &Dtmc, f: &StateFormula) -> Result<StateSet, FormulaError> {
    Ok(f.resolve(model)?.sat(model))
}

/// States with zero probability of `a U b`: everything not backward
/// reachable from `b` through `a ∪ b`.
pub fn prob0(model: &Dtmc, a: &StateSet, b: &StateSet) -> StateSet {
    let n = model.n();
    let preds = predecessors(model);
    let mut reach = StateSet::empty(n);
    let mut stack: Vec<usize> = b.iter().collect();
    for &s in &stack {
        reach.insert(s);
    }
    while let Some(t) = stack.pop() {
        for &p in &preds.targets[preds.offsets[t]..preds.offsets[t + 1]] {
            let p = p as usize;
            if a.contains(p) && reach.insert(p) {
                stack.push(p);
            }
        }
    }
    StateSet::from_mask(reach.as_mask().iter().map(|&r| !r).collect())
}

struct Transpose {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

fn predecessors(model: &Dtmc) -> Transpose {
    let n = model.n();
    let mut offsets = vec![0usize; n + 1];
    for s in 0..n {
        for t in model.row(s).targets() {
            offsets[t + 1] += 1;
        }
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut targets = vec![0u32; model.transition_count()];
    for s in 0..n {
        for t in model.row(s).targets() {
            targets[fill[t]] = s as u32;
            fill[t] += 1;
        }
    }
    Transpose { offsets, targets }
}

/// Solves `q` for every state of `model`.
///
/// Non-convergence is not an error here: the vector is returned with
/// `converged == false` and callers decide.
pub fn solve_until(model: &Dtmc, q: &UntilQuery, opts: NmcOptions) -> Result<ProbVector, NmcError> {
    if !(opts.tol > 0.0 && opts.tol.is_finite()) {
        return Err(NmcError::InvalidTolerance(opts.tol));
    }
    let left = sat_set(model, &q.left)?;
    let right = sat_set(model, &q.right)?;
    Ok(solve_sets(model, &left, &right, q.bound, opts))
}

pub(crate) fn solve_sets(
    model: &Dtmc,
    left: &StateSet,
    right: &StateSet,
    bound: Option<u64>,
    opts: NmcOptions,
) -> ProbVector {
    let n = model.n();
    let no = prob0(model, left, right);
    let mut values: Vec<f64> = (0..n).map(|s| if right.contains(s) { 1.0 } else { 0.0 }).collect();
    let maybe: Vec<usize> = (0..n).filter(|&s| !right.contains(s) && !no.contains(s)).collect();

    if let Some(steps) = bound {
        let mut next = values.clone();
        let mut residual = 0.0;
        for _ in 0..steps {
            residual = 0.0f64;
            for &s in &maybe {
                let v = row_value(model, s, &values);
                residual = residual.max((v - values[s]).abs());
                next[s] = v;
            }
            std::mem::swap(&mut values, &mut next);
            next.copy_from_slice(&values);
        }
        return ProbVector {
            values,
            converged: true,
            iterations: steps as usize,
            residual,
        };
    }

    if maybe.is_empty() {
        return ProbVector {
            values,
            converged: true,
            iterations: 0,
            residual: 0.0,
        };
    }
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        residual = 0.0;
        for &s in &maybe {
            let v = row_value(model, s, &values);
            residual = residual.max((v - values[s]).abs());
            values[s] = v;
        }
        if residual < opts.tol {
            break;
        }
    }
    ProbVector {
        values,
        converged: residual < opts.tol,
        iterations,
        residual,
    }
}

fn row_value(model: &Dtmc, s: usize, values: &[f64]) -> f64 {
    model.row(s).iter().map(|(t, p)| p * values[t]).sum::<f64>().min(1.0)
}

/// The exact probability of `q` at one state.
pub fn nmc_single(model: &Dtmc, q: &UntilQuery, state: usize, opts: NmcOptions) -> Result<f64, NmcError> {
    if state >= model.n() {
        return Err(NmcError::StateOutOfRange { state, n: model.n() });
    }
    let solved = solve_until(model, q, opts)?;
    if !solved.converged {
        return Err(NmcError::NotConverged {
            iterations: solved.iterations,
            residual: solved.residual,
        });
    }
    Ok(solved.values[state])
}
