//! Best-first branch-and-bound over the simplex relaxation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::dense::DenseModel;
use super::simplex::{solve_lp, LpStatus};
use super::SolverOptions;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum MipStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug)]
pub(crate) struct MipSolution {
    pub status: MipStatus,
    pub x: Vec<f64>,
    pub iterations: usize,
    pub nodes: usize,
}

struct Node {
    bound: f64,
    seq: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Highest bound first; among equal bounds the oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

pub(crate) fn branch_and_bound(model: &DenseModel, opts: &SolverOptions) -> MipSolution {
    let tol = opts.integrality_tol;
    let mut lower = model.lower.clone();
    let mut upper = model.upper.clone();
    for j in 0..model.num_vars() {
        if model.integer[j] {
            lower[j] = (lower[j] - tol).ceil();
            upper[j] = (upper[j] + tol).floor();
        }
    }

    let mut budget = opts.max_iterations;
    let mut nodes = 0;
    let mut seq = 0;
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::INFINITY,
        seq,
        lower,
        upper,
    });
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let finish = |status, x, budget: usize, nodes| MipSolution {
        status,
        x,
        iterations: opts.max_iterations - budget,
        nodes,
    };

    while let Some(node) = heap.pop() {
        if let Some((best, _)) = &incumbent {
            if node.bound <= best + prune_gap(*best) {
                continue;
            }
        }
        if nodes >= opts.max_nodes {
            return finish(MipStatus::IterationLimit, Vec::new(), budget, nodes);
        }
        nodes += 1;
        let lp = solve_lp(model, &node.lower, &node.upper, opts.feasibility_tol, &mut budget);
        match lp.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => return finish(MipStatus::Unbounded, Vec::new(), budget, nodes),
            LpStatus::IterationLimit => {
                return finish(MipStatus::IterationLimit, Vec::new(), budget, nodes)
            }
        }
        if let Some((best, _)) = &incumbent {
            if lp.objective <= best + prune_gap(*best) {
                continue;
            }
        }

        // Most fractional integer variable; lowest index on ties.
        let mut branch: Option<(usize, f64)> = None;
        for j in 0..model.num_vars() {
            if !model.integer[j] {
                continue;
            }
            let v = lp.x[j];
            let frac = v - v.floor();
            if frac <= tol || frac >= 1.0 - tol {
                continue;
            }
            let distance = (frac - 0.5).abs();
            if branch.is_none_or(|(_, d)| distance < d) {
                branch = Some((j, distance));
            }
        }

        match branch {
            None => {
                let mut x = lp.x;
                for (xj, &int) in x.iter_mut().zip(&model.integer) {
                    if int {
                        *xj = xj.round();
                    }
                }
                incumbent = Some((lp.objective, x));
            }
            Some((j, _)) => {
                let v = lp.x[j];
                let mut down_upper = node.upper.clone();
                down_upper[j] = v.floor();
                let mut up_lower = node.lower.clone();
                up_lower[j] = v.ceil();
                seq += 1;
                heap.push(Node {
                    bound: lp.objective,
                    seq,
                    lower: node.lower.clone(),
                    upper: down_upper,
                });
                seq += 1;
                heap.push(Node {
                    bound: lp.objective,
                    seq,
                    lower: up_lower,
                    upper: node.upper,
                });
            }
        }
    }

    match incumbent {
        Some((_, x)) => finish(MipStatus::Optimal, x, budget, nodes),
        None => finish(MipStatus::Infeasible, Vec::new(), budget, nodes),
    }
}

fn prune_gap(best: f64) -> f64 {
    1e-9 * (1.0 + best.abs())
}
