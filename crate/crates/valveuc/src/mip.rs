//! MILP solving: an embedded branch-and-bound over the model's binaries on
//! top of the revised-simplex core, plus a driver for external solvers that
//! exchange MPS and plain-text solution files.
//!
//! Node selection is best-bound with a depth-first plunge after every
//! branching; branching picks the most fractional binary with ties broken
//! by lowest variable index. Every accepted incumbent is re-verified by
//! constraint substitution and the adjacency property of its weight groups
//! before it is trusted.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::milp::{MilpModel, Sense, VarKind, WarmStart};
use crate::simplex::{self, Basis, LpProblem, LpStatus, RowSense};

/// Integer feasibility tolerance for binaries.
pub const INT_TOL: f64 = 1e-6;
/// Constraint substitution tolerance for incumbents and warm starts.
pub const SUBST_TOL: f64 = 1e-6;
/// Relative floor used in objective comparisons.
const OBJ_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpOutcomeStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

/// Outcome of solving the LP relaxation of a model.
#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: LpOutcomeStatus,
    /// One value per model variable when optimal.
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub basis: Basis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MipStatus {
    Optimal,
    GapLimit,
    TimeLimit,
    Infeasible,
}

/// Outcome of a MIP solve. `values` is `None` when no incumbent was found,
/// which the time-limit status reports distinctly from a proven infeasible.
#[derive(Debug, Clone)]
pub struct MipOutcome {
    pub status: MipStatus,
    pub values: Option<Vec<f64>>,
    /// Incumbent objective; infinite when there is no incumbent.
    pub objective: f64,
    /// Proven lower bound on the optimum.
    pub best_bound: f64,
    /// Nodes explored beyond the root.
    pub nodes: u64,
    pub wall: Duration,
}

/// Termination limits for one MIP solve.
#[derive(Debug, Clone, Copy)]
pub struct MipLimits {
    /// Stop when (incumbent - bound) / |incumbent| falls to this value.
    /// Zero demands a proven optimum.
    pub gap: f64,
    pub time: Option<Duration>,
}

impl Default for MipLimits {
    fn default() -> Self {
        MipLimits {
            gap: 0.0,
            time: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum MipError {
    #[error("numerical failure in the LP core: {0}")]
    Numerical(String),
    #[error("external solver failed: {0}")]
    Subprocess(String),
    #[error("cannot parse external solution: {0}")]
    SolutionParse(String),
    #[error("external solver disagreement: {0}")]
    Disagreement(String),
}

/// Maps a model onto the computational LP form, integrality relaxed.
fn to_lp(model: &MilpModel) -> LpProblem {
    let senses: Vec<RowSense> = model
        .constraints
        .iter()
        .map(|c| match c.sense {
            Sense::Le => RowSense::Le,
            Sense::Eq => RowSense::Eq,
            Sense::Ge => RowSense::Ge,
        })
        .collect();
    let rhs: Vec<f64> = model.constraints.iter().map(|c| c.rhs).collect();
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.num_vars()];
    for (r, c) in model.constraints.iter().enumerate() {
        for &(j, v) in &c.terms {
            cols[j].push((r, v));
        }
    }
    let mut lp = LpProblem::new(model.constraints.len(), rhs, &senses);
    for (j, var) in model.vars.iter().enumerate() {
        lp.add_var(model.objective[j], var.lb, var.ub, &cols[j]);
    }
    lp
}

/// Solves the LP relaxation of `model`, optionally warm-starting from a
/// previous basis.
pub fn solve_lp(model: &MilpModel, basis_hint: Option<&Basis>) -> LpOutcome {
    let lp = to_lp(model);
    let r = simplex::solve(&lp, &[], basis_hint);
    LpOutcome {
        status: match r.status {
            LpStatus::Optimal => LpOutcomeStatus::Optimal,
            LpStatus::Infeasible => LpOutcomeStatus::Infeasible,
            LpStatus::Unbounded => LpOutcomeStatus::Unbounded,
            LpStatus::NumericalFailure => LpOutcomeStatus::NumericalFailure,
        },
        values: r.values,
        objective: r.objective,
        iterations: r.iterations,
        basis: r.basis,
    }
}

struct Node {
    /// Bound overrides along the path from the root.
    bounds: Vec<(usize, f64, f64)>,
    /// Lower bound inherited from the parent's LP.
    bound: f64,
    seq: u64,
}

/// Max-heap entry inverted into a best-first (lowest bound) order.
struct HeapNode(Node);

impl PartialEq for HeapNode {
    fn eq(&self, other: &Self) -> bool {
        self.0.bound == other.0.bound && self.0.seq == other.0.seq
    }
}
impl Eq for HeapNode {}
impl PartialOrd for HeapNode {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapNode {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Reversed: BinaryHeap pops the max, we want lowest bound first,
        // then earliest sequence number.
        other
            .0
            .bound
            .total_cmp(&self.0.bound)
            .then_with(|| other.0.seq.cmp(&self.0.seq))
    }
}

/// True when `values` satisfies the adjacency property in every weight
/// group: at most two positive weights, and consecutive.
pub fn adjacency_holds(model: &MilpModel, values: &[f64]) -> bool {
    model.adjacency_groups.iter().all(|g| {
        let pos: Vec<usize> = g
            .weights
            .iter()
            .enumerate()
            .filter(|&(_, &z)| values[z] > INT_TOL)
            .map(|(k, _)| k)
            .collect();
        match pos.as_slice() {
            [] | [_] => true,
            [a, b] => b - a == 1,
            _ => false,
        }
    })
}

fn is_integral(model: &MilpModel, values: &[f64]) -> bool {
    model
        .vars
        .iter()
        .zip(values)
        .all(|(v, &x)| v.kind != VarKind::Binary || (x - x.round()).abs() <= INT_TOL)
}

/// Most fractional binary, ties to the lowest index.
fn pick_branch_var(model: &MilpModel, values: &[f64]) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (j, v) in model.vars.iter().enumerate() {
        if v.kind != VarKind::Binary {
            continue;
        }
        let frac = (values[j] - values[j].round()).abs();
        if frac > INT_TOL {
            let score = 0.5 - (values[j] - values[j].floor() - 0.5).abs();
            match best {
                Some((s, _)) if score <= s => {}
                _ => best = Some((score, j)),
            }
        }
    }
    best.map(|(_, j)| j)
}

/// A branching decision: two sets of bound fixes and which side to plunge.
struct Branch {
    left: Vec<(usize, f64, f64)>,
    right: Vec<(usize, f64, f64)>,
    left_first: bool,
}

/// Chooses a branching. Weight groups with fractional segment indicators
/// are split by range (left keeps segments below the weighted centroid,
/// right the rest), which closes the weak convex-hull relaxation of a
/// concave piecewise-linear objective in logarithmically many levels;
/// branching the indicators one at a time barely moves the hull. Remaining
/// fractional binaries use the most-fractional rule, lowest index on ties.
fn pick_branch(model: &MilpModel, values: &[f64]) -> Option<Branch> {
    let mut best: Option<(f64, usize)> = None;
    for (g, group) in model.adjacency_groups.iter().enumerate() {
        let score: f64 = group
            .indicators
            .iter()
            .map(|&w| {
                let frac = (values[w] - values[w].round()).abs();
                if frac > INT_TOL {
                    0.5 - (values[w] - values[w].floor() - 0.5).abs()
                } else {
                    0.0
                }
            })
            .sum();
        if score > 0.0 {
            match best {
                Some((s, _)) if score <= s => {}
                _ => best = Some((score, g)),
            }
        }
    }
    if let Some((_, g)) = best {
        let group = &model.adjacency_groups[g];
        let ws = &group.indicators;
        let mut mass = 0.0;
        let mut centroid = 0.0;
        let mut lo = usize::MAX;
        let mut hi = 0;
        for (j, &w) in ws.iter().enumerate() {
            let v = values[w].max(0.0);
            if v > INT_TOL {
                lo = lo.min(j);
                hi = hi.max(j);
            }
            mass += v;
            centroid += j as f64 * v;
        }
        if lo < hi {
            let r = ((centroid / mass.max(f64::MIN_POSITIVE)).round() as usize).clamp(lo + 1, hi);
            let left: Vec<(usize, f64, f64)> =
                (r..ws.len()).map(|j| (ws[j], 0.0, 0.0)).collect();
            let right: Vec<(usize, f64, f64)> = (0..r).map(|j| (ws[j], 0.0, 0.0)).collect();
            let left_mass: f64 = (0..r).map(|j| values[ws[j]].max(0.0)).sum();
            return Some(Branch {
                left,
                right,
                left_first: left_mass * 2.0 >= mass,
            });
        }
        // A single fractional indicator: fall through to variable branching.
    }
    let j = pick_branch_var(model, values)?;
    let frac = values[j] - values[j].floor();
    Some(Branch {
        left: vec![(j, model.vars[j].lb, 0.0)],
        right: vec![(j, 1.0, model.vars[j].ub)],
        left_first: frac < 0.5,
    })
}

fn round_integrals(model: &MilpModel, values: &mut [f64]) {
    for (j, v) in model.vars.iter().enumerate() {
        if v.kind == VarKind::Binary {
            values[j] = values[j].round();
        }
    }
}

/// Solves `model` by best-bound branch and bound with depth-first plunging.
///
/// `start`, when given, is installed as the initial incumbent after
/// verification. The returned incumbent always passes full constraint
/// substitution at [`SUBST_TOL`] and the adjacency property.
pub fn solve_mip(
    model: &MilpModel,
    limits: MipLimits,
    start: Option<&WarmStart>,
) -> Result<MipOutcome, MipError> {
    let t0 = Instant::now();
    let lp = to_lp(model);

    let mut incumbent: Option<Vec<f64>> = None;
    let mut inc_obj = f64::INFINITY;
    if let Some(ws) = start {
        if model.check_feasible(&ws.values, SUBST_TOL).is_none()
            && is_integral(model, &ws.values)
            && adjacency_holds(model, &ws.values)
        {
            let mut vals = ws.values.clone();
            round_integrals(model, &mut vals);
            inc_obj = model.objective_value(&vals);
            incumbent = Some(vals);
        } else {
            debug_assert!(false, "warm start failed verification");
        }
    }

    let mut heap = std::collections::BinaryHeap::new();
    let mut seq = 0u64;
    let mut nodes = 0u64;
    // Tightest bound among fathomed subtrees; open subtrees are covered by
    // the heap plus the current plunge chain.
    let mut fathom_min = f64::INFINITY;
    let mut last_basis: Option<Basis> = None;
    let mut current: Option<(Node, Option<Basis>)> = Some((
        Node {
            bounds: Vec::new(),
            bound: f64::NEG_INFINITY,
            seq: 0,
        },
        None,
    ));
    let mut timed_out = false;

    loop {
        let (node, node_basis) = match current.take() {
            Some(n) => n,
            None => match heap.pop() {
                Some(HeapNode(n)) => (n, None),
                None => break,
            },
        };
        if let Some(tl) = limits.time {
            if t0.elapsed() >= tl {
                heap.push(HeapNode(node));
                timed_out = true;
                break;
            }
        }
        // Cutoff by the parent bound before paying for an LP. Nodes that
        // cannot beat the incumbent by more than the relative floor are
        // fathomed; symmetric models have large equal-objective plateaus
        // that would otherwise all be enumerated.
        let cutoff = inc_obj - (limits.gap.max(0.0) + OBJ_EPS) * inc_obj.abs().max(1.0);
        if node.bound >= cutoff {
            fathom_min = fathom_min.min(node.bound);
            continue;
        }

        let basis_ref = node_basis.as_ref().or(last_basis.as_ref());
        let r = simplex::solve(&lp, &node.bounds, basis_ref);
        if node.seq > 0 {
            nodes += 1;
        }
        let r = if r.status == LpStatus::NumericalFailure {
            // One cold retry before surfacing the failure.
            let retry = simplex::solve(&lp, &node.bounds, None);
            if retry.status == LpStatus::NumericalFailure {
                return Err(MipError::Numerical(format!(
                    "node {} LP failed after cold restart",
                    node.seq
                )));
            }
            retry
        } else {
            r
        };
        match r.status {
            LpStatus::Infeasible => {
                fathom_min = fathom_min.min(f64::INFINITY);
                continue;
            }
            LpStatus::Unbounded => {
                // With an incumbent this cannot happen in our models; treat
                // as an unbounded relaxation verdict at the root.
                if node.seq == 0 && incumbent.is_none() {
                    return Ok(MipOutcome {
                        status: MipStatus::Infeasible,
                        values: None,
                        objective: f64::INFINITY,
                        best_bound: f64::NEG_INFINITY,
                        nodes,
                        wall: t0.elapsed(),
                    });
                }
                return Err(MipError::Numerical("unbounded node relaxation".into()));
            }
            LpStatus::NumericalFailure => unreachable!("handled above"),
            LpStatus::Optimal => {}
        }
        last_basis = Some(r.basis.clone());
        let node_obj = r.objective;
        if node_obj >= cutoff {
            fathom_min = fathom_min.min(node_obj);
            continue;
        }

        match pick_branch(model, &r.values) {
            None => {
                // Integral relaxation: candidate incumbent.
                if model.check_feasible(&r.values, SUBST_TOL).is_none()
                    && adjacency_holds(model, &r.values)
                {
                    let mut vals = r.values.clone();
                    round_integrals(model, &mut vals);
                    let obj = model.objective_value(&vals);
                    if obj < inc_obj {
                        inc_obj = obj;
                        incumbent = Some(vals);
                    }
                    fathom_min = fathom_min.min(node_obj.min(obj));
                } else {
                    // Tolerance-level mismatch between the LP and the
                    // substitution check; fathom with the node bound, the
                    // subtree optimum cannot be below it.
                    fathom_min = fathom_min.min(node_obj);
                }
                continue;
            }
            Some(branch) => {
                let mut left = node.bounds.clone();
                left.extend_from_slice(&branch.left);
                let mut right = node.bounds.clone();
                right.extend_from_slice(&branch.right);
                seq += 1;
                let left_node = Node {
                    bounds: left,
                    bound: node_obj,
                    seq,
                };
                seq += 1;
                let right_node = Node {
                    bounds: right,
                    bound: node_obj,
                    seq,
                };
                let (first, second) = if branch.left_first {
                    (left_node, right_node)
                } else {
                    (right_node, left_node)
                };
                heap.push(HeapNode(second));
                current = Some((first, Some(r.basis)));
            }
        }

        // Proven-gap early stop.
        if limits.gap > 0.0 && incumbent.is_some() {
            let open = open_bound(&heap, &current);
            let lb = open.min(fathom_min);
            if (inc_obj - lb) <= limits.gap * inc_obj.abs() {
                let best_bound = lb.min(inc_obj);
                return Ok(MipOutcome {
                    status: MipStatus::GapLimit,
                    values: incumbent,
                    objective: inc_obj,
                    best_bound,
                    nodes,
                    wall: t0.elapsed(),
                });
            }
        }
    }

    let wall = t0.elapsed();
    if timed_out {
        let open = open_bound(&heap, &None);
        return Ok(MipOutcome {
            status: MipStatus::TimeLimit,
            best_bound: open.min(fathom_min).min(inc_obj),
            values: incumbent,
            objective: inc_obj,
            nodes,
            wall,
        });
    }
    match incumbent {
        Some(values) => Ok(MipOutcome {
            status: MipStatus::Optimal,
            best_bound: inc_obj,
            values: Some(values),
            objective: inc_obj,
            nodes,
            wall,
        }),
        None => Ok(MipOutcome {
            status: MipStatus::Infeasible,
            best_bound: f64::INFINITY,
            values: None,
            objective: f64::INFINITY,
            nodes,
            wall,
        }),
    }
}

fn open_bound(
    heap: &std::collections::BinaryHeap<HeapNode>,
    current: &Option<(Node, Option<Basis>)>,
) -> f64 {
    let heap_min = heap
        .iter()
        .map(|HeapNode(n)| n.bound)
        .fold(f64::INFINITY, f64::min);
    match current {
        Some((n, _)) => heap_min.min(n.bound),
        None => heap_min,
    }
}

/// Relative optimality gap of an outcome, with a small-denominator floor.
pub fn relative_gap(objective: f64, bound: f64) -> f64 {
    if !objective.is_finite() {
        return f64::INFINITY;
    }
    (objective - bound) / objective.abs().max(OBJ_EPS)
}

// ----- external backend ------------------------------------------------------

/// Runs an external MILP solver: exports MPS, substitutes `{mps}` and
/// `{sol}` in the command template, executes it, and reads back a solution
/// file of whitespace-separated `name value` lines. Unknown names warn to
/// stderr, absent variables default to zero. The imported solution is
/// verified by substitution and its objective recomputed from the model;
/// the external solver's claims are never trusted blindly.
pub fn solve_external(
    model: &MilpModel,
    solver_cmd: &str,
    limits: MipLimits,
) -> Result<MipOutcome, MipError> {
    let t0 = Instant::now();
    let dir = std::env::temp_dir();
    let tag = format!(
        "valveuc-{}-{}",
        std::process::id(),
        t0.elapsed().as_nanos()
    );
    let mps_path = dir.join(format!("{tag}.mps"));
    let sol_path = dir.join(format!("{tag}.sol"));
    std::fs::write(&mps_path, crate::milp::export_mps(model))
        .map_err(|e| MipError::Subprocess(format!("writing MPS: {e}")))?;

    let tokens: Vec<String> = solver_cmd
        .split_whitespace()
        .map(|t| {
            t.replace("{mps}", &mps_path.to_string_lossy())
                .replace("{sol}", &sol_path.to_string_lossy())
        })
        .collect();
    if tokens.is_empty() {
        return Err(MipError::Subprocess("empty solver command".into()));
    }
    let mut child = std::process::Command::new(&tokens[0])
        .args(&tokens[1..])
        .stdout(std::process::Stdio::null())
        .spawn()
        .map_err(|e| MipError::Subprocess(format!("spawning `{}`: {e}", tokens[0])))?;
    let status = loop {
        match child.try_wait() {
            Ok(Some(st)) => break st,
            Ok(None) => {
                if let Some(tl) = limits.time {
                    if t0.elapsed() >= tl {
                        let _ = child.kill();
                        let _ = child.wait();
                        let _ = std::fs::remove_file(&mps_path);
                        let _ = std::fs::remove_file(&sol_path);
                        return Ok(MipOutcome {
                            status: MipStatus::TimeLimit,
                            values: None,
                            objective: f64::INFINITY,
                            best_bound: f64::NEG_INFINITY,
                            nodes: 0,
                            wall: t0.elapsed(),
                        });
                    }
                }
                std::thread::sleep(Duration::from_millis(10));
            }
            Err(e) => return Err(MipError::Subprocess(format!("waiting: {e}"))),
        }
    };
    let text = if status.success() {
        std::fs::read_to_string(&sol_path)
            .map_err(|e| MipError::SolutionParse(format!("reading {}: {e}", sol_path.display())))
    } else {
        Err(MipError::Subprocess(format!(
            "solver exited with {status}"
        )))
    };
    let _ = std::fs::remove_file(&mps_path);
    let _ = std::fs::remove_file(&sol_path);
    let text = text?;

    let values = parse_solution_file(model, &text)?;
    if !is_integral(model, &values) {
        return Err(MipError::Disagreement(
            "imported solution has fractional binaries".into(),
        ));
    }
    if let Some((row, viol)) = model.check_feasible(&values, SUBST_TOL) {
        let what = if row == usize::MAX {
            "variable bounds".to_string()
        } else {
            model.constraints[row].name.clone()
        };
        return Err(MipError::Disagreement(format!(
            "imported solution violates {what} by {viol:.3e}"
        )));
    }
    let mut values = values;
    round_integrals(model, &mut values);
    let objective = model.objective_value(&values);
    Ok(MipOutcome {
        status: MipStatus::Optimal,
        values: Some(values),
        objective,
        // The exchange format carries no bound; a clean exit is taken as a
        // proven optimum and the recomputed objective doubles as the bound.
        best_bound: objective,
        nodes: 0,
        wall: t0.elapsed(),
    })
}

/// Parses `name value` lines into a dense assignment for `model`.
pub fn parse_solution_file(model: &MilpModel, text: &str) -> Result<Vec<f64>, MipError> {
    let mut values = vec![0.0; model.num_vars()];
    let mut any = false;
    for (lno, line) in text.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() || toks[0].starts_with('#') {
            continue;
        }
        if toks.len() != 2 {
            return Err(MipError::SolutionParse(format!(
                "line {}: expected `name value`, got `{line}`",
                lno + 1
            )));
        }
        let value: f64 = toks[1].parse().map_err(|_| {
            MipError::SolutionParse(format!("line {}: bad value `{}`", lno + 1, toks[1]))
        })?;
        match model.var_index(toks[0]) {
            Some(j) => {
                values[j] = value;
                any = true;
            }
            None => eprintln!("warning: unknown variable `{}` in solution file", toks[0]),
        }
    }
    if !any {
        return Err(MipError::SolutionParse(
            "solution file assigns no known variable".into(),
        ));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{Constraint, MilpModel, Sense, VarDef, VarKind};

    /// Hand-rolled model builder for engine tests.
    pub(crate) fn raw_model(
        vars: Vec<(&str, VarKind, f64, f64, f64)>,
        rows: Vec<(Vec<(usize, f64)>, Sense, f64)>,
    ) -> MilpModel {
        let mut defs = Vec::new();
        let mut objective = Vec::new();
        for (name, kind, lb, ub, cost) in vars {
            defs.push(VarDef {
                name: name.to_string(),
                kind,
                lb,
                ub,
            });
            objective.push(cost);
        }
        let constraints = rows
            .into_iter()
            .enumerate()
            .map(|(i, (terms, sense, rhs))| Constraint {
                name: format!("r{i}"),
                terms,
                sense,
                rhs,
            })
            .collect();
        MilpModel::from_parts(defs, constraints, objective)
    }

    fn knapsack() -> MilpModel {
        // min -8a -11b -6c -4d  s.t. 5a + 7b + 4c + 3d <= 14, binaries.
        raw_model(
            vec![
                ("a", VarKind::Binary, 0.0, 1.0, -8.0),
                ("b", VarKind::Binary, 0.0, 1.0, -11.0),
                ("c", VarKind::Binary, 0.0, 1.0, -6.0),
                ("d", VarKind::Binary, 0.0, 1.0, -4.0),
            ],
            vec![(
                vec![(0, 5.0), (1, 7.0), (2, 4.0), (3, 3.0)],
                Sense::Le,
                14.0,
            )],
        )
    }

    /// Exhaustive oracle for pure-binary models.
    pub(crate) fn enumerate_binary(model: &MilpModel) -> Option<(f64, Vec<f64>)> {
        let n = model.num_vars();
        assert!(n <= 20);
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 0u32..(1 << n) {
            let values: Vec<f64> = (0..n)
                .map(|j| {
                    if model.vars[j].lb == model.vars[j].ub {
                        model.vars[j].lb
                    } else {
                        ((mask >> j) & 1) as f64
                    }
                })
                .collect();
            let feasible = model.constraints.iter().all(|c| {
                let act: f64 = c.terms.iter().map(|&(j, v)| v * values[j]).sum();
                match c.sense {
                    Sense::Le => act <= c.rhs + 1e-9,
                    Sense::Ge => act >= c.rhs - 1e-9,
                    Sense::Eq => (act - c.rhs).abs() <= 1e-9,
                }
            });
            if !feasible {
                continue;
            }
            let obj = model.objective_value(&values);
            match &best {
                Some((b, _)) if obj >= *b => {}
                _ => best = Some((obj, values)),
            }
        }
        best
    }

    #[test]
    fn knapsack_matches_enumeration() {
        let model = knapsack();
        let (want, _) = enumerate_binary(&model).unwrap();
        let out = solve_mip(&model, MipLimits::default(), None).unwrap();
        assert_eq!(out.status, MipStatus::Optimal);
        assert!((out.objective - want).abs() <= 1e-9 * want.abs().max(1.0));
        assert_eq!(out.best_bound, out.objective);
        let vals = out.values.unwrap();
        assert!(is_integral(&model, &vals));
    }

    #[test]
    fn integral_root_skips_branching() {
        // Binaries forced by bounds: the root LP is already integral.
        let model = raw_model(
            vec![
                ("a", VarKind::Binary, 1.0, 1.0, 2.0),
                ("b", VarKind::Binary, 0.0, 0.0, 5.0),
                ("x", VarKind::Continuous, 0.0, 10.0, 1.0),
            ],
            vec![(vec![(2, 1.0), (0, 1.0)], Sense::Ge, 3.0)],
        );
        let out = solve_mip(&model, MipLimits::default(), None).unwrap();
        assert_eq!(out.status, MipStatus::Optimal);
        assert_eq!(out.nodes, 0, "no branching nodes for an integral root");
        assert!((out.objective - 4.0).abs() < 1e-8);
    }

    #[test]
    fn infeasible_model_is_reported() {
        let model = raw_model(
            vec![("a", VarKind::Binary, 0.0, 1.0, 1.0)],
            vec![(vec![(0, 1.0)], Sense::Ge, 2.0)],
        );
        let out = solve_mip(&model, MipLimits::default(), None).unwrap();
        assert_eq!(out.status, MipStatus::Infeasible);
        assert!(out.values.is_none());
    }

    #[test]
    fn warm_start_becomes_initial_incumbent() {
        let model = knapsack();
        // a + c + d: weight 12, objective -18 (not optimal, but feasible).
        let ws = WarmStart {
            values: vec![1.0, 0.0, 1.0, 1.0],
        };
        let out = solve_mip(&model, MipLimits::default(), Some(&ws)).unwrap();
        assert_eq!(out.status, MipStatus::Optimal);
        let (want, _) = enumerate_binary(&model).unwrap();
        assert!((out.objective - want).abs() <= 1e-9);
    }

    #[test]
    fn deterministic_node_counts() {
        let model = knapsack();
        let a = solve_mip(&model, MipLimits::default(), None).unwrap();
        let b = solve_mip(&model, MipLimits::default(), None).unwrap();
        assert_eq!(a.nodes, b.nodes);
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn solve_lp_relaxes_integrality() {
        let model = knapsack();
        let out = solve_lp(&model, None);
        assert_eq!(out.status, LpOutcomeStatus::Optimal);
        // Relaxation is at least as good as the integer optimum.
        let (mip, _) = enumerate_binary(&model).unwrap();
        assert!(out.objective <= mip + 1e-9);
    }

    #[test]
    fn external_driver_round_trips_a_solution_file() {
        // Fake solver: a shell script that answers the one-variable model
        // min x s.t. x >= 1 by writing `x 1`.
        let model = raw_model(
            vec![("x", VarKind::Continuous, 0.0, f64::INFINITY, 1.0)],
            vec![(vec![(0, 1.0)], Sense::Ge, 1.0)],
        );
        let dir = std::env::temp_dir();
        let script = dir.join(format!("valveuc-fake-solver-{}.sh", std::process::id()));
        std::fs::write(&script, "#!/bin/sh\nprintf 'x 1\\n' > \"$2\"\n").unwrap();
        let cmd = format!("sh {} {{mps}} {{sol}}", script.display());
        let out = solve_external(&model, &cmd, MipLimits::default()).unwrap();
        std::fs::remove_file(&script).ok();
        assert_eq!(out.status, MipStatus::Optimal);
        assert!((out.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn malformed_solution_file_is_an_error() {
        let model = raw_model(
            vec![("x", VarKind::Continuous, 0.0, 10.0, 1.0)],
            vec![(vec![(0, 1.0)], Sense::Ge, 1.0)],
        );
        assert!(matches!(
            parse_solution_file(&model, "x one\n"),
            Err(MipError::SolutionParse(_))
        ));
        assert!(matches!(
            parse_solution_file(&model, ""),
            Err(MipError::SolutionParse(_))
        ));
        // Unknown names are tolerated (with a warning) as long as something
        // known is assigned.
        let vals = parse_solution_file(&model, "x 1.5\nbogus 3\n").unwrap();
        assert_eq!(vals, vec![1.5]);
    }

    #[test]
    fn infeasible_import_is_a_disagreement() {
        let model = raw_model(
            vec![("x", VarKind::Continuous, 0.0, 10.0, 1.0)],
            vec![(vec![(0, 1.0)], Sense::Ge, 5.0)],
        );
        let dir = std::env::temp_dir();
        let script = dir.join(format!("valveuc-bad-solver-{}.sh", std::process::id()));
        std::fs::write(&script, "#!/bin/sh\nprintf 'x 1\\n' > \"$2\"\n").unwrap();
        let cmd = format!("sh {} {{mps}} {{sol}}", script.display());
        let r = solve_external(&model, &cmd, MipLimits::default());
        std::fs::remove_file(&script).ok();
        assert!(matches!(r, Err(MipError::Disagreement(_))));
    }
}
