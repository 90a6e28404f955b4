//! Backend-neutral MILP assembly for the commitment problem, warm-start
//! encoding, and MPS export/import.
//!
//! For every unit `u` and period `t` the model carries the binaries `y`
//! (committed), `xon`/`xoff` (switched on/off), `shot`/`scold` (start
//! type), the dispatch `p`, the convex-combination weights `z[u,t,k]` (one
//! per breakpoint of the unit's envelope), and segment indicators
//! `w[u,t,j]` (one per envelope segment). The weights are tied to one
//! segment by an incremental adjacency formulation, so the exported MPS
//! needs no SOS extension:
//!
//! ```text
//! z[k] <= w[k-1] + w[k]        (edge weights use the single adjacent w)
//! sum_j w[j] = y               (exactly one active segment when committed)
//! sum_k z[k] = y               (a full convex combination when committed)
//! ```
//!
//! The linearized fuel cost is folded straight into the objective as
//! `sum_k Y[u,t,k] z[u,t,k]`, and decommitment zeroes both the dispatch and
//! the cost because `y` appears on the right-hand side of the weight rows.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::cost::BreakpointSet;
use crate::instance::{Instance, UnitParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct VarDef {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// The convex-combination weights of one (unit, period) with their segment
/// indicators; feasible integral points have at most two positive weights,
/// necessarily adjacent.
#[derive(Debug, Clone)]
pub struct AdjacencyGroup {
    pub unit: usize,
    pub period: usize,
    pub weights: Vec<usize>,
    pub indicators: Vec<usize>,
}

/// A built model: variables, rows, adjacency groups, minimization objective.
#[derive(Debug, Clone)]
pub struct MilpModel {
    pub vars: Vec<VarDef>,
    pub constraints: Vec<Constraint>,
    pub adjacency_groups: Vec<AdjacencyGroup>,
    /// Dense objective, one coefficient per variable.
    pub objective: Vec<f64>,
    var_index: HashMap<String, usize>,
    /// Typed variable handles, indexed `[unit][period]`.
    pub ids: Option<ModelIds>,
}

/// Variable indices per (unit, period), kept alongside the model so
/// consumers need not parse names.
#[derive(Debug, Clone)]
pub struct ModelIds {
    pub y: Vec<Vec<usize>>,
    pub xon: Vec<Vec<usize>>,
    pub xoff: Vec<Vec<usize>>,
    pub s_hot: Vec<Vec<usize>>,
    pub s_cold: Vec<Vec<usize>>,
    pub p: Vec<Vec<usize>>,
    pub z: Vec<Vec<Vec<usize>>>,
    pub w: Vec<Vec<Vec<usize>>>,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("no breakpoint set for unit `{unit}` in period {period}")]
    MissingBreakpoints { unit: String, period: usize },
    #[error("instance has an empty horizon")]
    EmptyHorizon,
    #[error("warm start is not feasible for the target model: {0}")]
    WarmStartInfeasible(String),
}

impl MilpModel {
    /// Assembles a model from raw parts, indexing variables by name. Meant
    /// for tests and import paths; `build_model` is the normal constructor.
    pub fn from_parts(
        vars: Vec<VarDef>,
        constraints: Vec<Constraint>,
        objective: Vec<f64>,
    ) -> MilpModel {
        assert_eq!(vars.len(), objective.len());
        let var_index = vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), i))
            .collect();
        MilpModel {
            vars,
            constraints,
            adjacency_groups: Vec::new(),
            objective,
            var_index,
            ids: None,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.var_index.get(name).copied()
    }

    /// Row activity minus rhs for every constraint under `values`.
    pub fn residuals(&self, values: &[f64]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| {
                let act: f64 = c.terms.iter().map(|&(j, v)| v * values[j]).sum();
                act - c.rhs
            })
            .collect()
    }

    /// First constraint violated beyond `tol * max(1, |rhs|)`, if any.
    pub fn check_feasible(&self, values: &[f64], tol: f64) -> Option<(usize, f64)> {
        for (i, c) in self.constraints.iter().enumerate() {
            let act: f64 = c.terms.iter().map(|&(j, v)| v * values[j]).sum();
            let slack = tol * c.rhs.abs().max(1.0);
            let viol = match c.sense {
                Sense::Le => act - c.rhs,
                Sense::Ge => c.rhs - act,
                Sense::Eq => (act - c.rhs).abs(),
            };
            if viol > slack {
                return Some((i, viol));
            }
        }
        for (j, v) in self.vars.iter().enumerate() {
            let x = values[j];
            if x < v.lb - tol * v.lb.abs().max(1.0) || x > v.ub + tol * v.ub.abs().max(1.0) {
                return Some((usize::MAX, 0.0));
            }
        }
        None
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective
            .iter()
            .zip(values)
            .map(|(c, x)| c * x)
            .sum()
    }
}

struct Builder {
    vars: Vec<VarDef>,
    constraints: Vec<Constraint>,
    objective: Vec<f64>,
    var_index: HashMap<String, usize>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            vars: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            var_index: HashMap::new(),
        }
    }

    fn var(&mut self, name: String, kind: VarKind, lb: f64, ub: f64, cost: f64) -> usize {
        let idx = self.vars.len();
        debug_assert!(!self.var_index.contains_key(&name), "duplicate var {name}");
        self.var_index.insert(name.clone(), idx);
        self.vars.push(VarDef { name, kind, lb, ub });
        self.objective.push(cost);
        idx
    }

    fn row(&mut self, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint {
            name,
            terms,
            sense,
            rhs,
        });
    }
}

/// Assembles the full MILP from an instance and one breakpoint set per
/// (unit, period). `bps[u][t]` must cover every unit and period.
pub fn build_model(inst: &Instance, bps: &[Vec<BreakpointSet>]) -> Result<MilpModel, ModelError> {
    let horizon = inst.periods;
    if horizon == 0 {
        return Err(ModelError::EmptyHorizon);
    }
    for (u, unit) in inst.units.iter().enumerate() {
        if bps.get(u).map_or(0, Vec::len) != horizon {
            return Err(ModelError::MissingBreakpoints {
                unit: unit.id.clone(),
                period: bps.get(u).map_or(0, Vec::len) + 1,
            });
        }
    }

    let nu = inst.units.len();
    let mut b = Builder::new();
    let mut ids = ModelIds {
        y: vec![vec![]; nu],
        xon: vec![vec![]; nu],
        xoff: vec![vec![]; nu],
        s_hot: vec![vec![]; nu],
        s_cold: vec![vec![]; nu],
        p: vec![vec![]; nu],
        z: vec![vec![]; nu],
        w: vec![vec![]; nu],
    };
    let mut groups = Vec::new();

    // Variables, unit-major then period; weights follow the unit's envelope.
    for (u, unit) in inst.units.iter().enumerate() {
        let pinned = unit.pinned_prefix() as usize;
        for t in 1..=horizon {
            let uid = &unit.id;
            // Initial-state pinning also lands on the variable bounds so a
            // branch-and-bound backend sees these binaries as fixed.
            let (y_lb, y_ub) = if t <= pinned {
                let v = if unit.y_prev { 1.0 } else { 0.0 };
                (v, v)
            } else {
                (0.0, 1.0)
            };
            let y = b.var(format!("y[{uid},{t}]"), VarKind::Binary, y_lb, y_ub, 0.0);
            let xon = b.var(format!("xon[{uid},{t}]"), VarKind::Binary, 0.0, 1.0, 0.0);
            let xoff = b.var(format!("xoff[{uid},{t}]"), VarKind::Binary, 0.0, 1.0, 0.0);
            let s_hot = b.var(
                format!("shot[{uid},{t}]"),
                VarKind::Binary,
                0.0,
                1.0,
                unit.a_hot,
            );
            let s_cold = b.var(
                format!("scold[{uid},{t}]"),
                VarKind::Binary,
                0.0,
                1.0,
                unit.a_cold,
            );
            let p = b.var(
                format!("p[{uid},{t}]"),
                VarKind::Continuous,
                0.0,
                unit.p_max,
                0.0,
            );
            let pts = bps[u][t - 1].points();
            let mut zs = Vec::with_capacity(pts.len());
            for (k, pt) in pts.iter().enumerate() {
                zs.push(b.var(
                    format!("z[{uid},{t},{k}]"),
                    VarKind::Continuous,
                    0.0,
                    1.0,
                    pt.y,
                ));
            }
            let mut ws = Vec::with_capacity(pts.len().saturating_sub(1));
            for j in 0..pts.len().saturating_sub(1) {
                ws.push(b.var(format!("w[{uid},{t},{j}]"), VarKind::Binary, 0.0, 1.0, 0.0));
            }
            ids.y[u].push(y);
            ids.xon[u].push(xon);
            ids.xoff[u].push(xoff);
            ids.s_hot[u].push(s_hot);
            ids.s_cold[u].push(s_cold);
            ids.p[u].push(p);
            ids.z[u].push(zs.clone());
            ids.w[u].push(ws.clone());
            groups.push(AdjacencyGroup {
                unit: u,
                period: t - 1,
                weights: zs,
                indicators: ws,
            });
        }
    }

    // Demand balance and spinning reserve, one row per period.
    for t in 1..=horizon {
        let terms: Vec<(usize, f64)> = (0..nu).map(|u| (ids.p[u][t - 1], 1.0)).collect();
        b.row(format!("load[{t}]"), terms, Sense::Eq, inst.demand[t - 1]);
        let terms: Vec<(usize, f64)> = (0..nu)
            .map(|u| (ids.y[u][t - 1], inst.units[u].p_max))
            .collect();
        b.row(
            format!("reserve[{t}]"),
            terms,
            Sense::Ge,
            inst.demand[t - 1] + inst.reserve[t - 1],
        );
    }

    for (u, unit) in inst.units.iter().enumerate() {
        let uid = &unit.id;
        for t in 1..=horizon {
            let ti = t - 1;
            let y = ids.y[u][ti];
            let p = ids.p[u][ti];
            let zs = &ids.z[u][ti];
            let ws = &ids.w[u][ti];
            let pts = bps[u][ti].points();

            // Dispatch as a convex combination of the breakpoints.
            let mut terms = vec![(p, 1.0)];
            terms.extend(zs.iter().zip(pts).map(|(&z, pt)| (z, -pt.x)));
            b.row(format!("defp[{uid},{t}]"), terms, Sense::Eq, 0.0);

            // Full weight when committed, zero weight when not.
            let mut terms: Vec<(usize, f64)> = zs.iter().map(|&z| (z, 1.0)).collect();
            terms.push((y, -1.0));
            b.row(format!("convex[{uid},{t}]"), terms, Sense::Eq, 0.0);

            // Weights may only load the endpoints of one active segment.
            for (k, &z) in zs.iter().enumerate() {
                let mut terms = vec![(z, 1.0)];
                if k > 0 {
                    terms.push((ws[k - 1], -1.0));
                }
                if k < ws.len() {
                    terms.push((ws[k], -1.0));
                }
                b.row(format!("adj[{uid},{t},{k}]"), terms, Sense::Le, 0.0);
            }
            if !ws.is_empty() {
                let mut terms: Vec<(usize, f64)> = ws.iter().map(|&w| (w, 1.0)).collect();
                terms.push((y, -1.0));
                b.row(format!("segsum[{uid},{t}]"), terms, Sense::Eq, 0.0);
            }

            // Technical production limits.
            b.row(
                format!("plo[{uid},{t}]"),
                vec![(y, unit.p_min), (p, -1.0)],
                Sense::Le,
                0.0,
            );
            b.row(
                format!("phi[{uid},{t}]"),
                vec![(p, 1.0), (y, -unit.p_max)],
                Sense::Le,
                0.0,
            );

            // Minimum up time: any start in the trailing window keeps y on.
            let tau_on = (t as i64 - unit.t_on as i64 + 1).max(1) as usize;
            let mut terms: Vec<(usize, f64)> =
                (tau_on..=t).map(|i| (ids.xon[u][i - 1], 1.0)).collect();
            terms.push((y, -1.0));
            b.row(format!("minup[{uid},{t}]"), terms, Sense::Le, 0.0);

            // Minimum down time.
            let tau_off = (t as i64 - unit.t_off as i64 + 1).max(1) as usize;
            let mut terms: Vec<(usize, f64)> =
                (tau_off..=t).map(|i| (ids.xoff[u][i - 1], 1.0)).collect();
            terms.push((y, 1.0));
            b.row(format!("mindown[{uid},{t}]"), terms, Sense::Le, 1.0);

            // Every switch-on incurs exactly one start type.
            b.row(
                format!("stincur[{uid},{t}]"),
                vec![
                    (ids.s_hot[u][ti], 1.0),
                    (ids.s_cold[u][ti], 1.0),
                    (ids.xon[u][ti], -1.0),
                ],
                Sense::Eq,
                0.0,
            );

            // Start type: a start is cold when the unit was off throughout
            // the lookback window. Pre-horizon periods contribute constants.
            let lo = t as i64 - unit.t_cold as i64 - 1;
            let mut terms = vec![(y, 1.0), (ids.s_cold[u][ti], -1.0)];
            let mut rhs = 0.0;
            for i in lo..=(t as i64 - 1) {
                if i >= 1 {
                    terms.push((ids.y[u][i as usize - 1], -1.0));
                } else {
                    rhs += unit.state_before_horizon(i) as u8 as f64;
                }
            }
            b.row(format!("sttype[{uid},{t}]"), terms, Sense::Le, rhs);

            // Switch-on detection.
            if t >= 2 {
                b.row(
                    format!("swon[{uid},{t}]"),
                    vec![(y, 1.0), (ids.y[u][ti - 1], -1.0), (ids.xon[u][ti], -1.0)],
                    Sense::Le,
                    0.0,
                );
            } else {
                b.row(
                    format!("swon[{uid},{t}]"),
                    vec![(y, 1.0), (ids.xon[u][ti], -1.0)],
                    Sense::Le,
                    unit.y_prev as u8 as f64,
                );
            }

            // Switch-off accounting ties xoff to the commitment change.
            if t >= 2 {
                b.row(
                    format!("swoff[{uid},{t}]"),
                    vec![
                        (ids.xoff[u][ti], 1.0),
                        (ids.xon[u][ti], -1.0),
                        (ids.y[u][ti - 1], -1.0),
                        (y, 1.0),
                    ],
                    Sense::Eq,
                    0.0,
                );
            } else {
                b.row(
                    format!("swoff[{uid},{t}]"),
                    vec![(ids.xoff[u][ti], 1.0), (ids.xon[u][ti], -1.0), (y, 1.0)],
                    Sense::Eq,
                    unit.y_prev as u8 as f64,
                );
            }
        }

        // Initial-state pinning rows for the prefix forced by min up/down.
        let pinned = (unit.pinned_prefix() as usize).min(horizon);
        for t in 1..=pinned {
            if unit.y_prev {
                b.row(
                    format!("inion[{uid},{t}]"),
                    vec![(ids.y[u][t - 1], 1.0)],
                    Sense::Eq,
                    1.0,
                );
            } else {
                b.row(
                    format!("inioff[{uid},{t}]"),
                    vec![(ids.y[u][t - 1], 1.0)],
                    Sense::Eq,
                    0.0,
                );
            }
        }
    }

    Ok(MilpModel {
        vars: b.vars,
        constraints: b.constraints,
        adjacency_groups: groups,
        objective: b.objective,
        var_index: b.var_index,
        ids: Some(ids),
    })
}

/// A complete assignment for a model, suitable as a MIP starting incumbent.
#[derive(Debug, Clone)]
pub struct WarmStart {
    /// One value per model variable, in declaration order.
    pub values: Vec<f64>,
}

impl WarmStart {
    /// The assignment as (name, value) pairs.
    pub fn named<'m>(&'m self, model: &'m MilpModel) -> impl Iterator<Item = (&'m str, f64)> {
        model
            .vars
            .iter()
            .zip(&self.values)
            .map(|(v, &x)| (v.name.as_str(), x))
    }
}

/// Classifies the start of unit `u` at period `t` (1-based) given the
/// commitment schedule: cold when the unit was off for more than `t_cold`
/// periods beforehand, otherwise whichever of hot/cold is cheaper.
pub fn start_is_cold(unit: &UnitParams, schedule_u: &[bool], t: usize) -> bool {
    let mut off_streak = 0u64;
    let mut i = t as i64 - 1;
    loop {
        let on = if i >= 1 {
            schedule_u[i as usize - 1]
        } else {
            unit.state_before_horizon(i)
        };
        if on {
            break;
        }
        off_streak += 1;
        if off_streak > unit.t_cold as u64 {
            return true; // forced cold
        }
        i -= 1;
    }
    // A hot start is allowed; take it unless cold is actually cheaper.
    unit.a_cold < unit.a_hot
}

/// Re-expresses a previous solution (schedule plus dispatch) as a complete
/// assignment for a model built over `bps`, which must contain every
/// breakpoint the previous model had for the same (unit, period).
///
/// Binaries are reconstructed from the schedule; each committed dispatch is
/// mapped onto its bracketing breakpoints in the new envelope. The result
/// is verified by substitution; failure signals breakpoint bookkeeping
/// drift and is an error, never silently accepted.
pub fn encode_warm_start(
    model: &MilpModel,
    inst: &Instance,
    bps: &[Vec<BreakpointSet>],
    schedule: &[Vec<bool>],
    dispatch: &[Vec<f64>],
) -> Result<WarmStart, ModelError> {
    let ids = model.ids.as_ref().expect("model built by build_model");
    let mut values = vec![0.0; model.num_vars()];
    for (u, unit) in inst.units.iter().enumerate() {
        for t in 1..=inst.periods {
            let ti = t - 1;
            let on = schedule[u][ti];
            let was_on = if t >= 2 {
                schedule[u][ti - 1]
            } else {
                unit.y_prev
            };
            values[ids.y[u][ti]] = on as u8 as f64;
            let xon = on && !was_on;
            let xoff = !on && was_on;
            values[ids.xon[u][ti]] = xon as u8 as f64;
            values[ids.xoff[u][ti]] = xoff as u8 as f64;
            if xon {
                if start_is_cold(unit, &schedule[u], t) {
                    values[ids.s_cold[u][ti]] = 1.0;
                } else {
                    values[ids.s_hot[u][ti]] = 1.0;
                }
            }
            if on {
                let p = dispatch[u][ti];
                values[ids.p[u][ti]] = p;
                let pts = bps[u][ti].points();
                let k = pts
                    .partition_point(|b| b.x <= p)
                    .saturating_sub(1)
                    .min(pts.len().saturating_sub(2));
                let (lo, hi) = (pts[k].x, pts[k + 1].x);
                let lam = ((p - lo) / (hi - lo)).clamp(0.0, 1.0);
                values[ids.z[u][ti][k]] = 1.0 - lam;
                values[ids.z[u][ti][k + 1]] = lam;
                values[ids.w[u][ti][k]] = 1.0;
            }
        }
    }
    if let Some((row, viol)) = model.check_feasible(&values, 1e-6) {
        let what = if row == usize::MAX {
            "variable bound".to_string()
        } else {
            model.constraints[row].name.clone()
        };
        return Err(ModelError::WarmStartInfeasible(format!(
            "{what} violated by {viol:.3e}"
        )));
    }
    Ok(WarmStart { values })
}

// ----- MPS ------------------------------------------------------------------

/// Writes the model as free-format MPS. Binaries sit inside
/// `'MARKER' 'INTORG'`/`'INTEND'` blocks with explicit bounds, columns keep
/// declaration order, and every coefficient prints with the shortest
/// round-tripping representation, so output is deterministic.
pub fn export_mps(model: &MilpModel) -> String {
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.num_vars()];
    for (r, c) in model.constraints.iter().enumerate() {
        for &(j, v) in &c.terms {
            if v != 0.0 {
                cols[j].push((r, v));
            }
        }
    }
    let mut out = String::new();
    out.push_str("NAME valveuc\n");
    out.push_str("ROWS\n N COST\n");
    for c in &model.constraints {
        let s = match c.sense {
            Sense::Le => 'L',
            Sense::Eq => 'E',
            Sense::Ge => 'G',
        };
        let _ = writeln!(out, " {s} {}", c.name);
    }
    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut marker = 0usize;
    for (j, var) in model.vars.iter().enumerate() {
        let want_int = var.kind == VarKind::Binary;
        if want_int != in_int {
            marker += 1;
            let kind = if want_int { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, " MARKER{marker} 'MARKER' {kind}");
            in_int = want_int;
        }
        let mut wrote = false;
        if model.objective[j] != 0.0 {
            let _ = writeln!(out, " {} COST {}", var.name, model.objective[j]);
            wrote = true;
        }
        for &(r, v) in &cols[j] {
            let _ = writeln!(out, " {} {} {}", var.name, model.constraints[r].name, v);
            wrote = true;
        }
        if !wrote {
            let _ = writeln!(out, " {} COST 0", var.name);
        }
    }
    if in_int {
        marker += 1;
        let _ = writeln!(out, " MARKER{marker} 'MARKER' 'INTEND'");
    }
    out.push_str("RHS\n");
    for c in &model.constraints {
        if c.rhs != 0.0 {
            let _ = writeln!(out, " RHS1 {} {}", c.name, c.rhs);
        }
    }
    out.push_str("BOUNDS\n");
    for var in &model.vars {
        if var.lb == var.ub {
            let _ = writeln!(out, " FX BND {} {}", var.name, var.lb);
            continue;
        }
        if var.lb != 0.0 {
            let _ = writeln!(out, " LO BND {} {}", var.name, var.lb);
        }
        if var.ub.is_finite() {
            let _ = writeln!(out, " UP BND {} {}", var.name, var.ub);
        }
    }
    out.push_str("ENDATA\n");
    out
}

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("unsupported MPS feature: {0}")]
    Unsupported(String),
}

/// Reads back the free-format MPS subset written by [`export_mps`]:
/// NAME/ROWS/COLUMNS (with integrality markers)/RHS/BOUNDS/ENDATA. General
/// integers are rejected; adjacency-group metadata is not representable in
/// MPS, so the returned model has none.
pub fn parse_mps(text: &str) -> Result<MilpModel, MpsError> {
    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        None,
        Rows,
        Columns,
        Rhs,
        Bounds,
        Ranges,
        Done,
    }
    let mut section = Section::None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut constraints: Vec<Constraint> = Vec::new();
    let mut obj_name: Option<String> = None;
    let mut vars: Vec<VarDef> = Vec::new();
    let mut objective: Vec<f64> = Vec::new();
    let mut var_index: HashMap<String, usize> = HashMap::new();
    let mut in_int = false;

    let bad = |line: usize, msg: &str| MpsError::Malformed {
        line,
        msg: msg.to_string(),
    };

    for (lno, raw) in text.lines().enumerate() {
        let line = lno + 1;
        if raw.starts_with('*') {
            continue;
        }
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let is_header = !raw.starts_with(' ') && !raw.starts_with('\t');
        if is_header {
            section = match toks[0] {
                "NAME" => section,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "RANGES" => Section::Ranges,
                "ENDATA" => Section::Done,
                other => return Err(MpsError::Unsupported(format!("section {other}"))),
            };
            continue;
        }
        match section {
            Section::Rows => {
                if toks.len() != 2 {
                    return Err(bad(line, "ROWS entries need a type and a name"));
                }
                let name = toks[1].to_string();
                match toks[0] {
                    "N" => {
                        if obj_name.is_none() {
                            obj_name = Some(name);
                        }
                    }
                    kind => {
                        let sense = match kind {
                            "L" => Sense::Le,
                            "E" => Sense::Eq,
                            "G" => Sense::Ge,
                            _ => return Err(bad(line, "row type must be N, L, E or G")),
                        };
                        row_index.insert(name.clone(), constraints.len());
                        constraints.push(Constraint {
                            name,
                            terms: Vec::new(),
                            sense,
                            rhs: 0.0,
                        });
                    }
                }
            }
            Section::Columns => {
                if toks.len() >= 3 && toks[1] == "'MARKER'" {
                    match toks[2] {
                        "'INTORG'" => in_int = true,
                        "'INTEND'" => in_int = false,
                        other => return Err(MpsError::Unsupported(format!("marker {other}"))),
                    }
                    continue;
                }
                if toks.len() < 3 || toks.len() % 2 == 0 {
                    return Err(bad(line, "COLUMNS entries are `var row value` pairs"));
                }
                let vname = toks[0];
                let j = *var_index.entry(vname.to_string()).or_insert_with(|| {
                    vars.push(VarDef {
                        name: vname.to_string(),
                        kind: if in_int {
                            VarKind::Binary
                        } else {
                            VarKind::Continuous
                        },
                        lb: 0.0,
                        ub: if in_int { 1.0 } else { f64::INFINITY },
                    });
                    objective.push(0.0);
                    vars.len() - 1
                });
                for pair in toks[1..].chunks(2) {
                    let value: f64 = pair[1]
                        .parse()
                        .map_err(|_| bad(line, "bad numeric value"))?;
                    if Some(pair[0]) == obj_name.as_deref() {
                        objective[j] = value;
                    } else if let Some(&r) = row_index.get(pair[0]) {
                        if value != 0.0 {
                            constraints[r].terms.push((j, value));
                        }
                    } else {
                        return Err(bad(line, "unknown row in COLUMNS"));
                    }
                }
            }
            Section::Rhs => {
                if toks.len() < 3 || toks.len() % 2 == 0 {
                    return Err(bad(line, "RHS entries are `set row value` pairs"));
                }
                for pair in toks[1..].chunks(2) {
                    let value: f64 = pair[1]
                        .parse()
                        .map_err(|_| bad(line, "bad numeric value"))?;
                    if let Some(&r) = row_index.get(pair[0]) {
                        constraints[r].rhs = value;
                    } else if Some(pair[0]) != obj_name.as_deref() {
                        return Err(bad(line, "unknown row in RHS"));
                    }
                }
            }
            Section::Bounds => {
                if toks.len() < 3 {
                    return Err(bad(line, "BOUNDS entries need a type, set, and name"));
                }
                let j = *var_index
                    .get(toks[2])
                    .ok_or_else(|| bad(line, "unknown variable in BOUNDS"))?;
                let value = || -> Result<f64, MpsError> {
                    toks.get(3)
                        .ok_or_else(|| bad(line, "missing bound value"))?
                        .parse()
                        .map_err(|_| bad(line, "bad numeric value"))
                };
                match toks[0] {
                    "UP" => vars[j].ub = value()?,
                    "LO" => vars[j].lb = value()?,
                    "FX" => {
                        let v = value()?;
                        vars[j].lb = v;
                        vars[j].ub = v;
                    }
                    "BV" => {
                        vars[j].kind = VarKind::Binary;
                        vars[j].lb = 0.0;
                        vars[j].ub = 1.0;
                    }
                    "MI" => vars[j].lb = f64::NEG_INFINITY,
                    "PL" => vars[j].ub = f64::INFINITY,
                    other => return Err(MpsError::Unsupported(format!("bound type {other}"))),
                }
            }
            Section::Ranges => {
                return Err(MpsError::Unsupported("RANGES".to_string()));
            }
            Section::None | Section::Done => {
                return Err(bad(line, "data outside any section"));
            }
        }
    }
    for v in &vars {
        if v.kind == VarKind::Binary && (v.lb < 0.0 || v.ub > 1.0) {
            return Err(MpsError::Unsupported(format!(
                "general integer variable {}",
                v.name
            )));
        }
    }
    let _ = var_index;
    Ok(MilpModel::from_parts(vars, constraints, objective))
}
