//! The adaptive refinement loop: solve the linearized MILP, evaluate the
//! true cost of its solution, and subdivide the inter-valve intervals the
//! solution actually uses until the bounds meet.
//!
//! Each iteration yields a lower bound (the MIP's proven bound on the
//! envelope model) and an upper bound (the true cost of the MIP incumbent).
//! Breakpoints only accumulate, so envelopes never drop and the reported
//! lower bound is non-decreasing; the upper bound of a single iteration may
//! rise, and the running minimum is what the result carries. When an
//! iteration finds every used interval already subdivided at the current
//! level, the level doubles.

use std::io::Write;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::cost::{fuel_cost, BreakpointSet, CostError};
use crate::instance::{Instance, Issue, ValidationReport};
use crate::milp::{self, ModelError};
use crate::mip::{self, MipError, MipLimits, MipStatus};

/// How the inner MILPs are solved.
#[derive(Debug, Clone)]
pub enum Backend {
    Embedded,
    /// Command template with `{mps}` and `{sol}` placeholders.
    External(String),
}

#[derive(Debug, Clone)]
pub struct RefineConfig {
    /// Stop when (UB - LB) < tolerance * |UB|.
    pub tolerance: f64,
    pub time_limit: Option<Duration>,
    /// Segments per refined interval before any doubling.
    pub k_initial: u32,
    pub backend: Backend,
    /// Relative gap for the embedded MIP while the outer gap is still wide.
    pub inner_gap: f64,
    /// Outer relative gap below which inner solves switch to gap zero.
    pub inner_gap_switch: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            tolerance: 1e-7,
            time_limit: None,
            k_initial: 2,
            backend: Backend::Embedded,
            inner_gap: 1e-4,
            inner_gap_switch: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    OptimalWithinTolerance,
    TimeLimit,
}

/// One outer iteration's bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: u32,
    /// Proven lower bound after this iteration (non-decreasing).
    pub lb: f64,
    /// True cost of this iteration's incumbent (may exceed earlier rows).
    pub ub: f64,
    /// (running UB - lb) / |running UB|.
    pub gap: f64,
    pub k_current: u32,
    pub total_breakpoints: usize,
    pub mip_nodes: u64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Commitment per unit and period.
    pub schedule: Vec<Vec<bool>>,
    /// Dispatch per unit and period, MW; zero where off.
    pub dispatch: Vec<Vec<f64>>,
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// (UB - LB) / UB.
    pub relative_error: f64,
    pub iterations: u32,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("instance failed validation:\n{0}")]
    Invalid(ValidationReport),
    #[error("instance is infeasible")]
    Infeasible,
    #[error("time limit reached before any feasible solution was found")]
    TimeLimitNoIncumbent,
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Engine(#[from] MipError),
}

/// Runs the refinement loop on a validated instance.
pub fn solve_ucp(inst: &Instance, cfg: &RefineConfig) -> Result<SolveResult, SolveError> {
    let report = inst.validate();
    if !report.is_ok() {
        return Err(SolveError::Invalid(report));
    }
    let t0 = Instant::now();
    let nu = inst.units.len();
    let horizon = inst.periods;

    let mut bps: Vec<Vec<BreakpointSet>> = Vec::with_capacity(nu);
    for u in &inst.units {
        let initial = BreakpointSet::initial(u)?;
        bps.push(vec![initial; horizon]);
    }

    let mut k = cfg.k_initial.max(1);
    let mut lb = f64::NEG_INFINITY;
    let mut ub = f64::INFINITY;
    let mut best: Option<(Vec<Vec<bool>>, Vec<Vec<f64>>)> = None;
    let mut last: Option<(Vec<Vec<bool>>, Vec<Vec<f64>>)> = None;
    let mut trace: Vec<TraceRow> = Vec::new();
    let mut exact_inner = cfg.tolerance >= cfg.inner_gap_switch;

    let finish = |status: SolveStatus,
                  best: Option<(Vec<Vec<bool>>, Vec<Vec<f64>>)>,
                  lb: f64,
                  ub: f64,
                  trace: Vec<TraceRow>|
     -> Result<SolveResult, SolveError> {
        let (schedule, dispatch) = best.ok_or(SolveError::TimeLimitNoIncumbent)?;
        Ok(SolveResult {
            status,
            schedule,
            dispatch,
            lower_bound: lb,
            upper_bound: ub,
            relative_error: (ub - lb) / ub.abs().max(f64::MIN_POSITIVE),
            iterations: trace.len() as u32,
            trace,
        })
    };

    for iteration in 1.. {
        if iteration > 100_000 {
            return Err(SolveError::Engine(MipError::Numerical(
                "refinement failed to converge within the iteration cap".into(),
            )));
        }
        let model = milp::build_model(inst, &bps)?;
        let warm = match &last {
            Some((sched, disp)) => Some(milp::encode_warm_start(&model, inst, &bps, sched, disp)?),
            None => None,
        };
        let remaining = cfg.time_limit.map(|tl| tl.saturating_sub(t0.elapsed()));
        if remaining.is_some_and(|r| r.is_zero()) {
            return finish(SolveStatus::TimeLimit, best, lb, ub, trace);
        }
        let limits = MipLimits {
            gap: if exact_inner { 0.0 } else { cfg.inner_gap },
            time: remaining,
        };
        let out = match &cfg.backend {
            Backend::Embedded => mip::solve_mip(&model, limits, warm.as_ref())?,
            Backend::External(cmd) => mip::solve_external(&model, cmd, limits)?,
        };
        if out.status == MipStatus::Infeasible {
            return Err(SolveError::Infeasible);
        }
        // Every inner bound under-estimates the true optimum, so the
        // tightest one seen so far is still a valid global bound; taking the
        // running maximum also keeps the trace monotone under inner-gap
        // scheduling noise.
        lb = lb.max(out.best_bound);

        let mut iteration_ub = f64::NAN;
        if let Some(values) = &out.values {
            let ids = model.ids.as_ref().expect("built model has ids");
            let mut schedule = vec![vec![false; horizon]; nu];
            let mut dispatch = vec![vec![0.0; horizon]; nu];
            for u in 0..nu {
                for t in 0..horizon {
                    let on = values[ids.y[u][t]] > 0.5;
                    schedule[u][t] = on;
                    dispatch[u][t] = if on { values[ids.p[u][t]] } else { 0.0 };
                }
            }
            let tc = true_cost(inst, &schedule, &dispatch)?;
            iteration_ub = tc;
            if tc < ub {
                ub = tc;
                best = Some((schedule.clone(), dispatch.clone()));
            }
            last = Some((schedule, dispatch));
        }

        let row_ub = if iteration_ub.is_nan() { ub } else { iteration_ub };
        trace.push(TraceRow {
            iteration: iteration as u32,
            lb,
            ub: row_ub,
            gap: (ub - lb) / ub.abs().max(f64::MIN_POSITIVE),
            k_current: k,
            total_breakpoints: bps
                .iter()
                .flat_map(|row| row.iter().map(|b| b.points().len()))
                .sum(),
            mip_nodes: out.nodes,
            wall_ms: t0.elapsed().as_millis() as u64,
        });

        let converged = (ub - lb) < cfg.tolerance * ub.abs() || ub - lb <= 0.0;
        if converged {
            return finish(SolveStatus::OptimalWithinTolerance, best, lb, ub, trace);
        }
        if out.status == MipStatus::TimeLimit
            || cfg.time_limit.is_some_and(|tl| t0.elapsed() >= tl)
        {
            return finish(SolveStatus::TimeLimit, best, lb, ub, trace);
        }
        let outer_gap = (ub - lb) / ub.abs().max(f64::MIN_POSITIVE);
        if outer_gap <= cfg.inner_gap_switch.max(10.0 * cfg.tolerance) {
            exact_inner = true;
        }

        // Refine around the incumbent of this iteration.
        let (sched, disp) = last.as_ref().expect("an incumbent exists past this point");
        let mut refined_any = false;
        for u in 0..nu {
            for t in 0..horizon {
                if sched[u][t] && bps[u][t].coarse_in_solution(disp[u][t], k) {
                    bps[u][t] = bps[u][t].refine(&inst.units[u], disp[u][t], k);
                    refined_any = true;
                }
            }
        }
        if !refined_any {
            k = k.saturating_mul(2);
            for u in 0..nu {
                for t in 0..horizon {
                    if sched[u][t] {
                        bps[u][t] = bps[u][t].refine(&inst.units[u], disp[u][t], k);
                    }
                }
            }
        }
    }
    unreachable!("loop returns");
}

/// Exact cost of a schedule and dispatch: fuel costs where committed plus
/// start-up costs implied by the commitment pattern. The start type is
/// recomputed from the schedule and the pre-horizon state, never read from
/// solver variables.
pub fn true_cost(
    inst: &Instance,
    schedule: &[Vec<bool>],
    dispatch: &[Vec<f64>],
) -> Result<f64, CostError> {
    let mut total = 0.0;
    for (u, unit) in inst.units.iter().enumerate() {
        for t in 1..=inst.periods {
            if !schedule[u][t - 1] {
                continue;
            }
            total += fuel_cost(unit, dispatch[u][t - 1])?;
            let was_on = if t >= 2 {
                schedule[u][t - 2]
            } else {
                unit.y_prev
            };
            if !was_on {
                total += if milp::start_is_cold(unit, &schedule[u], t) {
                    unit.a_cold
                } else {
                    unit.a_hot
                };
            }
        }
    }
    Ok(total)
}

/// Checks a schedule and dispatch against the load, reserve, limit, and
/// minimum up/down constraints, reporting each violation with its location
/// and magnitude.
pub fn verify_solution(
    inst: &Instance,
    schedule: &[Vec<bool>],
    dispatch: &[Vec<f64>],
) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let mut err = |code: &'static str, message: String| {
        rep.errors.push(Issue { code, message });
    };
    for t in 1..=inst.periods {
        let d = inst.demand[t - 1];
        let total: f64 = (0..inst.units.len()).map(|u| dispatch[u][t - 1]).sum();
        if (total - d).abs() > 1e-6 * d.max(1.0) {
            err(
                "load",
                format!(
                    "period {t}: dispatched {total} MW against demand {d} (off by {})",
                    total - d
                ),
            );
        }
        let cap: f64 = inst
            .units
            .iter()
            .enumerate()
            .filter(|(u, _)| schedule[*u][t - 1])
            .map(|(_, unit)| unit.p_max)
            .sum();
        let need = d + inst.reserve[t - 1];
        if cap < need - 1e-6 * need.max(1.0) {
            err(
                "reserve",
                format!("period {t}: committed capacity {cap} below demand plus reserve {need}"),
            );
        }
    }
    for (u, unit) in inst.units.iter().enumerate() {
        let uid = &unit.id;
        let on = |t: i64| -> bool {
            if t >= 1 {
                schedule[u][t as usize - 1]
            } else {
                unit.state_before_horizon(t)
            }
        };
        for t in 1..=inst.periods {
            let p = dispatch[u][t - 1];
            let tol = 1e-6 * unit.p_max.max(1.0);
            if schedule[u][t - 1] {
                if p < unit.p_min - tol || p > unit.p_max + tol {
                    err(
                        "limits",
                        format!(
                            "unit {uid} period {t}: dispatch {p} outside [{}, {}]",
                            unit.p_min, unit.p_max
                        ),
                    );
                }
            } else if p.abs() > tol {
                err(
                    "limits",
                    format!("unit {uid} period {t}: off but dispatching {p} MW"),
                );
            }
        }
        let pinned = (unit.pinned_prefix() as usize).min(inst.periods);
        for t in 1..=pinned {
            if schedule[u][t - 1] != unit.y_prev {
                err(
                    "initial-state",
                    format!(
                        "unit {uid} period {t}: must stay {} for the first {pinned} period(s)",
                        if unit.y_prev { "on" } else { "off" }
                    ),
                );
            }
        }
        for t in 1..=inst.periods as i64 {
            let xon_window: u32 = ((t - unit.t_on as i64 + 1).max(1)..=t)
                .map(|i| (on(i) && !on(i - 1)) as u32)
                .sum();
            if xon_window > on(t) as u32 {
                err(
                    "min-up",
                    format!(
                        "unit {uid} period {t}: switched on within the last {} period(s) \
                         but not still on (excess {})",
                        unit.t_on,
                        xon_window - on(t) as u32
                    ),
                );
            }
            let xoff_window: u32 = ((t - unit.t_off as i64 + 1).max(1)..=t)
                .map(|i| (!on(i) && on(i - 1)) as u32)
                .sum();
            if xoff_window > 1 - on(t) as u32 {
                err(
                    "min-down",
                    format!(
                        "unit {uid} period {t}: switched off within the last {} period(s) \
                         but on again (excess {})",
                        unit.t_off,
                        xoff_window + on(t) as u32 - 1
                    ),
                );
            }
        }
    }
    rep
}

/// Formats money and fractions with 17 significant digits.
fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the per-iteration trace as CSV.
pub fn write_trace<W: Write>(result: &SolveResult, mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "iteration,lb,ub,gap,k_current,total_breakpoints,mip_nodes,wall_ms"
    )?;
    for r in &result.trace {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.iteration,
            fmt17(r.lb),
            fmt17(r.ub),
            fmt17(r.gap),
            r.k_current,
            r.total_breakpoints,
            r.mip_nodes,
            r.wall_ms
        )?;
    }
    Ok(())
}

/// Writes the trace CSV to a file.
pub fn emit_trace(result: &SolveResult, path: &std::path::Path) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    write_trace(result, &mut f)?;
    f.flush()
}

/// Solution dump: one `u t y p` row per unit and period.
pub fn format_solution(inst: &Instance, result: &SolveResult) -> String {
    let mut out = String::from("u t y p\n");
    for (u, unit) in inst.units.iter().enumerate() {
        for t in 1..=inst.periods {
            out.push_str(&format!(
                "{} {} {} {}\n",
                unit.id,
                t,
                result.schedule[u][t - 1] as u8,
                fmt17(result.dispatch[u][t - 1])
            ));
        }
    }
    out
}
