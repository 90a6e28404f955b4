/*!
Unit commitment and economic load dispatch with valve-point fuel costs.

Thermal generating units with valve-point loading have a fuel cost of the
form `a + b p + c p^2 + |e sin(f (pmin - p))|`: a quadratic plus a rectified
sine ripple. The ripple makes the cost nonconvex and nonsmooth, so the
classic mixed-integer formulations of unit commitment no longer apply
directly.

This crate solves the problem exactly (to a user-set relative tolerance) by
replacing each cost curve with a piecewise-linear interpolant through the
curve's valve points. Because the curve is concave between consecutive valve
points, the interpolant never exceeds the true cost, so the resulting MILP
yields a lower bound while evaluating the true cost of its solution yields
an upper bound. An outer loop adds breakpoints only in the inter-valve
intervals actually used by the current solution and re-solves until the two
bounds meet.

The pieces:

* [`instance`] — problem data, a text instance format, validation, and the
  dispatch-to-commitment conversion for single-period runs.
* [`cost`] — exact fuel-cost evaluation, valve-point location, and the
  refinable breakpoint sets that define each lower envelope.
* [`milp`] — assembles the backend-neutral MILP (convex-combination
  linearization, demand/reserve, production limits, minimum up/down times,
  hot/cold start accounting), encodes warm starts, exports MPS.
* [`simplex`] — a bounded-variable revised simplex LP core.
* [`mip`] — best-bound branch-and-bound over the binaries, plus an
  external-solver driver (MPS out, solution file in).
* [`refine`] — the iterate/solve/evaluate/refine loop with bound
  bookkeeping, termination, and trace emission.
*/

pub mod cli;
pub mod cost;
pub mod instance;
pub mod milp;
pub mod mip;
pub mod refine;
pub mod simplex;

pub use cost::{BreakpointSet, CostError};
pub use instance::{Instance, InstanceError, UnitParams, ValidationReport};
pub use milp::{MilpModel, WarmStart};
pub use mip::{LpOutcome, MipLimits, MipOutcome, MipStatus};
pub use refine::{RefineConfig, SolveResult, TraceRow};
