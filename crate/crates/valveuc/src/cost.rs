//! Exact valve-point fuel cost, valve-point location, and the refinable
//! piecewise-linear lower envelopes built on them.
//!
//! The fuel cost `F(p) = a + b p + c p^2 + |e sin(f (pmin - p))|` is concave
//! between consecutive zeros of the sine term whenever `c <= e f^2 / 2`, so
//! the linear interpolant through any set of points of the curve that
//! includes all those zeros (the valve points) never exceeds `F`. A
//! [`BreakpointSet`] holds such an interpolation grid for one unit and
//! supports subdividing a single inter-valve interval, which can only raise
//! the envelope.

use crate::instance::{UnitParams, CONCAVITY_TOL};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("unit `{unit}`: power {p} outside operating range [{lo}, {hi}]")]
    OutOfDomain { unit: String, p: f64, lo: f64, hi: f64 },
    #[error(
        "unit `{unit}`: c = {c} exceeds e*f^2/2 = {bound}; fuel cost is not \
         concave between valve points"
    )]
    NotConcave { unit: String, c: f64, bound: f64 },
}

/// Evaluates the exact fuel cost of `u` at output `p`.
pub fn fuel_cost(u: &UnitParams, p: f64) -> Result<f64, CostError> {
    let slack = domain_slack(u);
    if !(p >= u.p_min - slack && p <= u.p_max + slack) {
        return Err(CostError::OutOfDomain {
            unit: u.id.clone(),
            p,
            lo: u.p_min,
            hi: u.p_max,
        });
    }
    Ok(fuel_cost_raw(u, p))
}

/// The cost formula without the domain check.
fn fuel_cost_raw(u: &UnitParams, p: f64) -> f64 {
    u.a + u.b * p + u.c * p * p + (u.e * (u.f * (u.p_min - p)).sin()).abs()
}

/// Absolute tolerance for "p is inside the operating range" comparisons.
fn domain_slack(u: &UnitParams) -> f64 {
    1e-9 * (u.p_max - u.p_min).max(1.0)
}

/// The zeros of the valve ripple within `[p_min, p_max]`, plus `p_max`.
///
/// These are `p_min + k*pi/f` for integer `k >= 0`; they delimit the
/// inter-valve intervals on which the cost is concave. Units without a
/// ripple (`e = 0` or `f = 0`) get just the two domain endpoints.
pub fn valve_points(u: &UnitParams) -> Vec<f64> {
    let span = u.p_max - u.p_min;
    if span == 0.0 {
        return vec![u.p_min];
    }
    if u.e == 0.0 || u.f == 0.0 {
        return vec![u.p_min, u.p_max];
    }
    let period = std::f64::consts::PI / u.f;
    let merge = 1e-9 * span.max(1.0);
    let mut points = Vec::new();
    let mut k = 0u32;
    loop {
        let x = u.p_min + (k as f64) * period;
        if x >= u.p_max - merge {
            break;
        }
        points.push(x);
        k += 1;
    }
    points.push(u.p_max);
    points
}

/// One interpolation point of a lower envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint {
    pub x: f64,
    pub y: f64,
    /// True for valve points and the domain endpoints.
    pub is_valve: bool,
}

/// The piecewise-linear lower envelope of one unit's fuel cost.
///
/// Points are strictly increasing in `x`, start at `p_min`, end at `p_max`,
/// include every valve point, and carry `y = F(x)` exactly. Refinement adds
/// points and never removes any, so envelopes from successive refinements
/// are pointwise non-decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakpointSet {
    unit_id: String,
    points: Vec<Breakpoint>,
    /// Inter-valve interval boundaries (the valve points, endpoints included).
    valve_xs: Vec<f64>,
    /// Per inter-valve interval: the largest segment count it was subdivided
    /// into (0 = never subdivided).
    subdivisions: Vec<u32>,
}

impl BreakpointSet {
    /// The envelope through the valve points only, one chord per interval.
    pub fn initial(u: &UnitParams) -> Result<Self, CostError> {
        let bound = u.e * u.f * u.f / 2.0;
        if u.c - bound > CONCAVITY_TOL {
            return Err(CostError::NotConcave {
                unit: u.id.clone(),
                c: u.c,
                bound,
            });
        }
        let valve_xs = valve_points(u);
        let points = valve_xs
            .iter()
            .map(|&x| Breakpoint {
                x,
                y: fuel_cost_raw(u, x),
                is_valve: true,
            })
            .collect();
        let n_intervals = valve_xs.len().saturating_sub(1);
        Ok(BreakpointSet {
            unit_id: u.id.clone(),
            points,
            valve_xs,
            subdivisions: vec![0; n_intervals],
        })
    }

    pub fn unit_id(&self) -> &str {
        &self.unit_id
    }

    pub fn points(&self) -> &[Breakpoint] {
        &self.points
    }

    /// Indices into `points()` of the valve points and domain endpoints.
    pub fn valve_marks(&self) -> Vec<usize> {
        self.points
            .iter()
            .enumerate()
            .filter(|(_, b)| b.is_valve)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn segments_per_interval(&self) -> &[u32] {
        &self.subdivisions
    }

    fn x_lo(&self) -> f64 {
        self.points.first().expect("nonempty breakpoint set").x
    }

    fn x_hi(&self) -> f64 {
        self.points.last().expect("nonempty breakpoint set").x
    }

    fn span(&self) -> f64 {
        self.x_hi() - self.x_lo()
    }

    /// Index of the inter-valve interval that `p` is attributed to.
    ///
    /// A `p` landing exactly on a valve point belongs to the right-adjacent
    /// interval, except at `p_max` which belongs to the last one.
    pub fn containing_interval(&self, p: f64) -> usize {
        let n = self.valve_xs.len() - 1;
        debug_assert!(n >= 1, "single-point envelope has no intervals");
        let snap = 1e-9 * self.span().max(1.0);
        if p >= self.valve_xs[n] - snap {
            return n - 1;
        }
        // Rightmost boundary <= p, pushed right when p sits on a boundary.
        let mut j = match self
            .valve_xs
            .binary_search_by(|v| v.partial_cmp(&p).expect("valve points are ordered"))
        {
            Ok(exact) => exact,
            Err(ins) => ins.saturating_sub(1),
        };
        if j + 1 <= n && (self.valve_xs[j + 1] - p).abs() <= snap {
            j += 1;
        }
        j.min(n - 1)
    }

    /// True when the interval containing `p_star` has been subdivided into
    /// fewer than `k` segments, i.e. refinement at level `k` would add detail.
    pub fn coarse_in_solution(&self, p_star: f64, k: u32) -> bool {
        self.subdivisions[self.containing_interval(p_star)] < k
    }

    /// Subdivides the interval containing `p_star` into `k` equal segments,
    /// keeping all existing points. Returns the refined set.
    pub fn refine(&self, u: &UnitParams, p_star: f64, k: u32) -> Self {
        assert!(k >= 1, "segment count must be at least 1");
        assert_eq!(u.id, self.unit_id, "breakpoint set belongs to unit {}", self.unit_id);
        let j = self.containing_interval(p_star);
        let (lo, hi) = (self.valve_xs[j], self.valve_xs[j + 1]);
        let width = hi - lo;
        let dup = 1e-12 * self.span().max(1.0);
        let mut refined = self.clone();
        for i in 1..k {
            let x = lo + (i as f64 * width) / k as f64;
            let pos = refined
                .points
                .partition_point(|b| b.x < x);
            let exists = (pos < refined.points.len() && (refined.points[pos].x - x).abs() <= dup)
                || (pos > 0 && (x - refined.points[pos - 1].x).abs() <= dup);
            if !exists {
                refined.points.insert(
                    pos,
                    Breakpoint {
                        x,
                        y: fuel_cost_raw(u, x),
                        is_valve: false,
                    },
                );
            }
        }
        refined.subdivisions[j] = refined.subdivisions[j].max(k);
        refined
    }

    /// Linear interpolation of the envelope at `p`; an exact breakpoint hit
    /// returns the stored ordinate.
    pub fn envelope_value(&self, p: f64) -> Result<f64, CostError> {
        let slack = 1e-9 * self.span().max(1.0);
        if !(p >= self.x_lo() - slack && p <= self.x_hi() + slack) {
            return Err(CostError::OutOfDomain {
                unit: self.unit_id.clone(),
                p,
                lo: self.x_lo(),
                hi: self.x_hi(),
            });
        }
        let pts = &self.points;
        if pts.len() == 1 {
            return Ok(pts[0].y);
        }
        // Rightmost point with x <= p (clamped so an interpolation segment
        // always exists to its right).
        let i = pts.partition_point(|b| b.x <= p).saturating_sub(1);
        let i = i.min(pts.len() - 2);
        if pts[i].x == p {
            return Ok(pts[i].y);
        }
        if pts[i + 1].x == p {
            return Ok(pts[i + 1].y);
        }
        let (a, b) = (&pts[i], &pts[i + 1]);
        Ok(a.y + (b.y - a.y) * (p - a.x) / (b.x - a.x))
    }

    /// Breakpoints as CSV (`x,y,is_valve` with a header), for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,is_valve\n");
        for b in &self.points {
            out.push_str(&format!("{:.17e},{:.17e},{}\n", b.x, b.y, b.is_valve as u8));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit(e: f64, f: f64, p_min: f64, p_max: f64) -> UnitParams {
        UnitParams {
            id: "g".into(),
            a: 100.0,
            b: 2.0,
            c: 0.001,
            e,
            f,
            p_min,
            p_max,
            t_on: 1,
            t_off: 1,
            a_hot: 0.0,
            a_cold: 0.0,
            t_cold: 0,
            y_prev: true,
            t_prev: 1,
        }
    }

    // Double-double helpers used by the high-precision oracle below. The
    // oracle evaluates the cost formula with ~2x the significand of f64 so
    // the production evaluation can be checked at 1e-9 relative.
    mod dd {
        #[derive(Clone, Copy)]
        pub struct Dd {
            pub hi: f64,
            pub lo: f64,
        }

        pub fn from(x: f64) -> Dd {
            Dd { hi: x, lo: 0.0 }
        }

        fn two_sum(a: f64, b: f64) -> Dd {
            let s = a + b;
            let v = s - a;
            let e = (a - (s - v)) + (b - v);
            Dd { hi: s, lo: e }
        }

        fn two_prod(a: f64, b: f64) -> Dd {
            let p = a * b;
            let e = a.mul_add(b, -p);
            Dd { hi: p, lo: e }
        }

        pub fn add(a: Dd, b: Dd) -> Dd {
            let s = two_sum(a.hi, b.hi);
            let lo = s.lo + a.lo + b.lo;
            two_sum(s.hi, lo)
        }

        pub fn mul(a: Dd, b: Dd) -> Dd {
            let p = two_prod(a.hi, b.hi);
            let lo = p.lo + a.hi * b.lo + a.lo * b.hi;
            two_sum(p.hi, lo)
        }
    }

    /// Independent extended-precision evaluation of the cost formula. The
    /// polynomial and the sine argument are carried in double-double; the
    /// sine itself is the libm one, whose sub-ulp error is far below the
    /// 1e-9 check tolerance.
    fn fuel_cost_oracle(u: &UnitParams, p: f64) -> f64 {
        let pd = dd::from(p);
        let mut acc = dd::from(u.a);
        acc = dd::add(acc, dd::mul(dd::from(u.b), pd));
        acc = dd::add(acc, dd::mul(dd::mul(dd::from(u.c), pd), pd));
        let arg = dd::mul(dd::from(u.f), dd::add(dd::from(u.p_min), dd::from(-p)));
        let valve = (u.e * (arg.hi.sin() + arg.lo * arg.hi.cos())).abs();
        acc.hi + (acc.lo + valve)
    }

    #[test]
    fn fuel_cost_matches_high_precision_oracle() {
        let u = unit(10.0, 0.2, 50.0, 200.0);
        // The spec's pinned point first, then a sweep.
        let got = fuel_cost(&u, 60.0).unwrap();
        let want = fuel_cost_oracle(&u, 60.0);
        assert!(
            (got - want).abs() <= 1e-9 * want.abs(),
            "got {got}, oracle {want}"
        );
        for i in 0..=1000 {
            let p = 50.0 + 150.0 * (i as f64) / 1000.0;
            let got = fuel_cost(&u, p).unwrap();
            let want = fuel_cost_oracle(&u, p);
            assert!(
                (got - want).abs() <= 1e-9 * want.abs().max(1.0),
                "p = {p}: got {got}, oracle {want}"
            );
        }
    }

    #[test]
    fn sine_term_vanishes_at_p_min() {
        let u = unit(10.0, 0.2, 50.0, 200.0);
        let v = fuel_cost(&u, 50.0).unwrap();
        assert_eq!(v, u.a + u.b * 50.0 + u.c * 2500.0);
    }

    #[test]
    fn zero_amplitude_is_pure_quadratic() {
        let u = unit(0.0, 0.2, 50.0, 200.0);
        for p in [50.0, 77.7, 123.4, 200.0] {
            assert_eq!(fuel_cost(&u, p).unwrap(), u.a + u.b * p + u.c * p * p);
        }
    }

    #[test]
    fn fuel_cost_rejects_out_of_range() {
        let u = unit(10.0, 0.2, 50.0, 200.0);
        assert!(matches!(
            fuel_cost(&u, 49.0),
            Err(CostError::OutOfDomain { .. })
        ));
        assert!(matches!(
            fuel_cost(&u, 200.5),
            Err(CostError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn valve_points_land_on_sine_zeros() {
        let u = unit(10.0, PI / 50.0, 50.0, 200.0);
        let vp = valve_points(&u);
        assert_eq!(vp.len(), 4);
        for (got, want) in vp.iter().zip([50.0, 100.0, 150.0, 200.0]) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }

        let u = unit(10.0, 1.0, 0.0, 10.0);
        let vp = valve_points(&u);
        let want = [0.0, PI, 2.0 * PI, 3.0 * PI, 10.0];
        assert_eq!(vp.len(), want.len());
        for (got, want) in vp.iter().zip(want) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }

        let u = unit(0.0, 0.0, 50.0, 200.0);
        assert_eq!(valve_points(&u), vec![50.0, 200.0]);
    }

    #[test]
    fn valve_spacing_is_one_period() {
        let u = unit(10.0, 0.2, 50.0, 200.0);
        let vp = valve_points(&u);
        let period = PI / u.f;
        for w in vp.windows(2).take(vp.len() - 2) {
            // Spacing is exact up to the rounding of p_min + k*period.
            assert!((w[1] - w[0] - period).abs() <= 4.0 * f64::EPSILON * w[1].abs().max(period));
        }
        // Last interval is truncated at p_max.
        let last = vp[vp.len() - 1] - vp[vp.len() - 2];
        assert!(last <= period + 1e-12);
    }

    #[test]
    fn initial_breakpoints_are_the_valve_points() {
        let u = unit(10.0, 0.2, 50.0, 200.0);
        let bps = BreakpointSet::initial(&u).unwrap();
        let vp = valve_points(&u);
        assert_eq!(bps.points().len(), vp.len());
        for (b, x) in bps.points().iter().zip(vp) {
            assert_eq!(b.x, x);
            assert_eq!(b.y, fuel_cost(&u, x).unwrap());
            assert!(b.is_valve);
        }
        assert!(bps.segments_per_interval().iter().all(|&s| s == 0));
    }

    #[test]
    fn initial_breakpoints_rejects_nonconcave_unit() {
        let mut u = unit(10.0, 0.2, 50.0, 200.0);
        u.c = 0.3; // bound is e f^2 / 2 = 0.2
        assert!(matches!(
            BreakpointSet::initial(&u),
            Err(CostError::NotConcave { .. })
        ));
    }

    #[test]
    fn two_point_chord_for_valveless_unit() {
        let mut u = unit(0.0, 0.0, 50.0, 200.0);
        u.c = 0.0;
        let bps = BreakpointSet::initial(&u).unwrap();
        assert_eq!(bps.points().len(), 2);
        assert_eq!(bps.points()[0].x, 50.0);
        assert_eq!(bps.points()[1].x, 200.0);
    }

    #[test]
    fn envelope_interpolates_linearly() {
        // Hand-made two-point set via a valveless linear unit.
        let mut u = unit(0.0, 0.0, 0.0, 10.0);
        u.a = 0.0;
        u.b = 1.0;
        u.c = 0.0;
        let bps = BreakpointSet::initial(&u).unwrap();
        assert_eq!(bps.envelope_value(4.0).unwrap(), 4.0);
        assert_eq!(bps.envelope_value(0.0).unwrap(), 0.0);
        assert_eq!(bps.envelope_value(10.0).unwrap(), 10.0);
        assert!(bps.envelope_value(-1.0).is_err());
        assert!(bps.envelope_value(11.0).is_err());
    }

    #[test]
    fn envelope_hits_breakpoints_exactly() {
        let u = unit(10.0, 0.2, 50.0, 200.0);
        let bps = BreakpointSet::initial(&u).unwrap().refine(&u, 77.0, 3);
        for b in bps.points() {
            assert_eq!(bps.envelope_value(b.x).unwrap(), b.y);
        }
    }

    fn assert_dominated(u: &UnitParams, bps: &BreakpointSet, samples: usize) {
        for i in 0..=samples {
            let p = u.p_min + (u.p_max - u.p_min) * (i as f64) / (samples as f64);
            let env = bps.envelope_value(p).unwrap();
            let f = fuel_cost(u, p).unwrap();
            assert!(
                env <= f + 1e-9 * f.abs().max(1.0),
                "envelope {env} above cost {f} at p = {p}"
            );
        }
    }

    #[test]
    fn envelope_never_exceeds_cost() {
        let u = unit(10.0, 0.2, 50.0, 200.0);
        let bps = BreakpointSet::initial(&u).unwrap();
        assert_dominated(&u, &bps, 10_000);
        let refined = bps.refine(&u, 130.0, 4).refine(&u, 60.0, 7);
        assert_dominated(&u, &refined, 10_000);
    }

    #[test]
    fn refinement_adds_equal_width_points() {
        let u = unit(10.0, PI / 50.0, 50.0, 200.0);
        let bps = BreakpointSet::initial(&u).unwrap();
        // Interval [50, 100], k = 2: midpoint appears.
        let refined = bps.refine(&u, 75.0, 2);
        assert!(refined.points().iter().any(|b| b.x == 75.0));
        assert_eq!(refined.points().len(), bps.points().len() + 1);
        // k = 1 adds nothing.
        let same = bps.refine(&u, 75.0, 1);
        assert_eq!(same.points().len(), bps.points().len());
    }

    #[test]
    fn refinement_keeps_old_points_and_raises_envelope() {
        let u = unit(10.0, 0.2, 50.0, 200.0);
        let mut bps = BreakpointSet::initial(&u).unwrap();
        for (p_star, k) in [(60.0, 2), (60.0, 4), (120.0, 3), (199.0, 8)] {
            let refined = bps.refine(&u, p_star, k);
            for b in bps.points() {
                assert!(refined.points().contains(b), "lost point {b:?}");
            }
            for i in 0..=2000 {
                let p = u.p_min + (u.p_max - u.p_min) * (i as f64) / 2000.0;
                let before = bps.envelope_value(p).unwrap();
                let after = refined.envelope_value(p).unwrap();
                assert!(
                    after >= before - 1e-9 * before.abs().max(1.0),
                    "envelope dropped at p = {p}: {before} -> {after}"
                );
            }
            bps = refined;
        }
    }

    #[test]
    fn coarseness_reflects_subdivision_level() {
        let u = unit(10.0, 0.2, 50.0, 200.0);
        let bps = BreakpointSet::initial(&u).unwrap();
        assert!(bps.coarse_in_solution(60.0, 2));
        let refined = bps.refine(&u, 60.0, 2);
        assert!(!refined.coarse_in_solution(60.0, 2));
        assert!(refined.coarse_in_solution(60.0, 4));
    }

    #[test]
    fn valve_point_ties_go_right_except_at_p_max() {
        let u = unit(10.0, PI / 50.0, 50.0, 200.0);
        let bps = BreakpointSet::initial(&u).unwrap();
        // Valve grid is 50, 100, 150, 200: intervals 0..=2.
        assert_eq!(bps.containing_interval(100.0), 1);
        assert_eq!(bps.containing_interval(150.0), 2);
        assert_eq!(bps.containing_interval(50.0), 0);
        assert_eq!(bps.containing_interval(200.0), 2);
        assert_eq!(bps.containing_interval(149.99), 1);
    }

    #[test]
    fn doubling_reuses_existing_grid_points() {
        let u = unit(10.0, 0.2, 50.0, 200.0);
        let bps = BreakpointSet::initial(&u).unwrap();
        let k2 = bps.refine(&u, 60.0, 2);
        let k4 = k2.refine(&u, 60.0, 4);
        let k8 = k4.refine(&u, 60.0, 8);
        // Interval width is pi/0.2 ~ 15.7: subdividing into 8 nests the
        // 2- and 4-grids, so the interval gains exactly 7 interior points.
        let interior = 7;
        assert_eq!(k8.points().len(), bps.points().len() + interior);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn arb_unit() -> impl Strategy<Value = UnitParams> {
        (
            0.0..500.0f64,     // a
            0.1..20.0f64,      // b
            0.0..0.01f64,      // c scaled below to keep concavity
            1.0..400.0f64,     // e
            0.02..0.3f64,      // f
            0.0..100.0f64,     // p_min
            10.0..500.0f64,    // span
        )
            .prop_map(|(a, b, c_frac, e, f, p_min, span)| {
                let bound = e * f * f / 2.0;
                UnitParams {
                    id: "prop".into(),
                    a,
                    b,
                    c: c_frac.min(1.0) * bound,
                    e,
                    f,
                    p_min,
                    p_max: p_min + span,
                    t_on: 1,
                    t_off: 1,
                    a_hot: 0.0,
                    a_cold: 0.0,
                    t_cold: 0,
                    y_prev: true,
                    t_prev: 1,
                }
            })
    }

    proptest! {
        #[test]
        fn envelope_dominance_under_random_refinement(
            u in arb_unit(),
            steps in proptest::collection::vec((0.0..1.0f64, 1u32..9), 0..6),
            probes in proptest::collection::vec(0.0..1.0f64, 32),
        ) {
            let mut bps = BreakpointSet::initial(&u).unwrap();
            let n_before = bps.points().len();
            for (frac, k) in steps {
                let p_star = u.p_min + frac * (u.p_max - u.p_min);
                bps = bps.refine(&u, p_star, k);
            }
            prop_assert!(bps.points().len() >= n_before);
            let mut prev = f64::NEG_INFINITY;
            for b in bps.points() {
                prop_assert!(b.x > prev, "x not strictly increasing");
                prev = b.x;
            }
            for frac in probes {
                let p = u.p_min + frac * (u.p_max - u.p_min);
                let env = bps.envelope_value(p).unwrap();
                let f = fuel_cost(&u, p).unwrap();
                prop_assert!(env <= f + 1e-9 * f.abs().max(1.0));
            }
        }
    }
}
