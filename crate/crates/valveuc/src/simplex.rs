//! Bounded-variable revised primal simplex over a sparse column store.
//!
//! The basis is kept as a sparse LU factorization (left-looking, partial
//! pivoting) extended by product-form eta updates and refactorized
//! periodically. Infeasible starts run a composite phase 1 that minimizes
//! the total bound violation of the basic variables. All tie-breaking is by
//! lowest index, so a solve is deterministic for identical inputs; after
//! 1000 consecutive degenerate steps the pricing falls back to Bland's rule
//! until progress resumes.

/// Feasibility slack against a bound `b`: `|violation| <= FEAS_TOL * (1 + |b|)`.
const FEAS_TOL: f64 = 1e-9;
/// Reduced-cost threshold below which a column is not considered improving.
const OPT_TOL: f64 = 1e-9;
/// Smallest pivot magnitude accepted in the ratio test and the LU.
const PIVOT_TOL: f64 = 1e-10;
/// Entries below this are dropped when storing sparse vectors.
const DROP_TOL: f64 = 1e-13;
/// Eta count that triggers refactorization.
const REFACTOR_EVERY: usize = 64;
/// Consecutive degenerate pivots before switching to Bland's rule.
const BLAND_AFTER: usize = 1000;

/// Row sense of a linear constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

/// A linear program in computational form: structural columns plus one
/// implicit slack column per row (`A x + s = rhs`; the slack bounds encode
/// the row sense).
#[derive(Debug, Clone)]
pub struct LpProblem {
    num_rows: usize,
    /// Structural columns, each sorted by row index.
    cols: Vec<Vec<(usize, f64)>>,
    /// Structural objective coefficients (minimization).
    obj: Vec<f64>,
    var_lb: Vec<f64>,
    var_ub: Vec<f64>,
    slack_lb: Vec<f64>,
    slack_ub: Vec<f64>,
    rhs: Vec<f64>,
}

impl LpProblem {
    pub fn new(num_rows: usize, rhs: Vec<f64>, senses: &[RowSense]) -> Self {
        assert_eq!(rhs.len(), num_rows);
        assert_eq!(senses.len(), num_rows);
        let mut slack_lb = Vec::with_capacity(num_rows);
        let mut slack_ub = Vec::with_capacity(num_rows);
        for s in senses {
            let (lo, hi) = match s {
                RowSense::Le => (0.0, f64::INFINITY),
                RowSense::Eq => (0.0, 0.0),
                RowSense::Ge => (f64::NEG_INFINITY, 0.0),
            };
            slack_lb.push(lo);
            slack_ub.push(hi);
        }
        LpProblem {
            num_rows,
            cols: Vec::new(),
            obj: Vec::new(),
            var_lb: Vec::new(),
            var_ub: Vec::new(),
            slack_lb,
            slack_ub,
            rhs,
        }
    }

    /// Adds a structural variable; `col` lists its constraint coefficients.
    /// Duplicate row entries are summed.
    pub fn add_var(&mut self, cost: f64, lb: f64, ub: f64, col: &[(usize, f64)]) -> usize {
        let idx = self.cols.len();
        let mut c: Vec<(usize, f64)> = col.to_vec();
        c.sort_unstable_by_key(|&(r, _)| r);
        c.dedup_by(|a, b| {
            if a.0 == b.0 {
                b.1 += a.1;
                true
            } else {
                false
            }
        });
        c.retain(|&(_, v)| v != 0.0);
        self.cols.push(c);
        self.obj.push(cost);
        self.var_lb.push(lb);
        self.var_ub.push(ub);
        idx
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn num_structural(&self) -> usize {
        self.cols.len()
    }

    fn num_total(&self) -> usize {
        self.cols.len() + self.num_rows
    }

    fn lb(&self, j: usize) -> f64 {
        if j < self.cols.len() {
            self.var_lb[j]
        } else {
            self.slack_lb[j - self.cols.len()]
        }
    }

    fn ub(&self, j: usize) -> f64 {
        if j < self.cols.len() {
            self.var_ub[j]
        } else {
            self.slack_ub[j - self.cols.len()]
        }
    }

    /// Visits the column of variable `j`; slack columns are unit vectors.
    fn for_each_entry(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.cols.len() {
            for &(r, v) in &self.cols[j] {
                f(r, v);
            }
        } else {
            f(j - self.cols.len(), 1.0);
        }
    }
}

/// Where a variable sits relative to the current basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable parked at zero.
    FreeZero,
}

/// A restartable basis snapshot.
#[derive(Debug, Clone)]
pub struct Basis {
    pub state: Vec<VarState>,
    /// Basic variable per basis position.
    pub basic: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Factorization or iteration budget exhausted; not a feasibility verdict.
    NumericalFailure,
}

/// Result of one LP solve.
#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    /// Values of the structural variables (meaningful when optimal).
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub basis: Basis,
}

struct LuFactors {
    /// Multipliers per elimination step, in original row indices.
    l_cols: Vec<Vec<(usize, f64)>>,
    /// Strict upper part per step, indexed by earlier step numbers.
    u_cols: Vec<Vec<(usize, f64)>>,
    u_diag: Vec<f64>,
    /// Original row chosen as pivot at each step.
    pivot_row: Vec<usize>,
    /// Basis position factorized at each step (identity here: step k holds
    /// basis position k).
    col_order: Vec<usize>,
}

struct Eta {
    pos: usize,
    /// Sparse pivot column in basis-position space, pivot entry included.
    col: Vec<(usize, f64)>,
    pivot: f64,
}

pub struct Solver<'a> {
    prob: &'a LpProblem,
    lb: Vec<f64>,
    ub: Vec<f64>,
    state: Vec<VarState>,
    basic: Vec<usize>,
    x: Vec<f64>,
    lu: Option<LuFactors>,
    etas: Vec<Eta>,
    work: Vec<f64>,
    iterations: usize,
}

impl<'a> Solver<'a> {
    /// Builds a solver, optionally overriding bounds (used by branch and
    /// bound to fix binaries) and starting from a previous basis.
    pub fn new(
        prob: &'a LpProblem,
        bound_overrides: &[(usize, f64, f64)],
        start: Option<&Basis>,
    ) -> Self {
        let n = prob.num_total();
        let mut lb: Vec<f64> = (0..n).map(|j| prob.lb(j)).collect();
        let mut ub: Vec<f64> = (0..n).map(|j| prob.ub(j)).collect();
        for &(j, lo, hi) in bound_overrides {
            lb[j] = lo;
            ub[j] = hi;
        }
        let valid_hint = start.is_some_and(|b| {
            b.state.len() == n
                && b.basic.len() == prob.num_rows
                && b.basic.iter().all(|&j| j < n)
                && b.basic.iter().all(|&j| b.state[j] == VarState::Basic)
                && b.state.iter().filter(|s| **s == VarState::Basic).count() == prob.num_rows
        });
        let (state, basic) = if valid_hint {
            let b = start.unwrap();
            (b.state.clone(), b.basic.clone())
        } else {
            Self::slack_basis(prob, &lb, &ub)
        };
        Solver {
            prob,
            lb,
            ub,
            state,
            basic,
            x: vec![0.0; n],
            lu: None,
            etas: Vec::new(),
            work: vec![0.0; prob.num_rows],
            iterations: 0,
        }
    }

    fn slack_basis(prob: &LpProblem, lb: &[f64], ub: &[f64]) -> (Vec<VarState>, Vec<usize>) {
        let n = prob.num_total();
        let mut state = Vec::with_capacity(n);
        for j in 0..n {
            state.push(if j < prob.num_structural() {
                nonbasic_state(lb[j], ub[j])
            } else {
                VarState::Basic
            });
        }
        let basic = (prob.num_structural()..n).collect();
        (state, basic)
    }

    pub fn solve(mut self) -> LpResult {
        for j in 0..self.prob.num_total() {
            if self.lb[j] > self.ub[j] + FEAS_TOL * (1.0 + self.ub[j].abs()) {
                return self.finish(LpStatus::Infeasible);
            }
        }
        // Nonbasic variables parked at a bound that a bound override removed
        // are re-parked at a bound that exists.
        for j in 0..self.prob.num_total() {
            match self.state[j] {
                VarState::AtLower if !self.lb[j].is_finite() => {
                    self.state[j] = nonbasic_state(self.lb[j], self.ub[j]);
                }
                VarState::AtUpper if !self.ub[j].is_finite() => {
                    self.state[j] = nonbasic_state(self.lb[j], self.ub[j]);
                }
                _ => {}
            }
        }
        self.refactorize();
        self.recompute_x();

        let max_iter = 200 * (self.prob.num_rows + self.prob.num_structural()) + 20_000;
        let mut degenerate_run = 0usize;
        let mut bland = false;

        loop {
            self.iterations += 1;
            if self.iterations > max_iter {
                return self.finish(LpStatus::NumericalFailure);
            }
            if self.etas.len() >= REFACTOR_EVERY {
                self.refactorize();
                self.recompute_x();
            }

            let infeasible = self.total_infeasibility() > 0.0;
            let y = self.dual_prices(infeasible);
            let entering = if bland {
                self.price_bland(&y, infeasible)
            } else {
                self.price_dantzig(&y, infeasible)
            };
            let (j_in, dir) = match entering {
                Some(e) => e,
                None => {
                    if infeasible {
                        return self.finish(LpStatus::Infeasible);
                    }
                    self.refactorize();
                    self.recompute_x();
                    return self.finish(LpStatus::Optimal);
                }
            };

            let alpha = self.ftran_col(j_in);
            match self.ratio_test(j_in, dir, &alpha, infeasible, bland) {
                Ratio::Unbounded => {
                    return if infeasible {
                        self.finish(LpStatus::NumericalFailure)
                    } else {
                        self.finish(LpStatus::Unbounded)
                    };
                }
                Ratio::BoundFlip { theta } => {
                    self.apply_step(j_in, dir, theta, &alpha);
                    self.state[j_in] = match self.state[j_in] {
                        VarState::AtLower => VarState::AtUpper,
                        VarState::AtUpper => VarState::AtLower,
                        s => s,
                    };
                    degenerate_run = 0;
                    bland = false;
                }
                Ratio::Pivot {
                    theta,
                    pos,
                    to_upper,
                } => {
                    let j_out = self.basic[pos];
                    self.apply_step(j_in, dir, theta, &alpha);
                    self.x[j_out] = if to_upper { self.ub[j_out] } else { self.lb[j_out] };
                    self.state[j_out] = if to_upper {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                    self.state[j_in] = VarState::Basic;
                    self.basic[pos] = j_in;
                    let pivot = alpha[pos];
                    let col: Vec<(usize, f64)> = alpha
                        .iter()
                        .enumerate()
                        .filter(|&(_, &v)| v.abs() > DROP_TOL)
                        .map(|(i, &v)| (i, v))
                        .collect();
                    self.etas.push(Eta { pos, col, pivot });
                    if theta.abs() <= 1e-12 {
                        degenerate_run += 1;
                        if degenerate_run >= BLAND_AFTER {
                            bland = true;
                        }
                    } else {
                        degenerate_run = 0;
                        bland = false;
                    }
                }
            }
        }
    }

    fn finish(mut self, status: LpStatus) -> LpResult {
        let n_struct = self.prob.num_structural();
        let values: Vec<f64> = self.x[..n_struct].to_vec();
        let objective = values.iter().zip(&self.prob.obj).map(|(x, c)| x * c).sum();
        LpResult {
            status,
            values,
            objective,
            iterations: self.iterations,
            basis: Basis {
                state: std::mem::take(&mut self.state),
                basic: std::mem::take(&mut self.basic),
            },
        }
    }

    // ----- numerical kernel -------------------------------------------------

    /// Factorizes the current basis. A structurally singular basis is
    /// replaced wholesale by the all-slack basis (always factorizable), so
    /// this cannot fail; it only costs the warm start.
    fn refactorize(&mut self) {
        if self.try_refactorize() {
            return;
        }
        let (state, basic) = Self::slack_basis(self.prob, &self.lb, &self.ub);
        self.state = state;
        self.basic = basic;
        let ok = self.try_refactorize();
        debug_assert!(ok, "slack basis must factorize");
    }

    fn try_refactorize(&mut self) -> bool {
        self.etas.clear();
        let m = self.prob.num_rows;
        let mut lu = LuFactors {
            l_cols: Vec::with_capacity(m),
            u_cols: Vec::with_capacity(m),
            u_diag: Vec::with_capacity(m),
            pivot_row: Vec::with_capacity(m),
            col_order: (0..m).collect(),
        };
        let mut step_of_row = vec![usize::MAX; m];
        let mut work = vec![0.0f64; m];
        let mut touched: Vec<usize> = Vec::new();
        for step in 0..m {
            let j = self.basic[lu.col_order[step]];
            self.prob.for_each_entry(j, |r, v| {
                work[r] = v;
                touched.push(r);
            });
            let mut u_col = Vec::new();
            for k in 0..step {
                let pr = lu.pivot_row[k];
                let w = work[pr];
                if w == 0.0 {
                    continue;
                }
                if w.abs() > DROP_TOL {
                    u_col.push((k, w));
                }
                for &(r, mult) in &lu.l_cols[k] {
                    if work[r] == 0.0 {
                        touched.push(r);
                    }
                    work[r] -= mult * w;
                }
                work[pr] = 0.0;
            }
            let mut best: Option<(usize, f64)> = None;
            for &r in &touched {
                if step_of_row[r] != usize::MAX {
                    continue;
                }
                let v = work[r].abs();
                if v > PIVOT_TOL {
                    match best {
                        Some((br, bv)) if v < bv || (v == bv && r > br) => {}
                        _ => best = Some((r, v)),
                    }
                }
            }
            let pr = match best {
                Some((r, _)) => r,
                None => {
                    for &t in &touched {
                        work[t] = 0.0;
                    }
                    return false;
                }
            };
            let piv = work[pr];
            let mut l_col = Vec::new();
            for &r in &touched {
                if r != pr && step_of_row[r] == usize::MAX && work[r].abs() > DROP_TOL {
                    l_col.push((r, work[r] / piv));
                }
                work[r] = 0.0;
            }
            touched.clear();
            l_col.sort_unstable_by_key(|&(r, _)| r);
            step_of_row[pr] = step;
            lu.pivot_row.push(pr);
            lu.l_cols.push(l_col);
            lu.u_cols.push(u_col);
            lu.u_diag.push(piv);
        }
        self.lu = Some(lu);
        true
    }

    /// Solves `B w = rhs` in place; `rhs` is indexed by row on entry and is
    /// zeroed on exit. The result is indexed by basis position.
    fn ftran(&self, rhs: &mut [f64]) -> Vec<f64> {
        let lu = self.lu.as_ref().expect("factorized");
        let m = self.prob.num_rows;
        for k in 0..m {
            let pr = lu.pivot_row[k];
            let w = rhs[pr];
            if w == 0.0 {
                continue;
            }
            for &(r, mult) in &lu.l_cols[k] {
                rhs[r] -= mult * w;
            }
        }
        let mut z = vec![0.0f64; m];
        for k in 0..m {
            z[k] = rhs[lu.pivot_row[k]];
            rhs[lu.pivot_row[k]] = 0.0;
        }
        let mut out = vec![0.0f64; m];
        for k in (0..m).rev() {
            let v = z[k] / lu.u_diag[k];
            if v != 0.0 {
                for &(k2, u) in &lu.u_cols[k] {
                    z[k2] -= u * v;
                }
            }
            out[lu.col_order[k]] = v;
        }
        for eta in &self.etas {
            let piv = out[eta.pos] / eta.pivot;
            if piv != 0.0 {
                for &(i, a) in &eta.col {
                    if i != eta.pos {
                        out[i] -= a * piv;
                    }
                }
            }
            out[eta.pos] = piv;
        }
        out
    }

    /// Solves `B^T y = c_b`; `c_b` is indexed by basis position, the result
    /// by row.
    fn btran(&self, mut cb: Vec<f64>) -> Vec<f64> {
        let lu = self.lu.as_ref().expect("factorized");
        let m = self.prob.num_rows;
        for eta in self.etas.iter().rev() {
            let mut acc = 0.0;
            for &(i, a) in &eta.col {
                if i != eta.pos {
                    acc += a * cb[i];
                }
            }
            cb[eta.pos] = (cb[eta.pos] - acc) / eta.pivot;
        }
        let mut z = vec![0.0f64; m];
        for k in 0..m {
            let mut acc = cb[lu.col_order[k]];
            for &(k2, u) in &lu.u_cols[k] {
                acc -= u * z[k2];
            }
            z[k] = acc / lu.u_diag[k];
        }
        let mut y = vec![0.0f64; m];
        for k in (0..m).rev() {
            let mut acc = z[k];
            for &(r, mult) in &lu.l_cols[k] {
                acc -= mult * y[r];
            }
            y[lu.pivot_row[k]] = acc;
        }
        y
    }

    fn ftran_col(&mut self, j: usize) -> Vec<f64> {
        let mut rhs = std::mem::take(&mut self.work);
        self.prob.for_each_entry(j, |r, v| rhs[r] += v);
        let out = self.ftran(&mut rhs);
        self.work = rhs;
        out
    }

    fn recompute_x(&mut self) {
        let n = self.prob.num_total();
        for j in 0..n {
            self.x[j] = match self.state[j] {
                VarState::Basic => 0.0,
                VarState::AtLower => self.lb[j],
                VarState::AtUpper => self.ub[j],
                VarState::FreeZero => 0.0,
            };
        }
        let mut rhs = std::mem::take(&mut self.work);
        rhs.copy_from_slice(&self.prob.rhs);
        for j in 0..n {
            if self.state[j] != VarState::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                self.prob.for_each_entry(j, |r, v| rhs[r] -= v * xj);
            }
        }
        let xb = self.ftran(&mut rhs);
        self.work = rhs;
        for (pos, &j) in self.basic.iter().enumerate() {
            self.x[j] = xb[pos];
        }
    }

    fn feas_slack(bound: f64) -> f64 {
        if bound.is_finite() {
            FEAS_TOL * (1.0 + bound.abs())
        } else {
            FEAS_TOL
        }
    }

    fn total_infeasibility(&self) -> f64 {
        let mut total = 0.0;
        for &j in &self.basic {
            let v = self.x[j];
            if v < self.lb[j] - Self::feas_slack(self.lb[j]) {
                total += self.lb[j] - v;
            } else if v > self.ub[j] + Self::feas_slack(self.ub[j]) {
                total += v - self.ub[j];
            }
        }
        total
    }

    fn dual_prices(&self, phase1: bool) -> Vec<f64> {
        let m = self.prob.num_rows;
        let mut cb = vec![0.0f64; m];
        for (pos, &j) in self.basic.iter().enumerate() {
            cb[pos] = if phase1 {
                let v = self.x[j];
                if v < self.lb[j] - Self::feas_slack(self.lb[j]) {
                    -1.0
                } else if v > self.ub[j] + Self::feas_slack(self.ub[j]) {
                    1.0
                } else {
                    0.0
                }
            } else {
                self.cost_of(j)
            };
        }
        self.btran(cb)
    }

    fn cost_of(&self, j: usize) -> f64 {
        if j < self.prob.num_structural() {
            self.prob.obj[j]
        } else {
            0.0
        }
    }

    fn reduced_cost(&self, j: usize, y: &[f64], phase1: bool) -> f64 {
        let mut acc = if phase1 { 0.0 } else { self.cost_of(j) };
        self.prob.for_each_entry(j, |r, v| acc -= y[r] * v);
        acc
    }

    /// Improving direction for nonbasic `j`: +1 leaves a lower bound upward.
    fn eligible(&self, j: usize, d: f64) -> Option<i8> {
        let tol = OPT_TOL * (1.0 + self.cost_of(j).abs());
        match self.state[j] {
            VarState::Basic => None,
            VarState::AtLower if d < -tol && self.ub[j] > self.lb[j] => Some(1),
            VarState::AtUpper if d > tol && self.ub[j] > self.lb[j] => Some(-1),
            VarState::FreeZero if d < -tol => Some(1),
            VarState::FreeZero if d > tol => Some(-1),
            _ => None,
        }
    }

    fn price_dantzig(&self, y: &[f64], phase1: bool) -> Option<(usize, i8)> {
        let mut best: Option<(f64, usize, i8)> = None;
        for j in 0..self.prob.num_total() {
            if self.state[j] == VarState::Basic {
                continue;
            }
            let d = self.reduced_cost(j, y, phase1);
            if let Some(dir) = self.eligible(j, d) {
                let score = d.abs();
                match best {
                    Some((s, _, _)) if score <= s => {}
                    _ => best = Some((score, j, dir)),
                }
            }
        }
        best.map(|(_, j, dir)| (j, dir))
    }

    fn price_bland(&self, y: &[f64], phase1: bool) -> Option<(usize, i8)> {
        for j in 0..self.prob.num_total() {
            if self.state[j] == VarState::Basic {
                continue;
            }
            let d = self.reduced_cost(j, y, phase1);
            if let Some(dir) = self.eligible(j, d) {
                return Some((j, dir));
            }
        }
        None
    }

    fn apply_step(&mut self, j_in: usize, dir: i8, theta: f64, alpha: &[f64]) {
        let step = theta * dir as f64;
        self.x[j_in] += step;
        for (pos, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                self.x[self.basic[pos]] -= a * step;
            }
        }
    }

    fn ratio_test(&self, j_in: usize, dir: i8, alpha: &[f64], phase1: bool, bland: bool) -> Ratio {
        let mut theta = f64::INFINITY;
        let mut blocker: Option<(usize, bool, f64)> = None; // (pos, to_upper, |pivot|)

        for (pos, &a) in alpha.iter().enumerate() {
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let j = self.basic[pos];
            let v = self.x[j];
            let rate = -(dir as f64) * a;
            let (lo, up) = (self.lb[j], self.ub[j]);
            // An infeasible basic variable moving back toward its range
            // blocks at the violated bound; a feasible one blocks at the
            // bound it is moving toward.
            let (target, to_upper) = if rate > 0.0 {
                if phase1 && v < lo - Self::feas_slack(lo) {
                    (lo, false)
                } else {
                    (up, true)
                }
            } else if phase1 && v > up + Self::feas_slack(up) {
                (up, true)
            } else {
                (lo, false)
            };
            if !target.is_finite() {
                continue;
            }
            let t = (target - v) / rate;
            if t < -Self::feas_slack(target) / rate.abs() {
                continue;
            }
            let t = t.max(0.0);
            let better = match blocker {
                None => t < theta,
                Some((bpos, _, bpiv)) => {
                    if bland {
                        t < theta - 1e-12 || (t <= theta + 1e-12 && j < self.basic[bpos])
                    } else {
                        t < theta - 1e-10
                            || (t < theta + 1e-10
                                && (a.abs() > bpiv + 1e-12
                                    || ((a.abs() - bpiv).abs() <= 1e-12 && j < self.basic[bpos])))
                    }
                }
            };
            if better {
                theta = theta.min(t);
                blocker = Some((pos, to_upper, a.abs()));
            }
        }

        let range = self.ub[j_in] - self.lb[j_in];
        if range.is_finite() && range <= theta {
            return Ratio::BoundFlip { theta: range };
        }
        match blocker {
            Some((pos, to_upper, _)) => Ratio::Pivot {
                theta,
                pos,
                to_upper,
            },
            None => Ratio::Unbounded,
        }
    }
}

enum Ratio {
    Unbounded,
    BoundFlip { theta: f64 },
    Pivot { theta: f64, pos: usize, to_upper: bool },
}

fn nonbasic_state(lb: f64, ub: f64) -> VarState {
    if lb.is_finite() {
        VarState::AtLower
    } else if ub.is_finite() {
        VarState::AtUpper
    } else {
        VarState::FreeZero
    }
}

/// Solves `prob` with optional bound overrides and a starting basis.
pub fn solve(
    prob: &LpProblem,
    bound_overrides: &[(usize, f64, f64)],
    start: Option<&Basis>,
) -> LpResult {
    Solver::new(prob, bound_overrides, start).solve()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_feasible(prob: &LpProblem, values: &[f64]) {
        for r in 0..prob.num_rows() {
            let mut act = 0.0;
            for (j, col) in prob.cols.iter().enumerate() {
                for &(row, v) in col {
                    if row == r {
                        act += v * values[j];
                    }
                }
            }
            let slack = prob.rhs[r] - act;
            assert!(
                slack >= prob.slack_lb[r] - 1e-7 && slack <= prob.slack_ub[r] + 1e-7,
                "row {r} violated: slack {slack}"
            );
        }
    }

    #[test]
    fn one_var_at_lower_bound() {
        // min x s.t. x >= 1
        let mut p = LpProblem::new(1, vec![1.0], &[RowSense::Ge]);
        p.add_var(1.0, 0.0, f64::INFINITY, &[(0, 1.0)]);
        let r = solve(&p, &[], None);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.values[0] - 1.0).abs() < 1e-9);
        assert!((r.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn detects_unbounded() {
        // min -x s.t. x >= 0 with no upper bound
        let mut p = LpProblem::new(1, vec![0.0], &[RowSense::Ge]);
        p.add_var(-1.0, 0.0, f64::INFINITY, &[]);
        let r = solve(&p, &[], None);
        assert_eq!(r.status, LpStatus::Unbounded);
    }

    #[test]
    fn detects_infeasible() {
        // x <= 1 and x >= 2
        let mut p = LpProblem::new(2, vec![1.0, 2.0], &[RowSense::Le, RowSense::Ge]);
        p.add_var(1.0, 0.0, f64::INFINITY, &[(0, 1.0), (1, 1.0)]);
        let r = solve(&p, &[], None);
        assert_eq!(r.status, LpStatus::Infeasible);
    }

    #[test]
    fn textbook_two_variable_lp() {
        // max x + 2y (as min of the negation) s.t. x + y <= 4, 2x + y >= 2,
        // 0 <= x, 0 <= y <= 3. Optimum 7 at (1, 3).
        let mut p = LpProblem::new(2, vec![4.0, 2.0], &[RowSense::Le, RowSense::Ge]);
        p.add_var(-1.0, 0.0, f64::INFINITY, &[(0, 1.0), (1, 2.0)]);
        p.add_var(-2.0, 0.0, 3.0, &[(0, 1.0), (1, 1.0)]);
        let r = solve(&p, &[], None);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective + 7.0).abs() < 1e-8, "objective {}", r.objective);
        assert!((r.values[0] - 1.0).abs() < 1e-8);
        assert!((r.values[1] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn equality_rows_force_values() {
        // min x + y s.t. x + y = 5, x - y = 1 -> (3, 2)
        let mut p = LpProblem::new(2, vec![5.0, 1.0], &[RowSense::Eq, RowSense::Eq]);
        p.add_var(1.0, f64::NEG_INFINITY, f64::INFINITY, &[(0, 1.0), (1, 1.0)]);
        p.add_var(1.0, f64::NEG_INFINITY, f64::INFINITY, &[(0, 1.0), (1, -1.0)]);
        let r = solve(&p, &[], None);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.values[0] - 3.0).abs() < 1e-8);
        assert!((r.values[1] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn bound_overrides_restrict_the_solve() {
        // min -x - y s.t. x + y <= 10, x,y in [0, 8]; fixing x = 1 moves the
        // optimum to (1, 8).
        let mut p = LpProblem::new(1, vec![10.0], &[RowSense::Le]);
        let x = p.add_var(-1.0, 0.0, 8.0, &[(0, 1.0)]);
        p.add_var(-1.0, 0.0, 8.0, &[(0, 1.0)]);
        let r = solve(&p, &[(x, 1.0, 1.0)], None);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.values[0] - 1.0).abs() < 1e-8);
        assert!((r.values[1] - 8.0).abs() < 1e-8);
    }

    #[test]
    fn warm_basis_reaches_same_optimum() {
        let mut p = LpProblem::new(2, vec![4.0, 2.0], &[RowSense::Le, RowSense::Ge]);
        p.add_var(-1.0, 0.0, f64::INFINITY, &[(0, 1.0), (1, 2.0)]);
        p.add_var(-2.0, 0.0, 3.0, &[(0, 1.0), (1, 1.0)]);
        let first = solve(&p, &[], None);
        let second = solve(&p, &[], Some(&first.basis));
        assert_eq!(second.status, LpStatus::Optimal);
        assert!((second.objective - first.objective).abs() < 1e-9);
        assert!(second.iterations <= first.iterations);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Redundant rows all active at the optimum.
        let senses = vec![RowSense::Le; 6];
        let mut p = LpProblem::new(6, vec![0.0; 6], &senses);
        p.add_var(
            -1.0,
            0.0,
            1.0,
            &[(0, 1.0), (1, 2.0), (2, 3.0), (3, 1.0), (4, 5.0), (5, 1.0)],
        );
        p.add_var(
            -1.0,
            0.0,
            1.0,
            &[(0, -1.0), (1, -2.0), (2, -3.0), (3, -1.0), (4, -5.0), (5, -1.0)],
        );
        let r = solve(&p, &[], None);
        assert_eq!(r.status, LpStatus::Optimal);
        check_feasible(&p, &r.values);
    }

    #[test]
    fn deterministic_repeat() {
        let mut p = LpProblem::new(3, vec![10.0, 6.0, 4.0], &[RowSense::Le; 3]);
        p.add_var(-10.0, 0.0, f64::INFINITY, &[(0, 1.0), (1, 1.0), (2, 2.0)]);
        p.add_var(-6.0, 0.0, f64::INFINITY, &[(0, 1.0), (1, 2.0), (2, 2.0)]);
        p.add_var(-4.0, 0.0, f64::INFINITY, &[(0, 1.0), (1, 1.0)]);
        let a = solve(&p, &[], None);
        let b = solve(&p, &[], None);
        assert_eq!(a.status, b.status);
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.values, b.values);
    }
}
