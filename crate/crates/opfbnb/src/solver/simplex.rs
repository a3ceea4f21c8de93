//! Bounded-variable revised simplex with a dense LU basis and product-form
//! updates. Pricing is most-negative reduced cost with lowest-index
//! tie-breaking, falling back to Bland's rule after a degeneracy stall so
//! cycling cannot occur. Everything is index-ordered and deterministic.
//!
//! Rows arrive as equalities with one slack column each; the slack bounds
//! encode the row sense. Phase 1 minimizes the total bound violation of the
//! basic variables (composite infeasibility), which doubles as the repair
//! step when cutting planes append new rows to a solved basis.

use super::linalg::{lu_factor, DenseMat, LuFactors};

const PIVOT_TOL: f64 = 1e-10;
const RC_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-8;
const REFACTOR_EVERY: usize = 64;
const STALL_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarState {
    Basic(usize),
    AtLo,
    AtHi,
    /// Nonbasic free variable resting at zero.
    FreeZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}

pub struct Simplex {
    /// Structural + slack columns, sparse by column.
    cols: Vec<Vec<(usize, f64)>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    obj: Vec<f64>,
    rhs: Vec<f64>,
    m: usize,

    basis: Vec<usize>,
    state: Vec<VarState>,
    x: Vec<f64>,

    lu: Option<LuFactors>,
    /// Product-form updates since the last refactorization: (pivot row, B^-1 a).
    etas: Vec<(usize, Vec<f64>)>,

    pub pivots: usize,
    pivot_budget: usize,
    /// Farkas row multipliers when phase 1 ends infeasible.
    pub farkas: Option<Vec<f64>>,
    bland: bool,
}

impl Simplex {
    /// Starts with `n` structural variables and no rows; rows arrive through
    /// [`Simplex::add_row`], which appends one slack column each.
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, obj: Vec<f64>, pivot_budget: usize) -> Self {
        let n = lo.len();
        debug_assert_eq!(hi.len(), n);
        debug_assert_eq!(obj.len(), n);
        let state = (0..n)
            .map(|j| Self::resting_state(lo[j], hi[j]))
            .collect();
        let x = (0..n).map(|j| Self::resting_value(lo[j], hi[j])).collect();
        Simplex {
            cols: vec![Vec::new(); n],
            lo,
            hi,
            obj,
            rhs: Vec::new(),
            m: 0,
            basis: Vec::new(),
            state,
            x,
            lu: None,
            etas: Vec::new(),
            pivots: 0,
            pivot_budget,
            farkas: None,
            bland: false,
        }
    }

    fn resting_state(lo: f64, hi: f64) -> VarState {
        if lo.is_finite() {
            VarState::AtLo
        } else if hi.is_finite() {
            VarState::AtHi
        } else {
            VarState::FreeZero
        }
    }

    fn resting_value(lo: f64, hi: f64) -> f64 {
        if lo.is_finite() {
            lo
        } else if hi.is_finite() {
            hi
        } else {
            0.0
        }
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    /// Appends one row sum(terms) + slack = rhs with the given slack bounds;
    /// the new slack enters the basis. Solved state is repaired lazily on
    /// the next `solve`.
    pub fn add_row(&mut self, terms: &[(usize, f64)], rhs: f64, s_lo: f64, s_hi: f64) {
        let row = self.m;
        self.m += 1;
        let slack = self.cols.len();
        self.cols.push(vec![(row, 1.0)]);
        self.lo.push(s_lo);
        self.hi.push(s_hi);
        self.obj.push(0.0);
        for &(var, coef) in terms {
            debug_assert!(var < slack);
            if coef != 0.0 {
                self.cols[var].push((row, coef));
            }
        }
        self.rhs.push(rhs);
        self.basis.push(slack);
        self.state.push(VarState::Basic(row));
        self.x.push(0.0);
        self.lu = None;
        self.etas.clear();
    }

    fn refactor(&mut self) -> Result<(), ()> {
        let m = self.m;
        let mut bmat = DenseMat::zeros(m, m);
        for (r, &var) in self.basis.iter().enumerate() {
            for &(row, coef) in &self.cols[var] {
                *bmat.at_mut(row, r) = coef;
            }
        }
        self.etas.clear();
        match lu_factor(&bmat) {
            Ok(lu) => {
                self.lu = Some(lu);
                Ok(())
            }
            Err(_) => Err(()),
        }
    }

    fn ftran(&self, v: &mut [f64]) {
        self.lu.as_ref().expect("factorized").solve(v);
        for (prow, u) in &self.etas {
            let vr = v[*prow] / u[*prow];
            for i in 0..self.m {
                if i == *prow {
                    continue;
                }
                v[i] -= u[i] * vr;
            }
            v[*prow] = vr;
        }
    }

    fn btran(&self, w: &mut [f64]) {
        for (prow, u) in self.etas.iter().rev() {
            let mut s = w[*prow];
            for i in 0..self.m {
                if i != *prow {
                    s -= u[i] * w[i];
                }
            }
            w[*prow] = s / u[*prow];
        }
        self.lu.as_ref().expect("factorized").solve_transpose(w);
    }

    /// Recomputes basic values x_B = B^-1 (rhs - N x_N).
    fn recompute_basics(&mut self) {
        let mut b = self.rhs.clone();
        for (j, st) in self.state.iter().enumerate() {
            if matches!(st, VarState::Basic(_)) {
                continue;
            }
            let xj = self.x[j];
            if xj != 0.0 {
                for &(row, coef) in &self.cols[j] {
                    b[row] -= coef * xj;
                }
            }
        }
        self.ftran(&mut b);
        for (r, &var) in self.basis.iter().enumerate() {
            self.x[var] = b[r];
        }
    }

    /// Ensures nonbasic values sit on their bounds and the basis is
    /// factorized and consistent.
    fn prepare(&mut self) -> Result<(), SimplexStatus> {
        for j in 0..self.cols.len() {
            match self.state[j] {
                VarState::AtLo => self.x[j] = self.lo[j],
                VarState::AtHi => self.x[j] = self.hi[j],
                VarState::FreeZero => {}
                VarState::Basic(_) => {}
            }
        }
        if self.lu.is_none() && self.refactor().is_err() {
            // fall back to the all-slack basis, which is always nonsingular
            for var in 0..self.cols.len() {
                self.state[var] = Self::resting_state(self.lo[var], self.hi[var]);
                self.x[var] = Self::resting_value(self.lo[var], self.hi[var]);
            }
            let n_struct = self.cols.len() - self.m;
            for r in 0..self.m {
                self.basis[r] = n_struct + r;
                self.state[n_struct + r] = VarState::Basic(r);
            }
            if self.refactor().is_err() {
                return Err(SimplexStatus::IterLimit);
            }
        }
        self.recompute_basics();
        Ok(())
    }

    fn infeasibility(&self) -> f64 {
        let mut total = 0.0;
        for &var in &self.basis {
            let x = self.x[var];
            if x < self.lo[var] - FEAS_TOL {
                total += self.lo[var] - x;
            } else if x > self.hi[var] + FEAS_TOL {
                total += x - self.hi[var];
            }
        }
        total
    }

    /// Phase-1 cost vector over basic variables: -1 below bound, +1 above.
    fn phase1_duals(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.m];
        for (r, &var) in self.basis.iter().enumerate() {
            let x = self.x[var];
            if x < self.lo[var] - FEAS_TOL {
                d[r] = -1.0;
            } else if x > self.hi[var] + FEAS_TOL {
                d[r] = 1.0;
            }
        }
        d
    }

    pub fn solve(&mut self) -> SimplexStatus {
        self.farkas = None;
        if self.m == 0 {
            // pure bound problem: each variable goes to its cheaper bound
            for j in 0..self.cols.len() {
                let c = self.obj[j];
                if c > 0.0 && self.lo[j].is_finite() {
                    self.state[j] = VarState::AtLo;
                    self.x[j] = self.lo[j];
                } else if c < 0.0 && self.hi[j].is_finite() {
                    self.state[j] = VarState::AtHi;
                    self.x[j] = self.hi[j];
                } else if c != 0.0 {
                    return SimplexStatus::Unbounded;
                }
            }
            return SimplexStatus::Optimal;
        }
        if let Err(s) = self.prepare() {
            return s;
        }
        match self.phase1() {
            SimplexStatus::Optimal => {}
            other => return other,
        }
        self.phase2()
    }

    fn phase1(&mut self) -> SimplexStatus {
        let mut stall = 0usize;
        let mut last = f64::INFINITY;
        loop {
            let inf0 = self.infeasibility();
            if inf0 <= FEAS_TOL {
                return SimplexStatus::Optimal;
            }
            if self.pivots >= self.pivot_budget {
                return SimplexStatus::IterLimit;
            }
            if inf0 < last - 1e-12 {
                stall = 0;
            } else {
                stall += 1;
                if stall > STALL_LIMIT {
                    self.bland = true;
                }
            }
            last = inf0;

            let mut y = self.phase1_duals();
            self.btran(&mut y);
            // price: rate of infeasibility change when moving var j
            let mut entering: Option<(usize, f64, bool)> = None; // (var, |score|, increase)
            for (j, st) in self.state.iter().enumerate() {
                if matches!(st, VarState::Basic(_)) {
                    continue;
                }
                if self.hi[j] - self.lo[j] <= 0.0 {
                    continue; // fixed, cannot move
                }
                let mut q = 0.0;
                for &(row, coef) in &self.cols[j] {
                    q += y[row] * coef;
                }
                // moving x_j up changes infeasibility at rate -q
                let (can_up, can_dn) = match st {
                    VarState::AtLo => (true, false),
                    VarState::AtHi => (false, true),
                    VarState::FreeZero => (true, true),
                    VarState::Basic(_) => unreachable!(),
                };
                let mut consider = |score: f64, up: bool, j: usize| {
                    if score > RC_TOL {
                        let better = match &entering {
                            None => true,
                            Some((_, best, _)) => {
                                if self.bland {
                                    false // first eligible by index wins
                                } else {
                                    score > *best + 1e-15
                                }
                            }
                        };
                        if better {
                            entering = Some((j, score, up));
                        }
                    }
                };
                if can_up {
                    consider(q, true, j);
                }
                if can_dn {
                    consider(-q, false, j);
                }
                if self.bland && entering.is_some() {
                    break;
                }
            }
            let Some((enter, _, up)) = entering else {
                // no improving direction: infeasible, duals certify it
                let mut y = self.phase1_duals();
                self.btran(&mut y);
                self.farkas = Some(y);
                return SimplexStatus::Infeasible;
            };
            if !self.pivot_phase1(enter, up) {
                return SimplexStatus::IterLimit;
            }
        }
    }

    /// Ratio test and pivot for phase 1. Moving `enter` in direction `up`,
    /// blocking events: feasible basic hits a bound, infeasible basic
    /// reaches the bound it violates, or the entering variable hits its own
    /// opposite bound.
    fn pivot_phase1(&mut self, enter: usize, up: bool) -> bool {
        let dir = if up { 1.0 } else { -1.0 };
        let mut u = vec![0.0; self.m];
        for &(row, coef) in &self.cols[enter] {
            u[row] = coef;
        }
        self.ftran(&mut u);
        // x_B(t) = x_B - dir * t * u
        let mut t_max = self.hi[enter] - self.lo[enter]; // bound flip distance
        if !t_max.is_finite() {
            t_max = f64::INFINITY;
        }
        let mut leave: Option<(usize, f64)> = None; // (row, ratio)
        for r in 0..self.m {
            let du = -dir * u[r];
            if du.abs() < PIVOT_TOL {
                continue;
            }
            let var = self.basis[r];
            let x = self.x[var];
            let (lo, hi) = (self.lo[var], self.hi[var]);
            // target bound this basic variable runs into
            let target = if x < lo - FEAS_TOL {
                if du > 0.0 {
                    Some(lo)
                } else {
                    None // moving further away is allowed in composite phase 1? no: blocks nothing
                }
            } else if x > hi + FEAS_TOL {
                if du < 0.0 {
                    Some(hi)
                } else {
                    None
                }
            } else if du > 0.0 {
                if hi.is_finite() {
                    Some(hi)
                } else {
                    None
                }
            } else if lo.is_finite() {
                Some(lo)
            } else {
                None
            };
            let Some(bound) = target else { continue };
            let ratio = (bound - x) / du;
            let ratio = ratio.max(0.0);
            let replace = match &leave {
                None => ratio < t_max,
                Some((lr, lratio)) => {
                    ratio < *lratio - 1e-12
                        || (ratio < *lratio + 1e-12 && self.basis[r] < self.basis[*lr])
                }
            };
            if replace && ratio <= t_max {
                leave = Some((r, ratio));
            }
        }
        self.pivots += 1;
        match leave {
            None => {
                if !t_max.is_finite() {
                    // cannot happen: some infeasible basic must block
                    return false;
                }
                // bound flip
                let t = t_max;
                self.apply_step(enter, dir, t, &u);
                self.state[enter] = if up { VarState::AtHi } else { VarState::AtLo };
                self.x[enter] = if up { self.hi[enter] } else { self.lo[enter] };
                true
            }
            Some((r, ratio)) => {
                self.apply_step(enter, dir, ratio, &u);
                self.enter_basis(enter, r, &u);
                true
            }
        }
    }

    fn apply_step(&mut self, enter: usize, dir: f64, t: f64, u: &[f64]) {
        if t != 0.0 {
            for r in 0..self.m {
                let var = self.basis[r];
                self.x[var] -= dir * t * u[r];
            }
            self.x[enter] += dir * t;
        }
    }

    fn enter_basis(&mut self, enter: usize, row: usize, u: &[f64]) {
        let leaving = self.basis[row];
        // park the leaving variable on its nearest bound
        let lv = self.x[leaving];
        let (lo, hi) = (self.lo[leaving], self.hi[leaving]);
        let state = if (lv - lo).abs() <= (lv - hi).abs() || !hi.is_finite() {
            if lo.is_finite() {
                self.x[leaving] = lo;
                VarState::AtLo
            } else {
                self.x[leaving] = 0.0;
                VarState::FreeZero
            }
        } else {
            self.x[leaving] = hi;
            VarState::AtHi
        };
        self.state[leaving] = state;
        self.basis[row] = enter;
        self.state[enter] = VarState::Basic(row);
        self.etas.push((row, u.to_vec()));
        if self.etas.len() >= REFACTOR_EVERY {
            let _ = self.refactor();
            self.recompute_basics();
        }
    }

    fn phase2(&mut self) -> SimplexStatus {
        let mut stall = 0usize;
        let mut last = f64::INFINITY;
        loop {
            if self.pivots >= self.pivot_budget {
                return SimplexStatus::IterLimit;
            }
            let objv = self.objective_value();
            if objv < last - 1e-12 {
                stall = 0;
            } else {
                stall += 1;
                if stall > STALL_LIMIT {
                    self.bland = true;
                }
            }
            last = objv;

            let mut y = vec![0.0; self.m];
            for (r, &var) in self.basis.iter().enumerate() {
                y[r] = self.obj[var];
            }
            self.btran(&mut y);
            let mut entering: Option<(usize, f64, bool)> = None;
            for (j, st) in self.state.iter().enumerate() {
                if matches!(st, VarState::Basic(_)) {
                    continue;
                }
                if self.hi[j] - self.lo[j] <= 0.0 {
                    continue;
                }
                let mut rc = self.obj[j];
                for &(row, coef) in &self.cols[j] {
                    rc -= y[row] * coef;
                }
                let (can_up, can_dn) = match st {
                    VarState::AtLo => (true, false),
                    VarState::AtHi => (false, true),
                    VarState::FreeZero => (true, true),
                    VarState::Basic(_) => unreachable!(),
                };
                let mut consider = |score: f64, up: bool| {
                    if score > RC_TOL {
                        let better = match &entering {
                            None => true,
                            Some((_, best, _)) => !self.bland && score > *best + 1e-15,
                        };
                        if better {
                            entering = Some((j, score, up));
                        }
                    }
                };
                if can_up {
                    consider(-rc, true);
                }
                if can_dn {
                    consider(rc, false);
                }
                if self.bland && entering.is_some() {
                    break;
                }
            }
            let Some((enter, _, up)) = entering else {
                return SimplexStatus::Optimal;
            };
            match self.pivot_phase2(enter, up) {
                Ok(()) => {}
                Err(status) => return status,
            }
        }
    }

    fn pivot_phase2(&mut self, enter: usize, up: bool) -> Result<(), SimplexStatus> {
        let dir = if up { 1.0 } else { -1.0 };
        let mut u = vec![0.0; self.m];
        for &(row, coef) in &self.cols[enter] {
            u[row] = coef;
        }
        self.ftran(&mut u);
        let mut t_max = self.hi[enter] - self.lo[enter];
        if !t_max.is_finite() {
            t_max = f64::INFINITY;
        }
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..self.m {
            let du = -dir * u[r];
            if du.abs() < PIVOT_TOL {
                continue;
            }
            let var = self.basis[r];
            let x = self.x[var];
            let bound = if du > 0.0 {
                if self.hi[var].is_finite() {
                    Some(self.hi[var])
                } else {
                    None
                }
            } else if self.lo[var].is_finite() {
                Some(self.lo[var])
            } else {
                None
            };
            let Some(bound) = bound else { continue };
            let ratio = ((bound - x) / du).max(0.0);
            let replace = match &leave {
                None => true,
                Some((lr, lratio)) => {
                    ratio < *lratio - 1e-12
                        || (ratio < *lratio + 1e-12 && self.basis[r] < self.basis[*lr])
                }
            };
            if replace {
                leave = Some((r, ratio));
            }
        }
        self.pivots += 1;
        let flip_first = match &leave {
            None => true,
            Some((_, ratio)) => t_max < *ratio,
        };
        if flip_first {
            if !t_max.is_finite() {
                return Err(SimplexStatus::Unbounded);
            }
            self.apply_step(enter, dir, t_max, &u);
            self.state[enter] = if up { VarState::AtHi } else { VarState::AtLo };
            self.x[enter] = if up { self.hi[enter] } else { self.lo[enter] };
            return Ok(());
        }
        let (row, ratio) = leave.expect("checked above");
        self.apply_step(enter, dir, ratio, &u);
        self.enter_basis(enter, row, &u);
        Ok(())
    }

    pub fn objective_value(&self) -> f64 {
        self.obj.iter().zip(&self.x).map(|(c, x)| c * x).sum()
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    /// Worst bound violation over all variables (post-solve check).
    pub fn primal_infeasibility(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.x.len() {
            worst = worst
                .max(self.lo[j] - self.x[j])
                .max(self.x[j] - self.hi[j]);
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(
        lo: Vec<f64>,
        hi: Vec<f64>,
        obj: Vec<f64>,
        rows: Vec<(Vec<(usize, f64)>, f64, f64, f64)>,
    ) -> Simplex {
        let mut s = Simplex::new(lo, hi, obj, 100_000);
        for (terms, rhs, s_lo, s_hi) in rows {
            s.add_row(&terms, rhs, s_lo, s_hi);
        }
        s
    }

    #[test]
    fn bound_only_problem() {
        let mut s = lp(
            vec![1.0, -2.0],
            vec![10.0, 5.0],
            vec![1.0, -1.0],
            vec![],
        );
        assert_eq!(s.solve(), SimplexStatus::Optimal);
        assert_eq!(s.values()[0], 1.0);
        assert_eq!(s.values()[1], 5.0);
    }

    #[test]
    fn simple_inequality() {
        // min -x - y st x + y <= 1, 0 <= x,y <= 10
        let mut s = lp(
            vec![0.0, 0.0],
            vec![10.0, 10.0],
            vec![-1.0, -1.0],
            vec![(vec![(0, 1.0), (1, 1.0)], 1.0, 0.0, f64::INFINITY)],
        );
        assert_eq!(s.solve(), SimplexStatus::Optimal);
        assert!((s.objective_value() + 1.0).abs() < 1e-9);
        // lowest-index entering picks x first: vertex (1, 0)
        assert!((s.values()[0] - 1.0).abs() < 1e-9);
        assert!(s.values()[1].abs() < 1e-9);
    }

    #[test]
    fn equality_and_infeasibility() {
        // x >= 1 and x <= 0 is infeasible
        let mut s = lp(
            vec![f64::NEG_INFINITY],
            vec![f64::INFINITY],
            vec![0.0],
            vec![
                (vec![(0, 1.0)], 1.0, f64::NEG_INFINITY, 0.0), // x >= 1
                (vec![(0, 1.0)], 0.0, 0.0, f64::INFINITY),     // x <= 0
            ],
        );
        assert_eq!(s.solve(), SimplexStatus::Infeasible);
        assert!(s.farkas.is_some());
    }

    #[test]
    fn unbounded_direction() {
        // min -x with x free and no rows binding it above
        let mut s = lp(
            vec![0.0],
            vec![f64::INFINITY],
            vec![-1.0],
            vec![],
        );
        assert_eq!(s.solve(), SimplexStatus::Unbounded);
    }

    #[test]
    fn warm_restart_after_row_addition() {
        // solve, then cut off the optimum and resolve
        let mut s = lp(
            vec![0.0, 0.0],
            vec![10.0, 10.0],
            vec![-1.0, -1.0],
            vec![(vec![(0, 1.0), (1, 1.0)], 4.0, 0.0, f64::INFINITY)],
        );
        assert_eq!(s.solve(), SimplexStatus::Optimal);
        assert!((s.objective_value() + 4.0).abs() < 1e-9);
        let before = s.pivots;
        s.add_row(&[(0, 1.0)], 1.5, 0.0, f64::INFINITY); // x <= 1.5
        assert_eq!(s.solve(), SimplexStatus::Optimal);
        assert!((s.objective_value() + 4.0).abs() < 1e-9);
        assert!((s.values()[0] - 1.5).abs() < 1e-9);
        assert!((s.values()[1] - 2.5).abs() < 1e-9);
        assert!(s.pivots - before <= 6, "warm restart should be short");
    }

    #[test]
    fn degenerate_cycling_guard() {
        // classic degenerate LP; must terminate
        let mut s = lp(
            vec![0.0; 4],
            vec![f64::INFINITY; 4],
            vec![-0.75, 150.0, -0.02, 6.0],
            vec![
                (
                    vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)],
                    0.0,
                    0.0,
                    f64::INFINITY,
                ),
                (
                    vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)],
                    0.0,
                    0.0,
                    f64::INFINITY,
                ),
                (vec![(2, 1.0)], 1.0, 0.0, f64::INFINITY),
            ],
        );
        assert_eq!(s.solve(), SimplexStatus::Optimal);
        assert!((s.objective_value() + 0.05).abs() < 1e-9);
    }
}
