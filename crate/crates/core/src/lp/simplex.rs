//! Bounded-variable primal revised simplex.
//!
//! Two phases with one artificial column per row that cannot be covered by its
//! slack. Dantzig pricing with a Harris ratio test; after a run of degenerate
//! pivots the solver switches to Bland's rule until the objective moves again.

use super::basis::EtaFile;
use super::scaling::Scaling;
use super::{Basis, ColState, LinearProgram, LpError, LpSolution, RowKind, Status};

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Defaults to `50 * (rows + cols)`.
    pub max_iterations: Option<usize>,
    pub refactor_every: usize,
    pub scale: bool,
    pub feas_tol: f64,
    pub opt_tol: f64,
    /// Degenerate pivots tolerated before falling back to Bland's rule.
    pub stall_limit: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: None,
            refactor_every: 64,
            scale: true,
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            stall_limit: 50,
        }
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_lp_from(lp, None, &SolverOptions::default())
}

/// Solves `lp`, optionally starting from a basis of a problem with the same
/// constraint matrix. A start basis that is singular or primal infeasible is
/// discarded in favour of a cold start.
pub fn solve_lp_from(
    lp: &LinearProgram,
    start: Option<&Basis>,
    opts: &SolverOptions,
) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let scaling = if opts.scale {
        Scaling::compute(lp)
    } else {
        Scaling::identity(lp.num_rows(), lp.num_vars())
    };
    let mut s = Simplex::new(lp, &scaling, opts);
    let warm = start.map(|b| s.load_basis(b)).unwrap_or(false);
    let status = if warm {
        s.run(false)?
    } else {
        s.cold_start();
        let mut status = Status::Optimal;
        if s.has_artificials() {
            s.set_phase_one_costs();
            s.run(true)?;
            if s.infeasibility() > 1e-7 {
                status = Status::Infeasible;
            }
        }
        if status == Status::Optimal {
            s.enter_phase_two()?;
            status = s.run(false)?;
        }
        status
    };
    s.finish(lp, &scaling, status)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum State {
    Basic(usize),
    Lower,
    Upper,
    Zero,
}

struct Simplex<'a> {
    m: usize,
    n: usize,
    col_start: Vec<usize>,
    row_idx: Vec<usize>,
    vals: Vec<f64>,
    /// Scaled row right-hand sides.
    rhs: Vec<f64>,
    /// Working costs over structural, slack and artificial columns.
    cost: Vec<f64>,
    real_cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    art_sign: Vec<f64>,
    x: Vec<f64>,
    head: Vec<usize>,
    state: Vec<State>,
    etas: EtaFile,
    pivots_since_refactor: usize,
    iterations: usize,
    max_iterations: usize,
    opts: &'a SolverOptions,
}

impl<'a> Simplex<'a> {
    fn new(lp: &LinearProgram, sc: &Scaling, opts: &'a SolverOptions) -> Self {
        let (m, n) = (lp.num_rows(), lp.num_vars());
        let mut counts = vec![0usize; n + 1];
        for row in lp.rows() {
            for &(j, _) in &row.terms {
                counts[j + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let mut fill = counts;
        let nnz = col_start[n];
        let mut row_idx = vec![0; nnz];
        let mut vals = vec![0.0; nnz];
        for (i, row) in lp.rows().iter().enumerate() {
            for &(j, a) in &row.terms {
                let p = fill[j];
                row_idx[p] = i;
                vals[p] = a * sc.row[i] * sc.col[j];
                fill[j] += 1;
            }
        }
        let total = n + 2 * m;
        let mut cost = vec![0.0; total];
        let mut lo = vec![0.0; total];
        let mut hi = vec![0.0; total];
        for j in 0..n {
            cost[j] = lp.cost()[j] * sc.col[j];
            lo[j] = lp.lower()[j] / sc.col[j];
            hi[j] = lp.upper()[j] / sc.col[j];
        }
        for (i, row) in lp.rows().iter().enumerate() {
            let (l, h) = match row.kind {
                RowKind::Eq => (0.0, 0.0),
                RowKind::Le => (0.0, f64::INFINITY),
                RowKind::Ge => (f64::NEG_INFINITY, 0.0),
            };
            lo[n + i] = l;
            hi[n + i] = h;
        }
        let rhs = lp.rows().iter().enumerate().map(|(i, r)| r.rhs * sc.row[i]).collect();
        let max_iterations = opts.max_iterations.unwrap_or(50 * (m + n).max(1));
        Simplex {
            m,
            n,
            col_start,
            row_idx,
            vals,
            rhs,
            real_cost: cost.clone(),
            cost,
            lo,
            hi,
            art_sign: vec![0.0; m],
            x: vec![0.0; total],
            head: (n..n + m).collect(),
            state: vec![State::Lower; total],
            etas: EtaFile::default(),
            pivots_since_refactor: 0,
            iterations: 0,
            max_iterations,
            opts,
        }
    }

    fn for_col(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for p in self.col_start[j]..self.col_start[j + 1] {
                f(self.row_idx[p], self.vals[p]);
            }
        } else if j < self.n + self.m {
            f(j - self.n, 1.0);
        } else {
            let i = j - self.n - self.m;
            f(i, self.art_sign[i]);
        }
    }

    fn col_nnz(&self, j: usize) -> usize {
        if j < self.n {
            self.col_start[j + 1] - self.col_start[j]
        } else {
            1
        }
    }

    fn nonbasic_value(&self, j: usize, st: State) -> f64 {
        match st {
            State::Lower => self.lo[j],
            State::Upper => self.hi[j],
            _ => 0.0,
        }
    }

    fn resting_state(&self, j: usize) -> State {
        if self.lo[j].is_finite() {
            State::Lower
        } else if self.hi[j].is_finite() {
            State::Upper
        } else {
            State::Zero
        }
    }

    fn cold_start(&mut self) {
        let (n, m) = (self.n, self.m);
        for j in 0..n {
            let st = self.resting_state(j);
            self.state[j] = st;
            self.x[j] = self.nonbasic_value(j, st);
        }
        let mut resid = self.rhs.clone();
        for j in 0..n {
            let xj = self.x[j];
            if xj != 0.0 {
                self.for_col(j, |i, a| resid[i] -= a * xj);
            }
        }
        self.etas.clear();
        for i in 0..m {
            let s = n + i;
            let a = n + m + i;
            let r = resid[i];
            if r >= self.lo[s] - self.opts.feas_tol && r <= self.hi[s] + self.opts.feas_tol {
                self.head[i] = s;
                self.state[s] = State::Basic(i);
                self.x[s] = r;
                self.state[a] = State::Lower;
                self.lo[a] = 0.0;
                self.hi[a] = 0.0;
            } else {
                let sb = r.clamp(self.lo[s], self.hi[s]);
                self.state[s] = if sb == self.lo[s] { State::Lower } else { State::Upper };
                self.x[s] = sb;
                let sign = if r - sb >= 0.0 { 1.0 } else { -1.0 };
                self.art_sign[i] = sign;
                self.lo[a] = 0.0;
                self.hi[a] = f64::INFINITY;
                self.head[i] = a;
                self.state[a] = State::Basic(i);
                self.x[a] = (r - sb).abs();
                if sign < 0.0 {
                    let mut alpha = vec![0.0; m];
                    alpha[i] = -1.0;
                    self.etas.push(i, &alpha);
                }
            }
        }
        self.pivots_since_refactor = 0;
    }

    fn has_artificials(&self) -> bool {
        (0..self.m).any(|i| self.hi[self.n + self.m + i] > 0.0)
    }

    fn set_phase_one_costs(&mut self) {
        let base = self.n + self.m;
        for c in self.cost.iter_mut() {
            *c = 0.0;
        }
        for i in 0..self.m {
            if self.hi[base + i] > 0.0 {
                self.cost[base + i] = -1.0;
            }
        }
    }

    fn infeasibility(&self) -> f64 {
        let base = self.n + self.m;
        (0..self.m).map(|i| self.x[base + i].max(0.0)).sum()
    }

    fn enter_phase_two(&mut self) -> Result<(), LpError> {
        let base = self.n + self.m;
        for i in 0..self.m {
            let a = base + i;
            self.lo[a] = 0.0;
            self.hi[a] = 0.0;
            if !matches!(self.state[a], State::Basic(_)) {
                self.state[a] = State::Lower;
                self.x[a] = 0.0;
            }
        }
        self.cost.clone_from(&self.real_cost);
        self.refactor()
    }

    /// Installs a start basis given over structural + slack columns.
    fn load_basis(&mut self, basis: &Basis) -> bool {
        let (n, m) = (self.n, self.m);
        if basis.states.len() != n + m {
            return false;
        }
        if basis.states.iter().filter(|s| **s == ColState::Basic).count() != m {
            return false;
        }
        for j in 0..n + m {
            let st = match basis.states[j] {
                ColState::Basic => State::Basic(usize::MAX),
                ColState::AtLower if self.lo[j].is_finite() => State::Lower,
                ColState::AtUpper if self.hi[j].is_finite() => State::Upper,
                _ => self.resting_state(j),
            };
            self.state[j] = st;
            self.x[j] = self.nonbasic_value(j, st);
        }
        for i in 0..m {
            let a = n + m + i;
            self.state[a] = State::Lower;
            self.lo[a] = 0.0;
            self.hi[a] = 0.0;
            self.x[a] = 0.0;
        }
        let basics: Vec<usize> = (0..n + m).filter(|&j| matches!(self.state[j], State::Basic(_))).collect();
        if !self.factor(&basics) {
            return false;
        }
        self.compute_basic_values();
        let tol = 1e-7;
        (0..m).all(|r| {
            let j = self.head[r];
            self.x[j] >= self.lo[j] - tol && self.x[j] <= self.hi[j] + tol
        })
    }

    /// Builds a fresh eta file for `basics`. Returns false if singular.
    fn factor(&mut self, basics: &[usize]) -> bool {
        let (n, m) = (self.n, self.m);
        self.etas.clear();
        self.pivots_since_refactor = 0;
        let mut assigned = vec![false; m];
        let mut head = vec![usize::MAX; m];
        let mut rest = Vec::new();
        for &j in basics {
            if j >= n {
                let i = if j < n + m { j - n } else { j - n - m };
                if !assigned[i] {
                    assigned[i] = true;
                    head[i] = j;
                    if j >= n + m && self.art_sign[i] < 0.0 {
                        let mut alpha = vec![0.0; m];
                        alpha[i] = -1.0;
                        self.etas.push(i, &alpha);
                    }
                    continue;
                }
            }
            rest.push(j);
        }
        rest.sort_by_key(|&j| (self.col_nnz(j), j));
        let mut v = vec![0.0; m];
        for j in rest {
            v.iter_mut().for_each(|e| *e = 0.0);
            self.for_col(j, |i, a| v[i] = a);
            self.etas.ftran(&mut v);
            let mut best = None;
            let mut best_abs = 1e-9;
            for (r, &vr) in v.iter().enumerate() {
                if !assigned[r] && vr.abs() > best_abs {
                    best_abs = vr.abs();
                    best = Some(r);
                }
            }
            let Some(r) = best else {
                return false;
            };
            assigned[r] = true;
            head[r] = j;
            self.etas.push(r, &v);
        }
        for (r, &j) in head.iter().enumerate() {
            self.state[j] = State::Basic(r);
        }
        self.head = head;
        true
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let basics = self.head.clone();
        if !self.factor(&basics) {
            return Err(LpError::NumericalFailure {
                iterations: self.iterations,
                reason: "basis became numerically singular".into(),
            });
        }
        self.compute_basic_values();
        Ok(())
    }

    fn compute_basic_values(&mut self) {
        let mut v = self.rhs.clone();
        let total = self.n + 2 * self.m;
        for j in 0..total {
            if matches!(self.state[j], State::Basic(_)) {
                continue;
            }
            let xj = self.x[j];
            if xj != 0.0 {
                self.for_col(j, |i, a| v[i] -= a * xj);
            }
        }
        self.etas.ftran(&mut v);
        for r in 0..self.m {
            self.x[self.head[r]] = v[r];
        }
    }

    fn duals(&self) -> Vec<f64> {
        let mut y: Vec<f64> = self.head.iter().map(|&j| self.cost[j]).collect();
        self.etas.btran(&mut y);
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        let mut d = self.cost[j];
        self.for_col(j, |i, a| d -= a * y[i]);
        d
    }

    fn price(&self, y: &[f64], bland: bool) -> Option<(usize, f64)> {
        let total = self.n + 2 * self.m;
        let tol = self.opts.opt_tol;
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..total {
            let st = self.state[j];
            if matches!(st, State::Basic(_)) || self.lo[j] == self.hi[j] {
                continue;
            }
            let d = self.reduced_cost(j, y);
            let dir = match st {
                State::Lower if d > tol => 1.0,
                State::Upper if d < -tol => -1.0,
                State::Zero if d > tol => 1.0,
                State::Zero if d < -tol => -1.0,
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if d.abs() > best_score {
                best_score = d.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    fn run(&mut self, phase_one: bool) -> Result<Status, LpError> {
        let m = self.m;
        let mut stall = 0usize;
        let mut bland = false;
        let mut alpha = vec![0.0; m];
        loop {
            if phase_one && self.infeasibility() <= 1e-11 {
                return Ok(Status::Optimal);
            }
            if self.iterations >= self.max_iterations {
                return Err(LpError::NumericalFailure {
                    iterations: self.iterations,
                    reason: "iteration limit reached".into(),
                });
            }
            let y = self.duals();
            let Some((q, dir)) = self.price(&y, bland) else {
                return Ok(Status::Optimal);
            };
            self.iterations += 1;
            alpha.iter_mut().for_each(|e| *e = 0.0);
            self.for_col(q, |i, a| alpha[i] = a);
            self.etas.ftran(&mut alpha);

            let tol = self.opts.feas_tol;
            let piv_tol = 1e-9;
            // Harris pass one: largest step with bounds relaxed by `tol`.
            let mut theta_max = f64::INFINITY;
            for r in 0..m {
                let delta = dir * alpha[r];
                if delta.abs() <= piv_tol {
                    continue;
                }
                let b = self.head[r];
                let t = if delta > 0.0 {
                    (self.x[b] - self.lo[b] + tol) / delta
                } else {
                    (self.hi[b] - self.x[b] + tol) / -delta
                };
                if t < theta_max {
                    theta_max = t;
                }
            }
            // Pass two: among ratios within theta_max take the largest pivot.
            let mut leave: Option<usize> = None;
            let mut leave_t = f64::INFINITY;
            let mut best_piv = 0.0;
            if theta_max.is_finite() {
                for r in 0..m {
                    let delta = dir * alpha[r];
                    if delta.abs() <= piv_tol {
                        continue;
                    }
                    let b = self.head[r];
                    let t = if delta > 0.0 {
                        (self.x[b] - self.lo[b]) / delta
                    } else {
                        (self.hi[b] - self.x[b]) / -delta
                    };
                    if t > theta_max {
                        continue;
                    }
                    let better = match leave {
                        None => true,
                        Some(cur) if bland => b < self.head[cur],
                        Some(_) => delta.abs() > best_piv,
                    };
                    if better {
                        leave = Some(r);
                        leave_t = t;
                        best_piv = delta.abs();
                    }
                }
            }
            let range = self.hi[q] - self.lo[q];
            let step = leave_t.max(0.0);
            if leave.is_none() && !range.is_finite() {
                return Ok(Status::Unbounded);
            }
            let flip = range.is_finite() && (leave.is_none() || range <= step);
            let theta = if flip { range } else { step };

            if theta > 1e-12 {
                stall = 0;
                bland = false;
            } else {
                stall += 1;
                if stall > self.opts.stall_limit {
                    bland = true;
                }
            }

            if theta != 0.0 {
                for r in 0..m {
                    if alpha[r] != 0.0 {
                        let b = self.head[r];
                        self.x[b] -= dir * theta * alpha[r];
                    }
                }
            }
            if flip {
                let st = if dir > 0.0 { State::Upper } else { State::Lower };
                self.state[q] = st;
                self.x[q] = self.nonbasic_value(q, st);
                continue;
            }
            let r = leave.expect("leaving row");
            let p = self.head[r];
            let delta = dir * alpha[r];
            let st = if delta > 0.0 { State::Lower } else { State::Upper };
            self.state[p] = st;
            self.x[p] = self.nonbasic_value(p, st);
            self.x[q] = self.nonbasic_value(q, self.state[q]) + dir * theta;
            self.head[r] = q;
            self.state[q] = State::Basic(r);
            self.etas.push(r, &alpha);
            self.pivots_since_refactor += 1;
            if self.pivots_since_refactor >= self.opts.refactor_every {
                self.refactor()?;
            }
        }
    }

    fn finish(mut self, lp: &LinearProgram, sc: &Scaling, status: Status) -> Result<LpSolution, LpError> {
        let (n, m) = (self.n, self.m);
        if m > 0 {
            self.refactor()?;
        }
        let x: Vec<f64> = (0..n)
            .map(|j| match self.state[j] {
                State::Basic(_) => self.x[j] * sc.col[j],
                st => match st {
                    State::Lower => lp.lower()[j],
                    State::Upper => lp.upper()[j],
                    _ => 0.0,
                },
            })
            .collect();
        let (row_duals, reduced_costs) = if status == Status::Optimal {
            let ys = self.duals();
            let y: Vec<f64> = (0..m).map(|i| ys[i] * sc.row[i]).collect();
            let mut d = lp.cost().to_vec();
            for (i, row) in lp.rows().iter().enumerate() {
                for &(j, a) in &row.terms {
                    d[j] -= a * y[i];
                }
            }
            // Basic columns have zero reduced cost by construction.
            for j in 0..n {
                if matches!(self.state[j], State::Basic(_)) {
                    d[j] = 0.0;
                }
            }
            (y, d)
        } else {
            (vec![0.0; m], vec![0.0; n])
        };
        let states = (0..n + m)
            .map(|j| match self.state[j] {
                State::Basic(_) => ColState::Basic,
                State::Lower => ColState::AtLower,
                State::Upper => ColState::AtUpper,
                State::Zero => ColState::Zero,
            })
            .collect();
        // Artificials still basic at zero would make the snapshot short of
        // basic columns; such a basis is not reusable.
        let basis = Basis { states };
        let usable = basis.states.iter().filter(|s| **s == ColState::Basic).count() == m;
        Ok(LpSolution {
            status,
            objective: lp.objective_value(&x),
            x,
            row_duals,
            reduced_costs,
            iterations: self.iterations,
            basis: usable.then_some(basis),
        })
    }
}
