//! Two-phase bounded primal revised simplex.
//!
//! Every row `a_i'x (<=,=,>=) b_i` gets a logical variable `r_i` with
//! `a_i'x - r_i = 0`, and the row sense becomes a bound on `r_i`. The
//! starting basis is all logicals, except that a triangular crash swaps
//! structural columns in for the fixed logicals of equality rows. Phase one
//! minimizes the sum of bound infeasibilities of the basic variables; phase
//! two minimizes the true objective from the feasible basis phase one
//! leaves behind. Reduced costs are updated from the pivot row each
//! iteration and recomputed after every refactorization.
//!
//! The basis inverse is kept as a sparse LU factorization followed by a
//! product-form eta file, refactorized every `refactor_interval` updates.
//! Pricing uses devex reference weights; the ratio test is Harris' two-pass
//! test with bound flipping for boxed entering variables. A run of
//! degenerate pivots longer than `degeneracy_streak` switches to Bland's
//! rule until the next non-degenerate step.

use log::debug;

use crate::lu::LuFactors;
use crate::model::{LpModel, RowSense, Sense};
use crate::{Error, Solution, SolverOptions, Status};

const NIL: usize = usize::MAX;
const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;

struct EtaFile {
    position: Vec<usize>,
    pivot: Vec<f64>,
    start: Vec<usize>,
    index: Vec<usize>,
    value: Vec<f64>,
}

impl EtaFile {
    fn new() -> Self {
        EtaFile {
            position: Vec::new(),
            pivot: Vec::new(),
            start: vec![0],
            index: Vec::new(),
            value: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.position.len()
    }

    fn clear(&mut self) {
        self.position.clear();
        self.pivot.clear();
        self.start.truncate(1);
        self.index.clear();
        self.value.clear();
    }

    fn push(&mut self, r: usize, alpha: &[f64], nonzeros: &[usize]) {
        self.position.push(r);
        self.pivot.push(alpha[r]);
        for &p in nonzeros {
            if p != r && alpha[p] != 0.0 {
                self.index.push(p);
                self.value.push(alpha[p]);
            }
        }
        self.start.push(self.index.len());
    }

    fn apply_forward(&self, v: &mut [f64]) {
        for k in 0..self.len() {
            let r = self.position[k];
            let vr = v[r] / self.pivot[k];
            v[r] = vr;
            if vr != 0.0 {
                for p in self.start[k]..self.start[k + 1] {
                    v[self.index[p]] -= self.value[p] * vr;
                }
            }
        }
    }

    fn apply_backward(&self, c: &mut [f64]) {
        for k in (0..self.len()).rev() {
            let r = self.position[k];
            let mut s = c[r];
            for p in self.start[k]..self.start[k + 1] {
                s -= self.value[p] * c[self.index[p]];
            }
            c[r] = s / self.pivot[k];
        }
    }
}

enum Pricing {
    Devex,
    Bland,
}

struct Simplex<'a> {
    opts: &'a SolverOptions,
    m: usize,
    n: usize,
    col_start: Vec<usize>,
    col_index: Vec<usize>,
    col_value: Vec<f64>,
    row_start: Vec<usize>,
    row_index: Vec<usize>,
    row_value: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    position: Vec<usize>,
    lu: LuFactors,
    etas: EtaFile,
    weights: Vec<f64>,
    // reduced costs of nonbasic columns and the basic costs they assume
    d: Vec<f64>,
    cb: Vec<f64>,
    duals_stale: bool,
    // scratch
    y: Vec<f64>,
    row_acc: Vec<f64>,
    row_mark: Vec<bool>,
    row_nz: Vec<usize>,
    rho: Vec<f64>,
    alpha: Vec<f64>,
    alpha_nz: Vec<usize>,
    work_row: Vec<f64>,
    work_pos: Vec<f64>,
    iterations: usize,
    phase_one_iterations: usize,
}

struct Step {
    theta: f64,
    leaving: Option<(usize, f64)>,
}

impl<'a> Simplex<'a> {
    fn new(model: &LpModel, opts: &'a SolverOptions) -> Self {
        let m = model.num_rows();
        let n = model.num_vars();
        let sign = match model.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };

        let mut counts = vec![0usize; n];
        for c in &model.constraints {
            for &(j, _) in &c.coefficients {
                counts[j] += 1;
            }
        }
        let mut col_start = vec![0usize; n + 1];
        for j in 0..n {
            col_start[j + 1] = col_start[j] + counts[j];
        }
        let nnz = col_start[n];
        let mut col_index = vec![0usize; nnz];
        let mut col_value = vec![0.0; nnz];
        let mut fill = col_start.clone();
        for (i, c) in model.constraints.iter().enumerate() {
            for &(j, a) in &c.coefficients {
                col_index[fill[j]] = i;
                col_value[fill[j]] = a;
                fill[j] += 1;
            }
        }

        let mut row_start = vec![0usize; m + 1];
        for (i, c) in model.constraints.iter().enumerate() {
            row_start[i + 1] = row_start[i] + c.coefficients.len();
        }
        let mut row_index = Vec::with_capacity(nnz);
        let mut row_value = Vec::with_capacity(nnz);
        for c in &model.constraints {
            for &(j, a) in &c.coefficients {
                row_index.push(j);
                row_value.push(a);
            }
        }

        let total = n + m;
        let mut lower = Vec::with_capacity(total);
        let mut upper = Vec::with_capacity(total);
        let mut cost = Vec::with_capacity(total);
        for v in &model.variables {
            lower.push(v.lower);
            upper.push(v.upper);
            cost.push(sign * v.objective);
        }
        for c in &model.constraints {
            let (l, u) = match c.sense {
                RowSense::Le => (f64::NEG_INFINITY, c.rhs),
                RowSense::Ge => (c.rhs, f64::INFINITY),
                RowSense::Eq => (c.rhs, c.rhs),
            };
            lower.push(l);
            upper.push(u);
            cost.push(0.0);
        }

        let mut x = vec![0.0; total];
        for j in 0..n {
            x[j] = if lower[j].is_finite() {
                lower[j]
            } else if upper[j].is_finite() {
                upper[j]
            } else {
                0.0
            };
        }
        let basis: Vec<usize> = (n..total).collect();
        let mut position = vec![NIL; total];
        for (p, &j) in basis.iter().enumerate() {
            position[j] = p;
        }

        Simplex {
            opts,
            m,
            n,
            col_start,
            col_index,
            col_value,
            row_start,
            row_index,
            row_value,
            lower,
            upper,
            cost,
            x,
            basis,
            position,
            lu: LuFactors::default(),
            etas: EtaFile::new(),
            weights: vec![1.0; total],
            d: vec![0.0; total],
            cb: vec![0.0; m],
            duals_stale: true,
            y: vec![0.0; m],
            row_acc: vec![0.0; total],
            row_mark: vec![false; total],
            row_nz: Vec::with_capacity(total),
            rho: vec![0.0; m],
            alpha: vec![0.0; m],
            alpha_nz: Vec::with_capacity(m),
            work_row: vec![0.0; m],
            work_pos: vec![0.0; m],
            iterations: 0,
            phase_one_iterations: 0,
        }
    }

    fn column_dot(&self, j: usize, v: &[f64]) -> f64 {
        if j < self.n {
            let mut s = 0.0;
            for p in self.col_start[j]..self.col_start[j + 1] {
                s += self.col_value[p] * v[self.col_index[p]];
            }
            s
        } else {
            -v[j - self.n]
        }
    }

    fn column_entries(&self, j: usize) -> Vec<(usize, f64)> {
        if j < self.n {
            (self.col_start[j]..self.col_start[j + 1])
                .map(|p| (self.col_index[p], self.col_value[p]))
                .collect()
        } else {
            vec![(j - self.n, -1.0)]
        }
    }

    /// Triangular crash: replaces logicals of equality rows with structural
    /// columns so that the starting basis stays upper triangular. A column
    /// may pivot on a row only if no column chosen earlier touches that row.
    fn crash(&mut self) {
        let mut touched = vec![false; self.m];
        let mut order: Vec<usize> = (0..self.n)
            .filter(|&j| self.lower[j] != self.upper[j])
            .collect();
        let class = |j: usize| match (self.lower[j].is_finite(), self.upper[j].is_finite()) {
            (false, false) => 0,
            (true, false) | (false, true) => 1,
            (true, true) => 2,
        };
        order.sort_by_key(|&j| (class(j), self.col_start[j + 1] - self.col_start[j]));
        let mut replaced = 0usize;
        for j in order {
            let range = self.col_start[j]..self.col_start[j + 1];
            let col_max = range
                .clone()
                .map(|p| self.col_value[p].abs())
                .fold(0.0, f64::max);
            let mut pick: Option<(usize, f64)> = None;
            for p in range.clone() {
                let i = self.col_index[p];
                let logical = self.n + i;
                let a = self.col_value[p].abs();
                if touched[i] || self.lower[logical] != self.upper[logical] || a < 0.1 * col_max {
                    continue;
                }
                if pick.is_none_or(|(_, b)| a > b) {
                    pick = Some((i, a));
                }
            }
            let Some((i, _)) = pick else {
                continue;
            };
            for p in range {
                touched[self.col_index[p]] = true;
            }
            let logical = self.n + i;
            let pos = self.position[logical];
            self.position[logical] = NIL;
            self.x[logical] = self.lower[logical];
            self.basis[pos] = j;
            self.position[j] = pos;
            replaced += 1;
        }
        debug!("crash basis: {replaced} structural columns");
    }

    fn refactor(&mut self) {
        loop {
            let cols: Vec<Vec<(usize, f64)>> =
                self.basis.iter().map(|&j| self.column_entries(j)).collect();
            match LuFactors::factorize(self.m, &cols) {
                Ok(lu) => {
                    self.lu = lu;
                    break;
                }
                Err(singular) => {
                    debug!(
                        "singular basis: replacing {} columns with logicals",
                        singular.positions.len()
                    );
                    for (&p, &row) in singular.positions.iter().zip(&singular.rows) {
                        let leaving = self.basis[p];
                        let logical = self.n + row;
                        debug_assert_eq!(self.position[logical], NIL);
                        self.position[leaving] = NIL;
                        self.x[leaving] = self.nearest_bound(leaving);
                        self.basis[p] = logical;
                        self.position[logical] = p;
                    }
                }
            }
        }
        self.etas.clear();
        self.recompute_basic_values();
        self.duals_stale = true;
    }

    fn nearest_bound(&self, j: usize) -> f64 {
        let (l, u, v) = (self.lower[j], self.upper[j], self.x[j]);
        if l.is_finite() && u.is_finite() {
            if (v - l).abs() <= (u - v).abs() {
                l
            } else {
                u
            }
        } else if l.is_finite() {
            l
        } else if u.is_finite() {
            u
        } else {
            0.0
        }
    }

    fn recompute_basic_values(&mut self) {
        self.work_row.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.n + self.m {
            if self.position[j] != NIL {
                continue;
            }
            let xj = self.x[j];
            if xj == 0.0 {
                continue;
            }
            if j < self.n {
                for p in self.col_start[j]..self.col_start[j + 1] {
                    self.work_row[self.col_index[p]] -= self.col_value[p] * xj;
                }
            } else {
                self.work_row[j - self.n] += xj;
            }
        }
        self.lu.ftran(&mut self.work_row, &mut self.work_pos);
        self.etas.apply_forward(&mut self.work_pos);
        for p in 0..self.m {
            self.x[self.basis[p]] = self.work_pos[p];
        }
    }

    /// Sum of basic bound violations beyond the feasibility tolerance.
    fn infeasibility(&self) -> f64 {
        let tol = self.opts.feasibility_tol;
        self.basis
            .iter()
            .map(|&j| {
                let v = self.x[j];
                if v < self.lower[j] - tol {
                    self.lower[j] - v
                } else if v > self.upper[j] + tol {
                    v - self.upper[j]
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Cost of basic variable `j` in the current phase.
    fn basic_cost(&self, j: usize, phase_one: bool) -> f64 {
        if !phase_one {
            return self.cost[j];
        }
        let tol = self.opts.feasibility_tol;
        let v = self.x[j];
        if v < self.lower[j] - tol {
            -1.0
        } else if v > self.upper[j] + tol {
            1.0
        } else {
            0.0
        }
    }

    fn nonbasic_cost(&self, j: usize, phase_one: bool) -> f64 {
        if phase_one {
            0.0
        } else {
            self.cost[j]
        }
    }

    fn compute_duals(&mut self, phase_one: bool) {
        for p in 0..self.m {
            self.cb[p] = self.basic_cost(self.basis[p], phase_one);
        }
        self.work_pos.copy_from_slice(&self.cb);
        self.etas.apply_backward(&mut self.work_pos);
        self.lu.btran(&mut self.work_pos, &mut self.y);
    }

    /// Recomputes duals and all nonbasic reduced costs from scratch.
    fn reset_reduced_costs(&mut self, phase_one: bool) {
        self.compute_duals(phase_one);
        for j in 0..self.n + self.m {
            self.d[j] = if self.position[j] == NIL {
                self.nonbasic_cost(j, phase_one) - self.column_dot(j, &self.y)
            } else {
                0.0
            };
        }
        self.duals_stale = false;
    }

    fn reduced_cost(&self, j: usize, phase_one: bool) -> f64 {
        self.nonbasic_cost(j, phase_one) - self.column_dot(j, &self.y)
    }

    /// Accumulates `A'v` (including logical columns) into `row_acc`,
    /// listing touched columns in `row_nz`.
    fn row_product(&mut self, v: &[f64]) {
        for i in 0..self.m {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            for p in self.row_start[i]..self.row_start[i + 1] {
                let j = self.row_index[p];
                if !self.row_mark[j] {
                    self.row_mark[j] = true;
                    self.row_nz.push(j);
                }
                self.row_acc[j] += self.row_value[p] * vi;
            }
            let j = self.n + i;
            self.row_mark[j] = true;
            self.row_nz.push(j);
            self.row_acc[j] = -vi;
        }
    }

    fn clear_row(&mut self) {
        for &j in &self.row_nz {
            self.row_acc[j] = 0.0;
            self.row_mark[j] = false;
        }
        self.row_nz.clear();
    }

    /// Folds changes of phase-one basic costs into the reduced costs.
    fn refresh_phase_one_costs(&mut self) {
        let mut changed = false;
        for p in 0..self.m {
            let c = self.basic_cost(self.basis[p], true);
            let delta = c - self.cb[p];
            self.work_pos[p] = delta;
            if delta != 0.0 {
                self.cb[p] = c;
                changed = true;
            }
        }
        if !changed {
            return;
        }
        self.etas.apply_backward(&mut self.work_pos);
        let mut dy = std::mem::take(&mut self.rho);
        self.lu.btran(&mut self.work_pos, &mut dy);
        for (y, v) in self.y.iter_mut().zip(&dy) {
            *y += v;
        }
        self.row_product(&dy);
        self.rho = dy;
        for k in 0..self.row_nz.len() {
            let j = self.row_nz[k];
            if self.position[j] == NIL {
                self.d[j] -= self.row_acc[j];
            }
        }
        self.clear_row();
    }

    /// Picks the entering variable and its direction (+1 increase, -1 decrease).
    fn price(&self, pricing: &Pricing) -> Option<(usize, f64)> {
        let tol = self.opts.optimality_tol;
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.n + self.m {
            if self.position[j] != NIL {
                continue;
            }
            let (l, u, xj) = (self.lower[j], self.upper[j], self.x[j]);
            if l == u {
                continue;
            }
            let d = self.d[j];
            let dir = if d < -tol && xj < u {
                1.0
            } else if d > tol && xj > l {
                -1.0
            } else {
                continue;
            };
            match pricing {
                Pricing::Bland => return Some((j, dir)),
                Pricing::Devex => {
                    let score = d * d / self.weights[j];
                    if score > best_score {
                        best_score = score;
                        best = Some((j, dir));
                    }
                }
            }
        }
        best
    }

    fn compute_column(&mut self, q: usize) {
        self.work_row.iter_mut().for_each(|v| *v = 0.0);
        if q < self.n {
            for p in self.col_start[q]..self.col_start[q + 1] {
                self.work_row[self.col_index[p]] = self.col_value[p];
            }
        } else {
            self.work_row[q - self.n] = -1.0;
        }
        self.lu.ftran(&mut self.work_row, &mut self.alpha);
        self.etas.apply_forward(&mut self.alpha);
        self.alpha_nz.clear();
        for p in 0..self.m {
            if self.alpha[p].abs() > 1e-13 {
                self.alpha_nz.push(p);
            } else {
                self.alpha[p] = 0.0;
            }
        }
    }

    /// Bound a basic variable moves toward when it changes with `rate`, or
    /// `None` when the move is unrestricted.
    fn blocking_bound(&self, j: usize, rate: f64, phase_one: bool) -> Option<f64> {
        let tol = self.opts.feasibility_tol;
        let (l, u, v) = (self.lower[j], self.upper[j], self.x[j]);
        if phase_one {
            if v < l - tol {
                return if rate > 0.0 { Some(l) } else { None };
            }
            if v > u + tol {
                return if rate < 0.0 { Some(u) } else { None };
            }
        }
        if rate > 0.0 {
            u.is_finite().then_some(u)
        } else {
            l.is_finite().then_some(l)
        }
    }

    fn ratio_test(&self, q: usize, dir: f64, phase_one: bool, bland: bool) -> Step {
        let tol = self.opts.feasibility_tol;
        let flip = self.upper[q] - self.lower[q];

        if bland {
            let mut best: Option<(usize, f64, f64)> = None;
            for &p in &self.alpha_nz {
                let a = self.alpha[p];
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                let rate = -dir * a;
                let j = self.basis[p];
                let Some(bound) = self.blocking_bound(j, rate, phase_one) else {
                    continue;
                };
                let ratio = ((bound - self.x[j]) / rate).max(0.0);
                let better = match best {
                    None => true,
                    Some((bp, br, _)) => {
                        ratio < br - 1e-12 || (ratio <= br + 1e-12 && j < self.basis[bp])
                    }
                };
                if better {
                    best = Some((p, ratio, bound));
                }
            }
            return match best {
                Some((p, ratio, bound)) if ratio < flip => Step {
                    theta: ratio,
                    leaving: Some((p, bound)),
                },
                _ => Step {
                    theta: flip,
                    leaving: None,
                },
            };
        }

        let mut theta_max = f64::INFINITY;
        for &p in &self.alpha_nz {
            let a = self.alpha[p];
            if a.abs() < PIVOT_TOL {
                continue;
            }
            let rate = -dir * a;
            let j = self.basis[p];
            if let Some(bound) = self.blocking_bound(j, rate, phase_one) {
                let dist = ((bound - self.x[j]) / rate).max(0.0);
                let relaxed = dist + tol / rate.abs();
                if relaxed < theta_max {
                    theta_max = relaxed;
                }
            }
        }
        if flip <= theta_max {
            return Step {
                theta: flip,
                leaving: None,
            };
        }
        let mut chosen: Option<(usize, f64, f64)> = None;
        let mut best_abs = 0.0;
        for &p in &self.alpha_nz {
            let a = self.alpha[p];
            if a.abs() < PIVOT_TOL {
                continue;
            }
            let rate = -dir * a;
            let j = self.basis[p];
            if let Some(bound) = self.blocking_bound(j, rate, phase_one) {
                let dist = ((bound - self.x[j]) / rate).max(0.0);
                if dist <= theta_max && a.abs() > best_abs {
                    best_abs = a.abs();
                    chosen = Some((p, dist, bound));
                }
            }
        }
        match chosen {
            Some((p, dist, bound)) => Step {
                theta: dist,
                leaving: Some((p, bound)),
            },
            None => Step {
                theta: f64::INFINITY,
                leaving: None,
            },
        }
    }

    /// Basis change at position `r` with entering `q`: updates reduced
    /// costs and devex weights from the pivot row.
    fn pivot(&mut self, q: usize, r: usize, bound: f64, phase_one: bool, devex: bool) {
        // rho = row r of the basis inverse.
        self.work_pos.iter_mut().for_each(|v| *v = 0.0);
        self.work_pos[r] = 1.0;
        self.etas.apply_backward(&mut self.work_pos);
        let mut rho = std::mem::take(&mut self.rho);
        self.lu.btran(&mut self.work_pos, &mut rho);
        self.row_product(&rho);
        let alpha_q = self.alpha[r];
        let theta_d = self.d[q] / alpha_q;
        for (y, v) in self.y.iter_mut().zip(&rho) {
            *y += theta_d * v;
        }
        self.rho = rho;

        let wq = self.weights[q].max(1.0);
        for k in 0..self.row_nz.len() {
            let j = self.row_nz[k];
            if self.position[j] != NIL || j == q {
                continue;
            }
            let arj = self.row_acc[j];
            if arj == 0.0 {
                continue;
            }
            self.d[j] -= theta_d * arj;
            if devex && self.lower[j] != self.upper[j] {
                let ratio = arj / alpha_q;
                let w = ratio * ratio * wq;
                if w > self.weights[j] {
                    self.weights[j] = w;
                }
            }
        }
        self.clear_row();

        let leaving = self.basis[r];
        if devex {
            self.weights[leaving] = (wq / (alpha_q * alpha_q)).max(1.0);
        }
        self.d[leaving] = -theta_d + self.nonbasic_cost(leaving, phase_one) - self.cb[r];
        self.d[q] = 0.0;
        self.cb[r] = if phase_one { 0.0 } else { self.cost[q] };

        self.x[leaving] = bound;
        self.position[leaving] = NIL;
        self.basis[r] = q;
        self.position[q] = r;
        let nz = std::mem::take(&mut self.alpha_nz);
        self.etas.push(r, &self.alpha, &nz);
        self.alpha_nz = nz;
    }

    fn run(&mut self) -> Status {
        let limit = self
            .opts
            .iteration_limit
            .unwrap_or(200 * (self.m + self.n).max(1));
        self.crash();
        self.refactor();

        let mut degenerate_streak = 0usize;
        let mut verified = false;
        let mut pricing = Pricing::Devex;
        let mut phase_one = self.infeasibility() > 0.0;

        loop {
            if self.iterations >= limit {
                return Status::IterationLimit;
            }
            if self.etas.len() >= self.opts.refactor_interval {
                self.refactor();
            }

            let infeasible = self.infeasibility() > 0.0;
            if infeasible && !phase_one {
                debug!("lost feasibility at iteration {}", self.iterations);
                phase_one = true;
                self.duals_stale = true;
            } else if !infeasible && phase_one {
                phase_one = false;
                self.duals_stale = true;
                self.weights.iter_mut().for_each(|w| *w = 1.0);
                if self.opts.feasibility_only {
                    return Status::Optimal;
                }
            }

            if self.duals_stale {
                self.reset_reduced_costs(phase_one);
            } else if phase_one {
                self.refresh_phase_one_costs();
            }
            let bland = matches!(pricing, Pricing::Bland);
            let Some((q, dir)) = self.price(&pricing) else {
                if !verified && self.etas.len() > 0 {
                    self.refactor();
                    verified = true;
                    continue;
                }
                if phase_one {
                    return Status::Infeasible;
                }
                return Status::Optimal;
            };
            verified = false;

            self.compute_column(q);
            let step = self.ratio_test(q, dir, phase_one, bland);
            if step.theta.is_infinite() {
                if phase_one {
                    // The phase-one objective is bounded below; treat this as
                    // numerical trouble and start over from a fresh factorization.
                    self.refactor();
                    self.weights[q] = f64::INFINITY;
                    continue;
                }
                return Status::Unbounded;
            }

            self.iterations += 1;
            if phase_one {
                self.phase_one_iterations += 1;
            }

            let theta = step.theta;
            if theta < DEGENERATE_STEP {
                degenerate_streak += 1;
                if degenerate_streak > self.opts.degeneracy_streak {
                    pricing = Pricing::Bland;
                }
            } else {
                degenerate_streak = 0;
                pricing = Pricing::Devex;
            }

            if theta > 0.0 {
                self.x[q] += dir * theta;
                for &p in &self.alpha_nz {
                    let j = self.basis[p];
                    self.x[j] -= dir * theta * self.alpha[p];
                }
            }

            match step.leaving {
                None => {
                    self.x[q] = if dir > 0.0 {
                        self.upper[q]
                    } else {
                        self.lower[q]
                    };
                }
                Some((r, bound)) => {
                    let devex = matches!(pricing, Pricing::Devex);
                    self.pivot(q, r, bound, phase_one, devex);
                }
            }

            if self.iterations.is_multiple_of(5000) {
                debug!(
                    "iter {}: phase {} infeasibility {:.3e} lu nnz {}",
                    self.iterations,
                    if phase_one { 1 } else { 2 },
                    self.infeasibility(),
                    self.lu.nnz()
                );
            }
        }
    }
}

/// Solves `model` with the bundled simplex method.
pub fn solve(model: &LpModel, options: &SolverOptions) -> Result<Solution, Error> {
    model.validate()?;
    let mut s = Simplex::new(model, options);
    debug_assert_eq!(s.lu.dim(), 0);
    let status = s.run();

    let n = s.n;
    let values: Vec<f64> = s.x[..n].to_vec();
    let sign = match model.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let (duals, reduced_costs) = if status == Status::Optimal && !options.feasibility_only {
        s.compute_duals(false);
        let reduced = (0..n).map(|j| s.reduced_cost(j, false)).collect();
        (s.y.iter().map(|&v| sign * v).collect(), reduced)
    } else {
        (vec![0.0; s.m], vec![0.0; n])
    };
    let row_activities = model.row_activities(&values);
    let objective = model.objective_value(&values);
    debug!(
        "{}: {:?} after {} iterations ({} in phase one), objective {}",
        model.name, status, s.iterations, s.phase_one_iterations, objective
    );
    Ok(Solution {
        status,
        objective,
        values,
        row_activities,
        duals,
        reduced_costs,
        iterations: s.iterations,
        phase_one_iterations: s.phase_one_iterations,
    })
}
