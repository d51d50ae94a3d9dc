//! A small dense revised-simplex solver for restricted master problems.
//!
//! Minimizes c'x over x ≥ 0 subject to a mix of equality and ≥ rows. The
//! implementation is a textbook two-phase method with an explicit basis
//! inverse, periodic refactorization, Dantzig pricing and a Bland fallback
//! once degeneracy stalls progress. Columns may be added between solves and
//! the previous basis is reused; adding or editing rows drops it.
//!
//! Master problems here stay small (a few hundred rows, a few thousand
//! columns), where an explicit inverse is simple, deterministic and fast
//! enough. Numerical trouble is reported as an explicit status, never as a
//! silently wrong answer.

use thiserror::Error;

/// Primal feasibility tolerance on row residuals and basic values.
pub const FEAS_TOL: f64 = 1e-7;
/// Smallest pivot magnitude accepted during elimination and ratio tests.
pub const PIVOT_TOL: f64 = 1e-9;
/// Reduced costs within this of zero are treated as zero by callers.
pub const RCOST_TOL: f64 = 1e-6;

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 1000;
/// Pivots between refactorizations of the basis inverse.
const REFACTOR_EVERY: usize = 128;
/// Hard iteration cap per solve; exceeding it reports a numerical failure.
const MAX_ITERATIONS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The solver could not certify a result (singular basis, iteration cap,
    /// or a failed post-solve residual check).
    Numerical,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Value per column, in column order (all zeros unless Optimal).
    pub primal: Vec<f64>,
    /// Dual price per row, in row order (all zeros unless Optimal).
    pub duals: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("unknown row handle {0}")]
    UnknownRow(usize),
    #[error("unknown column handle {0}")]
    UnknownColumn(usize),
}

#[derive(Debug, Clone)]
struct ColumnData {
    cost: f64,
    /// Sorted by row index, one entry per row.
    coeffs: Vec<(usize, f64)>,
}

/// Variables are identified structurally so that saved bases survive column
/// additions without index remapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Var {
    Structural(usize),
    /// Surplus of a ≥ row.
    Surplus(usize),
    /// Phase-1 artificial of a row; barred from ever re-entering the basis.
    Artificial(usize),
}

pub struct LinearProgram {
    cols: Vec<ColumnData>,
    rows: Vec<(Sense, f64)>,
    saved_basis: Option<Vec<Var>>,
}

impl Default for LinearProgram {
    fn default() -> Self {
        Self::new()
    }
}

impl LinearProgram {
    pub fn new() -> Self {
        LinearProgram {
            cols: Vec::new(),
            rows: Vec::new(),
            saved_basis: None,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, r: RowId) -> (Sense, f64) {
        self.rows[r.0]
    }

    pub fn column_cost(&self, c: ColId) -> f64 {
        self.cols[c.0].cost
    }

    pub fn column_coeffs(&self, c: ColId) -> &[(usize, f64)] {
        &self.cols[c.0].coeffs
    }

    /// Appends a row. Any saved basis is dropped: the next solve restarts
    /// from phase 1.
    pub fn add_row(&mut self, sense: Sense, rhs: f64) -> RowId {
        self.rows.push((sense, rhs));
        self.saved_basis = None;
        RowId(self.rows.len() - 1)
    }

    /// Appends a column. The saved basis stays valid (the new column enters
    /// nonbasic), so the next solve warm-starts.
    pub fn add_column(&mut self, cost: f64, coeffs: &[(RowId, f64)]) -> Result<ColId, LpError> {
        let mut sorted: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        for &(RowId(r), v) in coeffs {
            if r >= self.rows.len() {
                return Err(LpError::UnknownRow(r));
            }
            match sorted.binary_search_by_key(&r, |e| e.0) {
                Ok(pos) => sorted[pos].1 += v,
                Err(pos) => sorted.insert(pos, (r, v)),
            }
        }
        self.cols.push(ColumnData { cost, coeffs: sorted });
        Ok(ColId(self.cols.len() - 1))
    }

    /// Overwrites one column's objective cost. The saved basis remains
    /// valid: costs never affect primal feasibility, so the next solve still
    /// warm-starts and merely re-optimizes.
    pub fn set_cost(&mut self, col: ColId, cost: f64) -> Result<(), LpError> {
        if col.0 >= self.cols.len() {
            return Err(LpError::UnknownColumn(col.0));
        }
        self.cols[col.0].cost = cost;
        Ok(())
    }

    /// Overwrites one matrix entry, typically to install a freshly attached
    /// row's coefficient on an existing column. Drops any saved basis.
    pub fn set_coeff(&mut self, col: ColId, row: RowId, value: f64) -> Result<(), LpError> {
        if col.0 >= self.cols.len() {
            return Err(LpError::UnknownColumn(col.0));
        }
        if row.0 >= self.rows.len() {
            return Err(LpError::UnknownRow(row.0));
        }
        let coeffs = &mut self.cols[col.0].coeffs;
        match coeffs.binary_search_by_key(&row.0, |e| e.0) {
            Ok(pos) => coeffs[pos].1 = value,
            Err(pos) => coeffs.insert(pos, (row.0, value)),
        }
        self.saved_basis = None;
        Ok(())
    }

    /// Plain-text fixed-layout dump for offline inspection.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("rows {} cols {}\n", self.rows.len(), self.cols.len()));
        for (r, (sense, rhs)) in self.rows.iter().enumerate() {
            let sym = match sense {
                Sense::Eq => "=",
                Sense::Ge => ">=",
            };
            s.push_str(&format!("r{r}: {sym} {rhs:.9}\n"));
        }
        for (c, col) in self.cols.iter().enumerate() {
            s.push_str(&format!("c{c}: cost {:.9} |", col.cost));
            for &(r, v) in &col.coeffs {
                s.push_str(&format!(" r{r}:{v:.9}"));
            }
            s.push('\n');
        }
        s
    }

    pub fn solve(&mut self) -> LpSolution {
        let finite = self
            .rows
            .iter()
            .all(|&(_, rhs)| rhs.is_finite())
            && self
                .cols
                .iter()
                .all(|c| c.cost.is_finite() && c.coeffs.iter().all(|&(_, v)| v.is_finite()));
        if !finite {
            return self.failed(LpStatus::Numerical);
        }
        let mut solver = Solver::new(self);
        let (status, basis) = solver.run();
        let extracted = if status == LpStatus::Optimal {
            Some((solver.extract_primal(), solver.extract_duals()))
        } else {
            None
        };
        drop(solver);
        match extracted {
            Some((primal, duals)) => {
                self.saved_basis = Some(basis);
                let objective = primal
                    .iter()
                    .zip(&self.cols)
                    .map(|(x, c)| x * c.cost)
                    .sum();
                LpSolution {
                    status,
                    primal,
                    duals,
                    objective,
                }
            }
            None => {
                self.saved_basis = None;
                self.failed(status)
            }
        }
    }

    fn failed(&self, status: LpStatus) -> LpSolution {
        LpSolution {
            status,
            primal: vec![0.0; self.cols.len()],
            duals: vec![0.0; self.rows.len()],
            objective: match status {
                LpStatus::Infeasible => f64::INFINITY,
                LpStatus::Unbounded => f64::NEG_INFINITY,
                _ => f64::NAN,
            },
        }
    }
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    Failed,
}

struct Solver<'a> {
    lp: &'a LinearProgram,
    m: usize,
    /// Row sign normalization making every internal rhs nonnegative.
    flip: Vec<f64>,
    /// Normalized rhs.
    b: Vec<f64>,
    binv: Vec<f64>,
    basis: Vec<Var>,
    xb: Vec<f64>,
    basic_struct: Vec<bool>,
    basic_surplus: Vec<bool>,
    pivots: usize,
    degenerate_run: usize,
    bland: bool,
    scratch_a: Vec<f64>,
    scratch_w: Vec<f64>,
}

impl<'a> Solver<'a> {
    fn new(lp: &'a LinearProgram) -> Self {
        let m = lp.rows.len();
        let flip: Vec<f64> = lp
            .rows
            .iter()
            .map(|&(_, rhs)| if rhs < 0.0 { -1.0 } else { 1.0 })
            .collect();
        let b: Vec<f64> = lp
            .rows
            .iter()
            .zip(&flip)
            .map(|(&(_, rhs), f)| rhs * f)
            .collect();
        Solver {
            lp,
            m,
            flip,
            b,
            binv: vec![0.0; m * m],
            basis: Vec::new(),
            xb: vec![0.0; m],
            basic_struct: vec![false; lp.cols.len()],
            basic_surplus: vec![false; m],
            pivots: 0,
            degenerate_run: 0,
            bland: false,
            scratch_a: vec![0.0; m],
            scratch_w: vec![0.0; m],
        }
    }

    fn run(&mut self) -> (LpStatus, Vec<Var>) {
        let warm = self.try_warm_start();
        if !warm {
            self.cold_start();
            match self.run_phase(true) {
                PhaseEnd::Optimal => {}
                // Phase 1 is bounded below by zero; anything else is numerics.
                PhaseEnd::Unbounded | PhaseEnd::Failed => {
                    return (LpStatus::Numerical, Vec::new())
                }
            }
            let infeas: f64 = self
                .basis
                .iter()
                .zip(&self.xb)
                .filter(|(v, _)| matches!(v, Var::Artificial(_)))
                .map(|(_, &x)| x)
                .sum();
            if infeas > FEAS_TOL {
                return (LpStatus::Infeasible, Vec::new());
            }
            self.drive_out_artificials();
        }
        match self.run_phase(false) {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded => return (LpStatus::Unbounded, Vec::new()),
            PhaseEnd::Failed => return (LpStatus::Numerical, Vec::new()),
        }
        if !self.verify() {
            return (LpStatus::Numerical, Vec::new());
        }
        (LpStatus::Optimal, self.basis.clone())
    }

    fn cold_start(&mut self) {
        self.basis = (0..self.m).map(Var::Artificial).collect();
        self.binv.fill(0.0);
        for k in 0..self.m {
            self.binv[k * self.m + k] = 1.0;
        }
        self.xb.copy_from_slice(&self.b);
        self.basic_struct.fill(false);
        self.basic_surplus.fill(false);
    }

    fn try_warm_start(&mut self) -> bool {
        let saved = match &self.lp.saved_basis {
            Some(b) if b.len() == self.m => b.clone(),
            _ => return false,
        };
        for v in &saved {
            let ok = match *v {
                Var::Structural(j) => j < self.lp.cols.len(),
                Var::Surplus(r) => r < self.m && self.lp.rows[r].0 == Sense::Ge,
                Var::Artificial(r) => r < self.m,
            };
            if !ok {
                return false;
            }
        }
        self.basis = saved;
        if !self.refactor() {
            return false;
        }
        if self.xb.iter().any(|&x| x < -FEAS_TOL) {
            return false;
        }
        for v in &self.basis {
            match *v {
                Var::Structural(j) => self.basic_struct[j] = true,
                Var::Surplus(r) => self.basic_surplus[r] = true,
                Var::Artificial(_) => {}
            }
        }
        true
    }

    fn cost_of(&self, v: Var, phase1: bool) -> f64 {
        match v {
            Var::Structural(j) => {
                if phase1 {
                    0.0
                } else {
                    self.lp.cols[j].cost
                }
            }
            Var::Surplus(_) => 0.0,
            Var::Artificial(_) => {
                if phase1 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Materializes the internal (sign-normalized) constraint column of a
    /// variable into `out`.
    fn column_of(&self, v: Var, out: &mut [f64]) {
        out.fill(0.0);
        match v {
            Var::Structural(j) => {
                for &(r, c) in &self.lp.cols[j].coeffs {
                    out[r] = self.flip[r] * c;
                }
            }
            Var::Surplus(r) => out[r] = -self.flip[r],
            Var::Artificial(r) => out[r] = 1.0,
        }
    }

    fn dual_vector(&self, phase1: bool) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (k, &v) in self.basis.iter().enumerate() {
            let c = self.cost_of(v, phase1);
            if c != 0.0 {
                let row = &self.binv[k * m..(k + 1) * m];
                for r in 0..m {
                    y[r] += c * row[r];
                }
            }
        }
        y
    }

    fn reduced_cost(&self, v: Var, y: &[f64], phase1: bool) -> f64 {
        let mut d = self.cost_of(v, phase1);
        match v {
            Var::Structural(j) => {
                for &(r, c) in &self.lp.cols[j].coeffs {
                    d -= y[r] * self.flip[r] * c;
                }
            }
            Var::Surplus(r) => d += y[r] * self.flip[r],
            Var::Artificial(r) => d -= y[r],
        }
        d
    }

    /// One simplex phase from the current (primal feasible) basis.
    fn run_phase(&mut self, phase1: bool) -> PhaseEnd {
        let m = self.m;
        for _ in 0..MAX_ITERATIONS {
            let y = self.dual_vector(phase1);
            // Entering-variable search over structural then surplus
            // variables, in fixed index order for determinism.
            let mut entering: Option<(f64, Var)> = None;
            'scan: {
                for j in 0..self.lp.cols.len() {
                    if self.basic_struct[j] {
                        continue;
                    }
                    let d = self.reduced_cost(Var::Structural(j), &y, phase1);
                    if d < -PIVOT_TOL {
                        if self.bland {
                            entering = Some((d, Var::Structural(j)));
                            break 'scan;
                        }
                        if entering.map_or(true, |(best, _)| d < best) {
                            entering = Some((d, Var::Structural(j)));
                        }
                    }
                }
                for r in 0..m {
                    if self.lp.rows[r].0 != Sense::Ge || self.basic_surplus[r] {
                        continue;
                    }
                    let d = self.reduced_cost(Var::Surplus(r), &y, phase1);
                    if d < -PIVOT_TOL {
                        if self.bland {
                            entering = Some((d, Var::Surplus(r)));
                            break 'scan;
                        }
                        if entering.map_or(true, |(best, _)| d < best) {
                            entering = Some((d, Var::Surplus(r)));
                        }
                    }
                }
            }
            let (_, enter) = match entering {
                Some(e) => e,
                None => return PhaseEnd::Optimal,
            };

            let mut a = std::mem::take(&mut self.scratch_a);
            let mut w = std::mem::take(&mut self.scratch_w);
            self.column_of(enter, &mut a);
            for k in 0..m {
                let row = &self.binv[k * m..(k + 1) * m];
                w[k] = row.iter().zip(&a).map(|(bi, ai)| bi * ai).sum();
            }

            // Ratio test: smallest θ; ties prefer the largest pivot element,
            // or the lowest variable ordinal once Bland's rule is active.
            let ordinal = |v: Var| match v {
                Var::Structural(j) => j,
                Var::Surplus(r) => self.lp.cols.len() + r,
                Var::Artificial(r) => self.lp.cols.len() + m + r,
            };
            let mut leave: Option<(f64, usize)> = None;
            for k in 0..m {
                if w[k] > PIVOT_TOL {
                    let ratio = self.xb[k].max(0.0) / w[k];
                    match leave {
                        None => leave = Some((ratio, k)),
                        Some((best, kb)) => {
                            if ratio < best - 1e-12 {
                                leave = Some((ratio, k));
                            } else if ratio < best + 1e-12 {
                                let better = if self.bland {
                                    ordinal(self.basis[k]) < ordinal(self.basis[kb])
                                } else {
                                    w[k] > w[kb]
                                };
                                if better {
                                    leave = Some((ratio, k));
                                }
                            }
                        }
                    }
                }
            }
            let (theta, kl) = match leave {
                None => {
                    self.scratch_a = a;
                    self.scratch_w = w;
                    return if phase1 {
                        PhaseEnd::Failed
                    } else {
                        PhaseEnd::Unbounded
                    };
                }
                Some(l) => l,
            };

            // Pivot: update the inverse and the basic values in place.
            let piv = w[kl];
            let (before, rest) = self.binv.split_at_mut(kl * m);
            let (prow, after) = rest.split_at_mut(m);
            for v in prow.iter_mut() {
                *v /= piv;
            }
            for (k, chunk) in before.chunks_exact_mut(m).enumerate() {
                let f = w[k];
                if f != 0.0 {
                    for (c, p) in chunk.iter_mut().zip(prow.iter()) {
                        *c -= f * p;
                    }
                }
            }
            for (k, chunk) in after.chunks_exact_mut(m).enumerate() {
                let f = w[kl + 1 + k];
                if f != 0.0 {
                    for (c, p) in chunk.iter_mut().zip(prow.iter()) {
                        *c -= f * p;
                    }
                }
            }
            for k in 0..m {
                if k != kl {
                    self.xb[k] -= theta * w[k];
                }
            }
            self.xb[kl] = theta;
            match self.basis[kl] {
                Var::Structural(j) => self.basic_struct[j] = false,
                Var::Surplus(r) => self.basic_surplus[r] = false,
                Var::Artificial(_) => {}
            }
            match enter {
                Var::Structural(j) => self.basic_struct[j] = true,
                Var::Surplus(r) => self.basic_surplus[r] = true,
                Var::Artificial(_) => unreachable!("artificials never re-enter"),
            }
            self.basis[kl] = enter;

            self.scratch_a = a;
            self.scratch_w = w;

            if theta <= 1e-12 {
                self.degenerate_run += 1;
                if self.degenerate_run >= DEGENERATE_LIMIT {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
                self.bland = false;
            }

            self.pivots += 1;
            if self.pivots % REFACTOR_EVERY == 0 && !self.refactor() {
                return PhaseEnd::Failed;
            }
        }
        PhaseEnd::Failed
    }

    /// After phase 1, swap zero-valued artificials out of the basis wherever
    /// a non-artificial column can take their place. Rows where no such
    /// column exists are linearly dependent; their artificials stay basic at
    /// zero and the final verification guards against drift.
    fn drive_out_artificials(&mut self) {
        let m = self.m;
        for kl in 0..m {
            if !matches!(self.basis[kl], Var::Artificial(_)) {
                continue;
            }
            let mut a = std::mem::take(&mut self.scratch_a);
            let candidates = (0..self.lp.cols.len())
                .map(Var::Structural)
                .chain((0..m).filter(|&r| self.lp.rows[r].0 == Sense::Ge).map(Var::Surplus));
            for v in candidates {
                let taken = match v {
                    Var::Structural(j) => self.basic_struct[j],
                    Var::Surplus(r) => self.basic_surplus[r],
                    Var::Artificial(_) => true,
                };
                if taken {
                    continue;
                }
                self.column_of(v, &mut a);
                let row = &self.binv[kl * m..(kl + 1) * m];
                let wk: f64 = row.iter().zip(&a).map(|(bi, ai)| bi * ai).sum();
                if wk.abs() > FEAS_TOL {
                    // Degenerate pivot (the leaving artificial is at zero).
                    let mut w = std::mem::take(&mut self.scratch_w);
                    for k in 0..m {
                        let r = &self.binv[k * m..(k + 1) * m];
                        w[k] = r.iter().zip(&a).map(|(bi, ai)| bi * ai).sum();
                    }
                    // θ = 0, so only the inverse changes; basic values keep
                    // their magnitudes and slot kl pins to exactly zero.
                    let piv = w[kl];
                    for idx in 0..m {
                        if idx == kl {
                            continue;
                        }
                        let f = w[idx] / piv;
                        for r in 0..m {
                            self.binv[idx * m + r] -= f * self.binv[kl * m + r];
                        }
                    }
                    for r in 0..m {
                        self.binv[kl * m + r] /= piv;
                    }
                    self.xb[kl] = 0.0;
                    match v {
                        Var::Structural(j) => self.basic_struct[j] = true,
                        Var::Surplus(r) => self.basic_surplus[r] = true,
                        Var::Artificial(_) => {}
                    }
                    self.basis[kl] = v;
                    self.scratch_w = w;
                    break;
                }
            }
            self.scratch_a = a;
        }
    }

    /// Rebuilds the basis inverse from scratch (Gauss-Jordan with partial
    /// pivoting) and recomputes the basic values. Returns false when the
    /// basis matrix is numerically singular.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        if m == 0 {
            return true;
        }
        // aug = [B | I], column-major over basis entries.
        let mut bmat = vec![0.0; m * m];
        let mut col = vec![0.0; m];
        for (k, &v) in self.basis.iter().enumerate() {
            self.column_of(v, &mut col);
            for r in 0..m {
                bmat[r * m + k] = col[r];
            }
        }
        let mut inv = vec![0.0; m * m];
        for k in 0..m {
            inv[k * m + k] = 1.0;
        }
        for c in 0..m {
            let mut p = c;
            for r in c + 1..m {
                if bmat[r * m + c].abs() > bmat[p * m + c].abs() {
                    p = r;
                }
            }
            if bmat[p * m + c].abs() < PIVOT_TOL {
                return false;
            }
            if p != c {
                for j in 0..m {
                    bmat.swap(c * m + j, p * m + j);
                    inv.swap(c * m + j, p * m + j);
                }
            }
            let piv = bmat[c * m + c];
            for j in 0..m {
                bmat[c * m + j] /= piv;
                inv[c * m + j] /= piv;
            }
            for r in 0..m {
                if r != c {
                    let f = bmat[r * m + c];
                    if f != 0.0 {
                        for j in 0..m {
                            bmat[r * m + j] -= f * bmat[c * m + j];
                            inv[r * m + j] -= f * inv[c * m + j];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        for k in 0..m {
            let row = &self.binv[k * m..(k + 1) * m];
            self.xb[k] = row.iter().zip(&self.b).map(|(bi, bb)| bi * bb).sum();
        }
        true
    }

    /// Final guard: refreshed inverse, feasible basics, artificials at zero
    /// and small row residuals.
    fn verify(&mut self) -> bool {
        if !self.refactor() {
            return false;
        }
        for (v, &x) in self.basis.iter().zip(&self.xb) {
            if x < -FEAS_TOL {
                return false;
            }
            if matches!(v, Var::Artificial(_)) && x > FEAS_TOL {
                return false;
            }
        }
        let m = self.m;
        let mut ax = vec![0.0; m];
        let mut col = vec![0.0; m];
        for (k, &v) in self.basis.iter().enumerate() {
            self.column_of(v, &mut col);
            for r in 0..m {
                ax[r] += col[r] * self.xb[k];
            }
        }
        for r in 0..m {
            if (ax[r] - self.b[r]).abs() > FEAS_TOL * (1.0 + self.b[r].abs()) {
                return false;
            }
        }
        true
    }

    fn extract_primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.lp.cols.len()];
        for (k, &v) in self.basis.iter().enumerate() {
            if let Var::Structural(j) = v {
                x[j] = self.xb[k].max(0.0);
            }
        }
        x
    }

    fn extract_duals(&self) -> Vec<f64> {
        let y = self.dual_vector(false);
        y.iter().zip(&self.flip).map(|(yi, f)| yi * f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_program_is_optimal_zero() {
        let mut lp = LinearProgram::new();
        let sol = lp.solve();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn one_variable_bound() {
        // min x s.t. x ≥ 2 → objective 2, dual 1.
        let mut lp = LinearProgram::new();
        let r = lp.add_row(Sense::Ge, 2.0);
        let c = lp.add_column(1.0, &[(r, 1.0)]).unwrap();
        let sol = lp.solve();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 2.0).abs() < 1e-9);
        assert!((sol.primal[c.0] - 2.0).abs() < 1e-9);
        assert!((sol.duals[r.0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        // x = 1 and x = 2 with a single shared variable.
        let mut lp = LinearProgram::new();
        let r1 = lp.add_row(Sense::Eq, 1.0);
        let r2 = lp.add_row(Sense::Eq, 2.0);
        lp.add_column(0.0, &[(r1, 1.0), (r2, 1.0)]).unwrap();
        let sol = lp.solve();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        // min -x s.t. x ≥ 1.
        let mut lp = LinearProgram::new();
        let r = lp.add_row(Sense::Ge, 1.0);
        lp.add_column(-1.0, &[(r, 1.0)]).unwrap();
        let sol = lp.solve();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn cut_coefficient_above_one_is_legal() {
        // One partition row and a ≥ row whose column coefficient is 3.
        let mut lp = LinearProgram::new();
        let part = lp.add_row(Sense::Eq, 1.0);
        let cut = lp.add_row(Sense::Ge, 2.0);
        lp.add_column(5.0, &[(part, 1.0), (cut, 3.0)]).unwrap();
        let sol = lp.solve();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 5.0).abs() < 1e-9);
    }

    #[test]
    fn zero_cost_empty_column_stays_out() {
        let mut lp = LinearProgram::new();
        let r = lp.add_row(Sense::Ge, 1.0);
        let useful = lp.add_column(1.0, &[(r, 1.0)]).unwrap();
        let idle = lp.add_column(0.0, &[]).unwrap();
        let sol = lp.solve();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.primal[useful.0] > 0.5);
        assert_eq!(sol.primal[idle.0], 0.0);
    }

    #[test]
    fn warm_start_after_column_add() {
        let mut lp = LinearProgram::new();
        let r1 = lp.add_row(Sense::Eq, 1.0);
        let r2 = lp.add_row(Sense::Eq, 1.0);
        lp.add_column(3.0, &[(r1, 1.0)]).unwrap();
        lp.add_column(4.0, &[(r2, 1.0)]).unwrap();
        let first = lp.solve();
        assert!((first.objective - 7.0).abs() < 1e-9);
        // A cheaper column covering both rows should displace them.
        lp.add_column(5.0, &[(r1, 1.0), (r2, 1.0)]).unwrap();
        let second = lp.solve();
        assert_eq!(second.status, LpStatus::Optimal);
        assert!((second.objective - 5.0).abs() < 1e-9);
    }

    #[test]
    fn duals_satisfy_sign_convention_and_strong_duality() {
        // min 2x + 3y s.t. x + y ≥ 4, x - y = 1.
        let mut lp = LinearProgram::new();
        let ge = lp.add_row(Sense::Ge, 4.0);
        let eq = lp.add_row(Sense::Eq, 1.0);
        lp.add_column(2.0, &[(ge, 1.0), (eq, 1.0)]).unwrap();
        lp.add_column(3.0, &[(ge, 1.0), (eq, -1.0)]).unwrap();
        let sol = lp.solve();
        assert_eq!(sol.status, LpStatus::Optimal);
        // x = 2.5, y = 1.5 → obj 9.5.
        assert!((sol.objective - 9.5).abs() < 1e-9);
        assert!(sol.duals[ge.0] >= -1e-9);
        let dual_obj = 4.0 * sol.duals[ge.0] + 1.0 * sol.duals[eq.0];
        assert!((dual_obj - sol.objective).abs() < RCOST_TOL);
    }

    #[test]
    fn unknown_row_handle_rejected() {
        let mut lp = LinearProgram::new();
        let r = lp.add_row(Sense::Eq, 1.0);
        let mut other = LinearProgram::new();
        assert!(other.add_column(1.0, &[(r, 1.0)]).is_err());
        assert!(lp.add_column(1.0, &[(RowId(5), 1.0)]).is_err());
    }

    #[test]
    fn cost_change_reoptimizes_from_saved_basis() {
        let mut lp = LinearProgram::new();
        let r = lp.add_row(Sense::Eq, 1.0);
        let a = lp.add_column(1.0, &[(r, 1.0)]).unwrap();
        let b = lp.add_column(2.0, &[(r, 1.0)]).unwrap();
        let first = lp.solve();
        assert!((first.objective - 1.0).abs() < 1e-9);
        lp.set_cost(a, 5.0).unwrap();
        let second = lp.solve();
        assert_eq!(second.status, LpStatus::Optimal);
        assert!((second.objective - 2.0).abs() < 1e-9);
        assert!(second.primal[b.0] > 0.5);
        assert!(second.primal[a.0] < 1e-9);
    }

    #[test]
    fn negative_rhs_rows_normalize() {
        // min x s.t. -x ≤ -2 written as equality with negative rhs:
        // -x = -2 → x = 2.
        let mut lp = LinearProgram::new();
        let r = lp.add_row(Sense::Eq, -2.0);
        lp.add_column(1.0, &[(r, -1.0)]).unwrap();
        let sol = lp.solve();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 2.0).abs() < 1e-9);
        // Dual of the original row: obj increases by -1 per unit of rhs.
        assert!((sol.duals[r.0] + 1.0).abs() < 1e-9);
    }
}
