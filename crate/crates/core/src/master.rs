//! The restricted master problem: set-partitioning rows over a shared route
//! pool, cut rows, and the column-generation loop.
//!
//! Each search node builds its own master from the global pool, keeping only
//! routes whose arcs survive the node's branching decisions. One artificial
//! column per customer keeps every node's LP feasible; an artificial that
//! stays positive after exact pricing converges is the node-infeasibility
//! signal. The artificial cost is far above any real route cost yet small
//! enough that accumulated float error in dual-based reduced costs stays
//! well under the 1e-9 consistency tolerance enforced by pricing.

use std::collections::BTreeSet;
use std::time::Instant;

use crate::cuts::{route_coefficient, Cut, FractionalSolution};
use crate::instance::ProblemGraph;
use crate::lp::{ColId, LinearProgram, LpStatus, RowId, Sense};
use crate::pricing::{
    solve_pricing, DualValues, NgNeighborhoods, PricingConfig, GAMMA_TOL,
};

/// Cost of the per-customer artificial columns.
pub const ARTIFICIAL_COST: f64 = 50_000.0;
/// Primal values at or below this count as zero.
pub const PRIMAL_TOL: f64 = 1e-6;
/// Column-generation iteration cap before reporting a numerical failure.
const MAX_CG_ITERATIONS: usize = 10_000;

/// One pooled route column.
#[derive(Debug, Clone)]
pub struct Column {
    /// Full 0→n+1 vertex sequence.
    pub route: Vec<usize>,
    /// Exact integer arc-cost sum.
    pub cost: i64,
}

impl Column {
    pub fn from_route(route: Vec<usize>, graph: &ProblemGraph) -> Column {
        debug_assert!(route.first() == Some(&0) && route.last() == Some(&graph.end_depot()));
        let cost = graph.route_cost(&route);
        Column { route, cost }
    }

    /// Number of times the column serves customer `v`.
    pub fn visits(&self, v: usize) -> u32 {
        self.route[1..self.route.len() - 1]
            .iter()
            .filter(|&&x| x == v)
            .count() as u32
    }

    /// Total demand served, for capacity checks.
    pub fn load(&self, graph: &ProblemGraph) -> u32 {
        self.route[1..self.route.len() - 1]
            .iter()
            .map(|&v| graph.demand(v))
            .sum()
    }
}

/// The single-customer routes (0, i, n+1), always feasible because every
/// demand fits the vehicle.
pub fn seed_pool(graph: &ProblemGraph) -> Vec<Column> {
    (1..=graph.n)
        .map(|i| Column::from_route(vec![0, i, graph.end_depot()], graph))
        .collect()
}

/// One node's restricted master problem.
pub struct MasterState {
    pub lp: LinearProgram,
    pub n: usize,
    /// Partition row per customer, index i−1.
    partition_rows: Vec<RowId>,
    /// Artificial column per customer, index i−1.
    artificial_cols: Vec<ColId>,
    /// Pool index per structural route column, in LP column order.
    pub active: Vec<usize>,
    lp_col_of_active: Vec<ColId>,
    /// Attached cuts, aligned with `cut_rows`.
    pub cuts: Vec<Cut>,
    cut_rows: Vec<RowId>,
    /// Most recent LP solution.
    pub last: Option<crate::lp::LpSolution>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttachOutcome {
    Attached,
    /// A cut over the same customer set is already present (any kind).
    Duplicate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgStatus {
    /// Exact pricing found nothing negative: the bound is proven for this
    /// node's relaxation.
    Converged,
    /// Converged, but an artificial column stayed positive: no feasible
    /// assignment of routes exists under the node's decisions.
    NodeInfeasible,
    /// The deadline fired mid-loop; the bound is not proven.
    TimedOut,
    /// LP failure or iteration runaway; results unusable.
    Numerical,
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub status: CgStatus,
    /// Final restricted-master objective (a valid node lower bound only
    /// when status is Converged).
    pub bound: f64,
    /// Columns appended to the pool during this loop.
    pub added: usize,
}

#[derive(Debug, Clone)]
pub struct CgConfig {
    /// Cap per pricing call.
    pub max_columns: usize,
    pub deadline: Option<Instant>,
    /// Run the relaxed pricing pass before the exact one.
    pub use_heuristic: bool,
    /// Run exact pricing when the heuristic pass comes up empty. Disabled
    /// for strong-branching score loops, which only need a cheap estimate.
    pub use_exact: bool,
    pub max_iterations: usize,
}

impl CgConfig {
    pub fn standard(deadline: Option<Instant>) -> CgConfig {
        CgConfig {
            max_columns: 200,
            deadline,
            use_heuristic: true,
            use_exact: true,
            max_iterations: MAX_CG_ITERATIONS,
        }
    }

    /// Heuristic-pricing-only loop for branching-score estimation.
    pub fn heuristic_only(deadline: Option<Instant>) -> CgConfig {
        CgConfig {
            max_columns: 200,
            deadline,
            use_heuristic: true,
            use_exact: false,
            max_iterations: 50,
        }
    }
}

/// Builds a node's master over every pool column whose arcs are still
/// allowed in the node's graph. Rows come first so column coefficients
/// (including cut coefficients) install in one pass.
pub fn build_node_master(
    graph: &ProblemGraph,
    pool: &[Column],
    cuts: &[Cut],
    ngs: &NgNeighborhoods,
) -> MasterState {
    let n = graph.n;
    let mut lp = LinearProgram::new();
    let partition_rows: Vec<RowId> = (1..=n).map(|_| lp.add_row(Sense::Eq, 1.0)).collect();
    let cut_rows: Vec<RowId> = cuts
        .iter()
        .map(|c| lp.add_row(Sense::Ge, f64::from(c.rhs)))
        .collect();
    let artificial_cols: Vec<ColId> = (1..=n)
        .map(|i| {
            lp.add_column(ARTIFICIAL_COST, &[(partition_rows[i - 1], 1.0)])
                .expect("fresh row handles")
        })
        .collect();
    let mut ms = MasterState {
        lp,
        n,
        partition_rows,
        artificial_cols,
        active: Vec::new(),
        lp_col_of_active: Vec::new(),
        cuts: cuts.to_vec(),
        cut_rows,
        last: None,
    };
    for (idx, col) in pool.iter().enumerate() {
        if graph.route_allowed(&col.route) {
            ms.install_column(idx, col, ngs);
        }
    }
    ms
}

/// Root master: singleton routes only, no cuts.
pub fn init_master(graph: &ProblemGraph, ngs: &NgNeighborhoods) -> (MasterState, Vec<Column>) {
    let pool = seed_pool(graph);
    let ms = build_node_master(graph, &pool, &[], ngs);
    (ms, pool)
}

impl MasterState {
    /// Adds one pool column to the LP with partition and cut coefficients.
    fn install_column(&mut self, pool_idx: usize, col: &Column, ngs: &NgNeighborhoods) {
        let mut coeffs: Vec<(RowId, f64)> = Vec::new();
        for i in 1..=self.n {
            let a = col.visits(i);
            if a > 0 {
                coeffs.push((self.partition_rows[i - 1], f64::from(a)));
            }
        }
        for (cut, &row) in self.cuts.iter().zip(&self.cut_rows) {
            let g = route_coefficient(cut, &col.route, ngs);
            if g > 0 {
                coeffs.push((row, f64::from(g)));
            }
        }
        let id = self
            .lp
            .add_column(col.cost as f64, &coeffs)
            .expect("row handles are valid");
        self.active.push(pool_idx);
        self.lp_col_of_active.push(id);
    }

    /// Attaches a cut row and installs its coefficient on every active
    /// column. Rejects any cut whose customer set is already covered,
    /// regardless of kind.
    pub fn attach_cut(
        &mut self,
        cut: Cut,
        pool: &[Column],
        ngs: &NgNeighborhoods,
    ) -> AttachOutcome {
        if self.cuts.iter().any(|c| c.members == cut.members) {
            return AttachOutcome::Duplicate;
        }
        let row = self.lp.add_row(Sense::Ge, f64::from(cut.rhs));
        for (pos, &pool_idx) in self.active.iter().enumerate() {
            let g = route_coefficient(&cut, &pool[pool_idx].route, ngs);
            if g > 0 {
                self.lp
                    .set_coeff(self.lp_col_of_active[pos], row, f64::from(g))
                    .expect("active column handles are valid");
            }
        }
        self.cuts.push(cut);
        self.cut_rows.push(row);
        AttachOutcome::Attached
    }

    /// Duals of the latest solution in pricing layout, with cut duals
    /// clamped to exactly zero at or below the dual tolerance so pricing's
    /// thresholded resources agree with from-scratch recomputation.
    pub fn duals(&self, sol: &crate::lp::LpSolution) -> DualValues {
        let mut mu = vec![0.0; self.n + 2];
        for i in 1..=self.n {
            mu[i] = sol.duals[self.partition_rows[i - 1].0];
        }
        let gamma = self
            .cut_rows
            .iter()
            .map(|r| {
                let g = sol.duals[r.0];
                if g <= GAMMA_TOL {
                    0.0
                } else {
                    g
                }
            })
            .collect();
        DualValues { mu, gamma }
    }

    /// True when some artificial column carries real value, meaning no
    /// partition of the customers by allowed routes exists.
    fn artificials_positive(&self, sol: &crate::lp::LpSolution) -> bool {
        self.artificial_cols
            .iter()
            .any(|c| sol.primal[c.0] > PRIMAL_TOL)
    }

    /// Runs `f` with every route column incompatible with `graph` priced
    /// out at a prohibitive cost, then restores the real costs. Used by
    /// strong branching to score tentative arc fixings on the existing
    /// master instead of rebuilding it; the LP warm-starts because cost
    /// changes never invalidate a primal-feasible basis.
    pub fn with_incompatible_excluded<R>(
        &mut self,
        pool: &mut Vec<Column>,
        graph: &ProblemGraph,
        f: impl FnOnce(&mut MasterState, &mut Vec<Column>) -> R,
    ) -> R {
        // Far above any real route cost, but small enough that the dual
        // values it induces keep reduced-cost arithmetic well inside the
        // 1e-9 reconciliation budget enforced by pricing.
        const EXCLUDE_COST: f64 = 1e5;
        let saved: Vec<(ColId, f64)> = self
            .active
            .iter()
            .zip(&self.lp_col_of_active)
            .filter(|&(&idx, _)| !graph.route_allowed(&pool[idx].route))
            .map(|(&idx, &col)| (col, pool[idx].cost as f64))
            .collect();
        for &(col, _) in &saved {
            self.lp.set_cost(col, EXCLUDE_COST).expect("known column");
        }
        let result = f(self, pool);
        for &(col, cost) in &saved {
            self.lp.set_cost(col, cost).expect("known column");
        }
        result
    }

    /// Positive route columns of the last solution as a fractional solution
    /// with derived arc flows. Artificial columns are excluded; callers
    /// check node feasibility first.
    pub fn extract_solution(&self, pool: &[Column]) -> FractionalSolution {
        let sol = self.last.as_ref().expect("master solved");
        let routes = self
            .active
            .iter()
            .zip(&self.lp_col_of_active)
            .filter_map(|(&pool_idx, col)| {
                let x = sol.primal[col.0];
                (x > PRIMAL_TOL).then(|| (pool[pool_idx].route.clone(), x))
            })
            .collect();
        FractionalSolution::new(self.n, routes)
    }
}

/// Solves the node relaxation by column generation: solve the restricted
/// LP, price with the relaxed pass, fall back to exact pricing, and stop
/// when exact pricing proves no negative column remains. New routes are
/// appended to the shared pool and to this master.
pub fn column_generation(
    ms: &mut MasterState,
    graph: &ProblemGraph,
    ngs: &NgNeighborhoods,
    pool: &mut Vec<Column>,
    seen: &mut BTreeSet<Vec<usize>>,
    cfg: &CgConfig,
) -> CgOutcome {
    let mut added_total = 0;
    for _ in 0..cfg.max_iterations {
        if let Some(deadline) = cfg.deadline {
            if Instant::now() >= deadline {
                return CgOutcome {
                    status: CgStatus::TimedOut,
                    bound: f64::NEG_INFINITY,
                    added: added_total,
                };
            }
        }
        let sol = ms.lp.solve();
        if sol.status != LpStatus::Optimal {
            return CgOutcome {
                status: CgStatus::Numerical,
                bound: f64::NEG_INFINITY,
                added: added_total,
            };
        }
        let duals = ms.duals(&sol);
        let objective = sol.objective;
        ms.last = Some(sol);

        let mut priced = None;
        if cfg.use_heuristic {
            let mut hcfg = PricingConfig::heuristic(cfg.max_columns);
            hcfg.deadline = cfg.deadline;
            let r = solve_pricing(graph, &duals, &ms.cuts, ngs, &hcfg);
            if r.timed_out {
                return CgOutcome {
                    status: CgStatus::TimedOut,
                    bound: f64::NEG_INFINITY,
                    added: added_total,
                };
            }
            if !r.columns.is_empty() {
                priced = Some(r);
            }
        }
        if priced.is_none() && cfg.use_exact {
            let mut ecfg = PricingConfig::exact(cfg.max_columns);
            ecfg.deadline = cfg.deadline;
            let r = solve_pricing(graph, &duals, &ms.cuts, ngs, &ecfg);
            if r.timed_out {
                return CgOutcome {
                    status: CgStatus::TimedOut,
                    bound: f64::NEG_INFINITY,
                    added: added_total,
                };
            }
            if !r.columns.is_empty() {
                priced = Some(r);
            }
        }

        let priced = match priced {
            Some(p) => p,
            None => {
                // Nothing negative remains (exactly, or for the heuristic
                // estimate when exact pricing is disabled).
                let status = if ms.artificials_positive(ms.last.as_ref().unwrap()) {
                    CgStatus::NodeInfeasible
                } else {
                    CgStatus::Converged
                };
                return CgOutcome {
                    status,
                    bound: objective,
                    added: added_total,
                };
            }
        };

        let mut added_now = 0;
        for pr in priced.columns {
            if seen.insert(pr.route.clone()) {
                let col = Column::from_route(pr.route, graph);
                pool.push(col);
                let idx = pool.len() - 1;
                ms.install_column(idx, &pool[idx], ngs);
                added_now += 1;
            }
        }
        if added_now == 0 {
            // Every priced route was already pooled, which means it is
            // already in this master with nonnegative reduced cost — the
            // LP and pricing disagree beyond tolerance.
            return CgOutcome {
                status: CgStatus::Numerical,
                bound: f64::NEG_INFINITY,
                added: added_total,
            };
        }
        added_total += added_now;
    }
    CgOutcome {
        status: CgStatus::Numerical,
        bound: f64::NEG_INFINITY,
        added: added_total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bitset_of;
    use crate::cuts::CutKind;
    use crate::instance::{build_graph, CvrpInstance};
    use crate::pricing::build_neighborhoods;

    fn square_instance() -> CvrpInstance {
        // Depot at origin, three customers on a small arc.
        CvrpInstance {
            name: "square".into(),
            n: 3,
            coords: vec![(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)],
            demands: vec![0, 3, 4, 3],
            capacity: 10,
            alpha: 1.0,
        }
    }

    #[test]
    fn root_master_shape_and_objective() {
        let graph = build_graph(&square_instance());
        let ngs = build_neighborhoods(&graph, 3);
        let (mut ms, _pool) = init_master(&graph, &ngs);
        assert_eq!(ms.lp.n_rows(), 3);
        // Three artificials plus three singletons.
        assert_eq!(ms.lp.n_cols(), 6);
        let sol = ms.lp.solve();
        assert_eq!(sol.status, LpStatus::Optimal);
        let singles: f64 = (1..=3)
            .map(|i| (graph.cost(0, i) + graph.cost(i, 4)) as f64)
            .sum();
        assert!((sol.objective - singles).abs() < 1e-9);
    }

    #[test]
    fn attach_cut_installs_coefficients_and_rejects_duplicates() {
        let graph = build_graph(&square_instance());
        let ngs = build_neighborhoods(&graph, 3);
        let (mut ms, pool) = init_master(&graph, &ngs);
        let cut = Cut::capacity(
            CutKind::Cc,
            bitset_of(4, &[1, 2]),
            &graph.demands,
            graph.capacity,
        );
        assert_eq!(
            ms.attach_cut(cut.clone(), &pool, &ngs),
            AttachOutcome::Attached
        );
        // Same set as a different kind is still a duplicate.
        let other = Cut::capacity(
            CutKind::Scc,
            bitset_of(4, &[1, 2]),
            &graph.demands,
            graph.capacity,
        );
        assert_eq!(ms.attach_cut(other, &pool, &ngs), AttachOutcome::Duplicate);
        // With rhs 1 and singletons both entering once, the row is slack;
        // the LP stays optimal and feasible.
        let sol = ms.lp.solve();
        assert_eq!(sol.status, LpStatus::Optimal);
    }

    #[test]
    fn column_generation_reaches_pairing_optimum() {
        // Two nearby customers far from the depot: serving both in one
        // route beats two singleton routes; the LP optimum uses it.
        let inst = CvrpInstance {
            name: "pair".into(),
            n: 2,
            coords: vec![(0.0, 0.0), (100.0, 0.0), (100.0, 1.0)],
            demands: vec![0, 1, 1],
            capacity: 2,
            alpha: 1.0,
        };
        let graph = build_graph(&inst);
        let ngs = build_neighborhoods(&graph, 2);
        let (mut ms, mut pool) = init_master(&graph, &ngs);
        let mut seen: BTreeSet<Vec<usize>> =
            pool.iter().map(|c| c.route.clone()).collect();
        let out = column_generation(
            &mut ms,
            &graph,
            &ngs,
            &mut pool,
            &mut seen,
            &CgConfig::standard(None),
        );
        assert_eq!(out.status, CgStatus::Converged);
        // 0→1→2→end: 100 + 1 + 100 = 201.
        assert!((out.bound - 201.0).abs() < 1e-6);
        let frac = ms.extract_solution(&pool);
        assert!(frac.is_integral(PRIMAL_TOL));
    }

    #[test]
    fn isolated_customer_reports_node_infeasible() {
        let inst = square_instance();
        let mut graph = build_graph(&inst);
        // Remove every arc into customer 2.
        for i in 0..=3 {
            if i != 2 {
                graph.forbid(i, 2);
            }
        }
        let ngs = build_neighborhoods(&graph, 3);
        let (mut ms, mut pool) = init_master(&graph, &ngs);
        let mut seen: BTreeSet<Vec<usize>> =
            pool.iter().map(|c| c.route.clone()).collect();
        let out = column_generation(
            &mut ms,
            &graph,
            &ngs,
            &mut pool,
            &mut seen,
            &CgConfig::standard(None),
        );
        assert_eq!(out.status, CgStatus::NodeInfeasible);
    }

    #[test]
    fn cut_duals_are_clamped_nonnegative() {
        let graph = build_graph(&square_instance());
        let ngs = build_neighborhoods(&graph, 3);
        let (mut ms, mut pool) = init_master(&graph, &ngs);
        let cut = Cut::capacity(
            CutKind::Scc,
            bitset_of(4, &[1, 2, 3]),
            &graph.demands,
            graph.capacity,
        );
        assert_eq!(
            ms.attach_cut(cut, &pool, &ngs),
            AttachOutcome::Attached
        );
        let mut seen: BTreeSet<Vec<usize>> =
            pool.iter().map(|c| c.route.clone()).collect();
        let out = column_generation(
            &mut ms,
            &graph,
            &ngs,
            &mut pool,
            &mut seen,
            &CgConfig::standard(None),
        );
        assert_eq!(out.status, CgStatus::Converged);
        let duals = ms.duals(ms.last.as_ref().unwrap());
        for g in duals.gamma {
            assert!(g == 0.0 || g > GAMMA_TOL);
        }
    }
}
