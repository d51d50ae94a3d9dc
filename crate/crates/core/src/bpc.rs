//! Branch-price-and-cut driver: best-first tree search with cut rounds at
//! every node and strong branching on fractional arc flows.
//!
//! Nodes carry only their branching decisions; each one rebuilds its master
//! from the shared column pool and the shared cut list (capacity-family
//! cuts are valid globally, so cuts found anywhere tighten every node).
//! The bound never decreases down a branch, and with integer arc costs a
//! node whose bound rounds up to the incumbent is pruned.

use std::collections::{BTreeSet, BinaryHeap};
use std::time::{Duration, Instant};

use crate::cuts::{separate, Cut, CutKind, FractionalSolution, SeparationMode};
use crate::instance::{build_graph, CvrpInstance, ProblemGraph};
use crate::master::{
    build_node_master, column_generation, seed_pool, AttachOutcome, CgConfig, CgStatus, Column,
    MasterState, PRIMAL_TOL,
};
use crate::pricing::{build_neighborhoods, NgNeighborhoods};

/// Objective delta assigned to a tentative fixing whose LP cannot be scored.
const INFEASIBLE_DELTA: f64 = 1e9;
/// Strong branching funnel sizes: fractional candidates, then LP-scored
/// survivors re-scored with heuristic pricing.
const FUNNEL_WIDE: usize = 30;
const FUNNEL_NARROW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcFix {
    Zero,
    One,
}

/// One branching decision: force the flow on an arc to zero or one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchDecision {
    pub arc: (usize, usize),
    pub fix: ArcFix,
}

/// Realizes a decision list on a copy of the base graph.
///
/// Fixing an arc to zero removes it. Fixing (i, j) to one removes the other
/// arcs out of i and into j — except on a depot side, where many routes
/// legitimately share the endpoint. Returns `None` when the decisions
/// contradict each other or strand a customer without usable arcs.
pub fn apply_decisions(base: &ProblemGraph, decisions: &[BranchDecision]) -> Option<ProblemGraph> {
    let mut graph = base.clone();
    let total = graph.n_vertices();
    let end = graph.end_depot();
    for d in decisions {
        let (i, j) = d.arc;
        match d.fix {
            ArcFix::Zero => graph.forbid(i, j),
            ArcFix::One => {
                if !graph.is_allowed(i, j) {
                    return None;
                }
                if i != 0 {
                    for k in 0..total {
                        if k != j && graph.is_allowed(i, k) {
                            graph.forbid(i, k);
                        }
                    }
                }
                if j != end {
                    for k in 0..total {
                        if k != i && graph.is_allowed(k, j) {
                            graph.forbid(k, j);
                        }
                    }
                }
            }
        }
    }
    // A later zero-fix or one-fix may have severed an earlier one-fixed arc.
    for d in decisions {
        if d.fix == ArcFix::One && !graph.is_allowed(d.arc.0, d.arc.1) {
            return None;
        }
    }
    for v in 1..=graph.n {
        let has_in = (0..total).any(|k| graph.is_allowed(k, v));
        let has_out = (0..total).any(|k| graph.is_allowed(v, k));
        if !has_in || !has_out {
            return None;
        }
    }
    Some(graph)
}

/// Combined strong-branching score of the two objective changes.
pub fn branch_score(delta_plus: f64, delta_minus: f64) -> f64 {
    0.75 * delta_plus.min(delta_minus) + 0.25 * delta_plus.max(delta_minus)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Tree exhausted with a proven optimum.
    Optimal,
    TimeLimit,
    /// No feasible set of routes exists.
    Infeasible,
    /// Stopped after the root node's cut loop by request.
    RootOnly,
    /// The LP core or the pricing/LP agreement failed beyond tolerance.
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Best proven lower bound on the optimal objective.
    pub lower_bound: f64,
    /// Incumbent objective, exact integer arc-cost sum.
    pub upper_bound: Option<i64>,
    /// Incumbent routes (empty when no incumbent was found).
    pub best_routes: Vec<Vec<usize>>,
    /// Nodes whose relaxation was actually solved.
    pub nodes: u64,
    pub n_cc: usize,
    pub n_ngcc: usize,
    pub n_scc: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub mode: SeparationMode,
    pub ng_size: usize,
    pub time_limit: Duration,
    pub root_only: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mode: SeparationMode::ResourceRobust,
            ng_size: 10,
            time_limit: Duration::from_secs(3600),
            root_only: false,
        }
    }
}

/// An open node: its decision path and the bound inherited from its parent.
#[derive(Debug, Clone)]
struct Node {
    decisions: Vec<BranchDecision>,
    bound: f64,
    depth: u32,
    seq: u64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}
impl Eq for Node {}

impl Ord for Node {
    // BinaryHeap is a max-heap; reverse so the pop order is lowest bound,
    // then lowest depth, then creation order.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .bound
            .partial_cmp(&self.bound)
            .expect("node bounds are finite")
            .then_with(|| other.depth.cmp(&self.depth))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Smallest integer objective consistent with a node bound.
fn ceil_bound(bound: f64) -> i64 {
    (bound - 1e-6).ceil() as i64
}

/// Three-phase strong branching: the most fractional arcs by |flow − 0.5|,
/// LP re-solves without pricing on the tentative fixings, then heuristic
/// pricing on the survivors. Returns the winning arc, or `None` when no
/// fractional arc exists.
#[allow(clippy::too_many_arguments)]
fn strong_branch_select(
    node_graph: &ProblemGraph,
    node_bound: f64,
    frac: &FractionalSolution,
    ms: &mut MasterState,
    pool: &mut Vec<Column>,
    seen: &mut BTreeSet<Vec<usize>>,
    ngs: &NgNeighborhoods,
    deadline: Instant,
) -> Option<(usize, usize)> {
    let mut candidates: Vec<((usize, usize), f64)> = frac
        .arc_flows()
        .iter()
        .filter(|&(_, &f)| (f - f.round()).abs() > PRIMAL_TOL)
        .map(|(&arc, &f)| (arc, f))
        .collect();
    if candidates.is_empty() {
        return None;
    }
    candidates.sort_by(|a, b| {
        let da = (a.1 - 0.5).abs();
        let db = (b.1 - 0.5).abs();
        da.partial_cmp(&db).unwrap().then_with(|| a.0.cmp(&b.0))
    });
    candidates.truncate(FUNNEL_WIDE);

    // Phase 2: pure LP re-solves on the current master with incompatible
    // columns priced out.
    let mut scored: Vec<(f64, (usize, usize))> = Vec::with_capacity(candidates.len());
    for &(arc, _) in &candidates {
        if Instant::now() >= deadline {
            break;
        }
        let mut deltas = [INFEASIBLE_DELTA; 2];
        for (slot, fix) in [ArcFix::One, ArcFix::Zero].into_iter().enumerate() {
            let decision = BranchDecision { arc, fix };
            if let Some(tentative) = apply_decisions(node_graph, &[decision]) {
                deltas[slot] = ms.with_incompatible_excluded(pool, &tentative, |m, _| {
                    let sol = m.lp.solve();
                    if sol.status == crate::lp::LpStatus::Optimal {
                        (sol.objective - node_bound).max(0.0).min(INFEASIBLE_DELTA)
                    } else {
                        INFEASIBLE_DELTA
                    }
                });
            }
        }
        scored.push((branch_score(deltas[0], deltas[1]), arc));
    }
    if scored.is_empty() {
        return Some(candidates[0].0);
    }
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.cmp(&b.1)));
    scored.truncate(FUNNEL_NARROW);

    // Phase 3: re-score with heuristic-only column generation on the
    // tentative graphs; columns found are pooled for everyone.
    let mut best: Option<(f64, (usize, usize))> = None;
    for &(_, arc) in &scored {
        if Instant::now() >= deadline {
            break;
        }
        let mut deltas = [INFEASIBLE_DELTA; 2];
        for (slot, fix) in [ArcFix::One, ArcFix::Zero].into_iter().enumerate() {
            let decision = BranchDecision { arc, fix };
            if let Some(tentative) = apply_decisions(node_graph, &[decision]) {
                deltas[slot] = ms.with_incompatible_excluded(pool, &tentative, |m, p| {
                    let out = column_generation(
                        m,
                        &tentative,
                        ngs,
                        p,
                        seen,
                        &CgConfig::heuristic_only(Some(deadline)),
                    );
                    match out.status {
                        CgStatus::Converged | CgStatus::NodeInfeasible => {
                            (out.bound - node_bound).max(0.0).min(INFEASIBLE_DELTA)
                        }
                        _ => INFEASIBLE_DELTA,
                    }
                });
            }
        }
        let score = branch_score(deltas[0], deltas[1]);
        let better = match best {
            None => true,
            Some((bs, barc)) => score > bs || (score == bs && arc < barc),
        };
        if better {
            best = Some((score, arc));
        }
    }
    best.map(|(_, arc)| arc).or(Some(scored[0].1))
}

/// Extracts the integral solution's routes and verifies it is a genuine
/// partition of the customers into capacity-feasible routes.
fn incumbent_routes(frac: &FractionalSolution, graph: &ProblemGraph) -> (i64, Vec<Vec<usize>>) {
    let routes: Vec<Vec<usize>> = frac
        .routes
        .iter()
        .filter(|&&(_, x)| x > 0.5)
        .map(|(r, _)| r.clone())
        .collect();
    let mut served = vec![0u32; graph.n + 1];
    let mut cost = 0i64;
    for route in &routes {
        let mut load = 0u32;
        for &v in &route[1..route.len() - 1] {
            served[v] += 1;
            load += graph.demand(v);
        }
        assert!(load <= graph.capacity, "incumbent route exceeds capacity");
        cost += graph.route_cost(route);
    }
    for v in 1..=graph.n {
        assert_eq!(served[v], 1, "incumbent serves customer {v} {} times", served[v]);
    }
    (cost, routes)
}

/// Runs the full search on one instance.
pub fn solve(inst: &CvrpInstance, cfg: &SolverConfig) -> SolveResult {
    let start = Instant::now();
    let deadline = start + cfg.time_limit;
    let graph = build_graph(inst);
    let n = graph.n;
    let ngs = build_neighborhoods(&graph, cfg.ng_size.clamp(1, n));
    let mut pool = seed_pool(&graph);
    let mut seen: BTreeSet<Vec<usize>> = pool.iter().map(|c| c.route.clone()).collect();
    let mut cuts: Vec<Cut> = Vec::new();
    let mut incumbent: Option<(i64, Vec<Vec<usize>>)> = None;
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    heap.push(Node {
        decisions: Vec::new(),
        bound: 0.0,
        depth: 0,
        seq: 0,
    });
    let mut next_seq = 1u64;
    let mut nodes = 0u64;
    let mut global_lb = 0.0f64;
    let mut status = SolveStatus::Optimal;

    'tree: while let Some(node) = heap.pop() {
        // Best-first pop order makes the popped bound a valid global bound.
        global_lb = global_lb.max(node.bound);
        if Instant::now() >= deadline {
            status = SolveStatus::TimeLimit;
            break;
        }
        if let Some((ub, _)) = &incumbent {
            if ceil_bound(node.bound) >= *ub {
                continue;
            }
        }
        let node_graph = match apply_decisions(&graph, &node.decisions) {
            Some(g) => g,
            None => continue,
        };
        nodes += 1;
        let mut ms = build_node_master(&node_graph, &pool, &cuts, &ngs);
        let mut node_bound;
        loop {
            let out = column_generation(
                &mut ms,
                &node_graph,
                &ngs,
                &mut pool,
                &mut seen,
                &CgConfig::standard(Some(deadline)),
            );
            match out.status {
                CgStatus::Converged => node_bound = out.bound,
                CgStatus::NodeInfeasible => continue 'tree,
                CgStatus::TimedOut => {
                    status = SolveStatus::TimeLimit;
                    break 'tree;
                }
                CgStatus::Numerical => {
                    status = SolveStatus::NumericalFailure;
                    break 'tree;
                }
            }
            if let Some((ub, _)) = &incumbent {
                if ceil_bound(node_bound) >= *ub {
                    continue 'tree;
                }
            }
            let frac = ms.extract_solution(&pool);
            if frac.is_integral(PRIMAL_TOL) {
                break;
            }
            let found = separate(&frac, &node_graph, &ngs, cfg.mode);
            let mut attached = 0;
            for cut in found {
                if ms.attach_cut(cut.clone(), &pool, &ngs) == AttachOutcome::Attached {
                    cuts.push(cut);
                    attached += 1;
                }
            }
            if attached == 0 {
                break;
            }
        }

        let frac = ms.extract_solution(&pool);
        if frac.is_integral(PRIMAL_TOL) {
            let (cost, routes) = incumbent_routes(&frac, &node_graph);
            if incumbent.as_ref().map_or(true, |&(ub, _)| cost < ub) {
                incumbent = Some((cost, routes));
            }
            if cfg.root_only && node.depth == 0 {
                global_lb = global_lb.max(node_bound);
                break;
            }
            continue;
        }
        if cfg.root_only && node.depth == 0 {
            status = SolveStatus::RootOnly;
            global_lb = global_lb.max(node_bound);
            break;
        }

        match strong_branch_select(
            &node_graph,
            node_bound,
            &frac,
            &mut ms,
            &mut pool,
            &mut seen,
            &ngs,
            deadline,
        ) {
            Some(arc) => {
                for fix in [ArcFix::One, ArcFix::Zero] {
                    let mut decisions = node.decisions.clone();
                    decisions.push(BranchDecision { arc, fix });
                    heap.push(Node {
                        decisions,
                        bound: node_bound,
                        depth: node.depth + 1,
                        seq: next_seq,
                    });
                    next_seq += 1;
                }
            }
            None => {
                // Fractional solution with no fractional arc flow cannot
                // happen for a genuine partition solution.
                status = SolveStatus::NumericalFailure;
                break;
            }
        }
    }

    if heap.is_empty() && status == SolveStatus::Optimal {
        match &incumbent {
            Some((ub, _)) => global_lb = *ub as f64,
            None => status = SolveStatus::Infeasible,
        }
    }
    if let Some((ub, _)) = &incumbent {
        // Float dust must never report a bound above the proven optimum.
        global_lb = global_lb.min(*ub as f64);
    }
    let mut n_cc = 0;
    let mut n_ngcc = 0;
    let mut n_scc = 0;
    for cut in &cuts {
        match cut.kind {
            CutKind::Cc | CutKind::KPath => n_cc += 1,
            CutKind::NgCc | CutKind::NgSdc => n_ngcc += 1,
            CutKind::Scc | CutKind::Sdc => n_scc += 1,
        }
    }
    let (upper_bound, best_routes) = match incumbent {
        Some((ub, routes)) => (Some(ub), routes),
        None => (None, Vec::new()),
    };
    SolveResult {
        status,
        lower_bound: global_lb,
        upper_bound,
        best_routes,
        nodes,
        n_cc,
        n_ngcc,
        n_scc,
        seconds: start.elapsed().as_secs_f64(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(n: usize, coords: Vec<(f64, f64)>, demands: Vec<u32>, capacity: u32) -> CvrpInstance {
        CvrpInstance {
            name: "tiny".into(),
            n,
            coords,
            demands,
            capacity,
            alpha: 1.0,
        }
    }

    #[test]
    fn single_customer_optimum() {
        let inst = tiny(1, vec![(0.0, 0.0), (3.0, 4.0)], vec![0, 1], 1);
        let result = solve(&inst, &SolverConfig::default());
        assert_eq!(result.status, SolveStatus::Optimal);
        assert_eq!(result.upper_bound, Some(10)); // 5 out + 5 back
        assert_eq!(result.nodes, 1);
        assert_eq!(result.best_routes, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn decision_semantics() {
        let inst = tiny(
            3,
            vec![(0.0, 0.0), (10.0, 0.0), (20.0, 0.0), (30.0, 0.0)],
            vec![0, 1, 1, 1],
            3,
        );
        let graph = build_graph(&inst);
        // Fix (1,2)=1: out-arcs of 1 and in-arcs of 2 collapse.
        let fixed = apply_decisions(
            &graph,
            &[BranchDecision {
                arc: (1, 2),
                fix: ArcFix::One,
            }],
        )
        .unwrap();
        assert!(fixed.is_allowed(1, 2));
        assert!(!fixed.is_allowed(1, 3));
        assert!(!fixed.is_allowed(1, 4));
        assert!(!fixed.is_allowed(0, 2));
        assert!(!fixed.is_allowed(3, 2));
        // Depot-side exemption: fixing (0,2)=1 keeps other depot out-arcs.
        let depot = apply_decisions(
            &graph,
            &[BranchDecision {
                arc: (0, 2),
                fix: ArcFix::One,
            }],
        )
        .unwrap();
        assert!(depot.is_allowed(0, 1));
        assert!(depot.is_allowed(0, 3));
        assert!(!depot.is_allowed(1, 2));
        assert!(!depot.is_allowed(3, 2));
        // Contradiction: the one-fixed arc later removed.
        let clash = apply_decisions(
            &graph,
            &[
                BranchDecision {
                    arc: (1, 2),
                    fix: ArcFix::One,
                },
                BranchDecision {
                    arc: (1, 2),
                    fix: ArcFix::Zero,
                },
            ],
        );
        assert!(clash.is_none());
        // Isolation: a customer with every in-arc removed.
        let isolating: Vec<BranchDecision> = [(0usize, 3usize), (1, 3), (2, 3)]
            .iter()
            .map(|&arc| BranchDecision {
                arc,
                fix: ArcFix::Zero,
            })
            .collect();
        assert!(apply_decisions(&graph, &isolating).is_none());
    }

    #[test]
    fn score_formula() {
        assert!((branch_score(4.0, 2.0) - 2.5).abs() < 1e-12);
        assert!((branch_score(0.0, 0.0)).abs() < 1e-12);
        assert!((branch_score(1.0, 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn four_customer_instance_solves_in_every_mode() {
        // Two natural pairs; capacity forces two routes.
        let inst = tiny(
            4,
            vec![
                (0.0, 0.0),
                (10.0, 0.0),
                (10.0, 5.0),
                (-10.0, 0.0),
                (-10.0, 5.0),
            ],
            vec![0, 2, 2, 2, 2],
            4,
        );
        let mut expected: Option<i64> = None;
        for mode in [
            SeparationMode::RobustOnly,
            SeparationMode::ResourceRobust,
            SeparationMode::NonRobust,
        ] {
            let cfg = SolverConfig {
                mode,
                ng_size: 4,
                time_limit: Duration::from_secs(60),
                root_only: false,
            };
            let result = solve(&inst, &cfg);
            assert_eq!(result.status, SolveStatus::Optimal, "mode {mode:?}");
            let ub = result.upper_bound.unwrap();
            assert!((result.lower_bound - ub as f64).abs() < 1e-6);
            match expected {
                None => expected = Some(ub),
                Some(e) => assert_eq!(e, ub, "modes disagree"),
            }
        }
        // Pairing both sides: 2·(10 + 5 + 11) hand-checked.
        assert_eq!(expected, Some(52));
    }

    #[test]
    fn root_only_stops_after_one_node() {
        let inst = tiny(
            4,
            vec![
                (0.0, 0.0),
                (12.0, 0.0),
                (12.0, 7.0),
                (-12.0, 0.0),
                (-12.0, 7.0),
            ],
            vec![0, 2, 2, 2, 2],
            4,
        );
        let cfg = SolverConfig {
            root_only: true,
            ..SolverConfig::default()
        };
        let result = solve(&inst, &cfg);
        assert_eq!(result.nodes, 1);
        assert!(matches!(
            result.status,
            SolveStatus::RootOnly | SolveStatus::Optimal
        ));
        assert!(result.lower_bound > 0.0);
    }

    #[test]
    fn time_limit_reports_limit_status() {
        let inst = tiny(
            4,
            vec![
                (0.0, 0.0),
                (10.0, 0.0),
                (10.0, 5.0),
                (-10.0, 0.0),
                (-10.0, 5.0),
            ],
            vec![0, 2, 2, 2, 2],
            4,
        );
        let cfg = SolverConfig {
            time_limit: Duration::from_nanos(1),
            ..SolverConfig::default()
        };
        let result = solve(&inst, &cfg);
        assert_eq!(result.status, SolveStatus::TimeLimit);
        assert!(result.upper_bound.is_none());
    }
}
