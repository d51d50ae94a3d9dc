//! Pricing: a shortest-path-with-resources labeling over the ng-route
//! relaxation.
//!
//! Labels carry accumulated reduced cost, load, an ng-memory of remembered
//! customers, and one visited flag per set-membership cut with a positive
//! dual. Duals enter the extension step three ways: plain capacity cuts fold
//! into per-arc constants, ng-cuts subtract their dual only when the arc
//! contribution evaluated against the current memory is one, and
//! set-membership cuts collect their dual on first entry while setting the
//! flag. Dominance compares labels at the same vertex and load and requires
//! reduced cost, memory, and flags to all be no worse.

use std::time::Instant;

use crate::bits::BitSet;
use crate::cuts::{arc_projection, route_coefficient, rr_contribution, Cut, CutKind};
use crate::instance::ProblemGraph;

/// Duals below this are treated as zero: no label resource is created and no
/// extension term is applied.
pub const GAMMA_TOL: f64 = 1e-9;
/// Columns are only returned when their reduced cost beats this.
pub const NEGATIVE_TOL: f64 = -1e-6;
/// Emitted labels must match a from-scratch reduced-cost recomputation this
/// tightly; a mismatch is a programming error, not a tolerance issue.
const RECOMPUTE_TOL: f64 = 1e-9;

/// Per-customer neighborhoods N_i (each containing i) driving the ng-memory.
#[derive(Debug, Clone)]
pub struct NgNeighborhoods {
    /// Indexed by customer 1..=n; slot 0 is an unused empty set.
    sets: Vec<BitSet>,
}

impl NgNeighborhoods {
    /// Wraps explicit per-customer sets; `sets[i]` is N_i and slot 0 is a
    /// placeholder.
    pub fn from_sets(sets: Vec<BitSet>) -> NgNeighborhoods {
        assert!(!sets.is_empty());
        for (i, s) in sets.iter().enumerate().skip(1) {
            assert!(s.contains(i), "customer {i} missing from its own neighborhood");
        }
        NgNeighborhoods { sets }
    }

    pub fn n(&self) -> usize {
        self.sets.len() - 1
    }

    pub fn set(&self, i: usize) -> &BitSet {
        &self.sets[i]
    }
}

/// N_i = {i} plus the `size − 1` customers nearest to i by arc cost, ties
/// broken by lower index.
pub fn build_neighborhoods(graph: &ProblemGraph, size: usize) -> NgNeighborhoods {
    assert!(size >= 1);
    let n = graph.n;
    let mut sets = Vec::with_capacity(n + 1);
    sets.push(BitSet::new(n + 1));
    for i in 1..=n {
        let mut order: Vec<usize> = (1..=n).filter(|&j| j != i).collect();
        order.sort_by_key(|&j| (graph.cost(i, j), j));
        let mut s = BitSet::new(n + 1);
        s.insert(i);
        for &j in order.iter().take(size.saturating_sub(1)) {
            s.insert(j);
        }
        sets.push(s);
    }
    NgNeighborhoods::from_sets(sets)
}

/// Memory update on extension to customer j: keep only what j's
/// neighborhood remembers, then add j itself.
pub fn ng_update(pi: &BitSet, j: usize, ngs: &NgNeighborhoods) -> BitSet {
    let mut next = pi.clone();
    next.intersect_with(ngs.set(j));
    next.insert(j);
    next
}

/// Duals of the current master solution: one per customer row and one per
/// active cut row (aligned with the cut slice passed to pricing).
#[derive(Debug, Clone)]
pub struct DualValues {
    /// Indexed by vertex 0..=n+1; both depot copies are zero.
    pub mu: Vec<f64>,
    /// Indexed like the active cut list; nonnegative.
    pub gamma: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PricingMode {
    /// Bounded label store and arc elimination; may miss columns.
    Heuristic,
    /// Full dominance-pruned search; certifies the minimum reduced cost.
    Exact,
}

#[derive(Debug, Clone)]
pub struct PricingConfig {
    pub mode: PricingMode,
    /// Heuristic mode keeps only this many labels per (vertex, load) bucket.
    pub bucket_keep: usize,
    /// Heuristic mode drops customer-entering arcs whose c_ij − μ^j lies
    /// above this quantile of all such values.
    pub arc_keep_quantile: f64,
    /// Cap on returned columns.
    pub max_columns: usize,
    /// Disable dominance entirely (testing hook; exact results must not
    /// change, only run time).
    pub use_dominance: bool,
    /// Wall-clock cutoff checked during the sweep.
    pub deadline: Option<Instant>,
}

impl PricingConfig {
    pub fn exact(max_columns: usize) -> PricingConfig {
        PricingConfig {
            mode: PricingMode::Exact,
            bucket_keep: usize::MAX,
            arc_keep_quantile: 1.0,
            max_columns,
            use_dominance: true,
            deadline: None,
        }
    }

    pub fn heuristic(max_columns: usize) -> PricingConfig {
        PricingConfig {
            mode: PricingMode::Heuristic,
            bucket_keep: 1,
            arc_keep_quantile: 0.7,
            max_columns,
            use_dominance: true,
            deadline: None,
        }
    }
}

/// One priced route with its exact reduced cost.
#[derive(Debug, Clone)]
pub struct PricedRoute {
    pub route: Vec<usize>,
    pub rcost: f64,
}

#[derive(Debug, Clone)]
pub struct PricingResult {
    /// Routes with reduced cost < −1e-6, ascending, at most `max_columns`.
    pub columns: Vec<PricedRoute>,
    /// Minimum reduced cost over all routes that reached the sink
    /// (+∞ when none did). Certified global minimum in exact mode.
    pub best_rcost: f64,
    /// True when the deadline fired; results are then incomplete.
    pub timed_out: bool,
}

/// Cut duals preprocessed for the extension step: per-arc constants for the
/// robust kinds, and the positive-dual cut lists for the other two
/// applications.
pub struct CutContext<'a> {
    n: usize,
    /// Dense (n+2)×(n+2) robust dual load per arc.
    robust: Vec<f64>,
    /// ng-cuts with positive duals.
    resource: Vec<(&'a Cut, f64)>,
    /// Set-membership cuts with positive duals; position = flag slot.
    flagged: Vec<(&'a Cut, f64)>,
}

impl<'a> CutContext<'a> {
    pub fn n_flags(&self) -> usize {
        self.flagged.len()
    }
}

/// Splits the active cuts by application and folds robust duals into arc
/// constants. Cuts whose dual is ≤ 1e-9 contribute nothing and create no
/// resources.
pub fn prepare_cuts<'a>(cuts: &'a [Cut], gamma: &[f64], graph: &ProblemGraph) -> CutContext<'a> {
    assert_eq!(cuts.len(), gamma.len());
    let n = graph.n;
    let width = n + 2;
    let mut ctx = CutContext {
        n,
        robust: vec![0.0; width * width],
        resource: Vec::new(),
        flagged: Vec::new(),
    };
    for (cut, &g) in cuts.iter().zip(gamma) {
        debug_assert!(g >= -GAMMA_TOL, "negative cut dual {g}");
        if g <= GAMMA_TOL {
            continue;
        }
        match cut.kind {
            CutKind::Cc | CutKind::KPath => {
                let proj = arc_projection(cut).expect("robust kinds project");
                for i in 0..width {
                    if proj.members().contains(i) {
                        continue;
                    }
                    for j in proj.members().iter() {
                        ctx.robust[i * width + j] += g;
                    }
                }
            }
            CutKind::NgCc | CutKind::NgSdc => ctx.resource.push((cut, g)),
            CutKind::Scc | CutKind::Sdc => ctx.flagged.push((cut, g)),
        }
    }
    ctx
}

/// A partial route ending at `vertex`.
#[derive(Debug, Clone)]
pub struct Label {
    pub rcost: f64,
    pub vertex: usize,
    pub load: u32,
    /// Remembered customers (ng-memory).
    pub memory: BitSet,
    /// One bit per positive-dual set-membership cut: set once the route has
    /// touched that cut's set.
    pub scc_visited: BitSet,
    /// Arena index of the parent label; `usize::MAX` marks the root.
    pub pred: usize,
}

impl Label {
    /// The empty route sitting at the start depot.
    pub fn root(n: usize, n_flags: usize) -> Label {
        Label {
            rcost: 0.0,
            vertex: 0,
            load: 0,
            memory: BitSet::new(n + 1),
            scc_visited: BitSet::new(n_flags.max(1)),
            pred: usize::MAX,
        }
    }
}

/// Extends a label along the arc to `j` (a customer or the end depot),
/// applying all dual contributions. Returns `None` when the load bound is
/// exceeded. The caller owns `pred` bookkeeping.
pub fn extend_label(
    label: &Label,
    j: usize,
    duals: &DualValues,
    ctx: &CutContext,
    ngs: &NgNeighborhoods,
    graph: &ProblemGraph,
) -> Option<Label> {
    let i = label.vertex;
    let n = ctx.n;
    let load = label.load + graph.demand(j);
    if load > graph.capacity {
        return None;
    }
    let mut rcost = label.rcost + graph.cost(i, j) as f64 - duals.mu[j];
    rcost -= ctx.robust[i * (n + 2) + j];
    for &(cut, g) in &ctx.resource {
        if rr_contribution(cut, i, j, &label.memory) == 1 {
            rcost -= g;
        }
    }
    let mut scc_visited = label.scc_visited.clone();
    for (slot, &(cut, g)) in ctx.flagged.iter().enumerate() {
        if cut.members.contains(j) && !scc_visited.contains(slot) {
            rcost -= g;
            scc_visited.insert(slot);
        }
    }
    let memory = if j >= 1 && j <= n {
        ng_update(&label.memory, j, ngs)
    } else {
        label.memory.clone()
    };
    Some(Label {
        rcost,
        vertex: j,
        load,
        memory,
        scc_visited,
        pred: usize::MAX,
    })
}

/// Strict dominance: every resource no worse and at least one comparison
/// strict. Callers only compare labels at the same vertex.
pub fn dominates(a: &Label, b: &Label) -> bool {
    debug_assert_eq!(a.vertex, b.vertex);
    weakly_dominates(a, b)
        && (a.rcost < b.rcost
            || a.load < b.load
            || a.memory != b.memory
            || a.scc_visited != b.scc_visited)
}

/// Componentwise no-worse (allows full ties, used to drop duplicates while
/// keeping the first-created label).
fn weakly_dominates(a: &Label, b: &Label) -> bool {
    a.rcost <= b.rcost
        && a.load <= b.load
        && a.memory.is_subset_of(&b.memory)
        && a.scc_visited.is_subset_of(&b.scc_visited)
}

/// Runs the labeling sweep and returns negative-reduced-cost routes.
pub fn solve_pricing(
    graph: &ProblemGraph,
    duals: &DualValues,
    cuts: &[Cut],
    ngs: &NgNeighborhoods,
    cfg: &PricingConfig,
) -> PricingResult {
    let n = graph.n;
    let sink = graph.end_depot();
    let ctx = prepare_cuts(cuts, &duals.gamma, graph);
    let keep_arc = heuristic_arc_mask(graph, duals, cfg);

    // Arena plus (vertex, load) buckets of arena indices. Load strictly
    // increases along extensions (customer demands are positive), so
    // sweeping loads in ascending order processes every bucket only after
    // it can no longer grow.
    let mut arena: Vec<Label> = vec![Label::root(n, ctx.n_flags())];
    let capacity = graph.capacity as usize;
    let mut buckets: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); capacity + 1]; n + 1];
    let mut finished: Vec<(usize, f64)> = Vec::new(); // (arena idx of sink label's parent chain head, rcost)
    let mut sink_labels: Vec<Label> = Vec::new();
    let mut best_rcost = f64::INFINITY;
    let mut timed_out = false;
    let mut processed: usize = 0;

    // Seed: depot to every customer.
    for j in 1..=n {
        if !graph.is_allowed(0, j) || !keep_arc[j] {
            continue;
        }
        if let Some(mut lab) = extend_label(&arena[0], j, duals, &ctx, ngs, graph) {
            lab.pred = 0;
            insert_label(&mut arena, &mut buckets, lab, cfg);
        }
    }

    'sweep: for load in 1..=capacity {
        for v in 1..=n {
            if buckets[v][load].is_empty() {
                continue;
            }
            let indices = std::mem::take(&mut buckets[v][load]);
            for idx in indices {
                processed += 1;
                if processed % 64 == 0 {
                    if let Some(deadline) = cfg.deadline {
                        if Instant::now() >= deadline {
                            timed_out = true;
                            break 'sweep;
                        }
                    }
                }
                let label = arena[idx].clone();
                // Terminal extension to the end depot.
                if graph.is_allowed(v, sink) {
                    if let Some(mut done) = extend_label(&label, sink, duals, &ctx, ngs, graph) {
                        done.pred = idx;
                        if done.rcost < best_rcost {
                            best_rcost = done.rcost;
                        }
                        if done.rcost < NEGATIVE_TOL {
                            finished.push((sink_labels.len(), done.rcost));
                            sink_labels.push(done);
                        }
                    }
                }
                for j in 1..=n {
                    if j == v
                        || !graph.is_allowed(v, j)
                        || !keep_arc[j]
                        || label.memory.contains(j)
                    {
                        continue;
                    }
                    if let Some(mut next) = extend_label(&label, j, duals, &ctx, ngs, graph) {
                        next.pred = idx;
                        insert_label(&mut arena, &mut buckets, next, cfg);
                    }
                }
            }
        }
    }

    // Materialize routes, best first, deterministic under reduced-cost ties.
    finished.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap()
            .then_with(|| sink_route(&arena, &sink_labels[a.0]).cmp(&sink_route(&arena, &sink_labels[b.0])))
    });
    finished.truncate(cfg.max_columns);
    let columns: Vec<PricedRoute> = finished
        .iter()
        .map(|&(slot, rcost)| PricedRoute {
            route: sink_route(&arena, &sink_labels[slot]),
            rcost,
        })
        .collect();
    for col in &columns {
        let check = recompute_reduced_cost(&col.route, graph, duals, cuts, ngs);
        assert!(
            (check - col.rcost).abs() <= RECOMPUTE_TOL,
            "label reduced cost {} deviates from recomputation {} on {:?}",
            col.rcost,
            check,
            col.route
        );
    }
    PricingResult {
        columns,
        best_rcost,
        timed_out,
    }
}

/// From-scratch reduced cost of a route: arc costs minus customer duals
/// minus every cut's coefficient times its dual.
pub fn recompute_reduced_cost(
    route: &[usize],
    graph: &ProblemGraph,
    duals: &DualValues,
    cuts: &[Cut],
    ngs: &NgNeighborhoods,
) -> f64 {
    let mut rcost = graph.route_cost(route) as f64;
    for &v in &route[1..route.len() - 1] {
        rcost -= duals.mu[v];
    }
    for (cut, &g) in cuts.iter().zip(&duals.gamma) {
        if g != 0.0 {
            rcost -= f64::from(route_coefficient(cut, route, ngs)) * g;
        }
    }
    rcost
}

/// Walks the pred chain of a sink label back to the root.
fn sink_route(arena: &[Label], sink: &Label) -> Vec<usize> {
    let mut route = vec![sink.vertex];
    let mut at = sink.pred;
    while at != usize::MAX {
        route.push(arena[at].vertex);
        at = arena[at].pred;
    }
    route.reverse();
    route
}

/// Dominance-checked insertion into the label's (vertex, load) bucket.
fn insert_label(
    arena: &mut Vec<Label>,
    buckets: &mut [Vec<Vec<usize>>],
    label: Label,
    cfg: &PricingConfig,
) {
    let bucket = &mut buckets[label.vertex][label.load as usize];
    if cfg.use_dominance {
        if bucket.iter().any(|&i| weakly_dominates(&arena[i], &label)) {
            return;
        }
        bucket.retain(|&i| !weakly_dominates(&label, &arena[i]));
    }
    if bucket.len() >= cfg.bucket_keep {
        // Heuristic cap: displace the worst stored label if strictly better.
        let (worst_pos, worst_idx) = bucket
            .iter()
            .enumerate()
            .max_by(|a, b| arena[*a.1].rcost.partial_cmp(&arena[*b.1].rcost).unwrap())
            .map(|(pos, &i)| (pos, i))
            .expect("cap is at least one");
        if label.rcost < arena[worst_idx].rcost {
            bucket[worst_pos] = arena.len();
            arena.push(label);
        }
        return;
    }
    bucket.push(arena.len());
    arena.push(label);
}

/// Heuristic arc elimination: keep a customer as an extension target only if
/// some entering arc's adjusted cost c_ij − μ^j falls at or below the
/// configured quantile. Exact mode keeps everything.
fn heuristic_arc_mask(graph: &ProblemGraph, duals: &DualValues, cfg: &PricingConfig) -> Vec<bool> {
    let n = graph.n;
    if cfg.mode == PricingMode::Exact || cfg.arc_keep_quantile >= 1.0 {
        return vec![true; n + 1];
    }
    let mut values: Vec<f64> = Vec::new();
    for j in 1..=n {
        for i in 0..=n {
            if i != j && graph.is_allowed(i, j) {
                values.push(graph.cost(i, j) as f64 - duals.mu[j]);
            }
        }
    }
    if values.is_empty() {
        return vec![true; n + 1];
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((values.len() - 1) as f64 * cfg.arc_keep_quantile).floor() as usize;
    let threshold = values[rank];
    let mut keep = vec![false; n + 1];
    for j in 1..=n {
        keep[j] = (0..=n).any(|i| {
            i != j && graph.is_allowed(i, j) && graph.cost(i, j) as f64 - duals.mu[j] <= threshold
        });
    }
    keep
}
