//! Cut families over customer subsets, their route coefficients, and the
//! κ-scaled capacity-cut separation procedure.
//!
//! Three capacity-cut strengths share the same right-hand side
//! ⌈Σ_{i∈S} q_i / Q⌉ and differ only in how often a route is counted:
//! per entering arc (CC), per entering arc the labeling memory has forgotten
//! (ng-CC), or once per route touching the set (SCC). Degree cuts (SDC,
//! ng-SDC) are the single-customer analogues with right-hand side 1.
//!
//! Separation scales route flows down by κ_p = min{κ, ⌈l(p)/2⌉} so that a
//! plain entering-arc separator can surface sets whose violation exists only
//! in the stronger families, then re-evaluates every candidate against the
//! original solution to decide which kind (if any) to emit.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::bits::BitSet;
use crate::instance::ProblemGraph;
use crate::pricing::{ng_update, NgNeighborhoods};

/// Accepted cuts per separation round, best violations first.
const MAX_CUTS_PER_ROUND: usize = 50;
/// Largest flow-scaling factor tried before separation gives up.
const MAX_KAPPA: u32 = 4;
/// Customer counts up to this use exhaustive subset enumeration as a
/// candidate fallback, making small-instance separation deterministic and
/// complete.
const EXHAUSTIVE_LIMIT: usize = 10;
/// Minimal violation for a plain capacity cut to be worth adding.
const CC_THRESHOLD: f64 = 0.1;
/// Minimal violation for the stronger kinds, which must also beat the plain
/// violation by the same margin.
const STRONG_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CutKind {
    /// Capacity cut: counts every arc entering the set.
    Cc,
    /// Strengthened capacity cut: counts each route at most once.
    Scc,
    /// ng-capacity cut: counts entering arcs whose label memory has
    /// forgotten the set.
    NgCc,
    /// Same left-hand side as [`CutKind::Cc`] with a caller-supplied
    /// right-hand side (a lower bound on the routes serving the set).
    KPath,
    /// Strong degree constraint on one customer: counts each route visiting
    /// the customer at most once.
    Sdc,
    /// ng-strong degree constraint: counts visits the memory has forgotten.
    NgSdc,
}

#[derive(Debug, Error)]
pub enum CutError {
    #[error("cut kind {0:?} has no per-arc constant projection")]
    NotArcProjectable(CutKind),
}

/// One cut row: a customer subset (a singleton for the degree kinds), the
/// integer right-hand side, and the kind selecting the coefficient rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    pub kind: CutKind,
    /// Customer members of S (customers are numbered 1..=n).
    pub members: BitSet,
    pub rhs: u32,
}

impl Cut {
    /// A capacity-family cut with the rounded demand right-hand side.
    pub fn capacity(kind: CutKind, members: BitSet, demands: &[u32], capacity: u32) -> Cut {
        assert!(
            matches!(kind, CutKind::Cc | CutKind::Scc | CutKind::NgCc),
            "capacity constructor used with {kind:?}"
        );
        assert!(!members.is_empty(), "capacity cut over an empty set");
        let rhs = cut_rhs(&members, demands, capacity);
        Cut { kind, members, rhs }
    }

    /// A k-path cut: entering-arc counting with an external bound on the
    /// number of serving routes.
    pub fn k_path(members: BitSet, k: u32) -> Cut {
        assert!(!members.is_empty() && k >= 1);
        Cut {
            kind: CutKind::KPath,
            members,
            rhs: k,
        }
    }

    /// A degree cut on a single customer.
    pub fn degree(kind: CutKind, v: usize, n: usize) -> Cut {
        assert!(
            matches!(kind, CutKind::Sdc | CutKind::NgSdc),
            "degree constructor used with {kind:?}"
        );
        assert!(v >= 1 && v <= n);
        let mut members = BitSet::new(n + 1);
        members.insert(v);
        Cut {
            kind,
            members,
            rhs: 1,
        }
    }

    /// The single customer of a degree cut.
    pub fn vertex(&self) -> usize {
        debug_assert!(matches!(self.kind, CutKind::Sdc | CutKind::NgSdc));
        self.members.iter().next().expect("degree cut has one member")
    }
}

/// Rounded capacity right-hand side: ⌈Σ_{i∈S} q_i / Q⌉.
pub fn cut_rhs(members: &BitSet, demands: &[u32], capacity: u32) -> u32 {
    let total: u64 = members.iter().map(|i| u64::from(demands[i])).sum();
    let q = u64::from(capacity);
    ((total + q - 1) / q) as u32
}

/// Coefficient of one route in the cut row.
///
/// Works on arbitrary 0→n+1 walks, not only memory-legal ones: the memory
/// consulted by the ng kinds is recomputed by folding the update rule along
/// the route, so columns created before a cut existed still get exact
/// coefficients.
pub fn route_coefficient(cut: &Cut, route: &[usize], ngs: &NgNeighborhoods) -> u32 {
    debug_assert!(route.len() >= 2, "route must span depot to depot");
    let s = &cut.members;
    match cut.kind {
        CutKind::Scc => u32::from(route.iter().any(|&v| s.contains(v))),
        CutKind::Sdc => u32::from(route.contains(&cut.vertex())),
        CutKind::Cc | CutKind::KPath => {
            let mut count = 0;
            for w in route.windows(2) {
                if !s.contains(w[0]) && s.contains(w[1]) {
                    count += 1;
                }
            }
            count
        }
        CutKind::NgCc => {
            let mut count = 0;
            let mut memory = BitSet::new(ngs.n() + 1);
            for w in route.windows(2) {
                if !s.contains(w[0]) && s.contains(w[1]) && memory.is_disjoint(s) {
                    count += 1;
                }
                if w[1] <= ngs.n() && w[1] >= 1 {
                    memory = ng_update(&memory, w[1], ngs);
                }
            }
            count
        }
        CutKind::NgSdc => {
            let v = cut.vertex();
            let mut count = 0;
            let mut memory = BitSet::new(ngs.n() + 1);
            for w in route.windows(2) {
                if w[1] == v && !memory.contains(v) {
                    count += 1;
                }
                if w[1] <= ngs.n() && w[1] >= 1 {
                    memory = ng_update(&memory, w[1], ngs);
                }
            }
            count
        }
    }
}

/// Per-arc constants of a robustly applicable cut: 1 on arcs entering the
/// set, 0 elsewhere. Summing over a route's arcs reproduces
/// [`route_coefficient`] exactly, which is what lets the dual fold into arc
/// costs.
#[derive(Debug, Clone)]
pub struct ArcProjection {
    members: BitSet,
}

impl ArcProjection {
    pub fn g(&self, i: usize, j: usize) -> u32 {
        u32::from(!self.members.contains(i) && self.members.contains(j))
    }

    pub fn members(&self) -> &BitSet {
        &self.members
    }
}

pub fn arc_projection(cut: &Cut) -> Result<ArcProjection, CutError> {
    match cut.kind {
        CutKind::Cc | CutKind::KPath => Ok(ArcProjection {
            members: cut.members.clone(),
        }),
        other => Err(CutError::NotArcProjectable(other)),
    }
}

/// Arc contribution of a resource-robust cut given the label memory at the
/// arc's tail. Non-increasing in the memory under set inclusion, which is
/// the property that keeps plain dominance valid.
pub fn rr_contribution(cut: &Cut, i: usize, j: usize, memory: &BitSet) -> u32 {
    match cut.kind {
        CutKind::NgCc => {
            u32::from(!cut.members.contains(i) && cut.members.contains(j) && memory.is_disjoint(&cut.members))
        }
        CutKind::NgSdc => {
            let v = cut.vertex();
            u32::from(j == v && !memory.contains(v))
        }
        other => panic!("rr_contribution on non-resource-robust kind {other:?}"),
    }
}

/// A nonnegative combination of routes, with arc flows derived once at
/// construction.
#[derive(Debug, Clone)]
pub struct FractionalSolution {
    /// Positive-valued routes as full 0→n+1 vertex sequences.
    pub routes: Vec<(Vec<usize>, f64)>,
    n: usize,
    arc_flows: BTreeMap<(usize, usize), f64>,
}

impl FractionalSolution {
    pub fn new(n: usize, routes: Vec<(Vec<usize>, f64)>) -> FractionalSolution {
        let mut arc_flows = BTreeMap::new();
        for (route, x) in &routes {
            debug_assert!(route.first() == Some(&0) && route.last() == Some(&(n + 1)));
            for w in route.windows(2) {
                *arc_flows.entry((w[0], w[1])).or_insert(0.0) += x;
            }
        }
        FractionalSolution { routes, n, arc_flows }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arc_flow(&self, i: usize, j: usize) -> f64 {
        self.arc_flows.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn arc_flows(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.arc_flows
    }

    /// True when every positive value is within `tol` of 0 or 1.
    pub fn is_integral(&self, tol: f64) -> bool {
        self.routes
            .iter()
            .all(|&(_, x)| (x - x.round()).abs() <= tol)
    }
}

/// Violation of the cut against a fractional solution: rhs − Σ_p g_p x_p.
/// Positive means violated.
pub fn violation(cut: &Cut, sol: &FractionalSolution, ngs: &NgNeighborhoods) -> f64 {
    let lhs: f64 = sol
        .routes
        .iter()
        .map(|(route, x)| f64::from(route_coefficient(cut, route, ngs)) * x)
        .sum();
    f64::from(cut.rhs) - lhs
}

/// Route flows scaled down by κ_p = min{κ, ⌈l(p)/2⌉}, with per-customer
/// dummy flows restoring each customer's degree to one so the network again
/// looks like a fractional vehicle-routing solution.
///
/// The dummy flows bypass a customer's real routes (depot → i′ → i and
/// i → i″ → end depot); they balance every node but never count as entries
/// into a candidate set, since the entries they stand in for are exactly the
/// ones scaling removed.
#[derive(Debug, Clone)]
pub struct ScaledNetwork {
    n: usize,
    /// Scaled flows on original arcs.
    flows: BTreeMap<(usize, usize), f64>,
    /// Flow on depot → i′ → i, one per customer (index 1..=n).
    dummy_in: Vec<f64>,
    /// Flow on i → i″ → end depot, one per customer (index 1..=n).
    dummy_out: Vec<f64>,
}

impl ScaledNetwork {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn flows(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.flows
    }

    pub fn dummy_in(&self, i: usize) -> f64 {
        self.dummy_in[i]
    }

    pub fn dummy_out(&self, i: usize) -> f64 {
        self.dummy_out[i]
    }

    /// Scaled flow entering the set over original arcs (the capacity-cut
    /// left-hand side for the scaled route flows).
    pub fn entering_flow(&self, members: &BitSet) -> f64 {
        self.flows
            .iter()
            .filter(|&(&(i, j), _)| !members.contains(i) && members.contains(j))
            .map(|(_, &f)| f)
            .sum()
    }

    /// Largest node-balance violation over customers, dummies, and the
    /// merged depot.
    pub fn conservation_residual(&self) -> f64 {
        let mut inflow = vec![0.0; self.n + 2];
        let mut outflow = vec![0.0; self.n + 2];
        for (&(i, j), &f) in &self.flows {
            outflow[i] += f;
            inflow[j] += f;
        }
        let mut worst: f64 = 0.0;
        let mut depot_out = outflow[0];
        let mut depot_in = inflow[self.n + 1];
        for i in 1..=self.n {
            let in_i = inflow[i] + self.dummy_in[i];
            let out_i = outflow[i] + self.dummy_out[i];
            worst = worst.max((in_i - out_i).abs());
            depot_out += self.dummy_in[i];
            depot_in += self.dummy_out[i];
        }
        worst.max((depot_out - depot_in).abs())
    }
}

/// Scales each route's flow by κ_p = min{kappa, ⌈l(p)/2⌉}, where l(p)
/// counts customer visits, and adds the balancing dummy flows.
pub fn build_scaled_network(sol: &FractionalSolution, kappa: u32) -> ScaledNetwork {
    assert!(kappa >= 1);
    let n = sol.n();
    let mut flows: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut visit_flow = vec![0.0; n + 2];
    for (route, x) in &sol.routes {
        let l = route.len() - 2;
        let kp = u32::min(kappa, (l as u32).div_ceil(2)).max(1);
        let scaled = x / f64::from(kp);
        for w in route.windows(2) {
            *flows.entry((w[0], w[1])).or_insert(0.0) += scaled;
        }
        for &v in &route[1..route.len() - 1] {
            visit_flow[v] += scaled;
        }
    }
    let mut dummy_in = vec![0.0; n + 1];
    let mut dummy_out = vec![0.0; n + 1];
    for i in 1..=n {
        // Original solutions serve each customer exactly once, so the
        // scaled deficit is nonnegative; clamp guards float dust only.
        dummy_in[i] = (1.0 - visit_flow[i]).max(0.0);
        dummy_out[i] = dummy_in[i];
    }
    ScaledNetwork {
        n,
        flows,
        dummy_in,
        dummy_out,
    }
}

/// Which cut kinds a solver run is allowed to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparationMode {
    /// Plain capacity cuts only.
    RobustOnly,
    /// ng-capacity cuts, falling back to plain capacity cuts.
    ResourceRobust,
    /// Strengthened capacity cuts, falling back to plain capacity cuts.
    NonRobust,
}

/// One evaluated candidate, retained for debug export.
#[derive(Debug, Clone)]
pub struct SeparationRecord {
    pub kappa: u32,
    pub members: BitSet,
    pub violation_cc: f64,
    pub violation_strong: f64,
    pub emitted: Option<CutKind>,
}

/// Per-call trace of candidate sets and their violations.
#[derive(Debug, Clone, Default)]
pub struct SeparationLog {
    pub records: Vec<SeparationRecord>,
}

impl SeparationLog {
    /// CSV lines `kappa,set,violation_cc,violation_strong,emitted`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kappa,set,violation_cc,violation_strong,emitted\n");
        for r in &self.records {
            let set = r
                .members
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("|");
            let emitted = r.emitted.map_or_else(|| "-".to_string(), |k| format!("{k:?}"));
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6},{}",
                r.kappa, set, r.violation_cc, r.violation_strong, emitted
            );
        }
        out
    }
}

/// Separates capacity-family cuts against a fractional solution.
///
/// For κ = 1..4: propose candidate sets from the κ-scaled network, evaluate
/// every candidate against the original solution, and emit the strongest
/// admissible kind per set. The first κ that yields cuts ends the
/// escalation; larger κ only matter when all weaker scalings come up empty.
pub fn separate(
    sol: &FractionalSolution,
    graph: &ProblemGraph,
    ngs: &NgNeighborhoods,
    mode: SeparationMode,
) -> Vec<Cut> {
    separate_logged(sol, graph, ngs, mode).0
}

/// [`separate`] plus the per-candidate evaluation trace.
pub fn separate_logged(
    sol: &FractionalSolution,
    graph: &ProblemGraph,
    ngs: &NgNeighborhoods,
    mode: SeparationMode,
) -> (Vec<Cut>, SeparationLog) {
    let n = sol.n();
    let mut log = SeparationLog::default();
    for kappa in 1..=MAX_KAPPA {
        let network = build_scaled_network(sol, kappa);
        let mut candidates = candidate_sets(&network, graph);
        if n <= EXHAUSTIVE_LIMIT {
            candidates.extend(all_subsets(n));
        }
        // Evaluate against the original solution; accept per thresholds.
        let mut accepted: Vec<(f64, Cut)> = Vec::new();
        let mut taken: BTreeSet<BitSet> = BTreeSet::new();
        for members in candidates {
            if !taken.insert(members.clone()) {
                continue;
            }
            let cc = Cut::capacity(CutKind::Cc, members.clone(), &graph.demands, graph.capacity);
            let v_cc = violation(&cc, sol, ngs);
            let strong_kind = match mode {
                SeparationMode::RobustOnly => None,
                SeparationMode::ResourceRobust => Some(CutKind::NgCc),
                SeparationMode::NonRobust => Some(CutKind::Scc),
            };
            let v_strong = strong_kind.map_or(f64::NEG_INFINITY, |kind| {
                let cut = Cut::capacity(kind, members.clone(), &graph.demands, graph.capacity);
                violation(&cut, sol, ngs)
            });
            let emitted = if v_strong >= STRONG_THRESHOLD.max(v_cc + CC_THRESHOLD) {
                strong_kind
            } else if v_cc >= CC_THRESHOLD {
                Some(CutKind::Cc)
            } else {
                None
            };
            log.records.push(SeparationRecord {
                kappa,
                members: members.clone(),
                violation_cc: v_cc,
                violation_strong: if strong_kind.is_some() {
                    v_strong
                } else {
                    f64::NAN
                },
                emitted,
            });
            if let Some(kind) = emitted {
                let score = if kind == CutKind::Cc { v_cc } else { v_strong };
                let cut = if kind == CutKind::Cc {
                    cc
                } else {
                    Cut::capacity(kind, members, &graph.demands, graph.capacity)
                };
                accepted.push((score, cut));
            }
        }
        if !accepted.is_empty() {
            // Best violations first; ties settle lexicographically by set so
            // reruns are reproducible.
            accepted.sort_by(|a, b| {
                b.0.partial_cmp(&a.0)
                    .unwrap()
                    .then_with(|| a.1.members.cmp(&b.1.members))
            });
            accepted.truncate(MAX_CUTS_PER_ROUND);
            return (accepted.into_iter().map(|(_, c)| c).collect(), log);
        }
    }
    (Vec::new(), log)
}

/// Candidate customer sets from one scaled network: connected components of
/// the support graph at two flow thresholds, each refined by a greedy
/// grow/shrink climb on the scaled entering-flow violation.
fn candidate_sets(network: &ScaledNetwork, graph: &ProblemGraph) -> Vec<BitSet> {
    let n = network.n();
    // Undirected customer-customer support weights.
    let mut weight: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (&(i, j), &f) in network.flows() {
        if i >= 1 && i <= n && j >= 1 && j <= n {
            let key = (i.min(j), i.max(j));
            *weight.entry(key).or_insert(0.0) += f;
        }
    }
    let mut out: Vec<BitSet> = Vec::new();
    for threshold in [0.5, 0.25] {
        let mut seen = vec![false; n + 1];
        for start in 1..=n {
            if seen[start] {
                continue;
            }
            // Depth-first sweep over edges at or above the threshold.
            let mut stack = vec![start];
            let mut component = Vec::new();
            seen[start] = true;
            while let Some(v) = stack.pop() {
                component.push(v);
                for u in 1..=n {
                    if !seen[u] {
                        let key = (u.min(v), u.max(v));
                        if weight.get(&key).copied().unwrap_or(0.0) >= threshold {
                            seen[u] = true;
                            stack.push(u);
                        }
                    }
                }
            }
            if component.len() >= 2 {
                let members: BitSet = component.iter().copied().collect();
                out.push(hill_climb(members.clone(), network, graph));
                out.push(members);
            }
        }
    }
    out
}

/// Greedy local search maximizing the scaled capacity-cut violation
/// rhs(S) − entering_flow(S), one vertex move at a time.
fn hill_climb(mut members: BitSet, network: &ScaledNetwork, graph: &ProblemGraph) -> BitSet {
    let n = network.n();
    let score = |s: &BitSet| {
        f64::from(cut_rhs(s, &graph.demands, graph.capacity)) - network.entering_flow(s)
    };
    let mut current = score(&members);
    loop {
        let mut best: Option<(f64, usize, bool)> = None;
        for v in 1..=n {
            let inside = members.contains(v);
            if inside && members.len() <= 2 {
                continue;
            }
            let mut trial = members.clone();
            if inside {
                trial.remove(v);
            } else {
                trial.insert(v);
            }
            let s = score(&trial);
            if s > current + 1e-12 && best.map_or(true, |(bs, _, _)| s > bs) {
                best = Some((s, v, inside));
            }
        }
        match best {
            Some((s, v, inside)) => {
                if inside {
                    members.remove(v);
                } else {
                    members.insert(v);
                }
                current = s;
            }
            None => return members,
        }
    }
}

/// Every nonempty customer subset, for exhaustive small-instance separation.
fn all_subsets(n: usize) -> Vec<BitSet> {
    let mut out = Vec::with_capacity((1usize << n) - 1);
    for mask in 1u32..(1u32 << n) {
        let mut s = BitSet::new(n + 1);
        for v in 1..=n {
            if mask & (1 << (v - 1)) != 0 {
                s.insert(v);
            }
        }
        out.push(s);
    }
    out
}
