//! Brute-force oracles for the acceptance suite.
//!
//! Everything here recomputes its answer from first principles — straight
//! simulations, exhaustive enumeration, and subset dynamic programming —
//! deliberately sharing no code with the library's own algorithms, so a bug
//! on either side shows up as a disagreement.

use cvrp_bpc::bits::BitSet;
use cvrp_bpc::cuts::{Cut, CutKind};
use cvrp_bpc::instance::{CvrpInstance, ProblemGraph};
use cvrp_bpc::lp::{LinearProgram, LpStatus, Sense};
use cvrp_bpc::pricing::{DualValues, NgNeighborhoods};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random Euclidean instance on an integer grid.
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    n: usize,
    demand_lo: u32,
    demand_hi: u32,
    capacity: u32,
) -> CvrpInstance {
    let coords = (0..=n)
        .map(|_| {
            (
                rng.random_range(0..=60) as f64,
                rng.random_range(0..=60) as f64,
            )
        })
        .collect();
    let mut demands = vec![0u32];
    for _ in 0..n {
        demands.push(rng.random_range(demand_lo..=demand_hi));
    }
    CvrpInstance {
        name: "oracle".into(),
        n,
        coords,
        demands,
        capacity,
        alpha: 1.0,
    }
}

/// Per-customer neighborhoods of the given size with random members.
pub fn random_neighborhoods(rng: &mut ChaCha8Rng, n: usize, size: usize) -> NgNeighborhoods {
    let mut sets = vec![BitSet::new(n + 1)];
    for i in 1..=n {
        let mut s = BitSet::new(n + 1);
        s.insert(i);
        let mut others: Vec<usize> = (1..=n).filter(|&j| j != i).collect();
        others.shuffle(rng);
        for &j in others.iter().take(size.saturating_sub(1)) {
            s.insert(j);
        }
        sets.push(s);
    }
    NgNeighborhoods::from_sets(sets)
}

/// Simulates the ng-memory along a route and returns the memory state seen
/// at each position: `memories[k]` is the memory BEFORE visiting
/// `route[k+1]` (position 0 is the start depot with empty memory).
fn memory_trace(route: &[usize], n: usize, ngs: &NgNeighborhoods) -> Vec<BitSet> {
    let mut memories = Vec::with_capacity(route.len());
    let mut pi = BitSet::new(n + 1);
    for &v in &route[..route.len() - 1] {
        if v >= 1 && v <= n {
            pi.intersect_with(ngs.set(v));
            pi.insert(v);
        }
        memories.push(pi.clone());
    }
    memories
}

/// True when no visit returns to a customer the memory still holds.
pub fn ng_feasible(route: &[usize], n: usize, ngs: &NgNeighborhoods) -> bool {
    let mut pi = BitSet::new(n + 1);
    for &v in &route[1..route.len() - 1] {
        if pi.contains(v) {
            return false;
        }
        pi.intersect_with(ngs.set(v));
        pi.insert(v);
    }
    true
}

/// Independent cut coefficient: counts by direct simulation instead of the
/// library's incremental fold.
pub fn oracle_coefficient(cut: &Cut, route: &[usize], n: usize, ngs: &NgNeighborhoods) -> u32 {
    let customers = &route[1..route.len() - 1];
    match cut.kind {
        CutKind::Scc => u32::from(customers.iter().any(|&v| cut.members.contains(v))),
        CutKind::Cc | CutKind::KPath => {
            let mut count = 0;
            for w in route.windows(2) {
                if !cut.members.contains(w[0]) && cut.members.contains(w[1]) {
                    count += 1;
                }
            }
            count
        }
        CutKind::NgCc => {
            let memories = memory_trace(route, n, ngs);
            let mut count = 0;
            for (k, w) in route.windows(2).enumerate() {
                if !cut.members.contains(w[0])
                    && cut.members.contains(w[1])
                    && memories[k].is_disjoint(&cut.members)
                {
                    count += 1;
                }
            }
            count
        }
        CutKind::Sdc => u32::from(customers.contains(&cut.vertex())),
        CutKind::NgSdc => {
            let v = cut.vertex();
            let memories = memory_trace(route, n, ngs);
            let mut count = 0;
            for (k, w) in route.windows(2).enumerate() {
                if w[1] == v && !memories[k].contains(v) {
                    count += 1;
                }
            }
            count
        }
    }
}

/// Reduced cost computed longhand from the route, duals and cuts.
pub fn oracle_reduced_cost(
    route: &[usize],
    graph: &ProblemGraph,
    duals: &DualValues,
    cuts: &[Cut],
    ngs: &NgNeighborhoods,
) -> f64 {
    let mut rcost = 0.0;
    for w in route.windows(2) {
        rcost += graph.cost(w[0], w[1]) as f64;
    }
    for &v in &route[1..route.len() - 1] {
        rcost -= duals.mu[v];
    }
    for (cut, &g) in cuts.iter().zip(&duals.gamma) {
        rcost -= g * f64::from(oracle_coefficient(cut, route, graph.n, ngs));
    }
    rcost
}

/// Every capacity-feasible depot-to-depot walk (revisits allowed); customer
/// demand is charged on every visit, which bounds the enumeration.
pub fn all_walks(graph: &ProblemGraph) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut path = vec![0usize];
    walk_dfs(graph, &mut path, 0, &mut out, &mut |_, _| true);
    out
}

/// Every capacity-feasible ng-walk under the given neighborhoods.
pub fn all_ng_walks(graph: &ProblemGraph, ngs: &NgNeighborhoods) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut path = vec![0usize];
    let n = graph.n;
    walk_dfs(graph, &mut path, 0, &mut out, &mut |path, next| {
        let mut pi = BitSet::new(n + 1);
        for &v in &path[1..] {
            pi.intersect_with(ngs.set(v));
            pi.insert(v);
        }
        !pi.contains(next)
    });
    out
}

fn walk_dfs(
    graph: &ProblemGraph,
    path: &mut Vec<usize>,
    load: u32,
    out: &mut Vec<Vec<usize>>,
    admit: &mut impl FnMut(&[usize], usize) -> bool,
) {
    let here = *path.last().unwrap();
    let end = graph.end_depot();
    if path.len() > 1 && graph.is_allowed(here, end) {
        let mut route = path.clone();
        route.push(end);
        out.push(route);
    }
    for j in 1..=graph.n {
        if graph.is_allowed(here, j) && load + graph.demand(j) <= graph.capacity && admit(path, j)
        {
            path.push(j);
            walk_dfs(graph, path, load + graph.demand(j), out, admit);
            path.pop();
        }
    }
}

/// Every elementary capacity-feasible route, one per customer subset and
/// order (used where column sets must match the partition oracle).
pub fn all_elementary_routes(graph: &ProblemGraph) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut path = vec![0usize];
    walk_dfs(graph, &mut path, 0, &mut out, &mut |path, next| {
        !path.contains(&next)
    });
    out
}

/// Exact route cost by summing arcs.
pub fn route_cost(graph: &ProblemGraph, route: &[usize]) -> i64 {
    route.windows(2).map(|w| graph.cost(w[0], w[1])).sum()
}

/// Cheapest elementary route serving exactly the customers in `mask`
/// (bit i-1 = customer i), via open-path subset DP, or None when the
/// subset exceeds capacity.
fn best_route_over_subset(graph: &ProblemGraph, mask: usize) -> Option<i64> {
    let n = graph.n;
    let members: Vec<usize> = (1..=n).filter(|&i| mask & (1 << (i - 1)) != 0).collect();
    let load: u32 = members.iter().map(|&i| graph.demand(i)).sum();
    if load > graph.capacity {
        return None;
    }
    let m = members.len();
    // dp[s][k] = cheapest path depot -> ... -> members[k] visiting set s.
    let mut dp = vec![vec![i64::MAX; m]; 1 << m];
    for k in 0..m {
        dp[1 << k][k] = graph.cost(0, members[k]);
    }
    for s in 1..(1 << m) {
        for k in 0..m {
            let cur = dp[s][k];
            if cur == i64::MAX || s & (1 << k) == 0 {
                continue;
            }
            for t in 0..m {
                if s & (1 << t) == 0 {
                    let ns = s | (1 << t);
                    let cand = cur + graph.cost(members[k], members[t]);
                    if cand < dp[ns][t] {
                        dp[ns][t] = cand;
                    }
                }
            }
        }
    }
    let full = (1 << m) - 1;
    (0..m)
        .map(|k| dp[full][k].saturating_add(graph.cost(members[k], graph.end_depot())))
        .min()
}

/// Integer optimum by dynamic programming over customer subsets: the
/// cheapest way to partition every customer into feasible routes.
pub fn integer_optimum(graph: &ProblemGraph) -> Option<i64> {
    let n = graph.n;
    let full = (1usize << n) - 1;
    let mut route_cost = vec![None; full + 1];
    for mask in 1..=full {
        route_cost[mask] = best_route_over_subset(graph, mask);
    }
    let mut dp = vec![i64::MAX; full + 1];
    dp[0] = 0;
    for mask in 1..=full {
        // Iterate subsets of `mask` that contain its lowest set bit, so each
        // partition is counted once.
        let low = mask & mask.wrapping_neg();
        let mut sub = mask;
        loop {
            if sub & low != 0 {
                if let (Some(rc), rest) = (route_cost[sub], mask ^ sub) {
                    if dp[rest] != i64::MAX {
                        let cand = dp[rest] + rc;
                        if cand < dp[mask] {
                            dp[mask] = cand;
                        }
                    }
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & mask;
        }
    }
    (dp[full] != i64::MAX).then_some(dp[full])
}

/// Objective of the LP with one equality row per customer (coefficient =
/// visit count), plus one `>=` row per cut, over the given columns.
/// Returns None when the LP is not solved to optimality.
pub fn lp_over_columns(
    graph: &ProblemGraph,
    routes: &[Vec<usize>],
    cuts: &[Cut],
    ngs: &NgNeighborhoods,
) -> Option<f64> {
    let n = graph.n;
    let mut lp = LinearProgram::new();
    let customer_rows: Vec<_> = (1..=n).map(|_| lp.add_row(Sense::Eq, 1.0)).collect();
    let cut_rows: Vec<_> = cuts
        .iter()
        .map(|c| lp.add_row(Sense::Ge, f64::from(c.rhs)))
        .collect();
    for route in routes {
        let mut coeffs: Vec<(cvrp_bpc::lp::RowId, f64)> = Vec::new();
        for (i, &row) in customer_rows.iter().enumerate() {
            let visits = route[1..route.len() - 1]
                .iter()
                .filter(|&&v| v == i + 1)
                .count();
            if visits > 0 {
                coeffs.push((row, visits as f64));
            }
        }
        for (c, &row) in cuts.iter().zip(&cut_rows) {
            let g = oracle_coefficient(c, route, n, ngs);
            if g > 0 {
                coeffs.push((row, f64::from(g)));
            }
        }
        lp.add_column(route_cost(graph, route) as f64, &coeffs)
            .unwrap();
    }
    let sol = lp.solve();
    (sol.status == LpStatus::Optimal).then_some(sol.objective)
}

/// Primal values of the same LP, paired with the route list indices.
pub fn lp_solution_over_columns(
    graph: &ProblemGraph,
    routes: &[Vec<usize>],
    cuts: &[Cut],
    ngs: &NgNeighborhoods,
) -> Option<Vec<f64>> {
    let n = graph.n;
    let mut lp = LinearProgram::new();
    let customer_rows: Vec<_> = (1..=n).map(|_| lp.add_row(Sense::Eq, 1.0)).collect();
    let cut_rows: Vec<_> = cuts
        .iter()
        .map(|c| lp.add_row(Sense::Ge, f64::from(c.rhs)))
        .collect();
    for route in routes {
        let mut coeffs: Vec<(cvrp_bpc::lp::RowId, f64)> = Vec::new();
        for (i, &row) in customer_rows.iter().enumerate() {
            let visits = route[1..route.len() - 1]
                .iter()
                .filter(|&&v| v == i + 1)
                .count();
            if visits > 0 {
                coeffs.push((row, visits as f64));
            }
        }
        for (c, &row) in cuts.iter().zip(&cut_rows) {
            let g = oracle_coefficient(c, route, n, ngs);
            if g > 0 {
                coeffs.push((row, f64::from(g)));
            }
        }
        lp.add_column(route_cost(graph, route) as f64, &coeffs)
            .unwrap();
    }
    let sol = lp.solve();
    (sol.status == LpStatus::Optimal).then_some(sol.primal[..routes.len()].to_vec())
}
