//! CVRP instances: TSPLIB-style parsing, demand scaling and construction of
//! the directed pricing graph.
//!
//! Vertices are numbered `0` (start depot), `1..=n` (customers) and `n+1`
//! (end depot, same physical location as the start depot). Distances follow
//! the EUC_2D convention: nearest-integer Euclidean.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("demand scale factor must be positive and finite, got {0}")]
    BadAlpha(f64),
}

fn parse_err(line: usize, msg: impl Into<String>) -> InstanceError {
    InstanceError::Parse {
        line,
        msg: msg.into(),
    }
}

/// A parsed instance. `coords[0]`/`demands[0]` belong to the depot; customer
/// `i` lives at index `i` for `1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CvrpInstance {
    pub name: String,
    /// Number of customers (excluding the depot).
    pub n: usize,
    pub coords: Vec<(f64, f64)>,
    pub demands: Vec<u32>,
    pub capacity: u32,
    /// Demand scale factor already applied to `demands` (1 for raw files).
    pub alpha: f64,
}

/// Parses the TSPLIB CVRP layout (NAME, DIMENSION, CAPACITY,
/// NODE_COORD_SECTION, DEMAND_SECTION, DEPOT_SECTION). Node ids in the file
/// are 1-based with the depot required to be node 1.
pub fn parse_instance(text: &str) -> Result<CvrpInstance, InstanceError> {
    let mut name = String::new();
    let mut dimension: Option<usize> = None;
    let mut capacity: Option<u32> = None;
    let mut coords: Vec<Option<(f64, f64)>> = Vec::new();
    let mut demands: Vec<Option<i64>> = Vec::new();
    let mut depot: Option<usize> = None;

    enum Section {
        None,
        Coords,
        Demands,
        Depot,
    }
    let mut section = Section::None;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        // Header keys may appear as "KEY : value" or "KEY: value".
        let upper = line.to_ascii_uppercase();
        if upper.starts_with("EOF") {
            break;
        }
        if let Some(rest) = split_header(line, "NAME") {
            name = rest.to_string();
            continue;
        }
        if split_header(line, "COMMENT").is_some() || split_header(line, "TYPE").is_some() {
            continue;
        }
        if let Some(rest) = split_header(line, "DIMENSION") {
            let d: usize = rest
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad DIMENSION value '{rest}'")))?;
            if d < 2 {
                return Err(parse_err(lineno, "DIMENSION must be at least 2"));
            }
            dimension = Some(d);
            coords = vec![None; d];
            demands = vec![None; d];
            continue;
        }
        if let Some(rest) = split_header(line, "EDGE_WEIGHT_TYPE") {
            if rest != "EUC_2D" {
                return Err(parse_err(
                    lineno,
                    format!("unsupported EDGE_WEIGHT_TYPE '{rest}' (only EUC_2D)"),
                ));
            }
            continue;
        }
        if let Some(rest) = split_header(line, "CAPACITY") {
            let q: u32 = rest
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad CAPACITY value '{rest}'")))?;
            capacity = Some(q);
            continue;
        }
        match upper.as_str() {
            "NODE_COORD_SECTION" => {
                section = Section::Coords;
                continue;
            }
            "DEMAND_SECTION" => {
                section = Section::Demands;
                continue;
            }
            "DEPOT_SECTION" => {
                section = Section::Depot;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Coords => {
                let mut parts = line.split_whitespace();
                let id: usize = next_num(&mut parts, lineno, "node id")?;
                let x: f64 = next_num(&mut parts, lineno, "x coordinate")?;
                let y: f64 = next_num(&mut parts, lineno, "y coordinate")?;
                let slot = coords
                    .get_mut(id.wrapping_sub(1))
                    .ok_or_else(|| parse_err(lineno, format!("node id {id} out of range")))?;
                *slot = Some((x, y));
            }
            Section::Demands => {
                let mut parts = line.split_whitespace();
                let id: usize = next_num(&mut parts, lineno, "node id")?;
                let q: f64 = next_num(&mut parts, lineno, "demand")?;
                if q.fract() != 0.0 || q < 0.0 {
                    return Err(parse_err(lineno, format!("non-integer demand '{q}'")));
                }
                let slot = demands
                    .get_mut(id.wrapping_sub(1))
                    .ok_or_else(|| parse_err(lineno, format!("node id {id} out of range")))?;
                *slot = Some(q as i64);
            }
            Section::Depot => {
                let v: i64 = line
                    .split_whitespace()
                    .next()
                    .unwrap()
                    .parse()
                    .map_err(|_| parse_err(lineno, "bad depot id"))?;
                if v == -1 {
                    section = Section::None;
                } else if depot.is_some() {
                    return Err(parse_err(lineno, "more than one depot listed"));
                } else {
                    depot = Some(v as usize);
                }
            }
            Section::None => {
                return Err(parse_err(lineno, format!("unexpected line '{line}'")));
            }
        }
    }

    let dimension = dimension.ok_or_else(|| parse_err(0, "missing DIMENSION"))?;
    let capacity = capacity.ok_or_else(|| parse_err(0, "missing CAPACITY"))?;
    match depot {
        Some(1) => {}
        Some(d) => return Err(parse_err(0, format!("depot must be node 1, got {d}"))),
        None => return Err(parse_err(0, "missing DEPOT_SECTION")),
    }

    let mut out_coords = Vec::with_capacity(dimension);
    let mut out_demands = Vec::with_capacity(dimension);
    for i in 0..dimension {
        let c = coords[i].ok_or_else(|| parse_err(0, format!("node {} has no coordinates", i + 1)))?;
        let q = demands[i].ok_or_else(|| parse_err(0, format!("node {} has no demand", i + 1)))?;
        out_coords.push(c);
        out_demands.push(q);
    }
    if out_demands[0] != 0 {
        return Err(parse_err(0, "depot demand must be 0"));
    }
    for (i, &q) in out_demands.iter().enumerate().skip(1) {
        if q <= 0 {
            return Err(parse_err(0, format!("customer {} demand must be positive", i + 1)));
        }
        if q as u64 > capacity as u64 {
            return Err(parse_err(
                0,
                format!("customer {} demand {} exceeds capacity {}", i + 1, q, capacity),
            ));
        }
    }

    Ok(CvrpInstance {
        name,
        n: dimension - 1,
        coords: out_coords,
        demands: out_demands.into_iter().map(|q| q as u32).collect(),
        capacity,
        alpha: 1.0,
    })
}

fn split_header<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let rest = line.strip_prefix(key)?;
    let rest = rest.trim_start();
    let rest = rest.strip_prefix(':')?;
    Some(rest.trim())
}

fn next_num<T: std::str::FromStr>(
    parts: &mut std::str::SplitWhitespace<'_>,
    line: usize,
    what: &str,
) -> Result<T, InstanceError> {
    let tok = parts
        .next()
        .ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("bad {what} '{tok}'")))
}

/// Re-emits the instance in the same TSPLIB layout that `parse_instance`
/// accepts, so that parse ∘ serialize is the identity on
/// (n, capacity, demands, coords).
pub fn serialize_instance(inst: &CvrpInstance) -> String {
    let mut s = String::new();
    s.push_str(&format!("NAME : {}\n", inst.name));
    s.push_str("TYPE : CVRP\n");
    s.push_str(&format!("DIMENSION : {}\n", inst.n + 1));
    s.push_str("EDGE_WEIGHT_TYPE : EUC_2D\n");
    s.push_str(&format!("CAPACITY : {}\n", inst.capacity));
    s.push_str("NODE_COORD_SECTION\n");
    for (i, (x, y)) in inst.coords.iter().enumerate() {
        if x.fract() == 0.0 && y.fract() == 0.0 {
            s.push_str(&format!(" {} {} {}\n", i + 1, *x as i64, *y as i64));
        } else {
            s.push_str(&format!(" {} {} {}\n", i + 1, x, y));
        }
    }
    s.push_str("DEMAND_SECTION\n");
    for (i, q) in inst.demands.iter().enumerate() {
        s.push_str(&format!("{} {}\n", i + 1, q));
    }
    s.push_str("DEPOT_SECTION\n 1\n -1\nEOF\n");
    s
}

/// Scales every customer demand by `alpha`, rounding half up and capping at
/// the vehicle capacity: q ← min(⌊alpha·q + 0.5⌋, Q). The instance name
/// gains the conventional class tag (alpha 2 turns "B-n31-k5" into
/// "B2-n31-k5", alpha 1.5 into "B15-n31-k5").
pub fn scale_demands(inst: &CvrpInstance, alpha: f64) -> Result<CvrpInstance, InstanceError> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(InstanceError::BadAlpha(alpha));
    }
    let mut out = inst.clone();
    out.alpha = alpha;
    if alpha != 1.0 {
        for q in out.demands.iter_mut().skip(1) {
            let scaled = (*q as f64 * alpha + 0.5).floor();
            *q = (scaled as u64).min(inst.capacity as u64) as u32;
        }
        out.name = scaled_name(&inst.name, alpha);
    }
    Ok(out)
}

/// "B-n31-k5" with alpha 2 → "B2-n31-k5"; alpha 1.25 → "B125-n31-k5".
/// The tag is alpha·100 with trailing zeros trimmed, inserted after the
/// class prefix.
pub fn scaled_name(name: &str, alpha: f64) -> String {
    if alpha == 1.0 {
        return name.to_string();
    }
    let mut tag = format!("{}", (alpha * 100.0).round() as i64);
    while tag.len() > 1 && tag.ends_with('0') {
        tag.pop();
    }
    match name.split_once('-') {
        Some((class, rest)) => format!("{class}{tag}-{rest}"),
        None => format!("{name}{tag}"),
    }
}

/// Directed pricing graph over vertices `0..=n+1`. Arcs run from the start
/// depot to customers, between distinct customers, and from customers to the
/// end depot. Branching decisions remove arcs via [`ProblemGraph::forbid`].
#[derive(Debug, Clone)]
pub struct ProblemGraph {
    pub n: usize,
    pub capacity: u32,
    /// Demand per vertex; 0 at both depot indices.
    pub demands: Vec<u32>,
    /// Dense cost matrix, row-major with width n+2.
    cost: Vec<i64>,
    /// Arc presence, same layout as `cost`.
    allowed: Vec<bool>,
}

/// Nearest-integer Euclidean distance (TSPLIB EUC_2D).
pub fn euc_2d(a: (f64, f64), b: (f64, f64)) -> i64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    ((dx * dx + dy * dy).sqrt() + 0.5).floor() as i64
}

pub fn build_graph(inst: &CvrpInstance) -> ProblemGraph {
    let n = inst.n;
    let w = n + 2;
    let coord = |v: usize| {
        if v == n + 1 {
            inst.coords[0]
        } else {
            inst.coords[v]
        }
    };
    let mut cost = vec![0i64; w * w];
    let mut allowed = vec![false; w * w];
    for i in 0..w {
        for j in 0..w {
            cost[i * w + j] = euc_2d(coord(i), coord(j));
            let arc_ok = i != j
                && j != 0            // nothing enters the start depot
                && i != n + 1        // nothing leaves the end depot
                && !(i == 0 && j == n + 1); // no empty route
            allowed[i * w + j] = arc_ok;
        }
    }
    let mut demands = inst.demands.clone();
    demands.push(0); // end depot
    ProblemGraph {
        n,
        capacity: inst.capacity,
        demands,
        cost,
        allowed,
    }
}

impl ProblemGraph {
    pub fn n_vertices(&self) -> usize {
        self.n + 2
    }

    pub fn end_depot(&self) -> usize {
        self.n + 1
    }

    pub fn cost(&self, i: usize, j: usize) -> i64 {
        self.cost[i * (self.n + 2) + j]
    }

    pub fn is_allowed(&self, i: usize, j: usize) -> bool {
        self.allowed[i * (self.n + 2) + j]
    }

    pub fn forbid(&mut self, i: usize, j: usize) {
        self.allowed[i * (self.n + 2) + j] = false;
    }

    pub fn demand(&self, v: usize) -> u32 {
        self.demands[v]
    }

    pub fn arc_count(&self) -> usize {
        self.allowed.iter().filter(|&&a| a).count()
    }

    /// Total cost of a vertex sequence (not necessarily a legal route).
    pub fn route_cost(&self, route: &[usize]) -> i64 {
        route.windows(2).map(|w| self.cost(w[0], w[1])).sum()
    }

    /// Whether every consecutive arc of the sequence is currently allowed.
    pub fn route_allowed(&self, route: &[usize]) -> bool {
        route.windows(2).all(|w| self.is_allowed(w[0], w[1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_text() -> String {
        "NAME : tiny\nTYPE : CVRP\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nCAPACITY : 10\n\
         NODE_COORD_SECTION\n1 0 0\n2 3 4\n3 6 8\nDEMAND_SECTION\n1 0\n2 3\n3 4\n\
         DEPOT_SECTION\n 1\n -1\nEOF\n"
            .to_string()
    }

    #[test]
    fn parses_hand_written_file() {
        let inst = parse_instance(&tiny_text()).unwrap();
        assert_eq!(inst.name, "tiny");
        assert_eq!(inst.n, 2);
        assert_eq!(inst.capacity, 10);
        assert_eq!(inst.demands, vec![0, 3, 4]);
        assert_eq!(inst.coords[1], (3.0, 4.0));
    }

    #[test]
    fn zero_customer_demand_rejected() {
        let text = tiny_text().replace("2 3\n", "2 0\n");
        let err = parse_instance(&text).unwrap_err();
        assert!(err.to_string().contains("positive"), "{err}");
    }

    #[test]
    fn missing_capacity_rejected() {
        let text = tiny_text().replace("CAPACITY : 10\n", "");
        let err = parse_instance(&text).unwrap_err();
        assert!(err.to_string().contains("CAPACITY"), "{err}");
    }

    #[test]
    fn round_trip_is_identity() {
        let inst = parse_instance(&tiny_text()).unwrap();
        let again = parse_instance(&serialize_instance(&inst)).unwrap();
        assert_eq!(inst, again);
    }

    #[test]
    fn scaling_rounds_half_up_and_caps() {
        let mut inst = parse_instance(&tiny_text()).unwrap();
        inst.demands = vec![0, 10, 80];
        inst.capacity = 100;
        let s = scale_demands(&inst, 1.5).unwrap();
        assert_eq!(s.demands[1], 15);
        let s = scale_demands(&inst, 2.0).unwrap();
        assert_eq!(s.demands[2], 100); // 160 capped at Q
        inst.demands = vec![0, 7, 7];
        let s = scale_demands(&inst, 1.25).unwrap();
        assert_eq!(s.demands[1], 9); // 8.75 rounds half up
    }

    #[test]
    fn scaling_alpha_one_is_identity() {
        let inst = parse_instance(&tiny_text()).unwrap();
        let s = scale_demands(&inst, 1.0).unwrap();
        assert_eq!(s.demands, inst.demands);
        assert_eq!(s.name, inst.name);
    }

    #[test]
    fn bad_alpha_rejected() {
        let inst = parse_instance(&tiny_text()).unwrap();
        assert!(scale_demands(&inst, 0.0).is_err());
        assert!(scale_demands(&inst, -1.0).is_err());
    }

    #[test]
    fn scaled_names_match_class_convention() {
        assert_eq!(scaled_name("B-n31-k5", 2.0), "B2-n31-k5");
        assert_eq!(scaled_name("A-n32-k5", 1.25), "A125-n32-k5");
        assert_eq!(scaled_name("A-n32-k5", 1.5), "A15-n32-k5");
        assert_eq!(scaled_name("A-n32-k5", 1.75), "A175-n32-k5");
        assert_eq!(scaled_name("A-n32-k5", 1.0), "A-n32-k5");
    }

    #[test]
    fn euclidean_rounding() {
        assert_eq!(euc_2d((0.0, 0.0), (3.0, 4.0)), 5);
        assert_eq!(euc_2d((0.0, 0.0), (1.0, 1.0)), 1); // 1.414 rounds to 1
        assert_eq!(euc_2d((0.0, 0.0), (0.0, 0.0)), 0);
    }

    #[test]
    fn graph_shape_and_symmetry() {
        let inst = parse_instance(&tiny_text()).unwrap();
        let g = build_graph(&inst);
        // n customers: n·(n-1) customer arcs + n from depot + n to end depot.
        assert_eq!(g.arc_count(), 2 * 1 + 2 + 2);
        assert!(!g.is_allowed(0, g.end_depot()));
        assert!(!g.is_allowed(1, 0));
        assert!(!g.is_allowed(g.end_depot(), 1));
        assert_eq!(g.cost(1, 2), g.cost(2, 1));
        assert_eq!(g.cost(0, 1), g.cost(1, g.end_depot()));
    }
}
