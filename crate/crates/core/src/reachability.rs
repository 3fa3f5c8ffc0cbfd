//! The reachability structure of a rainbow matching `M`.
//!
//! * `E_0`: matching edges whose tail meets many external edges of free
//!   colours (`C_0`). Their colours are the flexible colours `F`.
//! * good / bad external `F`-edges.
//! * levels `E_1, E_2, ...` of reachable matching edges, each oriented tail
//!   to head, with heads `V_i` and colours `R_i`, built until a level falls
//!   below the stop threshold.
//!
//! Every `alpha * x` threshold is read as `max(1, ceil(alpha * x))`, and
//! when both orientations of an edge qualify the tail is the endpoint with
//! the smaller index.

use std::collections::BTreeMap;

use num_rational::Rational64;
use serde::Serialize;

use crate::matching::RainbowMatching;
use crate::multigraph::{rational_to_f64, Colour, ColouredMultigraph, EdgeId, InstanceParams, Vertex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct OrientedEdge {
    pub edge: EdgeId,
    pub tail: Vertex,
    pub head: Vertex,
}

/// Signal that `M` uses every colour, so `C_0` is empty and there is
/// nothing to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FullColour;

/// Picks the orientation of a matching edge: the first of (smaller, larger)
/// endpoint that qualifies as tail.
fn orient<T>(
    graph: &ColouredMultigraph,
    edge: EdgeId,
    mut qualifies: impl FnMut(Vertex) -> Option<T>,
) -> Option<(OrientedEdge, T)> {
    let (a, b) = graph.edge(edge).pair();
    for (tail, head) in [(a, b), (b, a)] {
        if let Some(t) = qualifies(tail) {
            return Some((OrientedEdge { edge, tail, head }, t));
        }
    }
    None
}

/// Per covered vertex, the external edges of free colours at it, as
/// `(edge, free endpoint)` pairs in EdgeId order.
fn external_free_colour_edges(
    graph: &ColouredMultigraph,
    matching: &RainbowMatching,
) -> Vec<Vec<(EdgeId, Vertex)>> {
    let mut out = vec![Vec::new(); graph.num_vertices()];
    for (id, e) in graph.edges() {
        if matching.uses_colour(e.colour) {
            continue;
        }
        match (matching.covers(e.u), matching.covers(e.v)) {
            (true, false) => out[e.u].push((id, e.v)),
            (false, true) => out[e.v].push((id, e.u)),
            _ => {}
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FlexibleStructure {
    /// `E_0`, in EdgeId order.
    pub e0: Vec<OrientedEdge>,
    /// `S_0`: heads of `E_0`, ascending.
    pub s0: Vec<Vertex>,
    /// `F = C(E_0)`, ascending.
    pub flexible_colours: Vec<Colour>,
    /// `max(1, ceil(alpha |C_0|))`.
    pub threshold: usize,
    /// `max(1, ceil(alpha |C_0| / 2))`, used to call external `F`-edges good.
    pub half_threshold: usize,
    pub free_colour_count: usize,
    #[serde(skip)]
    is_flexible: Vec<bool>,
    #[serde(skip)]
    e0_of_colour: Vec<Option<OrientedEdge>>,
    #[serde(skip)]
    external_free: Vec<Vec<(EdgeId, Vertex)>>,
}

impl FlexibleStructure {
    pub fn is_flexible(&self, colour: Colour) -> bool {
        self.is_flexible[colour]
    }

    /// The `E_0` edge of a flexible colour.
    pub fn oriented(&self, colour: Colour) -> Option<OrientedEdge> {
        self.e0_of_colour[colour]
    }

    /// External `C_0`-edges at a covered vertex, with their free endpoints.
    pub fn external_free_at(&self, vertex: Vertex) -> &[(EdgeId, Vertex)] {
        &self.external_free[vertex]
    }

    pub fn size(&self) -> usize {
        self.flexible_colours.len()
    }
}

/// `E_0`: matching edges orientable so that the tail meets at least
/// `max(1, ceil(alpha |C_0|))` external `C_0`-edges.
pub fn compute_flexible(
    graph: &ColouredMultigraph,
    matching: &RainbowMatching,
    params: &InstanceParams,
) -> Result<FlexibleStructure, FullColour> {
    let free_colour_count = graph.num_colours() - matching.colours().len();
    if free_colour_count == 0 {
        return Err(FullColour);
    }
    let threshold = params.threshold(free_colour_count);
    let external_free = external_free_colour_edges(graph, matching);
    let mut e0 = Vec::new();
    let mut is_flexible = vec![false; graph.num_colours()];
    let mut e0_of_colour = vec![None; graph.num_colours()];
    for &id in matching.edges() {
        let found = orient(graph, id, |tail| {
            (external_free[tail].len() >= threshold).then_some(())
        });
        if let Some((oriented, ())) = found {
            let colour = graph.colour(id);
            is_flexible[colour] = true;
            e0_of_colour[colour] = Some(oriented);
            e0.push(oriented);
        }
    }
    let mut s0: Vec<Vertex> = e0.iter().map(|o| o.head).collect();
    s0.sort_unstable();
    let flexible_colours = (0..graph.num_colours())
        .filter(|&c| is_flexible[c])
        .collect();
    Ok(FlexibleStructure {
        e0,
        s0,
        flexible_colours,
        threshold,
        half_threshold: params.half_threshold(free_colour_count),
        free_colour_count,
        is_flexible,
        e0_of_colour,
        external_free,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ClassifiedEdge {
    pub edge: EdgeId,
    pub colour: Colour,
    pub covered: Vertex,
    pub free: Vertex,
    /// External `C_0`-edges at `m_c` avoiding both endpoints of this edge.
    pub disjoint_support: usize,
    pub good: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GoodBadReport {
    /// `max(1, ceil(alpha |C_0| / 2))`.
    pub half_threshold: usize,
    /// Every external `F`-edge, in EdgeId order.
    pub edges: Vec<ClassifiedEdge>,
    /// Bad-edge count for every flexible colour (zero entries included).
    pub bad_per_colour: BTreeMap<Colour, usize>,
    #[serde(skip)]
    good_at: Vec<Vec<EdgeId>>,
    #[serde(skip)]
    good_flag: Vec<bool>,
}

impl GoodBadReport {
    /// Good `F`-edges whose covered endpoint is `vertex`, in EdgeId order.
    pub fn good_at(&self, vertex: Vertex) -> &[EdgeId] {
        &self.good_at[vertex]
    }

    pub fn is_good(&self, edge: EdgeId) -> bool {
        self.good_flag[edge.0]
    }

    pub fn good_count(&self) -> usize {
        self.edges.iter().filter(|c| c.good).count()
    }

    pub fn max_bad(&self) -> usize {
        self.bad_per_colour.values().copied().max().unwrap_or(0)
    }
}

/// An external `c`-edge with `c ∈ F` is good when `m_c` meets at least
/// `max(1, ceil(alpha |C_0| / 2))` external `C_0`-edges sharing no endpoint
/// with it.
pub fn classify_good_bad(
    graph: &ColouredMultigraph,
    matching: &RainbowMatching,
    flex: &FlexibleStructure,
) -> GoodBadReport {
    let half_threshold = flex.half_threshold;
    let mut edges = Vec::new();
    let mut bad_per_colour: BTreeMap<Colour, usize> =
        flex.flexible_colours.iter().map(|&c| (c, 0)).collect();
    let mut good_at = vec![Vec::new(); graph.num_vertices()];
    let mut good_flag = vec![false; graph.num_edges()];
    for (id, e) in graph.edges() {
        if !flex.is_flexible(e.colour) {
            continue;
        }
        let (covered, free) = match (matching.covers(e.u), matching.covers(e.v)) {
            (true, false) => (e.u, e.v),
            (false, true) => (e.v, e.u),
            _ => continue,
        };
        let partner = graph.edge(
            matching
                .edge_of_colour(e.colour)
                .expect("flexible colours are matched"),
        );
        let disjoint_support = [partner.u, partner.v]
            .iter()
            .flat_map(|&x| flex.external_free_at(x))
            .filter(|&&(_, z)| z != free && z != covered)
            .count();
        let good = disjoint_support >= half_threshold;
        if good {
            good_at[covered].push(id);
            good_flag[id.0] = true;
        } else {
            *bad_per_colour.entry(e.colour).or_insert(0) += 1;
        }
        edges.push(ClassifiedEdge {
            edge: id,
            colour: e.colour,
            covered,
            free,
            disjoint_support,
            good,
        });
    }
    GoodBadReport {
        half_threshold,
        edges,
        bad_per_colour,
        good_at,
        good_flag,
    }
}

/// One edge of a level, with the index `j` of the level that certified it
/// (`0` for level 1, which is certified by good `F`-edges) and the number of
/// certifying edges found at its tail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LevelEdge {
    pub oriented: OrientedEdge,
    pub colour: Colour,
    pub certified_by: usize,
    pub support: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Level {
    /// 1-based level index `i`.
    pub index: usize,
    pub edges: Vec<LevelEdge>,
}

impl Level {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// `V_i`, ascending.
    pub fn heads(&self) -> Vec<Vertex> {
        let mut v: Vec<_> = self.edges.iter().map(|e| e.oriented.head).collect();
        v.sort_unstable();
        v
    }

    /// `R_i`, ascending.
    pub fn colours(&self) -> Vec<Colour> {
        let mut c: Vec<_> = self.edges.iter().map(|e| e.colour).collect();
        c.sort_unstable();
        c
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Hierarchy {
    /// `E_1 .. E_m`.
    pub levels: Vec<Level>,
    /// The candidate set `E_{m+1}` that fell below the stop threshold.
    pub stopped: Level,
    /// `max(1, ceil(alpha n))`.
    pub stop_threshold: usize,
    #[serde(skip)]
    level_of_colour: Vec<Option<usize>>,
    #[serde(skip)]
    level_of_head: Vec<Option<usize>>,
    #[serde(skip)]
    entry_of_colour: Vec<Option<LevelEdge>>,
}

impl Hierarchy {
    fn empty(graph: &ColouredMultigraph, stop_threshold: usize) -> Self {
        Hierarchy {
            levels: Vec::new(),
            stopped: Level {
                index: 1,
                edges: Vec::new(),
            },
            stop_threshold,
            level_of_colour: vec![None; graph.num_colours()],
            level_of_head: vec![None; graph.num_vertices()],
            entry_of_colour: vec![None; graph.num_colours()],
        }
    }

    /// The stop level `m`.
    pub fn m(&self) -> usize {
        self.levels.len()
    }

    pub fn stopped_set_size(&self) -> usize {
        self.stopped.len()
    }

    pub fn level(&self, i: usize) -> &Level {
        &self.levels[i - 1]
    }

    /// The level `i` with `c ∈ R_i`, for reachable colours.
    pub fn level_of_colour(&self, colour: Colour) -> Option<usize> {
        self.level_of_colour[colour]
    }

    /// The level `i` with `v ∈ V_i`, for reachable heads.
    pub fn level_of_head(&self, vertex: Vertex) -> Option<usize> {
        self.level_of_head[vertex]
    }

    pub fn entry(&self, colour: Colour) -> Option<&LevelEdge> {
        self.entry_of_colour[colour].as_ref()
    }

    pub fn is_reachable_colour(&self, colour: Colour) -> bool {
        self.level_of_colour[colour].is_some()
    }

    pub fn is_reach_vertex(&self, vertex: Vertex) -> bool {
        self.level_of_head[vertex].is_some()
    }

    /// `R`, ascending.
    pub fn reach_colours(&self) -> Vec<Colour> {
        (0..self.level_of_colour.len())
            .filter(|&c| self.is_reachable_colour(c))
            .collect()
    }

    /// `V_reach`, ascending.
    pub fn reach_vertices(&self) -> Vec<Vertex> {
        (0..self.level_of_head.len())
            .filter(|&v| self.is_reach_vertex(v))
            .collect()
    }

    /// `R_1` as first computed, whether or not it met the stop threshold.
    pub fn first_level_colours(&self) -> Vec<Colour> {
        match self.levels.first() {
            Some(level) => level.colours(),
            None => self.stopped.colours(),
        }
    }

    fn push_level(&mut self, level: Level) {
        for e in &level.edges {
            self.level_of_colour[e.colour] = Some(level.index);
            self.level_of_head[e.oriented.head] = Some(level.index);
            self.entry_of_colour[e.colour] = Some(*e);
        }
        self.levels.push(level);
    }
}

/// Builds `E_1, E_2, ...` until a candidate level has fewer than
/// `max(1, ceil(alpha n))` edges.
///
/// `E_1`: matching edges orientable with the tail meeting at least
/// `max(1, ceil(alpha |F|))` good `F`-edges. `E_i`, `i > 1`: unused
/// matching edges orientable with the tail meeting, for some `j < i`, at
/// least `max(1, ceil(alpha |R_j|))` `R_j`-edges whose other endpoint is
/// free or a head of a level below `i`. The smallest such `j` is recorded.
pub fn build_hierarchy(
    graph: &ColouredMultigraph,
    matching: &RainbowMatching,
    flex: &FlexibleStructure,
    good_bad: &GoodBadReport,
    params: &InstanceParams,
) -> Hierarchy {
    let stop_threshold = params.threshold(graph.num_colours());
    let mut hierarchy = Hierarchy::empty(graph, stop_threshold);
    if flex.flexible_colours.is_empty() {
        return hierarchy;
    }

    let first_threshold = params.threshold(flex.size());
    let first: Vec<LevelEdge> = matching
        .edges()
        .iter()
        .filter_map(|&id| {
            orient(graph, id, |tail| {
                let support = good_bad.good_at(tail).len();
                (support >= first_threshold).then_some(support)
            })
            .map(|(oriented, support)| LevelEdge {
                oriented,
                colour: graph.colour(id),
                certified_by: 0,
                support,
            })
        })
        .collect();
    let mut candidate = Level {
        index: 1,
        edges: first,
    };

    let mut assigned = vec![false; graph.num_edges()];
    loop {
        if candidate.len() < stop_threshold {
            hierarchy.stopped = candidate;
            return hierarchy;
        }
        for e in &candidate.edges {
            assigned[e.oriented.edge.0] = true;
        }
        let index = candidate.index + 1;
        hierarchy.push_level(candidate);

        // thresholds max(1, ceil(alpha |R_j|)) for j = 1..index-1
        let level_thresholds: Vec<usize> = std::iter::once(0)
            .chain(hierarchy.levels.iter().map(|l| params.threshold(l.len())))
            .collect();
        let mut counts = vec![0usize; index];
        let edges = matching
            .edges()
            .iter()
            .filter(|id| !assigned[id.0])
            .filter_map(|&id| {
                orient(graph, id, |tail| {
                    counts.iter_mut().for_each(|c| *c = 0);
                    for &f in graph.incident(tail) {
                        let e = graph.edge(f);
                        let Some(j) = hierarchy.level_of_colour(e.colour) else {
                            continue;
                        };
                        let u = e.other(tail);
                        if !matching.covers(u) || hierarchy.is_reach_vertex(u) {
                            counts[j] += 1;
                        }
                    }
                    (1..index)
                        .find(|&j| counts[j] >= level_thresholds[j])
                        .map(|j| (j, counts[j]))
                })
                .map(|(oriented, (j, support))| LevelEdge {
                    oriented,
                    colour: graph.colour(id),
                    certified_by: j,
                    support,
                })
            })
            .collect();
        candidate = Level { index, edges };
    }
}

/// Everything derived from one matching: `C_0`, `E_0`/`F`, the good/bad
/// classification and the hierarchy.
#[derive(Clone, Debug, Serialize)]
pub struct Analysis {
    pub flex: FlexibleStructure,
    pub good_bad: GoodBadReport,
    pub hierarchy: Hierarchy,
}

pub fn analyse(
    graph: &ColouredMultigraph,
    matching: &RainbowMatching,
    params: &InstanceParams,
) -> Result<Analysis, FullColour> {
    let flex = compute_flexible(graph, matching, params)?;
    let good_bad = classify_good_bad(graph, matching, &flex);
    let hierarchy = build_hierarchy(graph, matching, &flex, &good_bad, params);
    Ok(Analysis {
        flex,
        good_bad,
        hierarchy,
    })
}

/// A structural obstruction to `M` being maximum, each of which the
/// switching module can turn into a larger matching.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// A free-colour edge with both endpoints free.
    DirectExtension { edge: EdgeId, colour: Colour },
    /// Two edges of a flexible colour inside `V_0`.
    FlexiblePair {
        colour: Colour,
        matched: EdgeId,
        inside: [EdgeId; 2],
    },
    /// (C1) a reachable head `vertex` joined to free `free` by an `R`-edge.
    C1 {
        vertex: Vertex,
        free: Vertex,
        edge: EdgeId,
        colour: Colour,
    },
    /// (C2) two reachable heads joined by an `R`-edge; `u < v`.
    C2 {
        u: Vertex,
        v: Vertex,
        edge: EdgeId,
        colour: Colour,
    },
    /// (C3) an `R`-edge inside `V_0`; `w < z`.
    C3 {
        w: Vertex,
        z: Vertex,
        edge: EdgeId,
        colour: Colour,
    },
}

impl Violation {
    pub fn kind(&self) -> ViolationKind {
        match self {
            Violation::DirectExtension { .. } => ViolationKind::DirectExtension,
            Violation::FlexiblePair { .. } => ViolationKind::FlexiblePair,
            Violation::C1 { .. } => ViolationKind::C1,
            Violation::C2 { .. } => ViolationKind::C2,
            Violation::C3 { .. } => ViolationKind::C3,
        }
    }

    /// The least vertex among the witnesses.
    pub fn witness(&self, graph: &ColouredMultigraph) -> Vertex {
        match *self {
            Violation::DirectExtension { edge, .. } => graph.edge(edge).pair().0,
            Violation::FlexiblePair { inside, .. } => graph.edge(inside[0]).pair().0,
            Violation::C1 { vertex, .. } => vertex,
            Violation::C2 { u, .. } => u,
            Violation::C3 { w, .. } => w,
        }
    }

    /// The graph edge that will be added once the switches succeed.
    pub fn edge(&self) -> EdgeId {
        match *self {
            Violation::DirectExtension { edge, .. }
            | Violation::C1 { edge, .. }
            | Violation::C2 { edge, .. }
            | Violation::C3 { edge, .. } => edge,
            Violation::FlexiblePair { inside, .. } => inside[0],
        }
    }
}

/// In preference order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    DirectExtension,
    FlexiblePair,
    C1,
    C2,
    C3,
}

/// Every violation, ordered by kind (direct extensions, flexible pairs,
/// C1, C2, C3), then least witness vertex, then edge id.
pub fn find_violations(
    graph: &ColouredMultigraph,
    matching: &RainbowMatching,
    analysis: &Analysis,
) -> Vec<Violation> {
    let hierarchy = &analysis.hierarchy;
    let flex = &analysis.flex;
    let mut out = Vec::new();
    let mut inside_flexible: BTreeMap<Colour, Vec<EdgeId>> = BTreeMap::new();
    for (id, e) in graph.edges() {
        let (cu, cv) = (matching.covers(e.u), matching.covers(e.v));
        let (a, b) = e.pair();
        if !cu && !cv {
            if !matching.uses_colour(e.colour) {
                out.push(Violation::DirectExtension {
                    edge: id,
                    colour: e.colour,
                });
            } else if hierarchy.is_reachable_colour(e.colour) {
                out.push(Violation::C3 {
                    w: a,
                    z: b,
                    edge: id,
                    colour: e.colour,
                });
            }
            if flex.is_flexible(e.colour) {
                inside_flexible.entry(e.colour).or_default().push(id);
            }
            continue;
        }
        if !hierarchy.is_reachable_colour(e.colour) {
            continue;
        }
        let (ru, rv) = (hierarchy.is_reach_vertex(e.u), hierarchy.is_reach_vertex(e.v));
        if ru && rv {
            out.push(Violation::C2 {
                u: a,
                v: b,
                edge: id,
                colour: e.colour,
            });
        } else if ru && !cv {
            out.push(Violation::C1 {
                vertex: e.u,
                free: e.v,
                edge: id,
                colour: e.colour,
            });
        } else if rv && !cu {
            out.push(Violation::C1 {
                vertex: e.v,
                free: e.u,
                edge: id,
                colour: e.colour,
            });
        }
    }
    for (colour, inside) in inside_flexible {
        if inside.len() >= 2 {
            out.push(Violation::FlexiblePair {
                colour,
                matched: matching.edge_of_colour(colour).expect("flexible colours are matched"),
                inside: [inside[0], inside[1]],
            });
        }
    }
    out.sort_by_key(|v| (v.kind(), v.witness(graph), v.edge()));
    out
}

/// The quantities of the final counting argument, reported for inspection.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountReport {
    pub r_size: usize,
    pub m: usize,
    /// `|V*|` for `V* = T(V_reach) ∪ V_{m+1} ∪ T(V_{m+1})`.
    pub v_star_size: usize,
    /// `|V'|` for `V' = V(M) \ (V_reach ∪ V*)`.
    pub v_prime_size: usize,
    pub r_edges_total: usize,
    /// `R`-edges with an endpoint in `V*`.
    pub r_edges_at_v_star: usize,
    /// `R`-edges with an endpoint in `V'` and none in `V*`.
    pub r_edges_at_v_prime_not_v_star: usize,
    /// `R`-edges with both endpoints in `V'`.
    pub r_edges_inside_v_prime: usize,
    /// Largest number of same-coloured `R`-edges inside `V'`.
    pub max_inside_v_prime_per_colour: usize,
    /// `floor(|V'| / 2)`.
    pub inside_v_prime_cap: usize,
    /// For each `v ∈ V'`, its number of `R`-edges into `V_0 ∪ V_reach`.
    pub v_prime_degrees: Vec<(Vertex, usize)>,
    pub max_v_prime_degree: usize,
    /// `alpha |R|`.
    pub degree_bound: f64,
    /// `|R| (1 + epsilon) n`, the promised number of `R`-edges.
    pub promised_r_edges: f64,
    /// `|R| (|V'| + epsilon n) / 2 - alpha |R| |V'|`: the lower bound on
    /// `R`-edges inside `V'` that the counting argument derives.
    pub derived_inside_lower: f64,
    /// `|R| |V'| / 2`: what a proper colouring allows inside `V'`.
    pub inside_upper: f64,
    /// Whether `derived_inside_lower > inside_upper` at these parameters.
    pub contradiction_fires: bool,
}

pub fn counting_diagnostics(
    graph: &ColouredMultigraph,
    matching: &RainbowMatching,
    hierarchy: &Hierarchy,
    params: &InstanceParams,
) -> CountReport {
    let nv = graph.num_vertices();
    let mut in_v_star = vec![false; nv];
    for v in hierarchy.reach_vertices() {
        if let Some(t) = matching.twin(v) {
            in_v_star[t] = true;
        }
    }
    for e in &hierarchy.stopped.edges {
        in_v_star[e.oriented.head] = true;
        in_v_star[e.oriented.tail] = true;
    }
    let in_v_prime: Vec<bool> = (0..nv)
        .map(|v| matching.covers(v) && !hierarchy.is_reach_vertex(v) && !in_v_star[v])
        .collect();
    let v_star_size = in_v_star.iter().filter(|&&b| b).count();
    let v_prime_size = in_v_prime.iter().filter(|&&b| b).count();

    let mut r_edges_total = 0;
    let mut at_star = 0;
    let mut at_prime_only = 0;
    let mut inside = 0;
    let mut inside_per_colour: BTreeMap<Colour, usize> = BTreeMap::new();
    let mut degrees: BTreeMap<Vertex, usize> = (0..nv)
        .filter(|&v| in_v_prime[v])
        .map(|v| (v, 0))
        .collect();
    for (_, e) in graph.edges() {
        if !hierarchy.is_reachable_colour(e.colour) {
            continue;
        }
        r_edges_total += 1;
        let star = in_v_star[e.u] || in_v_star[e.v];
        let prime = in_v_prime[e.u] || in_v_prime[e.v];
        if star {
            at_star += 1;
        } else if prime {
            at_prime_only += 1;
        }
        if in_v_prime[e.u] && in_v_prime[e.v] {
            inside += 1;
            *inside_per_colour.entry(e.colour).or_insert(0) += 1;
        }
        for (x, y) in [(e.u, e.v), (e.v, e.u)] {
            if in_v_prime[x] && (!matching.covers(y) || hierarchy.is_reach_vertex(y)) {
                *degrees.get_mut(&x).expect("V' vertex") += 1;
            }
        }
    }
    let max_inside = inside_per_colour.values().copied().max().unwrap_or(0);
    assert!(
        max_inside <= v_prime_size / 2,
        "a proper colouring has at most |V'|/2 edges of one colour inside V'"
    );

    let r = hierarchy.reach_colours().len() as i64;
    let n = graph.num_colours() as i64;
    let vp = v_prime_size as i64;
    let promised = Rational64::from_integer(r * n) * (Rational64::from_integer(1) + params.epsilon);
    let lower = Rational64::new(r, 2) * (Rational64::from_integer(vp) + params.epsilon * n)
        - params.alpha * (r * vp);
    let upper = Rational64::new(r * vp, 2);
    let v_prime_degrees: Vec<(Vertex, usize)> = degrees.into_iter().collect();
    CountReport {
        r_size: r as usize,
        m: hierarchy.m(),
        v_star_size,
        v_prime_size,
        r_edges_total,
        r_edges_at_v_star: at_star,
        r_edges_at_v_prime_not_v_star: at_prime_only,
        r_edges_inside_v_prime: inside,
        max_inside_v_prime_per_colour: max_inside,
        inside_v_prime_cap: v_prime_size / 2,
        max_v_prime_degree: v_prime_degrees.iter().map(|d| d.1).max().unwrap_or(0),
        v_prime_degrees,
        degree_bound: rational_to_f64(params.alpha * r),
        promised_r_edges: rational_to_f64(promised),
        derived_inside_lower: rational_to_f64(lower),
        inside_upper: rational_to_f64(upper),
        contradiction_fires: lower > upper,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize) -> InstanceParams {
        InstanceParams::for_colours(n, Rational64::new(1, 2))
    }

    fn setup(
        vertices: usize,
        colours: usize,
        edges: Vec<(Vertex, Vertex, Colour)>,
        matched: &[usize],
    ) -> (ColouredMultigraph, RainbowMatching) {
        let g = ColouredMultigraph::new(vertices, colours, edges).unwrap();
        let m = RainbowMatching::from_edges(&g, matched.iter().map(|&i| EdgeId(i))).unwrap();
        (g, m)
    }

    // heads 0, 6 and 9 (colours 0, 2, 3) at level 1, certified by good
    // colour-1 edges at their tails; colour 1 is flexible through 3-5
    fn three_heads(extra: &[(Vertex, Vertex, Colour)]) -> (ColouredMultigraph, RainbowMatching) {
        let mut edges = vec![
            (0, 1, 0),
            (2, 3, 1),
            (6, 7, 2),
            (9, 10, 3),
            (3, 5, 4),
            (1, 4, 1),
            (7, 8, 1),
            (10, 11, 1),
        ];
        edges.extend_from_slice(extra);
        setup(13, 5, edges, &[0, 1, 2, 3])
    }

    #[test]
    fn e0_hand_instance() {
        // 01 matched; free colours 1, 2, 3 leave 0 towards 2, 3, 4; 5-6 matched
        // in colour 4 with nothing else at either end
        let (g, m) = setup(
            7,
            5,
            vec![(0, 1, 0), (0, 2, 1), (0, 3, 2), (0, 4, 3), (5, 6, 4)],
            &[0, 4],
        );
        let p = params(5);
        let flex = compute_flexible(&g, &m, &p).unwrap();
        assert_eq!(flex.threshold, 1);
        assert_eq!(flex.free_colour_count, 3);
        let external = |x: Vertex| {
            g.incident(x)
                .iter()
                .filter(|&&id| !m.uses_colour(g.colour(id)) && !m.covers(g.edge(id).other(x)))
                .count()
        };
        assert_eq!((external(0), external(1), external(5), external(6)), (3, 0, 0, 0));
        assert_eq!(
            flex.e0,
            vec![OrientedEdge {
                edge: EdgeId(0),
                tail: 0,
                head: 1
            }]
        );
        assert_eq!(flex.s0, vec![1]);
        assert_eq!(flex.flexible_colours, vec![0]);
    }

    #[test]
    fn full_matching_has_no_free_colour() {
        let (g, m) = setup(4, 2, vec![(0, 1, 0), (2, 3, 1)], &[0, 1]);
        assert_eq!(compute_flexible(&g, &m, &params(2)), Err(FullColour));
    }

    #[test]
    fn good_and_bad_edges() {
        // 3-2 is a colour-0 edge leaving the matching; m_0 = 01 only meets the
        // free-colour edge 0-2, which shares the free endpoint 2
        let (g, m) = setup(5, 3, vec![(0, 1, 0), (0, 2, 1), (3, 4, 2), (3, 2, 0)], &[0, 2]);
        let analysis = analyse(&g, &m, &params(3)).unwrap();
        assert_eq!(analysis.flex.flexible_colours, vec![0]);
        let report = &analysis.good_bad;
        assert_eq!(report.edges.len(), 1);
        let e = report.edges[0];
        assert_eq!((e.edge, e.covered, e.free, e.disjoint_support), (EdgeId(3), 3, 2, 0));
        assert!(!e.good);
        assert_eq!(report.max_bad(), 1);

        // every colour-1 edge of the three-head fixture sees 3-5 at m_1
        let (g, m) = three_heads(&[]);
        let analysis = analyse(&g, &m, &params(5)).unwrap();
        let report = &analysis.good_bad;
        assert_eq!(report.good_count(), 3);
        assert_eq!(report.good_at(1), &[EdgeId(5)]);
        assert_eq!(report.good_at(7), &[EdgeId(6)]);
        assert_eq!(report.good_at(10), &[EdgeId(7)]);
        assert_eq!(report.max_bad(), 0);
    }

    #[test]
    fn no_flexible_colours_means_no_levels() {
        // the free colour 1 only appears inside the free vertices
        let (g, m) = setup(4, 2, vec![(0, 1, 0), (2, 3, 1)], &[0]);
        let analysis = analyse(&g, &m, &params(2)).unwrap();
        assert!(analysis.flex.flexible_colours.is_empty());
        assert_eq!(analysis.hierarchy.m(), 0);
        assert_eq!(analysis.hierarchy.stopped_set_size(), 0);
        let v = find_violations(&g, &m, &analysis);
        assert_eq!(v.iter().map(|v| v.kind()).collect::<Vec<_>>(), vec![ViolationKind::DirectExtension]);
    }

    #[test]
    fn first_level_by_enumeration() {
        let (g, m) = three_heads(&[]);
        let p = params(5);
        let analysis = analyse(&g, &m, &p).unwrap();
        assert_eq!(analysis.flex.flexible_colours, vec![1]);
        // tails with at least max(1, ceil(alpha |F|)) = 1 good edge
        let expected: Vec<(EdgeId, Vertex, Vertex)> = m
            .edges()
            .iter()
            .filter_map(|&id| {
                let e = g.edge(id);
                let (a, b) = e.pair();
                [(a, b), (b, a)]
                    .into_iter()
                    .find(|&(t, _)| !analysis.good_bad.good_at(t).is_empty())
                    .map(|(t, h)| (id, t, h))
            })
            .collect();
        assert_eq!(expected, vec![(EdgeId(0), 1, 0), (EdgeId(2), 7, 6), (EdgeId(3), 10, 9)]);
        let h = &analysis.hierarchy;
        assert_eq!(h.m(), 1);
        let got: Vec<(EdgeId, Vertex, Vertex)> = h.levels[0]
            .edges
            .iter()
            .map(|e| (e.oriented.edge, e.oriented.tail, e.oriented.head))
            .collect();
        assert_eq!(got, expected);
        assert!(h.levels[0].edges.iter().all(|e| e.certified_by == 0 && e.support == 1));
        assert_eq!(h.reach_colours(), vec![0, 2, 3]);
        assert_eq!(h.reach_vertices(), vec![0, 6, 9]);
        assert_eq!(h.level_of_colour(1), None);
        assert!(p.alpha * (h.m() as i64) < Rational64::from_integer(1));
    }

    #[test]
    fn edge_between_heads_is_c2() {
        let (g, m) = three_heads(&[(0, 6, 3)]);
        let analysis = analyse(&g, &m, &params(5)).unwrap();
        assert_eq!(analysis.hierarchy.reach_vertices(), vec![0, 6, 9]);
        assert_eq!(
            find_violations(&g, &m, &analysis),
            vec![Violation::C2 {
                u: 0,
                v: 6,
                edge: EdgeId(8),
                colour: 3
            }]
        );
    }

    #[test]
    fn empty_hierarchy_has_no_violations() {
        // 01 is flexible through 1-2 but no colour-0 edge leaves the matching
        let (g, m) = setup(3, 2, vec![(0, 1, 0), (1, 2, 1)], &[0]);
        let p = params(2);
        let analysis = analyse(&g, &m, &p).unwrap();
        assert_eq!(analysis.flex.flexible_colours, vec![0]);
        assert_eq!(analysis.flex.e0[0].tail, 1);
        assert_eq!(analysis.hierarchy.m(), 0);
        assert!(find_violations(&g, &m, &analysis).is_empty());
        let counts = counting_diagnostics(&g, &m, &analysis.hierarchy, &p);
        assert_eq!(counts.r_size, 0);
        assert_eq!(counts.m, 0);
        assert_eq!(counts.v_star_size, 0);
        assert_eq!(counts.r_edges_total, 0);
        assert_eq!(counts.v_prime_size, m.covered_vertices().len());
    }
}
