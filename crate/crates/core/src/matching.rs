//! Rainbow matchings: the value type, greedy construction, verification,
//! closeness and external-edge queries.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::instances::Seed;
use crate::multigraph::{
    Colour, ColouredMultigraph, EdgeId, ValidationIssue, ValidationReport, Vertex,
};

/// A set of edges, plus the lookups derived from it: the edge of each used
/// colour, and the matching edge (and so the twin) at each covered vertex.
///
/// Values are never mutated in place; `exchange` returns a new matching.
/// A matching built with `from_edges_unchecked` may break the invariants;
/// `verify` reports how.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RainbowMatching {
    edges: Vec<EdgeId>,
    colour_edge: Vec<Option<EdgeId>>,
    vertex_edge: Vec<Option<EdgeId>>,
    twin: Vec<Option<Vertex>>,
}

impl RainbowMatching {
    pub fn empty(graph: &ColouredMultigraph) -> Self {
        RainbowMatching {
            edges: Vec::new(),
            colour_edge: vec![None; graph.num_colours()],
            vertex_edge: vec![None; graph.num_vertices()],
            twin: vec![None; graph.num_vertices()],
        }
    }

    /// Builds the lookups without checking anything. Ids unknown to `graph`
    /// are kept in the edge list but left out of the lookups.
    pub fn from_edges_unchecked(
        graph: &ColouredMultigraph,
        edges: impl IntoIterator<Item = EdgeId>,
    ) -> Self {
        let mut m = Self::empty(graph);
        for id in edges {
            m.edges.push(id);
            if let Some(e) = graph.get_edge(id) {
                m.colour_edge[e.colour] = Some(id);
                m.vertex_edge[e.u] = Some(id);
                m.vertex_edge[e.v] = Some(id);
                m.twin[e.u] = Some(e.v);
                m.twin[e.v] = Some(e.u);
            }
        }
        m.edges.sort_unstable();
        m
    }

    pub fn from_edges(
        graph: &ColouredMultigraph,
        edges: impl IntoIterator<Item = EdgeId>,
    ) -> Result<Self, ValidationReport> {
        let m = Self::from_edges_unchecked(graph, edges);
        let report = verify(graph, &m);
        if report.is_empty() {
            Ok(m)
        } else {
            Err(report)
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Sorted edge ids.
    #[inline]
    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    #[inline]
    pub fn contains(&self, id: EdgeId) -> bool {
        self.edges.binary_search(&id).is_ok()
    }

    /// `m_c`: the matching edge of colour `c`.
    #[inline]
    pub fn edge_of_colour(&self, colour: Colour) -> Option<EdgeId> {
        self.colour_edge[colour]
    }

    #[inline]
    pub fn uses_colour(&self, colour: Colour) -> bool {
        self.colour_edge[colour].is_some()
    }

    #[inline]
    pub fn edge_at(&self, vertex: Vertex) -> Option<EdgeId> {
        self.vertex_edge[vertex]
    }

    #[inline]
    pub fn covers(&self, vertex: Vertex) -> bool {
        self.vertex_edge[vertex].is_some()
    }

    #[inline]
    pub fn twin(&self, vertex: Vertex) -> Option<Vertex> {
        self.twin[vertex]
    }

    /// `V(M)`, ascending.
    pub fn covered_vertices(&self) -> Vec<Vertex> {
        (0..self.vertex_edge.len())
            .filter(|&v| self.covers(v))
            .collect()
    }

    /// `V_0`: vertices not covered, ascending.
    pub fn free_vertices(&self) -> Vec<Vertex> {
        (0..self.vertex_edge.len())
            .filter(|&v| !self.covers(v))
            .collect()
    }

    /// `C(M)`, ascending.
    pub fn colours(&self) -> Vec<Colour> {
        (0..self.colour_edge.len())
            .filter(|&c| self.uses_colour(c))
            .collect()
    }

    /// `C_0`: colours not used, ascending.
    pub fn free_colours(&self) -> Vec<Colour> {
        (0..self.colour_edge.len())
            .filter(|&c| !self.uses_colour(c))
            .collect()
    }

    /// A new matching with `remove` taken out and `add` put in. No checks
    /// beyond debug assertions; callers verify.
    pub fn exchange(&self, graph: &ColouredMultigraph, remove: &[EdgeId], add: &[EdgeId]) -> Self {
        let mut next = self.clone();
        for &id in remove {
            debug_assert!(next.contains(id), "removing {id} which is not matched");
            let e = graph.edge(id);
            next.edges.retain(|&x| x != id);
            next.colour_edge[e.colour] = None;
            for x in [e.u, e.v] {
                next.vertex_edge[x] = None;
                next.twin[x] = None;
            }
        }
        for &id in add {
            let e = graph.edge(id);
            debug_assert!(!next.covers(e.u) && !next.covers(e.v));
            debug_assert!(!next.uses_colour(e.colour));
            next.edges.push(id);
            next.colour_edge[e.colour] = Some(id);
            next.vertex_edge[e.u] = Some(id);
            next.vertex_edge[e.v] = Some(id);
            next.twin[e.u] = Some(e.v);
            next.twin[e.v] = Some(e.u);
        }
        next.edges.sort_unstable();
        next
    }

    pub fn with_edge(&self, graph: &ColouredMultigraph, id: EdgeId) -> Self {
        self.exchange(graph, &[], &[id])
    }

    /// Whether `id` could be added: both endpoints free and its colour unused.
    pub fn can_add(&self, graph: &ColouredMultigraph, id: EdgeId) -> bool {
        let e = graph.edge(id);
        e.u != e.v && !self.covers(e.u) && !self.covers(e.v) && !self.uses_colour(e.colour)
    }

    pub fn to_json(&self, graph: &ColouredMultigraph) -> MatchingJson {
        MatchingJson {
            size: self.len(),
            edges: self
                .edges
                .iter()
                .map(|&id| {
                    let e = graph.edge(id);
                    MatchingEdgeJson {
                        u: e.u,
                        v: e.v,
                        colour: e.colour,
                        edge_id: id.0,
                    }
                })
                .collect(),
        }
    }
}

/// Wire form: `{"size": .., "edges": [{"u", "v", "colour", "edge_id"}]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingJson {
    pub size: usize,
    pub edges: Vec<MatchingEdgeJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingEdgeJson {
    pub u: Vertex,
    pub v: Vertex,
    pub colour: Colour,
    pub edge_id: usize,
}

impl MatchingJson {
    /// Rebuilds the matching, reporting every listed edge whose endpoints or
    /// colour disagree with the graph as unknown.
    pub fn to_matching(&self, graph: &ColouredMultigraph) -> (RainbowMatching, ValidationReport) {
        let mut report = ValidationReport::default();
        let mut ids = Vec::with_capacity(self.edges.len());
        for item in &self.edges {
            let id = EdgeId(item.edge_id);
            match graph.get_edge(id) {
                Some(e)
                    if e.colour == item.colour
                        && ((e.u, e.v) == (item.u, item.v) || (e.v, e.u) == (item.u, item.v)) =>
                {
                    ids.push(id)
                }
                _ => report.push(ValidationIssue::UnknownEdge { edge: id }),
            }
        }
        if self.size != self.edges.len() {
            report.push(ValidationIssue::IndexMismatch);
        }
        (RainbowMatching::from_edges_unchecked(graph, ids), report)
    }
}

/// A maximal rainbow matching: edges are scanned in a seeded random order
/// and each is kept when both endpoints and its colour are still free.
pub fn greedy(graph: &ColouredMultigraph, seed: Seed) -> RainbowMatching {
    let mut order: Vec<EdgeId> = graph.edge_ids().collect();
    order.shuffle(&mut seed.rng());
    let mut chosen = Vec::new();
    let mut used_colour = vec![false; graph.num_colours()];
    let mut used_vertex = vec![false; graph.num_vertices()];
    for id in order {
        let e = graph.edge(id);
        if e.u != e.v && !used_vertex[e.u] && !used_vertex[e.v] && !used_colour[e.colour] {
            used_vertex[e.u] = true;
            used_vertex[e.v] = true;
            used_colour[e.colour] = true;
            chosen.push(id);
        }
    }
    RainbowMatching::from_edges_unchecked(graph, chosen)
}

/// Empty iff every edge exists, no edge is listed twice, edges are pairwise
/// vertex-disjoint and their colours are distinct.
pub fn verify(graph: &ColouredMultigraph, matching: &RainbowMatching) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut by_vertex: BTreeMap<Vertex, Vec<EdgeId>> = BTreeMap::new();
    let mut by_colour: BTreeMap<Colour, Vec<EdgeId>> = BTreeMap::new();
    for (k, &id) in matching.edges.iter().enumerate() {
        if k > 0 && matching.edges[k - 1] == id {
            report.push(ValidationIssue::DuplicateEdge { edge: id });
            continue;
        }
        let Some(e) = graph.get_edge(id) else {
            report.push(ValidationIssue::UnknownEdge { edge: id });
            continue;
        };
        if e.u == e.v {
            report.push(ValidationIssue::Loop {
                edge: id,
                vertex: e.u,
            });
        }
        by_vertex.entry(e.u).or_default().push(id);
        if e.v != e.u {
            by_vertex.entry(e.v).or_default().push(id);
        }
        by_colour.entry(e.colour).or_default().push(id);
    }
    for (colour, edges) in by_colour {
        if edges.len() > 1 {
            report.push(ValidationIssue::RainbowViolated { colour, edges });
        }
    }
    for (vertex, edges) in by_vertex {
        if edges.len() > 1 {
            report.push(ValidationIssue::DisjointnessViolated { vertex, edges });
        }
    }
    if report.is_empty() {
        let fresh = RainbowMatching::from_edges_unchecked(graph, matching.edges.iter().copied());
        if fresh != *matching {
            report.push(ValidationIssue::IndexMismatch);
        }
    }
    report
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Closeness {
    /// `|a △ b|`.
    pub lambda: usize,
    pub sizes_equal: bool,
}

impl Closeness {
    /// Equal sizes and symmetric difference at most `lambda`.
    pub fn within(&self, lambda: usize) -> bool {
        self.sizes_equal && self.lambda <= lambda
    }
}

pub fn closeness(a: &RainbowMatching, b: &RainbowMatching) -> Closeness {
    let (x, y) = (a.edges(), b.edges());
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    Closeness {
        lambda: x.len() + y.len() - 2 * common,
        sizes_equal: x.len() == y.len(),
    }
}

/// Edges with one endpoint free and one covered whose colour satisfies
/// `in_set`, in EdgeId order.
pub fn external_edges(
    graph: &ColouredMultigraph,
    matching: &RainbowMatching,
    in_set: impl Fn(Colour) -> bool,
) -> Vec<EdgeId> {
    graph
        .edges()
        .filter(|(_, e)| matching.covers(e.u) != matching.covers(e.v) && in_set(e.colour))
        .map(|(id, _)| id)
        .collect()
}

/// True when no edge could be added to `matching`.
pub fn is_maximal(graph: &ColouredMultigraph, matching: &RainbowMatching) -> bool {
    graph.edge_ids().all(|id| !matching.can_add(graph, id))
}
