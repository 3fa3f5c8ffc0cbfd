//! Properly edge-coloured multigraphs: the immutable instance model, its
//! validation, the hypothesis check and the plain-text instance format.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vertex = usize;
pub type Colour = usize;

/// Identity of one parallel edge. Dense, assigned in input order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub usize);

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub u: Vertex,
    pub v: Vertex,
    pub colour: Colour,
}

impl Edge {
    pub fn new(u: Vertex, v: Vertex, colour: Colour) -> Self {
        Edge { u, v, colour }
    }

    #[inline]
    pub fn touches(&self, x: Vertex) -> bool {
        self.u == x || self.v == x
    }

    /// The endpoint opposite `x`. `x` must be an endpoint.
    #[inline]
    pub fn other(&self, x: Vertex) -> Vertex {
        debug_assert!(self.touches(x));
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }

    #[inline]
    pub fn shares_endpoint(&self, other: &Edge) -> bool {
        self.touches(other.u) || self.touches(other.v)
    }

    /// Endpoints as an unordered pair, smaller vertex first.
    #[inline]
    pub fn pair(&self) -> (Vertex, Vertex) {
        if self.u <= self.v {
            (self.u, self.v)
        } else {
            (self.v, self.u)
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge {index}: endpoint {vertex} out of range (graph has {num_vertices} vertices)")]
    VertexOutOfRange {
        index: usize,
        vertex: Vertex,
        num_vertices: usize,
    },
    #[error("edge {index}: colour {colour} out of range (graph has {num_colours} colours)")]
    ColourOutOfRange {
        index: usize,
        colour: Colour,
        num_colours: usize,
    },
    #[error("graph is not a proper edge colouring: {0}")]
    Invalid(ValidationReport),
}

/// A multigraph whose edges carry colours `0..num_colours`.
///
/// Immutable after construction. Indexes are built once; every lookup the
/// solver performs is by vertex, colour or (vertex, colour).
#[derive(Clone, Debug)]
pub struct ColouredMultigraph {
    num_vertices: usize,
    num_colours: usize,
    edges: Vec<Edge>,
    by_colour: Vec<Vec<EdgeId>>,
    by_vertex_colour: HashMap<(Vertex, Colour), Vec<EdgeId>>,
    incident: Vec<Vec<EdgeId>>,
    multiplicity: HashMap<(Vertex, Vertex), usize>,
}

#[derive(Debug, PartialEq, Eq)]
struct Indexes {
    by_colour: Vec<Vec<EdgeId>>,
    by_vertex_colour: HashMap<(Vertex, Colour), Vec<EdgeId>>,
    incident: Vec<Vec<EdgeId>>,
    multiplicity: HashMap<(Vertex, Vertex), usize>,
}

fn build_indexes(num_vertices: usize, num_colours: usize, edges: &[Edge]) -> Indexes {
    let mut by_colour = vec![Vec::new(); num_colours];
    let mut by_vertex_colour: HashMap<(Vertex, Colour), Vec<EdgeId>> = HashMap::new();
    let mut incident = vec![Vec::new(); num_vertices];
    let mut multiplicity = HashMap::new();
    for (i, e) in edges.iter().enumerate() {
        let id = EdgeId(i);
        by_colour[e.colour].push(id);
        by_vertex_colour.entry((e.u, e.colour)).or_default().push(id);
        incident[e.u].push(id);
        if e.v != e.u {
            by_vertex_colour.entry((e.v, e.colour)).or_default().push(id);
            incident[e.v].push(id);
        }
        *multiplicity.entry(e.pair()).or_insert(0) += 1;
    }
    Indexes {
        by_colour,
        by_vertex_colour,
        incident,
        multiplicity,
    }
}

impl ColouredMultigraph {
    /// Builds a graph and rejects it unless `validate` comes back empty.
    pub fn new(
        num_vertices: usize,
        num_colours: usize,
        edges: impl IntoIterator<Item = (Vertex, Vertex, Colour)>,
    ) -> Result<Self, GraphError> {
        let graph = Self::new_unchecked(num_vertices, num_colours, edges)?;
        let report = graph.validate();
        if report.is_empty() {
            Ok(graph)
        } else {
            Err(GraphError::Invalid(report))
        }
    }

    /// Builds the indexes after a range check only. Loops and colour clashes
    /// are kept so that `validate` can report them.
    pub fn new_unchecked(
        num_vertices: usize,
        num_colours: usize,
        edges: impl IntoIterator<Item = (Vertex, Vertex, Colour)>,
    ) -> Result<Self, GraphError> {
        let mut list = Vec::new();
        for (index, (u, v, colour)) in edges.into_iter().enumerate() {
            for vertex in [u, v] {
                if vertex >= num_vertices {
                    return Err(GraphError::VertexOutOfRange {
                        index,
                        vertex,
                        num_vertices,
                    });
                }
            }
            if colour >= num_colours {
                return Err(GraphError::ColourOutOfRange {
                    index,
                    colour,
                    num_colours,
                });
            }
            list.push(Edge::new(u, v, colour));
        }
        let Indexes {
            by_colour,
            by_vertex_colour,
            incident,
            multiplicity,
        } = build_indexes(num_vertices, num_colours, &list);
        Ok(ColouredMultigraph {
            num_vertices,
            num_colours,
            edges: list,
            by_colour,
            by_vertex_colour,
            incident,
            multiplicity,
        })
    }

    pub fn empty(num_vertices: usize, num_colours: usize) -> Self {
        Self::new_unchecked(num_vertices, num_colours, std::iter::empty())
            .expect("empty edge list is always in range")
    }

    #[inline]
    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    /// The number of colours, `n`.
    #[inline]
    pub fn num_colours(&self) -> usize {
        self.num_colours
    }

    #[inline]
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0]
    }

    pub fn get_edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.get(id.0)
    }

    #[inline]
    pub fn colour(&self, id: EdgeId) -> Colour {
        self.edges[id.0].colour
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = (EdgeId, &Edge)> + '_ {
        self.edges.iter().enumerate().map(|(i, e)| (EdgeId(i), e))
    }

    pub fn edge_ids(&self) -> impl ExactSizeIterator<Item = EdgeId> {
        (0..self.edges.len()).map(EdgeId)
    }

    #[inline]
    pub fn colour_class(&self, colour: Colour) -> &[EdgeId] {
        &self.by_colour[colour]
    }

    #[inline]
    pub fn incident(&self, vertex: Vertex) -> &[EdgeId] {
        &self.incident[vertex]
    }

    /// All edges of `colour` at `vertex`; at most one in a valid graph.
    pub fn at_vertex_colour(&self, vertex: Vertex, colour: Colour) -> &[EdgeId] {
        self.by_vertex_colour
            .get(&(vertex, colour))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn edge_at(&self, vertex: Vertex, colour: Colour) -> Option<EdgeId> {
        self.at_vertex_colour(vertex, colour).first().copied()
    }

    pub fn multiplicity(&self, a: Vertex, b: Vertex) -> usize {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.multiplicity.get(&key).copied().unwrap_or(0)
    }

    pub fn max_multiplicity(&self) -> usize {
        self.multiplicity.values().copied().max().unwrap_or(0)
    }

    /// Rebuilds every index from the edge list and compares.
    pub fn audit_indexes(&self) -> bool {
        let fresh = build_indexes(self.num_vertices, self.num_colours, &self.edges);
        fresh.by_colour == self.by_colour
            && fresh.by_vertex_colour == self.by_vertex_colour
            && fresh.incident == self.incident
            && fresh.multiplicity == self.multiplicity
    }

    /// Loops, colour clashes at a vertex, and index inconsistencies.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for (id, e) in self.edges() {
            if e.u == e.v {
                report.push(ValidationIssue::Loop {
                    edge: id,
                    vertex: e.u,
                });
            }
        }
        let mut clashes: Vec<_> = self
            .by_vertex_colour
            .iter()
            .filter(|(_, ids)| ids.len() > 1)
            .map(|(&(vertex, colour), ids)| (vertex, colour, ids.clone()))
            .collect();
        clashes.sort();
        for (vertex, colour, edges) in clashes {
            report.push(ValidationIssue::ColourClash {
                vertex,
                colour,
                edges,
            });
        }
        if !self.audit_indexes() {
            report.push(ValidationIssue::IndexMismatch);
        }
        report
    }

    /// Checks the size hypotheses: colour classes of at least
    /// `min_colour_count` edges and pair multiplicities of at most
    /// `multiplicity_cap`.
    pub fn hypothesis_check(&self, params: &InstanceParams) -> HypothesisReport {
        let colour_counts: Vec<usize> = self.by_colour.iter().map(Vec::len).collect();
        let deficits: Vec<ColourDeficit> = colour_counts
            .iter()
            .enumerate()
            .filter(|(_, &count)| count < params.min_colour_count)
            .map(|(colour, &count)| ColourDeficit {
                colour,
                count,
                missing: params.min_colour_count - count,
            })
            .collect();
        let mut over_cap: Vec<PairMultiplicity> = self
            .multiplicity
            .iter()
            .filter(|(_, &count)| count > params.multiplicity_cap)
            .map(|(&(u, v), &count)| PairMultiplicity { u, v, count })
            .collect();
        over_cap.sort_by_key(|p| (p.u, p.v));
        HypothesisReport {
            satisfied: deficits.is_empty() && over_cap.is_empty(),
            colour_counts,
            deficits,
            max_multiplicity: self.max_multiplicity(),
            over_cap,
            alpha_warning: params.alpha_warning(),
        }
    }

    /// Parses the text instance format: a `V C` header line followed by
    /// `u v c` lines; `#` starts a comment.
    pub fn load<R: BufRead>(reader: R) -> Result<Self, LoadError> {
        let mut header: Option<(usize, usize)> = None;
        let mut edges = Vec::new();
        for (index, line) in reader.lines().enumerate() {
            let line_no = index + 1;
            let line = line.map_err(|e| LoadError::Io(e.to_string()))?;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|_| LoadError::Parse {
                    line: line_no,
                    message: format!("expected a non-negative integer, found {s:?}"),
                })
            };
            match header {
                None => {
                    if fields.len() != 2 {
                        return Err(LoadError::Parse {
                            line: line_no,
                            message: "header must be \"V C\"".into(),
                        });
                    }
                    header = Some((parse(fields[0])?, parse(fields[1])?));
                }
                Some((num_vertices, num_colours)) => {
                    if fields.len() != 3 {
                        return Err(LoadError::Parse {
                            line: line_no,
                            message: "edge line must be \"u v c\"".into(),
                        });
                    }
                    let (u, v, c) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                    if u >= num_vertices || v >= num_vertices {
                        return Err(LoadError::Parse {
                            line: line_no,
                            message: format!("vertex out of range 0..{num_vertices}"),
                        });
                    }
                    if c >= num_colours {
                        return Err(LoadError::Parse {
                            line: line_no,
                            message: format!("colour out of range 0..{num_colours}"),
                        });
                    }
                    if u == v {
                        return Err(LoadError::Loop {
                            line: line_no,
                            vertex: u,
                        });
                    }
                    edges.push((u, v, c));
                }
            }
        }
        let (num_vertices, num_colours) = header.ok_or(LoadError::Parse {
            line: 0,
            message: "missing \"V C\" header".into(),
        })?;
        let graph = Self::new_unchecked(num_vertices, num_colours, edges)
            .expect("ranges checked while parsing");
        let report = graph.validate();
        if report.is_empty() {
            Ok(graph)
        } else {
            Err(LoadError::Invalid(report))
        }
    }

    pub fn load_str(text: &str) -> Result<Self, LoadError> {
        Self::load(text.as_bytes())
    }

    /// Writes the text format in EdgeId order, so `load` restores the ids.
    pub fn save<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.num_vertices, self.num_colours)?;
        for e in &self.edges {
            writeln!(out, "{} {} {}", e.u, e.v, e.colour)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.save(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Edge list sorted by (u, v, colour, EdgeId) with u ≤ v.
    pub fn canonical_edges(&self) -> Vec<(Vertex, Vertex, Colour, EdgeId)> {
        let mut list: Vec<_> = self
            .edges()
            .map(|(id, e)| {
                let (a, b) = e.pair();
                (a, b, e.colour, id)
            })
            .collect();
        list.sort();
        list
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LoadError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: loop at vertex {vertex}")]
    Loop { line: usize, vertex: Vertex },
    #[error("invalid instance: {0}")]
    Invalid(ValidationReport),
    #[error("read failed: {0}")]
    Io(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationIssue {
    Loop {
        edge: EdgeId,
        vertex: Vertex,
    },
    ColourClash {
        vertex: Vertex,
        colour: Colour,
        edges: Vec<EdgeId>,
    },
    IndexMismatch,
    UnknownEdge {
        edge: EdgeId,
    },
    DuplicateEdge {
        edge: EdgeId,
    },
    RainbowViolated {
        colour: Colour,
        edges: Vec<EdgeId>,
    },
    DisjointnessViolated {
        vertex: Vertex,
        edges: Vec<EdgeId>,
    },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn ids(list: &[EdgeId]) -> String {
            list.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",")
        }
        match self {
            ValidationIssue::Loop { edge, vertex } => write!(f, "loop {edge} at vertex {vertex}"),
            ValidationIssue::ColourClash {
                vertex,
                colour,
                edges,
            } => write!(
                f,
                "colour {colour} repeated at vertex {vertex} by edges {}",
                ids(edges)
            ),
            ValidationIssue::IndexMismatch => write!(f, "indexes disagree with the edge list"),
            ValidationIssue::UnknownEdge { edge } => write!(f, "edge {edge} does not exist"),
            ValidationIssue::DuplicateEdge { edge } => write!(f, "edge {edge} listed twice"),
            ValidationIssue::RainbowViolated { colour, edges } => {
                write!(f, "rainbow violated: colour {colour} used by {}", ids(edges))
            }
            ValidationIssue::DisjointnessViolated { vertex, edges } => write!(
                f,
                "disjointness violated: vertex {vertex} covered by {}",
                ids(edges)
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, issue: ValidationIssue) {
        self.violations.push(issue);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Thresholds and tolerances for one instance.
///
/// `epsilon` and `alpha` are exact rationals so that every `ceil(alpha * x)`
/// threshold is computed without rounding error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceParams {
    pub epsilon: Rational64,
    pub alpha: Rational64,
    pub multiplicity_cap: usize,
    pub min_colour_count: usize,
}

impl InstanceParams {
    /// Defaults for `n` colours: `alpha = epsilon/12`, colour classes of at
    /// least `ceil((1+epsilon) n)` edges, multiplicities at most
    /// `max(1, floor(n/16))`.
    pub fn for_colours(num_colours: usize, epsilon: Rational64) -> Self {
        let n = Rational64::from_integer(num_colours as i64);
        let min_colour_count = ((Rational64::from_integer(1) + epsilon) * n)
            .ceil()
            .to_integer()
            .max(0) as usize;
        InstanceParams {
            epsilon,
            alpha: epsilon / 12,
            multiplicity_cap: (num_colours / 16).max(1),
            min_colour_count,
        }
    }

    pub fn with_alpha(mut self, alpha: Rational64) -> Self {
        self.alpha = alpha;
        self
    }

    /// `max(1, ceil(alpha * count))`.
    pub fn threshold(&self, count: usize) -> usize {
        ceil_at_least_one(self.alpha * Rational64::from_integer(count as i64))
    }

    /// `max(1, ceil(alpha * count / 2))`.
    pub fn half_threshold(&self, count: usize) -> usize {
        ceil_at_least_one(self.alpha * Rational64::new(count as i64, 2))
    }

    /// Set when alpha exceeds epsilon/12 or lies outside (0, 1).
    pub fn alpha_warning(&self) -> Option<String> {
        if self.alpha <= Rational64::zero() || self.alpha >= Rational64::from_integer(1) {
            Some(format!("alpha = {} outside (0, 1)", self.alpha))
        } else if self.alpha > self.epsilon / 12 {
            Some(format!(
                "alpha = {} exceeds epsilon/12 = {}",
                self.alpha,
                self.epsilon / 12
            ))
        } else {
            None
        }
    }

    pub fn check(&self) -> Result<(), String> {
        let one = Rational64::from_integer(1);
        if self.epsilon <= Rational64::zero() || self.epsilon >= one {
            return Err(format!("epsilon = {} must lie in (0, 1)", self.epsilon));
        }
        if self.alpha <= Rational64::zero() {
            return Err(format!("alpha = {} must be positive", self.alpha));
        }
        if self.multiplicity_cap == 0 {
            return Err("multiplicity cap must be at least 1".into());
        }
        Ok(())
    }
}

pub(crate) fn ceil_at_least_one(x: Rational64) -> usize {
    (x.ceil().to_integer().max(1)) as usize
}

/// Parses `"p/q"`, an integer, or a decimal such as `"0.5"` exactly.
pub fn parse_rational(text: &str) -> Result<Rational64, String> {
    let text = text.trim();
    let bad = || format!("not a rational number: {text:?}");
    if let Some((p, q)) = text.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| bad())?;
        let q: i64 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        return Ok(Rational64::new(p, q));
    }
    if let Some((int, frac)) = text.split_once('.') {
        if frac.is_empty() || frac.len() > 15 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let int_part: i64 = match int.trim_start_matches('-') {
            "" => 0,
            s => s.parse().map_err(|_| bad())?,
        };
        let denom = 10i64.pow(frac.len() as u32);
        let frac_part: i64 = frac.parse().map_err(|_| bad())?;
        let value = Rational64::new(int_part * denom + frac_part, denom);
        return Ok(if negative { -value } else { value });
    }
    text.parse::<i64>()
        .map(Rational64::from_integer)
        .map_err(|_| bad())
}

pub fn rational_to_f64(x: Rational64) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ColourDeficit {
    pub colour: Colour,
    pub count: usize,
    pub missing: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairMultiplicity {
    pub u: Vertex,
    pub v: Vertex,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HypothesisReport {
    pub satisfied: bool,
    pub colour_counts: Vec<usize>,
    pub deficits: Vec<ColourDeficit>,
    pub max_multiplicity: usize,
    pub over_cap: Vec<PairMultiplicity>,
    pub alpha_warning: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> Rational64 {
        Rational64::new(1, 2)
    }

    #[test]
    fn shared_endpoint_same_colour_is_reported() {
        let g = ColouredMultigraph::new_unchecked(3, 1, [(0, 1, 0), (0, 2, 0)]).unwrap();
        let report = g.validate();
        assert_eq!(
            report.violations,
            vec![ValidationIssue::ColourClash {
                vertex: 0,
                colour: 0,
                edges: vec![EdgeId(0), EdgeId(1)]
            }]
        );
    }

    #[test]
    fn parallel_edges_of_equal_colour_are_reported() {
        let g = ColouredMultigraph::new_unchecked(2, 1, [(0, 1, 0), (0, 1, 0)]).unwrap();
        let report = g.validate();
        assert_eq!(report.violations.len(), 2, "{report}");
        assert!(report
            .violations
            .iter()
            .all(|v| matches!(v, ValidationIssue::ColourClash { colour: 0, .. })));
        assert!(ColouredMultigraph::new(2, 1, [(0, 1, 0), (0, 1, 0)]).is_err());
    }

    #[test]
    fn parallel_edges_of_distinct_colours_are_fine() {
        let g = ColouredMultigraph::new(2, 2, [(0, 1, 0), (1, 0, 1)]).unwrap();
        assert_eq!(g.multiplicity(0, 1), 2);
        assert_eq!(g.multiplicity(1, 0), 2);
        assert_eq!(g.max_multiplicity(), 2);
    }

    #[test]
    fn loops_are_reported() {
        let g = ColouredMultigraph::new_unchecked(2, 1, [(1, 1, 0)]).unwrap();
        assert_eq!(
            g.validate().violations,
            vec![ValidationIssue::Loop {
                edge: EdgeId(0),
                vertex: 1
            }]
        );
    }

    #[test]
    fn out_of_range_is_an_error() {
        assert!(matches!(
            ColouredMultigraph::new_unchecked(2, 1, [(0, 2, 0)]),
            Err(GraphError::VertexOutOfRange { vertex: 2, .. })
        ));
        assert!(matches!(
            ColouredMultigraph::new_unchecked(2, 1, [(0, 1, 1)]),
            Err(GraphError::ColourOutOfRange { colour: 1, .. })
        ));
    }

    #[test]
    fn load_minimal_file() {
        let g = ColouredMultigraph::load_str("2 1\n0 1 0\n").unwrap();
        assert_eq!(g.num_vertices(), 2);
        assert_eq!(g.num_colours(), 1);
        assert_eq!(g.num_edges(), 1);
        assert_eq!(*g.edge(EdgeId(0)), Edge::new(0, 1, 0));
    }

    #[test]
    fn load_empty_edge_section() {
        let g = ColouredMultigraph::load_str("# nothing\n5 3\n").unwrap();
        assert_eq!(g.num_edges(), 0);
        assert!(g.validate().is_empty());
    }

    #[test]
    fn load_reports_loop_with_line() {
        let err = ColouredMultigraph::load_str("4 4\n0 1 0\n0 0 3\n").unwrap_err();
        assert_eq!(err, LoadError::Loop { line: 3, vertex: 0 });
    }

    #[test]
    fn load_reports_parse_errors() {
        assert!(matches!(
            ColouredMultigraph::load_str("2 1\n0 x 0\n"),
            Err(LoadError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            ColouredMultigraph::load_str("2 1\n0 1\n"),
            Err(LoadError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            ColouredMultigraph::load_str("2 1\n0 5 0\n"),
            Err(LoadError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            ColouredMultigraph::load_str(""),
            Err(LoadError::Parse { .. })
        ));
    }

    #[test]
    fn load_delegates_properness_to_validate() {
        let err = ColouredMultigraph::load_str("3 1\n0 1 0\n1 2 0\n").unwrap_err();
        match err {
            LoadError::Invalid(report) => assert!(matches!(
                report.violations[0],
                ValidationIssue::ColourClash { vertex: 1, .. }
            )),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn comments_and_duplicates() {
        let g = ColouredMultigraph::load_str("3 2 # header\n0 1 0 # first\n\n0 1 1\n").unwrap();
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.multiplicity(0, 1), 2);
    }

    #[test]
    fn save_then_load_preserves_ids() {
        let g = ColouredMultigraph::new(4, 3, [(2, 1, 0), (0, 3, 0), (0, 1, 1), (1, 0, 2)]).unwrap();
        let back = ColouredMultigraph::load_str(&g.to_text()).unwrap();
        assert_eq!(back.canonical_edges(), g.canonical_edges());
        assert_eq!(back.to_text(), g.to_text());
    }

    #[test]
    fn hypothesis_single_edge_has_deficit() {
        let g = ColouredMultigraph::new(2, 1, [(0, 1, 0)]).unwrap();
        let mut params = InstanceParams::for_colours(1, half());
        params.min_colour_count = 2;
        let report = g.hypothesis_check(&params);
        assert!(!report.satisfied);
        assert_eq!(
            report.deficits,
            vec![ColourDeficit {
                colour: 0,
                count: 1,
                missing: 1
            }]
        );
    }

    #[test]
    fn hypothesis_two_colours_three_times() {
        let g = ColouredMultigraph::new(
            6,
            2,
            [(0, 1, 0), (2, 3, 0), (4, 5, 0), (1, 2, 1), (3, 4, 1), (5, 0, 1)],
        )
        .unwrap();
        let mut params = InstanceParams::for_colours(2, half());
        params.min_colour_count = 3;
        let report = g.hypothesis_check(&params);
        assert!(report.satisfied, "{report:?}");
        assert_eq!(report.colour_counts, vec![3, 3]);
    }

    #[test]
    fn hypothesis_flags_multiplicity() {
        let g = ColouredMultigraph::new(2, 2, [(0, 1, 0), (0, 1, 1)]).unwrap();
        let mut params = InstanceParams::for_colours(2, half());
        params.min_colour_count = 1;
        params.multiplicity_cap = 1;
        let report = g.hypothesis_check(&params);
        assert!(!report.satisfied);
        assert_eq!(report.over_cap, vec![PairMultiplicity { u: 0, v: 1, count: 2 }]);
    }

    #[test]
    fn default_params() {
        let p = InstanceParams::for_colours(10, half());
        assert_eq!(p.min_colour_count, 15);
        assert_eq!(p.multiplicity_cap, 1);
        assert_eq!(p.alpha, Rational64::new(1, 24));
        assert!(p.alpha_warning().is_none());
        let p = InstanceParams::for_colours(7, Rational64::new(1, 3));
        assert_eq!(p.min_colour_count, 10); // ceil(28/3)
        assert_eq!(InstanceParams::for_colours(40, half()).multiplicity_cap, 2);
        let loud = p.with_alpha(Rational64::new(1, 2));
        assert!(loud.alpha_warning().is_some());
    }

    #[test]
    fn thresholds_round_up_with_floor_one() {
        let p = InstanceParams::for_colours(10, half()); // alpha = 1/24
        assert_eq!(p.threshold(0), 1);
        assert_eq!(p.threshold(24), 1);
        assert_eq!(p.threshold(25), 2);
        assert_eq!(p.half_threshold(48), 1);
        assert_eq!(p.half_threshold(49), 2);
    }

    #[test]
    fn rationals_parse() {
        assert_eq!(parse_rational("0.5"), Ok(Rational64::new(1, 2)));
        assert_eq!(parse_rational("1/24"), Ok(Rational64::new(1, 24)));
        assert_eq!(parse_rational("2"), Ok(Rational64::from_integer(2)));
        assert_eq!(parse_rational(".25"), Ok(Rational64::new(1, 4)));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("0.").is_err());
    }
}
