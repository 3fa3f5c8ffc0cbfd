//! Robust switching and augmentation.
//!
//! A *switch* takes a rainbow matching `M'` that is close to the reference
//! matching `M` and removes one reachable colour `c` (and the head `v` of
//! `m_c`) while keeping a set of edges, staying off a set of vertices and a
//! set of colours, and keeping the size. At level 1 it exchanges two edges
//! for two along a pair of 2-edge paths; at level `i > 1` it recurses into
//! the level that certified `m_c` and then reroutes `t(v)` along the
//! certifying edge.
//!
//! Chains of switches turn each obstruction reported by
//! [`find_violations`](crate::reachability::find_violations) into a matching
//! one edge larger.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::instances::Seed;
use crate::matching::{closeness, greedy, verify, MatchingJson, RainbowMatching};
use crate::multigraph::{Colour, ColouredMultigraph, EdgeId, InstanceParams, Vertex};
use crate::reachability::{
    analyse, counting_diagnostics, find_violations, Analysis, CountReport, FullColour, Violation,
    ViolationKind,
};

/// Closeness budgets per level.
pub struct ClosenessBudget;

impl ClosenessBudget {
    /// `f(i) = 3 * 2^(i-1) - 2`, so `f(1) = 1`, `f(2) = 4`, `f(3) = 10` and
    /// `f(i) = 2 f(i-1) + 2`.
    pub fn f(level: usize) -> usize {
        assert!(level >= 1, "levels start at 1");
        3usize
            .checked_shl((level - 1) as u32)
            .filter(|x| x.leading_zeros() > 0)
            .map_or(usize::MAX, |x| x - 2)
    }

    /// The bound the construction actually meets: the level-1 exchange
    /// replaces two edges of `M` by two new ones (4), and a level-`i` switch
    /// adds at most two recursive budgets plus 2, so `3 * 2^i - 2`.
    pub fn realised(level: usize) -> usize {
        assert!(level >= 1, "levels start at 1");
        3usize
            .checked_shl(level as u32)
            .filter(|x| x.leading_zeros() > 0)
            .map_or(usize::MAX, |x| x - 2)
    }
}

/// `2 (m - i + 1)`: the largest fix / avoid set a level-`i` switch accepts.
pub fn set_bound(m: usize, level: usize) -> usize {
    2 * (m + 1).saturating_sub(level)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwitchRequest {
    /// `M'`, with `|M' △ M| ≤ budget` and `|M'| = |M|`.
    pub current: RainbowMatching,
    pub target_colour: Colour,
    /// Head of `m_c`; it lies in `V_1 ∪ ... ∪ V_level`.
    pub target_vertex: Vertex,
    pub fix: BTreeSet<EdgeId>,
    pub avoid_vertices: BTreeSet<Vertex>,
    pub avoid_colours: BTreeSet<Colour>,
    pub budget: usize,
    pub level: usize,
}

impl SwitchRequest {
    pub fn new(current: RainbowMatching, target_colour: Colour, target_vertex: Vertex, level: usize) -> Self {
        SwitchRequest {
            current,
            target_colour,
            target_vertex,
            fix: BTreeSet::new(),
            avoid_vertices: BTreeSet::new(),
            avoid_colours: BTreeSet::new(),
            budget: 0,
            level,
        }
    }

    pub fn fixing(mut self, edges: impl IntoIterator<Item = EdgeId>) -> Self {
        self.fix.extend(edges);
        self
    }

    pub fn avoiding_vertices(mut self, vertices: impl IntoIterator<Item = Vertex>) -> Self {
        self.avoid_vertices.extend(vertices);
        self
    }

    pub fn avoiding_colours(mut self, colours: impl IntoIterator<Item = Colour>) -> Self {
        self.avoid_colours.extend(colours);
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }
}

/// One elementary exchange: `removed` left the matching, `added` joined.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Exchange {
    pub removed: Vec<EdgeId>,
    pub added: Vec<EdgeId>,
    pub depth: usize,
    pub level: usize,
}

/// Why configurations or candidate edges were discarded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FilterCounters {
    pub configurations: usize,
    /// `w` covered by `M'` or in the avoid set.
    pub w_constraints: usize,
    /// `z` equal to `w`, covered by `M'` or in the avoid set.
    pub z_constraints: usize,
    /// `u t(u)` (or `m_{c'}`) missing from `M'` or fixed.
    pub partner_constraints: usize,
    /// The colour of `t(v) w` not carried by `u t(u)` in `M'`.
    pub partner_colour: usize,
    /// The colour of `t(u) z` used by `M'` or avoided.
    pub free_colour: usize,
    /// Recursive budget would exceed the configured cap.
    pub budget: usize,
    /// Recursive switch returned NotFound.
    pub recursion: usize,
}

impl FilterCounters {
    pub fn absorb(&mut self, other: &FilterCounters) {
        self.configurations += other.configurations;
        self.w_constraints += other.w_constraints;
        self.z_constraints += other.z_constraints;
        self.partner_constraints += other.partner_constraints;
        self.partner_colour += other.partner_colour;
        self.free_colour += other.free_colour;
        self.budget += other.budget;
        self.recursion += other.recursion;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwitchOutcome {
    pub result: RainbowMatching,
    pub trace: Vec<Exchange>,
    pub rejections: FilterCounters,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SwitchError {
    #[error("no admissible configuration at level {level}")]
    NotFound {
        level: usize,
        rejections: Box<FilterCounters>,
        node_limit_hit: bool,
    },
    #[error("recursion depth {depth} exceeds level {level}")]
    DepthExceeded { depth: usize, level: usize },
    #[error("invalid switch request: {0}")]
    InvalidRequest(String),
    #[error("switch outcome broke its contract: {0}")]
    ContractBroken(String),
}

impl SwitchError {
    pub fn rejections(&self) -> FilterCounters {
        match self {
            SwitchError::NotFound { rejections, .. } => **rejections,
            _ => FilterCounters::default(),
        }
    }
}

/// A successful switch, kept for auditing.
#[derive(Clone, Debug)]
pub struct SwitchRecord {
    /// The reference matching `M`.
    pub base: RainbowMatching,
    pub request: SwitchRequest,
    pub result: RainbowMatching,
    pub depth: usize,
    /// Level of the target head, which can be below `request.level`.
    pub vertex_level: usize,
    /// `|M △ M''|`.
    pub closeness: usize,
}

impl SwitchRecord {
    /// `closeness ≤ budget + f(level)`.
    pub fn within_stated_budget(&self) -> bool {
        self.closeness <= self.request.budget.saturating_add(ClosenessBudget::f(self.request.level))
    }

    /// `closeness ≤ budget + realised(level)`.
    pub fn within_realised_budget(&self) -> bool {
        self.closeness
            <= self
                .request
                .budget
                .saturating_add(ClosenessBudget::realised(self.request.level))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SwitchOptions {
    /// Largest budget `λ` a switch accepts.
    pub max_budget: usize,
    /// Seeded random choice among surviving configurations instead of the
    /// lexicographically least one.
    pub shuffle: Option<Seed>,
    /// Switch calls allowed per top-level request, recursion included.
    pub node_limit: usize,
}

impl Default for SwitchOptions {
    fn default() -> Self {
        SwitchOptions {
            max_budget: 64,
            shuffle: None,
            node_limit: 20_000,
        }
    }
}

/// Checks the three clauses a switch outcome must satisfy, plus validity:
/// `c ∉ C(M'')`, `v ∉ V(M'')`, `|M''| = |M'|`, `E_fix ⊆ M''`, and `M''`
/// avoids the vertex and colour sets.
pub fn check_outcome(
    graph: &ColouredMultigraph,
    request: &SwitchRequest,
    result: &RainbowMatching,
) -> Result<(), String> {
    let report = verify(graph, result);
    if !report.is_empty() {
        return Err(format!("not a rainbow matching: {report}"));
    }
    if result.uses_colour(request.target_colour) {
        return Err(format!("colour {} still used", request.target_colour));
    }
    if result.covers(request.target_vertex) {
        return Err(format!("vertex {} still covered", request.target_vertex));
    }
    if result.len() != request.current.len() {
        return Err(format!(
            "size changed from {} to {}",
            request.current.len(),
            result.len()
        ));
    }
    if let Some(e) = request.fix.iter().find(|&&e| !result.contains(e)) {
        return Err(format!("fixed edge {e} dropped"));
    }
    if let Some(v) = request.avoid_vertices.iter().find(|&&v| result.covers(v)) {
        return Err(format!("avoided vertex {v} covered"));
    }
    if let Some(c) = request.avoid_colours.iter().find(|&&c| result.uses_colour(c)) {
        return Err(format!("avoided colour {c} used"));
    }
    Ok(())
}

/// Runs switches against one reference matching and its analysis.
pub struct Switcher<'a> {
    graph: &'a ColouredMultigraph,
    base: &'a RainbowMatching,
    analysis: &'a Analysis,
    options: SwitchOptions,
    rng: Option<ChaCha8Rng>,
    nodes: usize,
    top_level: usize,
    log: Vec<SwitchRecord>,
}

/// A level-1 configuration `(v t(v) w, u t(u) z)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Configuration {
    w: Vertex,
    z: Vertex,
    good_edge: EdgeId,
    partner: EdgeId,
    free_edge: EdgeId,
}

/// An `R_j`-edge at `t(v)` leading to a free vertex or a lower head.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Candidate {
    off_certificate: bool,
    endpoint: Vertex,
    edge: EdgeId,
    level: usize,
}

impl<'a> Switcher<'a> {
    pub fn new(
        graph: &'a ColouredMultigraph,
        base: &'a RainbowMatching,
        analysis: &'a Analysis,
        options: SwitchOptions,
    ) -> Self {
        Switcher {
            graph,
            base,
            analysis,
            options,
            rng: options.shuffle.map(Seed::rng),
            nodes: 0,
            top_level: 0,
            log: Vec::new(),
        }
    }

    pub fn m(&self) -> usize {
        self.analysis.hierarchy.m()
    }

    /// Every successful switch so far, nested ones included.
    pub fn log(&self) -> &[SwitchRecord] {
        &self.log
    }

    pub fn take_log(&mut self) -> Vec<SwitchRecord> {
        std::mem::take(&mut self.log)
    }

    /// A request targeting the reachable colour `colour` in `current`, at
    /// the top level `m`.
    pub fn request_for(&self, current: RainbowMatching, colour: Colour) -> Option<SwitchRequest> {
        let entry = self.analysis.hierarchy.entry(colour)?;
        Some(SwitchRequest::new(
            current,
            colour,
            entry.oriented.head,
            self.m(),
        ))
    }

    fn validate(&self, req: &SwitchRequest) -> Result<(usize, EdgeId), SwitchError> {
        let invalid = |msg: String| Err(SwitchError::InvalidRequest(msg));
        let hierarchy = &self.analysis.hierarchy;
        let m = hierarchy.m();
        if req.level == 0 || req.level > m {
            return invalid(format!("level {} outside 1..={m}", req.level));
        }
        let Some(entry) = hierarchy.entry(req.target_colour) else {
            return invalid(format!("colour {} is not reachable", req.target_colour));
        };
        if entry.oriented.head != req.target_vertex {
            return invalid(format!(
                "vertex {} is not the head of m_{}",
                req.target_vertex, req.target_colour
            ));
        }
        let vertex_level = hierarchy
            .level_of_head(req.target_vertex)
            .expect("heads of reachable colours have levels");
        if vertex_level > req.level {
            return invalid(format!(
                "vertex {} is at level {vertex_level} above {}",
                req.target_vertex, req.level
            ));
        }
        let mc = entry.oriented.edge;
        if req.current.edge_of_colour(req.target_colour) != Some(mc) {
            return invalid(format!("m_{} is not in the current matching", req.target_colour));
        }
        if req.fix.contains(&mc) {
            return invalid(format!("m_{} is fixed", req.target_colour));
        }
        if let Some(e) = req.fix.iter().find(|&&e| !req.current.contains(e)) {
            return invalid(format!("fixed edge {e} is not in the current matching"));
        }
        if let Some(v) = req.avoid_vertices.iter().find(|&&v| req.current.covers(v)) {
            return invalid(format!("avoided vertex {v} is covered"));
        }
        if let Some(c) = req.avoid_colours.iter().find(|&&c| req.current.uses_colour(c)) {
            return invalid(format!("avoided colour {c} is used"));
        }
        let bound = set_bound(m, req.level);
        for (name, size) in [
            ("fix", req.fix.len()),
            ("avoid_vertices", req.avoid_vertices.len()),
            ("avoid_colours", req.avoid_colours.len()),
        ] {
            if size > bound {
                return invalid(format!("{name} has {size} entries, bound is {bound}"));
            }
        }
        if req.budget > self.options.max_budget {
            return invalid(format!(
                "budget {} exceeds the cap {}",
                req.budget, self.options.max_budget
            ));
        }
        let close = closeness(self.base, &req.current);
        if !close.within(req.budget) {
            return invalid(format!(
                "current matching is not {}-close to the reference ({:?})",
                req.budget, close
            ));
        }
        Ok((vertex_level, mc))
    }

    /// Finds `M''` with `c ∉ C(M'')`, `v ∉ V(M'')`, `|M''| = |M'|`, fixing
    /// `fix` and avoiding both avoid sets.
    pub fn robust_switch(&mut self, req: &SwitchRequest) -> Result<SwitchOutcome, SwitchError> {
        self.nodes = 0;
        self.top_level = req.level;
        self.switch_at(req, 1)
    }

    fn switch_at(&mut self, req: &SwitchRequest, depth: usize) -> Result<SwitchOutcome, SwitchError> {
        let (vertex_level, mc) = self.validate(req)?;
        if depth > self.top_level {
            return Err(SwitchError::DepthExceeded {
                depth,
                level: self.top_level,
            });
        }
        self.nodes += 1;
        if self.nodes > self.options.node_limit {
            return Err(SwitchError::NotFound {
                level: req.level,
                rejections: Box::default(),
                node_limit_hit: true,
            });
        }
        let outcome = if vertex_level == 1 {
            self.base_case(req, mc, depth)?
        } else {
            self.inductive_case(req, mc, vertex_level, depth)?
        };
        check_outcome(self.graph, req, &outcome.result).map_err(SwitchError::ContractBroken)?;
        self.log.push(SwitchRecord {
            base: self.base.clone(),
            request: req.clone(),
            result: outcome.result.clone(),
            depth,
            vertex_level,
            closeness: closeness(self.base, &outcome.result).lambda,
        });
        Ok(outcome)
    }

    fn base_case(
        &mut self,
        req: &SwitchRequest,
        mc: EdgeId,
        depth: usize,
    ) -> Result<SwitchOutcome, SwitchError> {
        let graph = self.graph;
        let flex = &self.analysis.flex;
        let tail = graph.edge(mc).other(req.target_vertex);
        let current = &req.current;
        let mut counters = FilterCounters::default();
        let mut survivors = Vec::new();
        for &good_edge in self.analysis.good_bad.good_at(tail) {
            let w = graph.edge(good_edge).other(tail);
            let shared = graph.colour(good_edge);
            let partner = self
                .base
                .edge_of_colour(shared)
                .expect("good edges have flexible, hence matched, colours");
            let p = graph.edge(partner);
            for x in [p.u, p.v] {
                for &(free_edge, z) in flex.external_free_at(x) {
                    counters.configurations += 1;
                    let config = Configuration {
                        w,
                        z,
                        good_edge,
                        partner,
                        free_edge,
                    };
                    if current.covers(w) || req.avoid_vertices.contains(&w) {
                        counters.w_constraints += 1;
                    } else if z == w || current.covers(z) || req.avoid_vertices.contains(&z) {
                        counters.z_constraints += 1;
                    } else if partner == mc || !current.contains(partner) || req.fix.contains(&partner) {
                        counters.partner_constraints += 1;
                    } else if current.edge_of_colour(shared) != Some(partner) {
                        counters.partner_colour += 1;
                    } else if current.uses_colour(graph.colour(free_edge))
                        || req.avoid_colours.contains(&graph.colour(free_edge))
                    {
                        counters.free_colour += 1;
                    } else {
                        survivors.push(config);
                    }
                }
            }
        }
        let chosen = match self.rng.as_mut() {
            Some(rng) => survivors.choose(rng).copied(),
            None => survivors.iter().min().copied(),
        };
        let Some(config) = chosen else {
            return Err(SwitchError::NotFound {
                level: req.level,
                rejections: Box::new(counters),
                node_limit_hit: false,
            });
        };
        let removed = vec![mc, config.partner];
        let added = vec![config.good_edge, config.free_edge];
        let result = current.exchange(graph, &removed, &added);
        Ok(SwitchOutcome {
            result,
            trace: vec![Exchange {
                removed,
                added,
                depth,
                level: 1,
            }],
            rejections: counters,
        })
    }

    fn candidates(&self, tail: Vertex, vertex_level: usize, certified_by: usize) -> Vec<Candidate> {
        let hierarchy = &self.analysis.hierarchy;
        let mut out = Vec::new();
        for &edge in self.graph.incident(tail) {
            let e = self.graph.edge(edge);
            let Some(level) = hierarchy.level_of_colour(e.colour) else {
                continue;
            };
            if level >= vertex_level {
                continue;
            }
            let endpoint = e.other(tail);
            let lower_head = hierarchy
                .level_of_head(endpoint)
                .is_some_and(|j| j < vertex_level);
            if self.base.covers(endpoint) && !lower_head {
                continue;
            }
            out.push(Candidate {
                off_certificate: level != certified_by,
                endpoint,
                edge,
                level,
            });
        }
        out.sort_unstable();
        if let Some(rng) = self.rng.clone().as_mut() {
            // keep certificate edges first, shuffle within each group
            let split = out.iter().position(|c| c.off_certificate).unwrap_or(out.len());
            let (certified, others) = out.split_at_mut(split);
            certified.shuffle(rng);
            others.shuffle(rng);
        }
        out
    }

    fn inductive_case(
        &mut self,
        req: &SwitchRequest,
        mc: EdgeId,
        vertex_level: usize,
        depth: usize,
    ) -> Result<SwitchOutcome, SwitchError> {
        let graph = self.graph;
        let hierarchy = &self.analysis.hierarchy;
        let entry = *hierarchy
            .entry(req.target_colour)
            .expect("validated as reachable");
        let tail = entry.oriented.tail;
        let current = &req.current;
        let mut counters = FilterCounters::default();
        let mut node_limit_hit = false;

        for cand in self.candidates(tail, vertex_level, entry.certified_by) {
            counters.configurations += 1;
            let via = graph.colour(cand.edge);
            let via_edge = self.base.edge_of_colour(via).expect("reachable colours are matched");
            let via_head = hierarchy.entry(via).expect("reachable").oriented.head;
            let y = cand.endpoint;

            let attempt = if !self.base.covers(y) {
                // t(v) y with y free: clear colour `via` while keeping v t(v)
                // and staying off y, then reroute t(v) to y.
                if current.covers(y) || req.avoid_vertices.contains(&y) {
                    counters.w_constraints += 1;
                    continue;
                }
                if !current.contains(via_edge) || req.fix.contains(&via_edge) {
                    counters.partner_constraints += 1;
                    continue;
                }
                let sub = SwitchRequest {
                    current: current.clone(),
                    target_colour: via,
                    target_vertex: via_head,
                    fix: with(&req.fix, [mc]),
                    avoid_vertices: with(&req.avoid_vertices, [y]),
                    avoid_colours: req.avoid_colours.clone(),
                    budget: req.budget,
                    level: cand.level,
                };
                self.switch_at(&sub, depth + 1).map(|o| vec![o])
            } else {
                // t(v) u with u a lower head: clear `via` keeping v t(v) and
                // u t(u), then clear u t(u) keeping v t(v) and off `via`.
                let u = y;
                let u_edge = self.base.edge_at(u).expect("heads are covered");
                let u_colour = graph.colour(u_edge);
                if !current.contains(u_edge) || req.fix.contains(&u_edge) {
                    counters.partner_constraints += 1;
                    continue;
                }
                if !current.contains(via_edge) || req.fix.contains(&via_edge) {
                    counters.partner_constraints += 1;
                    continue;
                }
                let first = SwitchRequest {
                    current: current.clone(),
                    target_colour: via,
                    target_vertex: via_head,
                    fix: with(&req.fix, [mc, u_edge]),
                    avoid_vertices: req.avoid_vertices.clone(),
                    avoid_colours: req.avoid_colours.clone(),
                    budget: req.budget,
                    level: cand.level,
                };
                match self.switch_at(&first, depth + 1) {
                    Err(e) => Err(e),
                    Ok(o1) => {
                        let budget = closeness(self.base, &o1.result).lambda;
                        if budget > self.options.max_budget {
                            counters.budget += 1;
                            continue;
                        }
                        let second = SwitchRequest {
                            current: o1.result.clone(),
                            target_colour: u_colour,
                            target_vertex: u,
                            fix: with(&req.fix, [mc]),
                            avoid_vertices: req.avoid_vertices.clone(),
                            avoid_colours: with(&req.avoid_colours, [via]),
                            budget,
                            level: hierarchy.level_of_head(u).expect("lower head"),
                        };
                        self.switch_at(&second, depth + 1).map(|o2| vec![o1, o2])
                    }
                }
            };

            match attempt {
                Ok(steps) => {
                    let last = &steps.last().expect("at least one step").result;
                    let result = last.exchange(graph, &[mc], &[cand.edge]);
                    let mut trace: Vec<Exchange> =
                        steps.iter().flat_map(|o| o.trace.iter().cloned()).collect();
                    for o in &steps {
                        counters.absorb(&o.rejections);
                    }
                    trace.push(Exchange {
                        removed: vec![mc],
                        added: vec![cand.edge],
                        depth,
                        level: vertex_level,
                    });
                    return Ok(SwitchOutcome {
                        result,
                        trace,
                        rejections: counters,
                    });
                }
                Err(SwitchError::NotFound {
                    rejections,
                    node_limit_hit: hit,
                    ..
                }) => {
                    counters.recursion += 1;
                    counters.absorb(&rejections);
                    if hit {
                        node_limit_hit = true;
                        break;
                    }
                }
                Err(other) => return Err(other),
            }
        }
        Err(SwitchError::NotFound {
            level: req.level,
            rejections: Box::new(counters),
            node_limit_hit,
        })
    }

    /// Resolves one violation into a matching with one more edge.
    pub fn augment(&mut self, violation: &Violation) -> Result<AugmentOutcome, AugmentFailure> {
        let graph = self.graph;
        let base = self.base;
        let m = self.m();
        let fail = |stage: usize, error: SwitchError, partial: Vec<Exchange>| AugmentFailure {
            violation: *violation,
            stage,
            error,
            partial,
        };
        let head_of = |c: Colour| self.analysis.hierarchy.entry(c).map(|e| e.oriented.head);

        let (chain, edge): (Vec<Step>, EdgeId) = match *violation {
            Violation::DirectExtension { edge, .. } => (Vec::new(), edge),
            Violation::FlexiblePair {
                matched, inside, ..
            } => {
                let result = self
                    .flexible_pair(matched, inside)
                    .ok_or_else(|| fail(0, SwitchError::InvalidRequest("no free-colour edge at the flexible edge".into()), Vec::new()))?;
                return self.finish(violation, result.0, vec![result.1], 0);
            }
            Violation::C1 {
                vertex, free, edge, colour,
            } => {
                let own = base.edge_at(vertex).expect("reachable heads are covered");
                let mc = base.edge_of_colour(colour).expect("reachable colours are matched");
                (
                    vec![
                        Step {
                            colour: graph.colour(own),
                            vertex,
                            fix: vec![mc],
                            avoid: vec![free],
                            avoid_colours: vec![],
                        },
                        Step {
                            colour,
                            vertex: head_of(colour).expect("reachable"),
                            fix: vec![],
                            avoid: vec![vertex, free],
                            avoid_colours: vec![],
                        },
                    ],
                    edge,
                )
            }
            Violation::C2 { u, v, edge, colour } => {
                let chain_for = |first: Vertex, second: Vertex| {
                    let e_first = base.edge_at(first).expect("covered");
                    let e_second = base.edge_at(second).expect("covered");
                    let mc3 = base.edge_of_colour(colour).expect("matched");
                    vec![
                        Step {
                            colour: graph.colour(e_first),
                            vertex: first,
                            fix: vec![e_second, mc3],
                            avoid: vec![],
                            avoid_colours: vec![],
                        },
                        Step {
                            colour: graph.colour(e_second),
                            vertex: second,
                            fix: vec![mc3],
                            avoid: vec![first],
                            avoid_colours: vec![],
                        },
                        Step {
                            colour,
                            vertex: head_of(colour).expect("reachable"),
                            fix: vec![],
                            avoid: vec![first, second],
                            avoid_colours: vec![],
                        },
                    ]
                };
                match self.run_chain(&chain_for(v, u), m) {
                    Ok((result, trace, switches)) => {
                        return self.finish(violation, result.with_edge(graph, edge), trace, switches)
                    }
                    Err(_) => (chain_for(u, v), edge),
                }
            }
            Violation::C3 { w, z, edge, colour } => (
                vec![Step {
                    colour,
                    vertex: head_of(colour).expect("reachable"),
                    fix: vec![],
                    avoid: vec![w, z],
                    avoid_colours: vec![],
                }],
                edge,
            ),
        };
        let (result, trace, switches) = self
            .run_chain(&chain, m)
            .map_err(|(stage, error, partial)| fail(stage, error, partial))?;
        self.finish(violation, result.with_edge(graph, edge), trace, switches)
    }

    fn finish(
        &self,
        violation: &Violation,
        result: RainbowMatching,
        trace: Vec<Exchange>,
        switches: usize,
    ) -> Result<AugmentOutcome, AugmentFailure> {
        let report = verify(self.graph, &result);
        if !report.is_empty() || result.len() != self.base.len() + 1 {
            return Err(AugmentFailure {
                violation: *violation,
                stage: usize::MAX,
                error: SwitchError::ContractBroken(format!(
                    "augmented matching invalid or wrong size: {report}"
                )),
                partial: trace,
            });
        }
        Ok(AugmentOutcome {
            matching: result,
            trace,
            switches,
        })
    }

    fn run_chain(
        &mut self,
        chain: &[Step],
        level: usize,
    ) -> Result<(RainbowMatching, Vec<Exchange>, usize), ChainFailure> {
        let mut current = self.base.clone();
        let mut trace = Vec::new();
        for (stage, step) in chain.iter().enumerate() {
            let budget = closeness(self.base, &current).lambda;
            let req = SwitchRequest {
                current: current.clone(),
                target_colour: step.colour,
                target_vertex: step.vertex,
                fix: step.fix.iter().copied().collect(),
                avoid_vertices: step.avoid.iter().copied().collect(),
                avoid_colours: step.avoid_colours.iter().copied().collect(),
                budget,
                level,
            };
            match self.robust_switch(&req) {
                Ok(outcome) => {
                    trace.extend(outcome.trace);
                    current = outcome.result;
                }
                Err(e) => return Err((stage, e, trace)),
            }
        }
        Ok((current, trace, chain.len()))
    }

    /// `M - m_c + e + t(u)z` for two `c`-edges inside `V_0`, where `t(u)z`
    /// is an external free-colour edge at `m_c` missing `e`.
    fn flexible_pair(&self, matched: EdgeId, inside: [EdgeId; 2]) -> Option<(RainbowMatching, Exchange)> {
        let graph = self.graph;
        let p = graph.edge(matched);
        let mut options: Vec<(EdgeId, EdgeId)> = Vec::new();
        for x in [p.u, p.v] {
            for &(free_edge, z) in self.analysis.flex.external_free_at(x) {
                for &e in &inside {
                    if !graph.edge(e).touches(z) {
                        options.push((free_edge, e));
                    }
                }
            }
        }
        let (free_edge, e) = options.into_iter().min()?;
        let removed = vec![matched];
        let added = vec![e, free_edge];
        let result = self.base.exchange(graph, &removed, &added);
        Some((
            result,
            Exchange {
                removed,
                added,
                depth: 0,
                level: 0,
            },
        ))
    }
}

struct Step {
    colour: Colour,
    vertex: Vertex,
    fix: Vec<EdgeId>,
    avoid: Vec<Vertex>,
    avoid_colours: Vec<Colour>,
}

fn with<T: Ord + Copy>(set: &BTreeSet<T>, extra: impl IntoIterator<Item = T>) -> BTreeSet<T> {
    let mut out = set.clone();
    out.extend(extra);
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AugmentOutcome {
    pub matching: RainbowMatching,
    pub trace: Vec<Exchange>,
    /// Top-level switches in the chain.
    pub switches: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AugmentFailure {
    pub violation: Violation,
    /// Index of the switch in the chain that failed.
    pub stage: usize,
    pub error: SwitchError,
    pub partial: Vec<Exchange>,
}

/// Stage index, error and the exchanges made before the failure.
type ChainFailure = (usize, SwitchError, Vec<Exchange>);

/// Resolves `violation` against `matching` (which `analysis` describes).
pub fn augment(
    graph: &ColouredMultigraph,
    matching: &RainbowMatching,
    analysis: &Analysis,
    violation: &Violation,
    options: SwitchOptions,
) -> Result<AugmentOutcome, AugmentFailure> {
    Switcher::new(graph, matching, analysis, options).augment(violation)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    TargetReached,
    Stalled,
    IterationCap,
}

impl SolveStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            SolveStatus::TargetReached => 0,
            SolveStatus::Stalled => 2,
            SolveStatus::IterationCap => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    pub target_deficit: usize,
    pub seed: Seed,
    pub max_iterations: usize,
    pub switch: SwitchOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            target_deficit: 0,
            seed: Seed(0),
            max_iterations: 10_000,
            switch: SwitchOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub size: usize,
    pub m: usize,
    pub flexible: usize,
    pub reachable: usize,
    pub violations: BTreeMap<ViolationKind, usize>,
    pub attempts: usize,
    pub applied: Option<ViolationKind>,
    pub switches: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub target: usize,
    pub num_colours: usize,
    pub initial_size: usize,
    pub size: usize,
    pub matching: MatchingJson,
    pub iterations: Vec<IterationRecord>,
    /// Successful switch calls, nested ones included.
    pub switches: usize,
    pub failed_attempts: usize,
    /// Filter rejections summed over the failed attempts of the last round.
    pub stall_rejections: Option<FilterCounters>,
    pub diagnostics: Option<CountReport>,
    #[serde(skip)]
    pub final_matching: RainbowMatching,
    #[serde(skip)]
    pub switch_log: Vec<SwitchRecord>,
    /// Size of the matching before each successful augmentation.
    #[serde(skip)]
    pub augment_sizes: Vec<(usize, usize)>,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Greedy start, then repeated analyse / detect / augment rounds until the
/// matching has `n - target_deficit` edges, no violation can be resolved,
/// or the iteration cap is hit.
pub fn solve(graph: &ColouredMultigraph, params: &InstanceParams, options: &SolveOptions) -> SolveReport {
    let started = Instant::now();
    let target = graph.num_colours().saturating_sub(options.target_deficit);
    let mut matching = greedy(graph, options.seed);
    let initial_size = matching.len();
    let mut iterations = Vec::new();
    let mut switch_log = Vec::new();
    let mut augment_sizes = Vec::new();
    let mut failed_attempts = 0;
    let mut stall_rejections = None;
    let mut switch_options = options.switch;
    let status = loop {
        debug_assert!(verify(graph, &matching).is_empty());
        if matching.len() >= target {
            break SolveStatus::TargetReached;
        }
        if iterations.len() == options.max_iterations {
            break SolveStatus::IterationCap;
        }
        let analysis = match analyse(graph, &matching, params) {
            Ok(a) => a,
            Err(FullColour) => break SolveStatus::TargetReached,
        };
        let violations = find_violations(graph, &matching, &analysis);
        let mut record = IterationRecord {
            iteration: iterations.len(),
            size: matching.len(),
            m: analysis.hierarchy.m(),
            flexible: analysis.flex.size(),
            reachable: analysis.hierarchy.reach_colours().len(),
            violations: BTreeMap::new(),
            attempts: 0,
            applied: None,
            switches: 0,
        };
        for v in &violations {
            *record.violations.entry(v.kind()).or_insert(0) += 1;
        }
        if let Some(seed) = options.switch.shuffle {
            switch_options.shuffle = Some(seed.derive(iterations.len() as u64));
        }
        let mut switcher = Switcher::new(graph, &matching, &analysis, switch_options);
        let mut rejections = FilterCounters::default();
        let mut next = None;
        for violation in &violations {
            record.attempts += 1;
            match switcher.augment(violation) {
                Ok(outcome) => {
                    record.applied = Some(violation.kind());
                    next = Some(outcome.matching);
                    break;
                }
                Err(failure) => {
                    failed_attempts += 1;
                    rejections.absorb(&failure.error.rejections());
                    if matches!(
                        failure.error,
                        SwitchError::ContractBroken(_) | SwitchError::DepthExceeded { .. }
                    ) {
                        log::error!("augment {:?}: {}", failure.violation, failure.error);
                    }
                }
            }
        }
        let log = switcher.take_log();
        record.switches = log.len();
        switch_log.extend(log);
        iterations.push(record);
        match next {
            Some(bigger) => {
                log::debug!("augmented {} -> {}", matching.len(), bigger.len());
                augment_sizes.push((matching.len(), bigger.len()));
                matching = bigger;
            }
            None => {
                stall_rejections = Some(rejections);
                break SolveStatus::Stalled;
            }
        }
    };
    let diagnostics = analyse(graph, &matching, params)
        .ok()
        .map(|a| counting_diagnostics(graph, &matching, &a.hierarchy, params));
    SolveReport {
        status,
        target,
        num_colours: graph.num_colours(),
        initial_size,
        size: matching.len(),
        matching: matching.to_json(graph),
        iterations,
        switches: switch_log.len(),
        failed_attempts,
        stall_rejections,
        diagnostics,
        final_matching: matching,
        switch_log,
        augment_sizes,
        wall_time: started.elapsed(),
    }
}
