//! Exact maximum rainbow matchings by exhaustive branch and bound, for
//! ground truth on small instances.

use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::instances::LatinSquare;
use crate::matching::RainbowMatching;
use crate::multigraph::{ColouredMultigraph, EdgeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_nodes: u64,
    pub time_limit: Duration,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_nodes: 100_000_000,
            time_limit: Duration::from_secs(60),
        }
    }
}

impl Limits {
    pub fn nodes(max_nodes: u64) -> Self {
        Limits {
            max_nodes,
            ..Limits::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleResult {
    pub optimum: usize,
    /// One optimal matching, as sorted edge ids.
    pub witness: Vec<EdgeId>,
    pub nodes_explored: u64,
}

impl OracleResult {
    pub fn matching(&self, graph: &ColouredMultigraph) -> RainbowMatching {
        RainbowMatching::from_edges_unchecked(graph, self.witness.iter().copied())
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("search cap exceeded after {nodes_explored} nodes; best found {best}")]
pub struct CapExceeded {
    pub best: usize,
    pub best_witness: Vec<EdgeId>,
    pub nodes_explored: u64,
}

struct Search<'a> {
    graph: &'a ColouredMultigraph,
    order: Vec<EdgeId>,
    /// For each position, the distinct colours appearing at or after it.
    colours_from: Vec<Vec<usize>>,
    used_vertex: Vec<bool>,
    used_colour: Vec<bool>,
    current: Vec<EdgeId>,
    best: Vec<EdgeId>,
    ceiling: usize,
    nodes: u64,
    limits: Limits,
    started: Instant,
    aborted: bool,
}

impl Search<'_> {
    fn bound(&self, pos: usize) -> usize {
        let free_colours = self.colours_from[pos]
            .iter()
            .filter(|&&c| !self.used_colour[c])
            .count();
        self.current.len() + free_colours
    }

    fn run(&mut self, pos: usize) {
        if self.aborted {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.limits.max_nodes
            || (self.nodes.is_multiple_of(4096) && self.started.elapsed() > self.limits.time_limit)
        {
            self.aborted = true;
            return;
        }
        if self.current.len() > self.best.len() {
            self.best = self.current.clone();
        }
        if pos == self.order.len()
            || self.best.len() == self.ceiling
            || self.bound(pos) <= self.best.len()
        {
            return;
        }
        let id = self.order[pos];
        let e = *self.graph.edge(id);
        if !self.used_vertex[e.u] && !self.used_vertex[e.v] && !self.used_colour[e.colour] {
            self.used_vertex[e.u] = true;
            self.used_vertex[e.v] = true;
            self.used_colour[e.colour] = true;
            self.current.push(id);
            self.run(pos + 1);
            self.current.pop();
            self.used_vertex[e.u] = false;
            self.used_vertex[e.v] = false;
            self.used_colour[e.colour] = false;
        }
        self.run(pos + 1);
    }
}

/// Depth-first include/exclude over edges sorted by (colour class size,
/// EdgeId), pruned by vertex and colour disjointness and by the bound
/// `current + distinct unused colours among the remaining edges`.
pub fn max_rainbow_matching(
    graph: &ColouredMultigraph,
    limits: Limits,
) -> Result<OracleResult, CapExceeded> {
    let mut order: Vec<EdgeId> = graph
        .edge_ids()
        .filter(|&id| {
            let e = graph.edge(id);
            e.u != e.v
        })
        .collect();
    order.sort_by_key(|&id| (graph.colour_class(graph.colour(id)).len(), id));
    let mut colours_from = vec![Vec::new(); order.len() + 1];
    let mut seen = vec![false; graph.num_colours()];
    for pos in (0..order.len()).rev() {
        let c = graph.colour(order[pos]);
        colours_from[pos] = colours_from[pos + 1].clone();
        if !seen[c] {
            seen[c] = true;
            colours_from[pos].push(c);
        }
    }
    let ceiling = graph.num_colours().min(graph.num_vertices() / 2);
    let mut search = Search {
        graph,
        order,
        colours_from,
        used_vertex: vec![false; graph.num_vertices()],
        used_colour: vec![false; graph.num_colours()],
        current: Vec::new(),
        best: Vec::new(),
        ceiling,
        nodes: 0,
        limits,
        started: Instant::now(),
        aborted: false,
    };
    search.run(0);
    let mut witness = search.best;
    witness.sort_unstable();
    if search.aborted {
        Err(CapExceeded {
            best: witness.len(),
            best_witness: witness,
            nodes_explored: search.nodes,
        })
    } else {
        Ok(OracleResult {
            optimum: witness.len(),
            witness,
            nodes_explored: search.nodes,
        })
    }
}

/// A largest partial transversal, found by a row-by-row search over cells
/// (each row either contributes one cell with an unused column and symbol,
/// or none). Witness ids are `row * n + col`, which is also the EdgeId of
/// that cell in `latin_to_graph`.
pub fn max_partial_transversal(
    square: &LatinSquare,
    limits: Limits,
) -> Result<OracleResult, CapExceeded> {
    struct Cells<'a> {
        square: &'a LatinSquare,
        n: usize,
        col_used: Vec<bool>,
        sym_used: Vec<bool>,
        current: Vec<(usize, usize)>,
        best: Vec<(usize, usize)>,
        nodes: u64,
        limits: Limits,
        started: Instant,
        aborted: bool,
    }

    impl Cells<'_> {
        fn run(&mut self, row: usize) {
            if self.aborted {
                return;
            }
            self.nodes += 1;
            if self.nodes > self.limits.max_nodes
                || (self.nodes.is_multiple_of(4096) && self.started.elapsed() > self.limits.time_limit)
            {
                self.aborted = true;
                return;
            }
            if self.current.len() > self.best.len() {
                self.best = self.current.clone();
            }
            if row == self.n
                || self.best.len() == self.n
                || self.current.len() + (self.n - row) <= self.best.len()
            {
                return;
            }
            for col in 0..self.n {
                let sym = self.square.get(row, col);
                if self.col_used[col] || self.sym_used[sym] {
                    continue;
                }
                self.col_used[col] = true;
                self.sym_used[sym] = true;
                self.current.push((row, col));
                self.run(row + 1);
                self.current.pop();
                self.col_used[col] = false;
                self.sym_used[sym] = false;
            }
            self.run(row + 1);
        }
    }

    let n = square.order();
    let mut search = Cells {
        square,
        n,
        col_used: vec![false; n],
        sym_used: vec![false; n],
        current: Vec::new(),
        best: Vec::new(),
        nodes: 0,
        limits,
        started: Instant::now(),
        aborted: false,
    };
    search.run(0);
    let witness: Vec<EdgeId> = search
        .best
        .iter()
        .map(|&(r, c)| EdgeId(r * n + c))
        .collect();
    if search.aborted {
        Err(CapExceeded {
            best: witness.len(),
            best_witness: witness,
            nodes_explored: search.nodes,
        })
    } else {
        Ok(OracleResult {
            optimum: witness.len(),
            witness,
            nodes_explored: search.nodes,
        })
    }
}
