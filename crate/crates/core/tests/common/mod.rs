#![allow(dead_code)]

use std::collections::BTreeSet;

use num_rational::Rational64;
use rainbow_core::matching::RainbowMatching;
use rainbow_core::multigraph::{ColouredMultigraph, EdgeId, InstanceParams};
use rainbow_core::reachability::{Analysis, ViolationKind};
use rainbow_core::{generate_random, RandomParams, Seed};

/// Random instance for fuzz seed `seed`: 2..=12 colours, classes of `n` to
/// `2n` edges, multiplicity cap 1 or 2, and a vertex budget of `2n..=3n`
/// (at least twice the class size).
pub fn fuzz_instance(seed: u64) -> ColouredMultigraph {
    let n = 2 + (seed % 11) as usize;
    let mut salt = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 17;
    let mut pick = |range: usize| {
        let x = (salt % range as u64) as usize;
        salt /= range as u64;
        x
    };
    let vertex_budget = 2 * n + pick(n + 1);
    let colour_count = (n + pick(n + 1)).min(vertex_budget / 2);
    let multiplicity_cap = 1 + pick(2);
    let params = RandomParams {
        num_colours: n,
        colour_count,
        multiplicity_cap,
        vertex_budget,
    };
    generate_random(&params, Seed(seed)).expect("fuzz parameters are feasible")
}

pub fn half() -> Rational64 {
    Rational64::new(1, 2)
}

pub fn params_for(graph: &ColouredMultigraph) -> InstanceParams {
    InstanceParams::for_colours(graph.num_colours(), half())
}

/// Violations straight from the definitions, as `(kind, edge)` pairs. Flexible
/// pairs are reported under the first inside edge only.
pub fn brute_force_violations(
    graph: &ColouredMultigraph,
    matching: &RainbowMatching,
    analysis: &Analysis,
) -> BTreeSet<(ViolationKind, EdgeId)> {
    let reach_colours: BTreeSet<usize> = analysis
        .hierarchy
        .levels
        .iter()
        .flat_map(|l| l.edges.iter().map(|e| e.colour))
        .collect();
    let heads: BTreeSet<usize> = analysis
        .hierarchy
        .levels
        .iter()
        .flat_map(|l| l.edges.iter().map(|e| e.oriented.head))
        .collect();
    let covered: BTreeSet<usize> = matching
        .edges()
        .iter()
        .flat_map(|&id| {
            let e = graph.edge(id);
            [e.u, e.v]
        })
        .collect();
    let used: BTreeSet<usize> = matching.edges().iter().map(|&id| graph.colour(id)).collect();
    let mut out = BTreeSet::new();
    let mut inside_flexible: std::collections::BTreeMap<usize, Vec<EdgeId>> = Default::default();
    for id in graph.edge_ids() {
        let e = graph.edge(id);
        let free_u = !covered.contains(&e.u);
        let free_v = !covered.contains(&e.v);
        if free_u && free_v && !used.contains(&e.colour) {
            out.insert((ViolationKind::DirectExtension, id));
        }
        if free_u && free_v && analysis.flex.flexible_colours.contains(&e.colour) {
            inside_flexible.entry(e.colour).or_default().push(id);
        }
        if !reach_colours.contains(&e.colour) {
            continue;
        }
        let head_u = heads.contains(&e.u);
        let head_v = heads.contains(&e.v);
        if (head_u && free_v) || (head_v && free_u) {
            out.insert((ViolationKind::C1, id));
        }
        if head_u && head_v {
            out.insert((ViolationKind::C2, id));
        }
        if free_u && free_v {
            out.insert((ViolationKind::C3, id));
        }
    }
    for ids in inside_flexible.values() {
        if ids.len() >= 2 {
            out.insert((ViolationKind::FlexiblePair, ids[0]));
        }
    }
    out
}
