//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_rational::Rational64;
use rainbow_core::instances::catalogue;
use rainbow_core::multigraph::{ColouredMultigraph, EdgeId, InstanceParams};
use rainbow_core::reachability::{analyse, find_violations, Analysis};
use rainbow_core::switching::{ClosenessBudget, SwitchRecord};
use rainbow_core::{
    cyclic_square, generate_random, greedy, latin_to_graph, max_partial_transversal,
    max_rainbow_matching, solve, verify, Limits, RainbowMatching, RandomParams, Seed,
    SolveOptions, SolveReport, SolveStatus,
};

use common::{brute_force_violations, fuzz_instance, params_for};

const FUZZ_INSTANCES: u64 = 1000;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

struct Suite {
    lines: Vec<Outcome>,
}

impl Suite {
    fn record(&mut self, name: &'static str, pass: bool, detail: impl Into<String>) {
        let detail = detail.into();
        println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.lines.push(Outcome { name, pass, detail });
    }
}

struct FuzzRun {
    graph: ColouredMultigraph,
    params: InstanceParams,
    report: SolveReport,
}

fn run_fuzz() -> (Vec<FuzzRun>, Duration) {
    let started = Instant::now();
    let runs = (0..FUZZ_INSTANCES)
        .map(|seed| {
            let graph = fuzz_instance(seed);
            let params = params_for(&graph);
            let options = SolveOptions {
                seed: Seed(seed),
                ..SolveOptions::default()
            };
            let report = solve(&graph, &params, &options);
            FuzzRun {
                graph,
                params,
                report,
            }
        })
        .collect();
    (runs, started.elapsed())
}

fn validity(suite: &mut Suite, runs: &[FuzzRun], elapsed: Duration) {
    let mut bad = 0;
    let mut max_edges = 0;
    for run in runs {
        max_edges = max_edges.max(run.graph.num_edges());
        let (from_json, report) = run.report.matching.to_matching(&run.graph);
        if !verify(&run.graph, &run.report.final_matching).is_empty()
            || !report.is_empty()
            || from_json != run.report.final_matching
            || run.report.size != run.report.final_matching.len()
        {
            bad += 1;
        }
    }
    let reached = runs
        .iter()
        .filter(|r| r.report.status == SolveStatus::TargetReached)
        .count();
    suite.record(
        "validity fuzz",
        bad == 0 && elapsed < Duration::from_secs(300) && max_edges <= 400,
        format!(
            "{} instances (max {max_edges} edges), {bad} invalid outputs, {reached} reached n, {:.1}s",
            runs.len(),
            elapsed.as_secs_f64()
        ),
    );
}

fn small_instances() -> Vec<ColouredMultigraph> {
    let mut out: Vec<ColouredMultigraph> = catalogue(5)
        .iter()
        .map(latin_to_graph)
        .filter(|g| g.num_edges() <= 14)
        .collect();
    let mut seed = 0u64;
    while out.len() < 400 {
        let n = 1 + (seed % 4) as usize;
        let colour_count = 1 + ((seed / 4) % 3) as usize;
        let params = RandomParams {
            num_colours: n,
            colour_count,
            multiplicity_cap: 1 + ((seed / 12) % 2) as usize,
            vertex_budget: 2 * colour_count + ((seed / 24) % 4) as usize,
        };
        if n * colour_count <= 14 {
            if let Ok(g) = generate_random(&params, Seed(seed)) {
                out.push(g);
            }
        }
        seed += 1;
    }
    out
}

fn oracle_soundness(suite: &mut Suite, runs: &[FuzzRun]) {
    let mut checked = 0;
    let mut above = 0;
    let mut gaps = 0;
    for (i, graph) in small_instances().iter().enumerate() {
        let params = params_for(graph);
        let report = solve(
            graph,
            &params,
            &SolveOptions {
                seed: Seed(i as u64),
                ..SolveOptions::default()
            },
        );
        let optimum = max_rainbow_matching(graph, Limits::default())
            .expect("tiny instances stay under the cap")
            .optimum;
        checked += 1;
        if report.size > optimum {
            above += 1;
        }
        if report.size < optimum {
            gaps += 1;
        }
    }
    let mut augments = 0;
    let mut non_increasing = 0;
    for run in runs {
        for &(before, after) in &run.report.augment_sizes {
            augments += 1;
            if after <= before {
                non_increasing += 1;
            }
        }
    }
    suite.record(
        "oracle soundness",
        above == 0 && non_increasing == 0,
        format!(
            "{checked} instances with <= 14 edges, {above} above optimum, {gaps} below; \
             {augments} augmentations, {non_increasing} not increasing"
        ),
    );
}

/// Instances meeting the size hypotheses at epsilon = 1/2 whose greedy
/// matching misses at least one colour, with that matching's analysis.
fn hypothesis_family() -> Vec<(ColouredMultigraph, RainbowMatching, InstanceParams, Analysis)> {
    let mut out = Vec::new();
    let mut seed = 0u64;
    while out.len() < 120 {
        let n = 8 + (seed % 13) as usize;
        let params = InstanceParams::for_colours(n, Rational64::new(1, 2));
        let random = RandomParams {
            num_colours: n,
            colour_count: params.min_colour_count,
            multiplicity_cap: params.multiplicity_cap,
            vertex_budget: 2 * params.min_colour_count + (seed % 5) as usize,
        };
        seed += 1;
        let Ok(graph) = generate_random(&random, Seed(seed)) else {
            continue;
        };
        assert!(graph.hypothesis_check(&params).satisfied);
        let matching = greedy(&graph, Seed(seed));
        if matching.len() >= n {
            continue;
        }
        let analysis = analyse(&graph, &matching, &params).expect("a colour is free");
        out.push((graph, matching, params, analysis));
    }
    out
}

fn flexible_bound(suite: &mut Suite, family: &[(ColouredMultigraph, RainbowMatching, InstanceParams, Analysis)]) {
    let mut failures = 0;
    let mut min_slack = i64::MAX;
    for (graph, _, params, analysis) in family {
        let n = graph.num_colours() as i64;
        let bound = ((params.epsilon / 2 - params.alpha) * n).ceil().to_integer();
        let size = analysis.flex.size() as i64;
        min_slack = min_slack.min(size - bound);
        if size < bound {
            failures += 1;
        }
    }
    suite.record(
        "flexible colour bound",
        failures == 0 && family.len() >= 100,
        format!(
            "{} instances, |F| >= ceil((eps/2 - alpha) n) failed on {failures}, least slack {min_slack}",
            family.len()
        ),
    );
}

fn bad_edge_bound(suite: &mut Suite, family: &[(ColouredMultigraph, RainbowMatching, InstanceParams, Analysis)]) {
    let mut failures = 0;
    let mut colours = 0;
    let mut worst = 0;
    for (_, _, params, analysis) in family {
        for &bad in analysis.good_bad.bad_per_colour.values() {
            colours += 1;
            worst = worst.max(bad);
            if params.alpha * Rational64::from_integer(bad as i64) > Rational64::from_integer(2) {
                failures += 1;
            }
        }
    }
    suite.record(
        "bad edge bound",
        failures == 0 && family.len() >= 100,
        format!("{colours} flexible colours, worst {worst} bad edges, bound 2/alpha = 24, {failures} over"),
    );
}

/// Re-checks the outcome clauses without the library's own checker.
fn clauses_hold(graph: &ColouredMultigraph, record: &SwitchRecord) -> bool {
    let req = &record.request;
    let result = &record.result;
    let mut vertices = BTreeSet::new();
    let mut colours = BTreeSet::new();
    for &id in result.edges() {
        let e = graph.edge(id);
        if !vertices.insert(e.u) || !vertices.insert(e.v) || !colours.insert(e.colour) {
            return false;
        }
    }
    let fix_kept = req.fix.iter().all(|e| result.edges().contains(e));
    !colours.contains(&req.target_colour)
        && !vertices.contains(&req.target_vertex)
        && result.len() == req.current.len()
        && fix_kept
        && req.avoid_vertices.is_disjoint(&vertices)
        && req.avoid_colours.is_disjoint(&colours)
}

fn robustness(suite: &mut Suite, runs: &[FuzzRun]) {
    let mut calls = 0;
    let mut clause_failures = 0;
    let mut stated_failures = 0;
    let mut realised_failures = 0;
    let mut per_level: std::collections::BTreeMap<usize, usize> = Default::default();
    for run in runs {
        for record in &run.report.switch_log {
            calls += 1;
            *per_level.entry(record.request.level).or_insert(0) += 1;
            if !clauses_hold(&run.graph, record) {
                clause_failures += 1;
            }
            let base: BTreeSet<EdgeId> = record.base.edges().iter().copied().collect();
            let result: BTreeSet<EdgeId> = record.result.edges().iter().copied().collect();
            let lambda = base.symmetric_difference(&result).count();
            assert_eq!(lambda, record.closeness);
            let i = record.request.level;
            if record.closeness > record.request.budget + ClosenessBudget::f(i) {
                stated_failures += 1;
            }
            if record.closeness > record.request.budget + (3 << i) - 2 {
                realised_failures += 1;
            }
        }
    }
    suite.record(
        "robustness contract: outcome clauses",
        clause_failures == 0 && calls > 0,
        format!("{calls} successful switches (by level {per_level:?}), {clause_failures} violate a clause"),
    );
    suite.record(
        "robustness contract: lambda <= budget + f(i), f(i) = 3*2^(i-1) - 2",
        stated_failures == 0 && calls > 0,
        format!("{stated_failures} of {calls} switches exceed budget + f(i)"),
    );
    suite.record(
        "robustness contract: lambda <= budget + 3*2^i - 2 (realised)",
        realised_failures == 0 && calls > 0,
        format!("{realised_failures} of {calls} switches exceed budget + 3*2^i - 2"),
    );
}

fn latin(suite: &mut Suite) {
    let started = Instant::now();
    let mut notes = Vec::new();
    let mut pass = true;
    for n in [2, 4, 6] {
        let square = cyclic_square(n);
        let graph = latin_to_graph(&square);
        let by_edges = max_rainbow_matching(&graph, Limits::default()).map(|r| r.optimum);
        let by_cells = max_partial_transversal(&square, Limits::default()).map(|r| r.optimum);
        let ok = by_edges == Ok(n - 1) && by_cells == Ok(n - 1);
        pass &= ok;
        notes.push(format!("cyclic {n}: optimum {:?}/{:?}", by_edges.ok(), by_cells.ok()));
    }
    for n in [1, 3, 5, 7] {
        let graph = latin_to_graph(&cyclic_square(n));
        let params = params_for(&graph);
        let report = solve(&graph, &params, &SolveOptions::default());
        let ok = report.status == SolveStatus::TargetReached && report.size == n;
        pass &= ok;
        notes.push(format!("cyclic {n}: solve {}", report.size));
    }
    let squares = catalogue(5);
    let mut short = 0;
    for square in &squares {
        let best = max_partial_transversal(square, Limits::default())
            .expect("order <= 5 stays under the cap")
            .optimum;
        if best + 1 < square.order() {
            short += 1;
        }
    }
    pass &= short == 0;
    notes.push(format!("{} catalogue squares, {short} below n-1", squares.len()));
    let elapsed = started.elapsed();
    pass &= elapsed < Duration::from_secs(120);
    suite.record(
        "latin square reproductions",
        pass,
        format!("{}; {:.1}s", notes.join(", "), elapsed.as_secs_f64()),
    );
}

fn hierarchy_sanity(suite: &mut Suite, runs: &[FuzzRun]) {
    let mut analyses = 0;
    let mut depth_failures = 0;
    let mut partition_failures = 0;
    let mut detector_failures = 0;
    let mut max_m = 0;
    for (i, run) in runs.iter().enumerate() {
        let starts = [greedy(&run.graph, Seed(i as u64 + 7)), run.report.final_matching.clone()];
        for matching in &starts {
            let Ok(analysis) = analyse(&run.graph, matching, &run.params) else {
                continue;
            };
            analyses += 1;
            let m = analysis.hierarchy.m();
            max_m = max_m.max(m);
            if run.params.alpha * Rational64::from_integer(m as i64) >= Rational64::from_integer(1) {
                depth_failures += 1;
            }
            let mut seen: BTreeSet<EdgeId> = BTreeSet::new();
            let mut ok = true;
            for level in analysis.hierarchy.levels.iter().chain([&analysis.hierarchy.stopped]) {
                for e in &level.edges {
                    ok &= matching.contains(e.oriented.edge) && seen.insert(e.oriented.edge);
                    ok &= run.graph.edge(e.oriented.edge).colour == e.colour;
                }
            }
            if !ok {
                partition_failures += 1;
            }
            let found: BTreeSet<_> = find_violations(&run.graph, matching, &analysis)
                .iter()
                .map(|v| (v.kind(), v.edge()))
                .collect();
            if found != brute_force_violations(&run.graph, matching, &analysis) {
                detector_failures += 1;
            }
        }
    }
    suite.record(
        "hierarchy sanity",
        depth_failures == 0 && partition_failures == 0 && detector_failures == 0,
        format!(
            "{analyses} analyses, max m {max_m}, m >= 1/alpha {depth_failures}, \
             partition failures {partition_failures}, detector disagreements {detector_failures}"
        ),
    );
}

fn main() -> ExitCode {
    let mut suite = Suite { lines: Vec::new() };
    let (runs, elapsed) = run_fuzz();
    validity(&mut suite, &runs, elapsed);
    oracle_soundness(&mut suite, &runs);
    let family = hypothesis_family();
    flexible_bound(&mut suite, &family);
    bad_edge_bound(&mut suite, &family);
    robustness(&mut suite, &runs);
    latin(&mut suite);
    hierarchy_sanity(&mut suite, &runs);

    let failed: Vec<&Outcome> = suite.lines.iter().filter(|o| !o.pass).collect();
    println!(
        "acceptance: {} of {} criteria passed",
        suite.lines.len() - failed.len(),
        suite.lines.len()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        for o in failed {
            eprintln!("failed: {}: {}", o.name, o.detail);
        }
        ExitCode::FAILURE
    }
}
