use super::*;
use crate::corpus::{fx_proj, fx_run};
use crate::edit::EditMapping;
use crate::ev::{canonical_ev, oracle_ev};
use crate::workflow::{col, Link, Operator, Predicate, Properties, Schema, TableSemantics, Workflow};

fn chain(id: &str, props: &[(&str, Properties)]) -> Workflow {
    let mut ops = vec![Operator::new("s", Properties::source("t", Schema::ints(&["x", "y", "z"])))];
    let mut links = Vec::new();
    let mut prev = "s";
    for (name, p) in props {
        ops.push(Operator::new(*name, p.clone()));
        links.push(Link::simple(prev, *name));
        prev = name;
    }
    ops.push(Operator::new("k", Properties::Sink));
    links.push(Link::simple(prev, "k"));
    Workflow::new(id, TableSemantics::Set, ops, links).unwrap()
}

fn both(a: Predicate, b: Predicate) -> (Properties, Properties) {
    (Properties::filter(a.clone().and(b.clone())), Properties::filter(b.and(a)))
}

/// Filters around `sorts` sort operators; every filter is rewritten into
/// an equivalent form.
fn sorted_pair(sorts: usize) -> VersionPair {
    let mut p = Vec::new();
    let mut q = Vec::new();
    for i in 0..=sorts {
        let (a, b) = both(col("x").gt(i as i64), col("y").lt(10));
        let name: &'static str = Box::leak(format!("f{i}").into_boxed_str());
        p.push((name, a));
        q.push((name, b));
        if i < sorts {
            let s: &'static str = Box::leak(format!("sort{i}").into_boxed_str());
            p.push((s, Properties::sort(&[("x", false)])));
            q.push((s, Properties::sort(&[("x", false)])));
        }
    }
    let (p, q) = (chain("p", &p), chain("q", &q));
    let m = EditMapping::identity(&p, &q);
    VersionPair::new(p, q, m).unwrap()
}

fn canonical() -> EvSet {
    EvSet::single(canonical_ev())
}

/// Every admissible window covering a change stays inside one segment.
fn assert_no_window_crosses(pair: &VersionPair, evs: &EvSet, segments: &[Segment]) {
    let n = pair.unit_count();
    assert!(n <= 14);
    for mask in 1u32..(1 << n) {
        let w = pair.window_of_units((0..n).filter(|u| mask & (1 << u) != 0));
        if pair.covered_changes(&w).is_empty() || !evs.status(pair, &w).admissible() {
            continue;
        }
        assert!(segments.iter().any(|s| w.is_within(&s.window)), "{:?} crosses segments", pair.describe(&w));
    }
}

fn assert_disjoint(segments: &[Segment]) {
    for (i, a) in segments.iter().enumerate() {
        for b in &segments[i + 1..] {
            assert!(!a.window.overlaps(&b.window));
        }
    }
}

#[test]
fn one_sort_between_edits_gives_two_segments() {
    let pair = sorted_pair(1);
    let segs = segmentation_by_unsupported_ops(&pair, &canonical());
    assert_eq!(segs.len(), 2);
    assert!(segs.iter().all(|s| s.changes.len() == 1));
    assert_disjoint(&segs);
    assert_no_window_crosses(&pair, &canonical(), &segs);
}

#[test]
fn two_sorts_give_three_segments() {
    let pair = sorted_pair(2);
    let segs = segmentation_by_unsupported_ops(&pair, &canonical());
    assert_eq!(segs.len(), 3);
    assert_disjoint(&segs);
    assert_no_window_crosses(&pair, &canonical(), &segs);
}

#[test]
fn without_unsupported_operators_the_pair_is_one_segment() {
    let pair = sorted_pair(0);
    let segs = segmentation_by_unsupported_ops(&pair, &canonical());
    assert_eq!(segs.len(), 1);
    assert_eq!(segs[0].window, pair.full_window());
}

#[test]
fn a_refuting_oracle_does_not_move_walls() {
    let pair = sorted_pair(1);
    let with_oracle = EvSet::new(vec![canonical_ev(), oracle_ev(8, 0)]).unwrap();
    let segs = segmentation_by_unsupported_ops(&pair, &with_oracle);
    assert_eq!(segs, segmentation_by_unsupported_ops(&pair, &canonical()));
    assert_eq!(segs.len(), 2);
}

#[test]
fn mcw_unions_respect_unsupported_operators() {
    let pair = sorted_pair(1);
    let segs = segmentation_by_mcw_union(&pair, &canonical(), &SearchOptions::default());
    assert_eq!(segs.len(), 2);
    assert!(segs.iter().all(|s| s.verifiable));
    assert_disjoint(&segs);
    assert_no_window_crosses(&pair, &canonical(), &segs);
}

#[test]
fn mcw_unions_of_adjacent_edits_merge() {
    let (a, b) = both(col("x").gt(1), col("y").lt(3));
    let (c, d) = both(col("z").gt(1), col("y").lt(4));
    let p = chain("p", &[("f", a), ("g", c)]);
    let q = chain("q", &[("f", b), ("g", d)]);
    let m = EditMapping::identity(&p, &q);
    let pair = VersionPair::new(p, q, m).unwrap();
    let segs = segmentation_by_mcw_union(&pair, &canonical(), &SearchOptions::default());
    assert_eq!(segs.len(), 1);
    assert_eq!(segs[0].changes, vec![0, 1]);
}

#[test]
fn running_example_single_segment_under_mcw_union() {
    let f = fx_run();
    let pair = VersionPair::new(f.p, f.q, f.tracked).unwrap();
    let segs = segmentation_by_mcw_union(&pair, &canonical(), &SearchOptions::default());
    assert_disjoint(&segs);
    let covered: usize = segs.iter().map(|s| s.changes.len()).sum();
    assert_eq!(covered, pair.changes().len());
}

#[test]
fn segment_scores_add_operators_and_changes() {
    assert_eq!(rank_segment(4, 1), 5);
    assert_eq!(rank_segment(3, 2), 5);
    let pair = sorted_pair(1);
    for s in segmentation_by_unsupported_ops(&pair, &canonical()) {
        assert_eq!(s.score(&pair), 2 + 1);
    }
}

#[test]
fn all_segments_true_gives_true() {
    let pair = sorted_pair(2);
    let segs = segmentation_by_unsupported_ops(&pair, &canonical());
    let r = verify_with_segments(&pair, &canonical(), &SearchOptions::default(), segs);
    assert_eq!(r.search.verdict, Verdict::True);
    assert_eq!(r.segments.len(), 3);
    let Some(Witness::Decomposition(ws)) = r.search.witness else { panic!("no witness") };
    assert_eq!(ws.len(), 3);
    let whole = crate::decompose::verify_pair(&pair, &canonical(), &SearchOptions::default());
    assert_eq!(whole.verdict, Verdict::True);
}

#[test]
fn first_unknown_segment_stops_the_run() {
    let (a, b) = both(col("x").gt(0), col("y").lt(10));
    let p = chain(
        "p",
        &[("f0", a.clone()), ("sort0", Properties::sort(&[("x", false)])), ("f1", Properties::filter(col("x").gt(5)))],
    );
    let q = chain("q", &[("f0", b), ("sort0", Properties::sort(&[("x", false)])), ("f1", Properties::filter(col("x").gt(6)))]);
    let m = EditMapping::identity(&p, &q);
    let pair = VersionPair::new(p, q, m).unwrap();
    let segs = segmentation_by_unsupported_ops(&pair, &canonical());
    assert_eq!(segs.len(), 2);
    let r = verify_with_segments(&pair, &canonical(), &SearchOptions::default(), segs.clone());
    assert_eq!(r.search.verdict, Verdict::Unknown);
    assert_eq!(r.segments.len(), 1);
    assert_eq!(r.segments[0].verdict, Verdict::Unknown);
    let unverifiable = segs.into_iter().map(|s| Segment { verifiable: false, ..s }).collect();
    let r = verify_with_segments(&pair, &canonical(), &SearchOptions::default(), unverifiable);
    assert_eq!((r.search.verdict, r.search.ev_calls, r.segments.len()), (Verdict::Unknown, 0, 1));
}

#[test]
fn whole_pair_segment_can_be_refuted() {
    let p = chain("p", &[("f", Properties::filter(col("x").gt(5)))]);
    let q = chain("q", &[("f", Properties::filter(col("x").gt(6)))]);
    let m = EditMapping::identity(&p, &q);
    let pair = VersionPair::new(p, q, m).unwrap();
    let evs = EvSet::new(vec![canonical_ev(), oracle_ev(32, 3)]).unwrap();
    let segs = segmentation_by_unsupported_ops(&pair, &evs);
    assert_eq!(segs[0].window, pair.full_window());
    let r = verify_with_segments(&pair, &evs, &SearchOptions::default(), segs);
    assert_eq!(r.search.verdict, Verdict::False);
    assert!(matches!(r.search.witness, Some(Witness::Counterexample(_))));
}

#[test]
fn summaries_follow_projection_sort_and_aggregation() {
    let w = chain("w", &[("p", Properties::project(&["x", "y"]))]);
    assert_eq!(summarize_version(&w).projected, vec!["x", "y"]);
    let w = chain("w", &[("o", Properties::sort(&[("y", true), ("x", false)]))]);
    let s = summarize_version(&w);
    assert_eq!((s.projected.len(), s.sorted_by.clone()), (3, vec!["y desc".to_string(), "x".to_string()]));
    let w = chain("w", &[("o", Properties::sort(&[("x", false), ("y", false)])), ("p", Properties::project(&["x", "z"]))]);
    assert_eq!(summarize_version(&w).sorted_by, vec!["x"]);
    let agg = Properties::aggregate(&["x"], vec![crate::workflow::AggregateSpec::count("n")]);
    assert_eq!(summarize_version(&chain("w", &[("a", agg)])).projected, vec!["x", "n"]);
    let udf = Properties::Udf(crate::workflow::OpaqueProps { token: "u".into(), inputs: 1, schema: None });
    let s = summarize_version(&chain("w", &[("u", udf), ("p", Properties::project(&["x"]))]));
    assert_eq!(s.confidence, Confidence::Abstain);
}

#[test]
fn different_projections_are_flagged() {
    let f = fx_proj();
    let d = quick_inequivalence(&f.p, &f.q, TableSemantics::Set).expect("projections differ");
    assert_eq!(d.field, SummaryField::Projected);
    assert!(quick_inequivalence(&f.p, &f.p, TableSemantics::Set).is_none());
}

#[test]
fn sort_order_matters_only_for_ordered_bags() {
    let p = chain("p", &[("o", Properties::sort(&[("x", false)]))]);
    let q = chain("q", &[("o", Properties::sort(&[("y", false)]))]);
    assert!(quick_inequivalence(&p, &q, TableSemantics::Set).is_none());
    assert!(quick_inequivalence(&p, &q, TableSemantics::Bag).is_none());
    let d = quick_inequivalence(&p, &q, TableSemantics::OrderedBag).unwrap();
    assert_eq!(d.field, SummaryField::SortedBy);
}

#[test]
fn abstaining_summary_gives_no_verdict() {
    let udf = |t: &str| Properties::Udf(crate::workflow::OpaqueProps { token: t.into(), inputs: 1, schema: None });
    let p = chain("p", &[("u", udf("a")), ("p", Properties::project(&["x"]))]);
    let q = chain("q", &[("u", udf("a")), ("p", Properties::project(&["y"]))]);
    assert!(quick_inequivalence(&p, &q, TableSemantics::Set).is_none());
}
