use std::time::Instant;

use super::*;
use crate::ev::{replay_differs, Verdict};
use crate::workflow::{col, Link, Operator, Properties, Schema, TableSemantics, Workflow};

/// Two tables joined, with a filter on each side above the join.
fn join_base() -> Workflow {
    Workflow::new(
        "jb",
        TableSemantics::Set,
        vec![
            Operator::new("l", Properties::source("l", Schema::ints(&["l_k", "l_a"]))),
            Operator::new("r", Properties::source("r", Schema::ints(&["r_k", "r_b"]))),
            Operator::new("j", Properties::join(&[("l_k", "r_k")])),
            Operator::new("fl", Properties::filter(col("l_a").gt(3))),
            Operator::new("fr", Properties::filter(col("r_b").lt(6))),
            Operator::new("k", Properties::Sink),
        ],
        vec![Link::new("l", 0, "j", 0), Link::new("r", 0, "j", 1), Link::simple("j", "fl"), Link::simple("fl", "fr"), Link::simple("fr", "k")],
    )
    .unwrap()
}

#[test]
fn empty_projection_adds_one_operator() {
    let g = generate_pair(&w1_like(), &[RewriteRule::EmptyProject], None, 4).unwrap();
    assert_eq!(g.expected, Verdict::True);
    assert_eq!(g.q.len(), g.p.len() + 1);
    assert_eq!(g.tracked.len(), g.p.len());
}

#[test]
fn filters_pushed_past_a_join_twice() {
    let g = generate_pair(&join_base(), &[RewriteRule::PushFilterPastJoin, RewriteRule::PushFilterPastJoin], None, 1).unwrap();
    assert_eq!(g.expected, Verdict::True);
    assert_eq!(g.q.feeder(g.q.index_of("j").unwrap(), 0).map(|(i, _)| g.q.op(i).id.as_str().to_string()), Some("fl".into()));
    assert_eq!(g.q.feeder(g.q.index_of("j").unwrap(), 1).map(|(i, _)| g.q.op(i).id.as_str().to_string()), Some("fr".into()));
    let twice = generate_pair(&w1_like(), &[RewriteRule::SwapAdjacentFilters, RewriteRule::SwapAdjacentFilters], None, 2).unwrap();
    assert_eq!(twice.rules.len(), 2);
    assert_eq!(twice.expected, Verdict::True);
}

#[test]
fn every_rewrite_preserves_results() {
    let agg = random_base(7, 20, BaseMix::Mixed);
    for rule in RewriteRule::EQUIVALENT {
        let base = [w1_like(), join_base(), agg.clone(), random_base(3, 25, BaseMix::Mixed)]
            .into_iter()
            .find(|b| !rule.locations(b).is_empty());
        let Some(base) = base else { continue };
        let g = generate_pair(&base, &[rule], None, 9).unwrap();
        assert_eq!(g.expected, Verdict::True, "{rule}");
    }
}

#[test]
fn tightened_constant_comes_with_a_witness() {
    let g = generate_pair(&join_base(), &[RewriteRule::TightenFilterConstant], None, 5).unwrap();
    assert_eq!(g.expected, Verdict::False);
    let c = g.witness.as_ref().unwrap();
    assert!(replay_differs(&g.p, &g.q, &c.inputs, TableSemantics::Set));
}

#[test]
fn inapplicable_rule_is_an_error() {
    let err = generate_pair(&w1_like(), &[RewriteRule::ChangeAggFunction], None, 1).unwrap_err();
    assert!(matches!(err, GenError::Inapplicable { rule: RewriteRule::ChangeAggFunction, step: 0 }));
}

#[test]
fn same_seed_same_pair() {
    let (base, a) = (11..40)
        .find_map(|seed| {
            let base = random_base(seed, 20, BaseMix::Mixed);
            generate_random_pair(&base, PairKind::Inequivalent, 3, None, 11).ok().map(|a| (base, a))
        })
        .unwrap();
    let b = generate_random_pair(&base, PairKind::Inequivalent, 3, None, 11).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.q, b.q);
}

/// Operator ids along a chain, from the sink upwards.
fn chain_order(w: &Workflow) -> Vec<String> {
    let mut out = Vec::new();
    let mut at = w.sinks()[0];
    while let Some((up, _)) = w.feeder(at, 0) {
        out.push(w.op(up).id.as_str().to_string());
        at = up;
    }
    out
}

#[test]
fn hops_set_the_gap_between_edits() {
    let base = w2_like();
    for hops in 0..=3 {
        let g = generate_pair(&base, &[RewriteRule::SwapAdjacentFilters, RewriteRule::SwapAdjacentFilters], Some(hops), 3).unwrap();
        let (p, q) = (chain_order(&g.p), chain_order(&g.q));
        let moved: Vec<usize> = (0..p.len()).filter(|&i| p[i] != q[i]).collect();
        assert_eq!(moved.len(), 4, "{p:?} vs {q:?}");
        assert_eq!(moved[2] - moved[1] - 1, hops);
    }
}

#[test]
fn rule_names_round_trip() {
    for r in RewriteRule::ALL {
        assert_eq!(r.name().parse::<RewriteRule>().unwrap(), r);
    }
    assert_eq!(serde_json::to_string(&RewriteRule::EmptyProject).unwrap(), "\"emptyProject\"");
}

#[test]
fn random_bases_are_valid_single_sink_workflows() {
    for seed in 0..40 {
        for mix in [BaseMix::Spj, BaseMix::Mixed] {
            let w = random_base(seed, 8 + seed as usize % 23, mix);
            assert!(crate::workflow::validate_workflow(&w).is_ok(), "seed {seed}");
            assert_eq!(w.sinks().len(), 1);
            assert!(w.len() <= 30);
        }
    }
}

#[test]
fn standard_corpus_has_two_hundred_labelled_pairs() {
    let t = Instant::now();
    let corpus = standard_corpus();
    assert_eq!(corpus.len(), 200);
    let trues = corpus.iter().filter(|g| g.expected == Verdict::True).count();
    assert_eq!(trues, 120);
    assert!(corpus.iter().all(|g| g.p.len() <= 30 && g.q.len() <= 30));
    eprintln!("corpus generated in {:?}", t.elapsed());
}
