//! Acceptance checks, one line of output per criterion.
//!
//! Runs without the libtest harness so the summary is always printed:
//! `cargo test -p dagver-core --test acceptance`.

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use dagver_core::accel::{rank_decomposition, rank_segment, DecompositionScore, SegmentationMethod};
use dagver_core::corpus::{
    fixtures, fx_agefilter, fx_proj, fx_run, fx_swap, fx_taxi, generate_pair, spj_corpus, standard_corpus, swap_positional, w1_like,
    w2_like, GeneratedPair, RewriteRule,
};
use dagver_core::decompose::initial_decomposition;
use dagver_core::edit::{apply_transformation, EditMapping, EditOp, Transformation};
use dagver_core::ev::{canonical_ev, find_counterexample, is_valid_window, replay_differs, Verdict};
use dagver_core::orchestrator::{verify, ResultWitness, Tracked, VerifyConfig, VerifyResult};
use dagver_core::window::VersionPair;
use dagver_core::workflow::{col, Link, Operator, Predicate, Properties, Schema, TableSemantics, Workflow};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(p: &Workflow, q: &Workflow, tracked: Option<Tracked>, cfg: &VerifyConfig) -> VerifyResult {
    verify(p, q, tracked.as_ref(), cfg).unwrap_or_else(|e| panic!("verify {} / {}: {e}", p.id(), q.id()))
}

fn run_generated(g: &GeneratedPair, cfg: &VerifyConfig) -> VerifyResult {
    run(&g.p, &g.q, Some(Tracked::Mapping(g.tracked.clone())), cfg)
}

fn with_oracle(cfg: VerifyConfig) -> VerifyConfig {
    cfg.with_evs(&["canonical", "oracle"])
}

fn witness_inputs(r: &VerifyResult) -> Option<&std::collections::BTreeMap<String, dagver_core::workflow::Table>> {
    match &r.witness {
        Some(ResultWitness::Counterexample(c)) => Some(&c.inputs),
        Some(ResultWitness::Symbolic { counterexample, .. }) => Some(&counterexample.inputs),
        _ => None,
    }
}

fn ranking_arithmetic() -> Check {
    let run = VersionPair::new(fx_run().p, fx_run().q, fx_run().tracked).map_err(|e| e.to_string())?;
    let initial = initial_decomposition(&run);
    let merged = DecompositionScore { covering_units: 6, covering_windows: 3, unmerged: 10 };
    let start = Instant::now();
    let segments = (rank_segment(4, 1), rank_segment(3, 2));
    let scores = (rank_decomposition(&initial).as_integer(), merged.as_integer());
    let elapsed = start.elapsed();
    ensure(segments == (5, 5), || format!("segment ranks {segments:?}"))?;
    ensure(scores == (Some(-10), Some(-8)), || format!("decomposition scores {scores:?}"))?;
    ensure(elapsed < Duration::from_millis(1), || format!("took {elapsed:?}"))?;
    Ok(format!("5, 5, -10, -8 in {elapsed:?}"))
}

fn soundness_sweep(corpus: &[GeneratedPair]) -> Check {
    let start = Instant::now();
    let cfg = with_oracle(VerifyConfig::default());
    let (mut trues, mut falses, mut unknowns) = (0, 0, 0);
    for g in corpus {
        ensure(g.p.len() <= 30 && g.q.len() <= 30, || format!("{} has more than 30 operators", g.name))?;
        let r = run_generated(g, &cfg);
        let semantics = g.p.semantics();
        match r.verdict {
            Verdict::True => {
                trues += 1;
                ensure(find_counterexample(&g.p, &g.q, semantics, 100, 1).is_none(), || format!("{}: True but the oracle found a mismatch", g.name))?;
            }
            Verdict::False => {
                falses += 1;
                let inputs = witness_inputs(&r).ok_or_else(|| format!("{}: False without a witness", g.name))?;
                ensure(replay_differs(&g.p, &g.q, inputs, semantics), || format!("{}: witness does not replay", g.name))?;
            }
            Verdict::Unknown => unknowns += 1,
        }
    }
    let elapsed = start.elapsed();
    ensure(corpus.len() >= 200, || format!("only {} pairs", corpus.len()))?;
    ensure(elapsed <= Duration::from_secs(180), || format!("took {elapsed:?}"))?;
    Ok(format!("{} pairs: {trues} true, {falses} false, {unknowns} unknown; no unsound verdict; {elapsed:.1?}", corpus.len()))
}

fn restricted_completeness() -> Check {
    let corpus = spj_corpus(50);
    let canonical = canonical_ev();
    let mut unknown = Vec::new();
    for g in &corpus {
        let pair = VersionPair::new(g.p.clone(), g.q.clone(), g.tracked.clone()).map_err(|e| e.to_string())?;
        ensure(is_valid_window(&canonical, &pair, &pair.full_window()).valid, || format!("{} leaves the verifier profile", g.name))?;
        if run_generated(g, &VerifyConfig::default()).verdict == Verdict::Unknown {
            unknown.push(g.name.clone());
        }
    }
    ensure(unknown.is_empty(), || format!("Unknown on {unknown:?}"))?;
    Ok(format!("{} in-profile SPJ pairs, 0 unknown", corpus.len()))
}

fn fixture_verdicts() -> Check {
    let tracked = |f: &dagver_core::corpus::Fixture| Some(Tracked::Mapping(f.tracked.clone()));
    let mut notes = Vec::new();
    for cfg in [VerifyConfig::default(), with_oracle(VerifyConfig::default())] {
        let oracle = cfg.evs.len() > 1;
        let f = fx_run();
        let v = run(&f.p, &f.q, tracked(&f), &cfg).verdict;
        ensure(v == Verdict::True, || format!("FX-RUN gave {v} (oracle: {oracle})"))?;
        let f = fx_taxi();
        let v = run(&f.p, &f.q, tracked(&f), &cfg).verdict;
        ensure(v != Verdict::True, || format!("FX-TAXI gave true (oracle: {oracle})"))?;
        notes.push(format!("taxi {v}"));
        let f = fx_agefilter();
        let v = run(&f.p, &f.q, tracked(&f), &cfg).verdict;
        ensure(v == Verdict::Unknown, || format!("FX-AGEFILTER gave {v} (oracle: {oracle})"))?;
    }
    let f = fx_swap();
    let forced = Some(Tracked::Mapping(swap_positional()));
    let monotonic_only = |cap| VerifyConfig { mapping_cap: cap, non_monotonic: false, ..VerifyConfig::default() };
    let one = run(&f.p, &f.q, forced.clone(), &monotonic_only(1)).verdict;
    ensure(one == Verdict::Unknown, || format!("FX-SWAP at cap 1 gave {one}"))?;
    for cap in [2, 16] {
        let v = run(&f.p, &f.q, forced.clone(), &monotonic_only(cap)).verdict;
        ensure(v == Verdict::True, || format!("FX-SWAP at cap {cap} gave {v}"))?;
    }
    let v = run(&f.p, &f.q, forced, &VerifyConfig::default()).verdict;
    ensure(v == Verdict::True, || format!("FX-SWAP with defaults gave {v}"))?;
    Ok(format!("run true, {}, agefilter unknown, swap unknown at cap 1 and true at cap 2", notes.join("/")))
}

fn empty_delta_identity() -> Check {
    let mut n = 0;
    for (name, f) in fixtures() {
        for w in [&f.p, &f.q] {
            for cfg in [VerifyConfig::default(), VerifyConfig::baseline(), with_oracle(VerifyConfig::default())] {
                let r = run(w, w, None, &cfg);
                ensure((r.verdict, r.decompositions_explored, r.ev_calls) == (Verdict::True, 0, 0), || {
                    format!("{name}: {} explored={} calls={}", r.verdict, r.decompositions_explored, r.ev_calls)
                })?;
                n += 1;
            }
        }
    }
    Ok(format!("{n} identical pairs true with 0 decompositions, 0 calls"))
}

fn filter_chain(id: &str, left: usize, right: usize, edited: bool) -> Workflow {
    let schema = Schema::ints(&["x", "y", "z"]);
    let conj = |a: Predicate, b: Predicate, flip: bool| if flip { b.and(a) } else { a.and(b) };
    let mut ops = vec![Operator::new("src", Properties::source("t", schema))];
    let mut names = vec!["src".to_string()];
    for i in 0..left {
        let p = if i == left - 1 { conj(col("x").gt(5), col("y").lt(3), edited) } else { col("z").gt(i as i64) };
        ops.push(Operator::new(format!("l{i}").as_str(), Properties::filter(p)));
        names.push(format!("l{i}"));
    }
    ops.push(Operator::new("sort", Properties::sort(&[("x", false)])));
    names.push("sort".into());
    for i in 0..right {
        let p = if i == 0 { conj(col("y").gt(0), col("z").lt(7), edited) } else { col("x").lt(10 + i as i64) };
        ops.push(Operator::new(format!("r{i}").as_str(), Properties::filter(p)));
        names.push(format!("r{i}"));
    }
    ops.push(Operator::new("sink", Properties::Sink));
    names.push("sink".into());
    let links = names.windows(2).map(|w| Link::simple(w[0].as_str(), w[1].as_str())).collect();
    Workflow::new(id, TableSemantics::Set, ops, links).expect("unique ids")
}

/// Seven operators: an edited filter and projection on each side of a sort.
fn two_segment_fixture() -> (Workflow, Workflow) {
    let schema = Schema::ints(&["x", "y", "z"]);
    let a = || col("x").gt(5).and(col("y").lt(3));
    let b = || col("y").lt(3).and(col("x").gt(5));
    let version = |id: &str, pred: Predicate| {
        let ops = vec![
            Operator::new("src", Properties::source("t", schema.clone())),
            Operator::new("f1", Properties::filter(pred.clone())),
            Operator::new("p1", Properties::project(&["x", "y", "z"])),
            Operator::new("sort", Properties::sort(&[("x", false)])),
            Operator::new("f2", Properties::filter(pred)),
            Operator::new("p2", Properties::project(&["x", "y"])),
            Operator::new("sink", Properties::Sink),
        ];
        let chain = ["src", "f1", "p1", "sort", "f2", "p2", "sink"];
        let links = chain.windows(2).map(|w| Link::simple(w[0], w[1])).collect();
        Workflow::new(id, TableSemantics::Set, ops, links).expect("unique ids")
    };
    (version("seg-v1", a()), version("seg-v2", b()))
}

fn segmentation_effect() -> Check {
    let explored = |p: &Workflow, q: &Workflow, seg| {
        let cfg = VerifyConfig { segmentation: seg, ..VerifyConfig::baseline() };
        let r = run(p, q, Some(Tracked::Mapping(EditMapping::identity(p, q))), &cfg);
        (r.verdict, r.decompositions_explored)
    };
    let mut pairs = Vec::new();
    for left in 1..=3 {
        for right in 1..=3 {
            let (p, q) = (filter_chain("p", left, right, false), filter_chain("q", left, right, true));
            let (vb, on) = explored(&p, &q, SegmentationMethod::Boundary);
            let (vo, off) = explored(&p, &q, SegmentationMethod::Off);
            ensure(vb == vo, || format!("{left}+{right}: verdicts {vb} vs {vo}"))?;
            // One filter per side: two states per segment, and 2 + 2 = 2 * 2.
            if left + right == 2 {
                ensure(on <= off, || format!("{left}+{right}: boundary {on} vs off {off}"))?;
                pairs.push(format!("{on}={off}"));
                continue;
            }
            ensure(on < off, || format!("{left}+{right}: boundary {on} vs off {off}"))?;
            pairs.push(format!("{on}<{off}"));
        }
    }
    let (p, q) = two_segment_fixture();
    ensure(p.len() == 7, || "fixture size".into())?;
    let (_, on) = explored(&p, &q, SegmentationMethod::Boundary);
    let (_, off) = explored(&p, &q, SegmentationMethod::Off);
    ensure(on <= 8 && off >= 9, || format!("7-operator fixture: boundary {on}, off {off}"))?;
    Ok(format!("7-operator fixture {on} vs {off}; chains {}", pairs.join(" ")))
}

fn distance_sweep() -> Check {
    let start = Instant::now();
    let mut lines = Vec::new();
    for seed in [1, 2] {
        let mut baseline = Vec::new();
        let mut plus = Vec::new();
        for hops in 0..=3 {
            let g = generate_pair(&w2_like(), &[RewriteRule::EmptyProject, RewriteRule::EmptyProject], Some(hops), seed).map_err(|e| e.to_string())?;
            ensure(g.p.len() == 20, || format!("base has {} operators", g.p.len()))?;
            let b = run_generated(&g, &VerifyConfig::baseline());
            let o = run_generated(&g, &VerifyConfig::plus());
            ensure(b.verdict == Verdict::True && o.verdict == Verdict::True, || format!("hop {hops}: {} / {}", b.verdict, o.verdict))?;
            baseline.push(b.decompositions_explored);
            plus.push(o.decompositions_explored);
        }
        ensure(baseline.windows(2).all(|w| w[0] <= w[1]), || format!("baseline {baseline:?} decreases"))?;
        ensure(baseline[3] >= 2 * baseline[0], || format!("baseline {baseline:?} grows less than 2x"))?;
        ensure(plus.iter().all(|&n| n <= 2 * plus[0]), || format!("optimized {plus:?} exceeds 2x"))?;
        lines.push(format!("seed {seed}: baseline {baseline:?}, optimized {plus:?}"));
    }
    let elapsed = start.elapsed();
    ensure(elapsed <= Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("{}; {elapsed:.1?}", lines.join("; ")))
}

fn edit_count_sweep() -> Check {
    let mut lines = Vec::new();
    for seed in [1, 2] {
        let mut baseline = Vec::new();
        let mut plus = Vec::new();
        for edits in 1..=4 {
            let g = generate_pair(&w1_like(), &vec![RewriteRule::EmptyProject; edits], None, seed).map_err(|e| e.to_string())?;
            let b = run_generated(&g, &VerifyConfig::baseline());
            let o = run_generated(&g, &VerifyConfig::plus());
            ensure(b.verdict == Verdict::True && o.verdict == Verdict::True, || format!("{edits} edits: {} / {}", b.verdict, o.verdict))?;
            baseline.push(b.decompositions_explored);
            plus.push(o.decompositions_explored);
        }
        ensure(baseline.windows(2).all(|w| w[0] < w[1]), || format!("baseline {baseline:?} not strictly increasing"))?;
        ensure(plus.iter().all(|&n| n <= 2 * plus[0]), || format!("optimized {plus:?} exceeds 2x"))?;
        lines.push(format!("seed {seed}: baseline {baseline:?}, optimized {plus:?}"));
    }
    Ok(lines.join("; "))
}

fn accelerated(seg: bool, prune: bool, rank: bool, symbolic: bool) -> VerifyConfig {
    VerifyConfig {
        segmentation: if seg { SegmentationMethod::Boundary } else { SegmentationMethod::Off },
        pruning: prune,
        ranking: rank,
        symbolic,
        ..VerifyConfig::baseline()
    }
}

fn optimization_transparency(corpus: &[GeneratedPair]) -> Check {
    let start = Instant::now();
    let mut runs = 0;
    let mut upgrades = 0;
    for evs in [&["canonical"][..], &["canonical", "oracle"][..]] {
        for g in corpus {
            let plain = run_generated(g, &accelerated(false, false, false, false).with_evs(evs)).verdict;
            for mask in 1..16u8 {
                let [seg, prune, rank, symbolic] = [0, 1, 2, 3].map(|b| mask & (1 << b) != 0);
                let r = run_generated(g, &accelerated(seg, prune, rank, symbolic).with_evs(evs));
                runs += 1;
                let v = r.verdict;
                if v == plain {
                    continue;
                }
                let label = || format!("{} {evs:?} seg={seg} prune={prune} rank={rank} symbolic={symbolic}: {plain} -> {v}", g.name);
                ensure(plain != Verdict::True, || label())?;
                ensure(!(plain == Verdict::False && v == Verdict::True), label)?;
                ensure(symbolic && plain == Verdict::Unknown && v == Verdict::False, label)?;
                let Some(ResultWitness::Symbolic { counterexample, .. }) = &r.witness else { return Err(format!("{}: upgrade without symbolic witness", label())) };
                ensure(replay_differs(&g.p, &g.q, &counterexample.inputs, g.p.semantics()), || format!("{}: witness does not replay", label()))?;
                upgrades += 1;
            }
        }
    }
    Ok(format!("{runs} accelerated runs agree with the plain search; {upgrades} confirmed symbolic upgrades; {:.1?}", start.elapsed()))
}

fn with_projection(w: &Workflow, columns: &[&str]) -> Workflow {
    let delta = Transformation(vec![EditOp::ModifyOperator { id: "proj".into(), properties: Properties::project(columns) }]);
    apply_transformation(w, &delta).expect("projection exists").with_id(format!("{}-proj", w.id()))
}

fn symbolic_fast_path() -> Check {
    let f = fx_proj();
    let w1 = w1_like();
    let w2 = w2_like();
    let pairs = [
        (f.p.clone(), f.q.clone()),
        (w1.clone(), with_projection(&w1, &["o_id", "o_total", "c_age"])),
        (w2.clone(), with_projection(&w2, &["t_id", "z_pop"])),
    ];
    let mut times = Vec::new();
    for (p, q) in &pairs {
        let _ = run(p, q, None, &VerifyConfig::default());
        let start = Instant::now();
        let r = run(p, q, None, &VerifyConfig::default());
        let elapsed = start.elapsed();
        ensure(r.verdict == Verdict::False && r.ev_calls == 0, || format!("{}: {} with {} calls", p.id(), r.verdict, r.ev_calls))?;
        ensure(matches!(r.witness, Some(ResultWitness::Symbolic { .. })), || format!("{}: not a symbolic refutation", p.id()))?;
        ensure(elapsed < Duration::from_millis(10), || format!("{}: took {elapsed:?}", p.id()))?;
        times.push(format!("{elapsed:.2?}"));
    }
    Ok(format!("{} projection changes refuted with 0 calls in {}", pairs.len(), times.join(", ")))
}

fn pruning_dominance(corpus: &[GeneratedPair]) -> Check {
    let mut n = 0;
    let (mut on_total, mut off_total) = (0, 0);
    for g in corpus.iter().filter(|g| g.expected == Verdict::False) {
        for base in [VerifyConfig::baseline(), VerifyConfig::plus()] {
            let on = run_generated(g, &with_oracle(VerifyConfig { pruning: true, ..base.clone() }));
            let off = run_generated(g, &with_oracle(VerifyConfig { pruning: false, ..base }));
            ensure(on.verdict == off.verdict, || format!("{}: {} with pruning, {} without", g.name, on.verdict, off.verdict))?;
            ensure(on.decompositions_explored <= off.decompositions_explored, || {
                format!("{}: {} explored with pruning, {} without", g.name, on.decompositions_explored, off.decompositions_explored)
            })?;
            on_total += on.decompositions_explored;
            off_total += off.decompositions_explored;
            n += 1;
        }
    }
    ensure(n > 0, || "no inequivalent pairs".into())?;
    Ok(format!("{n} runs on inequivalent pairs; {on_total} explored with pruning vs {off_total} without"))
}

fn main() {
    let corpus = standard_corpus();
    let criteria: Vec<(&str, Box<dyn Fn() -> Check + '_>)> = vec![
        ("ranking arithmetic", Box::new(ranking_arithmetic)),
        ("soundness sweep", Box::new(|| soundness_sweep(&corpus))),
        ("restricted-class completeness", Box::new(restricted_completeness)),
        ("fixture verdicts", Box::new(fixture_verdicts)),
        ("empty edit identity", Box::new(empty_delta_identity)),
        ("segmentation effect", Box::new(segmentation_effect)),
        ("distance sweep", Box::new(distance_sweep)),
        ("edit-count sweep", Box::new(edit_count_sweep)),
        ("optimization transparency", Box::new(|| optimization_transparency(&corpus))),
        ("symbolic fast path", Box::new(symbolic_fast_path)),
        ("pruning dominance", Box::new(|| pruning_dominance(&corpus))),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
