//! Seeded generation of version pairs from a base workflow.

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::bases::{random_base, BaseMix};
use super::rules::{Application, RewriteRule};
use crate::edit::{apply_transformation, EditError, EditMapping, EditOp, MappingError, Transformation};
use crate::ev::{find_counterexample, Counterexample, Verdict};
use crate::workflow::{OpId, Workflow};

/// Sampled instances used to confirm that rewrites preserve results.
pub const CONFIRM_INSTANCES: usize = 20;
/// Sampled instances used to find a witness for a semantic edit.
const WITNESS_INSTANCES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratedPair {
    pub name: String,
    #[serde(skip)]
    pub p: Workflow,
    #[serde(skip)]
    pub q: Workflow,
    pub tracked: EditMapping,
    pub delta: Transformation,
    pub rules: Vec<RewriteRule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hops: Option<usize>,
    pub expected: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Counterexample>,
}

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error("rule {rule} is not applicable (step {step})")]
    Inapplicable { rule: RewriteRule, step: usize },
    #[error("no edit site {hops} operators away from the previous edits")]
    NoSiteAtDistance { hops: usize },
    #[error("rewrite changed the result on sampled inputs: {0:?}")]
    NotPreserving(Vec<RewriteRule>),
    #[error("no sampled input tells the versions apart")]
    NoWitness,
    #[error(transparent)]
    Edit(#[from] EditError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
}

/// Undirected distance from any operator in `from` to any in `to`.
fn distance(w: &Workflow, from: &BTreeSet<OpId>, to: &[OpId]) -> Option<usize> {
    let mut dist = vec![usize::MAX; w.len()];
    let mut queue = VecDeque::new();
    for id in from {
        if let Some(i) = w.index_of(id.as_str()) {
            dist[i] = 0;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        for j in w.predecessors(i).chain(w.successors(i)) {
            if dist[j] == usize::MAX {
                dist[j] = dist[i] + 1;
                queue.push_back(j);
            }
        }
    }
    to.iter().filter_map(|id| w.index_of(id.as_str())).map(|i| dist[i]).filter(|&d| d != usize::MAX).min()
}

struct Step {
    rule: RewriteRule,
    app: Application,
}

/// Candidate edit sites for `rules` on `w`, skipping operators already
/// edited and, when `hops` is set, sites not exactly that many operators
/// away from earlier edits.
fn sites(w: &Workflow, rules: &[RewriteRule], edited: &BTreeSet<OpId>, hops: Option<usize>, step: usize, rng: &ChaCha8Rng) -> Vec<(RewriteRule, usize)> {
    let mut out = Vec::new();
    for &rule in rules {
        for at in rule.locations(w) {
            let Some(app) = rule.apply(w, at, "probe", &mut rng.clone()) else { continue };
            if app.core.iter().any(|c| edited.contains(c)) {
                continue;
            }
            if let (Some(h), true) = (hops, step > 0) {
                if distance(w, edited, &app.core) != Some(h + 1) {
                    continue;
                }
            }
            out.push((rule, at));
        }
    }
    out
}

fn build(base: &Workflow, plan: &[Vec<RewriteRule>], hops: Option<usize>, seed: u64, name: String) -> Result<GeneratedPair, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = base.clone();
    let mut edited: BTreeSet<OpId> = BTreeSet::new();
    let mut steps: Vec<Step> = Vec::new();
    for (i, allowed) in plan.iter().enumerate() {
        let candidates = sites(&current, allowed, &edited, hops, i, &rng);
        if candidates.is_empty() {
            return Err(match hops {
                Some(h) if i > 0 && allowed.iter().any(|r| !r.locations(&current).is_empty()) => GenError::NoSiteAtDistance { hops: h },
                _ => GenError::Inapplicable { rule: allowed[0], step: i },
            });
        }
        let (rule, at) = candidates[rng.gen_range(0..candidates.len())];
        let fresh = format!("g{i}_{}", rule.name());
        let app = rule.apply(&current, at, &fresh, &mut rng).expect("site was checked");
        current = apply_transformation(&current, &Transformation(app.edits.clone()))?;
        edited.extend(app.core.iter().cloned());
        steps.push(Step { rule, app });
    }
    let p = base.clone();
    let q = current.with_id(format!("{}-v2", base.id()));
    let delta = Transformation(steps.iter().flat_map(|s| s.app.edits.iter().cloned()).collect::<Vec<EditOp>>());
    let tracked = EditMapping::from_transformation(&p, &delta, &q)?;
    let rules: Vec<RewriteRule> = steps.iter().map(|s| s.rule).collect();
    let semantics = p.semantics();
    let (expected, witness) = if rules.iter().all(|r| r.preserves_equivalence()) {
        if find_counterexample(&p, &q, semantics, CONFIRM_INSTANCES, seed).is_some() {
            return Err(GenError::NotPreserving(rules));
        }
        (Verdict::True, None)
    } else {
        let c = find_counterexample(&p, &q, semantics, WITNESS_INSTANCES, seed).ok_or(GenError::NoWitness)?;
        (Verdict::False, Some(c))
    };
    Ok(GeneratedPair { name, p, q, tracked, delta, rules, hops, expected, witness })
}

/// Applies `rules` in order at seeded random sites of `base`. With `hops`,
/// every edit after the first sits exactly that many operators from the
/// earlier ones.
pub fn generate_pair(base: &Workflow, rules: &[RewriteRule], hops: Option<usize>, seed: u64) -> Result<GeneratedPair, GenError> {
    let plan: Vec<Vec<RewriteRule>> = rules.iter().map(|&r| vec![r]).collect();
    let names: Vec<&str> = rules.iter().map(|r| r.name()).collect();
    build(base, &plan, hops, seed, format!("{}:{}:{seed}", base.id(), names.join("+")))
}

/// Whether a randomly drawn pair should keep or change the result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    Equivalent,
    /// One semantic edit among rewrites.
    Inequivalent,
}

/// `edits` rules drawn at random among those applicable. Retries with
/// derived seeds when the draw cannot be completed.
pub fn generate_random_pair(base: &Workflow, kind: PairKind, edits: usize, hops: Option<usize>, seed: u64) -> Result<GeneratedPair, GenError> {
    let mut last = GenError::NoWitness;
    for attempt in 0..8u64 {
        let s = seed.wrapping_mul(1_000_003).wrapping_add(attempt);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let semantic_at = rng.gen_range(0..edits.max(1));
        let plan: Vec<Vec<RewriteRule>> = (0..edits)
            .map(|i| match kind {
                PairKind::Inequivalent if i == semantic_at => RewriteRule::SEMANTIC.to_vec(),
                _ => RewriteRule::EQUIVALENT.to_vec(),
            })
            .collect();
        let tag = match kind {
            PairKind::Equivalent => "eq",
            PairKind::Inequivalent => "neq",
        };
        match build(base, &plan, hops, s, format!("{}:{tag}:{edits}:{seed}", base.id())) {
            Ok(pair) => return Ok(pair),
            Err(e @ (GenError::NotPreserving(_) | GenError::Edit(_) | GenError::Mapping(_))) => return Err(e),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// The seeded evaluation corpus: for seeds 1 to 10 and 1 to 4 edits, five
/// pairs over random bases of at most 30 operators (two equivalent SPJ
/// pairs, one equivalent pair with sorts and aggregates, and one
/// inequivalent pair of each kind).
pub fn standard_corpus() -> Vec<GeneratedPair> {
    let variants = [
        (BaseMix::Spj, PairKind::Equivalent),
        (BaseMix::Spj, PairKind::Equivalent),
        (BaseMix::Mixed, PairKind::Equivalent),
        (BaseMix::Spj, PairKind::Inequivalent),
        (BaseMix::Mixed, PairKind::Inequivalent),
    ];
    let mut out = Vec::new();
    for seed in 1..=10u64 {
        for edits in 1..=4usize {
            for (v, &(mix, kind)) in variants.iter().enumerate() {
                out.push(corpus_pair(seed, edits, v as u64, mix, kind));
            }
        }
    }
    out
}

/// Equivalent pairs over SPJ bases.
pub fn spj_corpus(count: usize) -> Vec<GeneratedPair> {
    (0..count as u64).map(|i| corpus_pair(100 + i, 1 + (i as usize % 4), 0, BaseMix::Spj, PairKind::Equivalent)).collect()
}

fn corpus_pair(seed: u64, edits: usize, variant: u64, mix: BaseMix, kind: PairKind) -> GeneratedPair {
    for retry in 0..64u64 {
        let base_seed = seed * 1000 + variant * 100 + edits as u64 * 10 + retry;
        let size = 8 + (base_seed as usize * 7) % 19;
        let base = random_base(base_seed, size, mix);
        if let Ok(pair) = generate_random_pair(&base, kind, edits, None, base_seed) {
            return pair;
        }
    }
    panic!("no {kind:?} pair with {edits} edits for seed {seed}");
}
