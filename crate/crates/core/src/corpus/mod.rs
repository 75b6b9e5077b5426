//! Named fixtures and a seeded generator of version pairs.

mod bases;
mod fixtures;
mod generate;
mod rules;

pub use bases::{random_base, w1_like, w2_like, BaseMix};
pub use fixtures::{
    fixtures, fx_agefilter, fx_proj, fx_run, fx_run_single, fx_swap, fx_taxi, running_edits, running_example,
    swap_aggregate_only, swap_positional, Fixture,
};
pub use generate::{
    generate_pair, generate_random_pair, spj_corpus, standard_corpus, GenError, GeneratedPair, PairKind, CONFIRM_INSTANCES,
};
pub use rules::RewriteRule;

#[cfg(test)]
mod tests;
