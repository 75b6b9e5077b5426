//! Small named version pairs with known verdicts.

use std::collections::BTreeMap;

use crate::edit::{apply_transformation, EditMapping, EditOp, Transformation};
use crate::ev::Verdict;
use crate::workflow::{
    col, AggregateSpec, Column, ColumnType, Link, OpaqueProps, Operator, Properties, Schema, TableSemantics, Workflow,
};

/// A version pair, the mapping a version-control system would record for
/// it and the verdict expected under the default configuration.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub p: Workflow,
    pub q: Workflow,
    pub tracked: EditMapping,
    pub expected: Verdict,
}

fn wf(id: &str, ops: Vec<Operator>, links: Vec<Link>) -> Workflow {
    Workflow::new(id, TableSemantics::Set, ops, links).expect("fixture ids are unique")
}

fn op(id: &str, props: Properties) -> Operator {
    Operator::new(id, props)
}

fn chain_links(ids: &[&str]) -> Vec<Link> {
    ids.windows(2).map(|w| Link::simple(w[0], w[1])).collect()
}

fn tweets_schema() -> Schema {
    Schema::ints(&["t_id", "t_uid", "t_topic"])
}

fn users_schema() -> Schema {
    Schema::ints(&["u_id", "u_followers", "u_commercial"])
}

/// First version of the tweet-analysis dataflow: tweets run through a
/// dictionary matcher, users through a classifier, non-commercial users
/// are joined with their tweets, topics are attached, tweets are counted
/// per user and popular users are ranked.
pub fn running_example() -> Workflow {
    let mut matched = tweets_schema();
    matched.columns.push(Column::new("t_match", ColumnType::Int));
    let mut labelled = users_schema();
    labelled.columns.push(Column::new("u_label", ColumnType::Str));
    let opaque = |token: &str, schema: Schema| OpaqueProps { token: token.into(), inputs: 1, schema: Some(schema) };
    wf(
        "tweets-v1",
        vec![
            op("tweets", Properties::source("tweets", tweets_schema())),
            op("users", Properties::source("users", users_schema())),
            op("topics", Properties::source("topics", Schema::ints(&["tp_id", "tp_hot"]))),
            op("dict", Properties::DictionaryMatcher(opaque("keywords", matched))),
            op("classify", Properties::Classifier(opaque("user-kind", labelled))),
            op("filter_o", Properties::filter(col("u_commercial").eq(0))),
            op("join", Properties::join(&[("t_uid", "u_id")])),
            op("outer", Properties::left_outer_join(&[("t_topic", "tp_id")])),
            op("agg", Properties::aggregate(&["u_id", "u_followers"], vec![AggregateSpec::count("n_tweets")])),
            op("filter_k", Properties::filter(col("u_followers").gt(1000).and(col("n_tweets").gt(5)))),
            op("sort", Properties::sort(&[("n_tweets", true)])),
            op("sink", Properties::Sink),
        ],
        vec![
            Link::simple("tweets", "dict"),
            Link::simple("users", "classify"),
            Link::simple("classify", "filter_o"),
            Link::new("dict", 0, "join", 0),
            Link::new("filter_o", 0, "join", 1),
            Link::new("join", 0, "outer", 0),
            Link::new("topics", 0, "outer", 1),
            Link::simple("outer", "agg"),
            Link::simple("agg", "filter_k"),
            Link::simple("filter_k", "sort"),
            Link::simple("sort", "sink"),
        ],
    )
}

fn add_filter_h() -> Vec<EditOp> {
    vec![
        EditOp::AddOperator(op("filter_h", Properties::filter(col("u_followers").gt(1000)))),
        EditOp::RemoveLink(Link::simple("outer", "agg")),
        EditOp::AddLink(Link::simple("outer", "filter_h")),
        EditOp::AddLink(Link::simple("filter_h", "agg")),
    ]
}

/// The three edits of the running example: the commercial-user filter moves
/// below the join and a redundant follower filter is added above the
/// aggregate.
pub fn running_edits() -> Transformation {
    let mut edits = vec![
        EditOp::RemoveLink(Link::simple("classify", "filter_o")),
        EditOp::RemoveLink(Link::new("filter_o", 0, "join", 1)),
        EditOp::DeleteOperator("filter_o".into()),
        EditOp::AddLink(Link::new("classify", 0, "join", 1)),
        EditOp::AddOperator(op("filter_g", Properties::filter(col("u_commercial").eq(0)))),
        EditOp::RemoveLink(Link::new("join", 0, "outer", 0)),
        EditOp::AddLink(Link::simple("join", "filter_g")),
        EditOp::AddLink(Link::new("filter_g", 0, "outer", 0)),
    ];
    edits.extend(add_filter_h());
    Transformation(edits)
}

fn fixture(name: &'static str, p: Workflow, delta: Transformation, expected: Verdict) -> Fixture {
    let q = apply_transformation(&p, &delta).expect("fixture edits apply").with_id(format!("{}-v2", name.to_lowercase()));
    let tracked = EditMapping::from_transformation(&p, &delta, &q).expect("fixture mapping");
    Fixture { name, p, q, tracked, expected }
}

pub fn fx_run() -> Fixture {
    fixture("FX-RUN", running_example(), running_edits(), Verdict::True)
}

/// The running example with only the follower filter added.
pub fn fx_run_single() -> Fixture {
    fixture("FX-RUN-SINGLE", running_example(), Transformation(add_filter_h()), Verdict::True)
}

fn people() -> Properties {
    Properties::source("people", Schema::ints(&["age", "score"]))
}

/// Project, Filter and Aggregate in reverse order. The recorded mapping
/// pairs operators by position, so two of them change kind.
pub fn fx_swap() -> Fixture {
    let count = || Properties::aggregate(&["age"], vec![AggregateSpec::count("n")]);
    let p = wf(
        "swap-v1",
        vec![
            op("src", people()),
            op("proj", Properties::project(&["age", "score"])),
            op("filt", Properties::filter(col("age").gt(24))),
            op("agg", count()),
            op("sink", Properties::Sink),
        ],
        chain_links(&["src", "proj", "filt", "agg", "sink"]),
    );
    let q = wf(
        "swap-v2",
        vec![
            op("src", people()),
            op("agg", count()),
            op("filt", Properties::filter(col("age").gt(24))),
            op("proj", Properties::project(&["age", "n"])),
            op("sink", Properties::Sink),
        ],
        chain_links(&["src", "agg", "filt", "proj", "sink"]),
    );
    Fixture { name: "FX-SWAP", p, q, tracked: swap_positional(), expected: Verdict::True }
}

/// Mapping of the swap pair by position in the chain.
pub fn swap_positional() -> EditMapping {
    EditMapping::from_pairs(&[("src", "src"), ("proj", "agg"), ("filt", "filt"), ("agg", "proj"), ("sink", "sink")])
}

/// Mapping of the swap pair that keeps only the aggregate.
pub fn swap_aggregate_only() -> EditMapping {
    EditMapping::from_pairs(&[("src", "src"), ("agg", "agg"), ("sink", "sink")])
}

/// A downstream filter that is redundant only because of an upstream one,
/// with a sort in between that the canonical verifier cannot see through.
pub fn fx_agefilter() -> Fixture {
    let p = wf(
        "age-v1",
        vec![
            op("src", people()),
            op("young", Properties::filter(col("age").lt(50))),
            op("sort", Properties::sort(&[("age", false)])),
            op("under55", Properties::filter(col("age").lt(55))),
            op("sink", Properties::Sink),
        ],
        chain_links(&["src", "young", "sort", "under55", "sink"]),
    );
    let delta = Transformation(vec![
        EditOp::RemoveLink(Link::simple("sort", "under55")),
        EditOp::RemoveLink(Link::simple("under55", "sink")),
        EditOp::DeleteOperator("under55".into()),
        EditOp::AddLink(Link::simple("sort", "sink")),
    ]);
    fixture("FX-AGEFILTER", p, delta, Verdict::Unknown)
}

fn trips() -> Properties {
    Properties::source("trips", Schema::ints(&["trip_id", "duration", "start_hour", "fare"]))
}

/// Two filters deleted and one added around a shared projection; two
/// overlapping windows look equivalent but the versions are not.
pub fn fx_taxi() -> Fixture {
    let p = wf(
        "taxi-v1",
        vec![
            op("src", trips()),
            op("select_x", Properties::filter(col("duration").gt(10))),
            op("proj", Properties::project(&["trip_id", "duration", "start_hour"])),
            op("select_z", Properties::filter(col("start_hour").lt(12))),
            op("sink", Properties::Sink),
        ],
        chain_links(&["src", "select_x", "proj", "select_z", "sink"]),
    );
    let delta = Transformation(vec![
        EditOp::RemoveLink(Link::simple("src", "select_x")),
        EditOp::RemoveLink(Link::simple("select_x", "proj")),
        EditOp::RemoveLink(Link::simple("proj", "select_z")),
        EditOp::RemoveLink(Link::simple("select_z", "sink")),
        EditOp::DeleteOperator("select_x".into()),
        EditOp::DeleteOperator("select_z".into()),
        EditOp::AddOperator(op("select_y", Properties::filter(col("duration").gt(5)))),
        EditOp::AddLink(Link::simple("src", "proj")),
        EditOp::AddLink(Link::simple("proj", "select_y")),
        EditOp::AddLink(Link::simple("select_y", "sink")),
    ]);
    fixture("FX-TAXI", p, delta, Verdict::Unknown)
}

/// Same dataflow projecting different columns at the end.
pub fn fx_proj() -> Fixture {
    let trips = || Properties::source("trips", Schema::ints(&["trip_id", "trip_time", "tip", "fare"]));
    let version = |id: &str, cols: &[&str]| {
        wf(
            id,
            vec![
                op("src", trips()),
                op("paid", Properties::filter(col("fare").gt(0))),
                op("proj", Properties::project(cols)),
                op("sink", Properties::Sink),
            ],
            chain_links(&["src", "paid", "proj", "sink"]),
        )
    };
    let p = version("proj-v1", &["trip_time"]);
    let q = version("proj-v2", &["trip_time", "tip"]);
    let tracked = EditMapping::identity(&p, &q);
    Fixture { name: "FX-PROJ", p, q, tracked, expected: Verdict::False }
}

/// All named fixtures by name.
pub fn fixtures() -> BTreeMap<&'static str, Fixture> {
    [fx_run(), fx_run_single(), fx_swap(), fx_agefilter(), fx_taxi(), fx_proj()]
        .into_iter()
        .map(|f| (f.name, f))
        .collect()
}
