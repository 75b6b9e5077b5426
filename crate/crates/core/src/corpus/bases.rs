//! Base workflows that generated pairs start from.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::workflow::{col, AggregateSpec, AggFunc, Link, Operator, Predicate, Properties, Schema, TableSemantics, Workflow};

/// Operator kinds a random base may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseMix {
    /// Filters, projections and inner joins.
    Spj,
    /// Adds sorts and aggregations.
    Mixed,
}

struct Stream {
    tail: String,
    columns: Vec<String>,
    aggregated: bool,
}

struct Builder {
    ops: Vec<Operator>,
    links: Vec<Link>,
}

impl Builder {
    fn push(&mut self, from: &str, id: String, props: Properties) -> String {
        self.ops.push(Operator::new(id.as_str(), props));
        self.links.push(Link::simple(from, id.as_str()));
        id
    }
}

fn comparison(rng: &mut ChaCha8Rng, column: &str) -> Predicate {
    if rng.gen_bool(0.5) {
        col(column).gt(rng.gen_range(-1..=0i64))
    } else {
        col(column).lt(rng.gen_range(3..=5i64))
    }
}

/// A random single-sink workflow of roughly `operators` operators over
/// one to three integer tables.
pub fn random_base(seed: u64, operators: usize, mix: BaseMix) -> Workflow {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tables = if operators < 8 { 1 } else { rng.gen_range(1..=3usize.min(operators / 5)) };
    let mut b = Builder { ops: Vec::new(), links: Vec::new() };
    let mut streams: Vec<Stream> = Vec::new();
    for t in 0..tables {
        let name = format!("t{t}");
        let columns: Vec<String> = ["k", "a", "b", "c"].iter().map(|c| format!("{name}_{c}")).collect();
        let refs: Vec<&str> = columns.iter().map(String::as_str).collect();
        b.ops.push(Operator::new(name.as_str(), Properties::source(&name, Schema::ints(&refs))));
        streams.push(Stream { tail: name, columns, aggregated: false });
    }
    let mut n = 0;
    let mut fresh = |kind: &str| {
        n += 1;
        format!("{kind}{n}")
    };
    while b.ops.len() + streams.len() < operators {
        let s = rng.gen_range(0..streams.len());
        let roll = rng.gen_range(0..100);
        if streams.len() >= 2 && roll < 20 {
            let mut other = rng.gen_range(0..streams.len() - 1);
            if other >= s {
                other += 1;
            }
            let (l, r) = (s.min(other), s.max(other));
            let right = streams.remove(r);
            let left = &mut streams[l];
            let id = fresh("join");
            b.ops.push(Operator::new(id.as_str(), Properties::join(&[(&left.columns[0], &right.columns[0])])));
            b.links.push(Link::new(left.tail.as_str(), 0, id.as_str(), 0));
            b.links.push(Link::new(right.tail.as_str(), 0, id.as_str(), 1));
            left.tail = id;
            left.columns.extend(right.columns);
            left.aggregated |= right.aggregated;
            continue;
        }
        let st = &mut streams[s];
        let pick = |rng: &mut ChaCha8Rng, cols: &[String]| cols[rng.gen_range(0..cols.len())].clone();
        if roll < 50 {
            let c = pick(&mut rng, &st.columns);
            let mut p = comparison(&mut rng, &c);
            if rng.gen_bool(0.2) {
                let d = pick(&mut rng, &st.columns);
                p = p.and(comparison(&mut rng, &d));
            }
            st.tail = b.push(&st.tail, fresh("filter"), Properties::filter(p));
        } else if roll < 72 && st.columns.len() > 2 {
            let mut rest: Vec<String> = st.columns[1..].to_vec();
            rest.shuffle(&mut rng);
            rest.truncate(rng.gen_range(1..st.columns.len()));
            let mut keep = vec![st.columns[0].clone()];
            keep.extend(st.columns[1..].iter().filter(|c| rest.contains(c)).cloned());
            let refs: Vec<&str> = keep.iter().map(String::as_str).collect();
            st.tail = b.push(&st.tail, fresh("project"), Properties::project(&refs));
            st.columns = keep;
        } else if mix == BaseMix::Mixed && roll < 86 {
            let c = pick(&mut rng, &st.columns);
            st.tail = b.push(&st.tail, fresh("sort"), Properties::sort(&[(&c, rng.gen_bool(0.3))]));
        } else if mix == BaseMix::Mixed && !st.aggregated && st.columns.len() > 2 {
            let alias = format!("{}_sum", st.columns[0]);
            let measure = st.columns[st.columns.len() - 1].clone();
            let group = [st.columns[0].as_str(), st.columns[1].as_str()];
            let spec = AggregateSpec::new(AggFunc::Sum, Some(&measure), &alias);
            st.tail = b.push(&st.tail, fresh("agg"), Properties::aggregate(&group, vec![spec]));
            st.columns = vec![group[0].to_string(), group[1].to_string(), alias];
            st.aggregated = true;
        } else {
            let c = pick(&mut rng, &st.columns);
            let p = comparison(&mut rng, &c);
            st.tail = b.push(&st.tail, fresh("filter"), Properties::filter(p));
        }
    }
    while streams.len() > 1 {
        let right = streams.pop().expect("two streams");
        let left = streams.last_mut().expect("two streams");
        let id = fresh("join");
        b.ops.push(Operator::new(id.as_str(), Properties::join(&[(&left.columns[0], &right.columns[0])])));
        b.links.push(Link::new(left.tail.as_str(), 0, id.as_str(), 0));
        b.links.push(Link::new(right.tail.as_str(), 0, id.as_str(), 1));
        left.tail = id;
        left.columns.extend(right.columns);
    }
    let tail = streams.pop().expect("one stream").tail;
    b.push(&tail, "sink".to_string(), Properties::Sink);
    Workflow::new(format!("base-{seed}"), TableSemantics::Set, b.ops, b.links).expect("generated ids are unique")
}

fn filters(b: &mut Builder, mut tail: String, prefix: &str, columns: &[&str]) -> String {
    for (i, c) in columns.iter().enumerate() {
        let k = 2 + i as i64;
        tail = b.push(&tail, format!("{prefix}{i}"), Properties::filter(col(c).gt(k)));
    }
    tail
}

/// Sixteen operators: two filtered tables joined, then more filters and a
/// projection. Shaped like a small analytics dataflow.
pub fn w1_like() -> Workflow {
    let mut b = Builder { ops: Vec::new(), links: Vec::new() };
    b.ops.push(Operator::new("orders", Properties::source("orders", Schema::ints(&["o_id", "o_cust", "o_total", "o_qty"]))));
    b.ops.push(Operator::new("custs", Properties::source("custs", Schema::ints(&["c_id", "c_age", "c_score"]))));
    let left = filters(&mut b, "orders".into(), "of", &["o_total", "o_qty", "o_total", "o_qty"]);
    let right = filters(&mut b, "custs".into(), "cf", &["c_age", "c_score", "c_age"]);
    b.ops.push(Operator::new("join", Properties::join(&[("o_cust", "c_id")])));
    b.links.push(Link::new(left.as_str(), 0, "join", 0));
    b.links.push(Link::new(right.as_str(), 0, "join", 1));
    let tail = filters(&mut b, "join".into(), "jf", &["o_total", "c_score", "o_qty"]);
    let tail = b.push(&tail, "proj".into(), Properties::project(&["o_id", "o_total", "c_age", "c_score"]));
    b.push(&tail, "sink".into(), Properties::Sink);
    Workflow::new("w1-like", TableSemantics::Set, b.ops, b.links).expect("unique ids")
}

/// Twenty operators in one long filter and projection pipeline over a
/// joined pair of tables.
pub fn w2_like() -> Workflow {
    let mut b = Builder { ops: Vec::new(), links: Vec::new() };
    b.ops.push(Operator::new("trips", Properties::source("trips", Schema::ints(&["t_id", "t_zone", "t_fare", "t_dist"]))));
    b.ops.push(Operator::new("zones", Properties::source("zones", Schema::ints(&["z_id", "z_pop"]))));
    b.ops.push(Operator::new("join", Properties::join(&[("t_zone", "z_id")])));
    b.links.push(Link::new("trips", 0, "join", 0));
    b.links.push(Link::new("zones", 0, "join", 1));
    let cols = ["t_fare", "t_dist", "z_pop", "t_fare", "t_dist", "z_pop", "t_fare", "t_dist", "z_pop", "t_fare", "t_dist", "z_pop", "t_fare", "t_dist", "z_pop"];
    let tail = filters(&mut b, "join".into(), "f", &cols);
    let tail = b.push(&tail, "proj".into(), Properties::project(&["t_id", "t_fare", "z_pop"]));
    b.push(&tail, "sink".into(), Properties::Sink);
    Workflow::new("w2-like", TableSemantics::Set, b.ops, b.links).expect("unique ids")
}
