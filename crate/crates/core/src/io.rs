//! File formats: workflow documents, version-pair bundles, corpus
//! directories and canonical JSON.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::corpus::GeneratedPair;
use crate::edit::{EditMapping, Transformation};
use crate::ev::Verdict;
use crate::orchestrator::Tracked;
use crate::workflow::{Link, Operator, TableSemantics, Workflow, WorkflowError};

/// On-disk form of a workflow version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkflowDocument {
    pub id: String,
    #[serde(default)]
    pub semantics: TableSemantics,
    pub operators: Vec<Operator>,
    pub links: Vec<Link>,
}

impl From<&Workflow> for WorkflowDocument {
    fn from(w: &Workflow) -> Self {
        WorkflowDocument {
            id: w.id().to_string(),
            semantics: w.semantics(),
            operators: w.operators().to_vec(),
            links: w.links().to_vec(),
        }
    }
}

impl TryFrom<WorkflowDocument> for Workflow {
    type Error = WorkflowError;

    fn try_from(doc: WorkflowDocument) -> Result<Self, Self::Error> {
        Workflow::new(doc.id, doc.semantics, doc.operators, doc.links)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("{origin}:{line}:{column}: {message}")]
    Json { origin: String, line: usize, column: usize, message: String },
    #[error("{origin}: {source}")]
    Workflow { origin: String, source: WorkflowError },
}

/// Deserializes `text`, reporting errors with their line and column.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Json {
        origin: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })
}

fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message.to_string(),
    }
}

pub fn parse_workflow(text: &str, origin: &str) -> Result<Workflow, IoError> {
    let doc: WorkflowDocument = parse_json(text, origin)?;
    Workflow::try_from(doc).map_err(|source| IoError::Workflow { origin: origin.to_string(), source })
}

fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Read { path: path.display().to_string(), source })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    parse_json(&read_text(path)?, &path.display().to_string())
}

pub fn read_workflow(path: &Path) -> Result<Workflow, IoError> {
    parse_workflow(&read_text(path)?, &path.display().to_string())
}

fn sort_keys(value: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, sort_keys(v))).collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

/// Pretty JSON with object keys in lexicographic order.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("value serializes to JSON");
    serde_json::to_string_pretty(&sort_keys(v)).expect("JSON value prints")
}

/// Canonical text of a workflow: sorted keys, operators sorted by id and
/// links sorted by endpoints.
pub fn workflow_to_json(w: &Workflow) -> String {
    to_canonical_json(&WorkflowDocument::from(w))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = to_canonical_json(value);
    text.push('\n');
    fs::write(path, text).map_err(|source| IoError::Write { path: path.display().to_string(), source })
}

/// Two versions plus whatever was recorded about the edit between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairBundle {
    pub id: String,
    pub p: WorkflowDocument,
    pub q: WorkflowDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapping: Option<EditMapping>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Transformation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Verdict>,
}

impl PairBundle {
    pub fn new(id: impl Into<String>, p: &Workflow, q: &Workflow) -> Self {
        PairBundle { id: id.into(), p: p.into(), q: q.into(), mapping: None, delta: None, expected: None }
    }

    pub fn from_generated(id: impl Into<String>, g: &GeneratedPair) -> Self {
        PairBundle {
            mapping: Some(g.tracked.clone()),
            delta: Some(g.delta.clone()),
            expected: Some(g.expected),
            ..PairBundle::new(id, &g.p, &g.q)
        }
    }

    pub fn versions(&self) -> Result<(Workflow, Workflow), IoError> {
        let build = |doc: &WorkflowDocument, side: &str| {
            Workflow::try_from(doc.clone()).map_err(|source| IoError::Workflow { origin: format!("{} ({side})", self.id), source })
        };
        Ok((build(&self.p, "p")?, build(&self.q, "q")?))
    }

    /// The recorded mapping, or else the recorded edits.
    pub fn tracked(&self) -> Option<Tracked> {
        match (&self.mapping, &self.delta) {
            (Some(m), _) => Some(Tracked::Mapping(m.clone())),
            (None, Some(d)) => Some(Tracked::Edits(d.clone())),
            (None, None) => None,
        }
    }
}

/// Writes one `<id>.json` bundle per pair.
pub fn write_corpus(dir: &Path, bundles: &[PairBundle]) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(|source| IoError::Write { path: dir.display().to_string(), source })?;
    for b in bundles {
        write_json(&dir.join(format!("{}.json", b.id)), b)?;
    }
    Ok(())
}

/// Every `*.json` bundle in `dir`, ordered by file name.
pub fn read_corpus(dir: &Path) -> Result<Vec<PairBundle>, IoError> {
    let entries = fs::read_dir(dir).map_err(|source| IoError::Read { path: dir.display().to_string(), source })?;
    let mut paths = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| IoError::Read { path: dir.display().to_string(), source })?;
        let path = entry.path();
        if path.extension().is_some_and(|e| e == "json") {
            paths.push(path);
        }
    }
    paths.sort();
    paths.iter().map(|p| read_json(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{fixtures, running_example};

    #[test]
    fn workflow_round_trips_through_canonical_json() {
        for w in [running_example()].into_iter().chain(fixtures().into_values().flat_map(|f| [f.p, f.q])) {
            let text = workflow_to_json(&w);
            let back = parse_workflow(&text, "mem").unwrap();
            assert_eq!(back, w);
            assert_eq!(workflow_to_json(&back), text);
        }
    }

    #[test]
    fn canonical_form_ignores_input_order() {
        let w = running_example();
        let mut doc = WorkflowDocument::from(&w);
        doc.operators.reverse();
        doc.links.reverse();
        let shuffled = serde_json::to_string(&doc).unwrap();
        let back = parse_workflow(&shuffled, "mem").unwrap();
        assert_eq!(workflow_to_json(&back), workflow_to_json(&w));
    }

    #[test]
    fn keys_are_sorted() {
        let text = workflow_to_json(&running_example());
        let top: Vec<usize> = ["\"id\"", "\"links\"", "\"operators\"", "\"semantics\""].iter().map(|k| text.find(k).unwrap()).collect();
        assert!(top.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn malformed_json_reports_its_location() {
        let err = parse_workflow("{\n  \"id\": \"w\",\n  \"operators\": [,]\n}", "bad.json").unwrap_err();
        let IoError::Json { line, column, .. } = &err else { panic!("{err}") };
        assert_eq!((*line, *column), (3, 17));
        assert!(err.to_string().starts_with("bad.json:3:17:"));
    }

    #[test]
    fn duplicate_operator_ids_are_rejected() {
        let text = r#"{"id":"w","operators":[{"id":"a","kind":"Sink"},{"id":"a","kind":"Sink"}],"links":[]}"#;
        assert!(matches!(parse_workflow(text, "dup"), Err(IoError::Workflow { .. })));
    }

    #[test]
    fn bundle_keeps_tracked_edits() {
        let f = crate::corpus::fx_run();
        let mut b = PairBundle::new("run", &f.p, &f.q);
        b.mapping = Some(f.tracked.clone());
        let back: PairBundle = parse_json(&to_canonical_json(&b), "mem").unwrap();
        assert_eq!(back, b);
        let (p, q) = back.versions().unwrap();
        assert_eq!((p, q), (f.p, f.q));
        assert!(matches!(back.tracked(), Some(Tracked::Mapping(m)) if m == f.tracked));
    }
}
