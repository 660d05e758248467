//! On-disk problem instances: a vertex set, source and target, named
//! capacity matrices, and optional fair-edge / language constraints.
//!
//! The format is a single JSON object with sparse `from->to` capacity maps:
//!
//! ```json
//! {
//!   "vertices": ["v1", "v2", "v3", "v4"],
//!   "source": "v1",
//!   "target": "v4",
//!   "capacities": { "c": { "v1->v2": "omega", "v2->v3": 1 } },
//!   "edges": [["v1", "v4"]],
//!   "nfa": { "states": 3, "initial": ["q0"], "final": ["q2"],
//!            "delta": [["q0", "c", "q1"]] }
//! }
//! ```
//!
//! Unmentioned edges default to capacity 0; `"omega"` denotes ω. Structural
//! problems are parse errors; violated invariants (such as a nonzero
//! capacity into the source) are validation errors naming the entry.

use crate::mm::{AbstractMatrix, Capacity, CapacityMatrix};
use crate::qualitative::Nfa;
use crate::{Error, Result};
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub vertices: Vec<String>,
    pub source: usize,
    pub target: usize,
    /// Named capacity matrices, sorted by name.
    pub capacities: Vec<(String, CapacityMatrix)>,
    pub fair_edges: Option<Vec<(usize, usize)>>,
    pub nfa: Option<Nfa>,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    /// Largest finite capacity over all letters.
    pub fn max_finite(&self) -> u64 {
        self.capacities
            .iter()
            .map(|(_, m)| m.max_finite())
            .max()
            .unwrap_or(0)
    }

    pub fn vertex_index(&self, name: &str) -> Result<usize> {
        self.vertices
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::Validation(format!("unknown vertex `{name}`")))
    }

    pub fn abstracted(&self) -> Vec<(String, AbstractMatrix)> {
        self.capacities
            .iter()
            .map(|(n, m)| (n.clone(), m.abstracted()))
            .collect()
    }

    pub fn letter(&self, name: &str) -> Result<&CapacityMatrix> {
        self.capacities
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
            .ok_or_else(|| Error::UnknownLetter(name.to_string()))
    }

    /// Resolves a comma-separated word of letter names.
    pub fn resolve_word(&self, word: &str) -> Result<Vec<&CapacityMatrix>> {
        word.split(',')
            .map(|name| self.letter(name.trim()))
            .collect()
    }

    pub fn parse_str(text: &str) -> Result<Instance> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Parse("top level must be an object".into()))?;

        let vertices: Vec<String> = required(obj, "vertices")?
            .as_array()
            .ok_or_else(|| Error::Parse("`vertices` must be an array".into()))?
            .iter()
            .map(|v| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| Error::Parse("vertex names must be strings".into()))
            })
            .collect::<Result<_>>()?;
        if vertices.is_empty() {
            return Err(Error::Parse("`vertices` must be nonempty".into()));
        }
        {
            let mut sorted = vertices.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != vertices.len() {
                return Err(Error::Validation("duplicate vertex names".into()));
            }
        }
        let index = |name: &str| -> Result<usize> {
            vertices
                .iter()
                .position(|v| v == name)
                .ok_or_else(|| Error::Validation(format!("unknown vertex `{name}`")))
        };

        let source_name = required(obj, "source")?
            .as_str()
            .ok_or_else(|| Error::Parse("`source` must be a string".into()))?;
        let target_name = required(obj, "target")?
            .as_str()
            .ok_or_else(|| Error::Parse("`target` must be a string".into()))?;
        let source = index(source_name)?;
        let target = index(target_name)?;
        if source == target {
            return Err(Error::Validation("source and target must differ".into()));
        }

        let caps_obj = required(obj, "capacities")?
            .as_object()
            .ok_or_else(|| Error::Parse("`capacities` must be an object".into()))?;
        if caps_obj.is_empty() {
            return Err(Error::Parse("`capacities` must be nonempty".into()));
        }
        let mut capacities: Vec<(String, CapacityMatrix)> = Vec::new();
        let mut names: Vec<&String> = caps_obj.keys().collect();
        names.sort();
        for name in names {
            let edges = caps_obj[name]
                .as_object()
                .ok_or_else(|| Error::Parse(format!("capacity `{name}` must be an object")))?;
            let mut matrix = CapacityMatrix::zero(vertices.len());
            for (edge, raw) in edges {
                let (from, to) = edge.split_once("->").ok_or_else(|| {
                    Error::Parse(format!("edge key `{edge}` must look like `from->to`"))
                })?;
                let from = index(from.trim())?;
                let to = index(to.trim())?;
                let cap = parse_capacity(raw)
                    .ok_or_else(|| Error::Parse(format!("bad capacity for `{name}.{edge}`")))?;
                if !cap.is_zero() && (to == source || from == target) {
                    return Err(Error::Validation(format!(
                        "capacity `{name}` entry `{edge}` violates the boundary rule: \
                         edges into the source or out of the target must be 0"
                    )));
                }
                matrix.set(from, to, cap);
            }
            capacities.push((name.clone(), matrix));
        }

        let fair_edges = match obj.get("edges") {
            None | Some(Value::Null) => None,
            Some(v) => {
                let list = v
                    .as_array()
                    .ok_or_else(|| Error::Parse("`edges` must be an array".into()))?;
                let mut out = Vec::new();
                for pair in list {
                    let pair = pair
                        .as_array()
                        .filter(|p| p.len() == 2)
                        .ok_or_else(|| Error::Parse("each edge must be a pair".into()))?;
                    let from = pair[0]
                        .as_str()
                        .ok_or_else(|| Error::Parse("edge endpoints must be strings".into()))?;
                    let to = pair[1]
                        .as_str()
                        .ok_or_else(|| Error::Parse("edge endpoints must be strings".into()))?;
                    out.push((index(from)?, index(to)?));
                }
                if out.is_empty() {
                    return Err(Error::Validation("`edges` must be nonempty".into()));
                }
                Some(out)
            }
        };

        let nfa = match obj.get("nfa") {
            None | Some(Value::Null) => None,
            Some(v) => Some(parse_nfa(v, &capacities)?),
        };

        Ok(Instance {
            vertices,
            source,
            target,
            capacities,
            fair_edges,
            nfa,
        })
    }

    pub fn to_json(&self) -> Value {
        let mut caps = Map::new();
        for (name, matrix) in &self.capacities {
            let mut edges = BTreeMap::new();
            for (r, c, cap) in matrix.entries() {
                if cap.is_zero() {
                    continue;
                }
                let key = format!("{}->{}", self.vertices[r], self.vertices[c]);
                let value = match cap {
                    Capacity::Omega => json!("omega"),
                    Capacity::Finite(k) => json!(k),
                };
                edges.insert(key, value);
            }
            caps.insert(name.clone(), json!(edges));
        }
        let mut out = Map::new();
        out.insert("vertices".into(), json!(self.vertices));
        out.insert("source".into(), json!(self.vertices[self.source]));
        out.insert("target".into(), json!(self.vertices[self.target]));
        out.insert("capacities".into(), Value::Object(caps));
        if let Some(edges) = &self.fair_edges {
            let list: Vec<Value> = edges
                .iter()
                .map(|&(f, t)| json!([self.vertices[f], self.vertices[t]]))
                .collect();
            out.insert("edges".into(), json!(list));
        }
        if let Some(nfa) = &self.nfa {
            let delta: Vec<Value> = nfa
                .transitions
                .iter()
                .map(|(q, a, q2)| json!([format!("q{q}"), a, format!("q{q2}")]))
                .collect();
            out.insert(
                "nfa".into(),
                json!({
                    "states": nfa.states,
                    "initial": nfa.initial.iter().map(|q| format!("q{q}")).collect::<Vec<_>>(),
                    "final": nfa.finals.iter().map(|q| format!("q{q}")).collect::<Vec<_>>(),
                    "delta": delta,
                }),
            );
        }
        Value::Object(out)
    }

    pub fn to_json_string(&self) -> String {
        self.to_json().to_string()
    }
}

fn required<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::Parse(format!("missing required field `{key}`")))
}

fn parse_capacity(v: &Value) -> Option<Capacity> {
    match v {
        Value::String(s) if s == "omega" || s == "w" => Some(Capacity::Omega),
        Value::Number(n) => n.as_u64().map(Capacity::Finite),
        _ => None,
    }
}

fn parse_state(name: &str, states: usize) -> Result<usize> {
    let id: usize = name
        .strip_prefix('q')
        .and_then(|rest| rest.parse().ok())
        .ok_or_else(|| Error::Parse(format!("state `{name}` must look like `q<i>`")))?;
    if id >= states {
        return Err(Error::Validation(format!(
            "state `{name}` outside 0..{states}"
        )));
    }
    Ok(id)
}

/// Parses a standalone NFA file (the same JSON shape as the instance's
/// embedded `nfa` object), validating labels against the capacities.
pub fn parse_nfa_str(text: &str, capacities: &[(String, CapacityMatrix)]) -> Result<Nfa> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    parse_nfa(&value, capacities)
}

fn parse_nfa(v: &Value, capacities: &[(String, CapacityMatrix)]) -> Result<Nfa> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::Parse("`nfa` must be an object".into()))?;
    let states = required(obj, "states")?
        .as_u64()
        .ok_or_else(|| Error::Parse("`nfa.states` must be a number".into()))? as usize;
    let read_states = |key: &str| -> Result<Vec<usize>> {
        required(obj, key)?
            .as_array()
            .ok_or_else(|| Error::Parse(format!("`nfa.{key}` must be an array")))?
            .iter()
            .map(|s| {
                let name = s
                    .as_str()
                    .ok_or_else(|| Error::Parse("state names must be strings".into()))?;
                parse_state(name, states)
            })
            .collect()
    };
    let initial = read_states("initial")?;
    let finals = read_states("final")?;
    let delta = required(obj, "delta")?
        .as_array()
        .ok_or_else(|| Error::Parse("`nfa.delta` must be an array".into()))?;
    let mut transitions = Vec::new();
    for t in delta {
        let t = t
            .as_array()
            .filter(|t| t.len() == 3)
            .ok_or_else(|| Error::Parse("each transition must be a triple".into()))?;
        let q = parse_state(
            t[0].as_str()
                .ok_or_else(|| Error::Parse("transition states must be strings".into()))?,
            states,
        )?;
        let label = t[1]
            .as_str()
            .ok_or_else(|| Error::Parse("transition labels must be strings".into()))?;
        if !capacities.iter().any(|(n, _)| n == label) {
            return Err(Error::Validation(format!(
                "nfa label `{label}` names no capacity"
            )));
        }
        let q2 = parse_state(
            t[2].as_str()
                .ok_or_else(|| Error::Parse("transition states must be strings".into()))?,
            states,
        )?;
        transitions.push((q, label.to_string(), q2));
    }
    Ok(Nfa {
        states,
        initial,
        finals,
        transitions,
    })
}
