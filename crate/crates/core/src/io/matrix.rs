//! Text and JSON renderings of triple matrices and guidance lists.

use serde_json::{json, Value};

use crate::metagraph::{EdgeId, ElementSet, Triple, TripleMatrix};
use crate::model::GuidanceEntry;

fn braces(set: &ElementSet) -> String {
    let items: Vec<&str> = set.iter().map(|x| x.as_str()).collect();
    format!("{{{}}}", items.join(","))
}

fn angle(path: &[EdgeId]) -> String {
    let items: Vec<&str> = path.iter().map(|e| e.as_str()).collect();
    format!("<{}>", items.join(","))
}

/// `<{coinput}, {cooutput}, <path>>`
pub fn render_triple(t: &Triple) -> String {
    format!("<{}, {}, {}>", braces(&t.coinput), braces(&t.cooutput), angle(&t.path))
}

/// One line per triple: `source -> target <{CI}, {CO}, <path>>`, in
/// (source, target, path) order. Empty cells produce no line.
pub fn render_matrix(m: &TripleMatrix) -> String {
    let mut out = String::new();
    for (s, t, triple) in m.triples() {
        out.push_str(&format!("{s} -> {t} {}\n", render_triple(triple)));
    }
    out
}

/// One line per entry, in the given (display) order.
pub fn render_guidance(entries: &[GuidanceEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&format!(
            "{} -> {} len={} <{}, {}, {}>\n",
            e.source,
            e.target,
            e.path.len(),
            braces(&e.coinput),
            braces(&e.cooutput),
            angle(&e.path)
        ));
    }
    out
}

pub fn matrix_json(m: &TripleMatrix, truncated: bool) -> Value {
    let cells: Vec<Value> = m
        .cells()
        .map(|(s, t, set)| {
            json!({
                "source": s,
                "target": t,
                "triples": set.iter().map(|tr| json!({
                    "coinput": tr.coinput,
                    "cooutput": tr.cooutput,
                    "path": tr.path,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "cells": cells,
        "domain": m.domain(),
        "truncated": truncated,
    })
}
