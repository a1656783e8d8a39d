use std::collections::BTreeMap;

use serde::Serialize;

use super::templates::{FilterCounts, FilterOutcome, TemplateSet};
use super::validate::Violation;
use crate::corpus::Label;

fn clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// `pair_id, rule, explanation, message` rows with a header.
pub fn violations_tsv(violations: &[Violation]) -> String {
    let mut out = String::from("pair_id\trule\texplanation\tmessage\n");
    for v in violations {
        let idx = v.explanation.map(|i| i.to_string()).unwrap_or_default();
        out.push_str(&format!("{}\t{}\t{idx}\t{}\n", clean(&v.pair_id), v.rule, clean(&v.message)));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct FlaggedRow {
    pub pair_id: String,
    pub label: Label,
    pub explanation: usize,
    pub template: String,
    pub distance: usize,
}

/// Serializable view of a filter run.
#[derive(Debug, Clone, Serialize)]
pub struct FilterSummary {
    pub total: usize,
    pub kept: usize,
    pub flagged: usize,
    pub flagged_fraction: f64,
    pub per_label: BTreeMap<Label, FilterCounts>,
    pub rows: Vec<FlaggedRow>,
}

impl FilterSummary {
    pub fn new(outcome: &FilterOutcome, templates: &TemplateSet) -> Self {
        let rows = outcome
            .flagged
            .iter()
            .map(|f| FlaggedRow {
                pair_id: f.record.pair_id.clone(),
                label: f.record.label,
                explanation: f.explanation,
                template: templates.get(f.matched.template).map(|t| t.pattern.clone()).unwrap_or_default(),
                distance: f.matched.distance,
            })
            .collect();
        Self {
            total: outcome.kept.len() + outcome.flagged.len(),
            kept: outcome.kept.len(),
            flagged: outcome.flagged.len(),
            flagged_fraction: outcome.flagged_fraction(),
            per_label: outcome.per_label.clone(),
            rows,
        }
    }
}

/// One row per flagged record.
pub fn filter_report_tsv(summary: &FilterSummary) -> String {
    let mut out = String::from("pair_id\tlabel\texplanation\tdistance\ttemplate\n");
    for r in &summary.rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            clean(&r.pair_id),
            r.label,
            r.explanation,
            r.distance,
            clean(&r.template)
        ));
    }
    out
}
