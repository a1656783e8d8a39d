use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::distance::edit_distance_below;
use super::QualityError;
use crate::corpus::{ExampleRecord, Label};

const DEFAULT_TEMPLATES: &str = include_str!("default_templates.txt");

pub const PREMISE_SLOT: &str = "<premise>";
pub const HYPOTHESIS_SLOT: &str = "<hypothesis>";

/// Which records a template is tried against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Any,
    Only(Label),
}

impl Scope {
    pub fn applies_to(self, label: Label) -> bool {
        match self {
            Scope::Any => true,
            Scope::Only(l) => l == label,
        }
    }

    fn header(self) -> &'static str {
        match self {
            Scope::Any => "general",
            Scope::Only(l) => l.as_str(),
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.header())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub pattern: String,
    pub scope: Scope,
}

impl Template {
    /// Substitutes the sentences into the placeholders and normalizes.
    pub fn instantiate(&self, premise: &str, hypothesis: &str) -> String {
        let filled = self
            .pattern
            .replace(PREMISE_SLOT, &normalize(premise))
            .replace(HYPOTHESIS_SLOT, &normalize(hypothesis));
        normalize(&filled)
    }
}

/// An ordered list of scoped templates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: Vec<Template>,
}

impl Default for TemplateSet {
    /// The shipped list of uninformative-explanation patterns.
    fn default() -> Self {
        DEFAULT_TEMPLATES.parse().expect("shipped template file is valid")
    }
}

impl FromStr for TemplateSet {
    type Err = QualityError;

    /// One template per line under `[general]`, `[entailment]`, `[neutral]`
    /// or `[contradiction]`. Blank lines and `#` comments are skipped.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut scope = None;
        let mut templates = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |m: String| QualityError::TemplateFile { line: i + 1, message: m };
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                scope = Some(match name.trim().to_lowercase().as_str() {
                    "general" => Scope::Any,
                    other => Scope::Only(
                        other.parse().map_err(|_| bad(format!("unknown section [{name}]")))?,
                    ),
                });
                continue;
            }
            let scope = scope.ok_or_else(|| bad("template before any section header".into()))?;
            if !line.contains(PREMISE_SLOT) && !line.contains(HYPOTHESIS_SLOT) {
                return Err(bad(format!("{line:?} has no placeholder")));
            }
            templates.push(Template { pattern: line.to_string(), scope });
        }
        Ok(Self { templates })
    }
}

impl TemplateSet {
    pub fn new(templates: Vec<Template>) -> Result<Self, QualityError> {
        if let Some(t) = templates
            .iter()
            .find(|t| !t.pattern.contains(PREMISE_SLOT) && !t.pattern.contains(HYPOTHESIS_SLOT))
        {
            return Err(QualityError::TemplateFile { line: 0, message: format!("{:?} has no placeholder", t.pattern) });
        }
        Ok(Self { templates })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, QualityError> {
        std::fs::read_to_string(path)?.parse()
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Template> {
        self.templates.get(index)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Template> {
        self.templates.iter()
    }

    /// Indices of templates tried against records with `label`.
    pub fn applicable(&self, label: Label) -> impl Iterator<Item = (usize, &Template)> {
        self.templates.iter().enumerate().filter(move |(_, t)| t.scope.applies_to(label))
    }

    /// Renders back to the sectioned file format.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        let mut current = None;
        for t in &self.templates {
            if current != Some(t.scope) {
                if current.is_some() {
                    out.push('\n');
                }
                out.push_str(&format!("[{}]\n", t.scope));
                current = Some(t.scope);
            }
            out.push_str(&t.pattern);
            out.push('\n');
        }
        out
    }
}

/// Lowercases, collapses whitespace and strips terminal punctuation.
pub fn normalize(text: &str) -> String {
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    collapsed
        .trim_end_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
        .to_string()
}

/// Unit over which distances are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceUnit {
    #[default]
    Characters,
    Tokens,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchOptions {
    /// An explanation matches when its distance is strictly below this.
    pub threshold: usize,
    pub unit: DistanceUnit,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self { threshold: 10, unit: DistanceUnit::Characters }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateMatch {
    pub template: usize,
    pub distance: usize,
}

fn units(text: &str, unit: DistanceUnit) -> Vec<String> {
    match unit {
        DistanceUnit::Characters => text.chars().map(String::from).collect(),
        DistanceUnit::Tokens => crate::corpus::tokenize(text),
    }
}

fn distance_below(a: &str, b: &str, opts: &MatchOptions) -> Option<usize> {
    match opts.unit {
        DistanceUnit::Characters => {
            let a: Vec<char> = a.chars().collect();
            let b: Vec<char> = b.chars().collect();
            edit_distance_below(&a, &b, opts.threshold)
        }
        DistanceUnit::Tokens => {
            edit_distance_below(&units(a, opts.unit), &units(b, opts.unit), opts.threshold)
        }
    }
}

/// The closest applicable template within the threshold; ties go to the
/// earlier template.
pub fn match_template(
    explanation: &str,
    premise: &str,
    hypothesis: &str,
    label: Label,
    templates: &TemplateSet,
    opts: &MatchOptions,
) -> Option<TemplateMatch> {
    let target = normalize(explanation);
    let mut best: Option<TemplateMatch> = None;
    for (index, t) in templates.applicable(label) {
        let filled = t.instantiate(premise, hypothesis);
        if let Some(d) = distance_below(&target, &filled, opts) {
            if best.is_none_or(|b| d < b.distance) {
                best = Some(TemplateMatch { template: index, distance: d });
            }
        }
    }
    best
}

/// A record removed by the filter and the explanation that triggered it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlaggedRecord {
    pub record: ExampleRecord,
    pub explanation: usize,
    pub matched: TemplateMatch,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterCounts {
    pub kept: usize,
    pub flagged: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterOutcome {
    pub kept: Vec<ExampleRecord>,
    pub flagged: Vec<FlaggedRecord>,
    pub per_label: BTreeMap<Label, FilterCounts>,
}

impl FilterOutcome {
    pub fn flagged_fraction(&self) -> f64 {
        let total = self.kept.len() + self.flagged.len();
        if total == 0 {
            0.0
        } else {
            self.flagged.len() as f64 / total as f64
        }
    }
}

/// Splits records into those whose explanations are all informative and
/// those with at least one explanation matching a template.
pub fn filter_uninformative(
    records: impl IntoIterator<Item = ExampleRecord>,
    templates: &TemplateSet,
    opts: &MatchOptions,
) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    for record in records {
        let hit = record.explanations.iter().enumerate().find_map(|(i, e)| {
            match_template(&e.raw, &record.premise.raw, &record.hypothesis.raw, record.label, templates, opts)
                .map(|m| (i, m))
        });
        let counts = out.per_label.entry(record.label).or_default();
        match hit {
            Some((explanation, matched)) => {
                counts.flagged += 1;
                out.flagged.push(FlaggedRecord { record, explanation, matched });
            }
            None => {
                counts.kept += 1;
                out.kept.push(record);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Split;

    #[test]
    fn default_set_sections() {
        let set = TemplateSet::default();
        let count = |s: Scope| set.iter().filter(|t| t.scope == s).count();
        assert_eq!(count(Scope::Any), 8);
        assert_eq!(count(Scope::Only(Label::Entailment)), 18);
        assert_eq!(count(Scope::Only(Label::Neutral)), 11);
        assert_eq!(count(Scope::Only(Label::Contradiction)), 19);
        assert_eq!(set.get(0).unwrap().pattern, "<premise>");
    }

    #[test]
    fn file_round_trip() {
        let set = TemplateSet::default();
        let back: TemplateSet = set.to_file_string().parse().unwrap();
        assert_eq!(set, back);
    }

    #[test]
    fn rejects_bad_files() {
        assert!("<premise>".parse::<TemplateSet>().is_err());
        assert!("[general]\nno slot here".parse::<TemplateSet>().is_err());
        assert!("[maybe]\n<premise>".parse::<TemplateSet>().is_err());
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize("  A  Man\tSleeps. "), "a man sleeps");
        assert_eq!(normalize("Why?!"), "why");
        assert_eq!(normalize(""), "");
    }

    #[test]
    fn exact_instance_matches_at_zero() {
        let set = TemplateSet::default();
        let p = "A man is sleeping.";
        let h = "A man is tired.";
        let e = "Just because a man is sleeping doesn't mean a man is tired.";
        let m = match_template(e, p, h, Label::Neutral, &set, &MatchOptions::default()).unwrap();
        assert_eq!(m.distance, 0);
        assert_eq!(set.get(m.template).unwrap().pattern, "Just because <premise> doesn't mean <hypothesis>");
    }

    #[test]
    fn premise_copy_matches_bare_template() {
        let set = TemplateSet::default();
        let p = "Two dogs run through a field.";
        let m = match_template(p, p, "Dogs are outside.", Label::Entailment, &set, &MatchOptions::default()).unwrap();
        assert_eq!(m, TemplateMatch { template: 0, distance: 0 });
    }

    #[test]
    fn scope_is_respected() {
        let set = TemplateSet::default();
        let p = "A man is sleeping.";
        let h = "A man is tired.";
        let e = "Just because a man is sleeping doesn't mean a man is tired.";
        assert!(match_template(e, p, h, Label::Contradiction, &set, &MatchOptions::default()).is_none());
    }

    #[test]
    fn token_unit() {
        let set = TemplateSet::default();
        let opts = MatchOptions { threshold: 3, unit: DistanceUnit::Tokens };
        let p = "A man is sleeping.";
        let h = "A man is tired.";
        let e = "Just because a man is sleeping doesn't mean he is tired.";
        let m = match_template(e, p, h, Label::Neutral, &set, &opts).unwrap();
        assert_eq!(m.distance, 2);
    }

    #[test]
    fn filter_counts_and_idempotence() {
        let set = TemplateSet::default();
        let opts = MatchOptions::default();
        let recs = vec![
            ExampleRecord::new("1", Split::Train, "A dog runs.", "An animal runs.", Label::Entailment, &["Any dog counts as an animal, so the claim holds."]),
            ExampleRecord::new("2", Split::Train, "A dog runs.", "A dog sleeps.", Label::Contradiction, &["A dog runs contradicts a dog sleeps"]),
            ExampleRecord::new("3", Split::Train, "A dog runs.", "A dog runs home.", Label::Neutral, &["Not every run ends at home."]),
        ];
        let out = filter_uninformative(recs.clone(), &set, &opts);
        let ids: Vec<_> = out.flagged.iter().map(|f| f.record.pair_id.as_str()).collect();
        assert_eq!(ids, ["2"]);
        assert_eq!(out.kept.len(), 2);
        assert_eq!(out.per_label[&Label::Contradiction], FilterCounts { kept: 0, flagged: 1 });
        let again = filter_uninformative(out.kept.clone(), &set, &opts);
        assert!(again.flagged.is_empty());
        assert_eq!(again.kept, out.kept);
        assert_eq!(filter_uninformative(Vec::new(), &set, &opts), FilterOutcome::default());
    }
}
