use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::autodiff::ParameterStore;
use crate::corpus::{
    build_vocab, make_batches, parse_dataset, write_canonical, ExampleRecord, Label, ParseOptions, Schema, Split,
    Vocabulary,
};
use crate::evalkit::{
    adapt_foreign, evaluate, export_embeddings, probe, transfer_eval, welch_t, write_embeddings, CorrectnessSummary,
    EvalReport, LabeledFeatures, Metric, ProbeOptions, ProbeSplits, SeedEval, Summary,
};
use crate::models::{load_checkpoint, save_checkpoint, ExplainThenPredict, Model, ModelConfig, Trainer, Variant};
use crate::quality::{
    correctness_report, filter_report_tsv, filter_uninformative, partial_score, validate_record, violations_tsv,
    DistanceUnit, FilterSummary, JudgedPrediction, MatchOptions, Rule, TemplateSet,
};

use super::manifest::Recorder;
use super::{CliError, Command, Common, DataArgs, Preset, TrainArgs, Unit};

pub fn dispatch(common: &Common, command: Command) -> Result<Value, CliError> {
    let mut rec = Recorder::new(command.name(), &common.out);
    let summary = match command {
        Command::Validate { data, highlight_fraction } => validate(common, &mut rec, &data, &highlight_fraction)?,
        Command::FilterTemplates { data, templates, threshold, unit } => {
            filter_templates(common, &mut rec, &data, templates.as_deref(), threshold, unit)?
        }
        Command::BuildVocab { data, schema, threshold } => build_vocab_cmd(common, &mut rec, &data, &schema, threshold)?,
        Command::Train(args) => train(common, &mut rec, &args)?,
        Command::Generate { model, classifier, data, max_len, batch_size } => {
            generate(common, &mut rec, &model, classifier.as_deref(), &data, max_len, batch_size)?
        }
        Command::Evaluate { model, data, judgments, window, batch_size } => {
            evaluate_cmd(common, &mut rec, &model, &data, judgments.as_deref(), window, batch_size)?
        }
        Command::Embed { model, sentences, batch_size } => embed(common, &mut rec, &model, &sentences, batch_size)?,
        Command::Probe { features, model, task, l2, epochs } => {
            probe_cmd(common, &mut rec, features.as_deref(), model.as_deref(), task.as_deref(), l2, epochs)?
        }
        Command::TransferEval { model, data, source, batch_size } => {
            let path = common.resolve(&data);
            rec.input(&path);
            let outcome = adapt_foreign(&path, source)?;
            let mut per_seed = Vec::new();
            let mut seeds = Vec::new();
            for dir in &model {
                let run = load_run(common, &mut rec, dir)?;
                let report = transfer_eval(&run.model, &run.store, &run.vocab, &outcome, source, batch_size)?;
                seeds.push(SeedEval { seed: run.config.seed, accuracy: Some(report.accuracy), perplexity: None, bleu: None });
                per_seed.push(report);
            }
            rec.seeds = seeds.iter().map(|s| s.seed).collect();
            let variant = common_variant(common, &mut rec, &model)?;
            let report = EvalReport::from_seeds(variant, seeds)?;
            rec.write_json("transfer_report.json", &report)?;
            rec.write_json("transfer_runs.json", &per_seed)?;
            json!({ "source": source, "examples": outcome.records.len(), "no_consensus": outcome.no_consensus.len(), "accuracy": report.accuracy })
        }
        Command::Ttest { a, b, metric } => ttest(common, &mut rec, &a, &b, metric)?,
    };
    rec.finish()?;
    Ok(summary)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// `canonical`, `esnli`, a schema file, or `auto` to pick from the header.
fn resolve_schema(spec: &str, data: &Path) -> Result<Schema, CliError> {
    match spec {
        "canonical" => Ok(Schema::canonical()),
        "esnli" => Ok(Schema::esnli(3)),
        "auto" => {
            let file = File::open(data).map_err(|e| CliError::io(data, e))?;
            let mut header = String::new();
            BufReader::new(file).read_line(&mut header).map_err(|e| CliError::io(data, e))?;
            if header.contains("Sentence1") && header.contains("gold_label") {
                let n = (1..=3).filter(|i| header.contains(&format!("Explanation_{i}"))).count();
                Ok(Schema::esnli(n.max(1)))
            } else {
                Ok(Schema::canonical())
            }
        }
        path => Ok(Schema::load(path)?),
    }
}

struct Loaded {
    records: Vec<ExampleRecord>,
    rejects: usize,
}

fn load_data(common: &Common, rec: &mut Recorder, path: &Path, schema: &str, split: Split) -> Result<Loaded, CliError> {
    let path = common.resolve(path);
    rec.input(&path);
    let schema = resolve_schema(schema, &path)?;
    let outcome = parse_dataset(&path, &schema, ParseOptions::new(split))?;
    Ok(Loaded {
        rejects: outcome.rejects.len(),
        records: outcome.records,
    })
}

fn canonical_bytes(records: &[ExampleRecord]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_canonical(&mut buf, records)?;
    Ok(buf)
}

fn validate(common: &Common, rec: &mut Recorder, data: &DataArgs, fraction: &str) -> Result<Value, CliError> {
    let fraction: Ratio<u64> = fraction
        .parse()
        .map_err(|_| CliError::Usage(format!("highlight fraction {fraction:?} is not a ratio like 1/2")))?;
    let path = common.resolve(&data.data);
    rec.input(&path);
    let schema = resolve_schema(&data.schema, &path)?;
    let outcome = parse_dataset(&path, &schema, ParseOptions::new(data.split))?;
    let violations: Vec<_> = outcome.records.iter().flat_map(|r| validate_record(r, fraction)).collect();
    let mut by_rule: BTreeMap<String, usize> = Rule::ALL.iter().map(|r| (r.to_string(), 0)).collect();
    for v in &violations {
        *by_rule.entry(v.rule.to_string()).or_default() += 1;
    }
    let mut rejects = String::from("line\tpair_id\treason\n");
    for r in &outcome.rejects {
        rejects.push_str(&format!("{}\t{}\t{}\n", r.line, r.pair_id.as_deref().unwrap_or(""), r.reason.tag()));
    }
    rec.write("violations.tsv", violations_tsv(&violations))?;
    rec.write("rejects.tsv", rejects)?;
    rec.write("canonical.tsv", canonical_bytes(&outcome.records)?)?;
    let summary = json!({
        "records": outcome.records.len(),
        "rejects": outcome.rejects.len(),
        "acceptance_rate": outcome.acceptance_rate(),
        "violations": violations.len(),
        "by_rule": by_rule,
    });
    rec.write_json("validate.json", &summary)?;
    Ok(summary)
}

fn filter_templates(
    common: &Common,
    rec: &mut Recorder,
    data: &DataArgs,
    templates: Option<&Path>,
    threshold: usize,
    unit: Unit,
) -> Result<Value, CliError> {
    let set = match templates {
        Some(p) => {
            let p = common.resolve(p);
            rec.input(&p);
            TemplateSet::load(&p)?
        }
        None => TemplateSet::default(),
    };
    let loaded = load_data(common, rec, &data.data, &data.schema, data.split)?;
    let opts = MatchOptions {
        threshold,
        unit: match unit {
            Unit::Chars => DistanceUnit::Characters,
            Unit::Tokens => DistanceUnit::Tokens,
        },
    };
    let outcome = filter_uninformative(loaded.records, &set, &opts);
    let summary = FilterSummary::new(&outcome, &set);
    rec.write("filter_report.tsv", filter_report_tsv(&summary))?;
    rec.write_json("filter_summary.json", &summary)?;
    rec.write("informative.tsv", canonical_bytes(&outcome.kept)?)?;
    Ok(json!({
        "total": summary.total,
        "kept": summary.kept,
        "flagged": summary.flagged,
        "flagged_fraction": summary.flagged_fraction,
        "per_label": summary.per_label,
    }))
}

fn build_vocab_cmd(common: &Common, rec: &mut Recorder, data: &[PathBuf], schema: &str, threshold: u64) -> Result<Value, CliError> {
    let mut all = Vec::new();
    let mut rejects = 0;
    for path in data {
        let loaded = load_data(common, rec, path, schema, Split::Train)?;
        rejects += loaded.rejects;
        all.extend(loaded.records);
    }
    let vocab = build_vocab(&[&all], threshold)?;
    let mut buf = Vec::new();
    vocab.write_tsv(&mut buf)?;
    rec.write("vocab.tsv", buf)?;
    Ok(json!({
        "records": all.len(),
        "rejects": rejects,
        "threshold": threshold,
        "tokens": vocab.len(),
        "corpus_tokens": vocab.corpus_tokens(),
        "discarded_types": vocab.discarded_types(),
    }))
}

/// `0.3,0.6` or `start:end:step`, inclusive, rounded to 1e-9.
pub(super) fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("cannot read grid {spec:?}"));
    let round = |x: f64| (x * 1e9).round() / 1e9;
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [start, end, step] => {
            let (s, e, d): (f64, f64, f64) = (
                start.trim().parse().map_err(|_| bad())?,
                end.trim().parse().map_err(|_| bad())?,
                step.trim().parse().map_err(|_| bad())?,
            );
            if d <= 0.0 || e < s {
                return Err(bad());
            }
            let n = ((e - s) / d + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| round(s + i as f64 * d)).collect())
        }
        [_] => spec.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect(),
        _ => Err(bad()),
    }
}

fn base_config(common: &Common, rec: &mut Recorder, args: &TrainArgs) -> Result<ModelConfig, CliError> {
    let mut cfg = match &args.config {
        Some(p) => {
            let p = common.resolve(p);
            rec.input(&p);
            ModelConfig::from_toml(&fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?)?
        }
        None => {
            let variant = args
                .variant
                .ok_or_else(|| CliError::Usage("train needs --variant or --config".into()))?;
            match args.preset.unwrap_or(Preset::Desk) {
                Preset::Desk => ModelConfig::new(variant),
                Preset::Paper => ModelConfig::paper_scale(variant),
                Preset::Tiny => ModelConfig::tiny(variant),
            }
        }
    };
    if let Some(v) = args.variant {
        cfg.variant = v;
    }
    if let Some(e) = args.epochs {
        cfg.training.max_epochs = e;
    }
    if let Some(b) = args.batch_size {
        cfg.training.batch_size = b;
    }
    if let Some(lr) = args.learning_rate {
        cfg.training.learning_rate = lr;
    }
    Ok(cfg)
}

fn seed_list(args: &TrainArgs, default: u64) -> Vec<u64> {
    let mut seeds = if args.seed.is_empty() { vec![default] } else { args.seed.clone() };
    if let Some(n) = args.seeds {
        let first = seeds[0];
        seeds = (0..n as u64).map(|i| first + i).collect();
    }
    seeds
}

#[derive(Serialize)]
struct SweepPoint {
    alpha: f64,
    decoder_hidden: usize,
    runs: Vec<String>,
    report: EvalReport,
}

fn train(common: &Common, rec: &mut Recorder, args: &TrainArgs) -> Result<Value, CliError> {
    let base = base_config(common, rec, args)?;
    base.validate()?;
    let seeds = seed_list(args, base.seed);
    let alphas = match &args.alpha {
        Some(s) => parse_grid(s)?,
        None => vec![base.alpha],
    };
    let sizes = if args.decoder_size.is_empty() { vec![base.decoder_hidden] } else { args.decoder_size.clone() };
    let train_data = load_data(common, rec, &args.train, &args.schema, Split::Train)?;
    let val_data = match &args.validation {
        Some(p) => load_data(common, rec, p, &args.schema, Split::Validation)?.records,
        None => Vec::new(),
    };
    let vocab = match &args.vocab {
        Some(p) => {
            let p = common.resolve(p);
            rec.input(&p);
            Vocabulary::read_tsv(BufReader::new(File::open(&p).map_err(|e| CliError::io(&p, e))?))?
        }
        None => build_vocab(&[&train_data.records], args.vocab_threshold)?,
    };
    let mut vocab_tsv = Vec::new();
    vocab.write_tsv(&mut vocab_tsv)?;
    rec.write("vocab.tsv", &vocab_tsv)?;

    let mut points = Vec::new();
    for &alpha in &alphas {
        for &size in &sizes {
            for &seed in &seeds {
                let mut cfg = base.clone();
                cfg.alpha = alpha;
                cfg.decoder_hidden = size;
                cfg.seed = seed;
                cfg.validate()?;
                let name = format!("{}-a{alpha}-d{size}-s{seed}", cfg.variant);
                points.push((name, cfg));
            }
        }
    }
    let eval_set = if val_data.is_empty() { &train_data.records } else { &val_data };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))?;
    let results = pool.install(|| {
        points
            .par_iter()
            .map(|(name, cfg)| -> Result<_, CliError> {
                let (model, mut store) = Model::new(cfg, vocab.len())?;
                let report = Trainer::new(&model, &vocab).train(&mut store, &train_data.records, &val_data)?;
                let metrics = evaluate(&model, &store, &vocab, eval_set, cfg.training.batch_size)?.metrics;
                let dir = common.out.join("runs").join(name);
                fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
                let ckpt = dir.join("model.ckpt");
                save_checkpoint(&ckpt, cfg, &store)?;
                let files = [
                    (dir.join("config.toml"), cfg.to_toml().into_bytes()),
                    (dir.join("vocab.tsv"), vocab_tsv.clone()),
                    (dir.join("train_report.json"), (serde_json::to_string_pretty(&report)? + "\n").into_bytes()),
                ];
                for (p, bytes) in &files {
                    fs::write(p, bytes).map_err(|e| CliError::io(p, e))?;
                }
                let mut written = vec![ckpt];
                written.extend(files.into_iter().map(|(p, _)| p));
                Ok((metrics, written))
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    let mut sweep = Vec::new();
    let mut iter = points.iter().zip(results);
    for &alpha in &alphas {
        for &size in &sizes {
            let mut runs = Vec::new();
            let mut evals = Vec::new();
            for _ in &seeds {
                let ((name, _), (metrics, written)) = iter.next().expect("one result per point");
                for p in written {
                    rec.wrote(p);
                }
                runs.push(name.clone());
                evals.push(metrics);
            }
            let report = EvalReport::from_seeds(base.variant, evals)?;
            sweep.push(SweepPoint { alpha, decoder_hidden: size, runs, report });
        }
    }
    let score = |p: &SweepPoint| match (&p.report.accuracy, &p.report.perplexity) {
        (Some(a), _) if base.variant.predicts_label() => a.mean,
        (_, Some(ppl)) => -ppl.mean,
        _ => f64::NEG_INFINITY,
    };
    let best = sweep
        .iter()
        .enumerate()
        .fold(0, |b, (i, p)| if score(p) > score(&sweep[b]) { i } else { b });
    rec.config_hash = Some(base.hash());
    rec.seeds = seeds.clone();
    rec.write("config.toml", base.to_toml())?;
    rec.write_json("train_summary.json", &json!({ "variant": base.variant, "points": &sweep, "best": best }))?;
    rec.write_json("report.json", &sweep[best].report)?;
    Ok(json!({
        "variant": base.variant,
        "runs": points.len(),
        "best": { "alpha": sweep[best].alpha, "decoder_hidden": sweep[best].decoder_hidden, "runs": &sweep[best].runs },
        "report": &sweep[best].report,
    }))
}

struct Run {
    config: ModelConfig,
    vocab: Vocabulary,
    model: Model,
    store: ParameterStore,
}

fn load_run(common: &Common, rec: &mut Recorder, dir: &Path) -> Result<Run, CliError> {
    let dir = common.resolve(dir);
    let (cfg_path, vocab_path, ckpt) = (dir.join("config.toml"), dir.join("vocab.tsv"), dir.join("model.ckpt"));
    for p in [&cfg_path, &vocab_path, &ckpt] {
        rec.input(p);
    }
    let config = ModelConfig::from_toml(&fs::read_to_string(&cfg_path).map_err(|e| CliError::io(&cfg_path, e))?)?;
    let vocab = Vocabulary::read_tsv(BufReader::new(File::open(&vocab_path).map_err(|e| CliError::io(&vocab_path, e))?))?;
    let (model, store) = load_checkpoint(&ckpt, &config, vocab.len())?;
    Ok(Run { config, vocab, model, store })
}

fn clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

fn generate(
    common: &Common,
    rec: &mut Recorder,
    model_dir: &Path,
    classifier_dir: Option<&Path>,
    data: &DataArgs,
    max_len: Option<usize>,
    batch_size: usize,
) -> Result<Value, CliError> {
    let run = load_run(common, rec, model_dir)?;
    let classifier = classifier_dir.map(|d| load_run(common, rec, d)).transpose()?;
    if let Some(c) = &classifier {
        if c.vocab != run.vocab {
            return Err(CliError::Usage("generator and classifier were trained with different vocabularies".into()));
        }
    }
    let records = load_data(common, rec, &data.data, &data.schema, data.split)?.records;
    let max_len = max_len.unwrap_or(run.config.max_decode_len);
    let mut tsv = String::from("pair_id\tgold\tpredicted\texplanation\tlogprob_sum\n");
    let (mut labelled, mut correct) = (0, 0);
    for batch in make_batches(&records, batch_size, &run.vocab) {
        let rows: Vec<(crate::models::Prediction, Option<Label>)> = match &classifier {
            Some(c) => {
                let pipe = ExplainThenPredict::new(&run.model, &run.store, &c.model, &c.store)?;
                pipe.predict(&batch)?.into_iter().map(|p| (p.generated, Some(p.label))).collect()
            }
            None => run
                .model
                .predict_with_len(&run.store, &batch, max_len)?
                .into_iter()
                .map(|p| {
                    let l = p.label;
                    (p, l)
                })
                .collect(),
        };
        for ((p, label), gold) in rows.iter().zip(&batch.labels) {
            if let Some(l) = label {
                labelled += 1;
                correct += usize::from(l == gold);
            }
            let text = p.explanation_tokens(&run.vocab).join(" ");
            tsv.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                clean(&p.pair_id),
                gold,
                label.map_or(String::new(), |l| l.to_string()),
                clean(&text),
                p.logprob_sum()
            ));
        }
    }
    rec.config_hash = Some(run.config.hash());
    rec.seeds = vec![run.config.seed];
    rec.write("generations.tsv", tsv)?;
    Ok(json!({
        "rows": records.len(),
        "label_accuracy": (labelled > 0).then(|| correct as f64 / labelled as f64),
    }))
}

fn read_judgments(path: &Path) -> Result<Vec<JudgedPrediction>, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        let cells: Vec<&str> = line.split('\t').map(str::trim).collect();
        if line.trim().is_empty() || (i == 0 && cells[0].parse::<Label>().is_err()) {
            continue;
        }
        let bad = || CliError::Usage(format!("{}:{}: expected predicted, gold, mentioned, required", path.display(), i + 1));
        let [p, g, k, n] = cells.as_slice() else { return Err(bad()) };
        out.push(JudgedPrediction {
            predicted: p.parse().map_err(|_| bad())?,
            gold: g.parse().map_err(|_| bad())?,
            score: partial_score(k.parse().map_err(|_| bad())?, n.parse().map_err(|_| bad())?)?,
        });
    }
    Ok(out)
}

fn common_variant(common: &Common, rec: &mut Recorder, dirs: &[PathBuf]) -> Result<Variant, CliError> {
    let mut variant = None;
    for d in dirs {
        let p = common.resolve(d).join("config.toml");
        let cfg = ModelConfig::from_toml(&fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?)?;
        if variant.is_some_and(|v| v != cfg.variant) {
            return Err(CliError::Usage("all --model runs must share one variant".into()));
        }
        variant = Some(cfg.variant);
        rec.config_hash.get_or_insert(cfg.hash());
    }
    variant.ok_or_else(|| CliError::Usage("no --model given".into()))
}

fn evaluate_cmd(
    common: &Common,
    rec: &mut Recorder,
    models: &[PathBuf],
    data: &DataArgs,
    judgments: Option<&Path>,
    window: usize,
    batch_size: usize,
) -> Result<Value, CliError> {
    let records = load_data(common, rec, &data.data, &data.schema, data.split)?.records;
    let mut seeds = Vec::new();
    for dir in models {
        let run = load_run(common, rec, dir)?;
        seeds.push(evaluate(&run.model, &run.store, &run.vocab, &records, batch_size)?.metrics);
    }
    rec.seeds = seeds.iter().map(|s| s.seed).collect();
    let variant = common_variant(common, rec, models)?;
    let mut report = EvalReport::from_seeds(variant, seeds)?;
    if let Some(p) = judgments {
        let p = common.resolve(p);
        rec.input(&p);
        let judged = read_judgments(&p)?;
        report.correctness = Some(CorrectnessSummary::from(&correctness_report(&judged, window)?));
    }
    rec.write_json("eval_report.json", &report)?;
    Ok(serde_json::to_value(&report)?)
}

fn embed(common: &Common, rec: &mut Recorder, model: &Path, sentences: &Path, batch_size: usize) -> Result<Value, CliError> {
    let run = load_run(common, rec, model)?;
    let path = common.resolve(sentences);
    rec.input(&path);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let lines: Vec<&str> = text.lines().collect();
    let matrix = export_embeddings(&run.model, &run.store, &run.vocab, &lines, batch_size)?;
    let hash = run.config.hash();
    let (bin, manifest) = write_embeddings(&common.out, "embeddings", &matrix, &hash)?;
    rec.wrote(bin);
    rec.wrote(manifest);
    rec.config_hash = Some(hash);
    rec.seeds = vec![run.config.seed];
    Ok(json!({ "rows": matrix.rows, "dim": matrix.dim, "flagged": matrix.flagged }))
}

fn probe_cmd(
    common: &Common,
    rec: &mut Recorder,
    features: Option<&Path>,
    model: Option<&Path>,
    task: Option<&Path>,
    l2: Vec<f64>,
    epochs: usize,
) -> Result<Value, CliError> {
    let splits = match (features, model, task) {
        (Some(f), _, _) => {
            let f = common.resolve(f);
            rec.input(&f);
            ProbeSplits::read_tsv(BufReader::new(File::open(&f).map_err(|e| CliError::io(&f, e))?))?
        }
        (None, Some(m), Some(t)) => {
            let run = load_run(common, rec, m)?;
            let t = common.resolve(t);
            rec.input(&t);
            rec.config_hash = Some(run.config.hash());
            task_features(&run, &t)?
        }
        _ => return Err(CliError::Usage("probe needs --features, or --model with --task".into())),
    };
    let mut opts = ProbeOptions { epochs, ..ProbeOptions::default() };
    if !l2.is_empty() {
        opts.l2_grid = l2;
    }
    let result = probe(&splits, &opts)?;
    let out = json!({ "classes": splits.classes, "result": result });
    rec.write_json("probe.json", &out)?;
    Ok(out)
}

/// Embeds a `split, label, sentence` task file with a trained encoder.
fn task_features(run: &Run, path: &Path) -> Result<ProbeSplits, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || CliError::Usage(format!("{}:{}: expected split, label, sentence", path.display(), i + 1));
        let mut cells = line.splitn(3, '\t');
        let split: Split = cells.next().unwrap_or("").parse().map_err(|_| bad())?;
        let label = cells.next().ok_or_else(bad)?.to_string();
        let sentence = cells.next().ok_or_else(bad)?.to_string();
        rows.push((split, label, sentence));
    }
    let sentences: Vec<&str> = rows.iter().map(|(_, _, s)| s.as_str()).collect();
    let matrix = export_embeddings(&run.model, &run.store, &run.vocab, &sentences, 64)?;
    let classes: Vec<String> = rows
        .iter()
        .map(|(_, l, _)| l.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut splits = ProbeSplits { classes: classes.clone(), ..ProbeSplits::default() };
    for (r, (split, label, _)) in rows.iter().enumerate() {
        let target: &mut LabeledFeatures = match split {
            Split::Train => &mut splits.train,
            Split::Validation => &mut splits.validation,
            Split::Test => &mut splits.test,
        };
        let class = classes.binary_search(label).expect("label collected above");
        target.push(matrix.row(r).to_vec(), class);
    }
    Ok(splits)
}

fn ttest(common: &Common, rec: &mut Recorder, a: &Path, b: &Path, metric: Metric) -> Result<Value, CliError> {
    let (a, b) = (common.resolve(a), common.resolve(b));
    rec.input(&a);
    rec.input(&b);
    let values = |path: &Path| -> Result<Vec<f64>, CliError> {
        let report: EvalReport = read_json(path)?;
        report
            .metric(metric)
            .map(|s: &Summary| s.values.clone())
            .ok_or_else(|| CliError::Usage(format!("{} has no {metric:?} values", path.display())))
    };
    let (va, vb) = (values(&a)?, values(&b)?);
    let result = welch_t(&va, &vb)?;
    let out = json!({ "metric": metric, "a": va, "b": vb, "result": result });
    rec.write_json("ttest.json", &out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.6").unwrap(), [0.6]);
        assert_eq!(parse_grid("0.2,0.4").unwrap(), [0.2, 0.4]);
        let g = parse_grid("0.1:0.9:0.1").unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[2], 0.3);
        assert_eq!(g[8], 0.9);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("x").is_err());
    }
}
