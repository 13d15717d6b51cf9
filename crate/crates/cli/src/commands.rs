//! One function per subcommand. Each reads its upstream artifacts from the
//! workspace, writes its own, and returns a one-line summary.

use std::collections::BTreeMap;

use anyhow::{Context, Result};
use botwatch_core::booster::{select_features, train};
use botwatch_core::evaluate::{evaluate_protocol, BoostPipeline, ProtocolConfig};
use botwatch_core::resample::resample;
use botwatch_core::shapley::{explain_batch, summarize};
use botwatch_core::tuning::tune;
use botwatch_core::{BoosterConfig, ResampleConfig, TreeEnsemble};
use botwatch_pipeline::corpus::{ingest_reader, ingest_str, CorpusView, IngestOptions};
use botwatch_pipeline::featurize::{featurize, fit_statistics, FeatureMatrix, StandardPipeline, StatisticsProvenance};
use botwatch_pipeline::generalization::{temporal_generalization, GeneralizationConfig, GeneralizationReport};
use botwatch_pipeline::labelfusion::{
    plan_labeling, read_labels, read_scores, read_suspensions, run_funnel, write_labels, FunnelReport, PlanRequest,
    QuotaPlan, Survivors,
};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use crate::artifacts::*;
use crate::config::Settings;
use crate::failure::Validation;

fn invalid(e: impl std::fmt::Display) -> anyhow::Error {
    Validation(e.to_string()).into()
}

fn read_input(settings: &Settings, which: &str) -> Result<Vec<u8>> {
    let path = settings.input(which)?;
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn load_view(ws: &Workspace) -> Result<(CorpusView, Vec<u8>)> {
    let bytes = ws.require(CORPUS)?;
    let text = std::str::from_utf8(&bytes).context("corpus artifact is not UTF-8")?;
    let (view, _) = ingest_str(text, &IngestOptions::default()).context("reading the ingested corpus")?;
    Ok((view, bytes))
}

fn load_matrix(ws: &Workspace) -> Result<(FeatureMatrix, Vec<u8>)> {
    let bytes = ws.require(FEATURES)?;
    let m = FeatureMatrix::read_csv(bytes.as_slice()).context("reading the feature matrix")?;
    Ok((m, bytes))
}

fn label_map(bytes: &[u8]) -> Result<BTreeMap<String, u8>> {
    let labels = read_labels(bytes).context("reading labels")?;
    Ok(labels
        .into_iter()
        .filter_map(|l| l.verdict.label().map(|y| (l.user_id, y)))
        .collect())
}

fn booster_config(s: &Settings) -> BoosterConfig {
    BoosterConfig {
        seed: s.config.stage_seed("booster"),
        ..s.config.booster.clone()
    }
}

fn resample_config(s: &Settings) -> Option<ResampleConfig> {
    s.config.rebalance.then(|| ResampleConfig {
        seed: s.config.stage_seed("resample"),
        ..s.config.resample.clone()
    })
}

pub fn ingest(s: &Settings, ws: &Workspace) -> Result<String> {
    let raw = read_input(s, "corpus")?;
    let opts = IngestOptions {
        tolerance: s.config.ingest.tolerance,
        ..IngestOptions::default()
    };
    let (view, report) = ingest_reader(raw.as_slice(), &opts).map_err(|e| invalid(format!("corpus: {e}")))?;
    let export = view.export_jsonl();
    let inputs = [("input:corpus", raw.as_slice())];
    ws.write(CORPUS, export.as_bytes(), &inputs)?;
    ws.write_json(INGEST_REPORT, &report, &inputs)?;
    Ok(format!(
        "ingest: {} accounts, {} tweets, {} rejected lines",
        view.n_accounts(),
        view.n_tweets(),
        report.rejected
    ))
}

pub fn label(s: &Settings, ws: &Workspace) -> Result<String> {
    let (view, corpus) = load_view(ws)?;
    let scores_raw = read_input(s, "scores")?;
    let scores = read_scores(scores_raw.as_slice()).map_err(|e| invalid(format!("scores: {e}")))?;
    let suspended_raw = match s.suspended {
        Some(_) => read_input(s, "suspended")?,
        None => Vec::new(),
    };
    let suspended = read_suspensions(suspended_raw.as_slice()).map_err(|e| invalid(format!("suspensions: {e}")))?;
    let out = run_funnel(view.user_ids(), &scores, &suspended, &s.config.fusion).map_err(invalid)?;
    let mut buf = Vec::new();
    write_labels(&mut buf, &out.labels)?;
    let inputs = [
        (CORPUS, corpus.as_slice()),
        ("input:scores", scores_raw.as_slice()),
        ("input:suspended", suspended_raw.as_slice()),
    ];
    ws.write(LABELS, &buf, &inputs)?;
    ws.write_json(FUNNEL, &out.report, &inputs)?;
    let r = &out.report;
    Ok(format!(
        "label: {} users, {} forwarded, {} bot / {} normal / {} unlabeled",
        r.input, r.forwarded, r.final_bot, r.final_normal, r.unlabeled
    ))
}

#[derive(Debug, Serialize)]
struct CategoryCount {
    category: String,
    count: usize,
}

#[derive(Debug, Serialize)]
struct FeaturizeSummary {
    users: usize,
    labeled: usize,
    bot: usize,
    normal: usize,
    categories: Vec<CategoryCount>,
    total: usize,
    statistics: StatisticsProvenance,
}

fn category_counts(m: &FeatureMatrix) -> Vec<CategoryCount> {
    m.spec
        .category_counts()
        .into_iter()
        .map(|(category, count)| CategoryCount { category, count })
        .collect()
}

pub fn featurize_cmd(s: &Settings, ws: &Workspace) -> Result<String> {
    let labels_raw = ws.require(LABELS)?;
    let (view, corpus) = load_view(ws)?;
    let mut fit = s.config.features.clone();
    fit.embedding.seed = s.config.stage_seed("embedding");
    let fitted = fit_statistics(&view, &fit).context("fitting corpus statistics")?;
    let users: Vec<String> = view.user_ids().map(String::from).collect();
    let mut m = featurize(&view, &fitted, &users).context("extracting features")?;
    let labels = label_map(&labels_raw)?;
    m.set_labels(&labels);

    let mut csv = Vec::new();
    m.write_csv(&mut csv)?;
    let inputs = [(CORPUS, corpus.as_slice()), (LABELS, labels_raw.as_slice())];
    ws.write(FEATURES, &csv, &inputs)?;
    let table = fitted.embeddings.value.to_text(&fitted.embeddings.provenance)?;
    ws.write(EMBEDDINGS, table.as_bytes(), &inputs[..1])?;
    let bot = m.labels.iter().filter(|l| **l == Some(1)).count();
    let normal = m.labels.iter().filter(|l| **l == Some(0)).count();
    let summary = FeaturizeSummary {
        users: m.n_rows(),
        labeled: bot + normal,
        bot,
        normal,
        categories: category_counts(&m),
        total: m.n_cols(),
        statistics: fitted.provenance(),
    };
    ws.write_json(FEATURIZE_REPORT, &summary, &inputs)?;
    Ok(format!(
        "featurize: {} users x {} features ({} labeled)",
        summary.users, summary.total, summary.labeled
    ))
}

#[derive(Debug, Serialize)]
struct ResampleSummary {
    rows_after: usize,
    synthetic: usize,
    removed: usize,
}

#[derive(Debug, Serialize)]
struct SelectedFeature {
    feature: String,
    importance: f64,
}

#[derive(Debug, Serialize)]
struct TrainSummary {
    rows: usize,
    bot: usize,
    normal: usize,
    resample: Option<ResampleSummary>,
    booster: BoosterConfig,
    logloss: Vec<f64>,
    selection_threshold: f64,
    selected: Vec<SelectedFeature>,
}

pub fn train_cmd(s: &Settings, ws: &Workspace) -> Result<String> {
    let (m, feats) = load_matrix(ws)?;
    let data = m.to_dataset();
    let (fit_data, resampled) = match resample_config(s) {
        Some(cfg) => {
            let r = resample(&data, &cfg).context("resampling training data")?;
            let summary = ResampleSummary {
                rows_after: r.data.n_rows(),
                synthetic: r.origins.len(),
                removed: r.removed_ids.len(),
            };
            (r.data, Some(summary))
        }
        None => (data.clone(), None),
    };
    let booster = booster_config(s);
    let (model, report) = train(&fit_data, &booster, &m.spec).context("training")?;
    let selection = select_features(&model, s.config.selection);
    let mut selected: Vec<SelectedFeature> = selection
        .mask
        .iter()
        .zip(&selection.importance)
        .zip(m.spec.names())
        .filter(|((keep, _), _)| **keep)
        .map(|((_, imp), name)| SelectedFeature {
            feature: name.clone(),
            importance: *imp,
        })
        .collect();
    selected.sort_by(|a, b| b.importance.total_cmp(&a.importance).then_with(|| a.feature.cmp(&b.feature)));

    let model_json = model.to_json()? + "\n";
    let inputs = [(FEATURES, feats.as_slice())];
    ws.write(MODEL, model_json.as_bytes(), &inputs)?;
    let summary = TrainSummary {
        rows: data.n_rows(),
        bot: data.positives(),
        normal: data.n_rows() - data.positives(),
        resample: resampled,
        booster,
        logloss: report.logloss,
        selection_threshold: selection.threshold,
        selected,
    };
    ws.write_json(TRAIN_REPORT, &summary, &inputs)?;
    Ok(format!(
        "train: {} trees on {} rows, final logloss {:.4}, {} features above the selection threshold",
        model.trees.len(),
        fit_data.n_rows(),
        summary.logloss.last().copied().unwrap_or(f64::NAN),
        summary.selected.len()
    ))
}

pub fn tune_cmd(s: &Settings, ws: &Workspace) -> Result<String> {
    let (m, feats) = load_matrix(ws)?;
    let data = m.to_dataset();
    let grid = s.config.grid.clone().unwrap_or_default();
    let report = tune(
        &data,
        &grid,
        &booster_config(s),
        resample_config(s).as_ref(),
        &m.spec,
        s.config.protocol.k,
        s.config.stage_seed("tune"),
    )
    .context("tuning")?;
    ws.write_json(TUNE_REPORT, &report, &[(FEATURES, feats.as_slice())])?;
    let best = &report.entries[report.best_index];
    Ok(format!(
        "tune: {} grid points, best ROC-AUC {:.4} (learning_rate {}, max_depth {}, num_rounds {})",
        report.entries.len(),
        best.mean_roc_auc,
        best.config.learning_rate,
        best.config.max_depth,
        best.config.num_rounds
    ))
}

#[derive(Debug, Serialize)]
struct EvaluateOutput {
    protocol: botwatch_core::evaluate::EvalReport,
    generalization: Option<GeneralizationReport>,
}

pub fn evaluate_cmd(s: &Settings, ws: &Workspace) -> Result<String> {
    let (m, feats) = load_matrix(ws)?;
    let data = m.to_dataset();
    let pipeline = BoostPipeline {
        booster: booster_config(s),
        resample: resample_config(s),
        spec: m.spec.clone(),
    };
    let protocol = ProtocolConfig {
        seed: s.config.stage_seed("protocol"),
        ..s.config.protocol.clone()
    };
    let report = evaluate_protocol(&data, &protocol, &pipeline).context("evaluating")?;
    let mut inputs: Vec<(&str, Vec<u8>)> = vec![(FEATURES, feats)];

    let generalization = match s.boundary {
        Some(boundary) => {
            let labels_raw = ws.require(LABELS)?;
            let (view, corpus) = load_view(ws)?;
            let (left, right) = view.split_by_window(boundary).map_err(invalid)?;
            let mut fit = s.config.features.clone();
            fit.embedding.seed = s.config.stage_seed("embedding");
            let cfg = GeneralizationConfig {
                train_fraction: s.config.window.train_fraction,
                threshold: protocol.threshold,
                booster: booster_config(s),
                resample: resample_config(s),
                seed: s.config.stage_seed("generalization"),
            };
            let g = temporal_generalization(&left, &right, &label_map(&labels_raw)?, &StandardPipeline { config: fit }, &cfg)
                .context("temporal generalization")?;
            inputs.push((CORPUS, corpus));
            inputs.push((LABELS, labels_raw));
            Some(g)
        }
        None => None,
    };
    let out = EvaluateOutput {
        protocol: report,
        generalization,
    };
    let refs: Vec<(&str, &[u8])> = inputs.iter().map(|(n, b)| (*n, b.as_slice())).collect();
    ws.write_json(EVAL_REPORT, &out, &refs)?;
    let t = &out.protocol.test;
    let mut line = format!(
        "evaluate: hold-out F1 {:.4}, PR-AUC {:.4}, ROC-AUC {:.4} over {} repetitions",
        t.mean.f1, t.mean.pr_auc, t.mean.roc_auc, protocol.repetitions
    );
    if let Some(g) = &out.generalization {
        line += &format!(
            "; cross-window F1 {:.4}, ROC-AUC {:.4}",
            g.cross_window.f1, g.cross_window.roc_auc
        );
    }
    Ok(line)
}

#[derive(Debug, Serialize)]
struct ExplainSummary {
    instances: usize,
    background: usize,
    base_value: f64,
    max_local_accuracy_residual: f64,
    summary: botwatch_core::shapley::SummaryData,
}

pub fn explain_cmd(s: &Settings, ws: &Workspace) -> Result<String> {
    let model_raw = ws.require_text(MODEL)?;
    let (m, feats) = load_matrix(ws)?;
    let model = TreeEnsemble::from_json(&model_raw).context("reading the model")?;
    let labeled: Vec<usize> = (0..m.n_rows()).filter(|&i| m.labels[i].is_some()).collect();
    if labeled.is_empty() {
        return Err(invalid("explain: the feature matrix has no labeled rows"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(s.config.stage_seed("explain"));
    let n_bg = s.config.explain.background_size.min(labeled.len());
    let mut picks = sample(&mut rng, labeled.len(), n_bg).into_vec();
    picks.sort_unstable();
    let background: Vec<Vec<f64>> = picks.iter().map(|&p| m.row(labeled[p]).to_vec()).collect();
    let instances: Vec<(String, Vec<f64>)> = labeled.iter().map(|&i| (m.user_ids[i].clone(), m.row(i).to_vec())).collect();
    let explanations = explain_batch(&model, &instances, &background).context("computing Shapley values")?;
    let row_of: BTreeMap<&str, usize> = m.user_ids.iter().enumerate().map(|(i, u)| (u.as_str(), i)).collect();
    let values: Vec<Vec<f64>> = explanations.iter().map(|e| m.row(row_of[e.user_id.as_str()]).to_vec()).collect();
    let summary = summarize(&explanations, &values, m.spec.names(), s.config.explain.top_k)?;

    let mut csv = String::from("user_id,base_value,margin");
    for n in m.spec.names() {
        csv.push(',');
        csv.push_str(n);
    }
    csv.push('\n');
    for e in &explanations {
        csv.push_str(&format!("{},{},{}", e.user_id, e.base_value, e.margin));
        for c in &e.contributions {
            csv.push_str(&format!(",{c}"));
        }
        csv.push('\n');
    }
    let inputs = [(MODEL, model_raw.as_bytes()), (FEATURES, feats.as_slice())];
    ws.write(SHAP_VALUES, csv.as_bytes(), &inputs)?;
    let out = ExplainSummary {
        instances: explanations.len(),
        background: background.len(),
        base_value: explanations[0].base_value,
        max_local_accuracy_residual: explanations.iter().map(|e| e.residual().abs()).fold(0.0, f64::max),
        summary,
    };
    ws.write_json(EXPLAIN_REPORT, &out, &inputs)?;
    let top: Vec<&str> = out.summary.features.iter().take(3).map(|f| f.feature.as_str()).collect();
    Ok(format!(
        "explain: {} instances against {} background rows; top features {}",
        out.instances,
        out.background,
        top.join(", ")
    ))
}

#[derive(Debug, Serialize)]
struct ScheduleOutput {
    request: PlanRequest,
    plan: QuotaPlan,
}

fn days(n: u64) -> String {
    format!("{n} day{}", if n == 1 { "" } else { "s" })
}

pub fn schedule_cmd(s: &Settings, ws: &Workspace) -> Result<String> {
    let sc = &s.config.schedule;
    let mut inputs: Vec<(&str, Vec<u8>)> = Vec::new();
    let n_users = match sc.n_users {
        Some(n) => n,
        None => {
            let (view, bytes) = load_view(ws)?;
            inputs.push((CORPUS, bytes));
            view.n_accounts() as u64
        }
    };
    let survivors = match sc.survivors {
        Some(c) => Survivors::Count(c),
        None if ws.exists(FUNNEL) => {
            let bytes = ws.require(FUNNEL)?;
            let funnel: FunnelReport = serde_json::from_slice(&bytes).context("reading the funnel report")?;
            inputs.push((FUNNEL, bytes));
            Survivors::Count(funnel.forwarded as u64)
        }
        None => Survivors::Ratio(1.0),
    };
    let request = PlanRequest {
        n_users,
        quota_a: sc.quota_a,
        quota_b: sc.quota_b,
        survivors,
    };
    let plan = plan_labeling(&request).map_err(invalid)?;
    let refs: Vec<(&str, &[u8])> = inputs.iter().map(|(n, b)| (*n, b.as_slice())).collect();
    let line = format!(
        "schedule-labels: scorer A first {}, scorer B first {}; recommended {}",
        days(plan.orderings[0].total_days),
        days(plan.orderings[1].total_days),
        if plan.recommended == 0 { "scorer A first" } else { "scorer B first" }
    );
    ws.write_json(SCHEDULE, &ScheduleOutput { request, plan }, &refs)?;
    Ok(line)
}

fn optional_json(ws: &Workspace, artifact: &'static str, inputs: &mut Vec<(&'static str, Vec<u8>)>) -> Result<Option<Value>> {
    if !ws.exists(artifact) {
        return Ok(None);
    }
    let bytes = ws.require(artifact)?;
    let v = serde_json::from_slice(&bytes).with_context(|| format!("parsing {artifact}"))?;
    inputs.push((artifact, bytes));
    Ok(Some(v))
}

#[derive(Debug, Serialize)]
struct MetricLine {
    metric: &'static str,
    mean: f64,
    std: f64,
}

#[derive(Debug, Serialize)]
struct Report {
    features: Vec<CategoryCount>,
    total_features: usize,
    users: usize,
    labeled: usize,
    funnel: Option<Value>,
    holdout: Option<Vec<MetricLine>>,
    cross_validation: Option<Vec<MetricLine>>,
    generalization: Option<Value>,
    best_grid_point: Option<Value>,
    top_features: Option<Vec<Value>>,
    schedule: Option<Value>,
}

const METRICS: [&str; 5] = ["f1", "precision", "recall", "pr_auc", "roc_auc"];

fn metric_lines(summary: &Value) -> Option<Vec<MetricLine>> {
    METRICS
        .iter()
        .map(|&k| {
            Some(MetricLine {
                metric: k,
                mean: summary["mean"][k].as_f64()?,
                std: summary["std"][k].as_f64()?,
            })
        })
        .collect()
}

fn render(r: &Report) -> String {
    let mut t = String::new();
    t += "Feature categories\n";
    for c in &r.features {
        t += &format!("  {:<10}{:>5}\n", c.category, c.count);
    }
    t += &format!("  {:<10}{:>5}\n", "total", r.total_features);
    t += &format!("Users: {} ({} labeled)\n", r.users, r.labeled);
    if let Some(f) = &r.funnel {
        t += "Label funnel\n";
        for k in ["input", "forwarded", "agreed_bot", "agreed_normal", "suspended", "final_bot", "final_normal", "unlabeled"] {
            t += &format!("  {:<14}{:>8}\n", k, f[k]);
        }
    }
    for (title, block) in [("Hold-out metrics", &r.holdout), ("Cross-validation metrics", &r.cross_validation)] {
        if let Some(lines) = block {
            t += &format!("{title} (mean, std)\n");
            for l in lines {
                t += &format!("  {:<10}{:.4}  {:.4}\n", l.metric, l.mean, l.std);
            }
        }
    }
    if let Some(g) = &r.generalization {
        t += "Temporal generalization\n";
        for side in ["in_window", "cross_window"] {
            t += &format!(
                "  {:<13} F1 {:.4}  PR-AUC {:.4}  ROC-AUC {:.4}\n",
                side,
                g[side]["f1"].as_f64().unwrap_or(f64::NAN),
                g[side]["pr_auc"].as_f64().unwrap_or(f64::NAN),
                g[side]["roc_auc"].as_f64().unwrap_or(f64::NAN)
            );
        }
    }
    if let Some(b) = &r.best_grid_point {
        t += &format!("Best grid point: {b}\n");
    }
    if let Some(top) = &r.top_features {
        t += "Top features by mean |SHAP|\n";
        for f in top {
            t += &format!(
                "  {:>2}. {:<32}{:.5}\n",
                f["rank"],
                f["feature"].as_str().unwrap_or("?"),
                f["mean_abs_shap"].as_f64().unwrap_or(f64::NAN)
            );
        }
    }
    if let Some(s) = &r.schedule {
        t += "Labeling schedule (days)\n";
        t += &format!("  scorer A first {:>6}\n", s["plan"]["orderings"][0]["total_days"]);
        t += &format!("  scorer B first {:>6}\n", s["plan"]["orderings"][1]["total_days"]);
    }
    t
}

pub fn report_cmd(_s: &Settings, ws: &Workspace) -> Result<String> {
    let (m, feats) = load_matrix(ws)?;
    let mut inputs: Vec<(&'static str, Vec<u8>)> = vec![(FEATURES, feats)];
    let funnel = optional_json(ws, FUNNEL, &mut inputs)?;
    let tune = optional_json(ws, TUNE_REPORT, &mut inputs)?;
    let eval = optional_json(ws, EVAL_REPORT, &mut inputs)?;
    let explain = optional_json(ws, EXPLAIN_REPORT, &mut inputs)?;
    let schedule = optional_json(ws, SCHEDULE, &mut inputs)?;

    let report = Report {
        features: category_counts(&m),
        total_features: m.n_cols(),
        users: m.n_rows(),
        labeled: m.labels.iter().filter(|l| l.is_some()).count(),
        funnel,
        holdout: eval.as_ref().and_then(|e| metric_lines(&e["protocol"]["test"])),
        cross_validation: eval.as_ref().and_then(|e| metric_lines(&e["protocol"]["cv"])),
        generalization: eval.as_ref().map(|e| e["generalization"].clone()).filter(|g| !g.is_null()),
        best_grid_point: tune.map(|t| t["best"].clone()),
        top_features: explain.and_then(|e| {
            e["summary"]["features"].as_array().map(|fs| {
                fs.iter()
                    .filter(|f| f["mean_abs_shap"].as_f64().is_some_and(|v| v > 0.0))
                    .map(|f| serde_json::json!({"rank": f["rank"], "feature": f["feature"], "mean_abs_shap": f["mean_abs_shap"]}))
                    .collect()
            })
        }),
        schedule,
    };
    let refs: Vec<(&str, &[u8])> = inputs.iter().map(|(n, b)| (*n, b.as_slice())).collect();
    ws.write_json(REPORT_JSON, &report, &refs)?;
    let text = render(&report);
    ws.write(REPORT_TEXT, text.as_bytes(), &refs)?;
    Ok(text.trim_end().to_string())
}
