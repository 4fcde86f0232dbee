//! Implementations of the CLI subcommands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use storyloom::eval::{
    arena_score, bootstrap_scores, brier_loss, cohen_kappa, corpus_metrics, judge_pair,
    pairwise_probability, ArenaSection, BootstrapStats, Dimension, EvalReport, LogBase,
    PairOutcome, ProbabilityMode, Round, VerbLexicon, Weighting,
};
use storyloom::gateway::{backend::write_replay_jsonl, Gateway, RetryPolicy, TemplateStore};
use storyloom::pipeline::{run_pipeline, PipelineOutput};
use storyloom::review::review_type_stats;
use storyloom::{GraphExportFormat, NekgGraph, Storyline, StoryProject};

use crate::config::{BackendChoice, GenerateSettings};

fn build_gateway(
    templates_dir: Option<&Path>,
    backend: &BackendChoice,
    seed: u64,
    with_transcript: bool,
) -> Result<Gateway> {
    let templates = match templates_dir {
        Some(dir) => TemplateStore::with_dir(dir)
            .with_context(|| format!("cannot load templates from {}", dir.display()))?,
        None => TemplateStore::builtin(),
    };
    let retry = match backend {
        // a script never yields transient failures; skip the backoff sleeps
        BackendChoice::Scripted(_) => RetryPolicy::immediate(),
        BackendChoice::Http { .. } => RetryPolicy {
            jitter_seed: seed,
            ..RetryPolicy::default()
        },
    };
    let mut gateway = Gateway::new(templates).with_retry(retry);
    if with_transcript {
        gateway = gateway.with_transcript();
    }
    Ok(gateway)
}

fn write_run_outputs(
    output: &PipelineOutput,
    out: &Path,
    log_path: Option<&Path>,
) -> Result<PathBuf> {
    output
        .project
        .save(out)
        .with_context(|| format!("cannot write project file {}", out.display()))?;
    let log_path = log_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out.with_extension("log.jsonl"));
    let mut buf = Vec::new();
    output.log.write_jsonl(&mut buf)?;
    std::fs::write(&log_path, buf)
        .with_context(|| format!("cannot write run log {}", log_path.display()))?;
    Ok(log_path)
}

#[allow(clippy::too_many_arguments)]
pub fn generate(
    settings: GenerateSettings,
    user_input: &str,
    out: &Path,
    log_path: Option<&Path>,
    graph_out: Option<&Path>,
    graph_format: GraphExportFormat,
    transcript: Option<&Path>,
) -> Result<()> {
    let backend = settings.backend.build()?;
    let gateway = build_gateway(
        settings.templates_dir.as_deref(),
        &settings.backend,
        settings.pipeline.rng_seed,
        transcript.is_some(),
    )?;
    match run_pipeline(user_input, settings.pipeline, &gateway, backend.as_ref()) {
        Ok(output) => {
            let log_path = write_run_outputs(&output, out, log_path)?;
            if let Some(graph_out) = graph_out {
                std::fs::write(graph_out, output.graph.export(graph_format))
                    .with_context(|| format!("cannot write {}", graph_out.display()))?;
            }
            if let Some(path) = transcript {
                let mut buf = Vec::new();
                write_replay_jsonl(&gateway.take_transcript(), &mut buf)?;
                std::fs::write(path, buf)?;
            }
            println!(
                "generated {} chapters, {} nodes, {} LLM calls -> {} (log: {})",
                output.project.chapters.len(),
                output.storyline.len(),
                output.log.llm_call_count(),
                out.display(),
                log_path.display(),
            );
            Ok(())
        }
        Err(abort) => {
            // persist what exists for inspection, then fail
            let _ = write_run_outputs(&abort.partial, out, log_path);
            Err(anyhow!("{} (partial project saved to {})", abort.error, out.display()))
        }
    }
}

pub fn inspect(project_path: &Path, export_storyline: Option<&Path>) -> Result<()> {
    let project = StoryProject::load(project_path)
        .with_context(|| format!("cannot load project {}", project_path.display()))?;
    println!("project: {}", project_path.display());
    println!("input:   {}", clip(&project.user_input, 76));
    println!("premise: {}", clip(&project.premise, 76));
    println!("backend: {}", project.config_snapshot.backend);
    println!(
        "config:  chapters={} max_cpn={} nekg={} review={} seed={}",
        project.config_snapshot.n_chapters,
        project.config_snapshot.max_cpn_per_chapter,
        project.config_snapshot.use_nekg,
        project.config_snapshot.use_review,
        project.config_snapshot.rng_seed,
    );
    for (i, plan) in project.chapters.iter().enumerate() {
        let nodes = project.chapter_nodes.get(i).map(Vec::len).unwrap_or(0);
        let kinds: String = project
            .chapter_nodes
            .get(i)
            .map(|ns| {
                ns.iter()
                    .map(|cn| cn.kind.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .unwrap_or_default();
        let words = project
            .text_blocks
            .get(i)
            .and_then(|b| b.as_ref())
            .map(|b| b.split_whitespace().count());
        println!(
            "chapter {i}: {:?} — {nodes} nodes [{kinds}]{}",
            plan.title,
            match words {
                Some(w) => format!(", {w} words"),
                None => ", no text yet".to_string(),
            }
        );
    }
    let stats = review_type_stats(&project.review_log);
    let modified: Vec<String> = stats
        .iter()
        .filter(|(_, p)| **p > 0.0)
        .map(|(t, p)| format!("{t} {:.0}%", p * 100.0))
        .collect();
    println!(
        "reviews: {} records{}",
        project.review_log.len(),
        if modified.is_empty() {
            String::new()
        } else {
            format!(" (modified: {})", modified.join(", "))
        }
    );
    if let Some(path) = export_storyline {
        let storyline = Storyline::from_entries(project.storyline.clone());
        let mut buf = Vec::new();
        storyline.write_jsonl(&mut buf)?;
        std::fs::write(path, buf)
            .with_context(|| format!("cannot write storyline {}", path.display()))?;
        println!("storyline: {} entries -> {}", storyline.len(), path.display());
    }
    Ok(())
}

/// Rebuilds the entity graph from a project's storyline and exports it.
pub fn export_graph(project_path: &Path, format: GraphExportFormat, out: &Path) -> Result<()> {
    let project = StoryProject::load(project_path)
        .with_context(|| format!("cannot load project {}", project_path.display()))?;
    let mut graph = NekgGraph::new();
    for entry in &project.storyline {
        if project.config_snapshot.split_conjunctions {
            graph.record_event_split(entry)?;
        } else {
            graph.record_event(entry)?;
        }
    }
    std::fs::write(out, graph.export(format))
        .with_context(|| format!("cannot write {}", out.display()))?;
    println!(
        "exported {} vertices, {} edges -> {}",
        graph.vertex_count(),
        graph.edge_count(),
        out.display()
    );
    Ok(())
}

fn read_corpus(dir: &Path) -> Result<Vec<(String, String)>> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read corpus directory {}", dir.display()))?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    entries.sort();
    let mut texts = Vec::with_capacity(entries.len());
    for path in entries {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("?")
            .to_string();
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        texts.push((name, text));
    }
    Ok(texts)
}

pub fn metrics(
    corpus: &Path,
    ns: &[usize],
    lexicon_path: Option<&Path>,
    base: LogBase,
    out: Option<&Path>,
) -> Result<()> {
    let texts = read_corpus(corpus)?;
    let lexicon = match lexicon_path {
        Some(path) => VerbLexicon::from_file(path)
            .with_context(|| format!("cannot read lexicon {}", path.display()))?,
        None => VerbLexicon::builtin(),
    };
    let (rows, corpus_section) = corpus_metrics(&texts, ns, &lexicon, base)?;
    let mut report = EvalReport::new(BTreeMap::from([
        ("corpus".to_string(), corpus.display().to_string()),
        (
            "n_list".to_string(),
            ns.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
        ),
        (
            "lexicon".to_string(),
            lexicon_path
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "builtin".to_string()),
        ),
        (
            "log_base".to_string(),
            match base {
                LogBase::Natural => "natural".to_string(),
                LogBase::Base10 => "log10".to_string(),
            },
        ),
    ]));
    report.per_text = rows;
    report.corpus = Some(corpus_section);
    print!("{}", report.render_table());
    if let Some(out) = out {
        std::fs::write(out, report.to_json_string())
            .with_context(|| format!("cannot write report {}", out.display()))?;
    }
    Ok(())
}

fn file_stems(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut stems = BTreeMap::new();
    for entry in std::fs::read_dir(dir)
        .with_context(|| format!("cannot read story directory {}", dir.display()))?
    {
        let path = entry?.path();
        if !path.is_file() {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            stems.insert(stem.to_string(), path.clone());
        }
    }
    Ok(stems)
}

#[allow(clippy::too_many_arguments)]
pub fn arena(
    system_a: &Path,
    system_b: &Path,
    prompts_allowlist: Option<&Path>,
    dimensions: &[Dimension],
    backend_choice: &BackendChoice,
    weighting: Weighting,
    bootstrap_b: usize,
    seed: u64,
    ground_truth: Option<&Path>,
    out: &Path,
    transcripts: Option<&Path>,
) -> Result<()> {
    let stems_a = file_stems(system_a)?;
    let stems_b = file_stems(system_b)?;
    let mut ids: Vec<String> = stems_a.keys().cloned().collect();
    if let Some(path) = prompts_allowlist {
        let allow: Vec<String> = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read prompt list {}", path.display()))?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        ids.retain(|id| allow.contains(id));
    }
    let missing: Vec<String> = ids
        .iter()
        .filter(|id| !stems_b.contains_key(*id))
        .cloned()
        .chain(
            stems_b
                .keys()
                .filter(|id| !stems_a.contains_key(*id) && prompts_allowlist.is_none())
                .cloned(),
        )
        .collect();
    if !missing.is_empty() {
        bail!("unmatched prompt files: {}", missing.join(", "));
    }
    if ids.is_empty() {
        bail!("no story pairs found under {} and {}", system_a.display(), system_b.display());
    }

    let backend = backend_choice.build()?;
    let gateway = build_gateway(None, backend_choice, seed, true)?;

    let mut outcomes: Vec<PairOutcome> = Vec::new();
    for id in &ids {
        let story_a = std::fs::read_to_string(&stems_a[id])?;
        let story_b = std::fs::read_to_string(&stems_b[id])?;
        for dimension in dimensions {
            let original = judge_pair(&gateway, backend.as_ref(), &story_a, &story_b, *dimension)?;
            outcomes.push(PairOutcome {
                prompt_id: id.clone(),
                round: Round::Original,
                verdict: original,
                dimension: dimension.name().to_string(),
            });
            let swapped = judge_pair(&gateway, backend.as_ref(), &story_b, &story_a, *dimension)?;
            outcomes.push(PairOutcome {
                prompt_id: id.clone(),
                round: Round::Swapped,
                verdict: swapped,
                dimension: dimension.name().to_string(),
            });
        }
    }

    let truth: BTreeMap<String, bool> = match ground_truth {
        None => BTreeMap::new(),
        Some(path) => {
            let raw: BTreeMap<String, serde_json::Value> = serde_json::from_str(
                &std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read ground truth {}", path.display()))?,
            )?;
            raw.into_iter()
                .map(|(k, v)| {
                    let below = match v {
                        serde_json::Value::Bool(b) => b,
                        serde_json::Value::Number(n) => n.as_f64() == Some(1.0),
                        other => bail!("ground truth for {k} must be 0/1 or bool, got {other}"),
                    };
                    Ok((k, below))
                })
                .collect::<Result<_>>()?
        }
    };

    let mut report = EvalReport::new(BTreeMap::from([
        ("system_a".to_string(), system_a.display().to_string()),
        ("system_b".to_string(), system_b.display().to_string()),
        ("bootstrap_b".to_string(), bootstrap_b.to_string()),
        ("seed".to_string(), seed.to_string()),
        (
            "weighting".to_string(),
            match weighting {
                Weighting::Uniform => "uniform".to_string(),
                Weighting::Amplified => "amplified".to_string(),
            },
        ),
    ]));
    for dimension in dimensions {
        let dim_outcomes: Vec<PairOutcome> = outcomes
            .iter()
            .filter(|o| o.dimension == dimension.name())
            .cloned()
            .collect();
        let summary = storyloom::eval::swap_aggregate(&dim_outcomes);
        let score = arena_score(&dim_outcomes, weighting)?;
        // bootstrap over per-prompt scores, anchored against the 50-point baseline
        let per_prompt: Vec<f64> = ids
            .iter()
            .map(|id| {
                let prompt_outcomes: Vec<PairOutcome> = dim_outcomes
                    .iter()
                    .filter(|o| &o.prompt_id == id)
                    .cloned()
                    .collect();
                arena_score(&prompt_outcomes, weighting)
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let stats = bootstrap_scores(&per_prompt, bootstrap_b, seed)?;
        let truth_below = truth.get(dimension.name()).copied();
        let (p_below, brier) = match truth_below {
            None => (None, None),
            Some(below) => {
                let baseline = BootstrapStats {
                    mean: 50.0,
                    variance: 0.0,
                    samples: vec![50.0; stats.samples.len()],
                    b: stats.b,
                    seed,
                };
                let p = pairwise_probability(&stats, &baseline, ProbabilityMode::Normal)
                    .or_else(|_| {
                        pairwise_probability(&stats, &baseline, ProbabilityMode::Empirical)
                    })?;
                (Some(p), Some(brier_loss(&[p], &[below])?))
            }
        };
        report.arena.insert(
            dimension.name().to_string(),
            ArenaSection {
                summary,
                weighting,
                score,
                bootstrap: Some(stats),
                p_below_baseline: p_below,
                ground_truth_below: truth_below,
                brier,
            },
        );
    }
    report.verdicts = outcomes;

    let transcripts_path = transcripts
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out.with_extension("transcripts.jsonl"));
    let mut buf = Vec::new();
    write_replay_jsonl(&gateway.take_transcript(), &mut buf)?;
    std::fs::write(&transcripts_path, buf)
        .with_context(|| format!("cannot write transcripts {}", transcripts_path.display()))?;

    print!("{}", report.render_table());
    std::fs::write(out, report.to_json_string())
        .with_context(|| format!("cannot write report {}", out.display()))?;
    println!("report -> {} (transcripts: {})", out.display(), transcripts_path.display());
    Ok(())
}

fn read_labels(path: &Path) -> Result<Vec<String>> {
    Ok(std::fs::read_to_string(path)
        .with_context(|| format!("cannot read label file {}", path.display()))?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

pub fn kappa(labels_a: &Path, labels_b: &Path, out: Option<&Path>) -> Result<()> {
    let a = read_labels(labels_a)?;
    let b = read_labels(labels_b)?;
    let value = cohen_kappa(&a, &b)?;
    println!("cohen_kappa: {value:.4}");
    if let Some(out) = out {
        let mut report = EvalReport::new(BTreeMap::from([
            ("labels_a".to_string(), labels_a.display().to_string()),
            ("labels_b".to_string(), labels_b.display().to_string()),
        ]));
        report.kappa = Some(value);
        std::fs::write(out, report.to_json_string())?;
    }
    Ok(())
}

pub fn stats(corpus: &Path, out: Option<&Path>) -> Result<()> {
    let texts = read_corpus(corpus)?;
    let counts: Vec<usize> = texts
        .iter()
        .map(|(_, text)| storyloom::eval::tokenize(text).word_count)
        .collect();
    let stats = storyloom::eval::corpus_stats(&counts)?;
    println!(
        "texts: {}  avg_word_count: {}",
        counts.len(),
        format_float(stats.avg_word_count)
    );
    if let Some(out) = out {
        let mut report = EvalReport::new(BTreeMap::from([(
            "corpus".to_string(),
            corpus.display().to_string(),
        )]));
        report.corpus = Some(storyloom::eval::CorpusSection {
            texts: counts.len(),
            avg_word_count: stats.avg_word_count,
            mean_distinctl: BTreeMap::new(),
            mean_diverse_verbs: 0.0,
        });
        std::fs::write(out, report.to_json_string())?;
    }
    Ok(())
}

fn format_float(x: f64) -> String {
    if x == x.trunc() {
        format!("{x:.1}")
    } else {
        format!("{x}")
    }
}

fn clip(s: &str, max: usize) -> String {
    if s.chars().count() <= max {
        s.to_string()
    } else {
        s.chars().take(max - 1).collect::<String>() + "…"
    }
}
