use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use cookiefeat::ingest::{load_manifest, ChatOptions};
use cookiefeat::llmgen::{
    aggregate_keywords, generate, read_candidates, references_text, write_candidates, GenerationKind, GenerationRun,
    HttpTransport,
};
use cookiefeat::model::{
    ablation_sweep, anova_f, grid_search as run_grid, rank_by_f, Dataset, EvalReport, ForestModel,
};
use cookiefeat::pipeline::{self, load_subjects};
use cookiefeat::refscore::ReferenceSet;
use cookiefeat::taskfeat::{read_features_csv, write_features_csv, FeatureContext, FeatureVector, Imputation, KeywordFile, Topic};
use cookiefeat::tfidf::TfIdfModel;
use cookiefeat::Label;

use crate::config::Config;
use crate::output::{csv_text, OutDir};

fn chat_options(config: &Config) -> Result<ChatOptions> {
    Ok(ChatOptions { speakers: config.speakers()? })
}

fn read_rows(path: &Path) -> Result<Vec<FeatureVector>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(read_features_csv(&text, &path.display().to_string())?)
}

fn read_dataset(path: &Path) -> Result<Dataset> {
    Dataset::from_rows(&read_rows(path)?).with_context(|| format!("{}", path.display()))
}

fn fmt_f(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.6}")
    }
}

fn fmt_opt(v: Option<usize>) -> String {
    v.map_or("none".into(), |v| v.to_string())
}

pub fn fit(config: &Config, out: &OutDir, manifest: &Path) -> Result<()> {
    let entries = load_manifest(manifest)?;
    let subjects = load_subjects(&entries, &chat_options(config)?)?;
    let model = pipeline::fit_tfidf(&subjects, config.terms()?)?;
    let imputation = pipeline::fit_imputation(&subjects, &config.features()?);
    let model_path = out.write("tfidf_model.json", model.to_json())?;
    out.write("imputation.json", serde_json::to_string_pretty(&imputation)? + "\n")?;
    println!("vocabulary: {} terms from {} documents", model.vocab.len(), model.n_train);
    println!("top30: {}", model.top30.join(", "));
    println!("wrote {}", model_path.display());
    Ok(())
}

#[derive(Args)]
pub struct FeaturizeArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// TF-IDF model from `fit`.
    #[arg(long)]
    model: PathBuf,
    /// Imputation means; defaults to imputation.json beside the model.
    #[arg(long)]
    imputation: Option<PathBuf>,
    #[arg(long, default_value = "features.csv")]
    output: String,
}

pub fn featurize(config: &Config, out: &OutDir, args: &FeaturizeArgs) -> Result<()> {
    let tfidf = TfIdfModel::load(&args.model)?;
    let references = match config.path("references") {
        Some(p) => ReferenceSet::load(&p)?,
        None => {
            eprintln!("note: using the bundled example references; set `references` for real experiments");
            ReferenceSet::bundled()
        }
    };
    let keywords = match config.path("keywords") {
        Some(p) => KeywordFile::load(&p)?,
        None => KeywordFile::bundled(),
    };
    let topics = keywords.topic_sets(&config.topic_mapping()?)?;
    let options = config.features()?;

    let imputation_path = args
        .imputation
        .clone()
        .or_else(|| Some(args.model.parent()?.join("imputation.json")).filter(|p| p.exists()));
    let imputation: Option<Imputation> = match &imputation_path {
        Some(p) => Some(
            serde_json::from_str(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
                .with_context(|| format!("{}", p.display()))?,
        ),
        None => None,
    };

    let entries = load_manifest(&args.manifest)?;
    let subjects = load_subjects(&entries, &chat_options(config)?)?;
    let context = FeatureContext { tfidf: &tfidf, references: &references, topics: &topics, options: &options };
    let result = pipeline::featurize(&subjects, &context, imputation, config.strict()?)?;

    let mut csv = Vec::new();
    write_features_csv(&result.rows, &mut csv)?;
    let path = out.write(&args.output, csv)?;
    let mut notes = String::new();
    match &imputation_path {
        Some(p) => writeln!(notes, "# imputation means from {}", p.display())?,
        None => writeln!(notes, "# imputation means from this manifest")?,
    }
    for n in &result.notes {
        writeln!(notes, "{n}")?;
    }
    out.write(&format!("{}.notes.txt", args.output.trim_end_matches(".csv")), notes)?;
    println!("{} rows, {} imputed values; wrote {}", result.rows.len(), result.notes.len(), path.display());
    Ok(())
}

pub fn train(config: &Config, out: &OutDir, features: &Path) -> Result<()> {
    let data = read_dataset(features)?;
    let model = ForestModel::train(&data, &config.forest()?)?;
    let path = out.write("forest.json", model.to_json())?;
    println!("{} trees on {} subjects; wrote {}", model.trees.len(), data.len(), path.display());
    Ok(())
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    features: PathBuf,
    /// Forest from `train`.
    #[arg(long, required_unless_present = "predictions", conflicts_with = "predictions")]
    model: Option<PathBuf>,
    /// External predictions as `subject_id,prediction` (HC or AD).
    #[arg(long)]
    predictions: Option<PathBuf>,
}

fn read_predictions(path: &Path, data: &Dataset) -> Result<Vec<Label>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != ["subject_id", "prediction"] {
        bail!("{}: expected header `subject_id,prediction`, found `{}`", path.display(), header.join(","));
    }
    let mut by_id = std::collections::HashMap::new();
    for record in reader.records() {
        let record = record?;
        let label: Label = record[1].parse()?;
        if by_id.insert(record[0].to_string(), label).is_some() {
            bail!("{}: subject {} predicted twice", path.display(), &record[0]);
        }
    }
    data.subject_ids
        .iter()
        .map(|id| by_id.get(id).copied().with_context(|| format!("{}: no prediction for {id}", path.display())))
        .collect()
}

pub fn eval(out: &OutDir, args: &EvalArgs) -> Result<()> {
    let data = read_dataset(&args.features)?;
    let predicted = match (&args.model, &args.predictions) {
        (Some(m), _) => {
            let model = ForestModel::load(m)?;
            if model.feature_names != data.feature_names {
                bail!("{} was trained on different feature columns", m.display());
            }
            let preds: Vec<_> = data.x.iter().map(|x| model.predict(x)).collect();
            let rows = data.subject_ids.iter().zip(&data.y).zip(&preds).map(|((id, y), p)| {
                [id.clone(), y.to_string(), p.label.to_string(), format!("{:.6}", p.prob_ad)]
            });
            out.write("predictions.csv", csv_text(&["subject_id", "label", "prediction", "prob_ad"], rows)?)?;
            preds.into_iter().map(|p| p.label).collect()
        }
        (None, Some(p)) => read_predictions(p, &data)?,
        (None, None) => bail!("pass --model or --predictions"),
    };
    let report = EvalReport::from_predictions(&data.y, &predicted);
    let pct = report.percent_row();
    out.write("metrics.csv", csv_text(&["accuracy", "precision", "recall", "f1"], [pct.clone()])?)?;
    let detail = [
        fmt_f(report.accuracy),
        fmt_f(report.precision),
        fmt_f(report.recall),
        fmt_f(report.f1),
        report.true_pos.to_string(),
        report.false_pos.to_string(),
        report.false_neg.to_string(),
        report.true_neg.to_string(),
    ];
    out.write(
        "metrics_detail.csv",
        csv_text(
            &["accuracy", "precision", "recall", "f1", "true_pos", "false_pos", "false_neg", "true_neg"],
            [detail],
        )?,
    )?;
    println!("ACC {} PRE {} REC {} F1 {}", pct[0], pct[1], pct[2], pct[3]);
    Ok(())
}

pub fn anova(out: &OutDir, features: &Path) -> Result<()> {
    let data = read_dataset(features)?;
    let f = anova_f(&data.x, &data.y)?;
    let rows = rank_by_f(&f).into_iter().map(|i| [data.feature_names[i].clone(), fmt_f(f[i])]);
    let path = out.write("anova.csv", csv_text(&["feature", "f_value"], rows)?)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn importance(out: &OutDir, model: &Path) -> Result<()> {
    let model = ForestModel::load(model)?;
    let mut order: Vec<usize> = (0..model.importance.len()).collect();
    order.sort_by(|&a, &b| model.importance[b].total_cmp(&model.importance[a]).then(a.cmp(&b)));
    let rows = order.into_iter().map(|i| [model.feature_names[i].clone(), fmt_f(model.importance[i])]);
    let path = out.write("importance.csv", csv_text(&["feature", "importance"], rows)?)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn ablate(config: &Config, out: &OutDir, train: &Path, test: &Path) -> Result<()> {
    let points = ablation_sweep(&read_dataset(train)?, &read_dataset(test)?, &config.forest()?)?;
    let rows = points
        .iter()
        .map(|p| [p.n_features.to_string(), p.added.clone(), fmt_f(p.f_value), fmt_f(p.accuracy)]);
    let path = out.write("ablation.csv", csv_text(&["n_features", "added_feature", "f_value", "accuracy"], rows)?)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn grid_search(config: &Config, out: &OutDir, features: &Path) -> Result<()> {
    let data = read_dataset(features)?;
    let result = run_grid(&data, &config.grid()?, config.folds()?, &config.forest()?)?;
    let rows = result.scores.iter().map(|(p, acc)| {
        [
            p.n_trees.to_string(),
            fmt_opt(p.max_depth),
            fmt_opt(p.max_features),
            p.min_samples_leaf.to_string(),
            fmt_f(*acc),
        ]
    });
    out.write(
        "grid_search.csv",
        csv_text(&["n_trees", "max_depth", "max_features", "min_samples_leaf", "cv_accuracy"], rows)?,
    )?;
    let b = result.best;
    let best = format!(
        "n_trees = {}\nmax_depth = {}\nmax_features = {}\nmin_samples_leaf = {}\n",
        b.n_trees,
        fmt_opt(b.max_depth),
        fmt_opt(b.max_features),
        b.min_samples_leaf
    );
    out.write("best_params.txt", &best)?;
    println!("best cv accuracy {:.4}\n{best}", result.best_accuracy);
    Ok(())
}

/// Runs a generation with its log streamed into a temp file that is kept
/// under `log_name` whether or not the run succeeds.
fn generate_logged(
    config: &Config,
    out: &OutDir,
    kind: GenerationKind,
    image: Option<&Path>,
    iterations: usize,
    log_name: &str,
) -> Result<GenerationRun> {
    let endpoint = config.endpoint()?;
    let transport = HttpTransport::from_config(&endpoint)?;
    let mut log = out.temp()?;
    let result = generate(kind, image, iterations, &endpoint, &transport, &mut log);
    log.flush()?;
    let path = out.persist(log, log_name)?;
    let run = result?;
    println!(
        "{} of {} requests succeeded; log {}",
        run.responses.len(),
        run.iterations,
        path.display()
    );
    for (i, e) in &run.failures {
        eprintln!("iteration {i} failed: {e}");
    }
    Ok(run)
}

#[derive(Args)]
pub struct GenKeywordsArgs {
    /// Sub-picture image.
    #[arg(long, required_unless_present = "from_log")]
    image: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    iterations: usize,
    /// Re-aggregate an existing run log without network access.
    #[arg(long)]
    from_log: Option<PathBuf>,
    #[arg(long, default_value = "keywords")]
    name: String,
}

pub fn gen_keywords(config: &Config, out: &OutDir, args: &GenKeywordsArgs) -> Result<()> {
    let run = match &args.from_log {
        Some(log) => GenerationRun::load_log(log)?,
        None => generate_logged(
            config,
            out,
            GenerationKind::Keywords,
            args.image.as_deref(),
            args.iterations,
            &format!("{}_run.jsonl", args.name),
        )?,
    };
    let candidates = aggregate_keywords(&run, config.min_frequency()?)?;
    out.write(&format!("{}_candidates.csv", args.name), write_candidates(&candidates)?)?;
    let template = csv_text(&["keyword", "decision"], candidates.iter().map(|c| [c.keyword.clone(), String::new()]))?;
    let path = out.write(&format!("{}_decisions.csv", args.name), template)?;
    println!(
        "{} candidates; fill in accept/reject in {} and run `curate`",
        candidates.len(),
        path.display()
    );
    Ok(())
}

#[derive(Args)]
pub struct GenRefsArgs {
    /// Whole-picture image.
    #[arg(long)]
    image: Option<PathBuf>,
    #[arg(long, default_value_t = 15)]
    iterations: usize,
    #[arg(long)]
    from_log: Option<PathBuf>,
    #[arg(long, default_value = "references.txt")]
    output: String,
}

pub fn gen_refs(config: &Config, out: &OutDir, args: &GenRefsArgs) -> Result<()> {
    let run = match &args.from_log {
        Some(log) => GenerationRun::load_log(log)?,
        None => generate_logged(
            config,
            out,
            GenerationKind::Descriptions,
            args.image.as_deref(),
            args.iterations,
            "descriptions_run.jsonl",
        )?,
    };
    if run.kind != GenerationKind::Descriptions {
        bail!("run log holds keyword responses, not descriptions");
    }
    let path = out.write(&args.output, references_text(&run))?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Clone, Copy, ValueEnum)]
enum TopicArg {
    T1,
    T2,
    T3,
}

#[derive(Args)]
pub struct CurateArgs {
    #[arg(long)]
    candidates: PathBuf,
    /// `keyword,decision` file with accept or reject on every row.
    #[arg(long)]
    decisions: PathBuf,
    /// Id of the keyword set to create or replace.
    #[arg(long)]
    set_id: u32,
    #[arg(long, value_enum)]
    topic: Option<TopicArg>,
    /// Keyword file to add the set to; a new file is started otherwise.
    #[arg(long)]
    keywords: Option<PathBuf>,
    #[arg(long, default_value = "keywords.json")]
    output: String,
}

pub fn curate(out: &OutDir, args: &CurateArgs) -> Result<()> {
    let read = |p: &Path| std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()));
    let candidates = read_candidates(&read(&args.candidates)?, &args.candidates.display().to_string())?;
    let topic = args.topic.map(|t| match t {
        TopicArg::T1 => Topic::T1,
        TopicArg::T2 => Topic::T2,
        TopicArg::T3 => Topic::T3,
    });
    let set = cookiefeat::llmgen::curate(
        &candidates,
        &read(&args.decisions)?,
        &args.decisions.display().to_string(),
        args.set_id,
        topic,
    )?;
    let mut file = match &args.keywords {
        Some(p) => KeywordFile::load(p)?,
        None => KeywordFile { sets: Vec::new() },
    };
    let n = set.words.len();
    file.upsert(set);
    let path = out.write(&args.output, file.to_json() + "\n")?;
    println!("set {} with {n} keywords; wrote {}", args.set_id, path.display());
    Ok(())
}
