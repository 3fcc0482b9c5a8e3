mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Config;
use output::OutDir;

#[derive(Parser)]
#[command(name = "cookiefeat", version, about = "Cookie Theft transcript features and screening experiments")]
struct Cli {
    /// Experiment config file (key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Random forest seed (overrides the config `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fail instead of imputing missing parse trees or ASR transcripts.
    #[arg(long, global = true)]
    strict: bool,
    /// Directory for every output file.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the TF-IDF model and imputation means on a training manifest.
    Fit {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Compute the 15-feature table for a manifest.
    Featurize(commands::FeaturizeArgs),
    /// Train a random forest on a feature table.
    Train {
        #[arg(long)]
        features: PathBuf,
    },
    /// Score a forest, or imported predictions, on a labeled feature table.
    Eval(commands::EvalArgs),
    /// One-way ANOVA F value per feature.
    Anova {
        #[arg(long)]
        features: PathBuf,
    },
    /// Normalized Gini importance of a trained forest.
    Importance {
        #[arg(long)]
        model: PathBuf,
    },
    /// Accuracy as features are added in F-value order.
    Ablate {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
    /// Stratified cross-validated grid search over forest settings.
    GridSearch {
        #[arg(long)]
        features: PathBuf,
    },
    /// Ask the model for keywords of one sub-picture and aggregate them.
    GenKeywords(commands::GenKeywordsArgs),
    /// Ask the model for reference descriptions of the whole picture.
    GenRefs(commands::GenRefsArgs),
    /// Apply accept/reject decisions to aggregated keyword candidates.
    Curate(commands::CurateArgs),
}


fn resolve_config(cli: &Cli) -> anyhow::Result<Config> {
    let mut config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    for pair in &cli.set {
        config.set_pair(pair)?;
    }
    if let Some(seed) = cli.seed {
        config.set("seed", &seed.to_string())?;
    }
    if cli.strict {
        config.set("strict", "true")?;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = resolve_config(&cli)?;
    let out = OutDir::create(&cli.out_dir)?;
    out.write("resolved_config.txt", config.snapshot())?;
    match cli.command {
        Command::Fit { manifest } => commands::fit(&config, &out, &manifest),
        Command::Featurize(args) => commands::featurize(&config, &out, &args),
        Command::Train { features } => commands::train(&config, &out, &features),
        Command::Eval(args) => commands::eval(&out, &args),
        Command::Anova { features } => commands::anova(&out, &features),
        Command::Importance { model } => commands::importance(&out, &model),
        Command::Ablate { train, test } => commands::ablate(&config, &out, &train, &test),
        Command::GridSearch { features } => commands::grid_search(&config, &out, &features),
        Command::GenKeywords(args) => commands::gen_keywords(&config, &out, &args),
        Command::GenRefs(args) => commands::gen_refs(&config, &out, &args),
        Command::Curate(args) => commands::curate(&out, &args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
