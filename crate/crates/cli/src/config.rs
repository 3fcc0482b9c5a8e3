//! `key = value` experiment configuration. Later sources override earlier
//! ones: built-in defaults, the `--config` file, `--set` pairs, then the
//! dedicated global flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cookiefeat::llmgen::{EndpointConfig, DEFAULT_MIN_FREQUENCY};
use cookiefeat::model::{ForestConfig, GridPoint};
use cookiefeat::refscore::{BleuMode, BleuOptions};
use cookiefeat::taskfeat::{FeatureOptions, TopicMapping, DEFAULT_FILLERS};
use cookiefeat::tfidf::TermOptions;

/// Every recognised key with its default value.
const DEFAULTS: &[(&str, &str)] = &[
    ("api_key_env", "OPENAI_API_KEY"),
    ("backoff_ms", "500"),
    ("bleu_mode", "cumulative"),
    ("bleu_smoothing", "true"),
    ("bootstrap", "true"),
    ("endpoint_url", "https://api.openai.com/v1/chat/completions"),
    ("fillers", ""),
    ("folds", "5"),
    ("grid_max_depth", "none,5,10"),
    ("grid_max_features", "4"),
    ("grid_min_samples_leaf", "1,2"),
    ("grid_n_trees", "100,300,500"),
    ("keywords", ""),
    ("max_depth", "none"),
    ("max_features", "4"),
    ("min_frequency", ""),
    ("min_samples_leaf", "1"),
    ("model_name", "gpt-4o"),
    ("n_trees", "300"),
    ("parallelism", "4"),
    ("references", ""),
    ("retries", "2"),
    ("seed", "42"),
    ("speakers", "PAR"),
    ("strict", "false"),
    ("temperature", "1.0"),
    ("tfidf_drop_stopwords", "false"),
    ("tfidf_stem", "false"),
    ("timeout_secs", "120"),
    ("topic_mapping", "union"),
    ("wer_drop_fillers", "false"),
];

#[derive(Debug, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
    /// Directory of the config file; relative paths inside it resolve here.
    base: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        let mut values: BTreeMap<String, String> = DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        values.insert("fillers".into(), DEFAULT_FILLERS.join(","));
        values.insert("min_frequency".into(), DEFAULT_MIN_FREQUENCY.to_string());
        Config {
            values,
            base: PathBuf::from("."),
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut config = Config {
            base: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            ..Config::default()
        };
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .with_context(|| format!("{}:{}: expected key = value", path.display(), n + 1))?;
            config
                .set(k.trim(), v.trim())
                .with_context(|| format!("{}:{}", path.display(), n + 1))?;
        }
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !self.values.contains_key(key) {
            bail!("unknown config key {key:?}");
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair.split_once('=').with_context(|| format!("--set expects key=value, got {pair:?}"))?;
        self.set(k.trim(), v.trim())
    }

    fn get(&self, key: &str) -> &str {
        &self.values[key]
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .parse()
            .map_err(|e| anyhow::anyhow!("config {key} = {:?}: {e}", self.get(key)))
    }

    fn optional(&self, key: &str) -> Result<Option<usize>> {
        optional_usize(self.get(key)).with_context(|| format!("config {key}"))
    }

    fn list<T>(&self, key: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
        self.get(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| item(s).with_context(|| format!("config {key}")))
            .collect()
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        let v = self.get(key);
        (!v.is_empty()).then(|| self.base.join(v))
    }

    pub fn seed(&self) -> Result<u64> {
        self.parse("seed")
    }

    pub fn strict(&self) -> Result<bool> {
        self.parse("strict")
    }

    pub fn forest(&self) -> Result<ForestConfig> {
        Ok(ForestConfig {
            n_trees: self.parse("n_trees")?,
            max_features: self.optional("max_features")?,
            min_samples_leaf: self.parse("min_samples_leaf")?,
            max_depth: self.optional("max_depth")?,
            bootstrap: self.parse("bootstrap")?,
            seed: self.seed()?,
        })
    }

    pub fn folds(&self) -> Result<usize> {
        self.parse("folds")
    }

    /// Cartesian product of the grid lists, in nested order
    /// n_trees > max_depth > max_features > min_samples_leaf.
    pub fn grid(&self) -> Result<Vec<GridPoint>> {
        let n_trees = self.list("grid_n_trees", |s| Ok(s.parse::<usize>()?))?;
        let depths = self.list("grid_max_depth", optional_usize)?;
        let features = self.list("grid_max_features", optional_usize)?;
        let leaves = self.list("grid_min_samples_leaf", |s| Ok(s.parse::<usize>()?))?;
        let mut grid = Vec::new();
        for &n_trees in &n_trees {
            for &max_depth in &depths {
                for &max_features in &features {
                    for &min_samples_leaf in &leaves {
                        grid.push(GridPoint { n_trees, max_depth, max_features, min_samples_leaf });
                    }
                }
            }
        }
        Ok(grid)
    }

    pub fn speakers(&self) -> Result<Vec<String>> {
        let s = self.list("speakers", |s| Ok(s.to_string()))?;
        if s.is_empty() {
            bail!("config speakers is empty");
        }
        Ok(s)
    }

    pub fn terms(&self) -> Result<TermOptions> {
        Ok(TermOptions {
            stem: self.parse("tfidf_stem")?,
            drop_stopwords: self.parse("tfidf_drop_stopwords")?,
        })
    }

    pub fn features(&self) -> Result<FeatureOptions> {
        let mode = match self.get("bleu_mode") {
            "cumulative" => BleuMode::Cumulative,
            "individual" => BleuMode::Individual,
            other => bail!("config bleu_mode = {other:?}: expected cumulative or individual"),
        };
        Ok(FeatureOptions {
            bleu: BleuOptions { mode, smoothing: self.parse("bleu_smoothing")? },
            fillers: self.list("fillers", |s| Ok(s.to_lowercase()))?,
            wer_drop_fillers: self.parse("wer_drop_fillers")?,
        })
    }

    pub fn topic_mapping(&self) -> Result<TopicMapping> {
        Ok(TopicMapping::parse(self.get("topic_mapping"))?)
    }

    pub fn endpoint(&self) -> Result<EndpointConfig> {
        Ok(EndpointConfig {
            url: self.get("endpoint_url").to_string(),
            model: self.get("model_name").to_string(),
            temperature: self.parse("temperature")?,
            retries: self.parse("retries")?,
            backoff_ms: self.parse("backoff_ms")?,
            parallelism: self.parse("parallelism")?,
            timeout_secs: self.parse("timeout_secs")?,
            api_key_env: self.get("api_key_env").to_string(),
        })
    }

    pub fn min_frequency(&self) -> Result<f64> {
        self.parse("min_frequency")
    }

    /// Checks every key parses, so bad values fail before any work starts.
    pub fn validate(&self) -> Result<()> {
        self.forest()?;
        self.folds()?;
        self.grid()?;
        self.speakers()?;
        self.terms()?;
        self.features()?;
        self.topic_mapping()?;
        self.endpoint()?;
        self.min_frequency()?;
        self.strict()?;
        Ok(())
    }

    /// Sorted `key = value` lines, paths shown as resolved.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            let shown = match k.as_str() {
                "references" | "keywords" if !v.is_empty() => self.base.join(v).display().to_string(),
                _ => v.clone(),
            };
            out.push_str(&format!("{k} = {shown}\n"));
        }
        out
    }
}

fn optional_usize(s: &str) -> Result<Option<usize>> {
    match s.trim().to_ascii_lowercase().as_str() {
        "none" | "" => Ok(None),
        v => Ok(Some(v.parse().with_context(|| format!("{v:?} is not a count or none"))?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = Config::default();
        c.validate().unwrap();
        assert_eq!(c.forest().unwrap(), ForestConfig::default());
        assert_eq!(c.features().unwrap(), FeatureOptions::default());
        assert_eq!(c.endpoint().unwrap(), EndpointConfig::default());
        assert_eq!(c.grid().unwrap().len(), 18);
    }

    #[test]
    fn file_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("exp.cfg");
        std::fs::write(&p, "# experiment\nn_trees = 50\nmax_depth=7\nreferences = refs.txt\n").unwrap();
        let mut c = Config::load(&p).unwrap();
        c.set_pair("seed=9").unwrap();
        let f = c.forest().unwrap();
        assert_eq!((f.n_trees, f.max_depth, f.seed), (50, Some(7), 9));
        assert_eq!(c.path("references").unwrap(), dir.path().join("refs.txt"));
        assert!(c.snapshot().contains("n_trees = 50\n"));
    }

    #[test]
    fn bad_keys_and_values() {
        let mut c = Config::default();
        assert!(c.set("colour", "red").is_err());
        c.set("max_depth", "deep").unwrap();
        assert!(c.validate().is_err());
    }
}
