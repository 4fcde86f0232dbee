//! Plain-text key/value configuration with flag > file > default
//! precedence. Environment variables carry credentials only; everything
//! else is explicit.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use storyloom::PipelineConfig;

/// Parsed `KEY=VALUE` config file; `#` comments and blank lines ignored.
#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut values = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(
                    "config file {} line {}: expected KEY=VALUE, got {line:?}",
                    path.display(),
                    lineno + 1
                );
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config key {key}={raw:?}: {e}")),
        }
    }
}

/// Which completion backend a command should use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendChoice {
    Scripted(PathBuf),
    Http { api_base: String, model: String },
}

impl BackendChoice {
    /// Flag > config file; `--script` wins over `--engine` when both are
    /// given on the same level.
    pub fn resolve(
        script_flag: Option<&Path>,
        engine_flag: Option<&str>,
        api_base_flag: Option<&str>,
        file: &FileConfig,
    ) -> Result<Self> {
        let script = script_flag
            .map(Path::to_path_buf)
            .or_else(|| file.get("script").map(PathBuf::from));
        let engine = engine_flag
            .map(str::to_string)
            .or_else(|| file.get("engine").map(str::to_string));
        if let (Some(_), Some(_)) = (script_flag, engine_flag) {
            bail!("--script and --engine are mutually exclusive");
        }
        if let Some(path) = script {
            return Ok(BackendChoice::Scripted(path));
        }
        if let Some(model) = engine {
            let api_base = api_base_flag
                .map(str::to_string)
                .or_else(|| file.get("api_base").map(str::to_string))
                .unwrap_or_else(|| "https://api.openai.com/v1".to_string());
            return Ok(BackendChoice::Http { api_base, model });
        }
        bail!("no backend selected: pass --script FILE or --engine MODEL (or set one in the config file)");
    }

    pub fn descriptor(&self) -> String {
        match self {
            BackendChoice::Scripted(path) => format!("scripted:{}", path.display()),
            BackendChoice::Http { model, .. } => model.clone(),
        }
    }

    pub fn build(&self) -> Result<Box<dyn storyloom::Backend>> {
        match self {
            BackendChoice::Scripted(path) => {
                let backend = storyloom::ScriptedBackend::from_file(path)
                    .with_context(|| format!("cannot load script {}", path.display()))?;
                Ok(Box::new(backend))
            }
            BackendChoice::Http { api_base, model } => {
                Ok(Box::new(storyloom::gateway::HttpBackend::new(api_base, model)))
            }
        }
    }
}

/// Settings shared by the generate command, resolved across layers.
pub struct GenerateSettings {
    pub pipeline: PipelineConfig,
    pub backend: BackendChoice,
    pub templates_dir: Option<PathBuf>,
}

#[allow(clippy::too_many_arguments)]
pub fn resolve_generate(
    file: &FileConfig,
    chapters: Option<usize>,
    max_cpn: Option<usize>,
    seed: Option<u64>,
    no_nekg: bool,
    no_review: bool,
    split_conjunctions: bool,
    script: Option<&Path>,
    engine: Option<&str>,
    api_base: Option<&str>,
    templates: Option<&Path>,
) -> Result<GenerateSettings> {
    let defaults = PipelineConfig::default();
    let backend = BackendChoice::resolve(script, engine, api_base, file)?;
    let pipeline = PipelineConfig {
        n_chapters: chapters
            .or(file.parsed("chapters")?)
            .unwrap_or(defaults.n_chapters),
        max_cpn_per_chapter: max_cpn
            .or(file.parsed("max_cpn_per_chapter")?)
            .unwrap_or(defaults.max_cpn_per_chapter),
        pair_limit: file.parsed("pair_limit")?.unwrap_or(defaults.pair_limit),
        entity_limit: file.parsed("entity_limit")?.unwrap_or(defaults.entity_limit),
        recent_limit: file.parsed("recent_limit")?.unwrap_or(defaults.recent_limit),
        use_nekg: if no_nekg {
            false
        } else {
            file.parsed("use_nekg")?.unwrap_or(defaults.use_nekg)
        },
        use_review: if no_review {
            false
        } else {
            file.parsed("use_review")?.unwrap_or(defaults.use_review)
        },
        split_conjunctions: split_conjunctions
            || file.parsed("split_conjunctions")?.unwrap_or(false),
        rng_seed: seed.or(file.parsed("seed")?).unwrap_or(defaults.rng_seed),
        backend: backend.descriptor(),
        temperature: file.parsed("temperature")?.unwrap_or(defaults.temperature),
        max_tokens: file.parsed("max_tokens")?.unwrap_or(defaults.max_tokens),
    };
    let templates_dir = templates
        .map(Path::to_path_buf)
        .or_else(|| file.get("templates_dir").map(PathBuf::from));
    Ok(GenerateSettings {
        pipeline,
        backend,
        templates_dir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("storyloom.conf");
        std::fs::write(&path, "# comment\nchapters = 3\nseed=9\n\nengine = gpt-x\n").unwrap();
        let file = FileConfig::load(Some(&path)).unwrap();
        assert_eq!(file.get("chapters"), Some("3"));
        assert_eq!(file.parsed::<u64>("seed").unwrap(), Some(9));
        assert_eq!(file.get("engine"), Some("gpt-x"));
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.conf");
        std::fs::write(&path, "chapters=3\nscript=from_file.jsonl\n").unwrap();
        let file = FileConfig::load(Some(&path)).unwrap();
        let settings = resolve_generate(
            &file,
            Some(5),
            None,
            None,
            false,
            false,
            false,
            Some(Path::new("flag.jsonl")),
            None,
            None,
            None,
        )
        .unwrap();
        assert_eq!(settings.pipeline.n_chapters, 5);
        assert_eq!(
            settings.backend,
            BackendChoice::Scripted(PathBuf::from("flag.jsonl"))
        );
    }

    #[test]
    fn missing_backend_is_a_usage_problem() {
        let file = FileConfig::default();
        assert!(BackendChoice::resolve(None, None, None, &file).is_err());
    }
}
