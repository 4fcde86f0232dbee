//! Prompt dataset loading: one prompt per line, each led by a bracketed
//! category tag like `[ WP ]`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read prompt dataset {path}: {source}")]
    FileUnreadable {
        path: String,
        source: std::io::Error,
    },
}

/// One tagged prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub tag: String,
    pub prompt_text: String,
}

/// The parsed dataset plus the lines that carried no tag.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PromptDataset {
    pub prompts: Vec<PromptRecord>,
    /// (1-based line number, raw line) for untagged lines, reported so
    /// nothing is silently dropped.
    pub skipped: Vec<(usize, String)>,
}

/// Parses a leading `[ XX ]` tag, tolerating any whitespace inside the
/// brackets. Returns the tag and the rest of the line.
fn parse_tagged_line(line: &str) -> Option<(String, String)> {
    let trimmed = line.trim_start();
    let rest = trimmed.strip_prefix('[')?;
    let close = rest.find(']')?;
    let tag = rest[..close].trim();
    if tag.is_empty() || tag.contains('[') {
        return None;
    }
    Some((tag.to_string(), rest[close + 1..].trim().to_string()))
}

/// Parses dataset text; `tag_filter` keeps only matching tags.
pub fn parse_prompt_dataset(text: &str, tag_filter: Option<&str>) -> PromptDataset {
    let mut dataset = PromptDataset::default();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_tagged_line(line) {
            Some((tag, prompt_text)) => {
                if tag_filter.is_none_or(|f| f == tag) {
                    dataset.prompts.push(PromptRecord { tag, prompt_text });
                }
            }
            None => dataset.skipped.push((idx + 1, line.to_string())),
        }
    }
    dataset
}

/// Loads and parses a prompt dataset file.
pub fn load_prompt_dataset(
    path: &Path,
    tag_filter: Option<&str>,
) -> Result<PromptDataset, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::FileUnreadable {
        path: path.display().to_string(),
        source,
    })?;
    Ok(parse_prompt_dataset(&text, tag_filter))
}

/// The eleven tags the source dataset defines.
pub const KNOWN_TAGS: [&str; 11] = [
    "WP", "SP", "EU", "CW", "TT", "PM", "MP", "IP", "PI", "OT", "RF",
];
