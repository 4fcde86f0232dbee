//! Plain-text prompt templates with `{NAME}` placeholders.
//!
//! Rendering is pure byte-deterministic substitution. A placeholder is a
//! `{` followed by an identifier and `}`; any other brace is literal text,
//! so JSON-shaped prose inside a template needs no escaping.

use std::collections::BTreeMap;
use std::path::Path;

use super::GatewayError;

/// Template ids shipped with the crate.
pub const BUILTIN_TEMPLATES: &[(&str, &str)] = &[
    ("chat", include_str!("../../templates/chat.txt")),
    ("judge", include_str!("../../templates/judge.txt")),
    ("premise_synopsis", include_str!("../../templates/premise_synopsis.txt")),
    ("chapter_plans", include_str!("../../templates/chapter_plans.txt")),
    ("boundary_nodes", include_str!("../../templates/boundary_nodes.txt")),
    ("pseudo_cpn", include_str!("../../templates/pseudo_cpn.txt")),
    ("review", include_str!("../../templates/review.txt")),
    ("alignment", include_str!("../../templates/alignment.txt")),
    ("text_block", include_str!("../../templates/text_block.txt")),
];

/// Holds templates by id and renders them against bindings.
#[derive(Debug, Clone)]
pub struct TemplateStore {
    templates: BTreeMap<String, String>,
}

impl Default for TemplateStore {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TemplateStore {
    /// The templates embedded in the crate.
    pub fn builtin() -> Self {
        let templates = BUILTIN_TEMPLATES
            .iter()
            .map(|(id, text)| (id.to_string(), text.to_string()))
            .collect();
        TemplateStore { templates }
    }

    /// Loads `*.txt` files from a directory on top of the builtins.
    ///
    /// The file stem is the template id, so a `review.txt` in the
    /// directory overrides the shipped review template.
    pub fn with_dir(dir: &Path) -> std::io::Result<Self> {
        let mut store = Self::builtin();
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "txt"))
            .collect();
        paths.sort();
        for path in paths {
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            store
                .templates
                .insert(stem.to_string(), std::fs::read_to_string(&path)?);
        }
        Ok(store)
    }

    pub fn insert(&mut self, id: &str, text: &str) {
        self.templates.insert(id.to_string(), text.to_string());
    }

    pub fn contains(&self, id: &str) -> bool {
        self.templates.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    /// Renders a template by substituting every `{NAME}` placeholder.
    ///
    /// Every placeholder must have a binding and every binding must be
    /// used; an empty-string binding is the way to drop an optional
    /// section.
    pub fn render(
        &self,
        template_id: &str,
        bindings: &BTreeMap<String, String>,
    ) -> Result<String, GatewayError> {
        let template = self
            .templates
            .get(template_id)
            .ok_or_else(|| GatewayError::UnknownTemplate(template_id.to_string()))?;
        let mut out = String::with_capacity(template.len());
        let mut used: Vec<&str> = Vec::new();
        let bytes = template.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            if bytes[i] == b'{' {
                if let Some((name, end)) = placeholder_at(template, i) {
                    let value = bindings
                        .get(name)
                        .ok_or_else(|| GatewayError::MissingBinding(name.to_string()))?;
                    out.push_str(value);
                    used.push(name);
                    i = end;
                    continue;
                }
            }
            let ch = template[i..].chars().next().expect("in bounds");
            out.push(ch);
            i += ch.len_utf8();
        }
        for key in bindings.keys() {
            if !used.contains(&key.as_str()) {
                return Err(GatewayError::UnusedBinding(key.clone()));
            }
        }
        Ok(out)
    }
}

/// Parses a `{identifier}` placeholder starting at byte `start`, returning
/// the identifier and the byte offset just past the closing brace.
fn placeholder_at(text: &str, start: usize) -> Option<(&str, usize)> {
    let rest = &text[start + 1..];
    let end = rest.find('}')?;
    let name = &rest[..end];
    if name.is_empty() {
        return None;
    }
    let mut chars = name.chars();
    let first = chars.next().expect("non-empty");
    if !(first.is_ascii_alphabetic() || first == '_') {
        return None;
    }
    if !chars.all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return None;
    }
    Some((name, start + 1 + end + 1))
}

/// Convenience constructor for binding maps.
pub fn bindings<const N: usize>(pairs: [(&str, &str); N]) -> BTreeMap<String, String> {
    pairs
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}
