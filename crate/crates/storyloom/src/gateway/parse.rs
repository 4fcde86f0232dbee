//! Structured-output extraction from model replies.
//!
//! Pipeline prompts ask for single-quoted key/value blocks; models often
//! answer with standard JSON instead. The parser here accepts both quote
//! styles and extracts the first block in the reply that is well-formed
//! for the requested schema.

use crate::review::ReviewType;

use super::GatewayError;

/// The structured shapes the pipeline knows how to request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemaId {
    NodeTriplet,
    NodeList,
    ChapterPlanList,
    ReviewOutcome,
    AlignmentVerdict,
    PremiseSynopsis,
}

impl SchemaId {
    pub fn name(&self) -> &'static str {
        match self {
            SchemaId::NodeTriplet => "node_triplet",
            SchemaId::NodeList => "node_list",
            SchemaId::ChapterPlanList => "chapter_plan_list",
            SchemaId::ReviewOutcome => "review_outcome",
            SchemaId::AlignmentVerdict => "alignment_verdict",
            SchemaId::PremiseSynopsis => "premise_synopsis",
        }
    }
}

/// An unvalidated subject/verb/object triple, exactly as the model wrote
/// it; normalization happens downstream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTriplet {
    pub subject: String,
    pub verb: String,
    pub object: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPlan {
    pub title: String,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RawReview {
    Pass,
    Fail {
        review_type: ReviewType,
        modified: RawTriplet,
        explanation: String,
    },
}

/// A parsed structured value, tagged by schema.
#[derive(Debug, Clone, PartialEq)]
pub enum Structured {
    Triplet(RawTriplet),
    Nodes(Vec<RawTriplet>),
    Plans(Vec<RawPlan>),
    Review(RawReview),
    Alignment(bool),
    PremiseSynopsis { premise: String, synopsis: String },
}

/// Extracts the first block of `text` that is well-formed for `schema`.
pub fn parse_structured(text: &str, schema: SchemaId) -> Result<Structured, GatewayError> {
    match schema {
        SchemaId::AlignmentVerdict => parse_alignment(text),
        SchemaId::NodeTriplet => {
            scan_blocks(text, '{', |v| as_triplet(v).map(Structured::Triplet))
        }
        SchemaId::ReviewOutcome => scan_blocks(text, '{', |v| as_review(v).map(Structured::Review)),
        SchemaId::PremiseSynopsis => scan_blocks(text, '{', as_premise_synopsis),
        SchemaId::NodeList => scan_blocks(text, '[', |v| {
            let items = v.as_list().ok_or("expected a list")?;
            if items.is_empty() {
                return Err("node list is empty".into());
            }
            let nodes = items
                .iter()
                .map(as_triplet)
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Structured::Nodes(nodes))
        }),
        SchemaId::ChapterPlanList => scan_blocks(text, '[', |v| {
            let items = v.as_list().ok_or("expected a list")?;
            if items.is_empty() {
                return Err("chapter plan list is empty".into());
            }
            let plans = items.iter().map(as_plan).collect::<Result<Vec<_>, _>>()?;
            Ok(Structured::Plans(plans))
        }),
    }
    .map_err(|reason| GatewayError::ParseFailure {
        schema: schema.name(),
        reason,
        snippet: snippet(text),
    })
}

/// Typed convenience wrappers; each is `parse_structured` plus unpacking.
pub fn parse_node_triplet(text: &str) -> Result<RawTriplet, GatewayError> {
    match parse_structured(text, SchemaId::NodeTriplet)? {
        Structured::Triplet(t) => Ok(t),
        _ => unreachable!("schema guarantees variant"),
    }
}

pub fn parse_node_list(text: &str) -> Result<Vec<RawTriplet>, GatewayError> {
    match parse_structured(text, SchemaId::NodeList)? {
        Structured::Nodes(n) => Ok(n),
        _ => unreachable!("schema guarantees variant"),
    }
}

pub fn parse_chapter_plans(text: &str) -> Result<Vec<RawPlan>, GatewayError> {
    match parse_structured(text, SchemaId::ChapterPlanList)? {
        Structured::Plans(p) => Ok(p),
        _ => unreachable!("schema guarantees variant"),
    }
}

pub fn parse_review_outcome(text: &str) -> Result<RawReview, GatewayError> {
    match parse_structured(text, SchemaId::ReviewOutcome)? {
        Structured::Review(r) => Ok(r),
        _ => unreachable!("schema guarantees variant"),
    }
}

pub fn parse_alignment_verdict(text: &str) -> Result<bool, GatewayError> {
    match parse_structured(text, SchemaId::AlignmentVerdict)? {
        Structured::Alignment(b) => Ok(b),
        _ => unreachable!("schema guarantees variant"),
    }
}

pub fn parse_premise_synopsis(text: &str) -> Result<(String, String), GatewayError> {
    match parse_structured(text, SchemaId::PremiseSynopsis)? {
        Structured::PremiseSynopsis { premise, synopsis } => Ok((premise, synopsis)),
        _ => unreachable!("schema guarantees variant"),
    }
}

fn snippet(text: &str) -> String {
    const LIMIT: usize = 160;
    if text.len() <= LIMIT {
        text.to_string()
    } else {
        let mut end = LIMIT;
        while !text.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}…", &text[..end])
    }
}

/// First "yes"/"no" word in the reply, case-insensitive.
fn parse_alignment(text: &str) -> Result<Structured, String> {
    for word in text.split(|c: char| !c.is_ascii_alphanumeric()) {
        match word.to_ascii_lowercase().as_str() {
            "yes" => return Ok(Structured::Alignment(true)),
            "no" => return Ok(Structured::Alignment(false)),
            _ => {}
        }
    }
    Err("no yes/no verdict found".into())
}

/// Tries every block opening with `open`, front to back, returning the
/// first one that parses and satisfies the schema check. Remembers the
/// most informative rejection for the error message.
fn scan_blocks<F>(text: &str, open: char, check: F) -> Result<Structured, String>
where
    F: Fn(&Val) -> Result<Structured, String>,
{
    let mut best_reason: Option<String> = None;
    for (pos, c) in text.char_indices() {
        if c != open {
            continue;
        }
        let mut parser = Parser {
            text,
            pos,
        };
        let Ok(value) = parser.parse_value() else {
            continue;
        };
        match check(&value) {
            Ok(parsed) => return Ok(parsed),
            Err(reason) => {
                best_reason.get_or_insert(reason);
            }
        }
    }
    Err(best_reason.unwrap_or_else(|| format!("no {open}…{} block found", matching(open))))
}

fn matching(open: char) -> char {
    if open == '{' {
        '}'
    } else {
        ']'
    }
}

fn as_triplet(v: &Val) -> Result<RawTriplet, String> {
    let map = v.as_map().ok_or("expected an object")?;
    let field = |key: &str| -> Result<String, String> {
        map.iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str().map(str::to_string))
            .ok_or_else(|| format!("missing key '{key}'"))?
            .ok_or_else(|| format!("key '{key}' is not a string"))
    };
    let subject = field("subject")?;
    let verb = field("verb")?;
    let object = match map.iter().find(|(k, _)| k == "object") {
        None => String::new(),
        Some((_, v)) => v
            .as_str()
            .map(str::to_string)
            .ok_or("key 'object' is not a string")?,
    };
    Ok(RawTriplet {
        subject,
        verb,
        object,
    })
}

fn as_plan(v: &Val) -> Result<RawPlan, String> {
    let map = v.as_map().ok_or("expected an object")?;
    let field = |key: &str| -> Result<String, String> {
        map.iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str().map(str::to_string))
            .ok_or_else(|| format!("missing key '{key}'"))?
            .ok_or_else(|| format!("key '{key}' is not a string"))
    };
    Ok(RawPlan {
        title: field("title")?,
        summary: field("abstract")?,
    })
}

fn as_review(v: &Val) -> Result<RawReview, String> {
    let map = v.as_map().ok_or("expected an object")?;
    let verdict = map
        .iter()
        .find(|(k, _)| k == "verdict")
        .and_then(|(_, v)| v.as_str())
        .ok_or("missing string key 'verdict'")?;
    match verdict.to_ascii_lowercase().as_str() {
        "pass" => Ok(RawReview::Pass),
        "fail" => {
            let type_str = map
                .iter()
                .find(|(k, _)| k == "type")
                .and_then(|(_, v)| v.as_str())
                .ok_or("failed review is missing string key 'type'")?;
            let review_type: ReviewType = type_str.parse()?;
            let modified = map
                .iter()
                .find(|(k, _)| k == "modified")
                .map(|(_, v)| as_triplet(v))
                .ok_or("failed review is missing key 'modified'")??;
            let explanation = map
                .iter()
                .find(|(k, _)| k == "explanation")
                .and_then(|(_, v)| v.as_str())
                .unwrap_or("")
                .to_string();
            Ok(RawReview::Fail {
                review_type,
                modified,
                explanation,
            })
        }
        other => Err(format!("verdict must be 'pass' or 'fail', got {other:?}")),
    }
}

fn as_premise_synopsis(v: &Val) -> Result<Structured, String> {
    let map = v.as_map().ok_or("expected an object")?;
    let field = |key: &str| -> Result<String, String> {
        map.iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str().map(str::to_string))
            .ok_or_else(|| format!("missing key '{key}'"))?
            .ok_or_else(|| format!("key '{key}' is not a string"))
    };
    Ok(Structured::PremiseSynopsis {
        premise: field("premise")?,
        synopsis: field("synopsis")?,
    })
}

/// Minimal JSON-with-single-quotes value. Scalar tokens (numbers,
/// true/false/null) are kept as their literal text; the schemas above only
/// ever read strings, maps, and lists.
#[derive(Debug, Clone, PartialEq)]
enum Val {
    Str(String),
    List(Vec<Val>),
    Map(Vec<(String, Val)>),
}

impl Val {
    fn as_str(&self) -> Option<&str> {
        match self {
            Val::Str(s) => Some(s),
            _ => None,
        }
    }

    fn as_list(&self) -> Option<&[Val]> {
        match self {
            Val::List(items) => Some(items),
            _ => None,
        }
    }

    fn as_map(&self) -> Option<&[(String, Val)]> {
        match self {
            Val::Map(entries) => Some(entries),
            _ => None,
        }
    }
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn expect(&mut self, want: char) -> Result<(), String> {
        self.skip_ws();
        match self.bump() {
            Some(c) if c == want => Ok(()),
            other => Err(format!("expected {want:?}, found {other:?}")),
        }
    }

    fn parse_value(&mut self) -> Result<Val, String> {
        self.skip_ws();
        match self.peek() {
            Some('{') => self.parse_map(),
            Some('[') => self.parse_list(),
            Some('"') | Some('\'') => self.parse_string().map(Val::Str),
            Some(_) => self.parse_scalar(),
            None => Err("unexpected end of input".into()),
        }
    }

    fn parse_map(&mut self) -> Result<Val, String> {
        self.expect('{')?;
        let mut entries = Vec::new();
        self.skip_ws();
        if self.peek() == Some('}') {
            self.bump();
            return Ok(Val::Map(entries));
        }
        loop {
            self.skip_ws();
            let key = self.parse_string()?;
            self.expect(':')?;
            let value = self.parse_value()?;
            entries.push((key, value));
            self.skip_ws();
            match self.bump() {
                Some(',') => continue,
                Some('}') => return Ok(Val::Map(entries)),
                other => return Err(format!("expected ',' or '}}', found {other:?}")),
            }
        }
    }

    fn parse_list(&mut self) -> Result<Val, String> {
        self.expect('[')?;
        let mut items = Vec::new();
        self.skip_ws();
        if self.peek() == Some(']') {
            self.bump();
            return Ok(Val::List(items));
        }
        loop {
            items.push(self.parse_value()?);
            self.skip_ws();
            match self.bump() {
                Some(',') => continue,
                Some(']') => return Ok(Val::List(items)),
                other => return Err(format!("expected ',' or ']', found {other:?}")),
            }
        }
    }

    fn parse_string(&mut self) -> Result<String, String> {
        self.skip_ws();
        let quote = match self.bump() {
            Some(q @ ('"' | '\'')) => q,
            other => return Err(format!("expected a quoted string, found {other:?}")),
        };
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err("unterminated string".into()),
                Some('\\') => match self.bump() {
                    None => return Err("unterminated escape".into()),
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some('r') => out.push('\r'),
                    Some(c) => out.push(c),
                },
                Some(c) if c == quote => return Ok(out),
                Some(c) => out.push(c),
            }
        }
    }

    fn parse_scalar(&mut self) -> Result<Val, String> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_whitespace() || matches!(c, ',' | '}' | ']' | ':') {
                break;
            }
            self.pos += c.len_utf8();
        }
        if self.pos == start {
            Err("empty scalar".into())
        } else {
            Ok(Val::Str(self.text[start..self.pos].to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_quoted_triplet_with_empty_object() {
        let raw = parse_node_triplet("{'subject': 'Ethan', 'verb': 'walk', 'object': ''}").unwrap();
        assert_eq!(raw.subject, "Ethan");
        assert_eq!(raw.verb, "walk");
        assert_eq!(raw.object, "");
    }

    #[test]
    fn double_quoted_json_accepted() {
        let raw =
            parse_node_triplet(r#"{"subject": "Ethan and Lily", "verb": "continue", "object": "walk"}"#)
                .unwrap();
        assert_eq!(raw.subject, "Ethan and Lily");
        assert_eq!(raw.object, "walk");
    }

    #[test]
    fn empty_input_fails() {
        let err = parse_node_triplet("").unwrap_err();
        assert!(matches!(err, GatewayError::ParseFailure { schema: "node_triplet", .. }));
    }

    #[test]
    fn first_block_wins() {
        let text = "Here: {'subject': 'A', 'verb': 'x', 'object': 'B'} and also \
{'subject': 'C', 'verb': 'y', 'object': 'D'}";
        assert_eq!(parse_node_triplet(text).unwrap().subject, "A");
    }

    #[test]
    fn prose_around_block_is_ignored() {
        let text = "Sure! The node {not a block} is:\n{'subject': 'Ethan', 'verb': 'walk', 'object': ''}\nHope that helps.";
        assert_eq!(parse_node_triplet(text).unwrap().subject, "Ethan");
    }

    #[test]
    fn escaped_quotes_inside_values() {
        let raw = parse_node_triplet(r"{'subject': 'O\'Brien', 'verb': 'say', 'object': 'line'}")
            .unwrap();
        assert_eq!(raw.subject, "O'Brien");
    }

    #[test]
    fn node_list_of_two() {
        let nodes = parse_node_list(
            "[{'subject': 'a', 'verb': 'v', 'object': 'b'}, {'subject': 'c', 'verb': 'w', 'object': ''}]",
        )
        .unwrap();
        assert_eq!(nodes.len(), 2);
        assert_eq!(nodes[1].object, "");
    }

    #[test]
    fn chapter_plan_list() {
        let plans = parse_chapter_plans(
            "[{'title': 'One', 'abstract': 'First things.'}, {'title': 'Two', 'abstract': 'Then more.'}]",
        )
        .unwrap();
        assert_eq!(plans[0].title, "One");
        assert_eq!(plans[1].summary, "Then more.");
    }

    #[test]
    fn review_pass_and_fail() {
        assert_eq!(parse_review_outcome("{'verdict': 'pass'}").unwrap(), RawReview::Pass);
        let fail = parse_review_outcome(
            "{'verdict': 'fail', 'type': 'Redundancy Optimization', \
'modified': {'subject': 'Ethan and Lily', 'verb': 'continue', 'object': 'walk'}, \
'explanation': 'repeats the walk'}",
        )
        .unwrap();
        match fail {
            RawReview::Fail {
                review_type,
                modified,
                explanation,
            } => {
                assert_eq!(review_type, ReviewType::RedundancyOptimization);
                assert_eq!(modified.verb, "continue");
                assert_eq!(explanation, "repeats the walk");
            }
            RawReview::Pass => panic!("expected fail"),
        }
    }

    #[test]
    fn review_rejects_unknown_type() {
        let err = parse_review_outcome(
            "{'verdict': 'fail', 'type': 'General Vibes', \
'modified': {'subject': 'a', 'verb': 'b', 'object': 'c'}, 'explanation': 'x'}",
        )
        .unwrap_err();
        match err {
            GatewayError::ParseFailure { reason, .. } => {
                assert!(reason.contains("unknown review type"))
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn alignment_words() {
        assert_eq!(parse_alignment_verdict("Yes.").unwrap(), true);
        assert_eq!(parse_alignment_verdict("I think: no").unwrap(), false);
        assert!(parse_alignment_verdict("maybe").is_err());
        // "eyes" must not smuggle in a yes
        assert!(parse_alignment_verdict("eyes only").is_err());
    }

    #[test]
    fn premise_synopsis_block() {
        let (p, s) =
            parse_premise_synopsis("{'premise': 'A quiet coastal era.', 'synopsis': 'Ethan returns.'}")
                .unwrap();
        assert_eq!(p, "A quiet coastal era.");
        assert_eq!(s, "Ethan returns.");
    }

    #[test]
    fn skips_malformed_then_finds_valid() {
        let text = "{'subject': unclosed {'subject': 'A', 'verb': 'v', 'object': 'B'}";
        assert_eq!(parse_node_triplet(text).unwrap().subject, "A");
    }

    #[test]
    fn error_snippet_is_bounded() {
        let long = "x".repeat(500);
        let err = parse_node_triplet(&long).unwrap_err();
        match err {
            GatewayError::ParseFailure { snippet, .. } => assert!(snippet.len() < 200),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
