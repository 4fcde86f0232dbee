//! Pairwise judge arena with position-swap debiasing.
//!
//! Each story pair is judged twice, once in each order; swapped-round
//! verdicts are mirrored back before aggregation so positional bias
//! cancels out. Scores anchor a system judged identical to the baseline
//! at exactly 50.0.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{Backend, Gateway, GatewayError, PromptRequest};
use crate::gateway::template::bindings;

#[derive(Debug, Error)]
pub enum ArenaError {
    #[error("no verdict label found in judge reply")]
    NoVerdictFound,
    #[error("unknown judge dimension {0:?}")]
    UnknownDimension(String),
    #[error("no outcomes to score")]
    EmptyOutcomes,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// Five-level pairwise verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    AMuchBetter,
    ABetter,
    Tie,
    BBetter,
    BMuchBetter,
}

impl Verdict {
    pub const ALL: [Verdict; 5] = [
        Verdict::AMuchBetter,
        Verdict::ABetter,
        Verdict::Tie,
        Verdict::BBetter,
        Verdict::BMuchBetter,
    ];

    /// The bracketed label a judge emits for this verdict.
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::AMuchBetter => "[[A>>B]]",
            Verdict::ABetter => "[[A>B]]",
            Verdict::Tie => "[[A=B]]",
            Verdict::BBetter => "[[B>A]]",
            Verdict::BMuchBetter => "[[B>>A]]",
        }
    }

    /// The same verdict with the stories' positions exchanged.
    pub fn mirrored(&self) -> Verdict {
        match self {
            Verdict::AMuchBetter => Verdict::BMuchBetter,
            Verdict::ABetter => Verdict::BBetter,
            Verdict::Tie => Verdict::Tie,
            Verdict::BBetter => Verdict::ABetter,
            Verdict::BMuchBetter => Verdict::AMuchBetter,
        }
    }
}

/// Extracts the last bracketed verdict label from a judge reply.
pub fn parse_verdict(text: &str) -> Result<Verdict, ArenaError> {
    let mut best: Option<(usize, Verdict)> = None;
    for verdict in Verdict::ALL {
        if let Some(pos) = text.rfind(verdict.label()) {
            if best.is_none() || pos > best.expect("checked").0 {
                best = Some((pos, verdict));
            }
        }
    }
    best.map(|(_, v)| v).ok_or(ArenaError::NoVerdictFound)
}

/// Judge dimensions, each with a metric description and a checklist that
/// get substituted into the judge prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Creativity,
    Coherence,
    Engagement,
    Relevance,
    Overall,
}

impl Dimension {
    pub const ALL: [Dimension; 5] = [
        Dimension::Creativity,
        Dimension::Coherence,
        Dimension::Engagement,
        Dimension::Relevance,
        Dimension::Overall,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Dimension::Creativity => "creativity",
            Dimension::Coherence => "coherence",
            Dimension::Engagement => "engagement",
            Dimension::Relevance => "relevance",
            Dimension::Overall => "overall",
        }
    }

    pub fn metric_description(&self) -> &'static str {
        match self {
            Dimension::Creativity => "Creativity: originality of the plot and characters.",
            Dimension::Coherence => "Coherence: clarity of the narrative structure and flow.",
            Dimension::Engagement => {
                "Engagement: the extent to which the story captivates readers and sustains \
their emotional involvement and curiosity."
            }
            Dimension::Relevance => {
                "Relevance: alignment with the theme, prompt, or background."
            }
            Dimension::Overall => {
                "Overall: a holistic evaluation considering alignment with the prompt, \
character and plot development, reader engagement, originality, and areas for improvement."
            }
        }
    }

    pub fn checklist(&self) -> &'static [&'static str] {
        match self {
            Dimension::Creativity => &[
                "Uniqueness of the plot setting: Does the story's background, time, location, or plot present a distinctive setting that breaks away from conventional patterns?",
                "Innovation in character design: Do the characters have distinct traits, unconventional identities, or surprising personalities? Is there unexpected character development or interaction?",
                "Creativity in narrative technique: Does the story employ novel narrative structures or techniques, such as nonlinear storytelling, multiple perspectives, or unconventional modes of expression?",
                "Fresh interpretation of common themes: Even if the story uses common themes (such as love, adventure, or conflict), does it offer a fresh perspective, different emotional layers, or unique interpretations?",
                "Incorporation of creative elements: Does the story include unexpected elements like fantasy, science fiction, or other imaginative concepts? Do these elements effectively enhance the story's appeal and uniqueness?",
            ],
            Dimension::Coherence => &[
                "Logical consistency of the plot: Do the events and plot developments in the story have clear cause-and-effect relationships? Are there any sudden or unreasonable twists?",
                "Coherence of the story structure: Does the story have a clear overall framework from beginning to end, with a natural progression of events? Does it avoid disjointed or erratic narration?",
                "Reasonableness of character behavior: Do the characters' actions and decisions align with their personality and background? Are the characters' responses in different situations consistent?",
                "Smoothness of the timeline: Is the progression of time in the story clear and coherent? Does the timeline remain consistent, avoiding confusing time jumps or unreasonable time gaps?",
                "Consistency of narrative tone: Is the language style and narrative tone of the story consistent throughout? Does it avoid unnecessary shifts in tone or abrupt changes in expression?",
            ],
            Dimension::Engagement => &[
                "Gripping opening: Does the story capture attention from the very beginning? Is the introduction intriguing enough to make the reader want to continue?",
                "Sustained interest: Does the story maintain the reader's interest throughout? Are there moments of tension, excitement, or emotional depth that keep the reader engaged?",
                "Emotional connection: Does the story evoke any emotional response? Do the characters and their struggles create empathy or connection with the reader?",
                "Immersiveness of the narrative: Does the story create a vivid and immersive experience? Are the descriptions, dialogues, and world-building elements compelling and engaging?",
                "Pacing of the story: Is the pacing of the story appropriate? Does it avoid being too slow or too rushed, allowing the reader to stay immersed without losing interest?",
            ],
            Dimension::Relevance => &[
                "Alignment with the theme: Does the story closely follow the given theme or prompt? Is the content aligned with the prompt's requirements, avoiding any unrelated or off-topic elements?",
                "Relevance of the plot to the task objective: Does the plot development revolve around the task or objective? Does it effectively convey the core message that the story is meant to deliver?",
                "Consistency of characters and setting with the task: Are the characters and setting in the story consistent with the task requirements or thematic setup? Does it avoid inappropriate or irrelevant elements?",
                "Match between story style and context: Is the style and tone of the story suitable for the given task or scenario? Does it maintain consistency without sudden shifts in style?",
                "Relevance of details and scenes: Are the details and scenes in the story relevant to the overall plot? Do they support and enhance the expression of the theme, avoiding unrelated or redundant descriptions?",
            ],
            Dimension::Overall => &[
                "Alignment with the prompt: Does the story as a whole deliver what the prompt asked for?",
                "Character and plot development: Do characters and plot lines develop meaningfully from beginning to end?",
                "Reader engagement: Does the story hold attention across its full length?",
                "Originality: Does the story avoid formulaic telling and bring something of its own?",
                "Areas for improvement: Are weaknesses minor rather than structural?",
            ],
        }
    }
}

impl std::str::FromStr for Dimension {
    type Err = ArenaError;

    fn from_str(s: &str) -> Result<Self, ArenaError> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.name() == s.to_ascii_lowercase())
            .ok_or_else(|| ArenaError::UnknownDimension(s.to_string()))
    }
}

/// Which position arrangement a judgment used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Round {
    /// System under test in position A.
    Original,
    /// Positions exchanged.
    Swapped,
}

/// One judged comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub prompt_id: String,
    pub round: Round,
    pub verdict: Verdict,
    pub dimension: String,
}

/// Judges one story pair on one dimension. `story_a` sits in position A;
/// callers run the swapped round by exchanging the arguments and tagging
/// the outcome [`Round::Swapped`].
pub fn judge_pair(
    gateway: &Gateway,
    backend: &dyn Backend,
    story_a: &str,
    story_b: &str,
    dimension: Dimension,
) -> Result<Verdict, ArenaError> {
    let checklists =
        serde_json::to_string(dimension.checklist()).expect("checklist serializes");
    let mut binds = bindings([
        ("metric", dimension.metric_description()),
        ("checklists", &checklists),
        ("story_a", story_a),
        ("story_b", story_b),
        ("CORRECTION", ""),
    ]);
    let request = PromptRequest::new("judge", binds.clone());
    let first = gateway.complete(backend, &request)?;
    match parse_verdict(&first.text) {
        Ok(v) => Ok(v),
        Err(_) => {
            binds.insert(
                "CORRECTION".to_string(),
                "\nYour previous reply contained no verdict label. \
End with exactly one of [[A>>B]], [[A>B]], [[A=B]], [[B>A]], [[B>>A]]."
                    .to_string(),
            );
            let second = gateway.complete(backend, &PromptRequest::new("judge", binds))?;
            parse_verdict(&second.text)
        }
    }
}

/// Tally of both rounds for one system pair, after mirroring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapSummary {
    pub wins_a: usize,
    pub wins_b: usize,
    pub ties: usize,
    /// wins_a over all judged rounds; ties count in the denominator.
    pub win_rate_a: f64,
    /// (prompt_id, dimension) keys that are missing one of the two rounds.
    pub incomplete: Vec<(String, String)>,
}

/// Mirrors swapped-round verdicts and tallies both rounds. "Much better"
/// counts as a single win here; weighting is the scorer's business.
pub fn swap_aggregate(outcomes: &[PairOutcome]) -> SwapSummary {
    let mut wins_a = 0usize;
    let mut wins_b = 0usize;
    let mut ties = 0usize;
    for outcome in outcomes {
        let verdict = match outcome.round {
            Round::Original => outcome.verdict,
            Round::Swapped => outcome.verdict.mirrored(),
        };
        match verdict {
            Verdict::AMuchBetter | Verdict::ABetter => wins_a += 1,
            Verdict::Tie => ties += 1,
            Verdict::BBetter | Verdict::BMuchBetter => wins_b += 1,
        }
    }
    let total = wins_a + wins_b + ties;
    let win_rate_a = if total == 0 {
        0.0
    } else {
        wins_a as f64 / total as f64
    };

    let mut incomplete = Vec::new();
    let mut keys: Vec<(String, String)> = outcomes
        .iter()
        .map(|o| (o.prompt_id.clone(), o.dimension.clone()))
        .collect();
    keys.sort();
    keys.dedup();
    for key in keys {
        let has = |round: Round| {
            outcomes.iter().any(|o| {
                o.prompt_id == key.0 && o.dimension == key.1 && o.round == round
            })
        };
        if !(has(Round::Original) && has(Round::Swapped)) {
            incomplete.push(key);
        }
    }
    SwapSummary {
        wins_a,
        wins_b,
        ties,
        win_rate_a,
        incomplete,
    }
}

/// How verdict strength enters the score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// Win 1, tie 0.5, loss 0, all verdicts weigh the same.
    Uniform,
    /// "Much better" counts as two wins or two losses.
    Amplified,
}

/// Baseline-anchored score in [0, 100] for the system in position A.
///
/// All-tie outcomes score exactly 50.0 under both weightings, matching the
/// baseline compared against itself.
pub fn arena_score(outcomes: &[PairOutcome], weighting: Weighting) -> Result<f64, ArenaError> {
    if outcomes.is_empty() {
        return Err(ArenaError::EmptyOutcomes);
    }
    let mut points = 0.0f64;
    let mut weight = 0.0f64;
    for outcome in outcomes {
        let verdict = match outcome.round {
            Round::Original => outcome.verdict,
            Round::Swapped => outcome.verdict.mirrored(),
        };
        let (p, w) = match (weighting, verdict) {
            (Weighting::Uniform, Verdict::AMuchBetter | Verdict::ABetter) => (1.0, 1.0),
            (Weighting::Uniform, Verdict::Tie) => (0.5, 1.0),
            (Weighting::Uniform, Verdict::BBetter | Verdict::BMuchBetter) => (0.0, 1.0),
            (Weighting::Amplified, Verdict::AMuchBetter) => (2.0, 2.0),
            (Weighting::Amplified, Verdict::ABetter) => (1.0, 1.0),
            (Weighting::Amplified, Verdict::Tie) => (0.5, 1.0),
            (Weighting::Amplified, Verdict::BBetter) => (0.0, 1.0),
            (Weighting::Amplified, Verdict::BMuchBetter) => (0.0, 2.0),
        };
        points += p;
        weight += w;
    }
    Ok(100.0 * points / weight)
}
