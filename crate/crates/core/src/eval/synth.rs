//! Synthetic corpora with planted association rules, for desk-scale runs of
//! the full protocol.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    ContextCategory, ContextMention, Corpus, DependencyEdge, Document, EventMention,
    GoldAssociation, Sentence, Token,
};
use crate::error::{Error, Result};
use crate::seed;

/// Rule deciding whether an (event, context type) pair is associated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum SignalSpec {
    /// Positive iff the nearest mention of the type is within `width`
    /// sentences of the event.
    Window { width: u32 },
    /// Positive iff the type owns the mention closest to the event and the
    /// sentence distance of its nearest mention falls in a band set by the
    /// type's frequency in the paper (see [`SignalSpec::frequency_band`]).
    /// The band test is flipped with probability `noise`, so noise never
    /// links a type that lacks the closest mention.
    DistanceFrequency { noise: f64 },
    /// Positive with probability `rate`, independent of the text.
    Random { rate: f64 },
}

impl SignalSpec {
    /// Inclusive sentence-distance band for a type mentioned `frequency`
    /// times: singletons must share the event's sentence, types seen two to
    /// four times must sit in another sentence, and frequent types may sit
    /// anywhere.
    pub fn frequency_band(frequency: usize) -> (usize, usize) {
        match frequency {
            0 | 1 => (0, 0),
            2..=4 => (1, usize::MAX),
            _ => (0, usize::MAX),
        }
    }

    fn label(&self, nearest: usize, frequency: usize, closest: bool, rng: &mut ChaCha8Rng) -> bool {
        match *self {
            SignalSpec::Window { width } => nearest <= width as usize,
            SignalSpec::DistanceFrequency { noise } => {
                let (lo, hi) = Self::frequency_band(frequency);
                let in_band = (lo..=hi).contains(&nearest) ^ rng.gen_bool(noise);
                closest && in_band
            }
            SignalSpec::Random { rate } => rng.gen_bool(rate),
        }
    }

    fn validate(&self) -> Result<()> {
        let p = match *self {
            SignalSpec::Window { .. } => return Ok(()),
            SignalSpec::DistanceFrequency { noise } => noise,
            SignalSpec::Random { rate } => rate,
        };
        if (0.0..=1.0).contains(&p) {
            Ok(())
        } else {
            Err(Error::Config(format!("signal probability {p} outside [0, 1]")))
        }
    }
}

impl fmt::Display for SignalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalSpec::Window { width } => write!(f, "window:{width}"),
            SignalSpec::DistanceFrequency { noise } => write!(f, "distfreq:{noise}"),
            SignalSpec::Random { rate } => write!(f, "random:{rate}"),
        }
    }
}

/// Parses `window:<w>`, `distfreq:<noise>` or `random:<rate>`.
impl FromStr for SignalSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad signal spec {s:?}"));
        let (rule, arg) = s.split_once(':').ok_or_else(bad)?;
        let spec = match rule {
            "window" => SignalSpec::Window {
                width: arg.parse().map_err(|_| bad())?,
            },
            "distfreq" => SignalSpec::DistanceFrequency {
                noise: arg.parse().map_err(|_| bad())?,
            },
            "random" => SignalSpec::Random {
                rate: arg.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub seed: u64,
    pub n_papers: usize,
    pub events_per_paper: usize,
    /// Context mentions per paper; types are drawn with Zipf-like weights,
    /// so frequencies vary.
    pub contexts_per_paper: usize,
    pub sentences_per_paper: usize,
    /// Size of the grounding pool mentions are drawn from.
    pub context_types: usize,
    pub signal: SignalSpec,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            seed: 0,
            n_papers: 22,
            events_per_paper: 10,
            contexts_per_paper: 12,
            sentences_per_paper: 15,
            context_types: 12,
            signal: SignalSpec::DistanceFrequency { noise: 0.02 },
        }
    }
}

const CATEGORIES: [(ContextCategory, &str); 3] = [
    (ContextCategory::Species, "taxonomy"),
    (ContextCategory::CellLine, "cellosaurus"),
    (ContextCategory::TissueType, "uberon"),
];

/// Grounding of the type with popularity rank `r`.
fn grounding(r: usize) -> (String, ContextCategory) {
    let (category, prefix) = CATEGORIES[r % CATEGORIES.len()];
    (format!("{prefix}:SYN{r:03}"), category)
}

const LABELS: [&str; 2] = ["nsubj", "dobj"];
const NEG_RATE: f64 = 0.04;

const TAGGED_WORDS: [(&str, &[&str]); 10] = [
    ("NN", &["protein", "kinase", "cell", "pathway", "expression"]),
    ("NNS", &["cells", "mice", "tumors", "levels"]),
    ("JJ", &["active", "mutant", "human"]),
    ("DT", &["the", "a"]),
    ("IN", &["of", "in", "with"]),
    ("VBD", &["increased", "showed"]),
    ("VBN", &["transfected", "observed"]),
    ("VBZ", &["activates", "binds"]),
    ("VBP", &["show", "induce"]),
    ("PRP", &["we", "it", "they"]),
];

fn sentence(rng: &mut ChaCha8Rng) -> Sentence {
    let n = rng.gen_range(5..=10);
    let tokens = (0..n)
        .map(|_| {
            let (pos, words) = TAGGED_WORDS[rng.gen_range(0..TAGGED_WORDS.len())];
            Token {
                word: words[rng.gen_range(0..words.len())].to_string(),
                pos: pos.to_string(),
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let root = order[0];
    let edges = (1..n)
        .map(|k| {
            let label = if rng.gen_bool(NEG_RATE) {
                "neg"
            } else {
                LABELS[rng.gen_range(0..LABELS.len())]
            };
            DependencyEdge {
                head: order[rng.gen_range(0..k)],
                dependent: order[k],
                label: label.to_string(),
            }
        })
        .collect();
    Sentence {
        tokens,
        edges,
        root,
    }
}

fn mention_span(rng: &mut ChaCha8Rng, s: &Sentence, max_len: usize) -> (usize, usize) {
    let start = rng.gen_range(0..s.len());
    let len = rng.gen_range(1..=max_len).min(s.len() - start);
    (start, start + len)
}

fn document(params: &SynthParams, index: usize, rng: &mut ChaCha8Rng) -> Document {
    let sentences: Vec<Sentence> = (0..params.sentences_per_paper)
        .map(|_| sentence(rng))
        .collect();
    let events: Vec<EventMention> = (0..params.events_per_paper)
        .map(|i| {
            let si = rng.gen_range(0..sentences.len());
            let (start, end) = mention_span(rng, &sentences[si], 2);
            EventMention {
                id: format!("E{i}"),
                sentence: si,
                start,
                end,
            }
        })
        .collect();
    let weights: Vec<f64> = (0..params.context_types).map(|r| 1.0 / (r + 1) as f64).collect();
    let total: f64 = weights.iter().sum();
    let contexts: Vec<ContextMention> = (0..params.contexts_per_paper)
        .map(|i| {
            let mut u = rng.gen_range(0.0..total);
            let mut g = 0;
            while u >= weights[g] && g + 1 < weights.len() {
                u -= weights[g];
                g += 1;
            }
            let si = rng.gen_range(0..sentences.len());
            let (start, end) = mention_span(rng, &sentences[si], 1);
            let (grounding_id, category) = grounding(g);
            ContextMention {
                id: format!("C{i}"),
                sentence: si,
                start,
                end,
                grounding_id,
                category,
            }
        })
        .collect();

    let mut gold = Vec::new();
    let mut types: Vec<&str> = contexts.iter().map(|c| c.grounding_id.as_str()).collect();
    types.sort_unstable();
    types.dedup();
    // closeness of a mention to an event: sentence distance, then distance
    // between start tokens in document order
    let offsets: Vec<usize> = sentences
        .iter()
        .scan(0, |acc, s| {
            let here = *acc;
            *acc += s.len();
            Some(here)
        })
        .collect();
    let closeness = |e: &EventMention, c: &ContextMention| {
        (
            c.sentence.abs_diff(e.sentence),
            (offsets[e.sentence] + e.start).abs_diff(offsets[c.sentence] + c.start),
        )
    };
    for event in &events {
        let best = contexts.iter().map(|c| closeness(event, c)).min();
        for &t in &types {
            let mentions: Vec<&ContextMention> =
                contexts.iter().filter(|c| c.grounding_id == t).collect();
            let closest = mentions.iter().any(|c| Some(closeness(event, c)) == best);
            let nearest = mentions
                .iter()
                .min_by_key(|c| (c.sentence.abs_diff(event.sentence), c.id.clone()))
                .expect("type has mentions");
            let distance = nearest.sentence.abs_diff(event.sentence);
            if params.signal.label(distance, mentions.len(), closest, rng) {
                gold.push(GoldAssociation {
                    event_id: event.id.clone(),
                    context_mention_id: nearest.id.clone(),
                });
            }
        }
    }
    Document {
        paper_id: format!("SYN{:04}", index),
        sentences,
        events,
        contexts,
        gold,
    }
}

/// Generates `n_papers` documents with random dependency trees, POS tags and
/// mentions, labeling every (event, type) pair by `signal`.
pub fn generate_synthetic_corpus(params: &SynthParams) -> Result<Corpus> {
    if params.n_papers == 0
        || params.events_per_paper == 0
        || params.contexts_per_paper == 0
        || params.sentences_per_paper == 0
        || params.context_types == 0
    {
        return Err(Error::Config("synthetic corpus sizes must be positive".into()));
    }
    params.signal.validate()?;
    let documents = (0..params.n_papers)
        .map(|i| {
            let mut rng = seed::rng(seed::derive(params.seed, &[b"synth", &(i as u64).to_le_bytes()]));
            document(params, i, &mut rng)
        })
        .collect();
    Ok(Corpus::new(documents))
}
