//! Per mention-pair features: distances, frequency, closeness, sentence-level
//! phi flags, and syntactic bigram/negation features.

pub mod graph;
mod vocab;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Sentence};
use crate::error::{Error, Result};
use crate::instances::MentionPair;

pub use graph::{head_token, is_negated, spanning_bigrams, Bigram, BigramBag, SentenceGraph};
pub use vocab::{build_vocabulary, BigramValue, FeatureVocabulary};

/// The fourteen feature groups that feature-subset search ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    SentenceDistance,
    DependencyDistance,
    ContextTypeFrequency,
    IsContextClosest,
    EvtFirstPerson,
    EvtPastTense,
    EvtPresentTense,
    CtxFirstPerson,
    CtxPastTense,
    CtxPresentTense,
    EvtSpanningBigrams,
    EvtNegated,
    CtxSpanningBigrams,
    CtxNegated,
}

impl FeatureGroup {
    pub const COUNT: usize = 14;

    pub const ALL: [FeatureGroup; 14] = [
        FeatureGroup::SentenceDistance,
        FeatureGroup::DependencyDistance,
        FeatureGroup::ContextTypeFrequency,
        FeatureGroup::IsContextClosest,
        FeatureGroup::EvtFirstPerson,
        FeatureGroup::EvtPastTense,
        FeatureGroup::EvtPresentTense,
        FeatureGroup::CtxFirstPerson,
        FeatureGroup::CtxPastTense,
        FeatureGroup::CtxPresentTense,
        FeatureGroup::EvtSpanningBigrams,
        FeatureGroup::EvtNegated,
        FeatureGroup::CtxSpanningBigrams,
        FeatureGroup::CtxNegated,
    ];

    /// Groups backing the twelve dense columns, in column order.
    pub const DENSE: [FeatureGroup; 12] = [
        FeatureGroup::SentenceDistance,
        FeatureGroup::DependencyDistance,
        FeatureGroup::ContextTypeFrequency,
        FeatureGroup::IsContextClosest,
        FeatureGroup::EvtFirstPerson,
        FeatureGroup::EvtPastTense,
        FeatureGroup::EvtPresentTense,
        FeatureGroup::CtxFirstPerson,
        FeatureGroup::CtxPastTense,
        FeatureGroup::CtxPresentTense,
        FeatureGroup::EvtNegated,
        FeatureGroup::CtxNegated,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::SentenceDistance => "sentence_distance",
            FeatureGroup::DependencyDistance => "dependency_distance",
            FeatureGroup::ContextTypeFrequency => "context_type_frequency",
            FeatureGroup::IsContextClosest => "is_context_closest",
            FeatureGroup::EvtFirstPerson => "evt_first_person",
            FeatureGroup::EvtPastTense => "evt_past_tense",
            FeatureGroup::EvtPresentTense => "evt_present_tense",
            FeatureGroup::CtxFirstPerson => "ctx_first_person",
            FeatureGroup::CtxPastTense => "ctx_past_tense",
            FeatureGroup::CtxPresentTense => "ctx_present_tense",
            FeatureGroup::EvtSpanningBigrams => "evt_spanning_bigrams",
            FeatureGroup::EvtNegated => "evt_negated",
            FeatureGroup::CtxSpanningBigrams => "ctx_spanning_bigrams",
            FeatureGroup::CtxNegated => "ctx_negated",
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown feature group {s:?}")))
    }
}

/// A set of feature groups as a 14-bit mask (bit i = `FeatureGroup::ALL[i]`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureSet(u16);

impl FeatureSet {
    pub const FULL: FeatureSet = FeatureSet((1 << FeatureGroup::COUNT) - 1);

    pub fn from_mask(mask: u16) -> Self {
        FeatureSet(mask & Self::FULL.0)
    }

    pub fn mask(self) -> u16 {
        self.0
    }

    pub fn empty() -> Self {
        FeatureSet(0)
    }

    pub fn contains(self, group: FeatureGroup) -> bool {
        self.0 & (1 << group.index()) != 0
    }

    pub fn with(self, group: FeatureGroup) -> Self {
        FeatureSet(self.0 | (1 << group.index()))
    }

    pub fn without(self, group: FeatureGroup) -> Self {
        FeatureSet(self.0 & !(1 << group.index()))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn groups(self) -> impl Iterator<Item = FeatureGroup> {
        FeatureGroup::ALL.into_iter().filter(move |g| self.contains(*g))
    }

    pub fn names(self) -> Vec<&'static str> {
        self.groups().map(FeatureGroup::name).collect()
    }
}

impl FromIterator<FeatureGroup> for FeatureSet {
    fn from_iter<I: IntoIterator<Item = FeatureGroup>>(iter: I) -> Self {
        iter.into_iter().fold(FeatureSet::empty(), FeatureSet::with)
    }
}

// ---------------------------------------------------------------------------
// Phi features

pub const PAST_TENSE_TAGS: [&str; 2] = ["VBD", "VBN"];
pub const PRESENT_TENSE_TAGS: [&str; 2] = ["VBP", "VBZ"];
pub const FIRST_PERSON_TAGS: [&str; 2] = ["PRP", "PRP$"];
pub const FIRST_PERSON_WORDS: [&str; 7] = ["i", "we", "us", "our", "my", "ours", "mine"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Phi {
    pub first_person: bool,
    pub past_tense: bool,
    pub present_tense: bool,
}

pub fn phi_features(sentence: &Sentence) -> Phi {
    let mut phi = Phi::default();
    for tok in &sentence.tokens {
        let pos = tok.pos.as_str();
        phi.past_tense |= PAST_TENSE_TAGS.contains(&pos);
        phi.present_tense |= PRESENT_TENSE_TAGS.contains(&pos);
        if FIRST_PERSON_TAGS.contains(&pos) {
            let lower = tok.word.to_lowercase();
            phi.first_person |= FIRST_PERSON_WORDS.contains(&lower.as_str());
        }
    }
    phi
}

// ---------------------------------------------------------------------------
// Pair features

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairFeatureVector {
    pub sentence_distance: u32,
    pub dependency_distance: u32,
    pub context_type_frequency: u32,
    pub is_context_closest: bool,
    pub evt_first_person: bool,
    pub evt_past_tense: bool,
    pub evt_present_tense: bool,
    pub ctx_first_person: bool,
    pub ctx_past_tense: bool,
    pub ctx_present_tense: bool,
    pub evt_negated: bool,
    pub ctx_negated: bool,
    #[serde(skip)]
    pub evt_bigrams: BigramBag,
    #[serde(skip)]
    pub ctx_bigrams: BigramBag,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl PairFeatureVector {
    pub const DENSE_LEN: usize = 12;

    /// Dense part in column order (see [`FeatureGroup::DENSE`]).
    pub fn dense(&self) -> [f64; Self::DENSE_LEN] {
        let b = |v: bool| if v { 1.0 } else { 0.0 };
        [
            self.sentence_distance as f64,
            self.dependency_distance as f64,
            self.context_type_frequency as f64,
            b(self.is_context_closest),
            b(self.evt_first_person),
            b(self.evt_past_tense),
            b(self.evt_present_tense),
            b(self.ctx_first_person),
            b(self.ctx_past_tense),
            b(self.ctx_present_tense),
            b(self.evt_negated),
            b(self.ctx_negated),
        ]
    }
}

pub fn sentence_distance(pair: MentionPair, doc: &Document) -> u32 {
    let e = pair.event(doc).sentence;
    let c = pair.context(doc).sentence;
    e.abs_diff(c) as u32
}

/// Number of context mentions in the document sharing the pair's grounding ID.
pub fn context_type_frequency(pair: MentionPair, doc: &Document) -> u32 {
    let g = &pair.context(doc).grounding_id;
    doc.contexts.iter().filter(|c| &c.grounding_id == g).count() as u32
}

/// Per-document precomputation shared by every pair of the document.
pub struct FeatureExtractor<'d> {
    doc: &'d Document,
    graphs: Vec<SentenceGraph>,
    phi: Vec<Phi>,
    event_heads: Vec<usize>,
    context_heads: Vec<usize>,
    offsets: Vec<usize>,
    frequency: HashMap<&'d str, u32>,
}

impl<'d> FeatureExtractor<'d> {
    pub fn new(doc: &'d Document) -> Self {
        let graphs: Vec<SentenceGraph> = doc.sentences.iter().map(SentenceGraph::new).collect();
        let event_heads = doc
            .events
            .iter()
            .map(|e| graphs[e.sentence].head_token(e.span()))
            .collect();
        let context_heads = doc
            .contexts
            .iter()
            .map(|c| graphs[c.sentence].head_token(c.span()))
            .collect();
        let mut frequency = HashMap::new();
        for c in &doc.contexts {
            *frequency.entry(c.grounding_id.as_str()).or_insert(0) += 1;
        }
        FeatureExtractor {
            doc,
            phi: doc.sentences.iter().map(phi_features).collect(),
            graphs,
            event_heads,
            context_heads,
            offsets: doc.sentence_offsets(),
            frequency,
        }
    }

    pub fn document(&self) -> &'d Document {
        self.doc
    }

    pub fn dependency_distance(&self, pair: MentionPair) -> graph::DependencyDistance {
        let e = pair.event(self.doc);
        let c = pair.context(self.doc);
        graph::dependency_distance_between(
            &self.graphs[e.sentence],
            self.event_heads[pair.event],
            &self.graphs[c.sentence],
            self.context_heads[pair.context],
            e.sentence == c.sentence,
        )
    }

    fn closeness_key(&self, event: usize, context: usize) -> (usize, usize) {
        let e = &self.doc.events[event];
        let c = &self.doc.contexts[context];
        let sd = e.sentence.abs_diff(c.sentence);
        let eo = self.offsets[e.sentence] + e.start;
        let co = self.offsets[c.sentence] + c.start;
        (sd, eo.abs_diff(co))
    }

    /// 1 iff no context mention (of any type) is strictly closer to the event,
    /// comparing sentence distance first and document token offset second.
    pub fn is_context_closest(&self, pair: MentionPair) -> bool {
        let mine = self.closeness_key(pair.event, pair.context);
        (0..self.doc.contexts.len()).all(|ci| self.closeness_key(pair.event, ci) >= mine)
    }

    pub fn extract(&self, pair: MentionPair) -> PairFeatureVector {
        let doc = self.doc;
        let e = pair.event(doc);
        let c = pair.context(doc);
        let dep = self.dependency_distance(pair);
        let mut warnings = Vec::new();
        if !dep.connected {
            warnings.push(format!(
                "event {} and context {} heads are disconnected; dependency distance set to {}",
                e.id, c.id, dep.edges
            ));
        }
        let (es, cs) = (&doc.sentences[e.sentence], &doc.sentences[c.sentence]);
        let (eh, ch) = (self.event_heads[pair.event], self.context_heads[pair.context]);
        let (ep, cp) = (self.phi[e.sentence], self.phi[c.sentence]);
        PairFeatureVector {
            sentence_distance: e.sentence.abs_diff(c.sentence) as u32,
            dependency_distance: dep.edges as u32,
            context_type_frequency: self.frequency[c.grounding_id.as_str()],
            is_context_closest: self.is_context_closest(pair),
            evt_first_person: ep.first_person,
            evt_past_tense: ep.past_tense,
            evt_present_tense: ep.present_tense,
            ctx_first_person: cp.first_person,
            ctx_past_tense: cp.past_tense,
            ctx_present_tense: cp.present_tense,
            evt_negated: self.graphs[e.sentence].is_negated(eh, es),
            ctx_negated: self.graphs[c.sentence].is_negated(ch, cs),
            evt_bigrams: self.graphs[e.sentence].spanning_bigrams(eh, es),
            ctx_bigrams: self.graphs[c.sentence].spanning_bigrams(ch, cs),
            warnings,
        }
    }
}

/// Convenience wrapper; prefer [`FeatureExtractor`] when extracting many
/// pairs from one document.
pub fn extract_pair_features(pair: MentionPair, doc: &Document) -> PairFeatureVector {
    FeatureExtractor::new(doc).extract(pair)
}

pub fn dependency_distance(pair: MentionPair, doc: &Document) -> graph::DependencyDistance {
    FeatureExtractor::new(doc).dependency_distance(pair)
}

pub fn is_context_closest(pair: MentionPair, doc: &Document) -> bool {
    FeatureExtractor::new(doc).is_context_closest(pair)
}

fn bag_to_json(bag: &BigramBag) -> serde_json::Map<String, serde_json::Value> {
    bag.iter()
        .map(|((a, b), n)| (format!("{a}|{b}"), serde_json::Value::from(*n)))
        .collect()
}

/// One feature-dump JSON-lines record.
pub fn pair_json_line(doc: &Document, pair: MentionPair, features: &PairFeatureVector) -> String {
    let mut obj = match serde_json::to_value(features).expect("features serialize") {
        serde_json::Value::Object(map) => map,
        _ => unreachable!(),
    };
    obj.insert("paper_id".into(), doc.paper_id.clone().into());
    obj.insert("event_id".into(), pair.event(doc).id.clone().into());
    obj.insert("context_id".into(), pair.context(doc).id.clone().into());
    obj.insert(
        "grounding_id".into(),
        pair.context(doc).grounding_id.clone().into(),
    );
    obj.insert("evt_bigrams".into(), bag_to_json(&features.evt_bigrams).into());
    obj.insert("ctx_bigrams".into(), bag_to_json(&features.ctx_bigrams).into());
    serde_json::Value::Object(obj).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::{edge, small_doc, tok};
    use crate::corpus::{ContextCategory, ContextMention, EventMention};

    fn words(spec: &[(&str, &str)]) -> Sentence {
        Sentence {
            tokens: spec.iter().map(|(w, p)| tok(w, p)).collect(),
            edges: vec![],
            root: 0,
        }
    }

    #[test]
    fn exactly_fourteen_groups() {
        assert_eq!(FeatureGroup::ALL.len(), 14);
        assert_eq!(FeatureSet::FULL.len(), 14);
        for (i, g) in FeatureGroup::ALL.iter().enumerate() {
            assert_eq!(g.index(), i);
            assert_eq!(g.name().parse::<FeatureGroup>().unwrap(), *g);
        }
    }

    #[test]
    fn phi_past_tense_from_vbd() {
        let s = words(&[("cells", "NNS"), ("were", "VBD"), ("transfected", "VBN")]);
        assert!(phi_features(&s).past_tense);
    }

    #[test]
    fn phi_nouns_only() {
        let s = words(&[("cells", "NNS"), ("lung", "NN")]);
        assert_eq!(phi_features(&s), Phi::default());
    }

    #[test]
    fn phi_first_person_present() {
        let s = words(&[("We", "PRP"), ("show", "VBP"), ("that", "IN")]);
        assert_eq!(
            phi_features(&s),
            Phi {
                first_person: true,
                past_tense: false,
                present_tense: true
            }
        );
        // pronoun outside the lexicon, or lexicon word with another tag
        let s = words(&[("They", "PRP"), ("we", "NN")]);
        assert!(!phi_features(&s).first_person);
    }

    fn ctx(id: &str, sentence: usize, start: usize, grounding: &str) -> ContextMention {
        ContextMention {
            id: id.into(),
            sentence,
            start,
            end: start + 1,
            grounding_id: grounding.into(),
            category: ContextCategory::Species,
        }
    }

    fn three_sentence_doc() -> Document {
        let mut doc = small_doc();
        doc.sentences.push(doc.sentences[0].clone());
        doc
    }

    #[test]
    fn sentence_distance_cases() {
        let mut doc = three_sentence_doc();
        doc.contexts = vec![ctx("C1", 0, 0, "g"), ctx("C2", 1, 0, "g"), ctx("C3", 2, 0, "h")];
        let p = |c| MentionPair { event: 0, context: c };
        assert_eq!(sentence_distance(p(0), &doc), 0);
        assert_eq!(sentence_distance(p(1), &doc), 1);
        assert_eq!(sentence_distance(p(2), &doc), 2);
    }

    #[test]
    fn frequency_counts_only_same_grounding() {
        let mut doc = three_sentence_doc();
        doc.contexts = vec![ctx("C1", 0, 0, "g"), ctx("C2", 1, 0, "g"), ctx("C3", 2, 0, "g")];
        let p = MentionPair { event: 0, context: 1 };
        assert_eq!(context_type_frequency(p, &doc), 3);
        doc.contexts.push(ctx("C4", 2, 1, "h"));
        assert_eq!(context_type_frequency(p, &doc), 3);
        assert_eq!(context_type_frequency(MentionPair { event: 0, context: 3 }, &doc), 1);
    }

    #[test]
    fn closest_rules() {
        let mut doc = three_sentence_doc();
        doc.contexts = vec![ctx("C1", 0, 0, "g")];
        assert!(is_context_closest(MentionPair { event: 0, context: 0 }, &doc));

        // event in sentence 1 at token 1; mentions in sentence 0 and 2 at token 1
        doc.events[0] = EventMention {
            id: "E1".into(),
            sentence: 1,
            start: 1,
            end: 2,
        };
        doc.contexts = vec![ctx("C1", 0, 1, "g"), ctx("C2", 2, 1, "h"), ctx("C3", 1, 0, "h")];
        let closest: Vec<bool> = (0..3)
            .map(|c| is_context_closest(MentionPair { event: 0, context: c }, &doc))
            .collect();
        assert_eq!(closest, vec![false, false, true]);

        doc.contexts.pop();
        // sentence lengths are 3, so document offsets are 1, 4 (event), 7
        let closest: Vec<bool> = (0..2)
            .map(|c| is_context_closest(MentionPair { event: 0, context: c }, &doc))
            .collect();
        assert_eq!(closest, vec![true, true]);
    }

    #[test]
    fn same_sentence_sole_mention_composition() {
        let mut doc = small_doc();
        doc.contexts[0].sentence = 0;
        let f = extract_pair_features(MentionPair { event: 0, context: 0 }, &doc);
        assert_eq!(f.sentence_distance, 0);
        assert_eq!(f.context_type_frequency, 1);
        assert!(f.is_context_closest);
        assert!(f.warnings.is_empty());
    }

    #[test]
    fn two_sentences_apart_has_positive_dependency_distance() {
        let mut doc = three_sentence_doc();
        doc.contexts[0].sentence = 2;
        let f = extract_pair_features(MentionPair { event: 0, context: 0 }, &doc);
        assert_eq!(f.sentence_distance, 2);
        assert!(f.dependency_distance >= 1);
    }

    /// Hand-computed vector for the fixture document: event "transfected"
    /// (root of sentence 0) and context "Human" (amod child of "cells",
    /// itself nsubj child of the root "grow" in sentence 1).
    #[test]
    fn toy_pair_matches_hand_computation() {
        let mut doc = small_doc();
        doc.sentences[1].edges.push(edge(2, 0, "neg"));
        let f = extract_pair_features(MentionPair { event: 0, context: 0 }, &doc);
        assert_eq!(f.sentence_distance, 1);
        // depth(transfected) = 0, root edge, depth(Human) = 1 via the neg edge
        assert_eq!(f.dependency_distance, 2);
        assert_eq!(f.context_type_frequency, 1);
        assert!(f.is_context_closest);
        assert!(!f.evt_first_person && f.evt_past_tense && !f.evt_present_tense);
        assert!(!f.ctx_first_person && !f.ctx_past_tense && f.ctx_present_tense);
        assert!(!f.evt_negated);
        assert!(f.ctx_negated);
        // from transfected: nsubjpass->(none beyond Cells), auxpass->(none)
        assert!(f.evt_bigrams.is_empty());
        // from Human: amod->cells->nsubj->grow, neg->grow->nsubj->cells
        let expected: BigramBag = [
            (("amod".to_string(), "nsubj".to_string()), 1),
            (("neg".to_string(), "nsubj".to_string()), 1),
        ]
        .into_iter()
        .collect();
        assert_eq!(f.ctx_bigrams, expected);
    }

    #[test]
    fn dump_line_formats_bigrams() {
        let doc = small_doc();
        let pair = MentionPair { event: 0, context: 0 };
        let f = extract_pair_features(pair, &doc);
        let v: serde_json::Value = serde_json::from_str(&pair_json_line(&doc, pair, &f)).unwrap();
        assert_eq!(v["ctx_bigrams"]["amod|nsubj"], 1);
        assert_eq!(v["sentence_distance"], 1);
    }
}
