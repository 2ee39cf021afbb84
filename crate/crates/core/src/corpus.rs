//! Annotated-document data model, corpus I/O and validation.
//!
//! Documents arrive with pre-parsed linguistic annotations (tokens, POS tags,
//! dependency edges); nothing here runs a tagger or parser.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub word: String,
    pub pos: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyEdge {
    pub head: usize,
    pub dependent: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    pub edges: Vec<DependencyEdge>,
    pub root: usize,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Half-open token interval `[start, end)` inside one sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(sentence: usize, start: usize, end: usize) -> Self {
        Span {
            sentence,
            start,
            end,
        }
    }

    pub fn tokens(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.sentence == other.sentence && self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventMention {
    pub id: String,
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
}

impl EventMention {
    pub fn span(&self) -> Span {
        Span::new(self.sentence, self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ContextCategory {
    Species,
    Organ,
    TissueType,
    CellLine,
    CellularComponent,
}

impl ContextCategory {
    pub const ALL: [ContextCategory; 5] = [
        ContextCategory::Species,
        ContextCategory::Organ,
        ContextCategory::TissueType,
        ContextCategory::CellLine,
        ContextCategory::CellularComponent,
    ];

    /// The knowledge bases the association experiments are restricted to.
    pub const RESTRICTED: [ContextCategory; 3] = [
        ContextCategory::Species,
        ContextCategory::TissueType,
        ContextCategory::CellLine,
    ];

    pub fn is_restricted(self) -> bool {
        Self::RESTRICTED.contains(&self)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ContextCategory::Species => "Species",
            ContextCategory::Organ => "Organ",
            ContextCategory::TissueType => "TissueType",
            ContextCategory::CellLine => "CellLine",
            ContextCategory::CellularComponent => "CellularComponent",
        }
    }
}

impl fmt::Display for ContextCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ContextCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Domain(format!("unknown context category {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextMention {
    pub id: String,
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
    pub grounding_id: String,
    pub category: ContextCategory,
}

impl ContextMention {
    pub fn span(&self) -> Span {
        Span::new(self.sentence, self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldAssociation {
    pub event_id: String,
    pub context_mention_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub paper_id: String,
    pub sentences: Vec<Sentence>,
    pub events: Vec<EventMention>,
    pub contexts: Vec<ContextMention>,
    pub gold: Vec<GoldAssociation>,
}

impl Document {
    pub fn event(&self, id: &str) -> Option<&EventMention> {
        self.events.iter().find(|e| e.id == id)
    }

    pub fn context(&self, id: &str) -> Option<&ContextMention> {
        self.contexts.iter().find(|c| c.id == id)
    }

    /// Distinct grounding IDs, lexicographically ordered.
    pub fn grounding_ids(&self) -> BTreeSet<&str> {
        self.contexts.iter().map(|c| c.grounding_id.as_str()).collect()
    }

    /// Number of tokens preceding each sentence; used for document-level
    /// token offsets.
    pub fn sentence_offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.sentences
            .iter()
            .map(|s| {
                let here = acc;
                acc += s.len();
                here
            })
            .collect()
    }

    /// Copy of the document keeping only context mentions whose category is
    /// in `keep`. Gold links to dropped mentions are dropped with them.
    pub fn retain_categories(&self, keep: &[ContextCategory]) -> Document {
        let contexts: Vec<ContextMention> = self
            .contexts
            .iter()
            .filter(|c| keep.contains(&c.category))
            .cloned()
            .collect();
        let kept: HashSet<&str> = contexts.iter().map(|c| c.id.as_str()).collect();
        let gold = self
            .gold
            .iter()
            .filter(|g| kept.contains(g.context_mention_id.as_str()))
            .cloned()
            .collect();
        Document {
            paper_id: self.paper_id.clone(),
            sentences: self.sentences.clone(),
            events: self.events.clone(),
            contexts,
            gold,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<Document>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Self {
        Corpus { documents }
    }

    pub fn document(&self, paper_id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.paper_id == paper_id)
    }

    pub fn paper_ids(&self) -> Vec<&str> {
        self.documents.iter().map(|d| d.paper_id.as_str()).collect()
    }

    /// Applies [`Document::retain_categories`] to every document.
    pub fn retain_categories(&self, keep: &[ContextCategory]) -> Corpus {
        Corpus::new(
            self.documents
                .iter()
                .map(|d| d.retain_categories(keep))
                .collect(),
        )
    }
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub paper_id: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.paper_id, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.errors.is_empty() && self.warnings.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        !self.errors.is_empty()
    }
}

/// Penn Treebank tags, including the punctuation and bracket tags emitted by
/// common biomedical pipelines.
pub const PENN_TAGS: &[&str] = &[
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN", "NNS", "NNP",
    "NNPS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR", "RBS", "RP", "SYM", "TO", "UH", "VB",
    "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT", "WP", "WP$", "WRB", ".", ",", ":", "``", "''",
    "\"", "#", "$", "-LRB-", "-RRB-", "-LSB-", "-RSB-", "-LCB-", "-RCB-", "HYPH", "NFP",
    "AFX", "ADD",
];

struct Checker<'a> {
    paper_id: &'a str,
    report: &'a mut ValidationReport,
}

impl Checker<'_> {
    fn error(&mut self, message: String) {
        self.report.errors.push(Issue {
            paper_id: self.paper_id.to_string(),
            message,
        });
    }

    fn warn(&mut self, message: String) {
        self.report.warnings.push(Issue {
            paper_id: self.paper_id.to_string(),
            message,
        });
    }

    fn span(&mut self, kind: &str, id: &str, span: Span, doc: &Document) {
        if span.start >= span.end {
            self.error(format!(
                "{kind} {id}: degenerate span [{}, {})",
                span.start, span.end
            ));
            return;
        }
        match doc.sentences.get(span.sentence) {
            None => self.error(format!(
                "{kind} {id}: sentence index {} out of range ({} sentences)",
                span.sentence,
                doc.sentences.len()
            )),
            Some(s) if span.end > s.len() => self.error(format!(
                "{kind} {id}: span [{}, {}) exceeds sentence {} length {}",
                span.start,
                span.end,
                span.sentence,
                s.len()
            )),
            Some(_) => {}
        }
    }
}

fn validate_document(doc: &Document, report: &mut ValidationReport) {
    let mut check = Checker {
        paper_id: &doc.paper_id,
        report,
    };
    if doc.paper_id.trim().is_empty() {
        check.error("empty paper_id".into());
    }

    let pos_known: HashSet<&str> = PENN_TAGS.iter().copied().collect();
    let mut unknown_tags: BTreeSet<&str> = BTreeSet::new();
    for (si, sentence) in doc.sentences.iter().enumerate() {
        let n = sentence.len();
        if n == 0 {
            check.error(format!("sentence {si} has no tokens"));
            continue;
        }
        for (ti, tok) in sentence.tokens.iter().enumerate() {
            if tok.word.is_empty() {
                check.error(format!("sentence {si} token {ti}: empty word"));
            }
            if tok.pos.is_empty() {
                check.error(format!("sentence {si} token {ti}: empty POS tag"));
            } else if !pos_known.contains(tok.pos.as_str()) {
                unknown_tags.insert(tok.pos.as_str());
            }
        }
        if sentence.root >= n {
            check.error(format!(
                "sentence {si}: root {} out of range ({n} tokens)",
                sentence.root
            ));
        }
        let mut seen = HashSet::new();
        for edge in &sentence.edges {
            if edge.head >= n || edge.dependent >= n {
                check.error(format!(
                    "sentence {si}: edge {}->{} out of range ({n} tokens)",
                    edge.head, edge.dependent
                ));
                continue;
            }
            if edge.head == edge.dependent {
                check.error(format!("sentence {si}: self-loop on token {}", edge.head));
                continue;
            }
            let key = (edge.head.min(edge.dependent), edge.head.max(edge.dependent));
            if !seen.insert(key) {
                check.error(format!(
                    "sentence {si}: duplicate edge between tokens {} and {}",
                    key.0, key.1
                ));
            }
        }
    }
    if !unknown_tags.is_empty() {
        let tags: Vec<&str> = unknown_tags.into_iter().collect();
        check.warn(format!("unknown POS tags: {}", tags.join(", ")));
    }

    let mut event_ids = HashSet::new();
    for event in &doc.events {
        if !event_ids.insert(event.id.as_str()) {
            check.error(format!("duplicate event id {}", event.id));
        }
        check.span("event", &event.id, event.span(), doc);
    }
    let mut context_ids = HashSet::new();
    let mut outside: BTreeMap<ContextCategory, usize> = BTreeMap::new();
    for ctx in &doc.contexts {
        if !context_ids.insert(ctx.id.as_str()) {
            check.error(format!("duplicate context mention id {}", ctx.id));
        }
        if event_ids.contains(ctx.id.as_str()) {
            check.error(format!("id {} used by both an event and a context", ctx.id));
        }
        if ctx.grounding_id.is_empty() {
            check.error(format!("context {}: empty grounding_id", ctx.id));
        }
        if !ctx.category.is_restricted() {
            *outside.entry(ctx.category).or_default() += 1;
        }
        check.span("context", &ctx.id, ctx.span(), doc);
    }
    for (category, count) in outside {
        check.warn(format!(
            "{count} context mention(s) of category {category} (outside Species/TissueType/CellLine)"
        ));
    }

    for link in &doc.gold {
        if !event_ids.contains(link.event_id.as_str()) {
            check.error(format!(
                "gold association references missing event {}",
                link.event_id
            ));
        }
        if !context_ids.contains(link.context_mention_id.as_str()) {
            check.error(format!(
                "gold association references missing context mention {}",
                link.context_mention_id
            ));
        }
    }
}

/// Checks every corpus invariant. Never fails; problems are collected in the
/// returned report.
pub fn validate_corpus(corpus: &Corpus) -> ValidationReport {
    let mut report = ValidationReport::default();
    if corpus.documents.is_empty() {
        report.errors.push(Issue {
            paper_id: String::new(),
            message: "empty corpus".into(),
        });
    }
    let mut ids = HashSet::new();
    for doc in &corpus.documents {
        if !ids.insert(doc.paper_id.as_str()) {
            report.errors.push(Issue {
                paper_id: doc.paper_id.clone(),
                message: "duplicate paper_id".into(),
            });
        }
        validate_document(doc, &mut report);
    }
    report
}

// ---------------------------------------------------------------------------
// I/O

/// Reads and deserializes a JSON file, mapping failures to positioned parse
/// errors.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_error(path, e))
}

pub(crate) fn parse_error(path: &Path, err: serde_json::Error) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: err.line(),
        column: err.column(),
        message: err.to_string(),
    }
}

/// Parses one corpus file: either a single document object or an array of
/// documents.
pub fn parse_documents(path: &Path, text: &str) -> Result<Vec<Document>> {
    if text.trim_start().starts_with('[') {
        serde_json::from_str(text).map_err(|e| parse_error(path, e))
    } else {
        serde_json::from_str::<Document>(text)
            .map(|d| vec![d])
            .map_err(|e| parse_error(path, e))
    }
}

fn corpus_files(path: &Path) -> Result<Vec<PathBuf>> {
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if meta.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(path).map_err(|e| Error::io(path, e))? {
        let entry = entry.map_err(|e| Error::io(path, e))?;
        let p = entry.path();
        if p.is_file() && p.extension().is_some_and(|ext| ext == "json") {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

/// Reads a corpus without validating it.
pub fn read_corpus(path: &Path) -> Result<Corpus> {
    let mut documents = Vec::new();
    for file in corpus_files(path)? {
        let text = fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
        documents.extend(parse_documents(&file, &text)?);
    }
    Ok(Corpus::new(documents))
}

/// Reads and validates a corpus from a directory of per-paper JSON files or
/// a single JSON file.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let corpus = read_corpus(path)?;
    let report = validate_corpus(&corpus);
    if let Some(first) = report.errors.first() {
        let more = report.errors.len() - 1;
        let suffix = if more > 0 {
            format!(" (and {more} more)")
        } else {
            String::new()
        };
        return Err(Error::Validation(format!("{first}{suffix}")));
    }
    Ok(corpus)
}

pub fn document_to_json(doc: &Document) -> Result<String> {
    Ok(serde_json::to_string_pretty(doc)?)
}

/// Writes one `<paper_id>.json` file per document into `dir`.
pub fn write_corpus(dir: &Path, corpus: &Corpus) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for doc in &corpus.documents {
        let path = dir.join(format!("{}.json", doc.paper_id));
        let mut text = document_to_json(doc)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
