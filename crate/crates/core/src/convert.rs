//! Converter from a tabular per-paper annotation layout to the canonical
//! JSON corpus.
//!
//! Each paper is a directory named after its paper id holding:
//!
//! - `sentences.txt`: one sentence per line, tokens separated by spaces
//! - `pos.txt`: one line of POS tags per sentence
//! - `deps.txt`: one line per sentence of `head-dependent-label` triples
//! - `events.tsv`: `event_id  sentence  start-end`
//! - `contexts.tsv`: `mention_id  sentence  start-end  grounding_id  category`
//! - `gold.tsv`: `event_id  context_mention_id`
//!
//! Token intervals are half-open. Rows that cannot be converted are dropped
//! and reported; nothing is repaired.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::corpus::{
    ContextMention, Corpus, DependencyEdge, Document, EventMention, GoldAssociation, Issue,
    Sentence, Token,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Conversion {
    pub corpus: Corpus,
    pub discrepancies: Vec<Issue>,
}

struct Paper<'a> {
    id: &'a str,
    issues: &'a mut Vec<Issue>,
}

impl Paper<'_> {
    fn report(&mut self, file: &str, line: usize, message: impl std::fmt::Display) {
        self.issues.push(Issue {
            paper_id: self.id.to_string(),
            message: format!("{file}:{line}: {message}"),
        });
    }
}

fn read_lines(dir: &Path, name: &str, required: bool) -> Result<Vec<String>> {
    let path = dir.join(name);
    match fs::read_to_string(&path) {
        Ok(text) => Ok(text.lines().map(str::to_string).collect()),
        Err(e) if !required && e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(Error::io(path, e)),
    }
}

fn parse_interval(s: &str) -> Option<(usize, usize)> {
    let (a, b) = s.split_once('-')?;
    let (start, end) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
    (start < end).then_some((start, end))
}

fn sentences(dir: &Path, paper: &mut Paper) -> Result<Vec<Sentence>> {
    let words = read_lines(dir, "sentences.txt", true)?;
    let tags = read_lines(dir, "pos.txt", true)?;
    let deps = read_lines(dir, "deps.txt", true)?;
    if tags.len() != words.len() || deps.len() != words.len() {
        paper.report(
            "pos.txt/deps.txt",
            0,
            format!(
                "{} sentences, {} POS lines, {} dependency lines",
                words.len(),
                tags.len(),
                deps.len()
            ),
        );
    }
    let mut out = Vec::with_capacity(words.len());
    for (i, line) in words.iter().enumerate() {
        let ws: Vec<&str> = line.split_whitespace().collect();
        let ps: Vec<&str> = tags.get(i).map_or(Vec::new(), |l| l.split_whitespace().collect());
        if ps.len() != ws.len() {
            paper.report("pos.txt", i + 1, format!("{} tags for {} tokens", ps.len(), ws.len()));
        }
        let tokens: Vec<Token> = ws
            .iter()
            .enumerate()
            .map(|(k, w)| Token {
                word: w.to_string(),
                pos: ps.get(k).map_or(String::new(), |p| p.to_string()),
            })
            .collect();
        let mut edges = Vec::new();
        for triple in deps.get(i).map_or("", String::as_str).split_whitespace() {
            let mut parts = triple.splitn(3, '-');
            let parsed = match (parts.next(), parts.next(), parts.next()) {
                (Some(h), Some(d), Some(l)) => h.parse().ok().zip(d.parse().ok()).map(|(h, d)| (h, d, l)),
                _ => None,
            };
            match parsed {
                Some((head, dependent, label)) if head < tokens.len() && dependent < tokens.len() => {
                    edges.push(DependencyEdge {
                        head,
                        dependent,
                        label: label.to_string(),
                    })
                }
                _ => paper.report("deps.txt", i + 1, format!("unusable dependency {triple:?}")),
            }
        }
        let has_head: BTreeSet<usize> = edges.iter().map(|e| e.dependent).collect();
        let roots: Vec<usize> = (0..tokens.len()).filter(|t| !has_head.contains(t)).collect();
        if roots.len() != 1 {
            paper.report("deps.txt", i + 1, format!("{} tokens without a head", roots.len()));
        }
        out.push(Sentence {
            tokens,
            edges,
            root: roots.first().copied().unwrap_or(0),
        });
    }
    Ok(out)
}

fn fields(line: &str) -> Vec<&str> {
    line.split('\t').map(str::trim).collect()
}

fn in_bounds(sentences: &[Sentence], s: usize, end: usize) -> bool {
    sentences.get(s).is_some_and(|x| end <= x.len())
}

/// Converts one paper directory.
pub fn convert_paper(dir: &Path, issues: &mut Vec<Issue>) -> Result<Document> {
    let id = dir
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Config(format!("bad paper directory {}", dir.display())))?
        .to_string();
    let mut paper = Paper { id: &id, issues };
    let sentences = sentences(dir, &mut paper)?;

    let mut events = Vec::new();
    for (n, line) in read_lines(dir, "events.tsv", true)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match fields(line)[..] {
            [eid, s, iv] => match (s.parse::<usize>(), parse_interval(iv)) {
                (Ok(s), Some((start, end))) if in_bounds(&sentences, s, end) => {
                    events.push(EventMention {
                        id: eid.to_string(),
                        sentence: s,
                        start,
                        end,
                    })
                }
                _ => paper.report("events.tsv", n + 1, format!("bad location {s}:{iv}")),
            },
            _ => paper.report("events.tsv", n + 1, "expected 3 columns"),
        }
    }

    let mut contexts = Vec::new();
    for (n, line) in read_lines(dir, "contexts.tsv", true)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match fields(line)[..] {
            [cid, s, iv, grounding, category] => {
                let Ok(category) = category.parse() else {
                    paper.report("contexts.tsv", n + 1, format!("unknown category {category:?}"));
                    continue;
                };
                match (s.parse::<usize>(), parse_interval(iv)) {
                    (Ok(s), Some((start, end))) if in_bounds(&sentences, s, end) => {
                        contexts.push(ContextMention {
                            id: cid.to_string(),
                            sentence: s,
                            start,
                            end,
                            grounding_id: grounding.to_string(),
                            category,
                        })
                    }
                    _ => paper.report("contexts.tsv", n + 1, format!("bad location {s}:{iv}")),
                }
            }
            _ => paper.report("contexts.tsv", n + 1, "expected 5 columns"),
        }
    }

    let event_ids: BTreeSet<&str> = events.iter().map(|e| e.id.as_str()).collect();
    let context_ids: BTreeSet<&str> = contexts.iter().map(|c| c.id.as_str()).collect();
    let mut gold = Vec::new();
    for (n, line) in read_lines(dir, "gold.tsv", false)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match fields(line)[..] {
            [e, c] if event_ids.contains(e) && context_ids.contains(c) => gold.push(GoldAssociation {
                event_id: e.to_string(),
                context_mention_id: c.to_string(),
            }),
            [e, c] => paper.report("gold.tsv", n + 1, format!("unknown mention in ({e}, {c})")),
            _ => paper.report("gold.tsv", n + 1, "expected 2 columns"),
        }
    }

    Ok(Document {
        paper_id: id,
        sentences,
        events,
        contexts,
        gold,
    })
}

/// Converts every subdirectory of `root`, in name order.
pub fn convert_tree(root: &Path) -> Result<Conversion> {
    let mut dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let p = entry.map_err(|e| Error::io(root, e))?.path();
        if p.is_dir() {
            dirs.push(p);
        }
    }
    dirs.sort();
    let mut out = Conversion::default();
    for d in dirs {
        let doc = convert_paper(&d, &mut out.discrepancies)?;
        out.corpus.documents.push(doc);
    }
    Ok(out)
}
