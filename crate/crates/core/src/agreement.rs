//! Inter-annotator agreement (Fleiss' kappa per context type) and span
//! overlap between two mention sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::{read_json, Corpus, Span};
use crate::error::{Error, Result};

/// Binary judgments for one context type: `rows[item][rater]` is true when
/// the rater judged the item associated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingTable {
    rows: Vec<Vec<bool>>,
    raters: usize,
}

impl RatingTable {
    pub fn new(rows: Vec<Vec<bool>>) -> Result<Self> {
        let raters = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Domain("rating table has no items".into()))?;
        if raters < 2 {
            return Err(Error::Domain(format!("rating table needs at least 2 raters, got {raters}")));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != raters) {
            return Err(Error::Dimension {
                expected: raters,
                actual: bad.len(),
            });
        }
        Ok(RatingTable { rows, raters })
    }

    pub fn items(&self) -> usize {
        self.rows.len()
    }

    pub fn raters(&self) -> usize {
        self.raters
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    /// Items judged associated by at least one rater.
    pub fn associations(&self) -> usize {
        self.rows.iter().filter(|r| r.iter().any(|&x| x)).count()
    }
}

/// Kappa value, or undefined when every rating falls in one category.
/// Serialized as a number or the string `"undefined"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kappa {
    Value(f64),
    Undefined,
}

impl Kappa {
    pub fn value(self) -> Option<f64> {
        match self {
            Kappa::Value(v) => Some(v),
            Kappa::Undefined => None,
        }
    }
}

impl fmt::Display for Kappa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kappa::Value(v) => write!(f, "{v:.4}"),
            Kappa::Undefined => f.write_str("undefined"),
        }
    }
}

impl Serialize for Kappa {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Kappa::Value(v) => s.serialize_f64(*v),
            Kappa::Undefined => s.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for Kappa {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Kappa::Value(v)),
            Raw::Text(t) if t == "undefined" => Ok(Kappa::Undefined),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad kappa {t:?}"))),
        }
    }
}

/// Fleiss' kappa over the two categories "associated" and "not associated".
pub fn fleiss_kappa(table: &RatingTable) -> Kappa {
    let n = table.items() as f64;
    let r = table.raters() as f64;
    let mut p_bar = 0.0;
    let mut yes_total = 0.0;
    for row in table.rows() {
        let yes = row.iter().filter(|&&x| x).count() as f64;
        let no = r - yes;
        p_bar += (yes * yes + no * no - r) / (r * (r - 1.0));
        yes_total += yes;
    }
    p_bar /= n;
    let p_yes = yes_total / (n * r);
    let p_no = 1.0 - p_yes;
    let p_e = p_yes * p_yes + p_no * p_no;
    if 1.0 - p_e <= f64::EPSILON {
        Kappa::Undefined
    } else {
        Kappa::Value((p_bar - p_e) / (1.0 - p_e))
    }
}

// ---------------------------------------------------------------------------
// Span overlap

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapCounts {
    pub both: usize,
    pub only_a: usize,
    pub only_b: usize,
    pub jaccard: f64,
}

impl OverlapCounts {
    /// Jaccard is `both / (both + only_a + only_b)`; two empty sets count as
    /// identical.
    pub fn from_counts(both: usize, only_a: usize, only_b: usize) -> Self {
        let total = both + only_a + only_b;
        let jaccard = if total == 0 {
            1.0
        } else {
            both as f64 / total as f64
        };
        OverlapCounts {
            both,
            only_a,
            only_b,
            jaccard,
        }
    }

    pub fn pool<'a>(parts: impl IntoIterator<Item = &'a OverlapCounts>) -> Self {
        let (b, a, o) = parts
            .into_iter()
            .fold((0, 0, 0), |(b, a, o), c| (b + c.both, a + c.only_a, o + c.only_b));
        OverlapCounts::from_counts(b, a, o)
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Spans sharing at least one token with a span of the other set are merged,
/// through chains, into one shared item. Each remaining span is an item of
/// its own set.
pub fn span_overlap(a: &[Span], b: &[Span]) -> OverlapCounts {
    let mut parent: Vec<usize> = (0..a.len() + b.len()).collect();
    for (i, sa) in a.iter().enumerate() {
        for (j, sb) in b.iter().enumerate() {
            if sa.overlaps(sb) {
                let (ra, rb) = (find(&mut parent, i), find(&mut parent, a.len() + j));
                parent[ra] = rb;
            }
        }
    }
    let mut members: BTreeMap<usize, (bool, bool)> = BTreeMap::new();
    for x in 0..parent.len() {
        let root = find(&mut parent, x);
        let e = members.entry(root).or_default();
        if x < a.len() {
            e.0 = true;
        } else {
            e.1 = true;
        }
    }
    let (mut both, mut only_a, mut only_b) = (0, 0, 0);
    for (in_a, in_b) in members.into_values() {
        match (in_a, in_b) {
            (true, true) => both += 1,
            (true, false) => only_a += 1,
            _ => only_b += 1,
        }
    }
    OverlapCounts::from_counts(both, only_a, only_b)
}

// ---------------------------------------------------------------------------
// Annotator files

/// One annotator's judgments: paper id → event id → associated grounding IDs.
pub type Judgments = BTreeMap<String, BTreeMap<String, BTreeSet<String>>>;

pub fn load_judgments(path: &Path) -> Result<Judgments> {
    read_json(path)
}

/// Manually annotated context spans per paper, compared against the
/// corpus's context mentions.
pub type ManualSpans = BTreeMap<String, Vec<Span>>;

pub fn load_manual_spans(path: &Path) -> Result<ManualSpans> {
    read_json(path)
}

/// Which events are rated for a context type.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemUniverse {
    /// Every event of the shared papers.
    #[default]
    AllEvents,
    /// Events for which at least one annotator proposed the type.
    Proposed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeAgreement {
    pub context_type: String,
    pub kappa: Kappa,
    /// Events judged associated with the type by at least one annotator.
    pub associations: usize,
    pub items: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub annotators: usize,
    pub papers: Vec<String>,
    pub universe: ItemUniverse,
    pub types: Vec<TypeAgreement>,
}

/// Per-type agreement over the papers every annotator covered. Events come
/// from the corpus when it has the paper, otherwise from the annotations.
pub fn kappa_report(
    annotators: &[Judgments],
    corpus: &Corpus,
    universe: ItemUniverse,
) -> Result<AgreementReport> {
    if annotators.len() < 2 {
        return Err(Error::Domain(format!(
            "agreement needs at least 2 annotators, got {}",
            annotators.len()
        )));
    }
    let mut shared: BTreeSet<&String> = annotators[0].keys().collect();
    for a in &annotators[1..] {
        shared.retain(|p| a.contains_key(*p));
    }
    if shared.is_empty() {
        return Err(Error::Domain("annotator files share no papers".into()));
    }

    let mut events: Vec<(&str, String)> = Vec::new();
    let mut types: BTreeSet<&str> = BTreeSet::new();
    for &paper in &shared {
        let ids: BTreeSet<String> = match corpus.document(paper) {
            Some(doc) => doc.events.iter().map(|e| e.id.clone()).collect(),
            None => annotators.iter().flat_map(|a| a[paper].keys().cloned()).collect(),
        };
        events.extend(ids.into_iter().map(|e| (paper.as_str(), e)));
        for a in annotators {
            types.extend(a[paper].values().flatten().map(String::as_str));
        }
    }

    let judged = |a: &Judgments, paper: &str, event: &str, t: &str| {
        a.get(paper)
            .and_then(|m| m.get(event))
            .is_some_and(|s| s.contains(t))
    };
    let mut rows_out = Vec::new();
    for t in types {
        let rows: Vec<Vec<bool>> = events
            .iter()
            .map(|(p, e)| annotators.iter().map(|a| judged(a, p, e, t)).collect::<Vec<bool>>())
            .filter(|row| universe == ItemUniverse::AllEvents || row.iter().any(|&x| x))
            .collect();
        if rows.is_empty() {
            continue;
        }
        let table = RatingTable::new(rows)?;
        rows_out.push(TypeAgreement {
            context_type: t.to_string(),
            kappa: fleiss_kappa(&table),
            associations: table.associations(),
            items: table.items(),
        });
    }
    Ok(AgreementReport {
        annotators: annotators.len(),
        papers: shared.into_iter().cloned().collect(),
        universe,
        types: rows_out,
    })
}

/// Agreement bands: poor (< 0), slight, fair, moderate, substantial and
/// almost perfect (upper bounds 0.2, 0.4, 0.6, 0.8, 1.0), plus undefined.
pub const KAPPA_BINS: [&str; 7] = [
    "poor",
    "slight",
    "fair",
    "moderate",
    "substantial",
    "almost_perfect",
    "undefined",
];

pub fn kappa_bin(kappa: Kappa) -> &'static str {
    match kappa {
        Kappa::Undefined => "undefined",
        Kappa::Value(v) if v < 0.0 => "poor",
        Kappa::Value(v) if v <= 0.2 => "slight",
        Kappa::Value(v) if v <= 0.4 => "fair",
        Kappa::Value(v) if v <= 0.6 => "moderate",
        Kappa::Value(v) if v <= 0.8 => "substantial",
        Kappa::Value(_) => "almost_perfect",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BinRow {
    pub bin: &'static str,
    pub types: usize,
    pub associations: usize,
}

/// Number of types and summed association counts per kappa band.
pub fn kappa_bins(report: &AgreementReport) -> Vec<BinRow> {
    KAPPA_BINS
        .iter()
        .map(|&bin| {
            let members = report.types.iter().filter(|t| kappa_bin(t.kappa) == bin);
            BinRow {
                bin,
                types: members.clone().count(),
                associations: members.map(|t| t.associations).sum(),
            }
        })
        .collect()
}

/// The `k` types with the most associations, ties by type id.
pub fn top_types(report: &AgreementReport, k: usize) -> Vec<&TypeAgreement> {
    let mut v: Vec<&TypeAgreement> = report.types.iter().collect();
    v.sort_by(|a, b| {
        b.associations
            .cmp(&a.associations)
            .then_with(|| a.context_type.cmp(&b.context_type))
    });
    v.truncate(k);
    v
}

pub const TOP_TYPES: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapReport {
    pub papers: BTreeMap<String, OverlapCounts>,
    pub total: OverlapCounts,
}

/// Compares manual spans (set A) with the corpus context mentions (set B),
/// per paper present in both.
pub fn overlap_report(manual: &ManualSpans, corpus: &Corpus) -> Result<OverlapReport> {
    let mut papers = BTreeMap::new();
    for (paper, spans) in manual {
        let Some(doc) = corpus.document(paper) else { continue };
        let machine: Vec<Span> = doc.contexts.iter().map(|c| c.span()).collect();
        papers.insert(paper.clone(), span_overlap(spans, &machine));
    }
    if papers.is_empty() {
        return Err(Error::Domain("manual spans cover no corpus paper".into()));
    }
    let total = OverlapCounts::pool(papers.values());
    Ok(OverlapReport { papers, total })
}

fn csv_string<R: Serialize>(header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Domain(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// `kappa.csv`: context type, kappa (or `undefined`), association count.
pub fn kappa_csv(report: &AgreementReport) -> Result<String> {
    csv_string(
        &["context_type", "kappa", "association_count"],
        report
            .types
            .iter()
            .map(|t| (&t.context_type, t.kappa.to_string(), t.associations)),
    )
}

pub fn bins_csv(report: &AgreementReport) -> Result<String> {
    csv_string(&["bin", "types", "association_count"], kappa_bins(report))
}

pub fn top_csv(report: &AgreementReport) -> Result<String> {
    csv_string(
        &["context_type", "kappa", "association_count"],
        top_types(report, TOP_TYPES)
            .into_iter()
            .map(|t| (&t.context_type, t.kappa.to_string(), t.associations)),
    )
}
