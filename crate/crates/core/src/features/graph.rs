//! Undirected views of sentence dependency graphs.

use std::collections::{BTreeMap, VecDeque};

use crate::corpus::{Sentence, Span};

pub type Bigram = (String, String);

/// Multiset of dependency-label bigrams, as label pair → count.
pub type BigramBag = BTreeMap<Bigram, u32>;

pub const NEG_LABEL: &str = "neg";

/// Adjacency lists of a sentence's dependency edges with direction dropped.
/// Each entry is `(neighbor, edge index)`.
#[derive(Debug, Clone)]
pub struct SentenceGraph {
    adjacency: Vec<Vec<(usize, usize)>>,
    root: usize,
    root_depth: Vec<Option<usize>>,
}

impl SentenceGraph {
    pub fn new(sentence: &Sentence) -> Self {
        let n = sentence.len();
        let mut adjacency = vec![Vec::new(); n];
        for (i, e) in sentence.edges.iter().enumerate() {
            adjacency[e.head].push((e.dependent, i));
            adjacency[e.dependent].push((e.head, i));
        }
        let mut graph = SentenceGraph {
            adjacency,
            root: sentence.root,
            root_depth: Vec::new(),
        };
        graph.root_depth = graph.distances_from(sentence.root);
        graph
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    /// Undirected BFS distances from `source`; `None` where unreachable.
    pub fn distances_from(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count()];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].expect("queued nodes have a distance");
            for &(v, _) in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn depth(&self, node: usize) -> Option<usize> {
        self.root_depth[node]
    }

    /// Token of `span` closest to the root; leftmost on ties. Tokens that
    /// cannot reach the root rank last.
    pub fn head_token(&self, span: Span) -> usize {
        span.tokens()
            .min_by_key(|&t| (self.root_depth[t].unwrap_or(usize::MAX), t))
            .unwrap_or(span.start)
    }

    pub fn spanning_bigrams(&self, head: usize, sentence: &Sentence) -> BigramBag {
        let mut bag = BigramBag::new();
        for &(x, e1) in &self.adjacency[head] {
            for &(y, e2) in &self.adjacency[x] {
                if e2 == e1 || y == head {
                    continue;
                }
                let key = (
                    sentence.edges[e1].label.clone(),
                    sentence.edges[e2].label.clone(),
                );
                *bag.entry(key).or_default() += 1;
            }
        }
        bag
    }

    pub fn is_negated(&self, head: usize, sentence: &Sentence) -> bool {
        let near = |t: usize| t == head || self.adjacency[head].iter().any(|&(v, _)| v == t);
        sentence
            .edges
            .iter()
            .any(|e| e.label == NEG_LABEL && (near(e.head) || near(e.dependent)))
    }
}

/// Head token of a mention span: minimal undirected distance to the sentence
/// root, leftmost on ties.
pub fn head_token(span: Span, sentence: &Sentence) -> usize {
    SentenceGraph::new(sentence).head_token(span)
}

/// Label bigrams along every undirected two-edge path leaving `head`.
pub fn spanning_bigrams(head: usize, sentence: &Sentence) -> BigramBag {
    SentenceGraph::new(sentence).spanning_bigrams(head, sentence)
}

/// True iff a `neg` edge touches a token within one edge of `head`, i.e. it
/// lies inside the depth-two neighborhood of the head.
pub fn is_negated(head: usize, sentence: &Sentence) -> bool {
    SentenceGraph::new(sentence).is_negated(head, sentence)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DependencyDistance {
    pub edges: usize,
    /// False when the heads are not connected and `edges` holds the penalty
    /// value (node count of the combined graph).
    pub connected: bool,
}

/// Shortest undirected path between two heads. For different sentences the
/// graphs are joined by a single root-root edge, so every path crosses it.
pub fn dependency_distance_between(
    event_graph: &SentenceGraph,
    event_head: usize,
    context_graph: &SentenceGraph,
    context_head: usize,
    same_sentence: bool,
) -> DependencyDistance {
    if same_sentence {
        return match event_graph.distances_from(event_head)[context_head] {
            Some(d) => DependencyDistance {
                edges: d,
                connected: true,
            },
            None => DependencyDistance {
                edges: event_graph.node_count(),
                connected: false,
            },
        };
    }
    match (event_graph.depth(event_head), context_graph.depth(context_head)) {
        (Some(a), Some(b)) => DependencyDistance {
            edges: a + 1 + b,
            connected: true,
        },
        _ => DependencyDistance {
            edges: event_graph.node_count() + context_graph.node_count(),
            connected: false,
        },
    }
}
