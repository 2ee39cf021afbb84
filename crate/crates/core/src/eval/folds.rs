use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::seed;

pub const VALIDATION_PAPERS: usize = 4;
/// Four validation papers, at least one training paper and the test paper.
pub const MIN_PAPERS: usize = VALIDATION_PAPERS + 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub test: String,
    pub validation: Vec<String>,
    pub training: Vec<String>,
    pub seed: u64,
}

/// One leave-one-paper-out fold per paper. The validation papers are drawn
/// uniformly from the rest with a seed derived from the master seed and the
/// test paper id; both lists keep corpus order.
pub fn make_folds(corpus: &Corpus, master_seed: u64) -> Result<Vec<FoldSpec>> {
    let ids = corpus.paper_ids();
    if ids.len() < MIN_PAPERS {
        return Err(Error::Domain(format!(
            "cross-validation needs at least {MIN_PAPERS} papers, corpus has {}",
            ids.len()
        )));
    }
    Ok(ids
        .iter()
        .map(|&test| {
            let seed = seed::derive(master_seed, &[b"fold", test.as_bytes()]);
            let mut rest: Vec<usize> = (0..ids.len()).filter(|&i| ids[i] != test).collect();
            rest.shuffle(&mut seed::rng(seed));
            let mut validation = rest[..VALIDATION_PAPERS].to_vec();
            let mut training = rest[VALIDATION_PAPERS..].to_vec();
            validation.sort_unstable();
            training.sort_unstable();
            let names = |v: Vec<usize>| v.into_iter().map(|i| ids[i].to_string()).collect();
            FoldSpec {
                test: test.to_string(),
                validation: names(validation),
                training: names(training),
                seed,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::small_doc;
    use std::collections::BTreeSet;

    fn corpus(n: usize) -> Corpus {
        Corpus::new(
            (0..n)
                .map(|i| {
                    let mut d = small_doc();
                    d.paper_id = format!("P{i:02}");
                    d
                })
                .collect(),
        )
    }

    #[test]
    fn twenty_two_papers() {
        let c = corpus(22);
        let folds = make_folds(&c, 9).unwrap();
        assert_eq!(folds.len(), 22);
        for f in &folds {
            assert_eq!(f.validation.len(), 4);
            assert_eq!(f.training.len(), 17);
            let mut all: BTreeSet<&str> = f.validation.iter().map(String::as_str).collect();
            all.extend(f.training.iter().map(String::as_str));
            all.insert(&f.test);
            assert_eq!(all.len(), 22);
        }
    }

    #[test]
    fn too_few_papers() {
        assert!(make_folds(&corpus(5), 1).is_err());
        assert!(make_folds(&corpus(6), 1).is_ok());
    }

    #[test]
    fn deterministic() {
        let c = corpus(10);
        assert_eq!(make_folds(&c, 4).unwrap(), make_folds(&c, 4).unwrap());
        assert_ne!(make_folds(&c, 4).unwrap(), make_folds(&c, 5).unwrap());
    }
}
