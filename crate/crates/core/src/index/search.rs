use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::{CorpusIndex, IndexError, SearchConstraints, SearchHit};
use crate::model::{ComponentId, ComponentRecord};
use crate::mql::{glob_match, match_interface, FilterKey, MqlQuery};
use crate::tokenize::tokenize_identifier;

/// Lexical scores for `terms` (already tokenized, deduplicated) over all components.
fn lexical_scores(ix: &CorpusIndex, terms: &[String]) -> BTreeMap<ComponentId, (f64, Vec<String>)> {
    let mut scores: BTreeMap<ComponentId, (f64, Vec<String>)> = BTreeMap::new();
    for term in terms {
        let Some(list) = ix.postings.get(term) else {
            continue;
        };
        let idf = ix.idf(term);
        let mut best: BTreeMap<&ComponentId, f64> = BTreeMap::new();
        for p in list {
            let w = ix.manifest.scoring.weight(p.field);
            let slot = best.entry(&p.id).or_insert(0.0);
            if w > *slot {
                *slot = w;
            }
        }
        for (id, w) in best {
            let entry = scores.entry(id.clone()).or_insert((0.0, Vec::new()));
            entry.0 += idf * w;
            entry.1.push(term.clone());
        }
    }
    scores
}

fn query_terms<'a>(words: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut seen = HashSet::new();
    words
        .into_iter()
        .flat_map(tokenize_identifier)
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

fn finish(ix: &CorpusIndex, mut hits: Vec<SearchHit>, c: &SearchConstraints) -> Vec<SearchHit> {
    hits.retain(|h| ix.components.get(&h.id).is_some_and(|r| c.admits(r)));
    hits.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
    if c.dedupe {
        let mut seen = HashSet::new();
        hits.retain(|h| {
            let r = &ix.components[&h.id];
            let (hash, name) = r.dedupe_key();
            seen.insert((hash.to_string(), name.to_string()))
        });
    }
    hits.truncate(c.max_results);
    hits
}

/// Ranks components by `Σ idf(t) · weight(best field of t)` over the query terms.
pub fn search_keyword(
    ix: &CorpusIndex,
    terms: &[String],
    c: &SearchConstraints,
) -> Result<Vec<SearchHit>, IndexError> {
    c.validate()?;
    let terms = query_terms(terms.iter().map(String::as_str));
    let hits = lexical_scores(ix, &terms)
        .into_iter()
        .map(|(id, (score, matched_terms))| SearchHit {
            id,
            score,
            lexical_score: score,
            interface_score: 0.0,
            matched_terms,
        })
        .collect();
    Ok(finish(ix, hits, c))
}

fn passes_filters(q: &MqlQuery, record: &ComponentRecord) -> bool {
    q.filters.iter().all(|(key, value)| match key {
        FilterKey::Kind => record.interface.kind.as_str().eq_ignore_ascii_case(value),
        FilterKey::Lang => glob_match(value, crate::SUBJECT_LANGUAGE),
        FilterKey::Path => {
            record.path.starts_with(value.as_str()) || glob_match(value, &record.path)
        }
    })
}

/// Interface search: candidates are components whose class name matches the
/// query's name pattern plus components lexically matching its method names;
/// each is scored by a blend of interface match and normalized lexical score.
pub fn search_mql(
    ix: &CorpusIndex,
    q: &MqlQuery,
    c: &SearchConstraints,
) -> Result<Vec<SearchHit>, IndexError> {
    c.validate()?;
    let mut pool: BTreeSet<ComponentId> = BTreeSet::new();
    for (name, ids) in &ix.signature_index {
        if glob_match(&q.class_name, name) {
            pool.extend(ids.iter().cloned());
        }
    }
    let method_terms = query_terms(q.methods.iter().map(|m| m.name.as_str()));
    let method_hits = lexical_scores(ix, &method_terms);
    pool.extend(method_hits.keys().cloned());

    let mut all_terms = query_terms(std::iter::once(q.class_name.as_str()));
    for t in method_terms {
        if !all_terms.contains(&t) {
            all_terms.push(t);
        }
    }
    let lexical = lexical_scores(ix, &all_terms);
    let max_lexical = pool
        .iter()
        .filter_map(|id| lexical.get(id).map(|(s, _)| *s))
        .fold(0.0f64, f64::max);

    let scoring = &ix.manifest.scoring;
    let hits = pool
        .into_iter()
        .filter(|id| passes_filters(q, &ix.components[id]))
        .map(|id| {
            let record = &ix.components[&id];
            let interface_score = match_interface(q, &record.interface).score;
            let (lexical_score, matched_terms) = lexical.get(&id).cloned().unwrap_or_default();
            let normalized = if max_lexical > 0.0 {
                lexical_score / max_lexical
            } else {
                0.0
            };
            SearchHit {
                id,
                score: scoring.interface_blend * interface_score
                    + scoring.lexical_blend * normalized,
                lexical_score,
                interface_score,
                matched_terms,
            }
        })
        .collect();
    Ok(finish(ix, hits, c))
}
