//! Positional Hamming distance to the closest gold vector, move impact and
//! per-validation error attribution.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{Exercise, Feature, GoldSet, GrammarError, SliderLabel, StateVector};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("vectors have different lengths ({0} vs {1})")]
    InvalidPair(usize, usize),
    #[error("exercise {0} has no solution")]
    NoSolution(String),
    #[error("not a single-slider move: {0} -> {1}")]
    NotAMove(StateVector, StateVector),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

/// Number of sliders whose positions differ.
pub fn hamming(a: &StateVector, b: &StateVector) -> Result<usize, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::InvalidPair(a.len(), b.len()));
    }
    Ok(a.positions().iter().zip(b.positions()).filter(|(x, y)| x != y).count())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NearestGold {
    pub distance: usize,
    /// All golds at `distance`, sorted.
    pub golds: Vec<StateVector>,
    /// Lexicographically smallest member of `golds`.
    pub chosen: StateVector,
}

impl NearestGold {
    pub fn contains(&self, v: &StateVector) -> bool {
        self.golds.binary_search(v).is_ok()
    }
}

pub fn nearest_gold(v: &StateVector, gs: &GoldSet) -> Result<NearestGold, MetricsError> {
    let first = gs
        .vectors()
        .first()
        .ok_or_else(|| MetricsError::NoSolution(gs.exercise_id().to_owned()))?;
    if first.len() != v.len() {
        return Err(MetricsError::InvalidPair(v.len(), first.len()));
    }
    let counts = gs.match_counts(v);
    let best = counts.iter().copied().max().unwrap_or(0);
    // gold order is lexicographic, so the first tie is the chosen one
    let golds: Vec<StateVector> = counts
        .iter()
        .zip(gs.vectors())
        .filter(|(&c, _)| c == best)
        .map(|(_, g)| g.clone())
        .collect();
    Ok(NearestGold {
        distance: v.len() - best,
        chosen: golds[0].clone(),
        golds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImpactKind {
    Improved,
    Worsened,
    Unchanged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveImpact {
    pub kind: ImpactKind,
    pub gold_changed: bool,
    pub d_before: usize,
    pub d_after: usize,
}

impl MoveImpact {
    /// Impact from two already-resolved nearest golds.
    pub fn between(before: &NearestGold, after: &NearestGold) -> Self {
        let kind = match after.distance.cmp(&before.distance) {
            std::cmp::Ordering::Less => ImpactKind::Improved,
            std::cmp::Ordering::Greater => ImpactKind::Worsened,
            std::cmp::Ordering::Equal => ImpactKind::Unchanged,
        };
        MoveImpact {
            kind,
            gold_changed: !after.contains(&before.chosen),
            d_before: before.distance,
            d_after: after.distance,
        }
    }
}

pub fn classify_move(prev: &StateVector, next: &StateVector, gs: &GoldSet) -> Result<MoveImpact, MetricsError> {
    if hamming(prev, next)? != 1 {
        return Err(MetricsError::NotAMove(prev.clone(), next.clone()));
    }
    let before = nearest_gold(prev, gs)?;
    let after = nearest_gold(next, gs)?;
    Ok(MoveImpact::between(&before, &after))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub slider_index: usize,
    pub category: SliderLabel,
    pub feature: Feature,
    pub chosen_surface: String,
    pub gold_surface: String,
}

/// Attributes the agreement errors of a validated vector against its nearest
/// gold: one record per differing slider and per enforced feature whose two
/// specified values disagree.
pub fn classify_validation_errors(
    ex: &Exercise,
    v: &StateVector,
    gs: &GoldSet,
) -> Result<Vec<ErrorRecord>, MetricsError> {
    if ex.check_grammatical(v)? {
        return Ok(Vec::new());
    }
    let gold = nearest_gold(v, gs)?.chosen;
    let mut records = Vec::new();
    for (i, (&p, &g)) in v.positions().iter().zip(gold.positions()).enumerate() {
        if p == g {
            continue;
        }
        let chosen = ex.form_at(i, p);
        let target = ex.form_at(i, g);
        for feature in ex.enforced_on(i) {
            match (chosen.features.value(feature), target.features.value(feature)) {
                (Some(a), Some(b)) if a != b => records.push(ErrorRecord {
                    slider_index: i,
                    category: ex.sliders()[i].label,
                    feature,
                    chosen_surface: chosen.surface.clone(),
                    gold_surface: target.surface.clone(),
                }),
                _ => {}
            }
        }
    }
    Ok(records)
}
