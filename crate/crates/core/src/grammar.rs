//! Exercise model: sliders of feature-bundled word forms linked by agreement
//! chains, grammaticality checking and exhaustive gold enumeration.
//!
//! Agreement is equality of the *specified* feature values of the forms
//! selected on every member of a chain. An `Unspecified` value is a wildcard,
//! which is how invariable forms such as plural `les` serve both genders.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on explored search nodes during enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("exercise {exercise}: {reason}")]
    InvalidExercise { exercise: String, reason: String },
    #[error("invalid vector: {0}")]
    InvalidVector(String),
    #[error("exercise {exercise}: search exceeded {cap} nodes")]
    Capacity { exercise: String, cap: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Masc,
    Fem,
    Unspecified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Number {
    Sing,
    Plur,
    Unspecified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Person {
    P1,
    P2,
    P3,
    Unspecified,
}

/// A morphosyntactic feature an agreement chain can enforce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feature {
    Gender,
    Number,
    Person,
}

impl Feature {
    pub const ALL: [Feature; 3] = [Feature::Gender, Feature::Number, Feature::Person];

    pub fn as_str(self) -> &'static str {
        match self {
            Feature::Gender => "gender",
            Feature::Number => "number",
            Feature::Person => "person",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Det,
    Nom,
    Adj,
    Ver,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SyntacticFunction {
    /// Subject group.
    Gs,
    /// Predicate.
    Pred,
}

/// What a slider stands for: a word of some grammatical category, or a whole
/// syntactic group. The derived order is the fixed reporting order
/// `det, nom, adj, ver, other, GS, Pred`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SliderLabel {
    Category(Category),
    Function(SyntacticFunction),
}

impl SliderLabel {
    pub const ALL: [SliderLabel; 7] = [
        SliderLabel::Category(Category::Det),
        SliderLabel::Category(Category::Nom),
        SliderLabel::Category(Category::Adj),
        SliderLabel::Category(Category::Ver),
        SliderLabel::Category(Category::Other),
        SliderLabel::Function(SyntacticFunction::Gs),
        SliderLabel::Function(SyntacticFunction::Pred),
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SliderLabel::Category(Category::Det) => "det",
            SliderLabel::Category(Category::Nom) => "nom",
            SliderLabel::Category(Category::Adj) => "adj",
            SliderLabel::Category(Category::Ver) => "ver",
            SliderLabel::Category(Category::Other) => "other",
            SliderLabel::Function(SyntacticFunction::Gs) => "GS",
            SliderLabel::Function(SyntacticFunction::Pred) => "Pred",
        }
    }

    pub fn is_function(self) -> bool {
        matches!(self, SliderLabel::Function(_))
    }
}

impl fmt::Display for SliderLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SliderLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SliderLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown slider label `{s}`"))
    }
}

impl Serialize for SliderLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for SliderLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureBundle {
    pub gender: Gender,
    pub number: Number,
    pub person: Person,
}

impl Default for FeatureBundle {
    fn default() -> Self {
        FeatureBundle {
            gender: Gender::Unspecified,
            number: Number::Unspecified,
            person: Person::Unspecified,
        }
    }
}

impl FeatureBundle {
    pub fn new(gender: Gender, number: Number, person: Person) -> Self {
        FeatureBundle { gender, number, person }
    }

    /// Returns a comparable code for `feature`, or `None` when unspecified.
    pub fn value(&self, feature: Feature) -> Option<u8> {
        match feature {
            Feature::Gender => (self.gender != Gender::Unspecified).then_some(self.gender as u8),
            Feature::Number => (self.number != Number::Unspecified).then_some(self.number as u8),
            Feature::Person => (self.person != Person::Unspecified).then_some(self.person as u8),
        }
    }

    pub fn with_unspecified(mut self, feature: Feature) -> Self {
        match feature {
            Feature::Gender => self.gender = Gender::Unspecified,
            Feature::Number => self.number = Number::Unspecified,
            Feature::Person => self.person = Person::Unspecified,
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordForm {
    pub surface: String,
    pub lemma: String,
    pub category: Category,
    pub features: FeatureBundle,
}

impl WordForm {
    pub fn new(surface: &str, lemma: &str, category: Category, features: FeatureBundle) -> Self {
        WordForm {
            surface: surface.to_owned(),
            lemma: lemma.to_owned(),
            category,
            features,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slider {
    pub index: usize,
    pub label: SliderLabel,
    pub forms: Vec<WordForm>,
}

impl Slider {
    /// Number of positions; valid positions are `1..=len()`.
    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    /// Form at a 1-based position.
    pub fn form(&self, position: usize) -> Option<&WordForm> {
        position.checked_sub(1).and_then(|i| self.forms.get(i))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementChain {
    pub members: BTreeSet<usize>,
    pub enforced: BTreeSet<Feature>,
}

impl AgreementChain {
    pub fn new(members: impl IntoIterator<Item = usize>, enforced: impl IntoIterator<Item = Feature>) -> Self {
        AgreementChain {
            members: members.into_iter().collect(),
            enforced: enforced.into_iter().collect(),
        }
    }
}

/// One slider position per slider, 1-based. Ordering is lexicographic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector(Vec<usize>);

impl StateVector {
    pub fn new(positions: Vec<usize>) -> Self {
        StateVector(positions)
    }

    pub fn positions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, slider: usize) -> Option<usize> {
        self.0.get(slider).copied()
    }

    /// Copy with one slider moved.
    pub fn with_position(&self, slider: usize, position: usize) -> StateVector {
        let mut next = self.0.clone();
        next[slider] = position;
        StateVector(next)
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl From<Vec<usize>> for StateVector {
    fn from(v: Vec<usize>) -> Self {
        StateVector(v)
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exercise {
    id: String,
    sliders: Vec<Slider>,
    chains: Vec<AgreementChain>,
    principal_chain: Option<usize>,
    // chain indices touching each slider
    chains_of: Vec<Vec<usize>>,
}

impl Exercise {
    /// Builds and validates an exercise. Slider indices are reassigned from
    /// list order; the principal chain is the first chain holding a `ver`
    /// slider.
    pub fn new(id: impl Into<String>, sliders: Vec<Slider>, chains: Vec<AgreementChain>) -> Result<Self, GrammarError> {
        let id = id.into();
        let invalid = |reason: String| GrammarError::InvalidExercise {
            exercise: id.clone(),
            reason,
        };
        if sliders.is_empty() {
            return Err(invalid("no sliders".into()));
        }
        let mut sliders = sliders;
        for (i, slider) in sliders.iter_mut().enumerate() {
            slider.index = i;
            if slider.forms.is_empty() {
                return Err(invalid(format!("slider {i} has no forms")));
            }
            for form in &slider.forms {
                if form.surface.is_empty() {
                    return Err(invalid(format!("slider {i} has an empty surface form")));
                }
                let f = &form.features;
                if form.category == Category::Ver && f.person != Person::Unspecified && f.number == Number::Unspecified
                {
                    return Err(invalid(format!(
                        "verb form `{}` on slider {i} has a person but no number",
                        form.surface
                    )));
                }
            }
        }
        let mut chains_of = vec![Vec::new(); sliders.len()];
        for (c, chain) in chains.iter().enumerate() {
            if chain.members.len() < 2 {
                return Err(invalid(format!("chain {c} has fewer than two members")));
            }
            if chain.enforced.is_empty() {
                return Err(invalid(format!("chain {c} enforces no feature")));
            }
            for &m in &chain.members {
                if m >= sliders.len() {
                    return Err(invalid(format!("chain {c} references missing slider {m}")));
                }
                chains_of[m].push(c);
            }
        }
        let is_verb = |i: usize| sliders[i].label == SliderLabel::Category(Category::Ver);
        let principal_chain = chains.iter().position(|c| c.members.iter().any(|&m| is_verb(m)));
        if let Some(v) = (0..sliders.len()).find(|&i| is_verb(i)) {
            if chains_of[v].is_empty() {
                return Err(invalid(format!("verb slider {v} belongs to no agreement chain")));
            }
        }
        Ok(Exercise {
            id,
            sliders,
            chains,
            principal_chain,
            chains_of,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn sliders(&self) -> &[Slider] {
        &self.sliders
    }

    pub fn slider(&self, index: usize) -> Option<&Slider> {
        self.sliders.get(index)
    }

    pub fn chains(&self) -> &[AgreementChain] {
        &self.chains
    }

    pub fn principal_chain(&self) -> Option<&AgreementChain> {
        self.principal_chain.map(|c| &self.chains[c])
    }

    pub fn n_sliders(&self) -> usize {
        self.sliders.len()
    }

    /// Size of the unconstrained Cartesian product, saturating.
    pub fn raw_space(&self) -> u128 {
        self.sliders
            .iter()
            .fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128))
    }

    /// Features enforced on `slider` by at least one chain, in fixed order.
    pub fn enforced_on(&self, slider: usize) -> BTreeSet<Feature> {
        self.chains_of
            .get(slider)
            .into_iter()
            .flatten()
            .flat_map(|&c| self.chains[c].enforced.iter().copied())
            .collect()
    }

    pub fn validate_vector(&self, v: &StateVector) -> Result<(), GrammarError> {
        if v.len() != self.sliders.len() {
            return Err(GrammarError::InvalidVector(format!(
                "{v} has {} positions, exercise {} has {} sliders",
                v.len(),
                self.id,
                self.sliders.len()
            )));
        }
        for (slider, &p) in self.sliders.iter().zip(v.positions()) {
            if p < 1 || p > slider.len() {
                return Err(GrammarError::InvalidVector(format!(
                    "position {p} out of range 1..={} on slider {}",
                    slider.len(),
                    slider.index
                )));
            }
        }
        Ok(())
    }

    /// Selected form at a (1-based) position of a slider. Callers validate first.
    pub fn form_at(&self, slider: usize, position: usize) -> &WordForm {
        &self.sliders[slider].forms[position - 1]
    }

    /// Sentence rendered by joining the selected surfaces.
    pub fn render(&self, v: &StateVector) -> Result<String, GrammarError> {
        self.validate_vector(v)?;
        Ok(v.positions()
            .iter()
            .enumerate()
            .map(|(i, &p)| self.form_at(i, p).surface.as_str())
            .collect::<Vec<_>>()
            .join(" "))
    }

    pub fn check_grammatical(&self, v: &StateVector) -> Result<bool, GrammarError> {
        self.validate_vector(v)?;
        Ok(self.chains.iter().all(|chain| {
            chain.enforced.iter().all(|&f| {
                let mut seen = None;
                chain
                    .members
                    .iter()
                    .all(|&m| match self.form_at(m, v.0[m]).features.value(f) {
                        None => true,
                        Some(x) => *seen.get_or_insert(x) == x,
                    })
            })
        }))
    }

    pub fn enumerate_solutions(&self) -> Result<GoldSet, GrammarError> {
        self.enumerate_solutions_capped(DEFAULT_ENUMERATION_CAP)
    }

    /// Depth-first assignment in slider order. A partial assignment is dropped
    /// as soon as the newly placed form clashes with an already placed member
    /// of one of its chains. `cap` bounds the number of explored nodes.
    pub fn enumerate_solutions_capped(&self, cap: u64) -> Result<GoldSet, GrammarError> {
        let n = self.sliders.len();
        let mut positions = vec![0usize; n];
        let mut vectors = Vec::new();
        let mut nodes = 0u64;
        // Explicit stack of (slider, next position to try).
        let mut depth = 0usize;
        let mut next = vec![1usize; n];
        loop {
            if next[depth] > self.sliders[depth].len() {
                if depth == 0 {
                    break;
                }
                next[depth] = 1;
                depth -= 1;
                continue;
            }
            let p = next[depth];
            next[depth] += 1;
            nodes += 1;
            if nodes > cap {
                return Err(GrammarError::Capacity {
                    exercise: self.id.clone(),
                    cap,
                });
            }
            positions[depth] = p;
            if !self.consistent_with_prefix(&positions, depth) {
                continue;
            }
            if depth + 1 == n {
                vectors.push(StateVector(positions.clone()));
            } else {
                depth += 1;
            }
        }
        Ok(GoldSet::from_sorted(self.id.clone(), vectors))
    }

    fn consistent_with_prefix(&self, positions: &[usize], depth: usize) -> bool {
        let placed = &self.form_at(depth, positions[depth]).features;
        self.chains_of[depth].iter().all(|&c| {
            let chain = &self.chains[c];
            chain.enforced.iter().all(|&f| match placed.value(f) {
                None => true,
                Some(x) => chain
                    .members
                    .range(..depth)
                    .all(|&m| self.form_at(m, positions[m]).features.value(f).is_none_or(|y| y == x)),
            })
        })
    }
}

/// The grammatical vectors of one exercise, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldSet {
    exercise_id: String,
    vectors: Vec<StateVector>,
    // index[slider][position - 1] = gold ids with that position
    index: Vec<Vec<Vec<u32>>>,
}

impl GoldSet {
    /// Builds a gold set, sorting and deduplicating `vectors`.
    pub fn new(exercise_id: impl Into<String>, mut vectors: Vec<StateVector>) -> Self {
        vectors.sort();
        vectors.dedup();
        Self::from_sorted(exercise_id.into(), vectors)
    }

    fn from_sorted(exercise_id: String, vectors: Vec<StateVector>) -> Self {
        let width = vectors.first().map_or(0, StateVector::len);
        let mut index: Vec<Vec<Vec<u32>>> = vec![Vec::new(); width];
        for (id, v) in vectors.iter().enumerate() {
            for (slider, &p) in v.positions().iter().enumerate() {
                let bucket = &mut index[slider];
                if bucket.len() < p {
                    bucket.resize(p, Vec::new());
                }
                bucket[p - 1].push(id as u32);
            }
        }
        GoldSet {
            exercise_id,
            vectors,
            index,
        }
    }

    pub fn exercise_id(&self) -> &str {
        &self.exercise_id
    }

    pub fn vectors(&self) -> &[StateVector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn contains(&self, v: &StateVector) -> bool {
        self.vectors.binary_search(v).is_ok()
    }

    /// Per-gold count of positions shared with `v`, via the per-slider
    /// inverted index. `v` must have the gold width.
    pub(crate) fn match_counts(&self, v: &StateVector) -> Vec<usize> {
        let mut counts = vec![0usize; self.vectors.len()];
        for (slider, &p) in v.positions().iter().enumerate() {
            if let Some(ids) = self.index.get(slider).and_then(|b| b.get(p.wrapping_sub(1))) {
                for &id in ids {
                    counts[id as usize] += 1;
                }
            }
        }
        counts
    }

    /// Whether some gold has `position` on `slider`.
    pub fn any_gold_has(&self, slider: usize, position: usize) -> bool {
        self.index
            .get(slider)
            .and_then(|b| b.get(position.wrapping_sub(1)))
            .is_some_and(|ids| !ids.is_empty())
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn wf(surface: &str, category: Category, g: Gender, n: Number, p: Person) -> WordForm {
        WordForm::new(surface, surface, category, FeatureBundle::new(g, n, p))
    }

    pub fn slider(label: Category, forms: Vec<WordForm>) -> Slider {
        Slider {
            index: 0,
            label: SliderLabel::Category(label),
            forms,
        }
    }

    /// le/la/les + chat/chats/chatte + dort/dorment.
    pub fn ex_a() -> Exercise {
        use Category::*;
        use Gender::*;
        use Number::*;
        use Person::*;
        Exercise::new(
            "EX-A",
            vec![
                slider(
                    Det,
                    vec![
                        wf("le", Det, Masc, Sing, Person::Unspecified),
                        wf("la", Det, Fem, Sing, Person::Unspecified),
                        wf("les", Det, Gender::Unspecified, Plur, Person::Unspecified),
                    ],
                ),
                slider(
                    Nom,
                    vec![
                        wf("chat", Nom, Masc, Sing, P3),
                        wf("chats", Nom, Masc, Plur, P3),
                        wf("chatte", Nom, Fem, Sing, P3),
                    ],
                ),
                slider(
                    Ver,
                    vec![
                        wf("dort", Ver, Gender::Unspecified, Sing, P3),
                        wf("dorment", Ver, Gender::Unspecified, Plur, P3),
                    ],
                ),
            ],
            vec![
                AgreementChain::new([0, 1], [Feature::Gender, Feature::Number]),
                AgreementChain::new([1, 2], [Feature::Number]),
            ],
        )
        .unwrap()
    }

    /// le/les + enfant/enfants + mange/manges/mangent.
    pub fn ex_b() -> Exercise {
        use Category::*;
        use Gender::*;
        use Number::*;
        use Person::*;
        Exercise::new(
            "EX-B",
            vec![
                slider(
                    Det,
                    vec![
                        wf("le", Det, Masc, Sing, Person::Unspecified),
                        wf("les", Det, Gender::Unspecified, Plur, Person::Unspecified),
                    ],
                ),
                slider(
                    Nom,
                    vec![wf("enfant", Nom, Masc, Sing, P3), wf("enfants", Nom, Masc, Plur, P3)],
                ),
                slider(
                    Ver,
                    vec![
                        wf("mange", Ver, Gender::Unspecified, Sing, P3),
                        wf("manges", Ver, Gender::Unspecified, Sing, P2),
                        wf("mangent", Ver, Gender::Unspecified, Plur, P3),
                    ],
                ),
            ],
            vec![
                AgreementChain::new([0, 1], [Feature::Gender, Feature::Number]),
                AgreementChain::new([1, 2], [Feature::Number, Feature::Person]),
            ],
        )
        .unwrap()
    }

    pub fn sv(p: &[usize]) -> StateVector {
        StateVector::new(p.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn brute_force(ex: &Exercise) -> Vec<StateVector> {
        let mut out = vec![Vec::new()];
        for s in ex.sliders() {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<usize>| {
                    (1..=s.len()).map(move |p| {
                        let mut v = prefix.clone();
                        v.push(p);
                        v
                    })
                })
                .collect();
        }
        out.into_iter()
            .map(StateVector::new)
            .filter(|v| ex.check_grammatical(v).unwrap())
            .collect()
    }

    #[test]
    fn ex_a_grammaticality() {
        let ex = ex_a();
        assert!(ex.check_grammatical(&sv(&[1, 1, 1])).unwrap());
        assert!(!ex.check_grammatical(&sv(&[1, 3, 1])).unwrap());
        assert!(ex.check_grammatical(&sv(&[3, 2, 2])).unwrap());
    }

    #[test]
    fn ex_a_solutions_match_brute_force() {
        let ex = ex_a();
        let oracle = brute_force(&ex);
        assert_eq!(oracle, vec![sv(&[1, 1, 1]), sv(&[2, 3, 1]), sv(&[3, 2, 2])]);
        assert_eq!(ex.enumerate_solutions().unwrap().vectors(), oracle.as_slice());
    }

    #[test]
    fn single_form_sliders_have_one_solution() {
        let ex = Exercise::new(
            "one",
            vec![
                slider(
                    Category::Det,
                    vec![wf("le", Category::Det, Gender::Masc, Number::Sing, Person::Unspecified)],
                ),
                slider(
                    Category::Nom,
                    vec![wf("chat", Category::Nom, Gender::Masc, Number::Sing, Person::P3)],
                ),
            ],
            vec![AgreementChain::new([0, 1], [Feature::Gender])],
        )
        .unwrap();
        assert_eq!(ex.enumerate_solutions().unwrap().vectors(), &[sv(&[1, 1])]);
    }

    #[test]
    fn invalid_vectors_are_rejected() {
        let ex = ex_a();
        assert!(matches!(
            ex.check_grammatical(&sv(&[1, 1])),
            Err(GrammarError::InvalidVector(_))
        ));
        assert!(ex.check_grammatical(&sv(&[0, 1, 1])).is_err());
        assert!(ex.check_grammatical(&sv(&[1, 4, 1])).is_err());
    }

    #[test]
    fn capacity_error_names_exercise() {
        let err = ex_a().enumerate_solutions_capped(5).unwrap_err();
        assert_eq!(
            err,
            GrammarError::Capacity {
                exercise: "EX-A".into(),
                cap: 5
            }
        );
    }

    #[test]
    fn exercise_validation() {
        let det = || {
            slider(
                Category::Det,
                vec![wf("le", Category::Det, Gender::Masc, Number::Sing, Person::Unspecified)],
            )
        };
        assert!(Exercise::new("x", vec![det()], vec![AgreementChain::new([0], [Feature::Gender])]).is_err());
        assert!(Exercise::new(
            "x",
            vec![det(), det()],
            vec![AgreementChain::new([0, 2], [Feature::Gender])]
        )
        .is_err());
        assert!(Exercise::new("x", vec![det(), det()], vec![AgreementChain::new([0, 1], [])]).is_err());
        let verb = slider(
            Category::Ver,
            vec![wf("dort", Category::Ver, Gender::Unspecified, Number::Sing, Person::P3)],
        );
        assert!(Exercise::new("x", vec![det(), verb.clone()], vec![]).is_err());
        let ex = Exercise::new(
            "x",
            vec![det(), verb],
            vec![AgreementChain::new([0, 1], [Feature::Number])],
        )
        .unwrap();
        assert!(ex.principal_chain().is_some());
        let bad_verb = slider(
            Category::Ver,
            vec![wf(
                "dort",
                Category::Ver,
                Gender::Unspecified,
                Number::Unspecified,
                Person::P3,
            )],
        );
        assert!(Exercise::new(
            "x",
            vec![det(), bad_verb],
            vec![AgreementChain::new([0, 1], [Feature::Number])]
        )
        .is_err());
    }

    #[test]
    fn labels_round_trip_in_fixed_order() {
        let names: Vec<_> = SliderLabel::ALL.iter().map(|l| l.as_str()).collect();
        assert_eq!(names, ["det", "nom", "adj", "ver", "other", "GS", "Pred"]);
        for l in SliderLabel::ALL {
            assert_eq!(l.as_str().parse::<SliderLabel>().unwrap(), l);
        }
        let mut sorted = SliderLabel::ALL.to_vec();
        sorted.reverse();
        sorted.sort();
        assert_eq!(sorted, SliderLabel::ALL);
    }

    #[test]
    fn render_joins_surfaces() {
        assert_eq!(ex_a().render(&sv(&[2, 3, 1])).unwrap(), "la chatte dort");
    }
}
