//! Exercise pack files and pack-level validation reports.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{
    AgreementChain, Category, Exercise, Feature, FeatureBundle, Gender, GoldSet, GrammarError, Number, Person, Slider,
    SliderLabel, WordForm, DEFAULT_ENUMERATION_CAP,
};

#[derive(Debug, Error)]
pub enum PackError {
    #[error("cannot read pack: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed pack: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("duplicate exercise id `{0}`")]
    DuplicateId(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PackFile {
    pack_id: String,
    exercises: Vec<ExerciseFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExerciseFile {
    id: String,
    sliders: Vec<SliderFile>,
    chains: Vec<ChainFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SliderFile {
    label: SliderLabel,
    forms: Vec<FormFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FormFile {
    surface: String,
    lemma: String,
    category: Category,
    gender: Gender,
    number: Number,
    person: Person,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainFile {
    members: Vec<usize>,
    enforced: Vec<Feature>,
}

/// A parsed exercise pack. Exercise ids are not checked for uniqueness here;
/// see [`validate_exercise_pack`] and [`Catalog::new`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pack {
    pub pack_id: String,
    pub exercises: Vec<Exercise>,
}

impl Pack {
    pub fn from_reader(reader: impl Read) -> Result<Self, PackError> {
        let file: PackFile = serde_json::from_reader(reader)?;
        Self::from_file(file)
    }

    pub fn from_json(text: &str) -> Result<Self, PackError> {
        let file: PackFile = serde_json::from_str(text)?;
        Self::from_file(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PackError> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    fn from_file(file: PackFile) -> Result<Self, PackError> {
        let exercises = file
            .exercises
            .into_iter()
            .map(|ex| {
                let sliders = ex
                    .sliders
                    .into_iter()
                    .enumerate()
                    .map(|(index, s)| Slider {
                        index,
                        label: s.label,
                        forms: s
                            .forms
                            .into_iter()
                            .map(|f| WordForm {
                                surface: f.surface,
                                lemma: f.lemma,
                                category: f.category,
                                features: FeatureBundle::new(f.gender, f.number, f.person),
                            })
                            .collect(),
                    })
                    .collect();
                let chains = ex
                    .chains
                    .into_iter()
                    .map(|c| AgreementChain::new(c.members, c.enforced))
                    .collect();
                Exercise::new(ex.id, sliders, chains)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Pack {
            pack_id: file.pack_id,
            exercises,
        })
    }

    pub fn to_json(&self) -> String {
        let file = PackFile {
            pack_id: self.pack_id.clone(),
            exercises: self
                .exercises
                .iter()
                .map(|ex| ExerciseFile {
                    id: ex.id().to_owned(),
                    sliders: ex
                        .sliders()
                        .iter()
                        .map(|s| SliderFile {
                            label: s.label,
                            forms: s
                                .forms
                                .iter()
                                .map(|f| FormFile {
                                    surface: f.surface.clone(),
                                    lemma: f.lemma.clone(),
                                    category: f.category,
                                    gender: f.features.gender,
                                    number: f.features.number,
                                    person: f.features.person,
                                })
                                .collect(),
                        })
                        .collect(),
                    chains: ex
                        .chains()
                        .iter()
                        .map(|c| ChainFile {
                            members: c.members.iter().copied().collect(),
                            enforced: c.enforced.iter().copied().collect(),
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("pack serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExerciseReport {
    pub exercise_id: String,
    pub n_sliders: usize,
    /// `None` when enumeration failed (see `warnings`).
    pub n_solutions: Option<usize>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PackReport {
    pub pack_id: String,
    pub exercises: Vec<ExerciseReport>,
}

impl PackReport {
    /// Exercises per slider count.
    pub fn slider_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for e in &self.exercises {
            *h.entry(e.n_sliders).or_insert(0) += 1;
        }
        h
    }

    /// Exercises per solution count (failed enumerations excluded).
    pub fn solution_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for n in self.exercises.iter().filter_map(|e| e.n_solutions) {
            *h.entry(n).or_insert(0) += 1;
        }
        h
    }

    /// True when every exercise enumerated to at least one solution.
    pub fn is_playable(&self) -> bool {
        self.exercises.iter().all(|e| e.n_solutions.is_some_and(|n| n > 0))
    }
}

pub fn validate_exercise_pack(pack: &Pack) -> Result<PackReport, PackError> {
    let mut seen = BTreeSet::new();
    for ex in &pack.exercises {
        if !seen.insert(ex.id()) {
            return Err(PackError::DuplicateId(ex.id().to_owned()));
        }
    }
    let exercises = pack
        .exercises
        .iter()
        .map(|ex| {
            let mut warnings = Vec::new();
            let n_solutions = match ex.enumerate_solutions() {
                Ok(gs) => {
                    match gs.len() {
                        0 => warnings.push("0 solutions".to_owned()),
                        1 => warnings.push("1 solution".to_owned()),
                        _ => {}
                    }
                    Some(gs.len())
                }
                Err(e) => {
                    warnings.push(e.to_string());
                    None
                }
            };
            ExerciseReport {
                exercise_id: ex.id().to_owned(),
                n_sliders: ex.n_sliders(),
                n_solutions,
                warnings,
            }
        })
        .collect();
    Ok(PackReport {
        pack_id: pack.pack_id.clone(),
        exercises,
    })
}

/// Exercises of a pack keyed by id, with their gold sets computed eagerly.
#[derive(Debug, Clone)]
pub struct Catalog {
    pack_id: String,
    exercises: BTreeMap<String, Exercise>,
    golds: BTreeMap<String, GoldSet>,
}

impl Catalog {
    pub fn new(pack: Pack) -> Result<Self, PackError> {
        Self::with_cap(pack, DEFAULT_ENUMERATION_CAP)
    }

    pub fn with_cap(pack: Pack, cap: u64) -> Result<Self, PackError> {
        let mut exercises = BTreeMap::new();
        let mut golds = BTreeMap::new();
        for ex in pack.exercises {
            if exercises.contains_key(ex.id()) {
                return Err(PackError::DuplicateId(ex.id().to_owned()));
            }
            golds.insert(ex.id().to_owned(), ex.enumerate_solutions_capped(cap)?);
            exercises.insert(ex.id().to_owned(), ex);
        }
        Ok(Catalog {
            pack_id: pack.pack_id,
            exercises,
            golds,
        })
    }

    pub fn pack_id(&self) -> &str {
        &self.pack_id
    }

    pub fn exercise(&self, id: &str) -> Option<&Exercise> {
        self.exercises.get(id)
    }

    pub fn golds(&self, id: &str) -> Option<&GoldSet> {
        self.golds.get(id)
    }

    pub fn get(&self, id: &str) -> Option<(&Exercise, &GoldSet)> {
        Some((self.exercises.get(id)?, self.golds.get(id)?))
    }

    pub fn exercises(&self) -> impl Iterator<Item = &Exercise> {
        self.exercises.values()
    }
}
