//! Seeded synthetic cohorts with ground-truth counters.
//!
//! Every session starts from a uniformly drawn state (logged as a start
//! record) and follows one of four strategies:
//!
//! * `left_to_right` sets each slider to a target gold in slider order;
//! * `verb_first` settles the verb sliders in one move each, then sweeps
//!   every determiner left of the verb through its forms, then the rest;
//! * `random_walk` makes `max_moves` uniformly random moves;
//! * `oracle_guided` repeatedly corrects one slider against the nearest
//!   gold, so the distance drops by one per move.
//!
//! With probability `error_rate` a placement lands on a wrong form instead
//! (for `oracle_guided`, a random move replaces the correction). The
//! generator keeps its own tallies while it emits events; it never calls the
//! analytics it is meant to check. Randomness comes from ChaCha8 seeded with
//! the profile seed, so a profile reproduces the same bytes everywhere.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{Category, Exercise, Feature, GoldSet, SliderLabel, StateVector};
use crate::ingest::{Action, ActionEvent, Session, ValidationResult};
use crate::metrics::ImpactKind;
use crate::stats::ImpactRow;

/// Placements tried by the deliberate strategies before a final validation.
const MAX_PASSES: usize = 4;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("exercise {0} has no solution")]
    Unsolvable(String),
    #[error("no exercise to generate for")]
    NoExercise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    LeftToRight,
    VerbFirst,
    RandomWalk,
    OracleGuided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationsPolicy {
    ValidateWhenBelievedCorrect,
    ValidateEveryKMoves(usize),
}

/// Restricts injected mistakes to one label, choosing wrong forms that
/// differ from the intended one in `feature` only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorFocus {
    pub label: SliderLabel,
    pub feature: Feature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyProfile {
    pub name: StrategyName,
    pub error_rate: f64,
    pub seed: u64,
    pub validations_policy: ValidationsPolicy,
    /// Chance of validating the same state again right after a validation.
    #[serde(default)]
    pub revalidate_rate: f64,
    /// Walk length for `random_walk`, move budget for `oracle_guided`.
    #[serde(default = "default_max_moves")]
    pub max_moves: usize,
    #[serde(default = "default_students")]
    pub n_students: usize,
    #[serde(default)]
    pub error_focus: Option<ErrorFocus>,
}

fn default_max_moves() -> usize {
    20
}

fn default_students() -> usize {
    25
}

impl StrategyProfile {
    pub fn new(name: StrategyName, error_rate: f64, seed: u64, validations_policy: ValidationsPolicy) -> Self {
        StrategyProfile {
            name,
            error_rate,
            seed,
            validations_policy,
            revalidate_rate: 0.0,
            max_moves: default_max_moves(),
            n_students: default_students(),
            error_focus: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.error_rate) {
            return Err(SimError::InvalidProfile(format!(
                "error_rate {} outside [0,1]",
                self.error_rate
            )));
        }
        if !unit(self.revalidate_rate) {
            return Err(SimError::InvalidProfile(format!(
                "revalidate_rate {} outside [0,1]",
                self.revalidate_rate
            )));
        }
        if self.validations_policy == ValidationsPolicy::ValidateEveryKMoves(0) {
            return Err(SimError::InvalidProfile("k must be at least 1".into()));
        }
        if self.max_moves == 0 || self.n_students == 0 {
            return Err(SimError::InvalidProfile(
                "max_moves and n_students must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let p: StrategyProfile = serde_json::from_str(text).map_err(|e| SimError::InvalidProfile(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }
}

/// Counts tallied by the generator while emitting events.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub n_sessions: usize,
    pub n_students: usize,
    pub n_exercises: usize,
    pub n_moves: usize,
    pub n_validations_attempted: usize,
    pub n_revalidations: usize,
    pub n_correct: usize,
    pub n_incorrect: usize,
    pub moves_by_label: BTreeMap<SliderLabel, usize>,
    pub impacts: BTreeMap<SliderLabel, ImpactRow>,
    /// Injected mistakes, with the features each one breaks.
    pub n_injected_errors: usize,
    pub injected_error_features: BTreeMap<SliderLabel, BTreeMap<Feature, usize>>,
}

#[derive(Debug, Clone)]
pub struct Cohort {
    pub sessions: Vec<Session>,
    pub truth: GroundTruth,
}

impl Cohort {
    /// The whole cohort in the ingest log format.
    pub fn to_log(&self) -> String {
        let mut out = String::new();
        for s in &self.sessions {
            for line in s.to_log_lines() {
                out.push_str(&line);
                out.push('\n');
            }
        }
        out
    }

    pub fn truth_json(&self) -> String {
        serde_json::to_string_pretty(&self.truth).expect("ground truth serializes")
    }
}

/// `n_sessions` sessions on one exercise.
pub fn generate(ex: &Exercise, gs: &GoldSet, profile: &StrategyProfile, n_sessions: usize) -> Result<Cohort, SimError> {
    generate_cohort(&[(ex, gs)], profile, n_sessions)
}

/// `n_sessions` sessions spread round-robin over `exercises`.
pub fn generate_cohort(
    exercises: &[(&Exercise, &GoldSet)],
    profile: &StrategyProfile,
    n_sessions: usize,
) -> Result<Cohort, SimError> {
    profile.validate()?;
    if exercises.is_empty() {
        return Err(SimError::NoExercise);
    }
    for (ex, gs) in exercises {
        if gs.is_empty() {
            return Err(SimError::Unsolvable(ex.id().to_owned()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let epoch = Utc.with_ymd_and_hms(2025, 1, 6, 8, 0, 0).unwrap();
    let mut truth = GroundTruth::default();
    let mut students = BTreeSet::new();
    let mut used = BTreeSet::new();
    let mut sessions = Vec::with_capacity(n_sessions);
    for i in 0..n_sessions {
        let (ex, gs) = exercises[i % exercises.len()];
        let student = format!("student-{:03}", i % profile.n_students);
        students.insert(student.clone());
        used.insert(ex.id());
        let started_at = epoch + Duration::minutes(10 * i as i64);
        let session_id = format!("sim-{:016x}-{:06}", profile.seed, i);
        let mut w = Walker::start(ex, gs, profile, &mut rng, &mut truth, session_id, student, started_at);
        w.play();
        sessions.push(w.finish());
    }
    truth.n_sessions = n_sessions;
    truth.n_students = students.len();
    truth.n_exercises = used.len();
    Ok(Cohort { sessions, truth })
}

/// Distance to the closest gold by a plain scan, with the first closest gold.
fn scan_nearest<'g>(v: &StateVector, gs: &'g GoldSet) -> (usize, &'g StateVector) {
    let mut best: Option<(usize, &StateVector)> = None;
    for g in gs.vectors() {
        let d = v.positions().iter().zip(g.positions()).filter(|(a, b)| a != b).count();
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, g));
        }
    }
    best.expect("gold set is not empty")
}

struct Walker<'a> {
    ex: &'a Exercise,
    gs: &'a GoldSet,
    profile: &'a StrategyProfile,
    rng: &'a mut ChaCha8Rng,
    truth: &'a mut GroundTruth,
    session: Session,
    cur: StateVector,
    distance: usize,
    ts: DateTime<Utc>,
    moves_since_validation: usize,
    validated_since_move: bool,
}

impl<'a> Walker<'a> {
    #[allow(clippy::too_many_arguments)]
    fn start(
        ex: &'a Exercise,
        gs: &'a GoldSet,
        profile: &'a StrategyProfile,
        rng: &'a mut ChaCha8Rng,
        truth: &'a mut GroundTruth,
        session_id: String,
        student_id: String,
        started_at: DateTime<Utc>,
    ) -> Self {
        let initial = StateVector::new(ex.sliders().iter().map(|s| rng.gen_range(1..=s.len())).collect());
        let distance = scan_nearest(&initial, gs).0;
        Walker {
            ex,
            gs,
            profile,
            rng,
            truth,
            session: Session {
                session_id,
                student_id,
                exercise_id: ex.id().to_owned(),
                started_at,
                ended_at: started_at,
                initial_vector: initial.clone(),
                initial_is_first_move: false,
                events: Vec::new(),
            },
            cur: initial,
            distance,
            ts: started_at,
            moves_since_validation: 0,
            validated_since_move: false,
        }
    }

    fn finish(self) -> Session {
        let mut s = self.session;
        s.ended_at = self.ts;
        s
    }

    fn tick(&mut self) -> DateTime<Utc> {
        self.ts += Duration::milliseconds(self.rng.gen_range(400..2500));
        self.ts
    }

    fn label(&self, slider: usize) -> SliderLabel {
        self.ex.sliders()[slider].label
    }

    fn n_forms(&self, slider: usize) -> usize {
        self.ex.sliders()[slider].len()
    }

    fn pos(&self, slider: usize) -> usize {
        self.cur.get(slider).expect("slider in range")
    }

    fn movable(&self) -> Vec<usize> {
        (0..self.ex.n_sliders()).filter(|&i| self.n_forms(i) > 1).collect()
    }

    fn move_to(&mut self, slider: usize, position: usize) {
        debug_assert_ne!(self.pos(slider), position);
        let ts = self.tick();
        self.cur = self.cur.with_position(slider, position);
        let d = scan_nearest(&self.cur, self.gs).0;
        let kind = match d.cmp(&self.distance) {
            std::cmp::Ordering::Less => ImpactKind::Improved,
            std::cmp::Ordering::Greater => ImpactKind::Worsened,
            std::cmp::Ordering::Equal => ImpactKind::Unchanged,
        };
        self.distance = d;
        let label = self.label(slider);
        self.truth.n_moves += 1;
        *self.truth.moves_by_label.entry(label).or_insert(0) += 1;
        self.truth.impacts.entry(label).or_default().add(kind);
        self.session.events.push(ActionEvent {
            ts,
            action: Action::Move {
                slider_index: slider,
                new_position: position,
            },
            vector: self.cur.clone(),
            revalidation: false,
        });
        self.moves_since_validation += 1;
        self.validated_since_move = false;
        if let ValidationsPolicy::ValidateEveryKMoves(k) = self.profile.validations_policy {
            if self.moves_since_validation >= k {
                self.validate();
            }
        }
    }

    fn validate(&mut self) {
        self.validate_once();
        if self.rng.gen_bool(self.profile.revalidate_rate) {
            self.validate_once();
        }
    }

    fn validate_once(&mut self) {
        let ts = self.tick();
        let result = ValidationResult::from_bool(self.gs.contains(&self.cur));
        self.truth.n_validations_attempted += 1;
        if self.validated_since_move {
            self.truth.n_revalidations += 1;
        } else if result.is_correct() {
            self.truth.n_correct += 1;
        } else {
            self.truth.n_incorrect += 1;
        }
        self.session.events.push(ActionEvent {
            ts,
            action: Action::Validate { result },
            vector: self.cur.clone(),
            revalidation: self.validated_since_move,
        });
        self.moves_since_validation = 0;
        self.validated_since_move = true;
    }

    fn validate_when_believed(&mut self) {
        if self.profile.validations_policy == ValidationsPolicy::ValidateWhenBelievedCorrect
            && self.moves_since_validation > 0
        {
            self.validate();
        }
    }

    /// Closing validation for a session that has moved since its last one.
    fn close(&mut self) {
        if self.moves_since_validation > 0 || self.session.events.is_empty() {
            self.validate();
        }
    }

    /// A wrong position for `slider` that a mistake may land on, if any.
    fn mistake(&mut self, slider: usize, target: usize) -> Option<usize> {
        if self.profile.error_rate == 0.0 || !self.rng.gen_bool(self.profile.error_rate) {
            return None;
        }
        let enforced = self.ex.enforced_on(slider);
        let intended = &self.ex.form_at(slider, target).features;
        let broken = |p: usize| -> Vec<Feature> {
            let f = &self.ex.form_at(slider, p).features;
            enforced
                .iter()
                .copied()
                .filter(|&feat| matches!((f.value(feat), intended.value(feat)), (Some(a), Some(b)) if a != b))
                .collect()
        };
        let focus = self.profile.error_focus;
        let candidates: Vec<usize> = (1..=self.n_forms(slider))
            .filter(|&p| p != target && p != self.pos(slider))
            .filter(|&p| match focus {
                None => true,
                Some(f) => f.label == self.label(slider) && broken(p) == [f.feature],
            })
            .collect();
        let &p = candidates.choose(self.rng)?;
        let label = self.label(slider);
        self.truth.n_injected_errors += 1;
        let row = self.truth.injected_error_features.entry(label).or_default();
        for feat in broken(p) {
            *row.entry(feat).or_insert(0) += 1;
        }
        Some(p)
    }

    /// Sets one slider toward `target`, possibly landing on a mistake.
    fn place(&mut self, slider: usize, target: usize) {
        let dest = self.mistake(slider, target).unwrap_or(target);
        if dest != self.pos(slider) {
            self.move_to(slider, dest);
        }
    }

    /// Steps a slider through its forms until it rests on `target` (or a
    /// mistake), going all the way round when it already sits there.
    fn sweep(&mut self, slider: usize, target: usize) {
        let n = self.n_forms(slider);
        if n < 2 {
            return;
        }
        let stop = self.mistake(slider, target).unwrap_or(target);
        loop {
            let next = self.pos(slider) % n + 1;
            self.move_to(slider, next);
            if next == stop {
                break;
            }
        }
    }

    fn random_move(&mut self) {
        let movable = self.movable();
        let Some(&slider) = movable.choose(self.rng) else {
            return;
        };
        let current = self.pos(slider);
        let others: Vec<usize> = (1..=self.n_forms(slider)).filter(|&p| p != current).collect();
        let &p = others.choose(self.rng).expect("movable slider has another form");
        self.move_to(slider, p);
    }

    fn random_target(&mut self) -> StateVector {
        self.gs
            .vectors()
            .choose(self.rng)
            .expect("gold set is not empty")
            .clone()
    }

    fn play(&mut self) {
        match self.profile.name {
            StrategyName::LeftToRight => self.deliberate(false),
            StrategyName::VerbFirst => self.deliberate(true),
            StrategyName::RandomWalk => {
                for _ in 0..self.profile.max_moves {
                    self.random_move();
                    if self.gs.contains(&self.cur) {
                        self.validate_when_believed();
                    }
                }
            }
            StrategyName::OracleGuided => {
                for _ in 0..self.profile.max_moves {
                    if self.distance == 0 {
                        break;
                    }
                    if self.profile.error_rate > 0.0 && self.rng.gen_bool(self.profile.error_rate) {
                        self.random_move();
                        continue;
                    }
                    let gold = scan_nearest(&self.cur, self.gs).1.clone();
                    let wrong: Vec<usize> = (0..self.ex.n_sliders())
                        .filter(|&i| self.cur.get(i) != gold.get(i))
                        .collect();
                    let &slider = wrong.choose(self.rng).expect("distance is positive");
                    self.move_to(slider, gold.get(slider).expect("slider in range"));
                }
                self.validate_when_believed();
            }
        }
        self.close();
    }

    fn deliberate(&mut self, verb_first: bool) {
        let target = self.random_target();
        let t = |i: usize| target.get(i).expect("slider in range");
        let n = self.ex.n_sliders();
        let verbs: Vec<usize> = (0..n)
            .filter(|&i| self.label(i) == SliderLabel::Category(Category::Ver))
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        if verb_first {
            for &v in &verbs {
                if self.pos(v) != t(v) {
                    self.move_to(v, t(v));
                }
            }
            let first_verb = verbs.first().copied().unwrap_or(n);
            for i in 0..first_verb {
                if self.label(i) == SliderLabel::Category(Category::Det) {
                    self.sweep(i, t(i));
                }
            }
            order.retain(|&i| {
                !verbs.contains(&i) && !(i < first_verb && self.label(i) == SliderLabel::Category(Category::Det))
            });
        }
        for i in order {
            self.place(i, t(i));
        }
        self.validate_when_believed();
        for _ in 1..MAX_PASSES {
            if self.cur == target {
                break;
            }
            for i in 0..n {
                if self.pos(i) != t(i) {
                    self.place(i, t(i));
                }
            }
            self.validate_when_believed();
        }
    }
}
