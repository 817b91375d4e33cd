//! Real-time scaffolding rules over a live session.
//!
//! A [`RuleEngine`] follows one session event by event and raises
//! [`ScaffoldTrigger`]s. Run lengths count trajectory points, the initial
//! state included: a series `3,2,1` is a converging run of three.
//!
//! * `diverge_after_converge`: the distance rises right after a strictly
//!   decreasing run of at least `k_converge` points.
//! * `far_from_solution`: the last `far_persistence` points all sit at or
//!   above `ceil(far_threshold_fraction * n_sliders)`.
//! * `strategy_hint`: after `strategy_probe_moves` moves, some verb slider
//!   still holds a position no gold uses, at least two other sliders have
//!   been moved, and the session has had a non-improving move.
//! * `engagement`: `rapid_validate_count` validations with consecutive gaps
//!   of at most `rapid_validate_ms`, or any gap of at least `idle_ms`.
//!
//! Each scenario fires once per session; a correct validation re-arms all.

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{Category, Exercise, GoldSet, SliderLabel, StateVector};
use crate::ingest::{Action, ActionEvent, Session};
use crate::metrics::{nearest_gold, MetricsError, MoveImpact};
use crate::stats::{Trajectory, TrajectoryPoint};

#[derive(Debug, Error)]
pub enum ScaffoldError {
    #[error("event at {ts} arrives before {last}")]
    OutOfOrder { ts: DateTime<Utc>, last: DateTime<Utc> },
    #[error("event does not follow the current state {current}: {reason}")]
    Inconsistent { current: StateVector, reason: String },
    #[error("invalid scaffold config: {0}")]
    Config(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaffoldConfig {
    pub k_converge: usize,
    pub far_threshold_fraction: f64,
    pub far_persistence: usize,
    pub strategy_probe_moves: usize,
    pub rapid_validate_ms: i64,
    pub rapid_validate_count: usize,
    pub idle_ms: i64,
    /// Attach hint payloads (vectors, slider indices) to triggers. Off by
    /// default: payloads reveal more than the red/green feedback does.
    pub reveal_payloads: bool,
}

impl Default for ScaffoldConfig {
    fn default() -> Self {
        ScaffoldConfig {
            k_converge: 3,
            far_threshold_fraction: 0.5,
            far_persistence: 5,
            strategy_probe_moves: 4,
            rapid_validate_ms: 2000,
            rapid_validate_count: 3,
            idle_ms: 60_000,
            reveal_payloads: false,
        }
    }
}

impl ScaffoldConfig {
    pub fn validate(&self) -> Result<(), ScaffoldError> {
        let positive = self.k_converge > 0
            && self.far_threshold_fraction > 0.0
            && self.far_threshold_fraction.is_finite()
            && self.far_persistence > 0
            && self.strategy_probe_moves > 0
            && self.rapid_validate_ms > 0
            && self.rapid_validate_count > 0
            && self.idle_ms > 0;
        if positive {
            Ok(())
        } else {
            Err(ScaffoldError::Config("all thresholds must be positive".into()))
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ScaffoldError> {
        let cfg: ScaffoldConfig = serde_json::from_str(text).map_err(|e| ScaffoldError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Distance at or above which a state counts as far from any solution.
    pub fn far_threshold(&self, n_sliders: usize) -> usize {
        (self.far_threshold_fraction * n_sliders as f64).ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    DivergeAfterConverge,
    FarFromSolution,
    StrategyHint,
    Engagement,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::DivergeAfterConverge,
        Scenario::FarFromSolution,
        Scenario::StrategyHint,
        Scenario::Engagement,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngagementReason {
    RapidValidation,
    Idle { gap_ms: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HintPayload {
    /// Closest earlier state to come back to.
    ComeBack {
        vector: StateVector,
        distance: usize,
    },
    /// A slider whose correction brings the state one step closer.
    FixSlider {
        slider_index: usize,
    },
    /// Verb slider to settle first.
    VerbFirst {
        slider_index: usize,
    },
    Engagement {
        reason: EngagementReason,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaffoldTrigger {
    pub scenario: Scenario,
    pub session_id: String,
    /// Trajectory step current when the rule fired.
    pub step: usize,
    /// Index of the firing event in the session's event list.
    pub event_index: usize,
    pub payload: Option<HintPayload>,
}

/// Earliest state of minimal distance strictly before `step`.
pub fn come_back_payload(points: &[TrajectoryPoint], step: usize) -> Option<HintPayload> {
    points[..step.min(points.len())]
        .iter()
        .min_by_key(|p| p.distance)
        .map(|p| HintPayload::ComeBack {
            vector: p.vector.clone(),
            distance: p.distance,
        })
}

/// Lowest slider differing from the chosen gold at `step`. Correcting any
/// differing slider lowers the distance by exactly one, so ties are broken
/// by index alone.
pub fn fix_slider_payload(points: &[TrajectoryPoint], step: usize) -> Option<HintPayload> {
    let p = points.get(step)?;
    p.vector
        .positions()
        .iter()
        .zip(p.chosen_gold.positions())
        .position(|(a, b)| a != b)
        .map(|slider_index| HintPayload::FixSlider { slider_index })
}

/// Payload for a scenario-1 or scenario-2 trigger on a recorded trajectory.
pub fn hint_payload(trigger: &ScaffoldTrigger, trajectory: &Trajectory) -> Option<HintPayload> {
    match trigger.scenario {
        Scenario::DivergeAfterConverge => come_back_payload(&trajectory.points, trigger.step),
        Scenario::FarFromSolution => fix_slider_payload(&trajectory.points, trigger.step),
        Scenario::StrategyHint | Scenario::Engagement => None,
    }
}

/// Rule state for one live session. Events must arrive in session order.
#[derive(Debug, Clone)]
pub struct RuleEngine {
    cfg: ScaffoldConfig,
    session_id: String,
    n_sliders: usize,
    verb_sliders: Vec<usize>,
    points: Vec<TrajectoryPoint>,
    golds_at_last: Vec<StateVector>,
    last_ts: Option<DateTime<Utc>>,
    n_events: usize,
    n_moves: usize,
    moved_non_verb: BTreeSet<usize>,
    had_non_improving_move: bool,
    recent_validations: Vec<DateTime<Utc>>,
    fired: BTreeSet<Scenario>,
}

impl RuleEngine {
    pub fn new(
        session_id: impl Into<String>,
        exercise: &Exercise,
        golds: &GoldSet,
        initial: &StateVector,
        started_at: Option<DateTime<Utc>>,
        cfg: ScaffoldConfig,
    ) -> Result<Self, ScaffoldError> {
        cfg.validate()?;
        exercise.validate_vector(initial).map_err(MetricsError::from)?;
        let nearest = nearest_gold(initial, golds)?;
        let verb_sliders = exercise
            .sliders()
            .iter()
            .filter(|s| s.label == SliderLabel::Category(Category::Ver))
            .map(|s| s.index)
            .collect();
        Ok(RuleEngine {
            cfg,
            session_id: session_id.into(),
            n_sliders: exercise.n_sliders(),
            verb_sliders,
            points: vec![TrajectoryPoint {
                step: 0,
                vector: initial.clone(),
                distance: nearest.distance,
                chosen_gold: nearest.chosen.clone(),
                gold_changed_from_prev: false,
                moved_slider: None,
                moved_label: None,
                impact: None,
            }],
            golds_at_last: nearest.golds,
            last_ts: started_at,
            n_events: 0,
            n_moves: 0,
            moved_non_verb: BTreeSet::new(),
            had_non_improving_move: false,
            recent_validations: Vec::new(),
            fired: BTreeSet::new(),
        })
    }

    pub fn points(&self) -> &[TrajectoryPoint] {
        &self.points
    }

    pub fn current(&self) -> &StateVector {
        &self.points.last().expect("initial point").vector
    }

    /// Advances the engine clock without an event (e.g. the session start
    /// of a session whose first logged event is its initial move).
    pub fn skip_event(&mut self, ts: DateTime<Utc>) {
        self.last_ts = Some(ts);
        self.n_events += 1;
    }

    pub fn on_event(
        &mut self,
        exercise: &Exercise,
        golds: &GoldSet,
        ev: &ActionEvent,
    ) -> Result<Vec<ScaffoldTrigger>, ScaffoldError> {
        if let Some(last) = self.last_ts {
            if ev.ts < last {
                return Err(ScaffoldError::OutOfOrder { ts: ev.ts, last });
            }
        }
        let event_index = self.n_events;
        let mut triggers = Vec::new();
        if let Some(last) = self.last_ts {
            let gap_ms = (ev.ts - last).num_milliseconds();
            if gap_ms >= self.cfg.idle_ms {
                self.fire(
                    &mut triggers,
                    Scenario::Engagement,
                    event_index,
                    HintPayload::Engagement {
                        reason: EngagementReason::Idle { gap_ms },
                    },
                );
            }
        }
        match ev.action {
            Action::Move {
                slider_index,
                new_position,
            } => self.on_move(
                exercise,
                golds,
                ev,
                slider_index,
                new_position,
                event_index,
                &mut triggers,
            )?,
            Action::Validate { result } => {
                if &ev.vector != self.current() {
                    return Err(ScaffoldError::Inconsistent {
                        current: self.current().clone(),
                        reason: format!("validated {} instead", ev.vector),
                    });
                }
                if result.is_correct() {
                    self.fired.clear();
                    self.recent_validations.clear();
                } else {
                    self.recent_validations.push(ev.ts);
                    let n = self.cfg.rapid_validate_count;
                    if self.recent_validations.len() > n {
                        self.recent_validations.remove(0);
                    }
                    let rapid = self.recent_validations.len() == n
                        && self
                            .recent_validations
                            .windows(2)
                            .all(|w| (w[1] - w[0]).num_milliseconds() <= self.cfg.rapid_validate_ms);
                    if rapid {
                        self.fire(
                            &mut triggers,
                            Scenario::Engagement,
                            event_index,
                            HintPayload::Engagement {
                                reason: EngagementReason::RapidValidation,
                            },
                        );
                    }
                }
            }
        }
        self.last_ts = Some(ev.ts);
        self.n_events += 1;
        Ok(triggers)
    }

    #[allow(clippy::too_many_arguments)]
    fn on_move(
        &mut self,
        exercise: &Exercise,
        golds: &GoldSet,
        ev: &ActionEvent,
        slider_index: usize,
        new_position: usize,
        event_index: usize,
        triggers: &mut Vec<ScaffoldTrigger>,
    ) -> Result<(), ScaffoldError> {
        let current = self.current().clone();
        if slider_index >= current.len() || current.get(slider_index) == Some(new_position) {
            return Err(ScaffoldError::Inconsistent {
                current,
                reason: format!("no move on slider {slider_index}"),
            });
        }
        let next = current.with_position(slider_index, new_position);
        if next != ev.vector {
            return Err(ScaffoldError::Inconsistent {
                current,
                reason: format!("stored vector {} does not match the move", ev.vector),
            });
        }
        exercise.validate_vector(&next).map_err(MetricsError::from)?;
        let nearest = nearest_gold(&next, golds)?;
        let prev = self.points.last().expect("initial point");
        let gold_changed = !nearest.contains(&prev.chosen_gold);
        let impact = MoveImpact {
            kind: match nearest.distance.cmp(&prev.distance) {
                std::cmp::Ordering::Less => crate::metrics::ImpactKind::Improved,
                std::cmp::Ordering::Greater => crate::metrics::ImpactKind::Worsened,
                std::cmp::Ordering::Equal => crate::metrics::ImpactKind::Unchanged,
            },
            gold_changed,
            d_before: prev.distance,
            d_after: nearest.distance,
        };
        self.points.push(TrajectoryPoint {
            step: self.points.len(),
            vector: next,
            distance: nearest.distance,
            chosen_gold: nearest.chosen.clone(),
            gold_changed_from_prev: gold_changed,
            moved_slider: Some(slider_index),
            moved_label: Some(exercise.sliders()[slider_index].label),
            impact: Some(impact.kind),
        });
        self.golds_at_last = nearest.golds;
        self.n_moves += 1;
        if !self.verb_sliders.contains(&slider_index) {
            self.moved_non_verb.insert(slider_index);
        }
        if impact.d_after >= impact.d_before {
            self.had_non_improving_move = true;
        }
        let step = self.points.len() - 1;

        // scenario 1
        if impact.d_after > impact.d_before && self.decreasing_run_before(step) >= self.cfg.k_converge {
            let payload = come_back_payload(&self.points, step).expect("earlier points exist");
            self.fire(triggers, Scenario::DivergeAfterConverge, event_index, payload);
        }
        // scenario 2
        let threshold = self.cfg.far_threshold(self.n_sliders);
        let far_run = self.points.iter().rev().take_while(|p| p.distance >= threshold).count();
        if far_run >= self.cfg.far_persistence {
            if let Some(payload) = fix_slider_payload(&self.points, step) {
                self.fire(triggers, Scenario::FarFromSolution, event_index, payload);
            }
        }
        // scenario 3
        if self.n_moves >= self.cfg.strategy_probe_moves
            && self.moved_non_verb.len() >= 2
            && self.had_non_improving_move
        {
            let v = &self.points[step].vector;
            let stuck = self
                .verb_sliders
                .iter()
                .copied()
                .find(|&s| !golds.any_gold_has(s, v.get(s).expect("validated")));
            if let Some(slider_index) = stuck {
                self.fire(
                    triggers,
                    Scenario::StrategyHint,
                    event_index,
                    HintPayload::VerbFirst { slider_index },
                );
            }
        }
        Ok(())
    }

    /// Length in points of the strictly decreasing run ending just before `step`.
    fn decreasing_run_before(&self, step: usize) -> usize {
        if step == 0 {
            return 0;
        }
        let mut run = 1;
        let mut j = step - 1;
        while j > 0 && self.points[j - 1].distance > self.points[j].distance {
            run += 1;
            j -= 1;
        }
        run
    }

    fn fire(&mut self, out: &mut Vec<ScaffoldTrigger>, scenario: Scenario, event_index: usize, payload: HintPayload) {
        if !self.fired.insert(scenario) {
            return;
        }
        out.push(ScaffoldTrigger {
            scenario,
            session_id: self.session_id.clone(),
            step: self.points.len() - 1,
            event_index,
            payload: self.cfg.reveal_payloads.then_some(payload),
        });
    }
}

/// Runs a recorded session through a fresh engine.
pub fn replay_session(
    s: &Session,
    exercise: &Exercise,
    golds: &GoldSet,
    cfg: &ScaffoldConfig,
) -> Result<Vec<ScaffoldTrigger>, ScaffoldError> {
    let mut engine = RuleEngine::new(
        s.session_id.clone(),
        exercise,
        golds,
        &s.initial_vector,
        Some(s.started_at),
        cfg.clone(),
    )?;
    let mut out = Vec::new();
    for (i, ev) in s.events.iter().enumerate() {
        if i == 0 && s.initial_is_first_move {
            engine.skip_event(ev.ts);
            continue;
        }
        out.extend(engine.on_event(exercise, golds, ev)?);
    }
    Ok(out)
}

/// Reference sessions, one per scenario, on two six-slider exercises.
pub mod fixtures {
    use super::*;
    use crate::grammar::{AgreementChain, Feature, FeatureBundle, Gender, Number, Person, Slider, WordForm};
    use crate::ingest::ValidationResult;
    use chrono::TimeZone;

    fn wf(surface: &str, category: Category, g: Gender, n: Number, p: Person) -> WordForm {
        WordForm::new(surface, surface, category, FeatureBundle::new(g, n, p))
    }

    fn slider(label: Category, forms: Vec<WordForm>) -> Slider {
        Slider {
            index: 0,
            label: SliderLabel::Category(label),
            forms,
        }
    }

    fn np_sliders(n_adj: usize) -> Vec<crate::grammar::Slider> {
        use Category::*;
        use Gender::*;
        use Number::*;
        let mut s = vec![
            slider(
                Det,
                vec![
                    wf("le", Det, Masc, Sing, Person::Unspecified),
                    wf("la", Det, Fem, Sing, Person::Unspecified),
                ],
            ),
            slider(
                Nom,
                vec![
                    wf("chat", Nom, Masc, Sing, Person::P3),
                    wf("chats", Nom, Masc, Plur, Person::P3),
                ],
            ),
        ];
        for _ in 0..n_adj {
            s.push(slider(
                Adj,
                vec![
                    wf("noir", Adj, Masc, Sing, Person::Unspecified),
                    wf("noirs", Adj, Masc, Plur, Person::Unspecified),
                    wf("noire", Adj, Fem, Sing, Person::Unspecified),
                ],
            ));
        }
        s
    }

    /// Six sliders, one gold `[1,1,1,1,1,1]`, no verb.
    pub fn ex_c() -> Exercise {
        Exercise::new(
            "EX-C",
            np_sliders(4),
            vec![AgreementChain::new(0..6, [Feature::Gender, Feature::Number])],
        )
        .unwrap()
    }

    /// Six sliders ending in a verb, one gold `[1,1,1,1,1,1]`.
    pub fn ex_d() -> Exercise {
        let mut sliders = np_sliders(3);
        sliders.push(slider(
            Category::Ver,
            vec![
                wf("dort", Category::Ver, Gender::Unspecified, Number::Sing, Person::P3),
                wf("dorment", Category::Ver, Gender::Unspecified, Number::Plur, Person::P3),
            ],
        ));
        Exercise::new(
            "EX-D",
            sliders,
            vec![
                AgreementChain::new(0..5, [Feature::Gender, Feature::Number]),
                AgreementChain::new([1, 5], [Feature::Number]),
            ],
        )
        .unwrap()
    }

    pub enum Step {
        Move(usize, usize),
        Validate,
    }

    /// Session with events `gap_ms` apart.
    pub fn session(ex: &Exercise, initial: &[usize], steps: &[Step], gap_ms: i64) -> Session {
        let t0 = Utc.with_ymd_and_hms(2025, 4, 3, 9, 0, 0).unwrap();
        let mut v = StateVector::new(initial.to_vec());
        let mut events = Vec::new();
        for (i, step) in steps.iter().enumerate() {
            let ts = t0 + chrono::Duration::milliseconds(gap_ms * (i as i64 + 1));
            let action = match *step {
                Step::Move(slider_index, new_position) => {
                    v = v.with_position(slider_index, new_position);
                    Action::Move {
                        slider_index,
                        new_position,
                    }
                }
                Step::Validate => Action::Validate {
                    result: ValidationResult::from_bool(ex.check_grammatical(&v).unwrap()),
                },
            };
            events.push(ActionEvent {
                ts,
                action,
                vector: v.clone(),
                revalidation: false,
            });
        }
        Session {
            session_id: format!("{}-fixture", ex.id()),
            student_id: "u".into(),
            exercise_id: ex.id().into(),
            started_at: t0,
            ended_at: events.last().map_or(t0, |e| e.ts),
            initial_vector: StateVector::new(initial.to_vec()),
            initial_is_first_move: false,
            events,
        }
    }

    /// Distances 3,2,1,2.
    pub fn diverge_fixture() -> (Exercise, Session) {
        use Step::Move;
        let ex = ex_c();
        let s = session(&ex, &[2, 2, 2, 1, 1, 1], &[Move(0, 1), Move(1, 1), Move(3, 2)], 1000);
        (ex, s)
    }

    /// Distance 4 over five points.
    pub fn far_fixture() -> (Exercise, Session) {
        use Step::Move;
        let ex = ex_c();
        let s = session(
            &ex,
            &[2, 2, 2, 2, 1, 1],
            &[Move(2, 3), Move(3, 3), Move(2, 2), Move(3, 2)],
            1000,
        );
        (ex, s)
    }

    /// Distances 2,3,2,3,2 with the verb left plural.
    pub fn strategy_fixture() -> (Exercise, Session) {
        use Step::Move;
        let ex = ex_d();
        let s = session(
            &ex,
            &[1, 2, 1, 1, 1, 2],
            &[Move(2, 2), Move(2, 1), Move(3, 2), Move(3, 1)],
            1000,
        );
        (ex, s)
    }

    /// Three incorrect validations half a second apart.
    pub fn rapid_fixture() -> (Exercise, Session) {
        use Step::Validate;
        let ex = ex_c();
        let s = session(&ex, &[1, 1, 1, 1, 1, 2], &[Validate, Validate, Validate], 500);
        (ex, s)
    }
}
