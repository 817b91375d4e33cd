//! Trajectories of nearest-gold distance, convergence curves with linear
//! trends, and the per-label move, impact, gold-change and error tables.

use std::collections::BTreeMap;
use std::fmt::Debug;

use num_traits::{Float, FromPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{Exercise, Feature, GoldSet, SliderLabel, StateVector};
use crate::ingest::{audit_session, AuditReport, Session, ValidationResult};
use crate::metrics::{classify_validation_errors, nearest_gold, ImpactKind, MetricsError, MoveImpact};
use crate::pack::Catalog;

/// Floating-point type the aggregate statistics are computed in.
pub trait Real: Float + FromPrimitive + Debug + Serialize {}

impl<T: Float + FromPrimitive + Debug + Serialize> Real for T {}

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("inconsistent session: {0}")]
    Inconsistent(AuditReport),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("no trajectory matches the selection")]
    EmptySelection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    /// 0 is the initial state.
    pub step: usize,
    pub vector: StateVector,
    pub distance: usize,
    pub chosen_gold: StateVector,
    pub gold_changed_from_prev: bool,
    /// Slider moved to reach this state (none at step 0).
    pub moved_slider: Option<usize>,
    pub moved_label: Option<SliderLabel>,
    pub impact: Option<ImpactKind>,
}

/// A validation attempt overlaid on a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationMark {
    pub step: usize,
    pub event_index: usize,
    pub result: ValidationResult,
    pub revalidation: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub session_id: String,
    pub student_id: String,
    pub exercise_id: String,
    /// The exercise has a principal (verb) chain.
    pub verb_chain: bool,
    pub points: Vec<TrajectoryPoint>,
    pub validations: Vec<ValidationMark>,
}

impl Trajectory {
    pub fn distances(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.distance).collect()
    }
}

/// One point per state: the initial state, then one per compared move.
/// Validations do not add points; they are recorded as marks.
pub fn trajectory(s: &Session, ex: &Exercise, gs: &GoldSet) -> Result<Trajectory, StatsError> {
    let report = audit_session(s, Some(ex));
    if !report.is_consistent() {
        return Err(StatsError::Inconsistent(report));
    }
    let mut nearest = nearest_gold(&s.initial_vector, gs)?;
    let mut points = vec![TrajectoryPoint {
        step: 0,
        vector: s.initial_vector.clone(),
        distance: nearest.distance,
        chosen_gold: nearest.chosen.clone(),
        gold_changed_from_prev: false,
        moved_slider: None,
        moved_label: None,
        impact: None,
    }];
    let mut validations = Vec::new();
    let offset = s.events.len() - s.compared_events().len();
    for (i, ev) in s.compared_events().iter().enumerate() {
        match ev.moved_slider() {
            Some(slider) => {
                let next = nearest_gold(&ev.vector, gs)?;
                let impact = MoveImpact::between(&nearest, &next);
                points.push(TrajectoryPoint {
                    step: points.len(),
                    vector: ev.vector.clone(),
                    distance: next.distance,
                    chosen_gold: next.chosen.clone(),
                    gold_changed_from_prev: impact.gold_changed,
                    moved_slider: Some(slider),
                    moved_label: Some(ex.sliders()[slider].label),
                    impact: Some(impact.kind),
                });
                nearest = next;
            }
            None => validations.push(ValidationMark {
                step: points.len() - 1,
                event_index: offset + i,
                result: ev.validation().expect("validate event"),
                revalidation: ev.revalidation,
            }),
        }
    }
    Ok(Trajectory {
        session_id: s.session_id.clone(),
        student_id: s.student_id.clone(),
        exercise_id: s.exercise_id.clone(),
        verb_chain: ex.principal_chain().is_some(),
        points,
        validations,
    })
}

/// Which sessions a convergence curve pools.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionFilter {
    All,
    /// Exercises with a principal chain holding a verb.
    VerbChain,
    Exercise(String),
    StudentExercise {
        student: String,
        exercise: String,
    },
}

impl SessionFilter {
    pub fn matches(&self, t: &Trajectory) -> bool {
        match self {
            SessionFilter::All => true,
            SessionFilter::VerbChain => t.verb_chain,
            SessionFilter::Exercise(id) => &t.exercise_id == id,
            SessionFilter::StudentExercise { student, exercise } => {
                &t.student_id == student && &t.exercise_id == exercise
            }
        }
    }
}

/// How the linear trend is fitted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendMode {
    /// OLS over every (step, distance) pair of every selected session.
    #[default]
    Pooled,
    /// OLS over the (step, mean distance) curve.
    MeanCurve,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearTrend<T> {
    pub slope: T,
    pub intercept: T,
}

/// Ordinary least squares fit of `y = intercept + slope * x`. A degenerate
/// abscissa (all x equal) yields a flat line through the mean.
pub fn ols<T: Real>(points: &[(T, T)]) -> LinearTrend<T> {
    if points.is_empty() {
        return LinearTrend {
            slope: T::zero(),
            intercept: T::zero(),
        };
    }
    let n = T::from_usize(points.len()).expect("count fits");
    let (sx, sy) = points
        .iter()
        .fold((T::zero(), T::zero()), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxx, sxy) = points.iter().fold((T::zero(), T::zero()), |(a, b), &(x, y)| {
        let dx = x - mx;
        (a + dx * dx, b + dx * (y - my))
    });
    let slope = if sxx > T::zero() { sxy / sxx } else { T::zero() };
    LinearTrend {
        slope,
        intercept: my - slope * mx,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Convergence<T> {
    pub mean_distance: Vec<T>,
    /// Population standard deviation per step.
    pub std_distance: Vec<T>,
    /// Sessions contributing to each step.
    pub support: Vec<usize>,
    pub slope: T,
    pub intercept: T,
    pub mode: TrendMode,
}

pub fn aggregate_convergence<T: Real>(
    trajectories: &[Trajectory],
    filter: &SessionFilter,
    mode: TrendMode,
) -> Result<Convergence<T>, StatsError> {
    aggregate_convergence_by(trajectories, |t| filter.matches(t), mode)
}

/// Per-step mean/std over the sessions that reach the step. Reduction order
/// is the input order, so results do not depend on how trajectories were
/// computed.
pub fn aggregate_convergence_by<T: Real>(
    trajectories: &[Trajectory],
    keep: impl Fn(&Trajectory) -> bool,
    mode: TrendMode,
) -> Result<Convergence<T>, StatsError> {
    let selected: Vec<&Trajectory> = trajectories.iter().filter(|t| keep(t)).collect();
    if selected.is_empty() {
        return Err(StatsError::EmptySelection);
    }
    let len = selected.iter().map(|t| t.points.len()).max().unwrap_or(0);
    let to_t = |x: usize| T::from_usize(x).expect("count fits");
    let mut sums = vec![T::zero(); len];
    let mut support = vec![0usize; len];
    for t in &selected {
        for p in &t.points {
            sums[p.step] = sums[p.step] + to_t(p.distance);
            support[p.step] += 1;
        }
    }
    let mean_distance: Vec<T> = sums.iter().zip(&support).map(|(&s, &n)| s / to_t(n)).collect();
    let mut sq = vec![T::zero(); len];
    for t in &selected {
        for p in &t.points {
            let d = to_t(p.distance) - mean_distance[p.step];
            sq[p.step] = sq[p.step] + d * d;
        }
    }
    let std_distance = sq.iter().zip(&support).map(|(&s, &n)| (s / to_t(n)).sqrt()).collect();
    let trend = match mode {
        TrendMode::Pooled => {
            let pts: Vec<(T, T)> = selected
                .iter()
                .flat_map(|t| t.points.iter().map(|p| (to_t(p.step), to_t(p.distance))))
                .collect();
            ols(&pts)
        }
        TrendMode::MeanCurve => {
            let pts: Vec<(T, T)> = mean_distance.iter().enumerate().map(|(i, &m)| (to_t(i), m)).collect();
            ols(&pts)
        }
    };
    Ok(Convergence {
        mean_distance,
        std_distance,
        support,
        slope: trend.slope,
        intercept: trend.intercept,
        mode,
    })
}

/// Move counts per moved slider's label, over every move event (including a
/// first move that sets the initial state). Sessions on unknown exercises or
/// with out-of-range slider indices are skipped.
pub fn moves_by_label(sessions: &[Session], catalog: &Catalog) -> BTreeMap<SliderLabel, usize> {
    let mut table = BTreeMap::new();
    for s in sessions {
        let Some(ex) = catalog.exercise(&s.exercise_id) else {
            continue;
        };
        for slider in s.events.iter().filter_map(|e| e.moved_slider()) {
            if let Some(sl) = ex.slider(slider) {
                *table.entry(sl.label).or_insert(0) += 1;
            }
        }
    }
    table
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImpactRow {
    pub improved: usize,
    pub worsened: usize,
    pub unchanged: usize,
}

impl ImpactRow {
    pub fn total(&self) -> usize {
        self.improved + self.worsened + self.unchanged
    }

    /// (improved, worsened, unchanged) in percent; zeros for an empty row.
    pub fn percentages(&self) -> (f64, f64, f64) {
        let n = self.total();
        if n == 0 {
            return (0.0, 0.0, 0.0);
        }
        let pct = |x: usize| 100.0 * x as f64 / n as f64;
        (pct(self.improved), pct(self.worsened), pct(self.unchanged))
    }

    /// Percentages at one decimal, rounded by largest remainder so a
    /// non-empty row sums to exactly 100.0.
    pub fn rounded_percentages(&self) -> (f64, f64, f64) {
        let n = self.total() as u64;
        if n == 0 {
            return (0.0, 0.0, 0.0);
        }
        let counts = [self.improved as u64, self.worsened as u64, self.unchanged as u64];
        // tenths of a percent: floor(1000 * c / n), remainder 1000 * c mod n
        let mut tenths: Vec<u64> = counts.iter().map(|&c| 1000 * c / n).collect();
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by_key(|&i| (std::cmp::Reverse((1000 * counts[i]) % n), i));
        let missing = 1000 - tenths.iter().sum::<u64>();
        for &i in order.iter().take(missing as usize) {
            tenths[i] += 1;
        }
        let f = |t: u64| t as f64 / 10.0;
        (f(tenths[0]), f(tenths[1]), f(tenths[2]))
    }

    pub(crate) fn add(&mut self, kind: ImpactKind) {
        match kind {
            ImpactKind::Improved => self.improved += 1,
            ImpactKind::Worsened => self.worsened += 1,
            ImpactKind::Unchanged => self.unchanged += 1,
        }
    }
}

/// Impact classes of every compared move, per moved slider's label.
pub fn impact_table(trajectories: &[Trajectory]) -> BTreeMap<SliderLabel, ImpactRow> {
    let mut table: BTreeMap<SliderLabel, ImpactRow> = BTreeMap::new();
    for p in trajectories.iter().flat_map(|t| &t.points) {
        if let (Some(label), Some(kind)) = (p.moved_label, p.impact) {
            table.entry(label).or_default().add(kind);
        }
    }
    table
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldChangeRow {
    pub gold_changed: usize,
    pub total: usize,
}

pub fn gold_change_table(trajectories: &[Trajectory]) -> BTreeMap<SliderLabel, GoldChangeRow> {
    let mut table: BTreeMap<SliderLabel, GoldChangeRow> = BTreeMap::new();
    for p in trajectories.iter().flat_map(|t| &t.points) {
        if let Some(label) = p.moved_label {
            let row = table.entry(label).or_default();
            row.total += 1;
            row.gold_changed += usize::from(p.gold_changed_from_prev);
        }
    }
    table
}

/// Error counts per slider label (rows, fixed order) and feature (columns:
/// gender, number, person).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeatMap {
    pub rows: Vec<SliderLabel>,
    pub cols: Vec<Feature>,
    pub counts: Vec<[usize; 3]>,
}

impl Default for HeatMap {
    fn default() -> Self {
        HeatMap {
            rows: SliderLabel::ALL.to_vec(),
            cols: Feature::ALL.to_vec(),
            counts: vec![[0; 3]; SliderLabel::ALL.len()],
        }
    }
}

impl HeatMap {
    pub fn get(&self, label: SliderLabel, feature: Feature) -> usize {
        let r = self.rows.iter().position(|&l| l == label).expect("all labels are rows");
        self.counts[r][feature as usize]
    }

    pub fn row_total(&self, label: SliderLabel) -> usize {
        Feature::ALL.iter().map(|&f| self.get(label, f)).sum()
    }

    pub fn column_total(&self, feature: Feature) -> usize {
        self.counts.iter().map(|r| r[feature as usize]).sum()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    fn add(&mut self, label: SliderLabel, feature: Feature) {
        let r = self.rows.iter().position(|&l| l == label).expect("all labels are rows");
        self.counts[r][feature as usize] += 1;
    }
}

/// Sums the error records of every net incorrect validation. Re-validations
/// are skipped; so are sessions on unknown exercises or with invalid vectors.
pub fn error_heatmap(sessions: &[Session], catalog: &Catalog) -> HeatMap {
    let mut map = HeatMap::default();
    for s in sessions {
        let Some((ex, gs)) = catalog.get(&s.exercise_id) else {
            continue;
        };
        for ev in &s.events {
            if ev.revalidation || ev.validation() != Some(ValidationResult::Incorrect) {
                continue;
            }
            if let Ok(records) = classify_validation_errors(ex, &ev.vector, gs) {
                for r in records {
                    map.add(r.category, r.feature);
                }
            }
        }
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::fixtures::{ex_a, sv};
    use crate::grammar::Category;
    use crate::ingest::{Action, ActionEvent};
    use chrono::{TimeZone, Utc};

    pub(crate) fn session(id: &str, ex: &str, initial: &[usize], moves: &[(usize, usize)]) -> Session {
        let t0 = Utc.with_ymd_and_hms(2025, 4, 3, 9, 0, 0).unwrap();
        let mut v = sv(initial);
        let mut events = Vec::new();
        for (i, &(slider, pos)) in moves.iter().enumerate() {
            v = v.with_position(slider, pos);
            events.push(ActionEvent {
                ts: t0 + chrono::Duration::seconds(i as i64 + 1),
                action: Action::Move {
                    slider_index: slider,
                    new_position: pos,
                },
                vector: v.clone(),
                revalidation: false,
            });
        }
        Session {
            session_id: id.into(),
            student_id: "u".into(),
            exercise_id: ex.into(),
            started_at: t0,
            ended_at: events.last().map_or(t0, |e| e.ts),
            initial_vector: sv(initial),
            initial_is_first_move: false,
            events,
        }
    }

    fn fake(distances: &[usize]) -> Trajectory {
        Trajectory {
            session_id: "x".into(),
            student_id: "u".into(),
            exercise_id: "e".into(),
            verb_chain: false,
            points: distances
                .iter()
                .enumerate()
                .map(|(step, &distance)| TrajectoryPoint {
                    step,
                    vector: sv(&[1]),
                    distance,
                    chosen_gold: sv(&[1]),
                    gold_changed_from_prev: false,
                    moved_slider: None,
                    moved_label: None,
                    impact: None,
                })
                .collect(),
            validations: vec![],
        }
    }

    #[test]
    fn trajectory_examples() {
        let ex = ex_a();
        let gs = ex.enumerate_solutions().unwrap();
        let t = trajectory(&session("s", "EX-A", &[1, 3, 1], &[(0, 2)]), &ex, &gs).unwrap();
        assert_eq!(t.distances(), vec![1, 0]);

        let t = trajectory(&session("s", "EX-A", &[1, 3, 1], &[]), &ex, &gs).unwrap();
        assert_eq!(t.distances(), vec![1]);

        let t = trajectory(&session("s", "EX-A", &[1, 1, 2], &[(1, 2)]), &ex, &gs).unwrap();
        assert_eq!(t.distances(), vec![1, 1]);
        assert!(!t.points[0].gold_changed_from_prev);
        assert!(t.points[1].gold_changed_from_prev);
        assert_eq!(t.points[1].moved_label, Some(SliderLabel::Category(Category::Nom)));
    }

    #[test]
    fn inconsistent_session_is_refused() {
        let ex = ex_a();
        let gs = ex.enumerate_solutions().unwrap();
        let mut s = session("s", "EX-A", &[1, 3, 1], &[(0, 2)]);
        s.events[0].vector = sv(&[2, 2, 1]);
        assert!(matches!(trajectory(&s, &ex, &gs), Err(StatsError::Inconsistent(_))));
    }

    #[test]
    fn convergence_means_and_support() {
        let ts = [fake(&[2, 1, 0]), fake(&[2, 2, 1, 0])];
        let c: Convergence<f64> = aggregate_convergence(&ts, &SessionFilter::All, TrendMode::Pooled).unwrap();
        assert_eq!(c.mean_distance, vec![2.0, 1.5, 0.5, 0.0]);
        assert_eq!(c.support, vec![2, 2, 2, 1]);
    }

    #[test]
    fn perfect_line_has_unit_slope() {
        let c: Convergence<f64> =
            aggregate_convergence(&[fake(&[3, 2, 1, 0])], &SessionFilter::All, TrendMode::Pooled).unwrap();
        assert_eq!(c.slope, -1.0);
        assert_eq!(c.intercept, 3.0);
        let c: Convergence<f32> =
            aggregate_convergence(&[fake(&[3, 2, 1, 0])], &SessionFilter::All, TrendMode::MeanCurve).unwrap();
        assert_eq!(c.slope, -1.0f32);
    }

    #[test]
    fn single_trajectory_is_reproduced() {
        let d = [4, 3, 4, 2, 1, 1, 0];
        let c: Convergence<f64> = aggregate_convergence(&[fake(&d)], &SessionFilter::All, TrendMode::Pooled).unwrap();
        assert_eq!(c.mean_distance, d.iter().map(|&x| x as f64).collect::<Vec<_>>());
        assert!(c.std_distance.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn constant_cohort_is_flat() {
        let ts = [fake(&[2, 2, 2]), fake(&[2, 2]), fake(&[2, 2, 2, 2, 2])];
        let c: Convergence<f64> = aggregate_convergence(&ts, &SessionFilter::All, TrendMode::Pooled).unwrap();
        assert_eq!(c.slope, 0.0);
    }

    #[test]
    fn empty_selection_is_an_error() {
        let r: Result<Convergence<f64>, _> =
            aggregate_convergence(&[fake(&[1])], &SessionFilter::VerbChain, TrendMode::Pooled);
        assert!(matches!(r, Err(StatsError::EmptySelection)));
    }

    #[test]
    fn impact_rows_from_hand_trace() {
        let ex = ex_a();
        let gs = ex.enumerate_solutions().unwrap();
        // [1,1,2] -nom-> [1,2,2] (1->1, gold flips) -det-> [3,2,2] (1->0, stays)
        let t = trajectory(&session("s", "EX-A", &[1, 1, 2], &[(1, 2), (0, 3)]), &ex, &gs).unwrap();
        let table = impact_table(std::slice::from_ref(&t));
        let det = SliderLabel::Category(Category::Det);
        let nom = SliderLabel::Category(Category::Nom);
        assert_eq!(
            table[&nom],
            ImpactRow {
                improved: 0,
                worsened: 0,
                unchanged: 1
            }
        );
        assert_eq!(table[&det].percentages(), (100.0, 0.0, 0.0));
        let gold = gold_change_table(&[t]);
        assert_eq!(
            gold[&nom],
            GoldChangeRow {
                gold_changed: 1,
                total: 1
            }
        );
        assert_eq!(
            gold[&det],
            GoldChangeRow {
                gold_changed: 0,
                total: 1
            }
        );
    }

    #[test]
    fn rounded_rows_sum_to_one_hundred() {
        for (a, b, c) in [(1, 1, 1), (1, 2, 3), (7, 0, 0), (1, 5, 14), (333, 333, 334), (2, 2, 36)] {
            let row = ImpactRow {
                improved: a,
                worsened: b,
                unchanged: c,
            };
            let (x, y, z) = row.rounded_percentages();
            assert!(((x + y + z) - 100.0).abs() < 1e-9, "{a} {b} {c}: {x} {y} {z}");
            let (px, py, pz) = row.percentages();
            assert!((x - px).abs() <= 0.1 && (y - py).abs() <= 0.1 && (z - pz).abs() <= 0.1);
        }
    }
}
