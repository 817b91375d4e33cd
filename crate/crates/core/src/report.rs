//! Corpus analysis: parsed logs in, audited trajectories and summary tables
//! out, as JSON or CSV files.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::grammar::{Feature, SliderLabel};
use crate::ingest::{audit_session, corpus_totals, mark_revalidations, CorpusTotals, LineError, ParsedLog, Session};
use crate::pack::Catalog;
use crate::stats::{
    aggregate_convergence, error_heatmap, gold_change_table, impact_table, moves_by_label, trajectory, Convergence,
    GoldChangeRow, HeatMap, ImpactRow, SessionFilter, Trajectory, TrendMode,
};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot write json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedSession {
    pub session_id: String,
    pub reason: String,
}

/// Sessions that survived annotation and audit, with their trajectories.
#[derive(Debug, Clone, Default)]
pub struct Analysis {
    pub sessions: Vec<Session>,
    pub trajectories: Vec<Trajectory>,
    pub skipped: Vec<SkippedSession>,
    pub line_errors: Vec<LineError>,
}

/// Annotates re-validations, audits each session against its exercise and
/// keeps the consistent ones. Nothing is silently corrected.
pub fn analyze(parsed: ParsedLog, catalog: &Catalog) -> Analysis {
    let mut out = Analysis {
        line_errors: parsed.errors,
        ..Default::default()
    };
    for s in parsed.sessions {
        let s = mark_revalidations(s);
        let Some((ex, gs)) = catalog.get(&s.exercise_id) else {
            out.skipped.push(SkippedSession {
                session_id: s.session_id.clone(),
                reason: format!("unknown exercise `{}`", s.exercise_id),
            });
            continue;
        };
        let report = audit_session(&s, Some(ex));
        if !report.is_consistent() {
            out.skipped.push(SkippedSession {
                session_id: s.session_id.clone(),
                reason: report.to_string(),
            });
            continue;
        }
        match trajectory(&s, ex, gs) {
            Ok(t) => {
                out.trajectories.push(t);
                out.sessions.push(s);
            }
            Err(e) => out.skipped.push(SkippedSession {
                session_id: s.session_id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImpactSummary {
    pub improved: usize,
    pub worsened: usize,
    pub unchanged: usize,
    pub improved_pct: f64,
    pub worsened_pct: f64,
    pub unchanged_pct: f64,
}

impl From<ImpactRow> for ImpactSummary {
    fn from(r: ImpactRow) -> Self {
        let (i, w, u) = r.rounded_percentages();
        ImpactSummary {
            improved: r.improved,
            worsened: r.worsened,
            unchanged: r.unchanged,
            improved_pct: i,
            worsened_pct: w,
            unchanged_pct: u,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ExerciseActivity {
    pub players: usize,
    pub sessions: usize,
    pub moves: usize,
    pub validations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceSet {
    pub all: Option<Convergence<f64>>,
    pub verb_chain: Option<Convergence<f64>>,
    pub per_exercise: BTreeMap<String, Convergence<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticsSummary {
    pub pack_id: String,
    pub totals: CorpusTotals,
    pub moves_by_category: BTreeMap<SliderLabel, usize>,
    pub moves_by_function: BTreeMap<SliderLabel, usize>,
    pub impact_by_category: BTreeMap<SliderLabel, ImpactSummary>,
    pub impact_by_function: BTreeMap<SliderLabel, ImpactSummary>,
    pub gold_change: BTreeMap<SliderLabel, GoldChangeRow>,
    pub heatmap: HeatMap,
    pub convergence: ConvergenceSet,
    pub exercises: BTreeMap<String, ExerciseActivity>,
    pub skipped: Vec<SkippedSession>,
    pub n_line_errors: usize,
}

impl AnalyticsSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

fn split_by_kind<V: Clone>(table: &BTreeMap<SliderLabel, V>) -> (BTreeMap<SliderLabel, V>, BTreeMap<SliderLabel, V>) {
    table
        .iter()
        .map(|(k, v)| (*k, v.clone()))
        .partition(|(k, _)| !k.is_function())
}

pub fn summarize(analysis: &Analysis, catalog: &Catalog) -> AnalyticsSummary {
    let (moves_by_category, moves_by_function) = split_by_kind(&moves_by_label(&analysis.sessions, catalog));
    let impacts: BTreeMap<SliderLabel, ImpactSummary> = impact_table(&analysis.trajectories)
        .into_iter()
        .map(|(k, v)| (k, v.into()))
        .collect();
    let (impact_by_category, impact_by_function) = split_by_kind(&impacts);
    let curve = |filter: SessionFilter| aggregate_convergence(&analysis.trajectories, &filter, TrendMode::Pooled).ok();
    let exercise_ids: BTreeSet<&str> = analysis.trajectories.iter().map(|t| t.exercise_id.as_str()).collect();
    let per_exercise = exercise_ids
        .into_iter()
        .filter_map(|id| Some((id.to_owned(), curve(SessionFilter::Exercise(id.to_owned()))?)))
        .collect();

    let mut exercises: BTreeMap<String, ExerciseActivity> = BTreeMap::new();
    let mut players: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for s in &analysis.sessions {
        let a = exercises.entry(s.exercise_id.clone()).or_default();
        a.sessions += 1;
        a.moves += s.n_moves();
        a.validations += s.events.len() - s.n_moves();
        players.entry(&s.exercise_id).or_default().insert(&s.student_id);
    }
    for (id, p) in players {
        exercises.get_mut(id).expect("seen above").players = p.len();
    }

    AnalyticsSummary {
        pack_id: catalog.pack_id().to_owned(),
        totals: corpus_totals(&analysis.sessions),
        moves_by_category,
        moves_by_function,
        impact_by_category,
        impact_by_function,
        gold_change: gold_change_table(&analysis.trajectories),
        heatmap: error_heatmap(&analysis.sessions, catalog),
        convergence: ConvergenceSet {
            all: curve(SessionFilter::All),
            verb_chain: curve(SessionFilter::VerbChain),
            per_exercise,
        },
        exercises,
        skipped: analysis.skipped.clone(),
        n_line_errors: analysis.line_errors.len(),
    }
}

fn labels(function: bool) -> impl Iterator<Item = SliderLabel> {
    SliderLabel::ALL
        .into_iter()
        .filter(move |l| l.is_function() == function)
}

fn write_convergence(path: &Path, c: &Convergence<f64>) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["step", "mean", "std", "support"])?;
    for (step, ((m, s), n)) in c.mean_distance.iter().zip(&c.std_distance).zip(&c.support).enumerate() {
        w.write_record([step.to_string(), format!("{m:.6}"), format!("{s:.6}"), n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `summary.json` and one CSV per table into `dir`. Rows follow the
/// fixed label order and always list every label of the table's kind.
pub fn write_report(dir: &Path, summary: &AnalyticsSummary) -> Result<(), ReportError> {
    std::fs::create_dir_all(dir)?;
    let mut f = std::fs::File::create(dir.join("summary.json"))?;
    f.write_all(summary.to_json().as_bytes())?;
    f.write_all(b"\n")?;

    let mut w = csv::Writer::from_path(dir.join("totals.csv"))?;
    w.write_record(["metric", "value"])?;
    let t = &summary.totals;
    for (k, v) in [
        ("sessions", t.n_sessions),
        ("students", t.n_students),
        ("exercises", t.n_exercises),
        ("actions", t.n_actions),
        ("moves", t.n_moves),
        ("validations_attempted", t.n_validations_attempted),
        ("revalidations", t.n_revalidations),
        ("validations_net", t.n_validations_net),
        ("correct", t.n_correct),
        ("incorrect", t.n_incorrect),
    ] {
        w.write_record([k.to_owned(), v.to_string()])?;
    }
    w.flush()?;

    for (name, table, function) in [
        ("moves_by_category.csv", &summary.moves_by_category, false),
        ("moves_by_function.csv", &summary.moves_by_function, true),
    ] {
        let mut w = csv::Writer::from_path(dir.join(name))?;
        w.write_record(["label", "moves"])?;
        for l in labels(function) {
            w.write_record([l.as_str().to_owned(), table.get(&l).copied().unwrap_or(0).to_string()])?;
        }
        w.flush()?;
    }

    for (name, table, function) in [
        ("impact_by_category.csv", &summary.impact_by_category, false),
        ("impact_by_function.csv", &summary.impact_by_function, true),
    ] {
        let mut w = csv::Writer::from_path(dir.join(name))?;
        w.write_record([
            "label",
            "improved",
            "worsened",
            "unchanged",
            "improved_pct",
            "worsened_pct",
            "unchanged_pct",
        ])?;
        for l in labels(function) {
            let r = table.get(&l).copied().unwrap_or_else(|| ImpactRow::default().into());
            w.write_record([
                l.as_str().to_owned(),
                r.improved.to_string(),
                r.worsened.to_string(),
                r.unchanged.to_string(),
                format!("{:.1}", r.improved_pct),
                format!("{:.1}", r.worsened_pct),
                format!("{:.1}", r.unchanged_pct),
            ])?;
        }
        w.flush()?;
    }

    let mut w = csv::Writer::from_path(dir.join("gold_change.csv"))?;
    w.write_record(["label", "gold_changed", "total"])?;
    for l in SliderLabel::ALL {
        let r = summary.gold_change.get(&l).copied().unwrap_or_default();
        w.write_record([l.as_str().to_owned(), r.gold_changed.to_string(), r.total.to_string()])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("heatmap.csv"))?;
    let mut header = vec!["label".to_owned()];
    header.extend(Feature::ALL.iter().map(|f| f.as_str().to_owned()));
    w.write_record(&header)?;
    for l in SliderLabel::ALL {
        let mut row = vec![l.as_str().to_owned()];
        row.extend(Feature::ALL.iter().map(|&f| summary.heatmap.get(l, f).to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("exercises.csv"))?;
    w.write_record(["exercise", "players", "sessions", "moves", "validations"])?;
    for (id, a) in &summary.exercises {
        w.write_record([
            id.clone(),
            a.players.to_string(),
            a.sessions.to_string(),
            a.moves.to_string(),
            a.validations.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("trends.csv"))?;
    w.write_record(["selection", "slope", "intercept", "sessions"])?;
    let c = &summary.convergence;
    let named = [("all", c.all.as_ref()), ("verb_chain", c.verb_chain.as_ref())]
        .into_iter()
        .filter_map(|(n, c)| Some((n.to_owned(), c?)))
        .chain(c.per_exercise.iter().map(|(id, c)| (format!("exercise:{id}"), c)));
    for (name, conv) in named {
        w.write_record([
            name,
            format!("{:.6}", conv.slope),
            format!("{:.6}", conv.intercept),
            conv.support.first().copied().unwrap_or(0).to_string(),
        ])?;
    }
    w.flush()?;

    if let Some(all) = &c.all {
        write_convergence(&dir.join("convergence_all.csv"), all)?;
    }
    if let Some(v) = &c.verb_chain {
        write_convergence(&dir.join("convergence_verb_chain.csv"), v)?;
    }
    for (id, conv) in &c.per_exercise {
        write_convergence(&dir.join(format!("convergence_{id}.csv")), conv)?;
    }
    Ok(())
}
