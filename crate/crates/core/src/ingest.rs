//! Line-delimited JSON event logs: parsing into sessions, replay audit,
//! re-validation marking and corpus totals.
//!
//! One record per line:
//!
//! ```text
//! {"session_id":"s1","student_id":"u7","exercise_id":"EX-A","ts":"2025-04-03T09:14:05.120Z","kind":"start","vector":[1,3,1]}
//! {"session_id":"s1","student_id":"u7","exercise_id":"EX-A","ts":"2025-04-03T09:14:06.002Z","kind":"move","slider_index":0,"new_position":2,"vector":[2,3,1]}
//! {"session_id":"s1","student_id":"u7","exercise_id":"EX-A","ts":"2025-04-03T09:14:07.310Z","kind":"validate","vector":[2,3,1],"result":"correct"}
//! ```
//!
//! `vector` is always the state *after* the action. Slider indices are
//! 0-based, positions 1-based. A session without a `start` record takes its
//! first event's vector as the initial state; when that event is a move, the
//! move itself is the initial placement and is never compared to a prior state.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use chrono::{DateTime, Duration, DurationRound, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{Exercise, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidationResult {
    Correct,
    Incorrect,
}

impl ValidationResult {
    pub fn from_bool(correct: bool) -> Self {
        if correct {
            ValidationResult::Correct
        } else {
            ValidationResult::Incorrect
        }
    }

    pub fn is_correct(self) -> bool {
        self == ValidationResult::Correct
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Action {
    Move { slider_index: usize, new_position: usize },
    Validate { result: ValidationResult },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionEvent {
    pub ts: DateTime<Utc>,
    #[serde(flatten)]
    pub action: Action,
    /// State after the action.
    pub vector: StateVector,
    /// Set by [`mark_revalidations`].
    #[serde(default)]
    pub revalidation: bool,
}

impl ActionEvent {
    pub fn is_move(&self) -> bool {
        matches!(self.action, Action::Move { .. })
    }

    pub fn validation(&self) -> Option<ValidationResult> {
        match self.action {
            Action::Validate { result } => Some(result),
            Action::Move { .. } => None,
        }
    }

    pub fn moved_slider(&self) -> Option<usize> {
        match self.action {
            Action::Move { slider_index, .. } => Some(slider_index),
            Action::Validate { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub student_id: String,
    pub exercise_id: String,
    pub started_at: DateTime<Utc>,
    pub ended_at: DateTime<Utc>,
    pub initial_vector: StateVector,
    /// No start record was logged and the first event is the initial move.
    pub initial_is_first_move: bool,
    pub events: Vec<ActionEvent>,
}

impl Session {
    /// Events whose state can be compared to a previous state.
    pub fn compared_events(&self) -> &[ActionEvent] {
        if self.initial_is_first_move {
            &self.events[1..]
        } else {
            &self.events
        }
    }

    pub fn n_moves(&self) -> usize {
        self.events.iter().filter(|e| e.is_move()).count()
    }

    /// Current state after all events.
    pub fn current_vector(&self) -> &StateVector {
        self.events.last().map_or(&self.initial_vector, |e| &e.vector)
    }

    /// Log lines in the ingest format, start record first when one applies.
    pub fn to_log_lines(&self) -> Vec<String> {
        let mut lines = Vec::with_capacity(self.events.len() + 1);
        if !self.initial_is_first_move {
            lines.push(
                self.record(RecordKind::Start, self.started_at, &self.initial_vector, None)
                    .to_line(),
            );
        }
        for ev in &self.events {
            lines.push(self.event_record(ev).to_line());
        }
        lines
    }

    pub fn event_record(&self, ev: &ActionEvent) -> LogRecord {
        match ev.action {
            Action::Move {
                slider_index,
                new_position,
            } => {
                let mut r = self.record(RecordKind::Move, ev.ts, &ev.vector, None);
                r.slider_index = Some(slider_index);
                r.new_position = Some(new_position);
                r
            }
            Action::Validate { result } => self.record(RecordKind::Validate, ev.ts, &ev.vector, Some(result)),
        }
    }

    pub fn start_record(&self) -> LogRecord {
        self.record(RecordKind::Start, self.started_at, &self.initial_vector, None)
    }

    fn record(
        &self,
        kind: RecordKind,
        ts: DateTime<Utc>,
        vector: &StateVector,
        result: Option<ValidationResult>,
    ) -> LogRecord {
        LogRecord {
            session_id: self.session_id.clone(),
            student_id: Some(self.student_id.clone()),
            exercise_id: Some(self.exercise_id.clone()),
            ts: Some(format_ts(ts)),
            kind,
            slider_index: None,
            new_position: None,
            vector: vector.positions().to_vec(),
            result,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Start,
    Move,
    Validate,
}

/// One log line as written on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRecord {
    pub session_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub student_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exercise_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ts: Option<String>,
    pub kind: RecordKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slider_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_position: Option<usize>,
    pub vector: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<ValidationResult>,
}

impl LogRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("log record serializes")
    }
}

/// ISO-8601 UTC with millisecond precision, e.g. `2025-04-03T09:14:05.120Z`.
pub fn format_ts(ts: DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn parse_ts(text: &str) -> Result<DateTime<Utc>, String> {
    let ts = DateTime::parse_from_rfc3339(text)
        .map_err(|e| format!("bad timestamp `{text}`: {e}"))?
        .with_timezone(&Utc);
    ts.duration_trunc(Duration::milliseconds(1))
        .map_err(|e| format!("bad timestamp `{text}`: {e}"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineError {
    /// File name, when known.
    pub source: Option<String>,
    /// 1-based line number.
    pub line: usize,
    pub reason: String,
}

impl std::fmt::Display for LineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.source {
            Some(s) => write!(f, "{s}:{}: {}", self.line, self.reason),
            None => write!(f, "line {}: {}", self.line, self.reason),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read log: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedLog {
    /// Sorted by session id.
    pub sessions: Vec<Session>,
    pub errors: Vec<LineError>,
}

struct Pending {
    source: Option<String>,
    line: usize,
    ts: Option<DateTime<Utc>>,
    record: LogRecord,
}

#[derive(Default)]
struct SessionBuilder {
    start: Option<Pending>,
    events: Vec<Pending>,
}

/// Accumulates records from one or more sources; sessions may span sources.
#[derive(Default)]
pub struct LogParser {
    sessions: BTreeMap<String, SessionBuilder>,
    errors: Vec<LineError>,
}

impl LogParser {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn feed(&mut self, source: Option<&str>, reader: impl BufRead) -> Result<(), IngestError> {
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            self.feed_line(source, i + 1, &line);
        }
        Ok(())
    }

    pub fn feed_line(&mut self, source: Option<&str>, line_no: usize, line: &str) {
        if line.trim().is_empty() {
            return;
        }
        match check_record(line) {
            Ok((record, ts)) => {
                let pending = Pending {
                    source: source.map(str::to_owned),
                    line: line_no,
                    ts,
                    record,
                };
                let builder = self.sessions.entry(pending.record.session_id.clone()).or_default();
                if pending.record.kind == RecordKind::Start {
                    if builder.start.is_some() {
                        self.errors.push(LineError {
                            source: pending.source,
                            line: line_no,
                            reason: "duplicate start record".into(),
                        });
                    } else {
                        builder.start = Some(pending);
                    }
                } else {
                    builder.events.push(pending);
                }
            }
            Err(reason) => self.errors.push(LineError {
                source: source.map(str::to_owned),
                line: line_no,
                reason,
            }),
        }
    }

    pub fn finish(mut self) -> ParsedLog {
        let mut sessions = Vec::new();
        for (session_id, builder) in std::mem::take(&mut self.sessions) {
            if let Some(s) = self.build(session_id, builder) {
                sessions.push(s);
            }
        }
        self.errors
            .sort_by(|a, b| (&a.source, a.line).cmp(&(&b.source, b.line)));
        ParsedLog {
            sessions,
            errors: self.errors,
        }
    }

    fn build(&mut self, session_id: String, builder: SessionBuilder) -> Option<Session> {
        let SessionBuilder { start, events } = builder;
        // ids come from the first record carrying them
        let mut student_id = start.as_ref().and_then(|p| p.record.student_id.clone());
        let mut exercise_id = start.as_ref().and_then(|p| p.record.exercise_id.clone());
        let mut kept: Vec<Pending> = Vec::with_capacity(events.len());
        for p in events {
            let student = p.record.student_id.clone().unwrap_or_default();
            let exercise = p.record.exercise_id.clone().unwrap_or_default();
            let sid = student_id.get_or_insert_with(|| student.clone());
            let eid = exercise_id.get_or_insert_with(|| exercise.clone());
            if *sid != student || *eid != exercise {
                self.errors.push(LineError {
                    source: p.source.clone(),
                    line: p.line,
                    reason: format!("student/exercise ids disagree with session {session_id}"),
                });
                continue;
            }
            kept.push(p);
        }
        let (Some(student_id), Some(exercise_id)) = (student_id, exercise_id) else {
            if let Some(p) = start {
                self.errors.push(LineError {
                    source: p.source,
                    line: p.line,
                    reason: "start record without student/exercise ids and no events".into(),
                });
            }
            return None;
        };
        // stable: equal timestamps keep file order
        kept.sort_by_key(|p| p.ts);
        let mut events: Vec<ActionEvent> = Vec::with_capacity(kept.len());
        let mut last: Option<DateTime<Utc>> = start.as_ref().and_then(|p| p.ts);
        for p in kept {
            let mut ts = p.ts.expect("events carry timestamps");
            if let Some(prev) = last {
                if ts <= prev {
                    ts = prev + Duration::milliseconds(1);
                }
            }
            last = Some(ts);
            let action = match p.record.kind {
                RecordKind::Move => Action::Move {
                    slider_index: p.record.slider_index.expect("checked"),
                    new_position: p.record.new_position.expect("checked"),
                },
                RecordKind::Validate => Action::Validate {
                    result: p.record.result.expect("checked"),
                },
                RecordKind::Start => unreachable!("start records are kept apart"),
            };
            events.push(ActionEvent {
                ts,
                action,
                vector: StateVector::new(p.record.vector),
                revalidation: false,
            });
        }
        let (initial_vector, initial_is_first_move, started_at) = match &start {
            Some(p) => (
                StateVector::new(p.record.vector.clone()),
                false,
                p.ts.or(events.first().map(|e| e.ts)).unwrap_or_default(),
            ),
            None => {
                let first = events.first()?;
                (first.vector.clone(), first.is_move(), first.ts)
            }
        };
        let ended_at = events.last().map_or(started_at, |e| e.ts);
        Some(Session {
            session_id,
            student_id,
            exercise_id,
            started_at,
            ended_at,
            initial_vector,
            initial_is_first_move,
            events,
        })
    }
}

fn check_record(line: &str) -> Result<(LogRecord, Option<DateTime<Utc>>), String> {
    let record: LogRecord = serde_json::from_str(line).map_err(|e| format!("malformed record: {e}"))?;
    if record.session_id.is_empty() {
        return Err("empty session_id".into());
    }
    let ts = record.ts.as_deref().map(parse_ts).transpose()?;
    let is_start = record.kind == RecordKind::Start;
    if !is_start {
        if ts.is_none() {
            return Err("missing ts".into());
        }
        if record.student_id.as_deref().is_none_or(str::is_empty) {
            return Err("missing student_id".into());
        }
        if record.exercise_id.as_deref().is_none_or(str::is_empty) {
            return Err("missing exercise_id".into());
        }
    }
    if record.vector.is_empty() {
        return Err("empty vector".into());
    }
    if record.vector.contains(&0) {
        return Err("position out of range".into());
    }
    match record.kind {
        RecordKind::Move => {
            if record.result.is_some() {
                return Err("`result` is forbidden on move".into());
            }
            let (Some(slider), Some(position)) = (record.slider_index, record.new_position) else {
                return Err("move requires slider_index and new_position".into());
            };
            if position == 0 {
                return Err("position out of range".into());
            }
            if slider >= record.vector.len() {
                return Err("slider index out of range".into());
            }
            if record.vector[slider] != position {
                return Err("vector does not reflect the move".into());
            }
        }
        RecordKind::Validate | RecordKind::Start => {
            if record.slider_index.is_some() || record.new_position.is_some() {
                return Err("slider_index/new_position are forbidden here".into());
            }
            match (record.kind, record.result) {
                (RecordKind::Validate, None) => return Err("validate requires result".into()),
                (RecordKind::Start, Some(_)) => return Err("`result` is forbidden on start".into()),
                _ => {}
            }
        }
    }
    Ok((record, ts))
}

/// Parses one stream. Malformed lines are reported, never fatal.
pub fn parse_log(reader: impl BufRead) -> Result<ParsedLog, IngestError> {
    let mut parser = LogParser::new();
    parser.feed(None, reader)?;
    Ok(parser.finish())
}

/// Flags every validate event that directly repeats the previous validation
/// (same vector, no move in between). Idempotent.
pub fn mark_revalidations(mut s: Session) -> Session {
    let mut last_validated: Option<StateVector> = None;
    for ev in &mut s.events {
        match ev.action {
            Action::Move { .. } => {
                ev.revalidation = false;
                last_validated = None;
            }
            Action::Validate { .. } => {
                ev.revalidation = last_validated.as_ref() == Some(&ev.vector);
                last_validated = Some(ev.vector.clone());
            }
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditIssue {
    /// Offending event, `None` for session-level issues.
    pub event: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub session_id: String,
    pub issues: Vec<AuditIssue>,
}

impl AuditReport {
    pub fn is_consistent(&self) -> bool {
        self.issues.is_empty()
    }
}

impl std::fmt::Display for AuditReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "session {}:", self.session_id)?;
        for issue in &self.issues {
            match issue.event {
                Some(i) => write!(f, " [event {i}] {};", issue.message)?,
                None => write!(f, " {};", issue.message)?,
            }
        }
        Ok(())
    }
}

/// Replays the moves from the initial state and checks every stored vector.
/// With an exercise, also checks ranges and logged validation results.
pub fn audit_session(s: &Session, ex: Option<&Exercise>) -> AuditReport {
    let mut issues = Vec::new();
    let mut issue = |event: Option<usize>, message: String| issues.push(AuditIssue { event, message });
    if let Some(ex) = ex {
        if ex.id() != s.exercise_id {
            issue(None, format!("exercise {} does not match {}", ex.id(), s.exercise_id));
        } else if let Err(e) = ex.validate_vector(&s.initial_vector) {
            issue(None, format!("initial state: {e}"));
        }
    }
    let mut current = s.initial_vector.clone();
    let skip = usize::from(s.initial_is_first_move);
    for (i, ev) in s.events.iter().enumerate() {
        if ev.vector.len() != current.len() {
            issue(Some(i), format!("vector {} has the wrong length", ev.vector));
            continue;
        }
        if i >= skip {
            match ev.action {
                Action::Move {
                    slider_index,
                    new_position,
                } => {
                    if current.get(slider_index) == Some(new_position) {
                        issue(
                            Some(i),
                            format!("move on slider {slider_index} does not change its position"),
                        );
                    } else if ev.vector != current.with_position(slider_index, new_position) {
                        issue(
                            Some(i),
                            format!("replayed state differs from stored vector {}", ev.vector),
                        );
                    }
                }
                Action::Validate { .. } => {
                    if ev.vector != current {
                        issue(
                            Some(i),
                            format!("validated vector {} is not the current state", ev.vector),
                        );
                    }
                }
            }
        }
        if let (Some(ex), Action::Validate { result }) = (ex, ev.action) {
            match ex.check_grammatical(&ev.vector) {
                Ok(ok) if ok != result.is_correct() => {
                    issue(Some(i), format!("logged result {result:?} disagrees with the exercise"));
                }
                Ok(_) => {}
                Err(e) => issue(Some(i), e.to_string()),
            }
        } else if let (Some(ex), Action::Move { .. }) = (ex, ev.action) {
            if let Err(e) = ex.validate_vector(&ev.vector) {
                issue(Some(i), e.to_string());
            }
        }
        current = ev.vector.clone();
    }
    for w in s.events.windows(2) {
        if w[1].ts <= w[0].ts {
            issue(None, "timestamps are not strictly increasing".into());
            break;
        }
    }
    AuditReport {
        session_id: s.session_id.clone(),
        issues,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusTotals {
    pub n_sessions: usize,
    pub n_students: usize,
    pub n_exercises: usize,
    pub n_actions: usize,
    pub n_moves: usize,
    pub n_validations_attempted: usize,
    pub n_revalidations: usize,
    pub n_validations_net: usize,
    pub n_correct: usize,
    pub n_incorrect: usize,
}

/// Totals over annotated sessions; re-validations are excluded from the net
/// and correct/incorrect counts.
pub fn corpus_totals(sessions: &[Session]) -> CorpusTotals {
    let mut t = CorpusTotals {
        n_sessions: sessions.len(),
        ..Default::default()
    };
    let mut students = BTreeSet::new();
    let mut exercises = BTreeSet::new();
    for s in sessions {
        students.insert(s.student_id.as_str());
        exercises.insert(s.exercise_id.as_str());
        for ev in &s.events {
            match ev.action {
                Action::Move { .. } => t.n_moves += 1,
                Action::Validate { result } => {
                    t.n_validations_attempted += 1;
                    if ev.revalidation {
                        t.n_revalidations += 1;
                    } else if result.is_correct() {
                        t.n_correct += 1;
                    } else {
                        t.n_incorrect += 1;
                    }
                }
            }
        }
    }
    t.n_students = students.len();
    t.n_exercises = exercises.len();
    t.n_actions = t.n_moves + t.n_validations_attempted;
    t.n_validations_net = t.n_validations_attempted - t.n_revalidations;
    t
}
