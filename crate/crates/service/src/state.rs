//! Live sessions backed by an append-only event log.
//!
//! Every accepted action is written to `events-YYYY-MM-DD.jsonl` in the
//! ingest format before it touches memory. On startup the log directory is
//! parsed back and each session is replayed through a fresh rule engine, so
//! a restarted service holds the same sessions it had before.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use rand::Rng;
use serde::Serialize;
use tirettes_core::ingest::{LogParser, ValidationResult};
use tirettes_core::stats::{aggregate_convergence, Trajectory};
use tirettes_core::{
    analyze, mark_revalidations, summarize, trajectory, Action, ActionEvent, Catalog, Convergence, Pack, ParsedLog,
    RuleEngine, ScaffoldConfig, ScaffoldTrigger, Session, SessionFilter, StateVector, TrendMode,
};
use tokio::sync::{broadcast, Mutex, RwLock};

use crate::{ApiError, ServiceConfig, ServiceError};

/// One session in play, with its rule engine and hint channel.
pub struct LiveSession {
    pub session: Session,
    engine: RuleEngine,
    hints: broadcast::Sender<ScaffoldTrigger>,
}

struct EventLog {
    dir: PathBuf,
    lock: std::sync::Mutex<()>,
}

impl EventLog {
    fn append(&self, ts: DateTime<Utc>, line: &str) -> std::io::Result<()> {
        let _guard = self.lock.lock().expect("log lock");
        let path = self.dir.join(format!("events-{}.jsonl", ts.format("%Y-%m-%d")));
        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
        f.write_all(line.as_bytes())?;
        f.write_all(b"\n")?;
        f.flush()
    }

    fn files(&self) -> std::io::Result<Vec<PathBuf>> {
        let mut files: Vec<PathBuf> = std::fs::read_dir(&self.dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        files.sort();
        Ok(files)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplayEvent {
    pub ts: DateTime<Utc>,
    #[serde(flatten)]
    pub action: Action,
    pub vector: StateVector,
    pub revalidation: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Replay {
    pub session_id: String,
    pub student_id: String,
    pub exercise_id: String,
    pub started_at: DateTime<Utc>,
    pub initial_vector: StateVector,
    pub trajectory: Trajectory,
    pub events: Vec<ReplayEvent>,
}

pub struct AppState {
    catalog: Catalog,
    scaffold: ScaffoldConfig,
    hints_enabled: bool,
    log: EventLog,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<LiveSession>>>>,
    next_id: AtomicU64,
    warnings: Vec<String>,
}

fn now_ms() -> DateTime<Utc> {
    DateTime::from_timestamp_millis(Utc::now().timestamp_millis()).expect("clock in range")
}

fn parse_id(id: &str) -> Option<u64> {
    id.strip_prefix('s')?.parse().ok()
}

impl AppState {
    /// Loads the pack (computing every gold set), the scaffold settings and
    /// whatever sessions the log directory already holds.
    pub fn open(cfg: &ServiceConfig) -> Result<Self, ServiceError> {
        let pack = Pack::load(&cfg.pack)?;
        let catalog = Catalog::new(pack)?;
        let scaffold = match &cfg.scaffold_config {
            Some(p) => {
                let text =
                    std::fs::read_to_string(p).map_err(|e| ServiceError::Config(format!("{}: {e}", p.display())))?;
                ScaffoldConfig::from_json(&text)?
            }
            None => ScaffoldConfig::default(),
        };
        std::fs::create_dir_all(&cfg.log_dir)?;
        let log = EventLog {
            dir: cfg.log_dir.clone(),
            lock: std::sync::Mutex::new(()),
        };
        let mut parser = LogParser::new();
        for path in log.files()? {
            let f = std::fs::File::open(&path)?;
            parser.feed(Some(&path.display().to_string()), BufReader::new(f))?;
        }
        let parsed = parser.finish();
        let mut warnings: Vec<String> = parsed.errors.iter().map(|e| e.to_string()).collect();
        let mut sessions = BTreeMap::new();
        let mut max_id = 0;
        for s in parsed.sessions {
            max_id = max_id.max(parse_id(&s.session_id).unwrap_or(0));
            match Self::restore(&catalog, &scaffold, mark_revalidations(s)) {
                Ok(live) => {
                    sessions.insert(live.session.session_id.clone(), Arc::new(Mutex::new(live)));
                }
                Err(w) => warnings.push(w),
            }
        }
        Ok(AppState {
            catalog,
            scaffold,
            hints_enabled: cfg.hints,
            log,
            sessions: RwLock::new(sessions),
            next_id: AtomicU64::new(max_id + 1),
            warnings,
        })
    }

    fn restore(catalog: &Catalog, cfg: &ScaffoldConfig, s: Session) -> Result<LiveSession, String> {
        let (ex, gs) = catalog
            .get(&s.exercise_id)
            .ok_or_else(|| format!("session {}: unknown exercise `{}`", s.session_id, s.exercise_id))?;
        let mut engine = RuleEngine::new(
            s.session_id.clone(),
            ex,
            gs,
            &s.initial_vector,
            Some(s.started_at),
            cfg.clone(),
        )
        .map_err(|e| format!("session {}: {e}", s.session_id))?;
        for (i, ev) in s.events.iter().enumerate() {
            if i == 0 && s.initial_is_first_move {
                engine.skip_event(ev.ts);
                continue;
            }
            engine
                .on_event(ex, gs, ev)
                .map_err(|e| format!("session {}: {e}", s.session_id))?;
        }
        Ok(LiveSession {
            session: s,
            engine,
            hints: broadcast::channel(64).0,
        })
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn hints_enabled(&self) -> bool {
        self.hints_enabled
    }

    /// Problems met while reloading the log directory.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    async fn live(&self, id: &str) -> Result<Arc<Mutex<LiveSession>>, ApiError> {
        self.sessions
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("no session `{id}`")))
    }

    pub async fn create_session(
        &self,
        exercise_id: &str,
        student_id: &str,
        initial: Option<Vec<usize>>,
    ) -> Result<(String, StateVector), ApiError> {
        let (ex, gs) = self
            .catalog
            .get(exercise_id)
            .ok_or_else(|| ApiError::NotFound(format!("no exercise `{exercise_id}`")))?;
        let initial = match initial {
            Some(v) => {
                let v = StateVector::new(v);
                ex.validate_vector(&v).map_err(|e| ApiError::Conflict(e.to_string()))?;
                v
            }
            None => {
                // a scrambled sentence: avoid starting on a solution when possible
                let mut rng = rand::thread_rng();
                let mut draw = || StateVector::new(ex.sliders().iter().map(|s| rng.gen_range(1..=s.len())).collect());
                let mut v = draw();
                for _ in 0..32 {
                    if !gs.contains(&v) {
                        break;
                    }
                    v = draw();
                }
                v
            }
        };
        let id = format!("s{:06}", self.next_id.fetch_add(1, Ordering::SeqCst));
        let started_at = now_ms();
        let session = Session {
            session_id: id.clone(),
            student_id: student_id.to_owned(),
            exercise_id: exercise_id.to_owned(),
            started_at,
            ended_at: started_at,
            initial_vector: initial.clone(),
            initial_is_first_move: false,
            events: Vec::new(),
        };
        let engine = RuleEngine::new(id.clone(), ex, gs, &initial, Some(started_at), self.scaffold.clone())
            .map_err(|e| ApiError::Internal(e.to_string()))?;
        self.log
            .append(started_at, &session.start_record().to_line())
            .map_err(|e| ApiError::Internal(e.to_string()))?;
        let live = LiveSession {
            session,
            engine,
            hints: broadcast::channel(64).0,
        };
        self.sessions
            .write()
            .await
            .insert(id.clone(), Arc::new(Mutex::new(live)));
        Ok((id, initial))
    }

    /// Logs and applies one event, then forwards any triggers.
    fn record(&self, live: &mut LiveSession, ev: ActionEvent) -> Result<(), ApiError> {
        let (ex, gs) = self
            .catalog
            .get(&live.session.exercise_id)
            .expect("restored sessions have exercises");
        self.log
            .append(ev.ts, &live.session.event_record(&ev).to_line())
            .map_err(|e| ApiError::Internal(e.to_string()))?;
        let triggers = live
            .engine
            .on_event(ex, gs, &ev)
            .map_err(|e| ApiError::Internal(e.to_string()))?;
        live.session.ended_at = ev.ts;
        live.session.events.push(ev);
        if self.hints_enabled {
            for t in triggers {
                // nobody listening is fine
                let _ = live.hints.send(t);
            }
        }
        Ok(())
    }

    fn next_ts(s: &Session) -> DateTime<Utc> {
        let last = s.events.last().map_or(s.started_at, |e| e.ts);
        now_ms().max(last + Duration::milliseconds(1))
    }

    pub async fn apply_move(
        &self,
        id: &str,
        slider_index: usize,
        new_position: usize,
    ) -> Result<StateVector, ApiError> {
        let live = self.live(id).await?;
        let mut live = live.lock().await;
        let ex = self
            .catalog
            .exercise(&live.session.exercise_id)
            .expect("known exercise");
        let Some(slider) = ex.slider(slider_index) else {
            return Err(ApiError::Conflict(format!("no slider {slider_index}")));
        };
        if !(1..=slider.len()).contains(&new_position) {
            return Err(ApiError::Conflict(format!(
                "position {new_position} outside 1..={} on slider {slider_index}",
                slider.len()
            )));
        }
        let current = live.session.current_vector().clone();
        if current.get(slider_index) == Some(new_position) {
            return Err(ApiError::Conflict(format!(
                "slider {slider_index} is already at {new_position}"
            )));
        }
        let vector = current.with_position(slider_index, new_position);
        let ev = ActionEvent {
            ts: Self::next_ts(&live.session),
            action: Action::Move {
                slider_index,
                new_position,
            },
            vector: vector.clone(),
            revalidation: false,
        };
        self.record(&mut live, ev)?;
        Ok(vector)
    }

    pub async fn validate(&self, id: &str) -> Result<ValidationResult, ApiError> {
        let live = self.live(id).await?;
        let mut live = live.lock().await;
        let gs = self.catalog.golds(&live.session.exercise_id).expect("known exercise");
        let vector = live.session.current_vector().clone();
        let result = ValidationResult::from_bool(gs.contains(&vector));
        let revalidation = live.session.events.last().is_some_and(|e| !e.is_move());
        let ev = ActionEvent {
            ts: Self::next_ts(&live.session),
            action: Action::Validate { result },
            vector,
            revalidation,
        };
        self.record(&mut live, ev)?;
        Ok(result)
    }

    pub async fn subscribe(&self, id: &str) -> Result<broadcast::Receiver<ScaffoldTrigger>, ApiError> {
        if !self.hints_enabled {
            return Err(ApiError::NotFound("hints are disabled".into()));
        }
        let live = self.live(id).await?;
        let live = live.lock().await;
        Ok(live.hints.subscribe())
    }

    pub async fn replay(&self, id: &str) -> Result<Replay, ApiError> {
        let live = self.live(id).await?;
        let live = live.lock().await;
        let s = &live.session;
        let (ex, gs) = self.catalog.get(&s.exercise_id).expect("known exercise");
        let t = trajectory(s, ex, gs).map_err(|e| ApiError::Internal(e.to_string()))?;
        Ok(Replay {
            session_id: s.session_id.clone(),
            student_id: s.student_id.clone(),
            exercise_id: s.exercise_id.clone(),
            started_at: s.started_at,
            initial_vector: s.initial_vector.clone(),
            trajectory: t,
            events: s
                .events
                .iter()
                .map(|e| ReplayEvent {
                    ts: e.ts,
                    action: e.action,
                    vector: e.vector.clone(),
                    revalidation: e.revalidation,
                })
                .collect(),
        })
    }

    /// Every session, in id order.
    pub async fn snapshot(&self) -> Vec<Session> {
        let map = self.sessions.read().await;
        let mut out = Vec::with_capacity(map.len());
        for live in map.values() {
            out.push(live.lock().await.session.clone());
        }
        out
    }

    pub async fn summary_json(&self) -> String {
        let parsed = ParsedLog {
            sessions: self.snapshot().await,
            errors: Vec::new(),
        };
        summarize(&analyze(parsed, &self.catalog), &self.catalog).to_json()
    }

    pub async fn convergence(&self, exercise: Option<&str>) -> Result<Convergence<f64>, ApiError> {
        let filter = match exercise {
            Some(id) if self.catalog.exercise(id).is_none() => {
                return Err(ApiError::NotFound(format!("no exercise `{id}`")));
            }
            Some(id) => SessionFilter::Exercise(id.to_owned()),
            None => SessionFilter::All,
        };
        let parsed = ParsedLog {
            sessions: self.snapshot().await,
            errors: Vec::new(),
        };
        let analysis = analyze(parsed, &self.catalog);
        aggregate_convergence(&analysis.trajectories, &filter, TrendMode::Pooled)
            .map_err(|e| ApiError::NotFound(e.to_string()))
    }

    pub fn log_dir(&self) -> &Path {
        &self.log.dir
    }
}
