//! Agreement-constrained slider exercises and the analytics built on them.
//!
//! An [`Exercise`] is a row of sliders, each offering word forms with a
//! gender/number/person bundle; agreement chains tie sliders together. A
//! [`StateVector`] picks one position per slider, and the exercise's
//! [`GoldSet`] holds every grammatical vector. Student sessions are read
//! from line-delimited logs ([`ingest`]) and analysed as trajectories of
//! Hamming distance to the closest gold ([`metrics`], [`stats`]). The
//! [`scaffold`] rule engine watches a live trajectory and raises hints;
//! [`simgen`] produces synthetic cohorts with known ground truth.

pub mod grammar;
pub mod ingest;
pub mod metrics;
pub mod pack;
pub mod report;
pub mod scaffold;
pub mod simgen;
pub mod stats;

pub use grammar::{
    AgreementChain, Category, Exercise, Feature, FeatureBundle, Gender, GoldSet, GrammarError, Number, Person, Slider,
    SliderLabel, StateVector, SyntacticFunction, WordForm,
};
pub use ingest::{
    corpus_totals, mark_revalidations, parse_log, Action, ActionEvent, CorpusTotals, LogParser, ParsedLog, Session,
};
pub use metrics::{classify_move, classify_validation_errors, hamming, nearest_gold, MoveImpact, NearestGold};
pub use pack::{validate_exercise_pack, Catalog, Pack, PackReport};
pub use report::{analyze, summarize, write_report, Analysis, AnalyticsSummary};
pub use scaffold::{replay_session, RuleEngine, ScaffoldConfig, ScaffoldTrigger, Scenario};
pub use simgen::{generate, generate_cohort, Cohort, GroundTruth, StrategyName, StrategyProfile, ValidationsPolicy};
pub use stats::{
    aggregate_convergence, aggregate_convergence_by, trajectory, Convergence, LinearTrend, Real, SessionFilter,
    Trajectory, TrendMode,
};

/// Convergence curve in double precision.
pub type ConvergenceCurve = Convergence<f64>;
/// Convergence curve in single precision.
pub type ConvergenceCurve32 = Convergence<f32>;
/// Fitted trend line in double precision.
pub type Trend = LinearTrend<f64>;
