//! `tirettes`: validate packs, list solutions, analyse logs, generate
//! synthetic cohorts and replay sessions as text.
//!
//! Exit status is 0 on success, 1 on data errors and 2 on usage errors.

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use tirettes_core::ingest::audit_session;
use tirettes_core::{
    analyze, generate_cohort, mark_revalidations, summarize, trajectory, validate_exercise_pack, write_report, Catalog,
    LogParser, Pack, ParsedLog, StrategyProfile,
};

#[derive(Parser)]
#[command(name = "tirettes", version, about = "Tirettes exercise packs and session logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exercise pack tools.
    Pack {
        #[command(subcommand)]
        command: PackCommand,
    },
    /// Analyse session logs and write summary tables.
    Analyze {
        /// Log files in the line-delimited format.
        #[arg(required = true)]
        logs: Vec<PathBuf>,
        #[arg(long)]
        pack: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print one session step by step.
    Replay {
        logs: PathBuf,
        #[arg(long)]
        session: String,
        #[arg(long)]
        pack: PathBuf,
    },
    /// Generate a synthetic cohort and its ground-truth counters.
    Simgen {
        #[arg(long)]
        pack: PathBuf,
        /// Strategy profile (JSON).
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        n: usize,
        /// Overrides the profile seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Ground-truth sidecar; defaults to `<out>.truth.json`.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Restrict to these exercises (repeatable); all by default.
        #[arg(long)]
        exercise: Vec<String>,
    },
}

#[derive(Subcommand)]
enum PackCommand {
    /// Check a pack and report slider and solution counts.
    Validate { pack: PathBuf },
    /// Print the gold vectors of one exercise, one per line.
    Solutions {
        pack: PathBuf,
        #[arg(long)]
        exercise: String,
    },
}

fn load_catalog(path: &Path) -> Result<Catalog> {
    let pack = Pack::load(path).with_context(|| format!("loading pack {}", path.display()))?;
    Catalog::new(pack).with_context(|| format!("enumerating pack {}", path.display()))
}

fn read_logs(paths: &[PathBuf]) -> Result<ParsedLog> {
    let mut parser = LogParser::new();
    for p in paths {
        let file = File::open(p).with_context(|| format!("opening {}", p.display()))?;
        parser
            .feed(Some(&p.display().to_string()), BufReader::new(file))
            .with_context(|| format!("reading {}", p.display()))?;
    }
    Ok(parser.finish())
}

fn pack_validate(path: &Path, out: &mut impl Write) -> Result<bool> {
    let pack = Pack::load(path).with_context(|| format!("loading pack {}", path.display()))?;
    let report = validate_exercise_pack(&pack)?;
    writeln!(out, "pack {} ({} exercises)", report.pack_id, report.exercises.len())?;
    writeln!(out, "exercise\tsliders\tsolutions\twarnings")?;
    let mut ok = true;
    for e in &report.exercises {
        let n = e.n_solutions.map_or_else(|| "-".to_owned(), |n| n.to_string());
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            e.exercise_id,
            e.n_sliders,
            n,
            e.warnings.join("; ")
        )?;
        ok &= e.n_solutions.is_some_and(|n| n > 0);
    }
    let hist = |h: std::collections::BTreeMap<usize, usize>| {
        h.iter().map(|(k, v)| format!("{k}:{v}")).collect::<Vec<_>>().join(" ")
    };
    writeln!(out, "sliders per exercise\t{}", hist(report.slider_histogram()))?;
    writeln!(out, "solutions per exercise\t{}", hist(report.solution_histogram()))?;
    Ok(ok)
}

fn pack_solutions(path: &Path, exercise: &str, out: &mut impl Write) -> Result<()> {
    let pack = Pack::load(path).with_context(|| format!("loading pack {}", path.display()))?;
    let Some(ex) = pack.exercises.iter().find(|e| e.id() == exercise) else {
        bail!("no exercise `{exercise}` in {}", path.display());
    };
    for g in ex.enumerate_solutions()?.vectors() {
        writeln!(out, "{g}")?;
    }
    Ok(())
}

fn run_analyze(logs: &[PathBuf], pack: &Path, dir: &Path, out: &mut impl Write) -> Result<()> {
    let catalog = load_catalog(pack)?;
    let parsed = read_logs(logs)?;
    for e in &parsed.errors {
        eprintln!("warning: {e}");
    }
    let analysis = analyze(parsed, &catalog);
    for s in &analysis.skipped {
        eprintln!("warning: skipped session {}: {}", s.session_id, s.reason);
    }
    let summary = summarize(&analysis, &catalog);
    write_report(dir, &summary).with_context(|| format!("writing report to {}", dir.display()))?;
    let t = &summary.totals;
    writeln!(
        out,
        "{} sessions, {} actions ({} moves, {} validations, {} re-validations); report in {}",
        t.n_sessions,
        t.n_actions,
        t.n_moves,
        t.n_validations_attempted,
        t.n_revalidations,
        dir.display()
    )?;
    Ok(())
}

fn run_replay(logs: &Path, session: &str, pack: &Path, out: &mut impl Write) -> Result<()> {
    let catalog = load_catalog(pack)?;
    let parsed = read_logs(&[logs.to_path_buf()])?;
    let Some(s) = parsed.sessions.into_iter().find(|s| s.session_id == session) else {
        bail!("no session `{session}` in {}", logs.display());
    };
    let s = mark_revalidations(s);
    let Some((ex, gs)) = catalog.get(&s.exercise_id) else {
        bail!("session {session} plays unknown exercise `{}`", s.exercise_id);
    };
    let report = audit_session(&s, Some(ex));
    if !report.is_consistent() {
        bail!("{report}");
    }
    let t = trajectory(&s, ex, gs)?;
    writeln!(
        out,
        "session {} (student {}, exercise {})",
        s.session_id, s.student_id, s.exercise_id
    )?;
    for p in &t.points {
        write!(
            out,
            "frame {}\t{}\t{}\td={}",
            p.step,
            p.vector,
            ex.render(&p.vector)?,
            p.distance
        )?;
        if let Some(slider) = p.moved_slider {
            let label = p.moved_label.map(|l| l.as_str()).unwrap_or_default();
            write!(out, "\tmoved {slider} ({label})")?;
        }
        if p.gold_changed_from_prev {
            write!(out, "\tgold changed")?;
        }
        writeln!(out)?;
        for v in t.validations.iter().filter(|v| v.step == p.step) {
            let again = if v.revalidation { " (re-validation)" } else { "" };
            let result = if v.result.is_correct() { "correct" } else { "incorrect" };
            writeln!(out, "\tvalidate: {result}{again}")?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_simgen(
    pack: &Path,
    profile: &Path,
    n: usize,
    seed: Option<u64>,
    out_path: &Path,
    truth: Option<&Path>,
    only: &[String],
    out: &mut impl Write,
) -> Result<()> {
    let catalog = load_catalog(pack)?;
    let text = std::fs::read_to_string(profile).with_context(|| format!("reading {}", profile.display()))?;
    let mut profile = StrategyProfile::from_json(&text)?;
    if let Some(seed) = seed {
        profile.seed = seed;
    }
    let mut exercises = Vec::new();
    for ex in catalog.exercises() {
        if only.is_empty() || only.iter().any(|id| id == ex.id()) {
            exercises.push((ex, catalog.golds(ex.id()).expect("catalog has golds")));
        }
    }
    if let Some(missing) = only.iter().find(|id| catalog.exercise(id).is_none()) {
        bail!("no exercise `{missing}` in {}", pack.display());
    }
    let cohort = generate_cohort(&exercises, &profile, n)?;
    std::fs::write(out_path, cohort.to_log()).with_context(|| format!("writing {}", out_path.display()))?;
    let truth_path = truth.map(Path::to_path_buf).unwrap_or_else(|| {
        let mut p = out_path.as_os_str().to_owned();
        p.push(".truth.json");
        PathBuf::from(p)
    });
    std::fs::write(&truth_path, cohort.truth_json() + "\n")
        .with_context(|| format!("writing {}", truth_path.display()))?;
    writeln!(
        out,
        "{} sessions, {} moves, {} validations written to {}",
        cohort.truth.n_sessions,
        cohort.truth.n_moves,
        cohort.truth.n_validations_attempted,
        out_path.display()
    )?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Pack { command } => match command {
            PackCommand::Validate { pack } => return pack_validate(&pack, &mut out),
            PackCommand::Solutions { pack, exercise } => pack_solutions(&pack, &exercise, &mut out)?,
        },
        Command::Analyze { logs, pack, out: dir } => run_analyze(&logs, &pack, &dir, &mut out)?,
        Command::Replay { logs, session, pack } => run_replay(&logs, &session, &pack, &mut out)?,
        Command::Simgen {
            pack,
            profile,
            n,
            seed,
            out: path,
            truth,
            exercise,
        } => run_simgen(&pack, &profile, n, seed, &path, truth.as_deref(), &exercise, &mut out)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
