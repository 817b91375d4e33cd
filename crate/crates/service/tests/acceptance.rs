//! Service round-trip acceptance check. Prints one PASS/FAIL line.

mod common;

use std::time::Instant;

use common::*;
use reqwest::Client;
use serde_json::{json, Value};
use tirettes_core::{analyze, summarize, Catalog, LogParser, Pack};

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

async fn call(c: &Client, url: String, body: Value) -> Result<Value, String> {
    let r = c.post(url).json(&body).send().await.map_err(|e| e.to_string())?;
    ensure!(r.status().is_success(), "status {}", r.status());
    r.json().await.map_err(|e| e.to_string())
}

/// Scripted EX-A session over HTTP, restart, re-ingest, compare summaries.
async fn criterion_9() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let c = Client::new();
    let s = start(dir.path(), true).await;
    let created = call(
        &c,
        s.url("/sessions"),
        json!({"exercise_id": "EX-A", "student_id": "u1", "initial_vector": [1, 3, 2]}),
    )
    .await?;
    let id = created["session_id"].as_str().ok_or("no session id")?.to_owned();
    for (slider, pos) in [(2, 1), (0, 2), (0, 1)] {
        call(
            &c,
            s.url(&format!("/sessions/{id}/move")),
            json!({"slider_index": slider, "new_position": pos}),
        )
        .await?;
    }
    let v = call(&c, s.url(&format!("/sessions/{id}/validate")), json!({})).await?;
    ensure!(v == json!({"result": "incorrect"}), "validate said {v}");
    let before = c
        .get(s.url("/analytics/summary"))
        .send()
        .await
        .map_err(|e| e.to_string())?
        .bytes()
        .await
        .map_err(|e| e.to_string())?;
    s.stop().await;

    let s = start(dir.path(), true).await;
    let after = c
        .get(s.url("/analytics/summary"))
        .send()
        .await
        .map_err(|e| e.to_string())?
        .bytes()
        .await
        .map_err(|e| e.to_string())?;
    s.stop().await;
    ensure!(before == after, "summary changed across restart");

    // the service log alone, through the batch pipeline
    let catalog = Catalog::new(Pack::load(fixtures_pack()).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let mut parser = LogParser::new();
    let mut files: Vec<_> = std::fs::read_dir(dir.path())
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    for f in &files {
        let reader = std::io::BufReader::new(std::fs::File::open(f).map_err(|e| e.to_string())?);
        parser.feed(None, reader).map_err(|e| e.to_string())?;
    }
    let batch = summarize(&analyze(parser.finish(), &catalog), &catalog).to_json();
    ensure!(
        batch.as_bytes() == &before[..],
        "batch re-ingest differs from the live summary"
    );
    let summary: Value = serde_json::from_slice(&before).map_err(|e| e.to_string())?;
    ensure!(
        summary["totals"]["n_moves"] == 3 && summary["totals"]["n_validations_attempted"] == 1,
        "totals {}",
        summary["totals"]
    );
    Ok(format!(
        "{} bytes identical after restart and batch re-ingest",
        before.len()
    ))
}

#[tokio::main]
async fn main() {
    let start = Instant::now();
    let outcome = criterion_9().await;
    let ms = start.elapsed().as_millis();
    match outcome {
        Ok(detail) => println!("criterion 9 (service round-trip): PASS [{detail}; {ms} ms]"),
        Err(why) => {
            println!("criterion 9 (service round-trip): FAIL [{why}; {ms} ms]");
            std::process::exit(1);
        }
    }
}
