mod common;

use common::*;
use reqwest::{Client, StatusCode};
use serde_json::{json, Value};

async fn post(c: &Client, url: String, body: Value) -> (StatusCode, Value) {
    let r = c.post(url).json(&body).send().await.unwrap();
    let status = r.status();
    (status, r.json().await.unwrap_or(Value::Null))
}

async fn new_session(c: &Client, s: &Running, exercise: &str, initial: &[usize]) -> String {
    let (status, body) = post(
        c,
        s.url("/sessions"),
        json!({"exercise_id": exercise, "student_id": "u1", "initial_vector": initial}),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["initial_vector"], json!(initial));
    body["session_id"].as_str().unwrap().to_owned()
}

#[tokio::test]
async fn exercises_show_surfaces_only() {
    let dir = tempfile::tempdir().unwrap();
    let s = start(dir.path(), true).await;
    let c = Client::new();
    let list: Value = c.get(s.url("/exercises")).send().await.unwrap().json().await.unwrap();
    assert_eq!(list.as_array().unwrap().len(), 2);
    let text = c
        .get(s.url("/exercises/EX-A"))
        .send()
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    let ex: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(ex["sliders"][1]["forms"], json!(["chat", "chats", "chatte"]));
    for leak in ["gender", "number", "person", "masc", "plur"] {
        assert!(!text.contains(leak), "{leak} in {text}");
    }
    let r = c.get(s.url("/exercises/EX-Z")).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::NOT_FOUND);
    s.stop().await;
}

#[tokio::test]
async fn play_loop_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let s = start(dir.path(), true).await;
    let c = Client::new();
    let id = new_session(&c, &s, "EX-A", &[1, 3, 1]).await;

    let (status, body) = post(
        &c,
        s.url(&format!("/sessions/{id}/move")),
        json!({"slider_index": 0, "new_position": 9}),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT, "{body}");
    let (status, _) = post(
        &c,
        s.url(&format!("/sessions/{id}/move")),
        json!({"slider_index": 7, "new_position": 1}),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _) = post(&c, s.url(&format!("/sessions/{id}/move")), json!({"slider_index": 0})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let r = c
        .post(s.url(&format!("/sessions/{id}/move")))
        .body("{not json")
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = post(
        &c,
        s.url("/sessions/s999999/move"),
        json!({"slider_index": 0, "new_position": 2}),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = post(
        &c,
        s.url("/sessions"),
        json!({"exercise_id": "EX-Z", "student_id": "u"}),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (status, body) = post(
        &c,
        s.url(&format!("/sessions/{id}/move")),
        json!({"slider_index": 1, "new_position": 1}),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({"vector": [1, 1, 1]}));
    let (status, body) = post(&c, s.url(&format!("/sessions/{id}/validate")), json!({})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({"result": "correct"}));
    post(
        &c,
        s.url(&format!("/sessions/{id}/move")),
        json!({"slider_index": 2, "new_position": 2}),
    )
    .await;
    let (_, body) = post(&c, s.url(&format!("/sessions/{id}/validate")), json!({})).await;
    assert_eq!(body, json!({"result": "incorrect"}));

    let replay: Value = c
        .get(s.url(&format!("/sessions/{id}/replay")))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let points = replay["trajectory"]["points"].as_array().unwrap();
    assert_eq!(points.len(), 3);
    let d: Vec<u64> = points.iter().map(|p| p["distance"].as_u64().unwrap()).collect();
    assert_eq!(d, vec![1, 0, 1]);
    assert_eq!(replay["events"].as_array().unwrap().len(), 4);
    assert_eq!(replay["events"][1]["kind"], "validate");

    let conv: Value = c
        .get(s.url("/analytics/convergence?exercise=EX-A"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(conv["mean_distance"], json!([1.0, 0.0, 1.0]));
    let r = c
        .get(s.url("/analytics/convergence?exercise=EX-B"))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::NOT_FOUND);
    let r = c
        .get(s.url("/analytics/convergence?exercise=EX-Z"))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::NOT_FOUND);
    s.stop().await;
}

#[tokio::test]
async fn hints_stream_scaffold_triggers() {
    let dir = tempfile::tempdir().unwrap();
    let s = start(dir.path(), true).await;
    let c = Client::new();
    let id = new_session(&c, &s, "EX-A", &[1, 3, 1]).await;
    let mut stream = c.get(s.url(&format!("/sessions/{id}/hints"))).send().await.unwrap();
    assert_eq!(stream.status(), StatusCode::OK);
    for _ in 0..3 {
        post(
            &c,
            s.url(&format!("/sessions/{id}/move")),
            json!({"slider_index": 2, "new_position": 2}),
        )
        .await;
        post(&c, s.url(&format!("/sessions/{id}/validate")), json!({})).await;
        post(
            &c,
            s.url(&format!("/sessions/{id}/move")),
            json!({"slider_index": 2, "new_position": 1}),
        )
        .await;
    }
    let mut seen = String::new();
    while !seen.contains("\n\n") {
        let chunk = tokio::time::timeout(std::time::Duration::from_secs(5), stream.chunk())
            .await
            .expect("a hint arrives")
            .unwrap()
            .unwrap();
        seen.push_str(std::str::from_utf8(&chunk).unwrap());
    }
    assert!(seen.contains("event: scaffold"), "{seen}");
    assert!(seen.contains("\"scenario\":\"engagement\""), "{seen}");
    s.stop().await;
}

#[tokio::test]
async fn hints_can_be_switched_off() {
    let dir = tempfile::tempdir().unwrap();
    let s = start(dir.path(), false).await;
    let c = Client::new();
    let id = new_session(&c, &s, "EX-B", &[1, 1, 2]).await;
    let r = c.get(s.url(&format!("/sessions/{id}/hints"))).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::NOT_FOUND);
    s.stop().await;
}

#[tokio::test]
async fn restart_restores_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let s = start(dir.path(), true).await;
    let c = Client::new();
    let a = new_session(&c, &s, "EX-A", &[3, 3, 1]).await;
    let b = new_session(&c, &s, "EX-B", &[2, 2, 2]).await;
    post(
        &c,
        s.url(&format!("/sessions/{a}/move")),
        json!({"slider_index": 0, "new_position": 2}),
    )
    .await;
    post(&c, s.url(&format!("/sessions/{b}/validate")), json!({})).await;
    post(&c, s.url(&format!("/sessions/{b}/validate")), json!({})).await;
    let before_a = c
        .get(s.url(&format!("/sessions/{a}/replay")))
        .send()
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    let before_b = c
        .get(s.url(&format!("/sessions/{b}/replay")))
        .send()
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    s.stop().await;

    let s = start(dir.path(), true).await;
    let after_a = c
        .get(s.url(&format!("/sessions/{a}/replay")))
        .send()
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    let after_b = c
        .get(s.url(&format!("/sessions/{b}/replay")))
        .send()
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    assert_eq!(before_a, after_a);
    assert_eq!(before_b, after_b);
    assert!(after_b.contains("\"revalidation\":true"));
    // new ids continue after the restored ones
    let c2 = new_session(&c, &s, "EX-A", &[1, 1, 1]).await;
    assert!(c2 > b, "{c2} after {b}");
    // a session started without an initial vector is not already solved
    let (_, body) = post(
        &c,
        s.url("/sessions"),
        json!({"exercise_id": "EX-A", "student_id": "u2"}),
    )
    .await;
    let golds = [json!([1, 1, 1]), json!([2, 3, 1]), json!([3, 2, 2])];
    assert!(!golds.contains(&body["initial_vector"]), "{body}");
    s.stop().await;
}
