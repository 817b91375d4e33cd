use std::convert::Infallible;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::header;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tirettes_core::{Exercise, SliderLabel, StateVector};
use tokio::net::TcpListener;
use tokio::sync::broadcast::error::RecvError;

use crate::{ApiError, AppState};

type Shared = Arc<AppState>;

/// Any body that does not parse into `T` is a 422.
fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::Unprocessable(e.to_string()))
}

#[derive(Serialize)]
struct SliderView {
    index: usize,
    label: SliderLabel,
    forms: Vec<String>,
}

#[derive(Serialize)]
struct ExerciseView {
    id: String,
    sliders: Vec<SliderView>,
}

impl From<&Exercise> for ExerciseView {
    fn from(ex: &Exercise) -> Self {
        ExerciseView {
            id: ex.id().to_owned(),
            sliders: ex
                .sliders()
                .iter()
                .map(|s| SliderView {
                    index: s.index,
                    label: s.label,
                    forms: s.forms.iter().map(|f| f.surface.clone()).collect(),
                })
                .collect(),
        }
    }
}

async fn list_exercises(State(state): State<Shared>) -> Json<Vec<ExerciseView>> {
    Json(state.catalog().exercises().map(ExerciseView::from).collect())
}

async fn get_exercise(State(state): State<Shared>, Path(id): Path<String>) -> Result<Json<ExerciseView>, ApiError> {
    state
        .catalog()
        .exercise(&id)
        .map(|ex| Json(ex.into()))
        .ok_or_else(|| ApiError::NotFound(format!("no exercise `{id}`")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewSession {
    exercise_id: String,
    student_id: String,
    #[serde(default)]
    initial_vector: Option<Vec<usize>>,
}

#[derive(Serialize)]
struct SessionCreated {
    session_id: String,
    initial_vector: StateVector,
}

async fn create_session(State(state): State<Shared>, bytes: Bytes) -> Result<Json<SessionCreated>, ApiError> {
    let req: NewSession = body(&bytes)?;
    let (session_id, initial_vector) = state
        .create_session(&req.exercise_id, &req.student_id, req.initial_vector)
        .await?;
    Ok(Json(SessionCreated {
        session_id,
        initial_vector,
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MoveRequest {
    slider_index: usize,
    new_position: usize,
}

async fn apply_move(
    State(state): State<Shared>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> Result<Json<serde_json::Value>, ApiError> {
    let req: MoveRequest = body(&bytes)?;
    let vector = state.apply_move(&id, req.slider_index, req.new_position).await?;
    Ok(Json(serde_json::json!({ "vector": vector })))
}

async fn validate(State(state): State<Shared>, Path(id): Path<String>) -> Result<Json<serde_json::Value>, ApiError> {
    let result = state.validate(&id).await?;
    Ok(Json(serde_json::json!({ "result": result })))
}

async fn hints(
    State(state): State<Shared>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let rx = state.subscribe(&id).await?;
    let stream = futures::stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(trigger) => {
                    let event = Event::default()
                        .event("scaffold")
                        .json_data(&trigger)
                        .expect("trigger serializes");
                    return Some((Ok(event), rx));
                }
                Err(RecvError::Lagged(_)) => continue,
                Err(RecvError::Closed) => return None,
            }
        }
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

async fn replay(State(state): State<Shared>, Path(id): Path<String>) -> Result<Json<crate::Replay>, ApiError> {
    Ok(Json(state.replay(&id).await?))
}

async fn summary(State(state): State<Shared>) -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "application/json")], state.summary_json().await)
}

#[derive(Deserialize)]
struct ConvergenceQuery {
    exercise: Option<String>,
}

async fn convergence(
    State(state): State<Shared>,
    Query(q): Query<ConvergenceQuery>,
) -> Result<Json<tirettes_core::ConvergenceCurve>, ApiError> {
    Ok(Json(state.convergence(q.exercise.as_deref()).await?))
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/exercises", get(list_exercises))
        .route("/exercises/{id}", get(get_exercise))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/move", post(apply_move))
        .route("/sessions/{id}/validate", post(validate))
        .route("/sessions/{id}/hints", get(hints))
        .route("/sessions/{id}/replay", get(replay))
        .route("/analytics/summary", get(summary))
        .route("/analytics/convergence", get(convergence))
        .with_state(state)
}

pub async fn serve(listener: TcpListener, state: Shared) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
