use super::{leaderboard_from, ArenaError, ArenaState, Preference};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use std::path::Path;
use std::sync::{Arc, Mutex};
use tower_http::services::ServeDir;

pub type SharedArena = Arc<Mutex<ArenaState>>;

const PLACEHOLDER_PAGE: &str = "<!doctype html><title>Arena</title><p>The arena UI bundle is not installed. \
The API is served under /api.</p>";

#[derive(Deserialize)]
struct MatchupQuery {
    rater: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VoteBody {
    matchup_id: String,
    outcome: Preference,
    rater: String,
}

fn error_response(e: ArenaError) -> Response {
    let status = match e {
        ArenaError::NoContent => return StatusCode::NO_CONTENT.into_response(),
        ArenaError::UnknownMatchup(_) => StatusCode::NOT_FOUND,
        ArenaError::DuplicateVote(_) => StatusCode::CONFLICT,
        ArenaError::Config(_) | ArenaError::Log(_) | ArenaError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
    };
    (status, Json(serde_json::json!({ "error": e.to_string() }))).into_response()
}

fn poisoned() -> Response {
    (StatusCode::INTERNAL_SERVER_ERROR, "arena state unavailable").into_response()
}

async fn matchup(State(arena): State<SharedArena>, Query(q): Query<MatchupQuery>) -> Response {
    let Ok(mut guard) = arena.lock() else { return poisoned() };
    match guard.next_matchup(&q.rater) {
        Ok(payload) => Json(payload).into_response(),
        Err(e) => error_response(e),
    }
}

/// The log append happens under the lock, which serialises writers.
async fn vote(State(arena): State<SharedArena>, Json(body): Json<VoteBody>) -> Response {
    let result = tokio::task::spawn_blocking(move || {
        let mut guard = arena.lock().map_err(|_| ())?;
        Ok::<_, ()>(guard.record_vote(&body.matchup_id, body.outcome, &body.rater))
    })
    .await;
    match result {
        Ok(Ok(Ok(_))) => StatusCode::NO_CONTENT.into_response(),
        Ok(Ok(Err(e))) => error_response(e),
        _ => poisoned(),
    }
}

async fn leaderboard(State(arena): State<SharedArena>) -> Response {
    let snapshot = match arena.lock() {
        Ok(guard) => guard.snapshot(),
        Err(_) => return poisoned(),
    };
    let table = tokio::task::spawn_blocking(move || {
        let (votes, models, opts) = snapshot;
        leaderboard_from(&votes, &models, &opts)
    })
    .await;
    match table {
        Ok(Ok(t)) => Json(t.entries).into_response(),
        Ok(Err(e)) => error_response(e),
        Err(_) => poisoned(),
    }
}

async fn image(State(arena): State<SharedArena>, UrlPath(file): UrlPath<String>) -> Response {
    let Some(id) = file.strip_suffix(".png") else {
        return StatusCode::NOT_FOUND.into_response();
    };
    let Ok(guard) = arena.lock() else { return poisoned() };
    match guard.image(id) {
        Some(bytes) => ([(header::CONTENT_TYPE, "image/png")], bytes.to_vec()).into_response(),
        None => StatusCode::NOT_FOUND.into_response(),
    }
}

/// API routes plus static hosting of `static_dir` at `/` (a placeholder
/// page when absent).
pub fn router(arena: SharedArena, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/matchup", get(matchup))
        .route("/api/vote", post(vote))
        .route("/api/leaderboard", get(leaderboard))
        .route("/images/{file}", get(image))
        .with_state(arena);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(|| async { Html(PLACEHOLDER_PAGE) }),
    }
}

pub async fn serve(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app).await
}
