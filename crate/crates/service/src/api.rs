//! HTTP API for one annotation campaign.
//!
//! A session holds at most one pending query. `/api/next` selects it,
//! `/api/label` must answer it. Mutations take the write lock; reads share.

use std::sync::{Arc, RwLock};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use tusample::corpus::Example;
use tusample::engine::ScoreReport;
use tusample::sampler::{HistoryRecord, Role, SamplerState, Strategy};

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("the pool is empty")]
    Exhausted,
    #[error("{0:?} is not the pending query")]
    NotPending(String),
    #[error("{sense:?} is not a sense of {verb:?}")]
    InvalidSense { verb: String, sense: String },
    #[error("no example {0:?}")]
    NotFound(String),
    #[error(transparent)]
    Core(#[from] tusample::Error),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self {
            ApiError::Exhausted => StatusCode::GONE,
            ApiError::NotPending(_) => StatusCode::CONFLICT,
            ApiError::InvalidSense { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Core(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

pub struct Session {
    pub state: SamplerState,
    pub strategy: Strategy,
    /// Echoed verbatim by `/api/state`.
    pub config: Value,
    pub pending: Option<String>,
}

impl Session {
    pub fn new(state: SamplerState, strategy: Strategy, config: Value) -> Self {
        Session {
            state,
            strategy,
            config,
            pending: None,
        }
    }

    /// The pending query, selecting a new one if there is none.
    pub fn next_query(&mut self) -> Result<Query, ApiError> {
        let id = match &self.pending {
            Some(id) => id.clone(),
            None => {
                if self.state.pool_len() == 0 {
                    return Err(ApiError::Exhausted);
                }
                let id = self.state.select(&self.strategy)?;
                self.pending = Some(id.clone());
                id
            }
        };
        let example = self.state.example(&id).cloned().ok_or(ApiError::NotFound(id.clone()))?;
        let report = self.state.report(&id)?;
        Ok(Query {
            candidates: self.state.senses(&example.verb).iter().map(|s| s.to_string()).collect(),
            example,
            report,
        })
    }

    pub fn label(&mut self, req: &LabelRequest) -> Result<Counts, ApiError> {
        if self.pending.as_deref() != Some(req.example_id.as_str()) {
            return Err(ApiError::NotPending(req.example_id.clone()));
        }
        let verb = self.state.example(&req.example_id).map(|e| e.verb.clone()).unwrap_or_default();
        if !self.state.senses(&verb).contains(&req.sense.as_str()) {
            return Err(ApiError::InvalidSense {
                verb,
                sense: req.sense.clone(),
            });
        }
        self.state.commit_label(&req.example_id, &req.sense)?;
        self.pending = None;
        Ok(self.counts())
    }

    pub fn counts(&self) -> Counts {
        Counts {
            labeled: self.state.db().example_count(),
            pool: self.state.pool_len(),
            held_out: self.state.held_out_len(),
            iteration: self.state.iteration(),
            pool_accuracy: self.state.pool_accuracy(),
            held_out_accuracy: self.state.held_out_accuracy(),
        }
    }

    pub fn curve(&self) -> Vec<CurvePoint> {
        self.state.history().iter().map(CurvePoint::from).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Query {
    pub example: Example,
    pub candidates: Vec<String>,
    pub report: ScoreReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelRequest {
    pub example_id: String,
    pub sense: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    /// Examples in the database.
    pub labeled: usize,
    pub pool: usize,
    pub held_out: usize,
    pub iteration: usize,
    pub pool_accuracy: Option<f64>,
    pub held_out_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub labels: usize,
    pub example_id: String,
    pub held_out_accuracy: Option<f64>,
    pub pool_accuracy: Option<f64>,
    pub certainty_mean: Option<f64>,
}

impl From<&HistoryRecord> for CurvePoint {
    fn from(r: &HistoryRecord) -> Self {
        CurvePoint {
            labels: r.iteration,
            example_id: r.example_id.clone(),
            held_out_accuracy: r.held_out_accuracy,
            pool_accuracy: r.pool_accuracy,
            certainty_mean: r.certainty_mean,
        }
    }
}

pub type Shared = Arc<RwLock<Session>>;

pub fn router(session: Shared) -> Router {
    Router::new()
        .route("/api/state", get(state))
        .route("/api/next", get(next))
        .route("/api/label", post(label))
        .route("/api/curve", get(curve))
        .route("/api/example/{id}", get(example))
        .with_state(session)
}

async fn state(State(s): State<Shared>) -> Json<Value> {
    let s = s.read().unwrap();
    Json(json!({
        "counts": s.counts(),
        "strategy": s.strategy,
        "config": s.config,
        "pending": s.pending,
    }))
}

async fn next(State(s): State<Shared>) -> Result<Json<Query>, ApiError> {
    Ok(Json(s.write().unwrap().next_query()?))
}

async fn label(State(s): State<Shared>, Json(req): Json<LabelRequest>) -> Result<Json<Counts>, ApiError> {
    Ok(Json(s.write().unwrap().label(&req)?))
}

async fn curve(State(s): State<Shared>) -> Json<Vec<CurvePoint>> {
    Json(s.read().unwrap().curve())
}

async fn example(State(s): State<Shared>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let s = s.read().unwrap();
    let ex = s.state.example(&id).ok_or_else(|| ApiError::NotFound(id.clone()))?;
    let role = s.state.role(&id);
    let report = match role {
        Some(Role::Labeled) | None => None,
        _ => Some(s.state.report(&id)?),
    };
    let assigned = s
        .state
        .history()
        .iter()
        .find(|r| r.example_id == id)
        .map(|r| r.assigned_sense.clone());
    Ok(Json(json!({
        "example": ex,
        "role": role,
        "report": report,
        "assigned_sense": assigned,
    })))
}
