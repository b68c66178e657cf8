use std::collections::{HashMap, HashSet};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderMap};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use log::{error, info, warn};
use nearopt_core::metrics::Metric;
use nearopt_core::store::SampleStore;
use nearopt_core::submission::{read_submissions, SubmissionLog, SubmissionRecord};
use nearopt_core::DesignPoint;
use rand::rngs::OsRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::space::Space;
use crate::ExplorerError;

pub const DEFAULT_SESSION_TTL: Duration = Duration::from_secs(2 * 3600);
pub const EXPORT_SECRET_HEADER: &str = "x-export-secret";

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub store: PathBuf,
    pub submissions: PathBuf,
    pub addr: SocketAddr,
    pub seed: u64,
    pub session_ttl: Duration,
    pub export_secret: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SessionState {
    pub session_id: String,
    pub current: DesignPoint,
    /// RFC 3339.
    pub created_at: String,
}

struct Session {
    state: SessionState,
    last_seen: Instant,
}

struct Submissions {
    log: SubmissionLog,
    seen: HashSet<String>,
}

pub struct AppState {
    space: RwLock<Option<Arc<Space>>>,
    sessions: Mutex<HashMap<String, Session>>,
    rng: Mutex<ChaCha8Rng>,
    submissions: Mutex<Submissions>,
    ttl: Duration,
    export_secret: Option<String>,
}

impl AppState {
    /// Open (and replay) the submission log; the space is installed later.
    pub fn new(
        submissions: &std::path::Path,
        seed: u64,
        ttl: Duration,
        export_secret: Option<String>,
    ) -> anyhow::Result<Arc<Self>> {
        let seen = read_submissions(submissions)?
            .into_iter()
            .map(|r| r.session_id)
            .collect();
        let log = SubmissionLog::open(submissions)?;
        Ok(Arc::new(Self {
            space: RwLock::new(None),
            sessions: Mutex::new(HashMap::new()),
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
            submissions: Mutex::new(Submissions { log, seen }),
            ttl,
            export_secret,
        }))
    }

    pub fn install(&self, space: Space) {
        *self.space.write().expect("space lock") = Some(Arc::new(space));
    }

    pub fn space(&self) -> Result<Arc<Space>, ExplorerError> {
        self.space.read().expect("space lock").clone().ok_or(ExplorerError::NotLoaded)
    }

    fn live_session(&self, id: &str) -> Option<SessionState> {
        let mut sessions = self.sessions.lock().expect("session lock");
        let expired = sessions.get(id).is_some_and(|s| s.last_seen.elapsed() > self.ttl);
        if expired {
            sessions.remove(id);
            return None;
        }
        sessions.get_mut(id).map(|s| {
            s.last_seen = Instant::now();
            s.state.clone()
        })
    }
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ExplorerError> {
    serde_json::from_slice(body).map_err(|e| ExplorerError::BadRequest(e.to_string()))
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ExplorerError> + Send + 'static,
) -> Result<T, ExplorerError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ExplorerError::Internal(e.to_string()))?
}

async fn space(State(st): State<Arc<AppState>>) -> Result<impl IntoResponse, ExplorerError> {
    Ok(Json(st.space()?.summary()))
}

async fn session(State(st): State<Arc<AppState>>) -> Result<impl IntoResponse, ExplorerError> {
    let space = st.space()?;
    let (_, current) = space.random_start(&mut *st.rng.lock().expect("rng lock"));
    let state = SessionState {
        session_id: format!("{:032x}", OsRng.gen::<u128>()),
        current,
        created_at: chrono::Utc::now().to_rfc3339(),
    };
    let mut sessions = st.sessions.lock().expect("session lock");
    sessions.retain(|_, s| s.last_seen.elapsed() <= st.ttl);
    sessions.insert(
        state.session_id.clone(),
        Session {
            state: state.clone(),
            last_seen: Instant::now(),
        },
    );
    Ok(Json(state))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsRequest {
    session: String,
    point: DesignPoint,
}

async fn bounds(State(st): State<Arc<AppState>>, body: Bytes) -> Result<impl IntoResponse, ExplorerError> {
    let req: BoundsRequest = parse(&body)?;
    let space = st.space()?;
    if st.live_session(&req.session).is_none() {
        return Err(ExplorerError::UnknownSession);
    }
    let point = req.point;
    let res = blocking(move || space.bounds(&point)).await?;
    if let Some(s) = st.sessions.lock().expect("session lock").get_mut(&req.session) {
        s.state.current = res.point;
    }
    Ok(Json(res))
}

#[derive(Deserialize)]
struct PointRequest {
    point: DesignPoint,
}

async fn metrics(State(st): State<Arc<AppState>>, body: Bytes) -> Result<impl IntoResponse, ExplorerError> {
    let req: PointRequest = parse(&body)?;
    let space = st.space()?;
    Ok(Json(blocking(move || space.metrics(&req.point)).await?))
}

#[derive(Deserialize)]
struct MinimizeRequest {
    metric: String,
}

async fn minimize(State(st): State<Arc<AppState>>, body: Bytes) -> Result<impl IntoResponse, ExplorerError> {
    let req: MinimizeRequest = parse(&body)?;
    let metric: Metric = req
        .metric
        .parse()
        .map_err(|_| ExplorerError::BadRequest(format!("unknown metric `{}`", req.metric)))?;
    Ok(Json(st.space()?.minimize(metric)))
}

async fn submit(State(st): State<Arc<AppState>>, body: Bytes) -> Result<impl IntoResponse, ExplorerError> {
    let mut rec: SubmissionRecord =
        serde_json::from_slice(&body).map_err(|e| ExplorerError::Invalid(e.to_string()))?;
    let space = st.space()?;
    if st.submissions.lock().expect("submission lock").seen.contains(&rec.session_id) {
        return Err(ExplorerError::Duplicate);
    }
    rec.validate().map_err(|e| ExplorerError::Invalid(e.to_string()))?;
    if st.live_session(&rec.session_id).is_none() {
        return Err(ExplorerError::Invalid("unknown or expired session".into()));
    }
    let p = rec.final_point;
    if !blocking(move || Ok(space.contains(&p))).await? {
        return Err(ExplorerError::Invalid("final point lies outside the feasible space".into()));
    }
    rec.submitted_at = chrono::Utc::now().to_rfc3339();
    let mut subs = st.submissions.lock().expect("submission lock");
    if !subs.seen.insert(rec.session_id.clone()) {
        return Err(ExplorerError::Duplicate);
    }
    if let Err(e) = subs.log.append(&rec) {
        subs.seen.remove(&rec.session_id);
        error!("submission append failed: {e}");
        return Err(ExplorerError::Internal(e.to_string()));
    }
    info!("submission from session {}", rec.session_id);
    Ok(Json(json!({
        "status": "accepted",
        "session_id": rec.session_id,
        "submitted_at": rec.submitted_at,
    })))
}

fn same_secret(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

async fn export(State(st): State<Arc<AppState>>, headers: HeaderMap) -> Result<impl IntoResponse, ExplorerError> {
    let secret = st.export_secret.as_deref().ok_or(ExplorerError::ExportDisabled)?;
    let given = headers.get(EXPORT_SECRET_HEADER).map(|v| v.as_bytes()).unwrap_or_default();
    if !same_secret(given, secret.as_bytes()) {
        return Err(ExplorerError::Unauthorized);
    }
    let subs = st.submissions.lock().expect("submission lock");
    let text = std::fs::read_to_string(subs.log.path()).map_err(|e| ExplorerError::Internal(e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/space", get(space))
        .route("/session", post(session))
        .route("/bounds", post(bounds))
        .route("/metrics", post(metrics))
        .route("/minimize", post(minimize))
        .route("/submit", post(submit))
        .route("/export", get(export))
        .with_state(state)
}

/// Bind, load the store in the background (503 until done) and serve until Ctrl-C.
pub async fn serve(cfg: ServeConfig) -> anyhow::Result<()> {
    let state = AppState::new(&cfg.submissions, cfg.seed, cfg.session_ttl, cfg.export_secret.clone())?;
    if cfg.export_secret.is_none() {
        warn!("no export secret configured; GET /export is disabled");
    }
    let listener = tokio::net::TcpListener::bind(cfg.addr).await?;
    info!("listening on {}", listener.local_addr()?);
    let app = router(state.clone());
    let server = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    });
    let store_path = cfg.store.clone();
    let loaded = tokio::task::spawn_blocking(move || -> anyhow::Result<Space> {
        let store = SampleStore::load(&store_path)?;
        Ok(Space::new(store)?)
    })
    .await?;
    match loaded {
        Ok(space) => {
            info!("loaded {} records from {}", space.store.len(), cfg.store.display());
            state.install(space);
        }
        Err(e) => {
            server.abort();
            return Err(e.context(format!("loading {}", cfg.store.display())));
        }
    }
    server.await??;
    Ok(())
}
