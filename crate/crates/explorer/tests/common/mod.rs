#![allow(dead_code)]

pub mod fuzz;

use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use nearopt_core::metrics::MetricVector;
use nearopt_core::store::{SampleRecord, SampleStore, StoreHeader};
use nearopt_core::{DesignPoint, Normalization, NUM_DIMS};
use nearopt_explorer::{router, AppState, Space};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tower::ServiceExt;

pub const SECRET: &str = "s3cret";

fn record(p: [f64; NUM_DIMS], metrics: MetricVector) -> SampleRecord {
    SampleRecord {
        point: DesignPoint::from_array(p),
        epsilon: metrics.slack,
        level: metrics.slack,
        metrics,
        seed: 1,
        direction: [0.0; NUM_DIMS],
        wall_time: 0.0,
    }
}

fn store_from(points: Vec<[f64; NUM_DIMS]>, slack: impl Fn(&[f64; NUM_DIMS]) -> f64) -> SampleStore {
    let records: Vec<SampleRecord> = points
        .iter()
        .map(|p| {
            let s = slack(p);
            record(
                *p,
                MetricVector {
                    slack: s,
                    elec_price: 500.0 + 100.0 * p[0] - 20.0 * p[2],
                    heat_price: 300.0 + 10.0 * p[1],
                    co2: 1.0e5 * (1.0 - 0.1 * p[0]).max(0.0),
                    vulnerability: (0.2 + 0.05 * p[3]).min(1.0),
                    visual_impact: 3.0 * p[0],
                    land_use: 1.0e4 * p[1],
                },
            )
        })
        .collect();
    let normalization = Normalization::enclosing(points.iter()).unwrap();
    SampleStore {
        header: StoreHeader {
            c_opt: 6.5e7,
            optimum_point: records[0].point,
            normalization,
            config_hash: "fixture".into(),
            technology_count: 23,
            levels: vec![0.0, 0.5],
            n_directions: points.len(),
            max_slack: 1.25,
            failed_solves: 0,
            truncated: false,
        },
        records,
    }
}

/// Unit hypercube corners; the origin is the optimum.
pub fn hypercube_store() -> SampleStore {
    let pts = (0..32).map(|m| std::array::from_fn(|k| ((m >> k) & 1) as f64)).collect();
    store_from(pts, |p| 0.1 * p.iter().sum::<f64>())
}

/// Random cloud with distinct scales per dimension, optimum first.
pub fn random_store(seed: u64, n: usize) -> SampleStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = [10.0, 5.0, 40.0, 2.0, 1.0];
    let pts: Vec<[f64; NUM_DIMS]> = (0..n)
        .map(|_| std::array::from_fn(|k| scale[k] * rng.gen::<f64>()))
        .collect();
    let opt = pts[0];
    store_from(pts, move |p| {
        let d: f64 = (0..NUM_DIMS).map(|k| ((p[k] - opt[k]) / scale[k]).abs()).sum();
        (0.25 * d).min(1.25)
    })
}

pub fn state(store: Option<SampleStore>, dir: &Path) -> Arc<AppState> {
    let st = AppState::new(&dir.join("subs.jsonl"), 7, Duration::from_secs(3600), Some(SECRET.into())).unwrap();
    if let Some(s) = store {
        st.install(Space::new(s).unwrap());
    }
    st
}

pub async fn call(app: &Router, method: &str, path: &str, body: Option<&Value>) -> (StatusCode, Value) {
    call_with(app, method, path, body.map(|b| b.to_string()), &[]).await
}

pub async fn call_with(
    app: &Router,
    method: &str,
    path: &str,
    body: Option<String>,
    headers: &[(&str, &str)],
) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(path);
    for (k, v) in headers {
        req = req.header(*k, *v);
    }
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b)),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, value)
}

pub fn app(st: Arc<AppState>) -> Router {
    router(st)
}

pub fn point(v: &Value) -> DesignPoint {
    serde_json::from_value(v.clone()).unwrap()
}
