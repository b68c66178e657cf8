//! Random request sequences against a fixture store. Whatever the client
//! sends, every point the service hands back must lie in the hull.

use axum::http::StatusCode;
use nearopt_core::{DesignPoint, NUM_DIMS};
use nearopt_explorer::{router, Space};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{call, point, random_store, state};

#[derive(Debug, Default)]
pub struct FuzzStats {
    pub sequences: usize,
    pub accepted: usize,
    pub stale: usize,
    pub submitted: usize,
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn with(p: &DesignPoint, k: usize, v: f64) -> DesignPoint {
    let mut a = p.to_array();
    a[k] = v;
    DesignPoint::from_array(a)
}

pub async fn fuzz_sequences(sequences: usize, seed: u64) -> Result<FuzzStats, String> {
    let dir = tempfile::tempdir().unwrap();
    let store = random_store(11, 40);
    let space = Space::new(store.clone()).unwrap();
    let n = store.header.normalization;
    let app = router(state(Some(store), dir.path()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = FuzzStats { sequences, ..Default::default() };

    for seq in 0..sequences {
        let (s, v) = call(&app, "POST", "/session", None).await;
        ensure!(s == StatusCode::OK, "seq {seq}: session {s}");
        let id = v["session_id"].as_str().unwrap().to_string();
        let mut cur = point(&v["current"]);
        ensure!(space.contains(&cur), "seq {seq}: start {cur:?} outside");

        for _ in 0..rng.gen_range(1..5) {
            let target = match rng.gen_range(0..10) {
                // slider drag within the last reported range
                0..=4 => {
                    let (s, v) = call(&app, "POST", "/bounds", Some(&json!({"session": id, "point": cur}))).await;
                    ensure!(s == StatusCode::OK, "seq {seq}: bounds at current {s} {v}");
                    let dim = rng.gen_range(0..NUM_DIMS);
                    let (a, b) = (v["bounds"][dim]["a"].as_f64().unwrap(), v["bounds"][dim]["b"].as_f64().unwrap());
                    let t = match rng.gen_range(0..4) {
                        0 => a,
                        1 => b,
                        _ => a + (b - a) * rng.gen::<f64>(),
                    };
                    with(&cur, dim, t)
                }
                // arbitrary point, usually outside
                5..=6 => DesignPoint::from_array(std::array::from_fn(|k| {
                    n.min[k] + (n.max[k] - n.min[k]) * (1.4 * rng.gen::<f64>() - 0.2)
                })),
                7 => {
                    let (s, v) = call(&app, "POST", "/metrics", Some(&json!({"point": cur}))).await;
                    ensure!(s == StatusCode::OK, "seq {seq}: metrics {s} {v}");
                    ensure!(space.contains(&point(&v["point"])), "seq {seq}: metrics point outside");
                    continue;
                }
                8 => {
                    let metric = ["slack", "co2", "elec-price", "land-use", "vulnerability"][rng.gen_range(0..5)];
                    let (s, v) = call(&app, "POST", "/minimize", Some(&json!({"metric": metric}))).await;
                    ensure!(s == StatusCode::OK, "seq {seq}: minimize {s}");
                    point(&v["point"])
                }
                _ => {
                    let body = json!({
                        "session_id": id,
                        "final_point": cur,
                        "final_metrics": {"slack": 0.0, "elec-price": 1.0, "heat-price": 1.0, "co2": 1.0,
                            "vulnerability": 0.5, "visual-impact": 0.0, "land-use": 0.0},
                        "willingness_to_pay": 5.0
                    });
                    let (s, v) = call(&app, "POST", "/submit", Some(&body)).await;
                    ensure!(s == StatusCode::OK || s == StatusCode::CONFLICT, "seq {seq}: submit {s} {v}");
                    stats.submitted += (s == StatusCode::OK) as usize;
                    continue;
                }
            };

            let (s, v) = call(&app, "POST", "/bounds", Some(&json!({"session": id, "point": target}))).await;
            match s {
                StatusCode::OK => {
                    stats.accepted += 1;
                    let p = point(&v["point"]);
                    ensure!(space.contains(&p), "seq {seq}: acknowledged {p:?} outside");
                    for (k, b) in v["bounds"].as_array().unwrap().iter().enumerate() {
                        for end in ["a", "b"] {
                            let e = with(&p, k, b[end].as_f64().unwrap());
                            ensure!(space.contains(&e), "seq {seq}: bound {end} of dim {k} at {e:?} outside");
                        }
                    }
                    cur = p;
                }
                StatusCode::CONFLICT => {
                    stats.stale += 1;
                    let nearest = point(&v["nearest"]);
                    ensure!(space.contains(&nearest), "seq {seq}: nearest {nearest:?} outside");
                    ensure!(v["distance"].as_f64().unwrap() > 0.0, "seq {seq}: stale with zero distance");
                    cur = nearest;
                }
                other => return Err(format!("seq {seq}: unexpected {other}: {v}")),
            }
        }
    }
    Ok(stats)
}
