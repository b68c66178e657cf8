//! Load and capacity-factor time series, their CSV form, and a seeded
//! synthetic generator for a high-Arctic settlement.
//!
//! CSV columns: `timestamp, elec_load_mw, heat_load_mw, wind_cf, solar_cf`.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ELECTRICITY, HEAT, HOURS_PER_YEAR};

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("profile csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("profile row {row}: {reason}")]
    Row { row: usize, reason: String },
    #[error("profile io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile {
    /// `electricity` or `heat`.
    pub carrier: String,
    /// MW per snapshot.
    pub series: Vec<f64>,
}

impl LoadProfile {
    pub fn mean(&self) -> f64 {
        mean(&self.series)
    }

    pub fn peak(&self) -> f64 {
        self.series.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewableProfile {
    /// Profile key referenced by VRE technologies (`wind`, `solar`).
    pub technology: String,
    /// Capacity factor per snapshot.
    pub series: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSet {
    pub timestamps: Vec<String>,
    pub electricity: LoadProfile,
    pub heat: LoadProfile,
    pub renewables: Vec<RenewableProfile>,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    timestamp: String,
    elec_load_mw: f64,
    heat_load_mw: f64,
    wind_cf: f64,
    solar_cf: f64,
}

/// `YYYY-MM-DDTHH:MM` for an hour offset into a non-leap year.
pub fn timestamp_for_hour(hour: f64) -> String {
    const DAYS: [u32; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];
    let minutes = (hour * 60.0).round() as u64;
    let mut day = (minutes / (24 * 60)) as u32;
    let hh = (minutes / 60) % 24;
    let mm = minutes % 60;
    let mut month = 0;
    while month < 11 && day >= DAYS[month] {
        day -= DAYS[month];
        month += 1;
    }
    format!("2023-{:02}-{:02}T{:02}:{:02}", month + 1, day + 1, hh, mm)
}

impl ProfileSet {
    pub fn len(&self) -> usize {
        self.electricity.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn renewable(&self, key: &str) -> Option<&RenewableProfile> {
        self.renewables.iter().find(|p| p.technology == key)
    }

    pub fn weight(&self) -> f64 {
        HOURS_PER_YEAR / self.len() as f64
    }

    fn from_columns(
        timestamps: Vec<String>,
        elec: Vec<f64>,
        heat: Vec<f64>,
        wind: Vec<f64>,
        solar: Vec<f64>,
    ) -> Self {
        Self {
            timestamps,
            electricity: LoadProfile {
                carrier: ELECTRICITY.into(),
                series: elec,
            },
            heat: LoadProfile {
                carrier: HEAT.into(),
                series: heat,
            },
            renewables: vec![
                RenewableProfile {
                    technology: "wind".into(),
                    series: wind,
                },
                RenewableProfile {
                    technology: "solar".into(),
                    series: solar,
                },
            ],
        }
    }

    /// Build from explicit columns; timestamps follow the uniform weighting.
    pub fn from_series(elec: Vec<f64>, heat: Vec<f64>, wind: Vec<f64>, solar: Vec<f64>) -> Self {
        let w = HOURS_PER_YEAR / elec.len().max(1) as f64;
        let timestamps = (0..elec.len()).map(|t| timestamp_for_hour(t as f64 * w)).collect();
        Self::from_columns(timestamps, elec, heat, wind, solar)
    }

    /// Flat profiles, mostly for tests.
    pub fn constant(snapshots: usize, elec: f64, heat: f64, wind: f64, solar: f64) -> Self {
        Self::from_series(
            vec![elec; snapshots],
            vec![heat; snapshots],
            vec![wind; snapshots],
            vec![solar; snapshots],
        )
    }

    pub fn validate(&self) -> Result<(), String> {
        let t = self.len();
        if self.heat.series.len() != t || self.renewables.iter().any(|r| r.series.len() != t) {
            return Err("profile lengths differ".into());
        }
        if self.timestamps.len() != t {
            return Err("timestamp count differs from snapshot count".into());
        }
        for load in [&self.electricity, &self.heat] {
            if load.series.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(format!("{} load has negative or non-finite values", load.carrier));
            }
        }
        for r in &self.renewables {
            if r.series.iter().any(|v| !(*v >= 0.0 && *v <= 1.0)) {
                return Err(format!("{} capacity factor outside [0, 1]", r.technology));
            }
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, ProfileError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let (mut ts, mut e, mut h, mut w, mut s) = (vec![], vec![], vec![], vec![], vec![]);
        for (i, row) in rdr.deserialize::<CsvRow>().enumerate() {
            let row = row?;
            ts.push(row.timestamp);
            e.push(row.elec_load_mw);
            h.push(row.heat_load_mw);
            w.push(row.wind_cf);
            s.push(row.solar_cf);
            let _ = i;
        }
        let set = Self::from_columns(ts, e, h, w, s);
        set.validate().map_err(|reason| ProfileError::Row { row: 0, reason })?;
        Ok(set)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, ProfileError> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ProfileError> {
        let mut wtr = csv::Writer::from_writer(writer);
        let wind = self.renewable("wind").map(|p| p.series.as_slice()).unwrap_or(&[]);
        let solar = self.renewable("solar").map(|p| p.series.as_slice()).unwrap_or(&[]);
        for t in 0..self.len() {
            wtr.serialize(CsvRow {
                timestamp: self.timestamps[t].clone(),
                elec_load_mw: self.electricity.series[t],
                heat_load_mw: self.heat.series[t],
                wind_cf: wind.get(t).copied().unwrap_or(0.0),
                solar_cf: solar.get(t).copied().unwrap_or(0.0),
            })?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Annual statistics the synthetic loads are calibrated to, MW.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadTargets {
    pub elec_mean: f64,
    pub elec_peak: f64,
    pub heat_mean: f64,
    pub heat_peak: f64,
}

impl Default for LoadTargets {
    fn default() -> Self {
        Self {
            elec_mean: 3.7,
            elec_peak: 6.2,
            heat_mean: 8.5,
            heat_peak: 18.7,
        }
    }
}

const LATITUDE_DEG: f64 = 78.2;

/// Monotone map `s·r^γ` of the shifted raw series hitting the target mean
/// and peak exactly while keeping every value nonnegative.
fn calibrate(raw: &[f64], target_mean: f64, target_peak: f64) -> Vec<f64> {
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = (hi - lo).max(1e-12);
    let base: Vec<f64> = raw.iter().map(|v| (v - lo) / spread + 0.05).collect();
    let top = base.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ratio = |g: f64| top.powf(g) / mean(&base.iter().map(|b| b.powf(g)).collect::<Vec<_>>());
    let want = target_peak / target_mean;
    let (mut a, mut b) = (1e-3, 50.0);
    for _ in 0..200 {
        let g = 0.5 * (a + b);
        if ratio(g) < want {
            a = g;
        } else {
            b = g;
        }
    }
    let g = 0.5 * (a + b);
    let shaped: Vec<f64> = base.iter().map(|v| v.powf(g)).collect();
    let scale = target_peak / top.powf(g);
    let out: Vec<f64> = shaped.iter().map(|v| v * scale).collect();
    // Nudge the mean onto the target without moving the peak.
    let m = mean(&out);
    let k = (target_peak - target_mean) / (target_peak - m);
    out.iter().map(|v| target_peak - k * (target_peak - v)).map(|v| v.max(0.0)).collect()
}

/// Sine of the solar elevation at `hour` of the year.
fn solar_elevation_sin(hour: f64) -> f64 {
    let day = hour / 24.0;
    let declination = (23.44f64).to_radians() * (2.0 * PI * (284.0 + day) / 365.0).sin();
    let hour_angle = ((hour % 24.0) - 12.0) * 15f64.to_radians();
    let lat = LATITUDE_DEG.to_radians();
    lat.sin() * declination.sin() + lat.cos() * declination.cos() * hour_angle.cos()
}

/// Deterministic synthetic year with `snapshots` uniform steps.
///
/// Loads follow a cold-climate temperature model (winter-peaking heat, mild
/// electric seasonality, evening peaks) and are affinely calibrated to
/// `targets`. Wind is a seasonal AR(1) speed pushed through a power curve.
/// Solar follows the sun's elevation at 78°N, which gives zero output for
/// the whole polar night.
pub fn synthetic(seed: u64, snapshots: usize, targets: LoadTargets) -> ProfileSet {
    let w = HOURS_PER_YEAR / snapshots as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    // AR(1) persistence per step: ~36 h for weather, ~6 h for load noise.
    let phi_weather = (-w / 36.0f64).exp();
    let phi_load = (-w / 6.0f64).exp();
    let (mut temp_anom, mut wind_anom, mut load_anom, mut cloud) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut elec = Vec::with_capacity(snapshots);
    let mut heat = Vec::with_capacity(snapshots);
    let mut wind = Vec::with_capacity(snapshots);
    let mut solar = Vec::with_capacity(snapshots);
    let sub = (w.ceil() as usize).clamp(1, 24) * 4;
    for t in 0..snapshots {
        let start = t as f64 * w;
        let mid = start + 0.5 * w;
        let day = mid / 24.0;
        let season = (2.0 * PI * (day - 46.0) / 365.0).cos(); // +1 in mid-February
        temp_anom = phi_weather * temp_anom + (1.0 - phi_weather * phi_weather).sqrt() * 4.0 * std_normal.sample(&mut rng);
        wind_anom = phi_weather * wind_anom + (1.0 - phi_weather * phi_weather).sqrt() * std_normal.sample(&mut rng);
        load_anom = phi_load * load_anom + (1.0 - phi_load * phi_load).sqrt() * std_normal.sample(&mut rng);
        cloud = phi_weather * cloud + (1.0 - phi_weather * phi_weather).sqrt() * std_normal.sample(&mut rng);

        let temperature = -5.0 - 10.0 * season + temp_anom;
        let hod = mid % 24.0;
        let evening = (2.0 * PI * (hod - 18.0) / 24.0).cos();
        let degree = (17.0 - temperature).max(0.0);
        heat.push(degree.powf(1.3) + 6.0 + 0.8 * evening + 0.5 * load_anom);
        elec.push(10.0 + 1.5 * season + 1.2 * evening + 0.6 * load_anom + 0.04 * degree);

        let mean_speed = 7.5 + 2.0 * season;
        let speed = (mean_speed * (1.0 + 0.45 * wind_anom)).max(0.0);
        let cf = if speed < 3.0 || speed > 25.0 {
            0.0
        } else {
            ((speed.powi(3) - 27.0) / (12.0f64.powi(3) - 27.0)).clamp(0.0, 1.0)
        };
        wind.push(cf);

        let clearness = 0.45 + 0.35 * (1.0 / (1.0 + (-cloud).exp()));
        let avg_sin: f64 = (0..sub)
            .map(|k| solar_elevation_sin(start + (k as f64 + 0.5) * w / sub as f64).max(0.0))
            .sum::<f64>()
            / sub as f64;
        solar.push((1.1 * clearness * avg_sin).clamp(0.0, 1.0));
    }
    let elec = calibrate(&elec, targets.elec_mean, targets.elec_peak);
    let heat = calibrate(&heat, targets.heat_mean, targets.heat_peak);
    ProfileSet::from_series(elec, heat, wind, solar)
}
