//! The five aggregate design dimensions participants steer with sliders.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub const NUM_DIMS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dimension {
    Wind,
    Solar,
    GreenFuelImports,
    HeatStorage,
    Hydrogen,
}

impl Dimension {
    pub const ALL: [Dimension; NUM_DIMS] = [
        Dimension::Wind,
        Dimension::Solar,
        Dimension::GreenFuelImports,
        Dimension::HeatStorage,
        Dimension::Hydrogen,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Wind => "wind",
            Dimension::Solar => "solar",
            Dimension::GreenFuelImports => "green-fuel-imports",
            Dimension::HeatStorage => "heat-storage",
            Dimension::Hydrogen => "hydrogen",
        }
    }

    pub fn unit(self) -> &'static str {
        "MNOK/yr"
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| format!("unknown design dimension `{s}`"))
    }
}

/// Annualised investment (fuel expenditure for green imports) per dimension, MNOK/yr.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct DesignPoint {
    pub wind: f64,
    pub solar: f64,
    pub green_fuel_imports: f64,
    pub heat_storage: f64,
    pub hydrogen: f64,
}

impl DesignPoint {
    pub const ORIGIN: DesignPoint = DesignPoint {
        wind: 0.0,
        solar: 0.0,
        green_fuel_imports: 0.0,
        heat_storage: 0.0,
        hydrogen: 0.0,
    };

    pub fn from_array(a: [f64; NUM_DIMS]) -> Self {
        Self {
            wind: a[0],
            solar: a[1],
            green_fuel_imports: a[2],
            heat_storage: a[3],
            hydrogen: a[4],
        }
    }

    pub fn to_array(self) -> [f64; NUM_DIMS] {
        [
            self.wind,
            self.solar,
            self.green_fuel_imports,
            self.heat_storage,
            self.hydrogen,
        ]
    }

    pub fn get(&self, dim: Dimension) -> f64 {
        self.to_array()[dim.index()]
    }

    pub fn set(&mut self, dim: Dimension, value: f64) {
        let mut a = self.to_array();
        a[dim.index()] = value;
        *self = Self::from_array(a);
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// First coordinate that is negative or non-finite, if any.
    pub fn invalid_dimension(&self) -> Option<Dimension> {
        Dimension::ALL
            .into_iter()
            .find(|&d| !(self.get(d).is_finite() && self.get(d) >= 0.0))
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::from_array(self.to_array().map(|v| v * a))
    }
}

/// Per-dimension (min, max) used to map points into the unit box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: [f64; NUM_DIMS],
    pub max: [f64; NUM_DIMS],
}

/// Ranges below this are treated as degenerate (a flat dimension).
pub const DEGENERATE_RANGE: f64 = 1e-12;

impl Normalization {
    pub fn identity() -> Self {
        Self {
            min: [0.0; NUM_DIMS],
            max: [1.0; NUM_DIMS],
        }
    }

    /// Bounding box of `points`; `None` when empty.
    pub fn enclosing<'a>(points: impl IntoIterator<Item = &'a [f64; NUM_DIMS]>) -> Option<Self> {
        let mut it = points.into_iter().peekable();
        it.peek()?;
        let mut min = [f64::INFINITY; NUM_DIMS];
        let mut max = [f64::NEG_INFINITY; NUM_DIMS];
        for p in it {
            for k in 0..NUM_DIMS {
                min[k] = min[k].min(p[k]);
                max[k] = max[k].max(p[k]);
            }
        }
        Some(Self { min, max })
    }

    pub fn range(&self, k: usize) -> f64 {
        self.max[k] - self.min[k]
    }

    pub fn is_degenerate(&self, k: usize) -> bool {
        self.range(k) <= DEGENERATE_RANGE
    }

    fn scale(&self, k: usize) -> f64 {
        if self.is_degenerate(k) {
            1.0
        } else {
            self.range(k)
        }
    }

    pub fn normalize(&self, p: &[f64; NUM_DIMS]) -> [f64; NUM_DIMS] {
        std::array::from_fn(|k| (p[k] - self.min[k]) / self.scale(k))
    }

    pub fn denormalize(&self, q: &[f64; NUM_DIMS]) -> [f64; NUM_DIMS] {
        std::array::from_fn(|k| self.min[k] + q[k] * self.scale(k))
    }

    pub fn contains(&self, p: &[f64; NUM_DIMS]) -> bool {
        (0..NUM_DIMS).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }
}
