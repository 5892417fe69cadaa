//! JSON model configuration.
//!
//! Schema (units are mandatory and fixed):
//!
//! ```json
//! {
//!   "units": "mm-N-rad",
//!   "L": 310.0,
//!   "d": 69.1,
//!   "Kb": [[...], ... 6 rows of 6 ...],
//!   "Ktheta": [[...], ...]          // optional, defaults to Kb
//! }
//! ```

use std::fs;
use std::path::Path;

use nalgebra::Matrix6;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linkage::ParallelogramModel;

/// The only unit system the file format accepts.
pub const UNITS: &str = "mm-N-rad";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub units: String,
    /// Bar length [mm].
    #[serde(rename = "L")]
    pub length: f64,
    /// Bar separation [mm].
    #[serde(rename = "d")]
    pub width: f64,
    /// Bar stiffness, 6 rows of 6.
    #[serde(rename = "Kb")]
    pub k_bar: [[f64; 6]; 6],
    /// Virtual-spring stiffness override for both chains.
    #[serde(rename = "Ktheta", default)]
    pub k_theta: Option<[[f64; 6]; 6]>,
}

impl ModelConfig {
    pub fn to_model(&self) -> Result<ParallelogramModel> {
        if self.units != UNITS {
            return Err(Error::Config(format!(
                "units must be {UNITS:?}, got {:?}",
                self.units
            )));
        }
        let k_bar = Matrix6::from_fn(|i, j| self.k_bar[i][j]);
        let model = ParallelogramModel::new(self.length, self.width, k_bar)?;
        match self.k_theta {
            Some(rows) => {
                let kt = Matrix6::from_fn(|i, j| rows[i][j]);
                model.with_chain_springs([kt, kt])
            }
            None => Ok(model),
        }
    }
}

pub fn parse_config(text: &str) -> Result<ModelConfig> {
    Ok(serde_json::from_str(text)?)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ModelConfig> {
    let text = fs::read_to_string(path.as_ref())?;
    parse_config(&text)
}

/// Bar data of an Orthoglide-type leg, embedded for tests and quick starts.
pub fn orthoglide_fixture() -> ModelConfig {
    parse_config(include_str!("../../../fixtures/orthoglide_bar.json"))
        .expect("embedded fixture parses")
}

/// Bar separation consistent with a reference total torsional stiffness about
/// the bar axis: on top of the two springs' own torsion, the parallelogram
/// contributes d^2/4 times the in-plane shear term per chain, so
/// d = sqrt(4 (ref(4,4)/2 - Kb(4,4)) / Kb(2,2)).
pub fn derived_width(k_bar: &Matrix6<f64>, reference_total_44: f64) -> Result<f64> {
    let k22 = k_bar[(1, 1)];
    let k44 = k_bar[(3, 3)];
    if !(k22 > 0.0) {
        return Err(Error::Config("Kb(2,2) must be positive".into()));
    }
    let d2 = 4.0 * (reference_total_44 / 2.0 - k44) / k22;
    if !(d2 > 0.0) {
        return Err(Error::Config(format!(
            "reference torsional stiffness {reference_total_44:e} is below the bare spring term"
        )));
    }
    Ok(d2.sqrt())
}
