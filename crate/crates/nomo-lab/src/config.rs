//! Model ingestion: either the built-in two-spring family or an explicit
//! masses-plus-springs document.

use nomo_core::HarmonicModel;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum ModelConfig {
    Family { family: String, lambda: f64 },
    Explicit {
        masses: Vec<f64>,
        springs: Vec<(usize, usize, f64)>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyDoc {
    family: String,
    lambda: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExplicitDoc {
    masses: Vec<f64>,
    springs: Vec<(usize, usize, f64)>,
}

impl ModelConfig {
    pub fn lambda(lambda: f64) -> Self {
        ModelConfig::Family {
            family: "lambda".to_string(),
            lambda,
        }
    }

    /// Parse a config document. The presence of a `family` key selects the
    /// named-family schema; anything else must be an explicit model.
    pub fn parse(text: &str) -> Result<Self, String> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
        if value.get("family").is_some() {
            let doc: FamilyDoc = serde_json::from_value(value)
                .map_err(|e| format!("bad family config: {e}"))?;
            if doc.family != "lambda" {
                return Err(format!(
                    "unknown family '{}' (only 'lambda' is defined)",
                    doc.family
                ));
            }
            Ok(ModelConfig::lambda(doc.lambda))
        } else {
            let doc: ExplicitDoc = serde_json::from_value(value).map_err(|e| {
                format!("bad model config (expected masses + springs): {e}")
            })?;
            Ok(ModelConfig::Explicit {
                masses: doc.masses,
                springs: doc.springs,
            })
        }
    }

    pub fn build(&self) -> nomo_core::Result<HarmonicModel> {
        match self {
            ModelConfig::Family { lambda, .. } => HarmonicModel::lambda_family(*lambda),
            ModelConfig::Explicit { masses, springs } => {
                HarmonicModel::from_pairs(masses.clone(), springs)
            }
        }
    }

    /// Coupling value when the model is the two-spring family.
    pub fn family_lambda(&self) -> Option<f64> {
        match self {
            ModelConfig::Family { lambda, .. } => Some(*lambda),
            ModelConfig::Explicit { .. } => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ModelConfig::Family { lambda, .. } => {
                format!("two-spring family at lambda = {lambda}")
            }
            ModelConfig::Explicit { masses, .. } => {
                format!("explicit model with {} particles", masses.len())
            }
        }
    }
}
