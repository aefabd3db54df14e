//! Versioned JSON documents for instances, plans and traces.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generator::{generate_samples, GeneratorConfig, GeneratorError, SampleConfig};
use crate::lns::LnsTrace;
use crate::model::{Instance, Mode, ModelError, ObjectiveBreakdown, Plan, SamplesError, TimeSamples};

pub const SCHEMA_VERSION: &str = "smrp-v1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {found:?}, expected {SCHEMA_VERSION:?}")]
    Version { found: String },
    #[error("invalid instance: {0}")]
    Model(#[from] ModelError),
    #[error("invalid samples: {0}")]
    Samples(#[from] SamplesError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
}

/// Scenario source carried by an instance file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSpec {
    /// Regenerated from a seed on load.
    Generate(SampleConfig),
    Explicit(TimeSamples),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(flatten)]
    pub instance: Instance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<SampleSpec>,
    /// Settings the instance was drawn with, when generated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorConfig>,
}

impl InstanceDocument {
    pub fn new(instance: Instance) -> Self {
        Self {
            version: SCHEMA_VERSION.into(),
            id: None,
            instance,
            samples: None,
            generator: None,
        }
    }

    /// Materializes the scenario section, if any.
    pub fn time_samples(&self) -> Result<Option<TimeSamples>, IoError> {
        match &self.samples {
            None => Ok(None),
            Some(SampleSpec::Generate(cfg)) => Ok(Some(generate_samples(&self.instance, cfg)?)),
            Some(SampleSpec::Explicit(s)) => {
                s.validate(&self.instance)?;
                Ok(Some(s.clone()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDocument {
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_id: Option<String>,
    pub method: String,
    pub seed: u64,
    pub mode: Mode,
    /// Scenario settings the plan was optimized against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<SampleConfig>,
    #[serde(flatten)]
    pub plan: Plan,
    pub objective: ObjectiveBreakdown,
    #[serde(default)]
    pub max_drop_excess: usize,
    /// Set by exact methods: whether optimality was proven.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimal: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDocument {
    pub version: String,
    pub method: String,
    pub seed: u64,
    pub trace: LnsTrace,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: Option<String>,
}

fn check_version(text: &str) -> Result<(), IoError> {
    let probe: VersionProbe = serde_json::from_str(text)?;
    match probe.version {
        Some(v) if v == SCHEMA_VERSION => Ok(()),
        other => Err(IoError::Version {
            found: other.unwrap_or_default(),
        }),
    }
}

/// Parses any versioned document, rejecting other schema versions.
pub fn parse_versioned<T: DeserializeOwned>(text: &str) -> Result<T, IoError> {
    check_version(text)?;
    Ok(serde_json::from_str(text)?)
}

pub fn parse_instance(text: &str) -> Result<InstanceDocument, IoError> {
    let doc: InstanceDocument = parse_versioned(text)?;
    doc.instance.validate()?;
    Ok(doc)
}

pub fn parse_plan(text: &str) -> Result<PlanDocument, IoError> {
    parse_versioned(text)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}
