//! Structured run reports and their (deliberately small) JSON schema.

use serde::{Deserialize, Serialize};

/// Outcome of one named check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Measured value (residual, slope, ratio ...).
    pub measured: f64,
    /// Threshold or window edge it was compared against.
    pub threshold: f64,
    /// How `measured` relates to `threshold`: `le`, `ge`, `window`.
    pub comparison: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

impl CheckResult {
    pub fn le(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        CheckResult {
            name: name.into(),
            passed: measured <= threshold,
            measured,
            threshold,
            comparison: "le".into(),
            details: None,
        }
    }

    pub fn ge(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        CheckResult {
            name: name.into(),
            passed: measured >= threshold,
            measured,
            threshold,
            comparison: "ge".into(),
            details: None,
        }
    }

    pub fn window(name: impl Into<String>, measured: f64, lo: f64, hi: f64) -> Self {
        CheckResult {
            name: name.into(),
            passed: (lo..=hi).contains(&measured),
            measured,
            threshold: lo,
            comparison: format!("window[{lo},{hi}]"),
            details: None,
        }
    }

    pub fn with_details(mut self, details: serde_json::Value) -> Self {
        self.details = Some(details);
        self
    }
}

/// A run report. The serialized form (`report.json`) carries only
/// deterministic fields so that repeated runs with a fixed config and seed
/// produce byte-identical outputs; the wall clock lives on the in-memory
/// struct and the console.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub tool_version: String,
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub config_echo: serde_json::Value,
    pub checks: Vec<CheckResult>,
    pub artifacts: Vec<String>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_stage: Option<String>,
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn new(command: &str, seed: u64, config_echo: serde_json::Value) -> Self {
        RunReport {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            schema_version: 1,
            command: command.to_string(),
            seed,
            config_echo,
            checks: Vec::new(),
            artifacts: Vec::new(),
            passed: true,
            failure_stage: None,
            wall_clock_seconds: 0.0,
        }
    }

    pub fn push(&mut self, check: CheckResult) {
        self.passed &= check.passed;
        self.checks.push(check);
    }

    pub fn fail_stage(&mut self, stage: impl Into<String>) {
        self.passed = false;
        self.failure_stage = Some(stage.into());
    }
}

/// Validate a JSON value against the subset of JSON Schema used by
/// `schema/report.schema.json` (`type`, `properties`, `required`, `items`).
pub fn validate_against_schema(
    value: &serde_json::Value,
    schema: &serde_json::Value,
) -> Result<(), String> {
    validate_inner(value, schema, "$")
}

fn validate_inner(
    value: &serde_json::Value,
    schema: &serde_json::Value,
    path: &str,
) -> Result<(), String> {
    use serde_json::Value;
    if let Some(ty) = schema.get("type").and_then(Value::as_str) {
        let ok = match ty {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "number" => value.is_number(),
            "integer" => value.is_i64() || value.is_u64(),
            "boolean" => value.is_boolean(),
            "null" => value.is_null(),
            other => return Err(format!("{path}: unsupported schema type {other}")),
        };
        if !ok {
            return Err(format!("{path}: expected {ty}, found {value}"));
        }
    }
    if let Some(required) = schema.get("required").and_then(Value::as_array) {
        let obj = value
            .as_object()
            .ok_or_else(|| format!("{path}: required on non-object"))?;
        for name in required {
            let name = name.as_str().unwrap_or_default();
            if !obj.contains_key(name) {
                return Err(format!("{path}: missing required property `{name}`"));
            }
        }
    }
    if let Some(props) = schema.get("properties").and_then(Value::as_object) {
        if let Some(obj) = value.as_object() {
            for (name, sub) in props {
                if let Some(v) = obj.get(name) {
                    validate_inner(v, sub, &format!("{path}.{name}"))?;
                }
            }
        }
    }
    if let Some(items) = schema.get("items") {
        if let Some(arr) = value.as_array() {
            for (i, v) in arr.iter().enumerate() {
                validate_inner(v, items, &format!("{path}[{i}]"))?;
            }
        }
    }
    Ok(())
}
