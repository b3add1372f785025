//! Model descriptions on disk: a small JSON schema for dense and built-in
//! models, a canonical serialization with a sha256 fingerprint, and the
//! number formatting used by the CSV outputs.

use num_complex::Complex64;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::builtin::{example_model, ExampleId};
use crate::error::{Error, Result};
use crate::spectral::{FieldTag, PerturbedModel, Scalar, DEFAULT_GAP_MIN};

/// Parsed form of a model file. `Dense` carries explicit eigenvalues and a
/// square coefficient matrix; `Builtin` names one of the two shipped models.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    Dense {
        eigenvalues: Vec<Scalar>,
        coefficients: Vec<Vec<Scalar>>,
    },
    Builtin(ExampleId),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub field: FieldTag,
    pub kind: ModelKind,
    pub gap_min: f64,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidSpec(msg.into())
}

fn parse_scalar(v: &Value, field: FieldTag, what: &str) -> Result<Scalar> {
    match (field, v) {
        (FieldTag::Real, Value::Number(n)) => {
            let x = n.as_f64().ok_or_else(|| bad(format!("{what}: not a finite number")))?;
            Ok(Complex64::new(x, 0.0))
        }
        (FieldTag::Complex, Value::Array(pair)) if pair.len() == 2 => {
            let re = pair[0]
                .as_f64()
                .ok_or_else(|| bad(format!("{what}: real part not a number")))?;
            let im = pair[1]
                .as_f64()
                .ok_or_else(|| bad(format!("{what}: imaginary part not a number")))?;
            Ok(Complex64::new(re, im))
        }
        (FieldTag::Real, _) => Err(bad(format!("{what}: expected a number"))),
        (FieldTag::Complex, _) => Err(bad(format!("{what}: expected a [re, im] pair"))),
    }
}

fn scalar_value(c: Scalar, field: FieldTag) -> Value {
    match field {
        FieldTag::Real => json!(c.re),
        FieldTag::Complex => json!([c.re, c.im]),
    }
}

impl ModelSpec {
    pub fn builtin(which: ExampleId) -> Self {
        ModelSpec {
            field: FieldTag::Real,
            kind: ModelKind::Builtin(which),
            gap_min: DEFAULT_GAP_MIN,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let root: Value =
            serde_json::from_str(text).map_err(|e| bad(format!("not valid JSON: {e}")))?;
        let obj = root.as_object().ok_or_else(|| bad("top level must be an object"))?;
        for key in obj.keys() {
            if !matches!(key.as_str(), "field" | "model" | "gap_min") {
                return Err(bad(format!("unknown key {key:?}")));
            }
        }

        let field = match obj.get("field").and_then(Value::as_str) {
            Some("real") => FieldTag::Real,
            Some("complex") => FieldTag::Complex,
            Some(other) => return Err(bad(format!("field must be \"real\" or \"complex\", got {other:?}"))),
            None => return Err(bad("missing \"field\"")),
        };

        let gap_min = match obj.get("gap_min") {
            None => DEFAULT_GAP_MIN,
            Some(v) => {
                let g = v.as_f64().ok_or_else(|| bad("gap_min must be a number"))?;
                if !(g > 0.0 && g.is_finite()) {
                    return Err(bad("gap_min must be a finite positive number"));
                }
                g
            }
        };

        let model = obj
            .get("model")
            .and_then(Value::as_object)
            .ok_or_else(|| bad("missing \"model\" object"))?;
        let kind = match model.get("type").and_then(Value::as_str) {
            Some("dense") => {
                let eigenvalues = model
                    .get("eigenvalues")
                    .and_then(Value::as_array)
                    .ok_or_else(|| bad("dense model needs an \"eigenvalues\" array"))?
                    .iter()
                    .enumerate()
                    .map(|(k, v)| parse_scalar(v, field, &format!("eigenvalues[{k}]")))
                    .collect::<Result<Vec<_>>>()?;
                if eigenvalues.is_empty() {
                    return Err(bad("eigenvalues must be non-empty"));
                }
                let rows = model
                    .get("coefficients")
                    .and_then(Value::as_array)
                    .ok_or_else(|| bad("dense model needs a \"coefficients\" matrix"))?;
                if rows.len() != eigenvalues.len() {
                    return Err(bad(format!(
                        "coefficients has {} rows, expected {}",
                        rows.len(),
                        eigenvalues.len()
                    )));
                }
                let coefficients = rows
                    .iter()
                    .enumerate()
                    .map(|(r, row)| {
                        let row = row
                            .as_array()
                            .ok_or_else(|| bad(format!("coefficients[{r}] is not an array")))?;
                        if row.len() != eigenvalues.len() {
                            return Err(bad(format!(
                                "coefficients[{r}] has {} entries, expected {}",
                                row.len(),
                                eigenvalues.len()
                            )));
                        }
                        row.iter()
                            .enumerate()
                            .map(|(c, v)| {
                                parse_scalar(v, field, &format!("coefficients[{r}][{c}]"))
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                ModelKind::Dense {
                    eigenvalues,
                    coefficients,
                }
            }
            Some("builtin") => {
                let name = model
                    .get("name")
                    .and_then(Value::as_str)
                    .ok_or_else(|| bad("builtin model needs a \"name\""))?;
                let id = ExampleId::from_name(name)
                    .ok_or_else(|| bad(format!("unknown builtin model {name:?}")))?;
                ModelKind::Builtin(id)
            }
            Some(other) => return Err(bad(format!("unknown model type {other:?}"))),
            None => return Err(bad("model needs a \"type\"")),
        };

        Ok(ModelSpec {
            field,
            kind,
            gap_min,
        })
    }

    pub fn build(&self) -> Result<PerturbedModel> {
        let model = match &self.kind {
            ModelKind::Dense {
                eigenvalues,
                coefficients,
            } => PerturbedModel::dense_with_gap_min(
                self.field,
                eigenvalues.clone(),
                coefficients.clone(),
                self.gap_min,
            )?,
            ModelKind::Builtin(which) => example_model(*which).with_gap_min(self.gap_min),
        };
        Ok(model)
    }

    /// Canonical JSON: fixed key order, explicit gap_min, builtin field
    /// always present. Two specs describing the same model serialize byte
    /// identically.
    pub fn canonical_json(&self) -> String {
        let model = match &self.kind {
            ModelKind::Dense {
                eigenvalues,
                coefficients,
            } => {
                let mut m = Map::new();
                m.insert("type".into(), json!("dense"));
                m.insert(
                    "eigenvalues".into(),
                    Value::Array(
                        eigenvalues
                            .iter()
                            .map(|&c| scalar_value(c, self.field))
                            .collect(),
                    ),
                );
                m.insert(
                    "coefficients".into(),
                    Value::Array(
                        coefficients
                            .iter()
                            .map(|row| {
                                Value::Array(
                                    row.iter().map(|&c| scalar_value(c, self.field)).collect(),
                                )
                            })
                            .collect(),
                    ),
                );
                Value::Object(m)
            }
            ModelKind::Builtin(which) => {
                let mut m = Map::new();
                m.insert("type".into(), json!("builtin"));
                m.insert("name".into(), json!(which.name()));
                Value::Object(m)
            }
        };
        let mut root = Map::new();
        root.insert(
            "field".into(),
            json!(match self.field {
                FieldTag::Real => "real",
                FieldTag::Complex => "complex",
            }),
        );
        root.insert("model".into(), model);
        root.insert("gap_min".into(), json!(self.gap_min));
        serde_json::to_string(&Value::Object(root)).expect("canonical spec serializes")
    }

    /// Hex sha256 of the canonical JSON.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Decimal with 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
