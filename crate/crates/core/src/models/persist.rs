//! Model files: a versioned JSON envelope that binds the fitted parameters
//! to a checksum of the vocabulary they were trained on, so a model can
//! never be silently applied to differently indexed features.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::features::Vocabulary;

use super::TrainedModel;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope {
    format_version: u32,
    kind: String,
    vocab_checksum: String,
    vocab_len: usize,
    model: Value,
}

pub fn save_model(
    path: impl AsRef<Path>,
    model: &TrainedModel,
    vocab: &Vocabulary,
) -> Result<()> {
    let path = path.as_ref();
    if vocab.len() != model.n_features() {
        return Err(Error::Invalid(format!(
            "vocabulary has {} entries but the model was trained on {}",
            vocab.len(),
            model.n_features()
        )));
    }
    let inner = match model {
        TrainedModel::NaiveBayes(m) => serde_json::to_value(m)?,
        TrainedModel::LogisticRegression(m) => serde_json::to_value(m)?,
        TrainedModel::RandomForest(m) => serde_json::to_value(m)?,
    };
    let envelope = Envelope {
        format_version: MODEL_FORMAT_VERSION,
        kind: model.kind().to_string(),
        vocab_checksum: vocab.checksum(),
        vocab_len: vocab.len(),
        model: inner,
    };
    let mut json = serde_json::to_string_pretty(&envelope)?;
    json.push('\n');
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

/// Loads a model file composed by [`save_model`]. When a vocabulary is
/// given, its checksum and size must match what the model was saved with.
pub fn load_model(
    path: impl AsRef<Path>,
    expected_vocab: Option<&Vocabulary>,
) -> Result<TrainedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let envelope: Envelope = serde_json::from_str(&text)?;
    if envelope.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::Invalid(format!(
            "unsupported model format version {} (this build reads version {})",
            envelope.format_version, MODEL_FORMAT_VERSION
        )));
    }
    let model = match envelope.kind.as_str() {
        "naive_bayes" => TrainedModel::NaiveBayes(serde_json::from_value(envelope.model)?),
        "logistic_regression" => {
            TrainedModel::LogisticRegression(serde_json::from_value(envelope.model)?)
        }
        "random_forest" => TrainedModel::RandomForest(serde_json::from_value(envelope.model)?),
        other => return Err(Error::Invalid(format!("unknown model kind {other:?}"))),
    };
    if envelope.vocab_len != model.n_features() {
        return Err(Error::Invalid(format!(
            "model file declares {} vocabulary entries but its parameters cover {}",
            envelope.vocab_len,
            model.n_features()
        )));
    }
    if let Some(vocab) = expected_vocab {
        if vocab.checksum() != envelope.vocab_checksum {
            return Err(Error::Invalid(
                "model was trained with a different vocabulary (checksum mismatch)".into(),
            ));
        }
    }
    Ok(model)
}
