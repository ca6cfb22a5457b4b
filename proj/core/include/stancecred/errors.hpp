#pragma once

#include <stdexcept>
#include <string>

namespace stancecred {

/// Base class for all stancecred failures. Subclasses identify the
/// contract that was violated; the message carries the specifics.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Input file header is missing a required column or is otherwise malformed.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A specific data row could not be parsed; the message names the row.
class RowError : public Error {
 public:
  using Error::Error;
};

/// A dataset or text collection turned out to contain no usable entries.
class EmptyCorpusError : public Error {
 public:
  using Error::Error;
};

/// The corpus is too small (or too imbalanced) for the requested split.
class SplitError : public Error {
 public:
  using Error::Error;
};

/// A class has too few members for the requested stratified fold count.
class StratificationError : public Error {
 public:
  using Error::Error;
};

/// A resource file (vector table, checkpoint tensor, model weights) failed to load.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// The contextual encoder checkpoint is missing or unusable.
class EncoderUnavailableError : public Error {
 public:
  using Error::Error;
};

/// Mean pooling was requested over an entirely masked sequence.
class PoolingError : public Error {
 public:
  using Error::Error;
};

/// Two vectors that must share a dimension do not.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is invalid or inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training failed (for example the loss became non-finite).
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Inference input does not match the feature spec the model was trained on.
class InferenceError : public Error {
 public:
  using Error::Error;
};

/// Evaluation input is malformed (length mismatch, single-class AUC, ...).
class EvalError : public Error {
 public:
  using Error::Error;
};

/// Request payload failed validation (scoring service).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Model and encoder fingerprints do not match.
class VersionError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure (unwritable directory, missing file).
class IoError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage failed; carries the stage name so callers can tell
/// where in load -> clean -> split -> encode -> train -> evaluate it broke.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace stancecred
