#pragma once

#include <stdexcept>
#include <string>

namespace clara {

/// Base class for every error raised by the engine.
class ClaraError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable files, malformed JSON/JSONL, bad UTF-8, schema-version mismatches.
class IoError : public ClaraError {
 public:
  using ClaraError::ClaraError;
};

/// Stored artifact carries a schema version this build does not understand.
class VersionMismatchError : public IoError {
 public:
  using IoError::IoError;
};

/// Unknown configuration key or unparseable value.
class ConfigError : public ClaraError {
 public:
  using ClaraError::ClaraError;
};

/// Benchmark content violates an invariant (pairing, duplicates, malformed items).
class ValidationError : public ClaraError {
 public:
  using ClaraError::ClaraError;
};

/// A bound port (LLM, embedder, search, index) failed or is misconfigured.
class PortError : public ClaraError {
 public:
  using ClaraError::ClaraError;
};

class BackendUnavailableError : public PortError {
 public:
  using PortError::PortError;
};

class EmbedderUnavailableError : public PortError {
 public:
  using PortError::PortError;
};

class SearchUnavailableError : public PortError {
 public:
  using PortError::PortError;
};

/// Strict scripted backend saw a prompt that is not in its script. This is a
/// fixture gap, never a recoverable condition: it aborts the run.
class ScriptMissError : public PortError {
 public:
  using PortError::PortError;
};

/// A method needs a vector index but none is configured or loadable.
class IndexRequiredError : public PortError {
 public:
  using PortError::PortError;
};

class DimensionMismatchError : public ClaraError {
 public:
  using ClaraError::ClaraError;
};

class EmptyIndexError : public ClaraError {
 public:
  using ClaraError::ClaraError;
};

/// Missing template file, unknown placeholder, or missing placeholder value.
class PromptError : public ClaraError {
 public:
  using ClaraError::ClaraError;
};

/// Term matches handed to annotate_inline do not align with the text.
class SpanMismatchError : public ClaraError {
 public:
  using ClaraError::ClaraError;
};

/// An accuracy filter selected zero outcomes.
class EmptyFilterError : public ClaraError {
 public:
  using ClaraError::ClaraError;
};

/// Gap computation requires an English row.
class MissingEnglishRowError : public ClaraError {
 public:
  using ClaraError::ClaraError;
};

}  // namespace clara
