#pragma once

#include <stdexcept>
#include <string>

namespace surveygen {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text: a JSONL line, an outline reply, a judge reply.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Corpus-level violations during ingest (duplicate id, invalid record).
class IngestError : public Error {
public:
    using Error::Error;
};

/// Filesystem and container-format failures (index load/save, config files).
class IoError : public Error {
public:
    using Error::Error;
};

/// Template rendering failed (placeholder left unfilled).
class RenderError : public Error {
public:
    using Error::Error;
};

/// A provider call failed transiently; retried internally, never escapes the gateway.
class TransientError : public Error {
public:
    using Error::Error;
};

/// All retry attempts exhausted (network-level failure).
class TransportError : public Error {
public:
    using Error::Error;
};

/// The provider answered with a non-retryable refusal; message carries the body.
class ProviderError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage failed hard (all chunks unparseable, section count mismatch, ...).
class StageError : public Error {
public:
    using Error::Error;
};

/// A metric is undefined on the given input (zero claims, zero citation pairs).
class MetricError : public Error {
public:
    using Error::Error;
};

} // namespace surveygen
