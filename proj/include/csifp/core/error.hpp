#pragma once

#include <stdexcept>
#include <string>

namespace csifp {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration / scene definition.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Invalid scene geometry (point inside a building, blocked probe, ...).
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Dimension or shape disagreement between operands.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Persisted file problems. The subclasses are distinct so callers can
/// tell a stale format from a damaged file.
class FileError : public Error {
public:
    using Error::Error;
};

class FormatVersionError : public FileError {
public:
    using FileError::FileError;
};

class TruncationError : public FileError {
public:
    using FileError::FileError;
};

class ChecksumError : public FileError {
public:
    using FileError::FileError;
};

/// An artifact was produced from a different configuration than the current one.
class StaleArtifactError : public FileError {
public:
    using FileError::FileError;
};

/// The provenance chain across pipeline artifacts does not check out.
class VerificationError : public Error {
public:
    using Error::Error;
};

} // namespace csifp
