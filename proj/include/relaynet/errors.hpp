#pragma once

#include <stdexcept>
#include <string>

namespace relaynet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument outside the domain of an operation (nonpositive distance,
/// out-of-range step count, malformed level set, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Value or function iteration did not reach the requested tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual, std::size_t iterations)
        : Error(what), residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    std::size_t iterations() const noexcept { return iterations_; }

private:
    double residual_;
    std::size_t iterations_;
};

/// A file could not be opened, read, written or renamed.
class IoError : public Error {
public:
    using Error::Error;
};

/// Artifact persistence failures. The three subclasses are kept distinct so
/// callers can tell a stale file from a tampered one from garbage.
class ArtifactError : public Error {
public:
    using Error::Error;
};

class VersionError : public ArtifactError {
public:
    using ArtifactError::ArtifactError;
};

class HashError : public ArtifactError {
public:
    using ArtifactError::ArtifactError;
};

class FormatError : public ArtifactError {
public:
    using ArtifactError::ArtifactError;
};

} // namespace relaynet
