#pragma once

#include <stdexcept>
#include <string>

namespace gfsl {

// Base class for everything this library throws.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor dimensions disagree with an operation's contract.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Layer geometry produces an empty or invalid output.
class GeometryError : public Error {
public:
    using Error::Error;
};

// An operation yielded NaN or Inf from finite inputs.
class NumericsError : public Error {
public:
    using Error::Error;
};

// Malformed input file (PGM header, JSON config, ...).
class ParseError : public Error {
public:
    using Error::Error;
};

// Bad checkpoint file: wrong magic, unknown version, truncation, CRC mismatch.
class CheckpointError : public Error {
public:
    using Error::Error;
};

// Weight transfer failed: missing entry or shape mismatch.
class TransferError : public Error {
public:
    using Error::Error;
};

// Dataset-level problem: empty class, few-shot request exceeding a class count, ...
class DataError : public Error {
public:
    using Error::Error;
};

// Training loss became non-finite.
class TrainingDivergedError : public Error {
public:
    using Error::Error;
};

// Filesystem problem: unreadable or unwritable path.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace gfsl
