#pragma once

#include <stdexcept>
#include <string>

namespace ftlab {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Mismatched tensor extents; message names both shapes.
struct DimensionError : Error {
    using Error::Error;
};

// Out-of-range index (token id, row, column).
struct IndexError : Error {
    using Error::Error;
};

// Caller violated an operation's stated precondition.
struct ContractError : Error {
    using Error::Error;
};

// Malformed input bytes (UTF-8, CSV, JSON lines).
struct ParseError : Error {
    using Error::Error;
};

// Filesystem / network failures.
struct IoError : Error {
    using Error::Error;
};

// Checkpoint container failures, kept distinct so callers can tell
// "wrong file" from "damaged file" from "future file".
struct BadMagicError : IoError {
    using IoError::IoError;
};
struct VersionError : IoError {
    using IoError::IoError;
};
struct CorruptFileError : IoError {
    using IoError::IoError;
};

}  // namespace ftlab
