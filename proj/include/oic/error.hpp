#pragma once

#include <stdexcept>
#include <string>

namespace oic {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precondition on an argument was violated (bad qp, non-divisible size, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent serialized data (container, trace CSV, image).
class FormatError : public Error {
public:
    using Error::Error;
};

/// A bitplane could not be recovered from the extracted chunks and the
/// side information, or the recovered plane failed its checksum.
class DecodingFailure : public Error {
public:
    using Error::Error;
};

}  // namespace oic
