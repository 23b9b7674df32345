#pragma once

#include <stdexcept>
#include <string>

namespace lineage {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input could not be read at all.
struct IoError : Error {
    using Error::Error;
};

// Too many malformed lines in a snapshot stream.
struct CorruptSnapshotError : Error {
    using Error::Error;
};

// Registry rejected the credentials; retrying cannot help.
struct AuthError : Error {
    using Error::Error;
};

struct NotFoundError : Error {
    using Error::Error;
};

struct NoDataError : Error {
    using Error::Error;
};

struct UndefinedInputError : Error {
    using Error::Error;
};

struct InvalidInputError : Error {
    using Error::Error;
};

// Instance exceeds a configured solver cap.
struct TooLargeError : Error {
    using Error::Error;
};

struct NoSitesError : Error {
    using Error::Error;
};

} // namespace lineage
