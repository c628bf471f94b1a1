#pragma once

#include <stdexcept>
#include <string>

namespace jadce {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shape or axis disagreement between operands.
struct DimensionError : Error {
    using Error::Error;
};

/// A caller broke an API contract (misaligned bundles, non-scalar loss, ...).
struct ContractError : Error {
    using Error::Error;
};

/// A factorization hit a non-positive pivot or an effectively rank-deficient system.
struct SingularityError : Error {
    using Error::Error;
};

/// Filesystem-level failure (open, read, write).
struct IoError : Error {
    using Error::Error;
};

/// Container header or payload inconsistent with the declared shapes.
struct FormatError : Error {
    using Error::Error;
};

/// Container format version not supported by this build.
struct VersionError : Error {
    using Error::Error;
};

/// Experiment configuration invalid or unparseable.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace jadce
