#pragma once

#include <stdexcept>

namespace nrc {

// Base type for everything thrown by this library. The CLI maps subtypes to
// exit codes: config/usage -> 1, data/shape -> 2, numerical -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// config / usage
struct InvalidConfig : Error { using Error::Error; };

// numerical
struct NotPositiveDefinite : Error { using Error::Error; };

// data / shape
struct DimensionMismatch : Error { using Error::Error; };
struct TooManyColumns : Error { using Error::Error; };
struct ZeroNormSample : Error { using Error::Error; };
struct ZeroNormQuery : Error { using Error::Error; };
struct EmptyClass : Error { using Error::Error; };
struct ClassTooSmall : Error { using Error::Error; };
struct BadDimension : Error { using Error::Error; };
struct BadMagic : Error { using Error::Error; };
struct TruncatedFile : Error { using Error::Error; };
struct UnsupportedElementType : Error { using Error::Error; };
struct RaggedRow : Error { using Error::Error; };
struct NonNumericField : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace nrc
