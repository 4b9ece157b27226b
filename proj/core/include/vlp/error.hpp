#pragma once

#include <stdexcept>
#include <string>

namespace vlp {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad caller input (dimensions, reflectances, coincident points, ...).
struct InvalidArgument : Error {
  using Error::Error;
};

// Ray direction numerically tangent to every candidate plane; caller resamples.
struct DegenerateRay : Error {
  using Error::Error;
};

// Received power <= 0, anchor cannot be ranged.
struct NoSignal : Error {
  using Error::Error;
};

// Rank-deficient lateration matrix (anchors collinear).
struct SingularGeometry : Error {
  using Error::Error;
};

// Fewer detectable luminaires than the requested selection size.
struct InsufficientAnchors : Error {
  using Error::Error;
};

// Scenario / suite file problems; message names the offending key.
struct ParseError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace vlp
