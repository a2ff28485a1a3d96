#pragma once

#include <stdexcept>
#include <string>

namespace layerseg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The ROI left no connected route between the synthetic start and end nodes.
class SearchRegionDisconnected : public Error {
 public:
  explicit SearchRegionDisconnected(std::string stage)
      : Error("search region disconnected" + (stage.empty() ? std::string{} : " in stage " + stage)),
        stage_(std::move(stage)) {}

  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

class InvalidBand : public Error {
 public:
  using Error::Error;
};

class MissingBoundary : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// A caller asked for something whose prerequisites are not satisfied.
class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input files.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace layerseg
