#pragma once

#include <stdexcept>
#include <string>

namespace emots {

// Base for every library error; `kind()` is the stable identifier printed
// in CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& m) : Error("ShapeError", m) {}
};

struct IngestError : Error {
  enum class Cause { gap, parse, empty };
  IngestError(Cause c, const std::string& m) : Error("IngestError", m), cause(c) {}
  Cause cause;
};

struct AlignError : Error {
  explicit AlignError(const std::string& m) : Error("AlignError", m) {}
};

struct GenError : Error {
  explicit GenError(const std::string& m) : Error("GenError", m) {}
};

struct SplitError : Error {
  explicit SplitError(const std::string& m) : Error("SplitError", m) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error("ConfigError", m) {}
};

struct DivergenceError : Error {
  explicit DivergenceError(const std::string& m) : Error("DivergenceError", m) {}
};

struct MetricError : Error {
  explicit MetricError(const std::string& m) : Error("MetricError", m) {}
};

// A metric that is well-formed but undefined on the given input (e.g. CCC of
// a constant track). Reported and excluded from aggregation rather than fatal.
struct DegenerateMetric : Error {
  explicit DegenerateMetric(const std::string& m) : Error("DegenerateMetric", m) {}
};

struct IoError : Error {
  explicit IoError(const std::string& m) : Error("IoError", m) {}
};

}  // namespace emots
