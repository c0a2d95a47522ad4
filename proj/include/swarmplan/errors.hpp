#pragma once
// Error types raised by the planner. Argument validation failures use
// std::invalid_argument; everything domain-specific derives from Error.

#include <stdexcept>
#include <string>

namespace swarmplan {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The query point coincides with the obstacle boundary, so no contact normal exists.
class DegenerateContactError : public Error {
 public:
  using Error::Error;
};

/// SampleFree ran out of attempts before collecting the requested node count.
class SamplingExhaustedError : public Error {
 public:
  SamplingExhaustedError(const std::string& what, double acceptance_rate)
      : Error(what), acceptance_rate_(acceptance_rate) {}
  double acceptance_rate() const { return acceptance_rate_; }

 private:
  double acceptance_rate_;
};

/// A roadmap seed (initial/target component) violates the risk constraint.
class SeedUnsafeError : public Error {
 public:
  SeedUnsafeError(const std::string& what, std::size_t seed_index)
      : Error(what), seed_index_(seed_index) {}
  std::size_t seed_index() const { return seed_index_; }

 private:
  std::size_t seed_index_;
};

/// The transport LP has no feasible plan (caps too tight or mass forced onto an unreachable pair).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class PlanningFailedError : public Error {
 public:
  using Error::Error;
};

/// Malformed scenario text; line/column are 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(what), line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Well-formed scenario that violates an invariant; field() is a dotted path.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace swarmplan
