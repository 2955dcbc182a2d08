#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sfid {

using cx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

// ---------------------------------------------------------------------------
// Errors. Each named failure mode gets a distinct type so callers (and the
// CLI) can map them to exit codes without string matching.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& what) : Error(what) {}
};

/// Thrown when a family enumeration would exceed the configured budget.
struct EnumerationBudgetExceeded : Error {
  explicit EnumerationBudgetExceeded(const std::string& what) : Error(what) {}
};

/// Column `index` of a matrix is zero where a nonzero column is required.
struct ZeroColumn : Error {
  int index;
  explicit ZeroColumn(int idx)
      : Error("column " + std::to_string(idx) + " is zero"), index(idx) {}
};

struct NotRankOne : Error {
  explicit NotRankOne(const std::string& what) : Error(what) {}
};

struct NotInFamily : Error {
  explicit NotInFamily(const std::string& what) : Error(what) {}
};

struct NotInSupport : Error {
  explicit NotInSupport(const std::string& what) : Error(what) {}
};

struct NotStable : Error {
  explicit NotStable(const std::string& what) : Error(what) {}
};

struct CapExceeded : Error {
  explicit CapExceeded(const std::string& what) : Error(what) {}
};

struct PreconditionNotMet : Error {
  explicit PreconditionNotMet(const std::string& what) : Error(what) {}
};

// ---------------------------------------------------------------------------
// Tolerance policy. Float mode drives every rank/zero decision through
// relative_eps; ExactRational mode converts entries (exactly) to Gaussian
// rationals and decides with exact arithmetic, ignoring relative_eps.
// ---------------------------------------------------------------------------

enum class ArithmeticMode { Float, ExactRational };

struct Tolerance {
  double relative_eps = 1e-10;
  ArithmeticMode mode = ArithmeticMode::Float;

  static Tolerance floating(double eps = 1e-10) { return {eps, ArithmeticMode::Float}; }
  static Tolerance exact() { return {0.0, ArithmeticMode::ExactRational}; }
  bool is_exact() const { return mode == ArithmeticMode::ExactRational; }
};

/// Enumeration guard shared by every family-walking operation.
/// Precedence: explicit value > SFID_BUDGET environment variable > default.
struct Budget {
  long long max_members = 1'000'000;
  static Budget from_env();
};

inline void require(bool cond, const char* what) {
  if (!cond) throw PreconditionNotMet(what);
}

inline void require_dims(bool cond, const char* what) {
  if (!cond) throw DimensionMismatch(what);
}

}  // namespace sfid
