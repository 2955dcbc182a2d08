#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sfid/base.hpp"
#include "sfid/checks.hpp"
#include "sfid/oracle.hpp"

namespace sfid {

// One input file of a run: a short label ("x", "y", "family"), the FNV-1a
// digest of the file's bytes, and the path as given on the command line.
struct InputDigest {
  std::string label;
  std::string digest;  // "fnv1a:" + 16 hex digits
  std::string path;
};

// Everything a run reports: the subcommand, digests binding the verdict to
// the exact inputs, command-specific scalar facts (family spec, budget,
// trial counts, kruskal ranks, ...), the decision verdict and/or the oracle
// outcome, the tolerance policy, and the seed when randomness was involved.
// Wall-clock timing is carried for the stderr side channel but never enters
// the canonical serialization, which must be byte-identical across runs.
struct Report {
  std::string command;
  std::vector<InputDigest> inputs;
  std::vector<std::pair<std::string, std::string>> facts;
  std::optional<Verdict> verdict;
  std::optional<OracleReport> oracle;
  Tolerance tolerance;
  std::optional<long long> seed;
  // Named matrices outside the verdict/oracle payloads (for example the
  // constructed pair of right factors witnessing a uniform failure).
  std::vector<std::pair<std::string, CMat>> extra_matrices;
  double timing_ms = 0.0;
};

// Canonical deterministic text form. Matrices are embedded as indented
// blocks in the same complex-CSV dialect the CLI reads; exact rational
// witnesses keep their unrounded entries.
std::string serialize_report(const Report& r);

// Inverse of serialize_report over its image: parse_report(serialize_report(r))
// reproduces every serialized field. Throws ParseError on malformed text.
Report parse_report(const std::string& text);

// Reads and digests one input file for the report header.
InputDigest digest_input(const std::string& label, const std::string& path);

// 0 for a certified positive (Holds / Unique), 1 for a certified negative
// (Fails / NotUnique, which wins over any positive), 2 otherwise.
int exit_code_for(const Report& r);

}  // namespace sfid
