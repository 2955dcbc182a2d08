#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sfid/base.hpp"
#include "sfid/lifting.hpp"
#include "sfid/supports.hpp"

namespace sfid {

// ---------------------------------------------------------------------------
// Parsing and serialization for the on-disk formats the CLI consumes:
//
//   * complex matrices: CSV, one row per line, entries `a+bi` / `a-bi` /
//     `a` (pure real) / `bi` (pure imaginary), scientific notation allowed
//     in both parts; the imaginary unit is spelled `i`, never `j`;
//   * support patterns: CSV of 0/1 entries;
//   * support tuples: 0/1 CSV blocks separated by blank lines;
//   * family specs: `global:s=<int>`, `col:k=<int>`, `row:l=<int>`,
//     `regular:k=<int>`, `and:<spec>+<spec>` (n-ary, classical parts only),
//     `list:<path>` where the path names a JSON array of support CSV paths
//     resolved relative to the JSON file;
//   * pair-family specs: `<spec>*<spec>` for a product, or `pairs:<path>`
//     where the path names a JSON array of [left_csv, right_csv] pairs.
// ---------------------------------------------------------------------------

// Malformed input, carrying the position of the first offending character
// (1-based line and column). The CLI maps this to its data-error exit code.
struct ParseError : Error {
  std::string file;
  int line;
  int column;
  ParseError(std::string file_, int line_, int column_, const std::string& what);
};

// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double v);

// Canonical text form of one complex entry: "0", "a", "bi", "a+bi", "a-bi".
std::string format_cx(const cx& v);

// Parses one complex entry. `file`, `line`, `col` locate the token for error
// reporting; `col` is the column of the token's first character.
cx parse_cx(const std::string& token, const std::string& file, int line, int col);

std::string format_matrix_csv(const CMat& m);
CMat parse_matrix_csv(const std::string& text, const std::string& file);
CMat read_matrix_csv(const std::string& path);
void write_matrix_csv(const std::string& path, const CMat& m);

std::string format_support_csv(const SupportMatrix& s);
SupportMatrix parse_support_csv(const std::string& text, const std::string& file);
SupportMatrix read_support_csv(const std::string& path);

// Support-tuple file: one 0/1 CSV block per member, blocks separated by one
// or more blank lines. All members must share the same dimensions.
RankOneSupportTuple parse_support_tuple(const std::string& text, const std::string& file);
RankOneSupportTuple read_support_tuple(const std::string& path);

// Builds a support family from a spec string. `rows`/`cols` supply the
// pattern dimensions for the classical kinds; pass -1 to accept whatever the
// listed files declare (valid only for `list:` specs). Dimension conflicts
// and malformed specs raise ParseError with file = "<family-spec>".
SupportFamily parse_family_spec(const std::string& spec, int rows, int cols);

// Builds a pair family from a spec string. Expected dimensions (m, n, r) are
// checked when nonnegative; pass -1 to accept the files' dimensions.
PairFamily parse_pair_family_spec(const std::string& spec, int m, int n, int r);

// Whole-file read; missing or unreadable files raise ParseError at 1:1.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// FNV-1a 64-bit digest of a byte string, as 16 lowercase hex digits.
// Reports use it to bind a verdict to the exact input files.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace sfid
