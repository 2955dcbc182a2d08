#include "sfid/io.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

#include <json.hpp>

namespace sfid {

ParseError::ParseError(std::string file_, int line_, int column_, const std::string& what)
    : Error(file_ + ":" + std::to_string(line_) + ":" + std::to_string(column_) + ": " + what),
      file(std::move(file_)),
      line(line_),
      column(column_) {}

namespace {

// Trims ASCII whitespace; reports how many leading characters were dropped so
// error columns keep pointing at the original text.
std::string trim(const std::string& s, int* leading = nullptr) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    if (leading) *leading = static_cast<int>(s.size());
    return "";
  }
  size_t e = s.find_last_not_of(" \t\r\n");
  if (leading) *leading = static_cast<int>(b);
  return s.substr(b, e - b + 1);
}

bool starts_with(const std::string& s, const char* prefix) {
  return s.rfind(prefix, 0) == 0;
}

struct Token {
  std::string text;  // trimmed
  int column;        // 1-based column of the first non-space character
};

// Splits one CSV line on commas, keeping the column of each entry.
std::vector<Token> split_csv_line(const std::string& line) {
  std::vector<Token> out;
  size_t start = 0;
  while (true) {
    size_t comma = line.find(',', start);
    std::string raw = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    int lead = 0;
    std::string t = trim(raw, &lead);
    out.push_back({t, static_cast<int>(start) + lead + 1});
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

struct NumberedLine {
  int number;  // 1-based line number in the file
  std::string text;
};

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty() && cur.back() == '\r') cur.pop_back();
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

SupportMatrix parse_support_lines(const std::vector<NumberedLine>& lines, const std::string& file) {
  if (lines.empty()) throw ParseError(file, 1, 1, "empty support block");
  std::vector<std::vector<int>> grid;
  size_t width = 0;
  for (const auto& ln : lines) {
    auto tokens = split_csv_line(ln.text);
    if (!grid.empty() && tokens.size() != width) {
      throw ParseError(file, ln.number, 1,
                       "row has " + std::to_string(tokens.size()) + " entries, expected " +
                           std::to_string(width));
    }
    width = tokens.size();
    std::vector<int> row;
    for (const auto& tok : tokens) {
      if (tok.text == "0") {
        row.push_back(0);
      } else if (tok.text == "1") {
        row.push_back(1);
      } else {
        throw ParseError(file, ln.number, tok.column,
                         "support entries must be 0 or 1, got '" + tok.text + "'");
      }
    }
    grid.push_back(std::move(row));
  }
  return SupportMatrix::from_grid(grid);
}

std::filesystem::path resolve_relative(const std::string& entry, const std::filesystem::path& base_dir) {
  std::filesystem::path p(entry);
  if (p.is_absolute()) return p;
  return base_dir / p;
}

// Loads the JSON document a `list:` or `pairs:` spec points at.
nlohmann::json load_json_array(const std::string& path) {
  std::string text = read_text_file(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path, 1, 1, e.what());
  }
  if (!doc.is_array()) throw ParseError(path, 1, 1, "expected a JSON array");
  return doc;
}

// Classical specs only; `and:` and `list:` handled by the caller.
SupportFamily parse_classical_spec(const std::string& spec, int rows, int cols,
                                   const std::string& err_file, int base_col) {
  auto bad = [&](int offset, const std::string& msg) -> ParseError {
    return ParseError(err_file, 1, base_col + offset, msg);
  };
  auto parse_param = [&](const char* prefix, const char* key) -> long {
    std::string rest = spec.substr(std::string(prefix).size());
    std::string expect = std::string(key) + "=";
    if (!starts_with(rest, expect.c_str()))
      throw bad(static_cast<int>(std::string(prefix).size()),
                "expected '" + expect + "<int>' after '" + prefix + "'");
    std::string num = rest.substr(expect.size());
    long value = 0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), value);
    if (ec != std::errc() || ptr != num.data() + num.size())
      throw bad(static_cast<int>(spec.size() - num.size()),
                "expected an integer, got '" + num + "'");
    return value;
  };
  auto need_dims = [&]() {
    if (rows < 0 || cols < 0)
      throw bad(0, "pattern dimensions are required for classical family specs");
  };
  try {
    if (starts_with(spec, "global:")) {
      need_dims();
      return SupportFamily::global_sparse(rows, cols, parse_param("global:", "s"));
    }
    if (starts_with(spec, "col:")) {
      need_dims();
      return SupportFamily::column_sparse(rows, cols, parse_param("col:", "k"));
    }
    if (starts_with(spec, "row:")) {
      need_dims();
      return SupportFamily::row_sparse(rows, cols, parse_param("row:", "l"));
    }
    if (starts_with(spec, "regular:")) {
      need_dims();
      if (rows != cols)
        throw bad(0, "regular families need a square pattern, got " + std::to_string(rows) + "x" +
                         std::to_string(cols));
      return SupportFamily::regular(rows, parse_param("regular:", "k"));
    }
  } catch (const PreconditionNotMet& e) {
    throw bad(0, std::string(e.what()) + " in '" + spec + "'");
  }
  throw bad(0, "unknown family spec '" + spec +
                   "' (expected global:s=, col:k=, row:l=, regular:k=, and:, or list:)");
}

}  // namespace

std::string format_double(double v) {
  if (v == 0.0) return "0";  // normalizes -0 for canonical output
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

std::string format_cx(const cx& v) {
  double re = v.real(), im = v.imag();
  if (im == 0.0) return format_double(re);
  if (re == 0.0) return format_double(im) + "i";
  std::string out = format_double(re);
  if (im > 0.0) out += "+";
  out += format_double(im) + "i";
  return out;
}

cx parse_cx(const std::string& token, const std::string& file, int line, int col) {
  int lead = 0;
  std::string t = trim(token, &lead);
  col += lead;
  if (t.empty()) throw ParseError(file, line, col, "empty entry");
  const char* s = t.c_str();
  char* end = nullptr;
  double first = std::strtod(s, &end);
  if (end == s)
    throw ParseError(file, line, col, "malformed complex entry '" + t + "': expected a number");
  if (*end == '\0') return cx(first, 0.0);
  if (*end == 'i' && end[1] == '\0') return cx(0.0, first);
  if (*end == '+' || *end == '-') {
    char* end2 = nullptr;
    double second = std::strtod(end, &end2);
    if (end2 == end)
      throw ParseError(file, line, col + static_cast<int>(end - s),
                       "malformed complex entry '" + t + "': expected a numeric imaginary part");
    if (*end2 == 'i' && end2[1] == '\0') return cx(first, second);
    throw ParseError(file, line, col + static_cast<int>(end2 - s),
                     "malformed complex entry '" + t + "': the imaginary unit must be spelled 'i'");
  }
  throw ParseError(file, line, col + static_cast<int>(end - s),
                   "malformed complex entry '" + t + "': the imaginary unit must be spelled 'i'");
}

std::string format_matrix_csv(const CMat& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ",";
      out += format_cx(m(i, j));
    }
    out += "\n";
  }
  return out;
}

CMat parse_matrix_csv(const std::string& text, const std::string& file) {
  auto lines = split_lines(text);
  std::vector<std::vector<cx>> rows;
  size_t width = 0;
  for (size_t li = 0; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    int line_no = static_cast<int>(li) + 1;
    auto tokens = split_csv_line(lines[li]);
    if (!rows.empty() && tokens.size() != width) {
      throw ParseError(file, line_no, 1,
                       "row has " + std::to_string(tokens.size()) + " entries, expected " +
                           std::to_string(width));
    }
    width = tokens.size();
    std::vector<cx> row;
    for (const auto& tok : tokens) row.push_back(parse_cx(tok.text, file, line_no, tok.column));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(file, 1, 1, "empty matrix file");
  CMat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < width; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

CMat read_matrix_csv(const std::string& path) {
  return parse_matrix_csv(read_text_file(path), path);
}

void write_matrix_csv(const std::string& path, const CMat& m) {
  write_text_file(path, format_matrix_csv(m));
}

std::string format_support_csv(const SupportMatrix& s) {
  std::string out;
  for (int i = 0; i < s.rows(); ++i) {
    for (int j = 0; j < s.cols(); ++j) {
      if (j) out += ",";
      out += s.get(i, j) ? "1" : "0";
    }
    out += "\n";
  }
  return out;
}

SupportMatrix parse_support_csv(const std::string& text, const std::string& file) {
  auto lines = split_lines(text);
  std::vector<NumberedLine> content;
  for (size_t li = 0; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    content.push_back({static_cast<int>(li) + 1, lines[li]});
  }
  if (content.empty()) throw ParseError(file, 1, 1, "empty support file");
  return parse_support_lines(content, file);
}

SupportMatrix read_support_csv(const std::string& path) {
  return parse_support_csv(read_text_file(path), path);
}

RankOneSupportTuple parse_support_tuple(const std::string& text, const std::string& file) {
  auto lines = split_lines(text);
  RankOneSupportTuple tuple;
  std::vector<NumberedLine> block;
  auto flush = [&]() {
    if (block.empty()) return;
    SupportMatrix s = parse_support_lines(block, file);
    if (!tuple.empty() && (s.rows() != tuple.front().rows() || s.cols() != tuple.front().cols())) {
      throw ParseError(file, block.front().number, 1,
                       "support block is " + std::to_string(s.rows()) + "x" +
                           std::to_string(s.cols()) + ", expected " +
                           std::to_string(tuple.front().rows()) + "x" +
                           std::to_string(tuple.front().cols()));
    }
    tuple.push_back(std::move(s));
    block.clear();
  };
  for (size_t li = 0; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) {
      flush();
    } else {
      block.push_back({static_cast<int>(li) + 1, lines[li]});
    }
  }
  flush();
  if (tuple.empty()) throw ParseError(file, 1, 1, "empty support-tuple file");
  return tuple;
}

RankOneSupportTuple read_support_tuple(const std::string& path) {
  return parse_support_tuple(read_text_file(path), path);
}

SupportFamily parse_family_spec(const std::string& spec, int rows, int cols) {
  const std::string err_file = "<family-spec>";
  if (starts_with(spec, "and:")) {
    std::string rest = spec.substr(4);
    std::vector<SupportFamily> parts;
    size_t start = 0;
    while (true) {
      size_t plus = rest.find('+', start);
      std::string part = rest.substr(start, plus == std::string::npos ? std::string::npos : plus - start);
      int part_col = 4 + static_cast<int>(start) + 1;
      if (starts_with(part, "and:") || starts_with(part, "list:"))
        throw ParseError(err_file, 1, part_col,
                         "and: combines classical specs only, got '" + part + "'");
      parts.push_back(parse_classical_spec(part, rows, cols, err_file, part_col));
      if (plus == std::string::npos) break;
      start = plus + 1;
    }
    if (parts.size() < 2)
      throw ParseError(err_file, 1, 1, "and: needs at least two specs joined by '+'");
    return SupportFamily::intersection(std::move(parts));
  }
  if (starts_with(spec, "list:")) {
    std::string json_path = spec.substr(5);
    if (json_path.empty()) throw ParseError(err_file, 1, 6, "list: needs a path to a JSON array");
    nlohmann::json doc = load_json_array(json_path);
    std::filesystem::path base_dir = std::filesystem::path(json_path).parent_path();
    std::vector<SupportMatrix> members;
    for (const auto& entry : doc) {
      if (!entry.is_string())
        throw ParseError(json_path, 1, 1, "expected a JSON array of support CSV path strings");
      std::string csv_path = resolve_relative(entry.get<std::string>(), base_dir).string();
      SupportMatrix s = read_support_csv(csv_path);
      if (rows >= 0 && (s.rows() != rows || s.cols() != cols)) {
        throw ParseError(csv_path, 1, 1,
                         "support is " + std::to_string(s.rows()) + "x" + std::to_string(s.cols()) +
                             ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
      }
      if (rows < 0 && !members.empty() &&
          (s.rows() != members.front().rows() || s.cols() != members.front().cols())) {
        throw ParseError(csv_path, 1, 1,
                         "support is " + std::to_string(s.rows()) + "x" + std::to_string(s.cols()) +
                             ", but earlier members are " + std::to_string(members.front().rows()) +
                             "x" + std::to_string(members.front().cols()));
      }
      members.push_back(std::move(s));
    }
    if (members.empty() && rows < 0)
      throw ParseError(json_path, 1, 1, "list spec names no supports and no dimensions are given");
    int r = rows >= 0 ? rows : members.front().rows();
    int c = cols >= 0 ? cols : members.front().cols();
    return SupportFamily::enumerated(r, c, std::move(members));
  }
  return parse_classical_spec(spec, rows, cols, err_file, 1);
}

PairFamily parse_pair_family_spec(const std::string& spec, int m, int n, int r) {
  const std::string err_file = "<pair-family-spec>";
  if (starts_with(spec, "pairs:")) {
    std::string json_path = spec.substr(6);
    if (json_path.empty()) throw ParseError(err_file, 1, 7, "pairs: needs a path to a JSON array");
    nlohmann::json doc = load_json_array(json_path);
    std::filesystem::path base_dir = std::filesystem::path(json_path).parent_path();
    std::vector<SupportPair> pairs;
    for (const auto& entry : doc) {
      if (!entry.is_array() || entry.size() != 2 || !entry[0].is_string() || !entry[1].is_string())
        throw ParseError(json_path, 1, 1,
                         "expected a JSON array of [left_csv, right_csv] path pairs");
      std::string lp = resolve_relative(entry[0].get<std::string>(), base_dir).string();
      std::string rp = resolve_relative(entry[1].get<std::string>(), base_dir).string();
      SupportMatrix left = read_support_csv(lp);
      SupportMatrix right = read_support_csv(rp);
      if (left.cols() != right.cols())
        throw ParseError(json_path, 1, 1,
                         "pair mixes inner dimensions " + std::to_string(left.cols()) + " and " +
                             std::to_string(right.cols()) + " (" + lp + ", " + rp + ")");
      auto check_dims = [&](const SupportMatrix& s, int want_rows, const std::string& path,
                            const char* side) {
        if (want_rows >= 0 && s.rows() != want_rows)
          throw ParseError(path, 1, 1,
                           std::string(side) + " support has " + std::to_string(s.rows()) +
                               " rows, expected " + std::to_string(want_rows));
        if (r >= 0 && s.cols() != r)
          throw ParseError(path, 1, 1,
                           std::string(side) + " support has " + std::to_string(s.cols()) +
                               " columns, expected " + std::to_string(r));
      };
      check_dims(left, m, lp, "left");
      check_dims(right, n, rp, "right");
      if (!pairs.empty() && (left.rows() != pairs.front().left.rows() ||
                             right.rows() != pairs.front().right.rows() ||
                             left.cols() != pairs.front().left.cols())) {
        throw ParseError(json_path, 1, 1, "pair dimensions differ between members");
      }
      pairs.emplace_back(std::move(left), std::move(right));
    }
    if (pairs.empty()) throw ParseError(json_path, 1, 1, "pairs spec names no support pairs");
    return PairFamily::enumerated(std::move(pairs));
  }
  size_t star = spec.find('*');
  if (star == std::string::npos)
    throw ParseError(err_file, 1, 1,
                     "pair-family spec must be <spec>*<spec> or pairs:<path>, got '" + spec + "'");
  SupportFamily left = parse_family_spec(spec.substr(0, star), m, r);
  SupportFamily right = parse_family_spec(spec.substr(star + 1), n, r);
  return PairFamily::product(std::move(left), std::move(right));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 1, 1, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file " + path);
  out << text;
  if (!out) throw Error("write failed for " + path);
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sfid
