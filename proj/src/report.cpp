#include "sfid/report.hpp"

#include <charconv>
#include <map>
#include <sstream>
#include <utility>

#include "sfid/io.hpp"

namespace sfid {

namespace {

const char* REPORT_HEADER = "sfid-report v1";

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '\\')
      out += "\\\\";
    else if (c == '\n')
      out += "\\n";
    else
      out += c;
  }
  return out;
}

std::string unesc(const std::string& s) {
  std::string out;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      ++i;
      out += (s[i] == 'n') ? '\n' : s[i];
    } else {
      out += s[i];
    }
  }
  return out;
}

std::string format_rational(const mpq_class& q) { return q.get_str(); }

mpq_class parse_rational(const std::string& t, const std::string& file, int line) {
  std::string body = t;
  if (!body.empty() && body[0] == '+') body = body.substr(1);
  try {
    mpq_class q(body);
    q.canonicalize();
    return q;
  } catch (const std::invalid_argument&) {
    throw ParseError(file, line, 1, "malformed rational entry '" + t + "'");
  }
}

std::string format_gaussian(const GaussianRational& g) {
  if (g.im == 0) return format_rational(g.re);
  std::string im = format_rational(g.im) + "i";
  if (g.re == 0) return im;
  return format_rational(g.re) + (g.im >= 0 ? "+" : "") + im;
}

GaussianRational parse_gaussian(const std::string& t, const std::string& file, int line) {
  if (t.empty()) throw ParseError(file, line, 1, "empty rational entry");
  if (t.back() != 'i') return GaussianRational(parse_rational(t, file, line));
  std::string body = t.substr(0, t.size() - 1);
  size_t split = std::string::npos;
  for (size_t k = 1; k < body.size(); ++k) {
    if (body[k] == '+' || body[k] == '-') {
      split = k;
      break;
    }
  }
  if (split == std::string::npos)
    return GaussianRational(mpq_class(0), parse_rational(body, file, line));
  return GaussianRational(parse_rational(body.substr(0, split), file, line),
                          parse_rational(body.substr(split), file, line));
}

std::string dims_of(int rows, int cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

void emit_block_rows(std::string& out, int rows, const std::vector<std::string>& row_text) {
  for (int i = 0; i < rows; ++i) out += "  " + row_text[static_cast<size_t>(i)] + "\n";
}

void emit_cmat(std::string& out, const std::string& key, const CMat& m) {
  out += key + ": " + dims_of(static_cast<int>(m.rows()), static_cast<int>(m.cols())) + "\n";
  std::vector<std::string> rows;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::string row;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) row += ",";
      row += format_cx(m(i, j));
    }
    rows.push_back(std::move(row));
  }
  emit_block_rows(out, static_cast<int>(m.rows()), rows);
}

void emit_qmat(std::string& out, const std::string& key, const QMatrix& m) {
  out += key + ": " + dims_of(m.rows(), m.cols()) + "\n";
  std::vector<std::string> rows;
  for (int i = 0; i < m.rows(); ++i) {
    std::string row;
    for (int j = 0; j < m.cols(); ++j) {
      if (j) row += ",";
      row += format_gaussian(m.at(i, j));
    }
    rows.push_back(std::move(row));
  }
  emit_block_rows(out, m.rows(), rows);
}

void emit_support(std::string& out, const std::string& key, const SupportMatrix& s) {
  out += key + ": " + dims_of(s.rows(), s.cols()) + "\n";
  std::vector<std::string> rows;
  for (int i = 0; i < s.rows(); ++i) {
    std::string row;
    for (int j = 0; j < s.cols(); ++j) {
      if (j) row += ",";
      row += s.get(i, j) ? "1" : "0";
    }
    rows.push_back(std::move(row));
  }
  emit_block_rows(out, s.rows(), rows);
}

const char* oracle_verdict_name(OracleVerdict v) {
  switch (v) {
    case OracleVerdict::Unique: return "Unique";
    case OracleVerdict::NotUnique: return "NotUnique";
    case OracleVerdict::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

std::string join_tags(const std::vector<std::string>& tags) {
  std::string out;
  for (size_t i = 0; i < tags.size(); ++i) {
    if (i) out += ", ";
    out += tags[i];
  }
  return out;
}

bool parse_dims(const std::string& value, int* rows, int* cols) {
  size_t x = value.find('x');
  if (x == std::string::npos || x == 0 || x + 1 >= value.size()) return false;
  auto all_digits = [](const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
      if (c < '0' || c > '9') return false;
    return true;
  };
  std::string a = value.substr(0, x), b = value.substr(x + 1);
  if (!all_digits(a) || !all_digits(b)) return false;
  *rows = std::stoi(a);
  *cols = std::stoi(b);
  return true;
}

// Keys whose values are always scalar facts, even if a value happens to look
// like a dimension header.
bool is_scalar_key(const std::string& key) {
  return key == "command" || key == "input" || key == "tolerance" || key == "seed" ||
         key == "status" || key == "provenance" || key == "descriptor" ||
         key == "oracle_verdict" || key == "oracle_method" || key == "oracle_solutions_examined";
}

// "name[3]" -> ("name", 3); index is -1 when the key carries no brackets.
std::pair<std::string, int> split_indexed(const std::string& key) {
  size_t open = key.find('[');
  if (open == std::string::npos || key.back() != ']') return {key, -1};
  std::string idx = key.substr(open + 1, key.size() - open - 2);
  int value = 0;
  auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), value);
  if (ec != std::errc() || ptr != idx.data() + idx.size()) return {key, -1};
  return {key.substr(0, open), value};
}

std::vector<std::string> report_lines(const std::string& text) {
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
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

}  // namespace

std::string serialize_report(const Report& r) {
  std::string out;
  out += std::string(REPORT_HEADER) + "\n";
  out += "command: " + r.command + "\n";
  for (const auto& in : r.inputs) out += "input: " + in.label + " " + in.digest + " " + in.path + "\n";
  for (const auto& [key, value] : r.facts) out += key + ": " + esc(value) + "\n";
  if (r.tolerance.is_exact())
    out += "tolerance: exact\n";
  else
    out += "tolerance: float " + format_double(r.tolerance.relative_eps) + "\n";
  if (r.seed) out += "seed: " + std::to_string(*r.seed) + "\n";
  if (r.verdict) {
    const Verdict& v = *r.verdict;
    out += std::string("status: ") + status_name(v.status) + "\n";
    if (!v.provenance.empty()) out += "provenance: " + join_tags(v.provenance) + "\n";
    if (v.descriptor) out += "descriptor: " + esc(*v.descriptor) + "\n";
    if (v.counterexample) {
      emit_cmat(out, "witness_x", v.counterexample->X);
      emit_cmat(out, "witness_y", v.counterexample->Y);
    }
    if (v.counterexample_y_exact) emit_qmat(out, "witness_y_exact", *v.counterexample_y_exact);
    if (v.tuple_counterexample) {
      for (size_t i = 0; i < v.tuple_counterexample->size(); ++i)
        emit_cmat(out, "tuple_witness[" + std::to_string(i) + "]", (*v.tuple_counterexample)[i]);
    }
    if (v.support_tuple_witness) {
      const auto& [a, b] = *v.support_tuple_witness;
      for (size_t i = 0; i < a.size(); ++i)
        emit_support(out, "support_witness_a[" + std::to_string(i) + "]", a[i]);
      for (size_t i = 0; i < b.size(); ++i)
        emit_support(out, "support_witness_b[" + std::to_string(i) + "]", b[i]);
    }
  }
  if (r.oracle) {
    const OracleReport& o = *r.oracle;
    out += std::string("oracle_verdict: ") + oracle_verdict_name(o.verdict) + "\n";
    out += "oracle_method: " + esc(o.method) + "\n";
    out += "oracle_solutions_examined: " + std::to_string(o.solutions_examined) + "\n";
    if (o.alternative_pair) {
      emit_cmat(out, "oracle_alt_x", o.alternative_pair->X);
      emit_cmat(out, "oracle_alt_y", o.alternative_pair->Y);
    }
    if (o.alternative_y_exact) emit_qmat(out, "oracle_alt_y_exact", *o.alternative_y_exact);
    if (o.alternative_tuples) {
      const auto& [a, b] = *o.alternative_tuples;
      for (size_t i = 0; i < a.size(); ++i)
        emit_cmat(out, "oracle_alt_tuple_a[" + std::to_string(i) + "]", a[i]);
      for (size_t i = 0; i < b.size(); ++i)
        emit_cmat(out, "oracle_alt_tuple_b[" + std::to_string(i) + "]", b[i]);
    }
  }
  for (const auto& [key, m] : r.extra_matrices) emit_cmat(out, key, m);
  return out;
}

Report parse_report(const std::string& text) {
  const std::string file = "<report>";
  auto lines = report_lines(text);
  auto fail = [&](size_t idx, const std::string& msg) {
    return ParseError(file, static_cast<int>(idx) + 1, 1, msg);
  };
  if (lines.empty() || lines[0] != REPORT_HEADER) throw fail(0, "missing report header");

  Report r;
  std::optional<CMat> wx, wy, oax, oay;
  std::optional<QMatrix> wye, oaye;
  std::map<int, CMat> tuple_w, oat_a, oat_b;
  std::map<int, SupportMatrix> sw_a, sw_b;

  auto ensure_verdict = [&]() -> Verdict& {
    if (!r.verdict) r.verdict.emplace();
    return *r.verdict;
  };
  auto ensure_oracle = [&]() -> OracleReport& {
    if (!r.oracle) r.oracle.emplace();
    return *r.oracle;
  };

  size_t pos = 1;
  // Consumes the `count` indented rows of a block and returns their text.
  auto take_rows = [&](int count) {
    std::vector<std::string> rows;
    for (int i = 0; i < count; ++i) {
      if (pos >= lines.size() || lines[pos].rfind("  ", 0) != 0)
        throw fail(pos, "matrix block ended early");
      rows.push_back(lines[pos].substr(2));
      ++pos;
    }
    return rows;
  };
  auto block_cmat = [&](int rows, int cols) {
    auto body = take_rows(rows);
    if (rows == 0 || cols == 0) return CMat(rows, cols);
    std::string joined;
    for (const auto& row : body) joined += row + "\n";
    CMat m = parse_matrix_csv(joined, file);
    if (m.rows() != rows || m.cols() != cols) throw fail(pos, "matrix block dimensions disagree");
    return m;
  };
  auto block_qmat = [&](int rows, int cols) {
    auto body = take_rows(rows);
    QMatrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      std::stringstream ss(body[static_cast<size_t>(i)]);
      std::string tok;
      int j = 0;
      while (std::getline(ss, tok, ',')) {
        if (j >= cols) throw fail(pos, "rational block row too wide");
        m.at(i, j++) = parse_gaussian(tok, file, static_cast<int>(pos));
      }
      if (j != cols) throw fail(pos, "rational block row too narrow");
    }
    return m;
  };
  auto block_support = [&](int rows, int cols) {
    auto body = take_rows(rows);
    SupportMatrix s(rows, cols);
    for (int i = 0; i < rows; ++i) {
      std::stringstream ss(body[static_cast<size_t>(i)]);
      std::string tok;
      int j = 0;
      while (std::getline(ss, tok, ',')) {
        if (j >= cols) throw fail(pos, "support block row too wide");
        if (tok != "0" && tok != "1") throw fail(pos, "support entries must be 0 or 1");
        if (tok == "1") s.set(i, j);
        ++j;
      }
      if (j != cols && !(cols == 0 && j == 0)) throw fail(pos, "support block row too narrow");
    }
    return s;
  };

  while (pos < lines.size()) {
    const std::string line = lines[pos];
    if (line.empty()) {
      ++pos;
      continue;
    }
    if (line.rfind("  ", 0) == 0) throw fail(pos, "unexpected indented line");
    size_t sep = line.find(": ");
    if (sep == std::string::npos) throw fail(pos, "expected 'key: value'");
    std::string key = line.substr(0, sep);
    std::string value = line.substr(sep + 2);
    size_t line_idx = pos;
    ++pos;

    int brows = 0, bcols = 0;
    bool looks_like_block = !is_scalar_key(key) && parse_dims(value, &brows, &bcols);
    auto [base, index] = split_indexed(key);

    if (key == "command") {
      r.command = value;
    } else if (key == "input") {
      size_t s1 = value.find(' ');
      size_t s2 = s1 == std::string::npos ? std::string::npos : value.find(' ', s1 + 1);
      if (s2 == std::string::npos) throw fail(line_idx, "input line needs label, digest, path");
      r.inputs.push_back({value.substr(0, s1), value.substr(s1 + 1, s2 - s1 - 1), value.substr(s2 + 1)});
    } else if (key == "tolerance") {
      if (value == "exact") {
        r.tolerance = Tolerance::exact();
      } else if (value.rfind("float ", 0) == 0) {
        r.tolerance = Tolerance::floating(std::strtod(value.c_str() + 6, nullptr));
      } else {
        throw fail(line_idx, "tolerance must be 'exact' or 'float <eps>'");
      }
    } else if (key == "seed") {
      r.seed = std::stoll(value);
    } else if (key == "status") {
      Verdict& v = ensure_verdict();
      if (value == "Holds")
        v.status = Status::Holds;
      else if (value == "Fails")
        v.status = Status::Fails;
      else if (value == "Unknown")
        v.status = Status::Unknown;
      else
        throw fail(line_idx, "unknown status '" + value + "'");
    } else if (key == "provenance") {
      Verdict& v = ensure_verdict();
      size_t start = 0;
      while (start <= value.size()) {
        size_t comma = value.find(", ", start);
        v.provenance.push_back(value.substr(start, comma == std::string::npos ? std::string::npos
                                                                              : comma - start));
        if (comma == std::string::npos) break;
        start = comma + 2;
      }
    } else if (key == "descriptor") {
      ensure_verdict().descriptor = unesc(value);
    } else if (key == "witness_x" && looks_like_block) {
      wx = block_cmat(brows, bcols);
    } else if (key == "witness_y" && looks_like_block) {
      wy = block_cmat(brows, bcols);
    } else if (key == "witness_y_exact" && looks_like_block) {
      wye = block_qmat(brows, bcols);
    } else if (base == "tuple_witness" && index >= 0 && looks_like_block) {
      tuple_w.emplace(index, block_cmat(brows, bcols));
    } else if (base == "support_witness_a" && index >= 0 && looks_like_block) {
      sw_a.emplace(index, block_support(brows, bcols));
    } else if (base == "support_witness_b" && index >= 0 && looks_like_block) {
      sw_b.emplace(index, block_support(brows, bcols));
    } else if (key == "oracle_verdict") {
      OracleReport& o = ensure_oracle();
      if (value == "Unique")
        o.verdict = OracleVerdict::Unique;
      else if (value == "NotUnique")
        o.verdict = OracleVerdict::NotUnique;
      else if (value == "Inconclusive")
        o.verdict = OracleVerdict::Inconclusive;
      else
        throw fail(line_idx, "unknown oracle verdict '" + value + "'");
    } else if (key == "oracle_method") {
      ensure_oracle().method = unesc(value);
    } else if (key == "oracle_solutions_examined") {
      ensure_oracle().solutions_examined = std::stoll(value);
    } else if (key == "oracle_alt_x" && looks_like_block) {
      oax = block_cmat(brows, bcols);
    } else if (key == "oracle_alt_y" && looks_like_block) {
      oay = block_cmat(brows, bcols);
    } else if (key == "oracle_alt_y_exact" && looks_like_block) {
      oaye = block_qmat(brows, bcols);
    } else if (base == "oracle_alt_tuple_a" && index >= 0 && looks_like_block) {
      oat_a.emplace(index, block_cmat(brows, bcols));
    } else if (base == "oracle_alt_tuple_b" && index >= 0 && looks_like_block) {
      oat_b.emplace(index, block_cmat(brows, bcols));
    } else if (looks_like_block && pos < lines.size() && brows > 0 &&
               lines[pos].rfind("  ", 0) == 0) {
      r.extra_matrices.emplace_back(key, block_cmat(brows, bcols));
    } else if (looks_like_block && brows == 0) {
      r.extra_matrices.emplace_back(key, block_cmat(brows, bcols));
    } else {
      r.facts.emplace_back(key, unesc(value));
    }
  }

  if (wx.has_value() != wy.has_value()) throw fail(lines.size() - 1, "witness pair is incomplete");
  if (wx) ensure_verdict().counterexample = FactorPair{*wx, *wy};
  if (wye) ensure_verdict().counterexample_y_exact = *wye;
  if (!tuple_w.empty()) {
    RankOneTuple t;
    for (auto& [i, m] : tuple_w) t.push_back(std::move(m));
    ensure_verdict().tuple_counterexample = std::move(t);
  }
  if (!sw_a.empty() || !sw_b.empty()) {
    RankOneSupportTuple a, b;
    for (auto& [i, s] : sw_a) a.push_back(std::move(s));
    for (auto& [i, s] : sw_b) b.push_back(std::move(s));
    ensure_verdict().support_tuple_witness = std::make_pair(std::move(a), std::move(b));
  }
  if (oax.has_value() != oay.has_value())
    throw fail(lines.size() - 1, "oracle witness pair is incomplete");
  if (oax) ensure_oracle().alternative_pair = FactorPair{*oax, *oay};
  if (oaye) ensure_oracle().alternative_y_exact = *oaye;
  if (!oat_a.empty() || !oat_b.empty()) {
    RankOneTuple a, b;
    for (auto& [i, m] : oat_a) a.push_back(std::move(m));
    for (auto& [i, m] : oat_b) b.push_back(std::move(m));
    ensure_oracle().alternative_tuples = std::make_pair(std::move(a), std::move(b));
  }
  if (r.verdict) r.verdict->tolerance_used = r.tolerance;
  return r;
}

InputDigest digest_input(const std::string& label, const std::string& path) {
  return {label, "fnv1a:" + fnv1a_hex(read_text_file(path)), path};
}

int exit_code_for(const Report& r) {
  bool negative = false, positive = false;
  if (r.verdict) {
    negative = negative || r.verdict->status == Status::Fails;
    positive = positive || r.verdict->status == Status::Holds;
  }
  if (r.oracle) {
    negative = negative || r.oracle->verdict == OracleVerdict::NotUnique;
    positive = positive || r.oracle->verdict == OracleVerdict::Unique;
  }
  if (negative) return 1;
  if (positive) return 0;
  if (r.verdict || r.oracle) return 2;
  return 0;
}

}  // namespace sfid
