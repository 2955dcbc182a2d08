// End-to-end tests driving the installed binary: exit codes, deterministic
// reports, parse diagnostics, and the invariant that embedded witnesses
// re-verify when fed back through the checker.

#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include "sfid/io.hpp"
#include "sfid/report.hpp"

using namespace sfid;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::filesystem::path scratch_dir() {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             ("sfid_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir;
}

// Runs the binary through the shell; `env_prefix` may carry VAR=value
// assignments. Paths used in these tests never contain shell metacharacters.
CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  static int stderr_counter = 0;
  auto err_path = std::filesystem::temp_directory_path() /
                  ("sfid_cli_stderr_" + std::to_string(::getpid()) + "_" +
                   std::to_string(stderr_counter++) + ".txt");
  std::string cmd = env_prefix + (env_prefix.empty() ? "" : " ") + SFID_CLI_PATH + " " + args +
                    " 2>" + err_path.string();
  CliResult res;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  size_t got = 0;
  while ((got = ::fread(buf, 1, sizeof(buf), pipe)) > 0) res.out.append(buf, got);
  int rc = ::pclose(pipe);
  res.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  res.err = read_text_file(err_path.string());
  std::filesystem::remove(err_path);
  return res;
}

std::string write_fixture(const std::filesystem::path& dir, const std::string& name,
                          const std::string& text) {
  auto p = (dir / name).string();
  write_text_file(p, text);
  return p;
}

bool support_in_column_sparse(const CMat& m, int k, double thr = 1e-9) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    int nnz = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (std::abs(m(i, j)) > thr) ++nnz;
    if (nnz > k) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("check-right maps verdicts and data errors to the exit contract") {
  auto dir = scratch_dir();
  std::string id2 = write_fixture(dir, "id2.csv", "1,0\n0,1\n");
  std::string y2 = write_fixture(dir, "y2.csv", "2,3\n4,5\n");
  std::string bad = write_fixture(dir, "bad.csv", "1,2\n3,4+5j\n");

  CliResult holds = run_cli("check-right " + id2 + " " + y2 + " col:k=2");
  CHECK(holds.code == 0);
  CHECK(holds.out.find("status: Holds") != std::string::npos);
  CHECK(holds.out.find("command: check-right") != std::string::npos);

  CliResult data = run_cli("check-right " + bad + " " + y2 + " col:k=2");
  CHECK(data.code == 65);
  CHECK(data.err.find("bad.csv:2:6") != std::string::npos);
  CHECK(data.err.find("'i'") != std::string::npos);

  CliResult missing = run_cli("check-right " + dir.string() + "/nope.csv " + y2 + " col:k=2");
  CHECK(missing.code == 65);

  CHECK(run_cli("check-right " + id2).code == 64);   // missing arguments
  CHECK(run_cli("frobnicate").code == 64);           // unknown subcommand
  CHECK(run_cli("--help").code == 0);
}

TEST_CASE("a failing check-right embeds a witness that re-verifies when fed back") {
  auto dir = scratch_dir();
  std::string x = write_fixture(dir, "x.csv", "1,1\n");
  std::string y = write_fixture(dir, "y.csv", "2,3\n");

  CliResult fails = run_cli("check-right " + x + " " + y + " global:s=2");
  REQUIRE(fails.code == 1);
  Report rep = parse_report(fails.out);
  REQUIRE(rep.verdict.has_value());
  CHECK(rep.verdict->status == Status::Fails);
  REQUIRE(rep.verdict->counterexample.has_value());

  const CMat& wx = rep.verdict->counterexample->X;
  const CMat& wy = rep.verdict->counterexample->Y;
  CMat orig_x = read_matrix_csv(x);
  CMat orig_y = read_matrix_csv(y);
  CHECK((wx * wy.transpose() - orig_x * orig_y.transpose()).norm() <= 1e-9);

  // Substituting the witness for Y must reproduce the failure: the original
  // Y is an inequivalent completion of the witness as well.
  std::string fed = write_fixture(dir, "witness_y.csv", format_matrix_csv(wy));
  CliResult again = run_cli("check-right " + x + " " + fed + " global:s=2");
  CHECK(again.code == 1);
}

TEST_CASE("reports are byte-identical across reruns and keep timing on stderr") {
  auto dir = scratch_dir();
  std::string id2 = write_fixture(dir, "id2.csv", "1,0\n0,1\n");
  std::string y2 = write_fixture(dir, "y2.csv", "2,3\n4,5\n");

  CliResult a = run_cli("check-right " + id2 + " " + y2 + " col:k=2");
  CliResult b = run_cli("check-right " + id2 + " " + y2 + " col:k=2");
  CHECK(a.out == b.out);
  CHECK(a.out.find("timing") == std::string::npos);
  CHECK(a.err.find("timing_ms:") != std::string::npos);

  std::string ydiag = write_fixture(dir, "ydiag.csv", "1,0\n0,1\n");
  std::string seeded = "check-instance " + id2 + " " + ydiag +
                       " col:k=1*col:k=1 --oracle --trials 60 --seed 9";
  CHECK(run_cli(seeded).out == run_cli(seeded).out);
}

TEST_CASE("check-instance covers the Holds, Fails, and Unknown exits") {
  auto dir = scratch_dir();
  std::string id2 = write_fixture(dir, "id2.csv", "1,0\n0,1\n");
  std::string ydiag = write_fixture(dir, "ydiag.csv", "1,0\n0,1\n");

  // Disjoint supports within an enumerated permutation-stable family: the
  // scaling-only closure decides, and the report cites it.
  write_fixture(dir, "dl.csv", "1,0\n0,1\n");
  write_fixture(dir, "dr.csv", "1,0\n0,1\n");
  write_fixture(dir, "al.csv", "0,1\n1,0\n");
  write_fixture(dir, "ar.csv", "0,1\n1,0\n");
  std::string pairs = write_fixture(dir, "pairs.json",
                                    "[[\"dl.csv\",\"dr.csv\"],[\"al.csv\",\"ar.csv\"]]");
  CliResult holds = run_cli("check-instance " + id2 + " " + ydiag + " pairs:" + pairs);
  CHECK(holds.code == 0);
  CHECK(holds.out.find("Lemma 5.1") != std::string::npos);
  CHECK(holds.out.find("Cor 5.2") != std::string::npos);

  // A zero left column with a live right column violates the column-support
  // screen.
  std::string xzc = write_fixture(dir, "xzc.csv", "1,0\n0,0\n");
  CliResult fails = run_cli("check-instance " + xzc + " " + ydiag + " col:k=1*col:k=1");
  CHECK(fails.code == 1);
  CHECK(fails.out.find("Lemma 2.8") != std::string::npos);
  Report rep = parse_report(fails.out);
  REQUIRE(rep.verdict.has_value());
  REQUIRE(rep.verdict->counterexample.has_value());

  // The product family admits overlapping lifted supports, so the screens
  // pass but nothing closes the question.
  CliResult unknown = run_cli("check-instance " + id2 + " " + ydiag + " col:k=1*col:k=1");
  CHECK(unknown.code == 2);
  CHECK(unknown.out.find("status: Unknown") != std::string::npos);

  // The randomized search on the all-ones line instance finds an alternative.
  std::string x12 = write_fixture(dir, "x12.csv", "1,1\n");
  std::string y12 = write_fixture(dir, "y12.csv", "2,3\n");
  CliResult searched = run_cli("check-instance " + x12 + " " + y12 +
                               " global:s=2*global:s=2 --oracle --trials 200 --seed 3");
  CHECK(searched.code == 1);
  CHECK(searched.out.find("seed: 3") != std::string::npos);
  Report srep = parse_report(searched.out);
  REQUIRE(srep.oracle.has_value());
  CHECK(srep.oracle->verdict == OracleVerdict::NotUnique);
  REQUIRE(srep.oracle->alternative_pair.has_value());
  const FactorPair& alt = *srep.oracle->alternative_pair;
  CMat z = read_matrix_csv(x12) * read_matrix_csv(y12).transpose();
  CHECK((alt.X * alt.Y.transpose() - z).norm() <= 1e-6 * z.norm());
}

TEST_CASE("uniform decides classical thresholds and attaches constructed witnesses") {
  auto dir = scratch_dir();
  std::string id4 =
      write_fixture(dir, "id4.csv", "1,0,0,0\n0,1,0,0\n0,0,1,0\n0,0,0,1\n");
  CliResult holds = run_cli("uniform " + id4 + " row:l=1 --n 2");
  CHECK(holds.code == 0);
  CHECK(holds.out.find("provenance: Cor 5.9(i)") != std::string::npos);

  std::string x23 = write_fixture(dir, "x23.csv", "1,0,1\n0,1,1\n");
  CliResult fails = run_cli("uniform " + x23 + " col:k=1 --n 2");
  CHECK(fails.code == 1);
  CHECK(fails.out.find("Cor 5.9(ii)") != std::string::npos);
  Report rep = parse_report(fails.out);
  REQUIRE(rep.extra_matrices.size() == 2);
  const CMat& wy = rep.extra_matrices[0].second;
  const CMat& wy2 = rep.extra_matrices[1].second;
  CMat x = read_matrix_csv(x23);
  CHECK((x * wy.transpose() - x * wy2.transpose()).norm() <= 1e-9);
  CHECK(support_in_column_sparse(wy, 1));
  CHECK(support_in_column_sparse(wy2, 1));

  // Feeding the constructed pair back through the instance checker confirms
  // the ambiguity end to end.
  std::string fy = write_fixture(dir, "fy.csv", format_matrix_csv(wy));
  CliResult again = run_cli("check-right " + x23 + " " + fy + " col:k=1");
  CHECK(again.code == 1);

  CHECK(run_cli("uniform " + id4 + " row:l=1").code == 64);  // classical spec needs --n
  CHECK(run_cli("uniform").code == 64);
}

TEST_CASE("uniform --emd decides disjointness of a support tuple") {
  auto dir = scratch_dir();
  std::string ok = write_fixture(dir, "tup_ok.csv", "1,0\n0,1\n\n0,1\n1,0\n");
  CliResult holds = run_cli("uniform --emd " + ok);
  CHECK(holds.code == 0);
  CHECK(holds.out.find("provenance: Lemma 5.1") != std::string::npos);
  CHECK(holds.out.find("members: 2") != std::string::npos);

  std::string bad = write_fixture(dir, "tup_bad.csv", "1,1\n0,1\n\n0,1\n1,0\n");
  CliResult fails = run_cli("uniform --emd " + bad);
  CHECK(fails.code == 1);
  Report rep = parse_report(fails.out);
  REQUIRE(rep.verdict.has_value());
  REQUIRE(rep.verdict->support_tuple_witness.has_value());
  CHECK(rep.verdict->descriptor->find("overlap") != std::string::npos);
}

TEST_CASE("krank prints the rank and cross-checks the oracle") {
  auto dir = scratch_dir();
  std::string id5 = write_fixture(dir, "id5.csv",
                                  "1,0,0,0,0\n0,1,0,0,0\n0,0,1,0,0\n0,0,0,1,0\n0,0,0,0,1\n");
  CliResult r = run_cli("krank " + id5);
  CHECK(r.code == 0);
  CHECK(r.out.find("kruskal_rank: 5") != std::string::npos);

  CliResult both = run_cli("krank " + id5 + " --oracle");
  CHECK(both.code == 0);
  CHECK(both.out.find("kruskal_rank: 5") != std::string::npos);
  CHECK(both.out.find("kruskal_rank_oracle: 5") != std::string::npos);
  CHECK(both.out.find("agreement: yes") != std::string::npos);

  std::string zc = write_fixture(dir, "zc.csv", "1,0\n0,0\n");
  CliResult zero = run_cli("krank " + zc);
  CHECK(zero.code == 0);
  CHECK(zero.out.find("kruskal_rank: 0") != std::string::npos);
}

TEST_CASE("the oracle subcommand reports the exhaustive reference verdict") {
  auto dir = scratch_dir();
  std::string id2 = write_fixture(dir, "id2.csv", "1,0\n0,1\n");
  std::string y2 = write_fixture(dir, "y2.csv", "2,3\n4,5\n");
  CliResult unique = run_cli("oracle " + id2 + " " + y2 + " col:k=2 --exact");
  CHECK(unique.code == 0);
  CHECK(unique.out.find("oracle_verdict: Unique") != std::string::npos);
  CHECK(unique.out.find("tolerance: exact") != std::string::npos);

  std::string x12 = write_fixture(dir, "x12.csv", "1,1\n");
  std::string y12 = write_fixture(dir, "y12.csv", "2,3\n");
  CliResult nu = run_cli("oracle " + x12 + " " + y12 + " global:s=2 --exact");
  CHECK(nu.code == 1);
  CHECK(nu.out.find("oracle_verdict: NotUnique") != std::string::npos);
  Report rep = parse_report(nu.out);
  REQUIRE(rep.oracle.has_value());
  REQUIRE(rep.oracle->alternative_pair.has_value());
}

TEST_CASE("the enumeration budget honors the environment and the flag") {
  auto dir = scratch_dir();
  std::string id2 = write_fixture(dir, "id2.csv", "1,0\n0,1\n");
  std::string y2 = write_fixture(dir, "y2.csv", "2,3\n4,5\n");
  std::string cmd = "check-right " + id2 + " " + y2 + " col:k=2";

  CliResult squeezed = run_cli(cmd, "SFID_BUDGET=2");
  CHECK(squeezed.code == 2);  // the family has 16 members; nothing decided
  CHECK(squeezed.out.find("status: Unknown") != std::string::npos);
  CHECK(squeezed.out.find("budget: 2") != std::string::npos);

  CliResult overridden = run_cli(cmd + " --budget 1000000", "SFID_BUDGET=2");
  CHECK(overridden.code == 0);  // the explicit flag outranks the environment
  CHECK(overridden.out.find("budget: 1000000") != std::string::npos);
}
