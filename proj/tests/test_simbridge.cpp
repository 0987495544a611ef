#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "mixquad/collocation.hpp"
#include "mixquad/io.hpp"
#include "mixquad/simbridge.hpp"

using namespace mixquad;
using namespace mixquad::testing;

namespace {

QuadratureRule tiny_rule() {
  QuadratureRule rule;
  rule.nodes.resize(3, 2);
  rule.nodes << 0.1, -0.2, 0.0, 0.05, -0.3, 0.4;
  rule.weights.resize(3);
  rule.weights << 0.5, 0.25, 0.25;
  rule.order = 1;
  rule.residual_l1 = 1e-9;
  return rule;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("mixquad_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

}  // namespace

TEST_CASE("emit_samples writes a deterministic id/coordinate table") {
  const QuadratureRule rule = tiny_rule();
  TempDir dir;
  const std::string path = dir.file("samples.csv");
  emit_samples(rule, path);
  const std::string first = slurp(path);

  int data_rows = 0;
  bool header = false;
  std::istringstream lines(first);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.rfind("id,x1,x2", 0) == 0) header = true;
    if (!line.empty() && line[0] != '#' && line[0] != 'i') ++data_rows;
  }
  CHECK(header);
  CHECK(data_rows == 3);

  emit_samples(rule, path);
  CHECK(slurp(path) == first);
}

TEST_CASE("results round-trip preserves values in node order") {
  const QuadratureRule rule = tiny_rule();
  TempDir dir;
  const std::string samples = dir.file("samples.csv");
  const SampleBatch batch = emit_samples(rule, samples);

  // Hand-fill results out of order, reusing the provenance line.
  const std::string results = dir.file("results.csv");
  {
    std::ofstream out(results);
    out << "# rule " << hex_hash(batch.rule_provenance) << "\n";
    out << "id,gain,phase\n";
    out << "3,0.25,-1\n";
    out << "1,1.5,2.25e-3\n";
    out << "2,-0.5,0\n";
  }
  const ResultBatch parsed = ingest_results(rule, results);
  REQUIRE(parsed.column_names == std::vector<std::string>{"gain", "phase"});
  CHECK_FALSE(parsed.any_failed());
  CHECK(parsed.values(0, 0) == 1.5);
  CHECK(parsed.values(1, 0) == -0.5);
  CHECK(parsed.values(2, 0) == 0.25);
  CHECK(parsed.values(1, 1) == 0.0);
  CHECK(parsed.column(1)[0] == 2.25e-3);
}

TEST_CASE("ingest rejects broken batches") {
  const QuadratureRule rule = tiny_rule();
  TempDir dir;
  const SampleBatch batch = emit_samples(rule, dir.file("samples.csv"));
  const std::string provenance = "# rule " + hex_hash(batch.rule_provenance) + "\n";

  SUBCASE("missing ids are listed") {
    const std::string path = dir.file("missing.csv");
    std::ofstream(path) << provenance << "id,out\n1,1.0\n3,3.0\n";
    try {
      (void)ingest_results(rule, path);
      FAIL("expected IncompleteBatchError");
    } catch (const IncompleteBatchError& e) {
      REQUIRE(e.missing_ids.size() == 1);
      CHECK(e.missing_ids[0] == 2);
    }
  }
  SUBCASE("stale provenance is rejected") {
    const std::string path = dir.file("stale.csv");
    std::ofstream(path) << "# rule 00000000deadbeef\nid,out\n1,1\n2,2\n3,3\n";
    CHECK_THROWS_AS((void)ingest_results(rule, path), StaleRuleError);
  }
  SUBCASE("absent provenance is rejected") {
    const std::string path = dir.file("noprov.csv");
    std::ofstream(path) << "id,out\n1,1\n2,2\n3,3\n";
    CHECK_THROWS_AS((void)ingest_results(rule, path), StaleRuleError);
  }
  SUBCASE("non-numeric cells carry the line number") {
    const std::string path = dir.file("garbled.csv");
    std::ofstream(path) << provenance << "id,out\n1,1.0\n2,oops\n3,3.0\n";
    try {
      (void)ingest_results(rule, path);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line == 4);
    }
  }
  SUBCASE("duplicate ids are rejected") {
    const std::string path = dir.file("dup.csv");
    std::ofstream(path) << provenance << "id,out\n1,1\n1,1\n3,3\n";
    CHECK_THROWS_AS((void)ingest_results(rule, path), ParseError);
  }
  SUBCASE("explicit failure markers are carried through") {
    const std::string path = dir.file("failed.csv");
    std::ofstream(path) << provenance << "id,out\n1,1\n2,FAILED\n3,3\n";
    const ResultBatch parsed = ingest_results(rule, path);
    CHECK(parsed.any_failed());
    CHECK(parsed.failed_ids() == std::vector<std::int64_t>{2});
    CHECK_THROWS_AS((void)parsed.column(0), IoError);
  }
}

TEST_CASE("run_command collects subprocess outputs in node order") {
  const QuadratureRule rule = tiny_rule();
  RunOptions options;

  SUBCASE("constant echo") {
    const ResultBatch batch = run_command(rule, "echo 1.0", options);
    REQUIRE(batch.column_names.size() == 1);
    CHECK_FALSE(batch.any_failed());
    for (int k = 0; k < 3; ++k) CHECK(batch.values(k, 0) == 1.0);
  }
  SUBCASE("coordinate placeholders feed the synthetic response") {
    const ResultBatch batch = run_command(
        rule, "awk \"BEGIN { printf \\\"%.17g\\\", exp({x1}) + 0.1*cos({x1})*sin({x2}) }\"",
        options);
    REQUIRE_FALSE(batch.any_failed());
    for (int k = 0; k < 3; ++k) {
      const double expected = synthetic_response(rule.nodes(k, 0), rule.nodes(k, 1));
      CHECK(batch.values(k, 0) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
  SUBCASE("stdin mode") {
    RunOptions stdin_options;
    stdin_options.mode = RunOptions::CoordMode::kStdin;
    const ResultBatch batch =
        run_command(rule, "read a b; echo \"$b\"", stdin_options);
    REQUIRE_FALSE(batch.any_failed());
    for (int k = 0; k < 3; ++k) {
      CHECK(batch.values(k, 0) == doctest::Approx(rule.nodes(k, 1)));
    }
  }
  SUBCASE("multi-column outputs") {
    const ResultBatch batch = run_command(rule, "echo \"{x1}, {x2}\"", options);
    REQUIRE(batch.column_names.size() == 2);
    for (int k = 0; k < 3; ++k) {
      CHECK(batch.values(k, 0) == doctest::Approx(rule.nodes(k, 0)));
      CHECK(batch.values(k, 1) == doctest::Approx(rule.nodes(k, 1)));
    }
  }
  SUBCASE("parallelism does not change the content") {
    RunOptions parallel = options;
    parallel.parallelism = 4;
    const ResultBatch serial = run_command(rule, "echo \"{id}\"", options);
    const ResultBatch wide = run_command(rule, "echo \"{id}\"", parallel);
    CHECK((serial.values - wide.values).cwiseAbs().maxCoeff() == 0.0);
    for (int k = 0; k < 3; ++k) CHECK(serial.values(k, 0) == k + 1);
  }
  SUBCASE("failures are recorded per node") {
    const ResultBatch batch =
        run_command(rule, "test {id} -ne 2 && echo 1.0", options);
    CHECK(batch.any_failed());
    CHECK(batch.failed_ids() == std::vector<std::int64_t>{2});
  }
  SUBCASE("unparseable output is a failure") {
    const ResultBatch batch = run_command(rule, "echo not-a-number", options);
    CHECK(batch.any_failed());
    CHECK(batch.failed_ids().size() == 3);
  }
}

TEST_CASE("end-to-end: emitted samples, constant results, constant surrogate") {
  const GaussianMixture density = fixture_mixture();
  const BasisSet basis = testing_basis(density, 1);
  SolverConfig cfg;
  cfg.seed = 2;
  const QuadratureRule rule = build_rule(basis, density, 1, cfg);

  TempDir dir;
  const SampleBatch samples = emit_samples(rule, dir.file("samples.csv"));
  const std::string results = dir.file("results.csv");
  {
    std::ofstream out(results);
    out << "# rule " << hex_hash(samples.rule_provenance) << "\n";
    out << "id,out\n";
    for (int k = 0; k < rule.size(); ++k) out << (k + 1) << ",1.0\n";
  }
  const ResultBatch batch = ingest_results(rule, results);
  const SurrogateModel model = fit(basis, rule, batch.column(0));
  CHECK(std::abs(model.coeffs[0] - 1.0) <= 5.0 * rule.residual_l1);
}
