#ifndef MIXQUAD_SIMBRIDGE_HPP
#define MIXQUAD_SIMBRIDGE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mixquad/quadrature.hpp"

namespace mixquad {

// Node coordinates handed to an external simulator, with stable 1-based row
// ids and the provenance hash of the rule they came from.
struct SampleBatch {
  std::uint64_t rule_provenance = 0;
  Eigen::MatrixXd rows;  // M x d
};

// Simulator outputs joined back to rule nodes: one row per node in node
// order, one or more named output columns. A cell is either a finite value
// or explicitly marked failed.
struct ResultBatch {
  std::uint64_t rule_provenance = 0;
  std::vector<std::string> column_names;
  Eigen::MatrixXd values;            // M x K
  std::vector<std::uint8_t> failed;  // M x K, row-major

  bool cell_failed(int row, int col) const {
    return failed[static_cast<std::size_t>(row) * column_names.size() +
                  static_cast<std::size_t>(col)] != 0;
  }
  bool any_failed() const;
  // Node ids (1-based) with at least one failed cell.
  std::vector<std::int64_t> failed_ids() const;
  // Column as a dense vector; throws if any cell of the column failed.
  Eigen::VectorXd column(int col) const;
};

// Writes the two-phase sample file: provenance comment, `id,x1..xd` header,
// one row per node at full precision. Byte-deterministic for a given rule.
SampleBatch emit_samples(const QuadratureRule& rule, const std::string& path);

// Reads a results file, validating the provenance hash and that every node
// id appears exactly once. Columns come from the file header.
ResultBatch ingest_results(const QuadratureRule& rule, const std::string& path);

struct RunOptions {
  // "args": coordinates reach the command through the {x1}..{xd} (and {id})
  // placeholders in the template. "stdin": the coordinates are also written
  // as one whitespace-separated line to the child's stdin.
  enum class CoordMode { kArgs, kStdin };
  CoordMode mode = CoordMode::kArgs;
  int parallelism = 1;
  int retries = 0;
};

// Runs one subprocess per node (at most `parallelism` concurrently), each
// printing a real number or a comma-separated vector on stdout. Failures
// (nonzero exit, unparseable output) are recorded per node after retries;
// batch content is independent of completion order.
ResultBatch run_command(const QuadratureRule& rule, const std::string& command_template,
                        const RunOptions& options);

}  // namespace mixquad

#endif  // MIXQUAD_SIMBRIDGE_HPP
