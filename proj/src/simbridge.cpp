#include "mixquad/simbridge.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cerrno>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "mixquad/collocation.hpp"
#include "mixquad/errors.hpp"

namespace mixquad {

namespace {

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string hex16(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string trim(const std::string& s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(trim(current));
  return fields;
}

bool parse_double(const std::string& text, double* out) {
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE) return false;
  *out = v;
  return true;
}

bool is_failure_marker(const std::string& field) {
  std::string lower;
  lower.reserve(field.size());
  for (char c : field) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return lower == "failed" || lower == "fail" || lower == "nan";
}

}  // namespace

bool ResultBatch::any_failed() const {
  return std::any_of(failed.begin(), failed.end(), [](std::uint8_t f) { return f != 0; });
}

std::vector<std::int64_t> ResultBatch::failed_ids() const {
  std::vector<std::int64_t> ids;
  const std::size_t k = column_names.size();
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      if (failed[static_cast<std::size_t>(r) * k + c]) {
        ids.push_back(r + 1);
        break;
      }
    }
  }
  return ids;
}

Eigen::VectorXd ResultBatch::column(int col) const {
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    if (cell_failed(static_cast<int>(r), col)) {
      throw IoError("result column '" + column_names[static_cast<std::size_t>(col)] +
                    "' has a failed cell at node id " + std::to_string(r + 1));
    }
  }
  return values.col(col);
}

SampleBatch emit_samples(const QuadratureRule& rule, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("emit_samples: cannot open '" + path + "' for writing");

  const int d = rule.dimension();
  const std::uint64_t provenance = rule_hash(rule);
  out << "# mixquad samples\n";
  out << "# rule " << hex16(provenance) << "\n";
  out << "id";
  for (int j = 0; j < d; ++j) out << ",x" << (j + 1);
  out << "\n";
  for (int k = 0; k < rule.size(); ++k) {
    out << (k + 1);
    for (int j = 0; j < d; ++j) out << "," << format_full(rule.nodes(k, j));
    out << "\n";
  }
  out.flush();
  if (!out) throw IoError("emit_samples: write to '" + path + "' failed");
  return SampleBatch{provenance, rule.nodes};
}

ResultBatch ingest_results(const QuadratureRule& rule, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("ingest_results: cannot open '" + path + "'");

  const std::uint64_t expected = rule_hash(rule);
  const int m = rule.size();

  ResultBatch batch;
  batch.rule_provenance = 0;
  bool saw_provenance = false;
  bool saw_header = false;
  std::vector<char> seen(static_cast<std::size_t>(m), 0);
  std::string line;
  std::size_t line_number = 0;

  std::vector<std::vector<double>> value_rows;
  std::vector<std::vector<std::uint8_t>> failed_rows;
  std::vector<int> row_ids;

  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    if (stripped[0] == '#') {
      std::istringstream comment(stripped.substr(1));
      std::string word;
      comment >> word;
      if (word == "rule") {
        std::string hex;
        comment >> hex;
        batch.rule_provenance = std::strtoull(hex.c_str(), nullptr, 16);
        saw_provenance = true;
      }
      continue;
    }
    const std::vector<std::string> fields = split_csv(stripped);
    if (!saw_header) {
      if (fields.empty() || fields[0] != "id") {
        throw ParseError("results header must start with 'id'", line_number);
      }
      if (fields.size() < 2) {
        throw ParseError("results header needs at least one output column", line_number);
      }
      batch.column_names.assign(fields.begin() + 1, fields.end());
      saw_header = true;
      continue;
    }
    if (fields.size() != batch.column_names.size() + 1) {
      throw ParseError("expected " + std::to_string(batch.column_names.size() + 1) +
                           " fields, found " + std::to_string(fields.size()),
                       line_number);
    }
    double id_value = 0.0;
    if (!parse_double(fields[0], &id_value) || id_value != std::floor(id_value)) {
      throw ParseError("bad node id '" + fields[0] + "'", line_number);
    }
    const int id = static_cast<int>(id_value);
    if (id < 1 || id > m) {
      throw ParseError("node id " + std::to_string(id) + " outside 1.." + std::to_string(m),
                       line_number);
    }
    if (seen[static_cast<std::size_t>(id - 1)]) {
      throw ParseError("node id " + std::to_string(id) + " appears twice", line_number);
    }
    seen[static_cast<std::size_t>(id - 1)] = 1;

    std::vector<double> row(batch.column_names.size(), 0.0);
    std::vector<std::uint8_t> failed(batch.column_names.size(), 0);
    for (std::size_t c = 0; c < batch.column_names.size(); ++c) {
      const std::string& field = fields[c + 1];
      double v = 0.0;
      if (is_failure_marker(field)) {
        failed[c] = 1;
      } else if (!parse_double(field, &v)) {
        throw ParseError("cannot parse value '" + field + "'", line_number);
      } else if (!std::isfinite(v)) {
        failed[c] = 1;
      } else {
        row[c] = v;
      }
    }
    row_ids.push_back(id);
    value_rows.push_back(std::move(row));
    failed_rows.push_back(std::move(failed));
  }

  if (!saw_header) throw ParseError("results file has no header line", line_number);
  if (!saw_provenance) {
    throw StaleRuleError("results file carries no '# rule' provenance line", expected, 0);
  }
  if (batch.rule_provenance != expected) {
    throw StaleRuleError("results file was produced for a different rule", expected,
                         batch.rule_provenance);
  }
  std::vector<std::int64_t> missing;
  for (int i = 0; i < m; ++i) {
    if (!seen[static_cast<std::size_t>(i)]) missing.push_back(i + 1);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size(); ++i) {
      if (i) list += ", ";
      list += std::to_string(missing[i]);
    }
    throw IncompleteBatchError("results file is missing node ids {" + list + "}",
                               std::move(missing));
  }

  const std::size_t k = batch.column_names.size();
  batch.values.resize(m, static_cast<Eigen::Index>(k));
  batch.failed.assign(static_cast<std::size_t>(m) * k, 0);
  for (std::size_t r = 0; r < row_ids.size(); ++r) {
    const int node = row_ids[r] - 1;
    for (std::size_t c = 0; c < k; ++c) {
      batch.values(node, static_cast<Eigen::Index>(c)) = value_rows[r][c];
      batch.failed[static_cast<std::size_t>(node) * k + c] = failed_rows[r][c];
    }
  }
  return batch;
}

namespace {

struct ExecResult {
  int exit_code = -1;
  std::string output;
  bool spawn_failed = false;
};

// Run `command` through /bin/sh, optionally feeding stdin, capturing stdout.
ExecResult run_shell(const std::string& command, const std::string* stdin_data) {
  ExecResult result;
  int in_pipe[2] = {-1, -1};
  int out_pipe[2] = {-1, -1};
  if (pipe(out_pipe) != 0) {
    result.spawn_failed = true;
    return result;
  }
  if (stdin_data && pipe(in_pipe) != 0) {
    close(out_pipe[0]);
    close(out_pipe[1]);
    result.spawn_failed = true;
    return result;
  }

  const pid_t pid = fork();
  if (pid < 0) {
    close(out_pipe[0]);
    close(out_pipe[1]);
    if (stdin_data) {
      close(in_pipe[0]);
      close(in_pipe[1]);
    }
    result.spawn_failed = true;
    return result;
  }
  if (pid == 0) {
    if (stdin_data) {
      dup2(in_pipe[0], STDIN_FILENO);
      close(in_pipe[0]);
      close(in_pipe[1]);
    }
    dup2(out_pipe[1], STDOUT_FILENO);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }

  close(out_pipe[1]);
  if (stdin_data) {
    close(in_pipe[0]);
    const char* data = stdin_data->data();
    std::size_t left = stdin_data->size();
    while (left > 0) {
      const ssize_t written = write(in_pipe[1], data, left);
      if (written <= 0) break;  // child may exit without reading; fine
      data += written;
      left -= static_cast<std::size_t>(written);
    }
    close(in_pipe[1]);
  }

  char buffer[4096];
  while (true) {
    const ssize_t got = read(out_pipe[0], buffer, sizeof(buffer));
    if (got > 0) {
      result.output.append(buffer, static_cast<std::size_t>(got));
    } else if (got == 0 || errno != EINTR) {
      break;
    }
  }
  close(out_pipe[0]);

  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string substitute_placeholders(const std::string& tmpl, const QuadratureRule& rule,
                                    int node) {
  std::string cmd = tmpl;
  const auto replace_all = [&cmd](const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = cmd.find(key, pos)) != std::string::npos) {
      cmd.replace(pos, key.size(), value);
      pos += value.size();
    }
  };
  for (int j = 0; j < rule.dimension(); ++j) {
    replace_all("{x" + std::to_string(j + 1) + "}", format_full(rule.nodes(node, j)));
  }
  replace_all("{id}", std::to_string(node + 1));
  return cmd;
}

}  // namespace

ResultBatch run_command(const QuadratureRule& rule, const std::string& command_template,
                        const RunOptions& options) {
  const int m = rule.size();
  const int d = rule.dimension();
  if (m < 1) throw InputError("run_command: rule has no nodes");

  // A child that never reads its stdin must not kill the driver.
  std::signal(SIGPIPE, SIG_IGN);

  struct NodeResult {
    bool failed = true;
    std::vector<double> values;
    std::string detail;
  };
  std::vector<NodeResult> per_node(static_cast<std::size_t>(m));

  const auto run_node = [&](int k) {
    NodeResult& slot = per_node[static_cast<std::size_t>(k)];
    std::string cmd = substitute_placeholders(command_template, rule, k);
    std::string stdin_line;
    if (options.mode == RunOptions::CoordMode::kStdin) {
      for (int j = 0; j < d; ++j) {
        if (j) stdin_line += ' ';
        stdin_line += format_full(rule.nodes(k, j));
      }
      stdin_line += '\n';
    }

    for (int attempt = 0; attempt <= options.retries; ++attempt) {
      const ExecResult exec = run_shell(
          cmd, options.mode == RunOptions::CoordMode::kStdin ? &stdin_line : nullptr);
      if (exec.spawn_failed) {
        slot.detail = "spawn failed";
        continue;
      }
      if (exec.exit_code != 0) {
        slot.detail = "exit code " + std::to_string(exec.exit_code);
        continue;
      }
      const std::vector<std::string> fields = split_csv(trim(exec.output));
      std::vector<double> parsed;
      parsed.reserve(fields.size());
      bool ok = !fields.empty();
      for (const std::string& f : fields) {
        double v = 0.0;
        if (!parse_double(f, &v) || !std::isfinite(v)) {
          ok = false;
          break;
        }
        parsed.push_back(v);
      }
      if (!ok) {
        slot.detail = "unparseable output '" + trim(exec.output) + "'";
        continue;
      }
      slot.failed = false;
      slot.values = std::move(parsed);
      return;
    }
  };

  const int workers = std::clamp(options.parallelism, 1, m);
  if (workers <= 1) {
    for (int k = 0; k < m; ++k) run_node(k);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&]() {
        for (int k = next.fetch_add(1); k < m; k = next.fetch_add(1)) run_node(k);
      });
    }
    for (auto& th : pool) th.join();
  }

  // Column count from the first successful node; mismatches are failures.
  std::size_t k_out = 1;
  for (const auto& nr : per_node) {
    if (!nr.failed) {
      k_out = nr.values.size();
      break;
    }
  }
  ResultBatch batch;
  batch.rule_provenance = rule_hash(rule);
  for (std::size_t c = 0; c < k_out; ++c) {
    batch.column_names.push_back("out" + std::to_string(c + 1));
  }
  batch.values = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(k_out));
  batch.failed.assign(static_cast<std::size_t>(m) * k_out, 0);
  for (int r = 0; r < m; ++r) {
    const NodeResult& nr = per_node[static_cast<std::size_t>(r)];
    if (nr.failed || nr.values.size() != k_out) {
      for (std::size_t c = 0; c < k_out; ++c) {
        batch.failed[static_cast<std::size_t>(r) * k_out + c] = 1;
      }
      continue;
    }
    for (std::size_t c = 0; c < k_out; ++c) {
      batch.values(r, static_cast<Eigen::Index>(c)) = nr.values[c];
    }
  }
  return batch;
}

}  // namespace mixquad
