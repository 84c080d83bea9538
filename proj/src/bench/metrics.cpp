#include "dpsgd/bench/metrics.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "dpsgd/engine/runtime.hpp"
#include "dpsgd/error.hpp"
#include "dpsgd/kernels.hpp"

namespace dpsgd::bench {

namespace {

const std::string kSchemaPrefix = "# dpsgd-metrics v" + std::to_string(kCsvSchemaVersion);

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::vector<double> Table::column(const std::string& name) const {
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] != name) continue;
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
  }
  throw ConfigError("table: no column '" + name + "'");
}

void write_csv(const std::string& path, const Table& table) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << kSchemaPrefix << ' ' << table.kind << '\n';
  for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
  out << '\n';
  char buf[32];
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw ConfigError("table: row width does not match the header");
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", row[c]);
      out << (c ? "," : "") << buf;
    }
    out << '\n';
  }
  if (!out) throw Error("write to '" + path + "' failed");
}

Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);
  std::string line;
  if (!std::getline(in, line) || line.rfind(kSchemaPrefix, 0) != 0) {
    throw ParseError("missing '" + kSchemaPrefix + "' schema line", 1);
  }
  Table table;
  if (line.size() > kSchemaPrefix.size() + 1) table.kind = line.substr(kSchemaPrefix.size() + 1);
  if (!std::getline(in, line)) throw ParseError("missing header", 2);
  table.columns = split_commas(line);
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != table.columns.size()) throw ParseError("row width does not match the header", lineno);
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& cell : cells) {
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || *end != '\0' || errno == ERANGE) throw ParseError("bad number '" + cell + "'", lineno);
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

double RunMetrics::mean_grad_norm_sq() const {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rows) s += r.grad_norm_sq;
  return s / static_cast<double>(rows.size());
}

double RunMetrics::throughput() const {
  if (stats.wall_clock_s <= 0.0) return 0.0;
  return static_cast<double>(stats.effective_gradients) / stats.wall_clock_s;
}

RunMetrics collect_run(const engine::RunConfig& config, const problems::GradOracle& oracle) {
  RunMetrics m;
  const std::uint64_t every = config.metrics_every;
  auto sample = [&](std::uint64_t t, const ParamVector& v, const engine::MasterStats& s, double wall) {
    const std::vector<double> g = problems::full_grad(oracle, v);
    m.rows.push_back({wall, t, kernels::norm_sq(g), problems::loss_at(oracle, v), s.pushes_received,
                      s.effective_gradients});
  };
  if (every != 0) sample(0, ParamVector(oracle.initial_point(config.seed)), engine::MasterStats{}, 0.0);
  engine::MasterHooks hooks;
  hooks.on_update = [&](const engine::Progress& p) {
    if (every != 0 && (p.t % every == 0 || p.t == config.T)) sample(p.t, p.v, p.stats, p.wall_clock_s);
  };
  engine::MasterResult r = engine::run_dpsgd(config, oracle, hooks);
  if (every == 0) sample(r.stats.iterations, r.v, r.stats, r.stats.wall_clock_s);
  m.stats = std::move(r.stats);
  m.final_v = std::move(r.v).release();
  return m;
}

Table to_table(const std::vector<MetricsRow>& rows) {
  Table t{"dpsgd", {"wall_clock_s", "t", "grad_norm_sq", "loss", "messages_sent", "effective_gradients"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.wall_clock_s, static_cast<double>(r.t), r.grad_norm_sq, r.loss,
                      static_cast<double>(r.messages_sent), static_cast<double>(r.effective_gradients)});
  }
  return t;
}

Table to_table(const std::vector<lda::SviPoint>& points) {
  Table t{"svi", {"wall_clock_s", "effective_docs_seen", "heldout_perplexity", "t"}, {}};
  for (const auto& p : points) {
    t.rows.push_back({p.wall_clock_s, static_cast<double>(p.effective_docs_seen), p.heldout_perplexity,
                      static_cast<double>(p.t)});
  }
  return t;
}

Table to_table(const std::vector<rl::RlPoint>& points) {
  Table t{"rl", {"wall_clock_s", "env_steps", "mean_return_last_100_episodes", "episodes", "t"}, {}};
  for (const auto& p : points) {
    t.rows.push_back({p.wall_clock_s, static_cast<double>(p.env_steps), p.mean_return_last_100,
                      static_cast<double>(p.episodes), static_cast<double>(p.t)});
  }
  return t;
}

}  // namespace dpsgd::bench
