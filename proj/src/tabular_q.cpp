#include "uavsc/tabular_q.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

namespace uavsc {

EpsilonSchedule EpsilonSchedule::over_fraction(double start, double end, double fraction, std::size_t total) {
  const auto steps = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
  return {start, end, std::max<std::size_t>(steps, 1)};
}

void QLConfig::validate() const {
  if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("tabular beta must lie in [0, 1)");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("tabular gamma must lie in [0, 1)");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0) || !(epsilon_end >= 0.0 && epsilon_end <= 1.0))
    throw ConfigError("tabular epsilon must lie in [0, 1]");
  if (epsilon_end > epsilon_start) throw ConfigError("tabular epsilon must be non-increasing");
  if (!(epsilon_decay_fraction > 0.0 && epsilon_decay_fraction <= 1.0))
    throw ConfigError("tabular epsilon_decay_fraction must lie in (0, 1]");
  if (!(beta_decay_exponent >= 0.0)) throw ConfigError("tabular beta_decay_exponent must be >= 0");
}

EpsilonSchedule QLConfig::epsilon_schedule() const {
  return EpsilonSchedule::over_fraction(epsilon_start, epsilon_end, epsilon_decay_fraction, steps);
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw DomainError("argmax of an empty row");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::size_t select_epsilon_greedy(std::span<const double> q_row, double epsilon, double u_explore,
                                  double u_choice) {
  if (q_row.empty()) throw DomainError("epsilon-greedy over an empty row");
  if (u_explore < epsilon) {
    const auto n = q_row.size();
    return std::min(static_cast<std::size_t>(u_choice * static_cast<double>(n)), n - 1);
  }
  return argmax(q_row);
}

void QTable::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "state_index,action_index,value\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t s = 0; s < states_; ++s) {
    for (std::size_t a = 0; a < actions_; ++a) out << s << ',' << a << ',' << (*this)(s, a) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

QTable QTable::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "state_index,action_index,value") throw std::runtime_error("unexpected Q-table header");

  struct Row {
    std::size_t s, a;
    double v;
  };
  std::vector<Row> rows;
  std::size_t max_s = 0, max_a = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    Row row{};
    char c1 = 0, c2 = 0;
    if (!(fields >> row.s >> c1 >> row.a >> c2 >> row.v) || c1 != ',' || c2 != ',')
      throw std::runtime_error("malformed Q-table row: " + line);
    max_s = std::max(max_s, row.s);
    max_a = std::max(max_a, row.a);
    rows.push_back(row);
  }
  if (rows.empty()) throw std::runtime_error("empty Q-table file");
  QTable table(max_s + 1, max_a + 1);
  for (const auto& row : rows) table(row.s, row.a) = row.v;
  return table;
}

TabularResult train_tabular(const EnvConfig& env_config, const QLConfig& config, std::uint64_t seed) {
  UavEnv env(env_config);
  UavTabularEnv view(env);
  return train_q_learning(view, config, seed);
}

}  // namespace uavsc
