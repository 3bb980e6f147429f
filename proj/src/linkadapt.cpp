#include "mulink/linkadapt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "mulink/errors.hpp"

namespace mulink {

McsTable::McsTable(std::vector<McsEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw std::invalid_argument("McsTable: empty");
  double prev_se = 0.0;
  std::set<int> mods;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    McsEntry& e = entries_[i];
    e.index = static_cast<int>(i) + 1;
    e.se = e.m * e.r;
    if (!(e.r > 0.0 && e.r < 1.0)) throw std::invalid_argument("McsTable: rate must be in (0,1)");
    if (e.se <= prev_se) throw std::invalid_argument("McsTable: SE must be strictly increasing");
    prev_se = e.se;
    mods.insert(e.m);
  }
  mods_.assign(mods.begin(), mods.end());
  // modulation set must be {2,4,...,2*k_max}
  for (std::size_t k = 0; k < mods_.size(); ++k) {
    if (mods_[k] != 2 * static_cast<int>(k + 1)) {
      throw std::invalid_argument("McsTable: modulation orders must be {2,4,...,2k_max}");
    }
  }
  rates_.resize(mods_.size());
  for (const auto& e : entries_) {
    rates_[e.m / 2 - 1].push_back(e.r);
  }
  for (auto& rs : rates_) {
    std::sort(rs.begin(), rs.end());
    if (rs.empty()) throw std::invalid_argument("McsTable: every modulation needs a rate set");
  }
}

const McsEntry& McsTable::by_index(int index) const {
  if (index < 1 || index > size()) throw std::invalid_argument("McsTable: index out of range");
  return entries_[index - 1];
}

const std::vector<double>& McsTable::rates_for(int m) const {
  const int k = m / 2 - 1;
  if (k < 0 || k >= static_cast<int>(rates_.size())) {
    throw std::invalid_argument("McsTable: unknown modulation order");
  }
  return rates_[k];
}

const McsEntry& McsTable::entry_for(int m, double r) const {
  for (const auto& e : entries_) {
    if (e.m == m && std::abs(e.r - r) < 1e-12) return e;
  }
  throw std::invalid_argument("McsTable: no entry for m=" + std::to_string(m));
}

McsTable McsTable::make_default(int n_re, int n_t) {
  // Rates live on the 1/24 grid of the QC code family; SE strictly
  // increases across the 12 entries.
  static const std::pair<int, int> plan[12] = {
      {2, 6},  {2, 8},  {2, 12}, {2, 16},   // QPSK  r = .25 .333 .5 .667
      {4, 9},  {4, 11}, {4, 12}, {4, 14},   // 16QAM r = .375 .458 .5 .583
      {6, 12}, {6, 14}, {6, 16}, {6, 18},   // 64QAM r = .5 .583 .667 .75
  };
  std::vector<McsEntry> entries;
  for (const auto& [m, r24] : plan) {
    McsEntry e;
    e.m = m;
    e.r = r24 / 24.0;
    e.n = n_re * m * n_t;
    e.k = static_cast<int>(std::lround(e.n * e.r));
    entries.push_back(e);
  }
  return McsTable(std::move(entries));
}

McsTable McsTable::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("McsTable: cannot open " + path);
  std::vector<McsEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("index", 0) == 0) continue;
    McsEntry e;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%d,%d", &e.index, &e.m, &e.r, &e.k, &e.n) != 5) {
      throw ConfigError("McsTable: bad row in " + path + ": " + line);
    }
    entries.push_back(e);
  }
  if (entries.empty()) throw ConfigError("McsTable: no entries in " + path);
  return McsTable(std::move(entries));
}

void McsTable::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("McsTable: cannot write " + path);
  out << "index,m,r,k,n\n";
  char buf[96];
  for (const auto& e : entries_) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.9g,%d,%d\n", e.index, e.m, e.r, e.k, e.n);
    out << buf;
  }
}

LaState LaState::init(int n_ue, int k_max) {
  LaState s;
  s.delta.assign(n_ue, 0.0);
  s.c.assign(n_ue, k_max);
  s.ack_history.assign(n_ue, 0);
  return s;
}

void update_delta(LaState& state, int ue, bool decoded_ok, double step_ok, double step_fail,
                  double delta_min, double delta_max) {
  if (!(step_ok > 0.0) || !(step_fail > 0.0)) {
    throw std::invalid_argument("update_delta: step sizes must be positive");
  }
  double& d = state.delta.at(ue);
  d += decoded_ok ? step_ok : -step_fail;
  d = std::clamp(d, delta_min, delta_max);
  if (decoded_ok) state.ack_history.at(ue)++;
}

SelectResult select_mcs(const SetPredictFn& predict, const McsTable& table,
                        const ThresholdFn& threshold, double eps, const LaState& state, int n_re,
                        const std::vector<int>& n_t_per_ue) {
  const int n_ue = static_cast<int>(n_t_per_ue.size());
  if (n_ue == 0) throw std::invalid_argument("select_mcs: no UEs");
  if (static_cast<int>(state.delta.size()) != n_ue) {
    throw std::invalid_argument("select_mcs: state size mismatch");
  }
  const int k_max = table.k_max();

  SelectResult res;
  std::vector<int> c(n_ue, k_max), c_next(n_ue, k_max);

  // Cheapest threshold per modulation order: min over the rate set.
  // Unreachable rates are skipped; if no rate is reachable the criterion
  // fails and the UE keeps stepping down (min-rate fallback at the end).
  auto min_threshold = [&](int m, int n_bits) -> std::optional<double> {
    std::optional<double> best;
    for (double r : table.rates_for(m)) {
      const auto z = threshold(m, r, n_bits, eps);
      ++res.criterion_evals;
      if (z && (!best || *z < *best)) best = z;
    }
    return best;
  };

  std::vector<double> r_hat;
  bool update_flag = true;
  while (update_flag) {
    std::vector<int> mods(n_ue);
    for (int i = 0; i < n_ue; ++i) mods[i] = 2 * c[i];
    r_hat = predict(mods);
    ++res.predictor_sweeps;
    if (static_cast<int>(r_hat.size()) != n_ue) {
      throw std::invalid_argument("select_mcs: predictor returned wrong UE count");
    }
    ++res.loop_iterations;

    for (int i = 0; i < n_ue; ++i) {
      const int m = mods[i];
      const int n_bits = n_re * m * n_t_per_ue[i];
      const auto zmin = min_threshold(m, n_bits);
      const bool fails = !zmin || (r_hat[i] < *zmin - state.delta[i]);
      c_next[i] = fails ? std::max(c[i] - 1, 1) : c[i];
    }
    update_flag = false;
    for (int i = 0; i < n_ue; ++i) {
      if (c_next[i] != c[i]) update_flag = true;
    }
    c = c_next;
  }

  res.per_ue.resize(n_ue);
  res.r_hat = r_hat;
  for (int i = 0; i < n_ue; ++i) {
    const int m = 2 * c[i];
    const int n_bits = n_re * m * n_t_per_ue[i];
    const auto& rates = table.rates_for(m);
    double chosen_r = -1.0;
    for (double r : rates) {  // ascending; keep the largest qualifying rate
      const auto z = threshold(m, r, n_bits, eps);
      ++res.criterion_evals;
      if (z && r_hat[i] >= *z - state.delta[i]) chosen_r = r;
    }
    McsDecision d;
    d.m = m;
    if (chosen_r < 0.0) {
      d.r = rates.front();
      d.fallback = true;
    } else {
      d.r = chosen_r;
    }
    const McsEntry& e = table.entry_for(m, d.r);
    d.mcs_index = e.index;
    d.k = e.k;
    d.n = e.n;
    res.per_ue[i] = d;
    res.mean_se += e.se;
  }
  res.mean_se /= n_ue;
  return res;
}

int select_detector(std::span<const SelectResult> results, std::span<const DetectorSpec> specs) {
  if (results.empty() || results.size() != specs.size()) {
    throw std::invalid_argument("select_detector: need one result per detector");
  }
  for (std::size_t p = 1; p < specs.size(); ++p) {
    if (specs[p].complexity < specs[p - 1].complexity) {
      throw std::invalid_argument("select_detector: specs must be ordered by complexity");
    }
  }
  int best = 0;
  for (std::size_t p = 1; p < results.size(); ++p) {
    if (results[p].mean_se > results[best].mean_se) best = static_cast<int>(p);
  }
  return best;  // strict > keeps the lowest index among ties
}

int select_detector_weighted(std::span<const SelectResult> results,
                             std::span<const DetectorSpec> specs, double gamma,
                             double r_max_m_max) {
  if (results.empty() || results.size() != specs.size()) {
    throw std::invalid_argument("select_detector_weighted: need one result per detector");
  }
  if (gamma < 0.0 || gamma > 1.0) {
    throw std::invalid_argument("select_detector_weighted: gamma in [0,1]");
  }
  const double cmax = specs.back().complexity;
  if (!(cmax > 0.0)) {
    throw std::invalid_argument("select_detector_weighted: max complexity must be positive");
  }
  int best = 0;
  double best_score = -1e300;
  for (std::size_t p = 0; p < results.size(); ++p) {
    const double f1 = results[p].mean_se / r_max_m_max;
    const double f2 = -specs[p].complexity / cmax;
    const double score = gamma * f1 + (1.0 - gamma) * f2;
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(p);
    }
  }
  return best;
}

}  // namespace mulink
