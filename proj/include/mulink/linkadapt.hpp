#pragma once

// BMDR-based MCS selection (the iterative modulation-reduction algorithm),
// ACK/NACK-driven correction offsets, and dynamic detector selection.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mulink/detect.hpp"

namespace mulink {

struct McsEntry {
  int index = 0;  // 1-based
  int m = 2;
  double r = 0.5;
  int k = 0;
  int n = 0;
  double se = 0.0;  // m * r
};

class McsTable {
 public:
  explicit McsTable(std::vector<McsEntry> entries);

  const std::vector<McsEntry>& entries() const { return entries_; }
  int size() const { return static_cast<int>(entries_.size()); }
  const McsEntry& by_index(int index) const;

  // Modulation set M = {2k, k <= k_max}, ascending.
  const std::vector<int>& mod_orders() const { return mods_; }
  int k_max() const { return static_cast<int>(mods_.size()); }

  // Available rates for modulation order m, ascending.
  const std::vector<double>& rates_for(int m) const;
  const McsEntry& entry_for(int m, double r) const;

  // 12-entry default spanning m in {2,4,6}; k and n follow n_re*m*n_t.
  static McsTable make_default(int n_re, int n_t);

  static McsTable load_csv(const std::string& path);
  void save_csv(const std::string& path) const;

 private:
  std::vector<McsEntry> entries_;
  std::vector<int> mods_;
  std::vector<std::vector<double>> rates_;  // parallel to mods_
};

struct LaState {
  std::vector<double> delta;  // per-UE BMDR-correction offset
  std::vector<int> c;         // per-UE current modulation index (1..k_max)
  std::vector<int> ack_history;  // sliding success counts (diagnostic)

  static LaState init(int n_ue, int k_max);
};

struct OllaConfig {
  double step_fail = 0.01;
  double step_ok = 0.0;  // 0 -> derived as step_fail * eps/(1-eps)
  double delta_min = -0.5;
  double delta_max = 0.5;

  double resolved_step_ok(double eps) const {
    return step_ok > 0.0 ? step_ok : step_fail * eps / (1.0 - eps);
  }
};

// delta <- clamp(delta + step_ok) on success, clamp(delta - step_fail) on failure.
void update_delta(LaState& state, int ue, bool decoded_ok, double step_ok, double step_fail,
                  double delta_min = -0.5, double delta_max = 0.5);

// Target-BMDR oracle: z(m, r, n, eps); nullopt = unreachable at this eps.
using ThresholdFn = std::function<std::optional<double>(int m, double r, int n, double eps)>;

// Set-level BMDR prediction for a candidate modulation assignment:
// returns R_hat per UE, already averaged over the channel set.
using SetPredictFn = std::function<std::vector<double>(const std::vector<int>& mods)>;

struct McsDecision {
  int mcs_index = 0;
  int m = 2;
  double r = 0.0;
  int k = 0;
  int n = 0;
  bool fallback = false;  // no rate met the criterion; min rate assigned
};

struct SelectResult {
  std::vector<McsDecision> per_ue;
  std::vector<double> r_hat;   // final-iteration predictions
  int loop_iterations = 0;
  long criterion_evals = 0;
  long predictor_sweeps = 0;
  double mean_se = 0.0;  // (1/N_u) sum r*m*
};

// Iterative MCS selection: every UE starts at the highest modulation order
// and steps down while its predicted BMDR is below the cheapest threshold
// at that order; the final rate is the largest one meeting the criterion,
// with min-rate fallback.
SelectResult select_mcs(const SetPredictFn& predict, const McsTable& table,
                        const ThresholdFn& threshold, double eps, const LaState& state, int n_re,
                        const std::vector<int>& n_t_per_ue);

// Least-complexity detector among the mean-SE maximizers. Specs must be
// ordered by non-decreasing complexity.
int select_detector(std::span<const SelectResult> results, std::span<const DetectorSpec> specs);

// Weighted SE/complexity trade-off: argmax gamma*f1 + (1-gamma)*f2 with
// f1 = sum(r*m*) / (N_u r_max m_max) and f2 = -C(D_p)/C(D_Nd).
int select_detector_weighted(std::span<const SelectResult> results,
                             std::span<const DetectorSpec> specs, double gamma,
                             double r_max_m_max);

}  // namespace mulink
