#pragma once

// PHY abstraction both ways: classical effective-SINR mapping families for
// linear detectors and the BMDR-based abstraction for arbitrary detectors,
// plus the TB/BLER/throughput composition algebra.

#include <span>
#include <vector>

#include "mulink/bmdr.hpp"

namespace mulink {

enum class EsmFamily { cesm, eesm, lesm, miesm };

struct EsmConfig {
  EsmFamily family = EsmFamily::eesm;
  double beta1 = 1.0;
  double beta2 = 1.0;
};

struct EsmResult {
  double rho_eff = 0.0;  // linear effective SINR
  bool clamped = false;  // MIESM inversion hit a curve endpoint
};

// rho_eff = beta1 * I^{-1}( mean I(rho/beta2) ); the single-beta EESM
// variant is this form with beta1 = beta2 = beta.
EsmResult esm_effective_sinr(std::span<const double> sinrs, const EsmConfig& cfg, int m,
                             const CurveSet& curves = shared_curves());

// Mean predicted BMDR over the channel set of one codeword.
BmdrEstimate abstract_bmdr(const BmdrPredictor& pred, const std::vector<int>& mods,
                           std::span<const ChannelRealization> channels, RngStream* rng = nullptr);

// Nearest-row lookup: CER of the row whose R_MLD is closest to r_hat;
// equidistant ties resolve to the lower R_MLD (pessimistic).
double map_cer(const BmdrCerTable& table, double r_hat);

// P_hat = 1 - prod(1 - p_hat).
double compose_tb(std::span<const double> p_hats);

// Overall BLER = mean of per-TB error probabilities.
double bler_from_tb(std::span<const double> tb_error_probs);

// (sum (1-p_hat_j) k_j) / (T * t_slot) / 1e6  [Mbps]
double estimate_throughput(std::span<const double> k_bits, std::span<const double> p_hats,
                           double slots, double t_slot);

}  // namespace mulink
