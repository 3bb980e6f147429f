#include "mulink/abstraction.hpp"

#include <cmath>
#include <stdexcept>

namespace mulink {

EsmResult esm_effective_sinr(std::span<const double> sinrs, const EsmConfig& cfg, int m,
                             const CurveSet& curves) {
  if (sinrs.empty()) throw std::invalid_argument("esm_effective_sinr: empty SINR list");
  if (!(cfg.beta1 > 0.0) || !(cfg.beta2 > 0.0)) {
    throw std::invalid_argument("esm_effective_sinr: beta values must be positive");
  }
  for (double s : sinrs) {
    if (!(s > 0.0)) throw std::invalid_argument("esm_effective_sinr: SINRs must be positive");
  }

  EsmResult out;
  const double inv_n = 1.0 / static_cast<double>(sinrs.size());
  switch (cfg.family) {
    case EsmFamily::cesm: {
      double acc = 0.0;
      for (double s : sinrs) acc += std::log1p(s / cfg.beta2);
      out.rho_eff = cfg.beta1 * std::expm1(acc * inv_n);
      break;
    }
    case EsmFamily::eesm: {
      double acc = 0.0;
      for (double s : sinrs) acc += std::exp(-s / cfg.beta2);
      out.rho_eff = cfg.beta1 * (-std::log(acc * inv_n));
      break;
    }
    case EsmFamily::lesm: {
      double acc = 0.0;
      for (double s : sinrs) acc += std::log10(s / cfg.beta2);
      out.rho_eff = cfg.beta1 * std::pow(10.0, acc * inv_n);
      break;
    }
    case EsmFamily::miesm: {
      const MiCurve& curve = curves.curve(m);
      double acc = 0.0;
      for (double s : sinrs) acc += curve.at_snr(s / cfg.beta2);
      const double mean_mi = acc * inv_n;
      bool clamped = false;
      out.rho_eff = cfg.beta1 * curve.invert(mean_mi, &clamped);
      out.clamped = clamped;
      break;
    }
  }
  return out;
}

BmdrEstimate abstract_bmdr(const BmdrPredictor& pred, const std::vector<int>& mods,
                           std::span<const ChannelRealization> channels, RngStream* rng) {
  if (channels.empty()) throw std::invalid_argument("abstract_bmdr: empty channel set");
  std::vector<BmdrEstimate> per_re;
  per_re.reserve(channels.size());
  for (const auto& h : channels) per_re.push_back(predict_bmdr(pred, mods, h, rng));
  return bmdr_of_set(per_re);
}

double map_cer(const BmdrCerTable& table, double r_hat) {
  if (table.rows.empty()) throw std::invalid_argument("map_cer: empty table");
  const BmdrCerRow* best = &table.rows.front();
  double best_d = std::abs(best->bmdr - r_hat);
  for (const auto& row : table.rows) {
    const double d = std::abs(row.bmdr - r_hat);
    // strict < keeps the first (lower-R_MLD) row on equidistant ties
    if (d < best_d) {
      best_d = d;
      best = &row;
    }
  }
  return best->cer_iso;
}

double compose_tb(std::span<const double> p_hats) {
  if (p_hats.empty()) throw std::invalid_argument("compose_tb: empty codeword list");
  double prod = 1.0;
  for (double p : p_hats) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("compose_tb: probability out of range");
    prod *= 1.0 - p;
  }
  return 1.0 - prod;
}

double bler_from_tb(std::span<const double> tb_error_probs) {
  if (tb_error_probs.empty()) throw std::invalid_argument("bler_from_tb: empty TB list");
  double acc = 0.0;
  for (double p : tb_error_probs) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("bler_from_tb: probability out of range");
    acc += p;
  }
  return acc / static_cast<double>(tb_error_probs.size());
}

double estimate_throughput(std::span<const double> k_bits, std::span<const double> p_hats,
                           double slots, double t_slot) {
  if (k_bits.size() != p_hats.size()) {
    throw std::invalid_argument("estimate_throughput: size mismatch");
  }
  if (!(slots > 0.0) || !(t_slot > 0.0)) {
    throw std::invalid_argument("estimate_throughput: T and t_slot must be positive");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < k_bits.size(); ++i) acc += (1.0 - p_hats[i]) * k_bits[i];
  return acc / (slots * t_slot) / 1e6;
}

}  // namespace mulink
