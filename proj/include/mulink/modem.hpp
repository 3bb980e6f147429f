#pragma once

// Gray-labeled square-QAM constellations and the bit-metric side of the
// BICM chain: bit<->symbol mapping, max-log demapping of a scalar Gaussian
// channel, and LLR<->posterior conversion.
//
// LLR convention used across the whole project: value = log(P[b=1]/P[b=0]).

#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace mulink {

using cplx = std::complex<double>;

// Default clip for every LLR produced by a detector. Posteriors derived
// from a clipped LLR stay strictly inside (0, 1) in double precision.
inline constexpr double kDefaultLlrClip = 30.0;

struct BitLlr {
  double value = 0.0;
  double clip_limit = kDefaultLlrClip;
};

// Unit-average-energy square QAM with per-axis reflected-Gray labeling.
// A label is an m-bit string, MSB first: the first m/2 bits select the
// I level, the last m/2 bits the Q level.
class Constellation {
 public:
  int order_m = 0;                 // bits per symbol
  std::vector<cplx> points;        // indexed by label value
  std::vector<double> axis_levels; // the 2^(m/2) PAM levels (scaled)

  int size() const { return static_cast<int>(points.size()); }
  int bits_per_axis() const { return order_m / 2; }

  cplx point(unsigned label) const { return points[label]; }

  // Exact demap: label of the nearest constellation point.
  unsigned nearest_label(cplx y) const;
};

// m must be even and in {2, 4, 6, 8}; throws std::invalid_argument otherwise.
Constellation build_constellation(int m);

// Process-wide cache of the four constellations for hot paths.
const Constellation& shared_constellation(int m);

// Maps a bit string of length m*n_s onto n_s symbols (MSB-first groups).
std::vector<cplx> map_bits(std::span<const std::uint8_t> bits, const Constellation& c);

// Inverse of map_bits under a noiseless channel.
std::vector<std::uint8_t> demap_hard(std::span<const cplx> symbols, const Constellation& c);

// Posterior probability of observing `bit` given the LLR.
double llr_to_posterior(const BitLlr& l, int bit);
inline double llr_to_posterior(double llr_value, int bit) {
  return llr_to_posterior(BitLlr{llr_value, kDefaultLlrClip}, bit);
}

inline double clip_llr(double v, double clip) {
  if (v > clip) return clip;
  if (v < -clip) return -clip;
  return v;
}

// Max-log per-bit LLRs of one symbol observed through a scalar Gaussian
// channel: z = s + w, w ~ CN(0, 1/gamma) with gamma the post-equalization
// SINR. Gray square QAM separates per axis, so this equals the exhaustive
// max-log demap. Appends m clipped LLRs to `out`.
void demap_maxlog(cplx z, double gamma, const Constellation& c, double clip,
                  std::vector<double>& out);

}  // namespace mulink
