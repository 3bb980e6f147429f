#include "mulink/modem.hpp"

#include <cmath>

namespace mulink {

namespace {

// Reflected binary Gray code and its inverse.
inline unsigned gray_encode(unsigned v) { return v ^ (v >> 1); }

inline unsigned gray_decode(unsigned g) {
  unsigned v = g;
  for (unsigned shift = 1; shift < 16; shift <<= 1) v ^= v >> shift;
  return v;
}

}  // namespace

Constellation build_constellation(int m) {
  if (m < 2 || m > 8 || (m % 2) != 0) {
    throw std::invalid_argument("build_constellation: m must be even and in {2,4,6,8}");
  }
  const int half = m / 2;
  const int levels = 1 << half;

  // Unit average energy: per-axis PAM levels {±1, ±3, ...} carry mean
  // power (L^2-1)/3 per axis, so the total is 2(L^2-1)/3.
  const double scale = std::sqrt(3.0 / (2.0 * (levels * levels - 1)));

  Constellation c;
  c.order_m = m;
  c.axis_levels.resize(levels);
  for (int idx = 0; idx < levels; ++idx) {
    c.axis_levels[idx] = scale * (2 * idx - (levels - 1));
  }

  c.points.resize(std::size_t(1) << m);
  for (unsigned label = 0; label < c.points.size(); ++label) {
    const unsigned gi = label >> half;            // first half bits -> I
    const unsigned gq = label & (levels - 1);     // last half bits -> Q
    const double i_lvl = c.axis_levels[gray_decode(gi)];
    const double q_lvl = c.axis_levels[gray_decode(gq)];
    c.points[label] = {i_lvl, q_lvl};
  }
  return c;
}

const Constellation& shared_constellation(int m) {
  static const Constellation q4 = build_constellation(2);
  static const Constellation q16 = build_constellation(4);
  static const Constellation q64 = build_constellation(6);
  static const Constellation q256 = build_constellation(8);
  switch (m) {
    case 2: return q4;
    case 4: return q16;
    case 6: return q64;
    case 8: return q256;
    default: throw std::invalid_argument("shared_constellation: m must be in {2,4,6,8}");
  }
}

unsigned Constellation::nearest_label(cplx y) const {
  const int half = bits_per_axis();
  const int levels = 1 << half;
  auto nearest_axis = [&](double v) {
    int best = 0;
    double best_d = std::abs(v - axis_levels[0]);
    for (int i = 1; i < levels; ++i) {
      const double d = std::abs(v - axis_levels[i]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return static_cast<unsigned>(best);
  };
  const unsigned gi = gray_encode(nearest_axis(y.real()));
  const unsigned gq = gray_encode(nearest_axis(y.imag()));
  return (gi << half) | gq;
}

std::vector<cplx> map_bits(std::span<const std::uint8_t> bits, const Constellation& c) {
  const int m = c.order_m;
  if (bits.size() % m != 0) {
    throw std::invalid_argument("map_bits: bit-string length not divisible by m");
  }
  std::vector<cplx> out;
  out.reserve(bits.size() / m);
  for (std::size_t i = 0; i < bits.size(); i += m) {
    unsigned label = 0;
    for (int j = 0; j < m; ++j) label = (label << 1) | (bits[i + j] & 1u);
    out.push_back(c.points[label]);
  }
  return out;
}

std::vector<std::uint8_t> demap_hard(std::span<const cplx> symbols, const Constellation& c) {
  const int m = c.order_m;
  std::vector<std::uint8_t> bits;
  bits.reserve(symbols.size() * m);
  for (const cplx& y : symbols) {
    const unsigned label = c.nearest_label(y);
    for (int j = m - 1; j >= 0; --j) bits.push_back((label >> j) & 1u);
  }
  return bits;
}

double llr_to_posterior(const BitLlr& l, int bit) {
  const double v = clip_llr(l.value, l.clip_limit);
  // Stable logistic: never exponentiates a positive argument.
  const double s = bit ? v : -v;
  if (s >= 0.0) {
    return 1.0 / (1.0 + std::exp(-s));
  }
  const double e = std::exp(s);
  return e / (1.0 + e);
}

void demap_maxlog(cplx z, double gamma, const Constellation& c, double clip,
                  std::vector<double>& out) {
  const int half = c.bits_per_axis();
  const int levels = 1 << half;

  auto axis_llrs = [&](double y) {
    // min squared distance per bit hypothesis along one axis
    std::vector<double> min0(half, 1e300), min1(half, 1e300);
    for (int idx = 0; idx < levels; ++idx) {
      const double d = y - c.axis_levels[idx];
      const double metric = d * d;
      const unsigned g = gray_encode(static_cast<unsigned>(idx));
      for (int j = 0; j < half; ++j) {
        const bool one = (g >> (half - 1 - j)) & 1u;
        double& slot = one ? min1[j] : min0[j];
        if (metric < slot) slot = metric;
      }
    }
    for (int j = 0; j < half; ++j) {
      out.push_back(clip_llr(gamma * (min0[j] - min1[j]), clip));
    }
  };

  axis_llrs(z.real());
  axis_llrs(z.imag());
}

}  // namespace mulink
