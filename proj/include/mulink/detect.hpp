#pragma once

// Soft-output MU-MIMO detectors operating on the whitened model
// y = H s + n, n ~ CN(0, I). All detectors emit max-log per-bit LLRs
// (convention log(P1/P0)), clipped, laid out stream-major with MSB-first
// bits inside a symbol.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mulink/channel.hpp"
#include "mulink/modem.hpp"

namespace mulink {

enum class DetectorKind { lmmse, kbest, mld };

struct DetectorSpec {
  DetectorKind kind = DetectorKind::lmmse;
  int k = 0;            // K-best list size
  double complexity = 1.0;

  std::string name() const;
  static DetectorSpec lmmse();
  static DetectorSpec kbest(int k);
  static DetectorSpec mld();
};

// Per-RE stream layout: which constellation each composite stream uses and
// where its bits land in the flat LLR vector.
struct StreamLayout {
  std::vector<const Constellation*> per_stream;
  std::vector<int> ue_of_stream;
  std::vector<int> bit_offset;  // per stream, into the flat LLR vector
  int total_bits = 0;

  static StreamLayout build(const std::vector<UeLayout>& ues,
                            const std::vector<const Constellation*>& per_ue);
  int n_streams() const { return static_cast<int>(per_stream.size()); }
};

struct DetectorOutput {
  std::vector<double> llrs;
  std::vector<double> post_eq_sinr;  // per stream; empty for non-linear detectors
  std::string detector_id;
  bool regularized = false;
};

// LMMSE with per-stream post-equalization SINR and Gaussian-approximated
// scalar max-log demapping.
DetectorOutput detect_lmmse(const Eigen::VectorXcd& y, const ChannelRealization& h,
                            const StreamLayout& layout, double clip = kDefaultLlrClip);

// Post-equalization SINRs only (no received vector required); used by the
// MI-table BMDR predictor and the ESM pipelines.
Eigen::VectorXd lmmse_post_eq_sinr(const ChannelRealization& h);

// Breadth-first K-best sphere search over a sorted-QR decomposition.
DetectorOutput detect_kbest(const Eigen::VectorXcd& y, const ChannelRealization& h, int k,
                            const StreamLayout& layout, double clip = kDefaultLlrClip);

// Exhaustive max-log MLD; throws UnsupportedSizeError above the candidate cap.
DetectorOutput detect_mld(const Eigen::VectorXcd& y, const ChannelRealization& h,
                          const StreamLayout& layout, double clip = kDefaultLlrClip,
                          std::size_t enumeration_cap = std::size_t(1) << 20);

// Dispatch on DetectorSpec.
DetectorOutput detect(const DetectorSpec& spec, const Eigen::VectorXcd& y,
                      const ChannelRealization& h, const StreamLayout& layout,
                      double clip = kDefaultLlrClip);

}  // namespace mulink
