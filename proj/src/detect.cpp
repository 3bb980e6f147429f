#include "mulink/detect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mulink/errors.hpp"

namespace mulink {

std::string DetectorSpec::name() const {
  switch (kind) {
    case DetectorKind::lmmse:
      return "lmmse";
    case DetectorKind::kbest:
      return "kbest" + std::to_string(k);
    case DetectorKind::mld:
      return "mld";
  }
  return "?";
}

DetectorSpec DetectorSpec::lmmse() { return {DetectorKind::lmmse, 0, 1.0}; }
DetectorSpec DetectorSpec::kbest(int k) { return {DetectorKind::kbest, k, static_cast<double>(k)}; }
DetectorSpec DetectorSpec::mld() { return {DetectorKind::mld, 0, 0.0}; }

StreamLayout StreamLayout::build(const std::vector<UeLayout>& ues,
                                 const std::vector<const Constellation*>& per_ue) {
  if (ues.size() != per_ue.size()) {
    throw std::invalid_argument("StreamLayout: one constellation per UE required");
  }
  StreamLayout out;
  int off = 0;
  for (std::size_t u = 0; u < ues.size(); ++u) {
    for (int l = 0; l < ues[u].n_t; ++l) {
      out.per_stream.push_back(per_ue[u]);
      out.ue_of_stream.push_back(static_cast<int>(u));
      out.bit_offset.push_back(off);
      off += per_ue[u]->order_m;
    }
  }
  out.total_bits = off;
  return out;
}

namespace {

void check_finite(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& h) {
  if (!y.allFinite() || !h.allFinite()) {
    throw NumericError("detector: non-finite input");
  }
}

}  // namespace

Eigen::VectorXd lmmse_post_eq_sinr(const ChannelRealization& hr) {
  const Eigen::MatrixXcd& h = hr.h;
  const int n = static_cast<int>(h.cols());
  Eigen::MatrixXcd g = h.adjoint() * h + Eigen::MatrixXcd::Identity(n, n);
  Eigen::MatrixXcd ginv = g.inverse();
  Eigen::VectorXd sinr(n);
  for (int i = 0; i < n; ++i) {
    const double d = std::max(ginv(i, i).real(), 1e-300);
    sinr(i) = std::max(1.0 / d - 1.0, 0.0);
  }
  return sinr;
}

DetectorOutput detect_lmmse(const Eigen::VectorXcd& y, const ChannelRealization& hr,
                            const StreamLayout& layout, double clip) {
  check_finite(y, hr.h);
  const Eigen::MatrixXcd& h = hr.h;
  const int n = static_cast<int>(h.cols());

  Eigen::MatrixXcd g = h.adjoint() * h + Eigen::MatrixXcd::Identity(n, n);
  Eigen::MatrixXcd ginv = g.inverse();
  Eigen::VectorXcd z = ginv * (h.adjoint() * y);

  DetectorOutput out;
  out.detector_id = "lmmse";
  out.post_eq_sinr.resize(n);
  out.llrs.reserve(layout.total_bits);
  for (int i = 0; i < n; ++i) {
    const double gd = std::max(ginv(i, i).real(), 1e-300);
    const double mu = 1.0 - gd;            // unbiasing gain of the MMSE estimate
    const double sinr = std::max(1.0 / gd - 1.0, 0.0);
    out.post_eq_sinr[i] = sinr;
    const cplx s_tilde = (mu > 1e-300) ? cplx(z(i) / mu) : cplx(0.0, 0.0);
    demap_maxlog(s_tilde, sinr, *layout.per_stream[i], clip, out.llrs);
  }
  return out;
}

// ---------------------------------------------------------------------------
// K-best

namespace {

struct KbCandidate {
  double metric;
  std::uint32_t id;  // deterministic tie-break (parent order, symbol order)
  std::uint8_t sym[8];
};

}  // namespace

DetectorOutput detect_kbest(const Eigen::VectorXcd& y, const ChannelRealization& hr, int k,
                            const StreamLayout& layout, double clip) {
  if (k < 1) throw std::invalid_argument("detect_kbest: K must be >= 1");
  check_finite(y, hr.h);
  const int n = static_cast<int>(hr.h.cols());
  if (n > 8) throw UnsupportedSizeError("detect_kbest: more than 8 streams not supported");

  DetectorOutput out;
  out.detector_id = "kbest" + std::to_string(k);

  // Sorted QR: columns ordered by ascending norm, so the strongest stream
  // sits at the bottom of R and is expanded first.
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> norms(n);
  for (int i = 0; i < n; ++i) norms[i] = hr.h.col(i).squaredNorm();
  std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) { return norms[a] < norms[b]; });

  Eigen::MatrixXcd hp(hr.h.rows(), n);
  for (int i = 0; i < n; ++i) hp.col(i) = hr.h.col(perm[i]);

  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(hp);
  Eigen::MatrixXcd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  Eigen::VectorXcd yq = (qr.householderQ().adjoint() * y).head(n);

  // Rotate rows so the diagonal of R is real non-negative.
  double rmax = 0.0;
  for (int i = 0; i < n; ++i) rmax = std::max(rmax, std::abs(r(i, i)));
  for (int i = 0; i < n; ++i) {
    const double a = std::abs(r(i, i));
    if (a < 1e-12 * std::max(rmax, 1.0)) {
      r(i, i) = 1e-12 * std::max(rmax, 1.0);
      out.regularized = true;
    }
    const cplx ph = r(i, i) / std::abs(r(i, i));
    r.row(i) *= std::conj(ph);
    yq(i) *= std::conj(ph);
  }

  // Breadth-first expansion from level n-1 down to 0.
  std::vector<KbCandidate> parents, children;
  parents.push_back(KbCandidate{0.0, 0, {0, 0, 0, 0, 0, 0, 0, 0}});
  for (int lvl = n - 1; lvl >= 0; --lvl) {
    const Constellation& q = *layout.per_stream[perm[lvl]];
    children.clear();
    children.reserve(parents.size() * q.size());
    std::uint32_t id = 0;
    for (const KbCandidate& p : parents) {
      // interference from already-fixed levels
      cplx interf = 0.0;
      for (int j = lvl + 1; j < n; ++j) interf += r(lvl, j) * layout.per_stream[perm[j]]->points[p.sym[j]];
      const cplx target = yq(lvl) - interf;
      for (int s = 0; s < q.size(); ++s) {
        const cplx d = target - r(lvl, lvl) * q.points[s];
        KbCandidate c = p;
        c.metric = p.metric + std::norm(d);
        c.id = id++;
        c.sym[lvl] = static_cast<std::uint8_t>(s);
        children.push_back(c);
      }
    }
    if (static_cast<int>(children.size()) > k) {
      auto cmp = [](const KbCandidate& a, const KbCandidate& b) {
        return std::pair(a.metric, a.id) < std::pair(b.metric, b.id);
      };
      std::nth_element(children.begin(), children.begin() + k, children.end(), cmp);
      children.resize(k);
      // keep a deterministic parent order for the next level's tie-breaks
      std::sort(children.begin(), children.end(), cmp);
    }
    parents.swap(children);
  }

  // Max-log LLRs from the surviving list; a missing counter-hypothesis
  // saturates at the clip limit.
  std::vector<double> min0(layout.total_bits, 1e300), min1(layout.total_bits, 1e300);
  for (const KbCandidate& c : parents) {
    for (int lvl = 0; lvl < n; ++lvl) {
      const int stream = perm[lvl];
      const Constellation& q = *layout.per_stream[stream];
      const unsigned label = c.sym[lvl];
      const int base = layout.bit_offset[stream];
      for (int j = 0; j < q.order_m; ++j) {
        const bool one = (label >> (q.order_m - 1 - j)) & 1u;
        double& slot = one ? min1[base + j] : min0[base + j];
        if (c.metric < slot) slot = c.metric;
      }
    }
  }
  out.llrs.resize(layout.total_bits);
  for (int b = 0; b < layout.total_bits; ++b) {
    double v;
    if (min0[b] >= 1e300) {
      v = clip;
    } else if (min1[b] >= 1e300) {
      v = -clip;
    } else {
      v = min0[b] - min1[b];
    }
    out.llrs[b] = clip_llr(v, clip);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exhaustive max-log MLD

namespace {

struct MldScan {
  const Eigen::MatrixXcd* h;
  const StreamLayout* layout;
  std::vector<double>* min0;
  std::vector<double>* min1;
  std::vector<std::uint8_t> labels;

  void recurse(int stream, const Eigen::VectorXcd& residual) {
    const int n = static_cast<int>(h->cols());
    if (stream == n) {
      const double metric = residual.squaredNorm();
      for (int s = 0; s < n; ++s) {
        const Constellation& q = *layout->per_stream[s];
        const int base = layout->bit_offset[s];
        const unsigned label = labels[s];
        for (int j = 0; j < q.order_m; ++j) {
          const bool one = (label >> (q.order_m - 1 - j)) & 1u;
          double& slot = one ? (*min1)[base + j] : (*min0)[base + j];
          if (metric < slot) slot = metric;
        }
      }
      return;
    }
    const Constellation& q = *layout->per_stream[stream];
    for (int s = 0; s < q.size(); ++s) {
      labels[stream] = static_cast<std::uint8_t>(s);
      recurse(stream + 1, residual - h->col(stream) * q.points[s]);
    }
  }
};

}  // namespace

DetectorOutput detect_mld(const Eigen::VectorXcd& y, const ChannelRealization& hr,
                          const StreamLayout& layout, double clip, std::size_t enumeration_cap) {
  check_finite(y, hr.h);
  const int n = static_cast<int>(hr.h.cols());
  double log_candidates = 0.0;
  for (int s = 0; s < n; ++s) log_candidates += std::log2(double(layout.per_stream[s]->size()));
  if (log_candidates > std::log2(double(enumeration_cap)) + 1e-9) {
    throw UnsupportedSizeError("detect_mld: candidate count exceeds enumeration cap");
  }

  std::vector<double> min0(layout.total_bits, 1e300), min1(layout.total_bits, 1e300);
  MldScan scan{&hr.h, &layout, &min0, &min1, std::vector<std::uint8_t>(n, 0)};
  scan.recurse(0, y);

  DetectorOutput out;
  out.detector_id = "mld";
  out.llrs.resize(layout.total_bits);
  for (int b = 0; b < layout.total_bits; ++b) {
    out.llrs[b] = clip_llr(min0[b] - min1[b], clip);
  }
  return out;
}

DetectorOutput detect(const DetectorSpec& spec, const Eigen::VectorXcd& y,
                      const ChannelRealization& h, const StreamLayout& layout, double clip) {
  switch (spec.kind) {
    case DetectorKind::lmmse:
      return detect_lmmse(y, h, layout, clip);
    case DetectorKind::kbest:
      return detect_kbest(y, h, spec.k, layout, clip);
    case DetectorKind::mld:
      return detect_mld(y, h, layout, clip);
  }
  throw std::invalid_argument("detect: unknown detector kind");
}

}  // namespace mulink
