#pragma once

// Synthetic MU-MIMO channel generation (i.i.d. Rayleigh, Kronecker-correlated,
// AR(1) slot evolution), interference/estimation-error whitening, and uplink
// open-loop power control.

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "mulink/rng.hpp"

namespace mulink {

struct UeLayout {
  int n_t = 1;             // transmit antennas / streams
  double power_lin = 1.0;  // total transmit power rho_i (linear)
  int col_begin = 0;       // first composite column of this UE
};

// Composite channel for one resource element: columns of UE i are scaled by
// sqrt(rho_i / n_t_i) relative to the unscaled per-UE channel.
struct ChannelRealization {
  Eigen::MatrixXcd h;  // n_r x N
  std::vector<UeLayout> per_ue;
  int f = 0, t = 0;

  int n_rx() const { return static_cast<int>(h.rows()); }
  int n_streams() const { return static_cast<int>(h.cols()); }
  int num_ues() const { return static_cast<int>(per_ue.size()); }

  // 10*log10(sigma_max/sigma_min); used to stratify scenarios.
  double log_cond_db() const;

  Eigen::MatrixXcd ue_block(int ue) const {
    return h.middleCols(per_ue[ue].col_begin, per_ue[ue].n_t);
  }
};

struct NoiseModel {
  Eigen::MatrixXcd kn;  // interference-plus-noise covariance
  Eigen::MatrixXcd ke;  // channel-estimation-error covariance

  bool is_identity() const;
};

// Principal inverse square root of (kn + ke), eigenvalues floored at
// 1e-12 relative. Throws NumericError when the sum is singular beyond
// the floor, reporting the condition number.
Eigen::MatrixXcd inverse_sqrt(const NoiseModel& nm);

// y' = (kn+ke)^{-1/2} y,  h' = (kn+ke)^{-1/2} h.
std::pair<ChannelRealization, Eigen::VectorXcd> whiten(const ChannelRealization& h,
                                                       const Eigen::VectorXcd& y,
                                                       const NoiseModel& nm);

enum class ChannelKind { iid_rayleigh, kronecker };

struct ChannelModel {
  ChannelKind kind = ChannelKind::iid_rayleigh;
  Eigen::MatrixXcd rt;   // N x N transmit-side (cross-stream) correlation
  Eigen::MatrixXcd rr;   // n_r x n_r receive-side correlation
  double ar1_coef = 0.0; // slot-to-slot doppler surrogate, in [0,1]
  // Optional per-slot mixture: with probability mix_prob a slot uses the
  // alternative transmit correlation (exponential with coefficient
  // mix_rt_rho) instead of rt. Used for condition-number stratified runs.
  double mix_prob = 0.0;
  double mix_rt_rho = 0.0;
  std::uint64_t seed = 0;

  void validate(int n_r, int n_streams) const;
};

// Exponential correlation matrix: R(i,j) = rho^|i-j|.
Eigen::MatrixXcd exp_correlation(int n, double rho);

// Principal square root of a Hermitian PSD matrix (eigenvalues floored at 0).
Eigen::MatrixXcd matrix_sqrt_psd(const Eigen::MatrixXcd& a);

struct ChannelDims {
  int n_r = 0;
  std::vector<int> n_t_per_ue;
  int n_streams() const {
    int s = 0;
    for (int t : n_t_per_ue) s += t;
    return s;
  }
};

// White innovations evolved across slots; correlation and power scaling are
// applied when realizing a ChannelRealization.
class ChannelTrack {
 public:
  ChannelTrack(int n_r, int n_streams);
  void init(RngStream& rng);
  void step(double ar1_coef, RngStream& rng);
  const Eigen::MatrixXcd& white() const { return w_; }

 private:
  Eigen::MatrixXcd w_;
};

// Applies (optionally mixed) correlation shaping and per-UE power scaling to
// white innovations. high_corr_slot selects the mixture alternative.
ChannelRealization realize_channel(const ChannelModel& model, const Eigen::MatrixXcd& white,
                                   const ChannelDims& dims, const std::vector<double>& powers,
                                   bool high_corr_slot = false, int f = 0, int t = 0);

// One-shot sample: fresh white innovations + realize (Eq. 1 assembly).
ChannelRealization sample_channel(const ChannelModel& model, const ChannelDims& dims,
                                  const std::vector<double>& powers, RngStream& rng);

// Injects estimation error: h_hat = h - dh with dh columns ~ CN(0, ke).
ChannelRealization apply_estimation_error(const ChannelRealization& h,
                                          const Eigen::MatrixXcd& ke_sqrt, RngStream& rng);

// OLPC: rho = min{Pmax, P0 + 10 log10(N_PRB) + alpha * PL} (dBm).
double olpc_power(double p0_dbm, double alpha, double pl_db, int n_prb, double pmax_dbm);

}  // namespace mulink
