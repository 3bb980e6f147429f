#include "mulink/channel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mulink/errors.hpp"

namespace mulink {

namespace {

bool is_hermitian_psd(const Eigen::MatrixXcd& a, double tol = 1e-9) {
  if (a.rows() != a.cols()) return false;
  if ((a - a.adjoint()).norm() > tol * std::max(1.0, a.norm())) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() > -tol * std::max(1.0, es.eigenvalues().maxCoeff());
}

void fill_cnormal(Eigen::MatrixXcd& m, RngStream& rng) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.cnormal();
}

}  // namespace

Eigen::MatrixXcd matrix_sqrt_psd(const Eigen::MatrixXcd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
}

double ChannelRealization::log_cond_db() const {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (smin <= 0.0) return 300.0;
  return 10.0 * std::log10(s(0) / smin);
}

bool NoiseModel::is_identity() const {
  if (kn.size() == 0) return ke.size() == 0 || ke.isZero(0.0);
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(kn.rows(), kn.cols());
  Eigen::MatrixXcd sum = kn;
  if (ke.size() != 0) sum += ke;
  return (sum - id).norm() < 1e-14;
}

Eigen::MatrixXcd inverse_sqrt(const NoiseModel& nm) {
  Eigen::MatrixXcd sum = nm.kn;
  if (nm.ke.size() != 0) sum += nm.ke;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sum);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double emax = ev.maxCoeff();
  if (!(emax > 0.0) || !ev.allFinite()) {
    throw NumericError("whiten: covariance not positive definite");
  }
  const double floor = 1e-12 * emax;
  if (ev.minCoeff() < floor) {
    std::ostringstream oss;
    oss << "whiten: covariance numerically singular, condition number "
        << emax / std::max(ev.minCoeff(), 1e-300);
    throw NumericError(oss.str());
  }
  Eigen::VectorXd inv_sqrt = ev.cwiseMax(floor).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().adjoint();
}

std::pair<ChannelRealization, Eigen::VectorXcd> whiten(const ChannelRealization& h,
                                                       const Eigen::VectorXcd& y,
                                                       const NoiseModel& nm) {
  const Eigen::MatrixXcd m = inverse_sqrt(nm);
  ChannelRealization out = h;
  out.h = m * h.h;
  return {std::move(out), m * y};
}

Eigen::MatrixXcd exp_correlation(int n, double rho) {
  Eigen::MatrixXcd r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = std::pow(rho, std::abs(i - j));
  return r;
}

void ChannelModel::validate(int n_r, int n_streams) const {
  if (ar1_coef < 0.0 || ar1_coef > 1.0) {
    throw std::invalid_argument("ChannelModel: ar1 coefficient must lie in [0,1]");
  }
  if (mix_prob < 0.0 || mix_prob > 1.0) {
    throw std::invalid_argument("ChannelModel: mixture probability must lie in [0,1]");
  }
  if (kind == ChannelKind::kronecker) {
    if (rt.size() != 0) {
      if (rt.rows() != n_streams || !is_hermitian_psd(rt))
        throw std::invalid_argument("ChannelModel: rt must be Hermitian PSD of stream size");
    }
    if (rr.size() != 0) {
      if (rr.rows() != n_r || !is_hermitian_psd(rr))
        throw std::invalid_argument("ChannelModel: rr must be Hermitian PSD of n_r size");
    }
  }
}

ChannelTrack::ChannelTrack(int n_r, int n_streams) : w_(n_r, n_streams) { w_.setZero(); }

void ChannelTrack::init(RngStream& rng) { fill_cnormal(w_, rng); }

void ChannelTrack::step(double ar1_coef, RngStream& rng) {
  if (ar1_coef >= 1.0) return;  // fully persistent
  Eigen::MatrixXcd innov(w_.rows(), w_.cols());
  fill_cnormal(innov, rng);
  w_ = ar1_coef * w_ + std::sqrt(1.0 - ar1_coef * ar1_coef) * innov;
}

ChannelRealization realize_channel(const ChannelModel& model, const Eigen::MatrixXcd& white,
                                   const ChannelDims& dims, const std::vector<double>& powers,
                                   bool high_corr_slot, int f, int t) {
  const int n_streams = dims.n_streams();
  if (white.rows() != dims.n_r || white.cols() != n_streams) {
    throw std::invalid_argument("realize_channel: white innovation size mismatch");
  }
  if (powers.size() != dims.n_t_per_ue.size()) {
    throw std::invalid_argument("realize_channel: powers must have one entry per UE");
  }
  for (double p : powers) {
    if (!(p >= 0.0)) throw std::invalid_argument("realize_channel: powers must be >= 0");
  }
  model.validate(dims.n_r, n_streams);

  Eigen::MatrixXcd shaped = white;
  if (high_corr_slot && model.mix_rt_rho > 0.0) {
    shaped = shaped * matrix_sqrt_psd(exp_correlation(n_streams, model.mix_rt_rho));
  } else if (model.kind == ChannelKind::kronecker) {
    if (model.rr.size() != 0) shaped = matrix_sqrt_psd(model.rr) * shaped;
    if (model.rt.size() != 0) shaped = shaped * matrix_sqrt_psd(model.rt);
  }

  ChannelRealization out;
  out.h = std::move(shaped);
  out.f = f;
  out.t = t;
  int col = 0;
  for (std::size_t u = 0; u < dims.n_t_per_ue.size(); ++u) {
    UeLayout lay;
    lay.n_t = dims.n_t_per_ue[u];
    lay.power_lin = powers[u];
    lay.col_begin = col;
    const double scale = std::sqrt(powers[u] / lay.n_t);
    out.h.middleCols(col, lay.n_t) *= scale;
    col += lay.n_t;
    out.per_ue.push_back(lay);
  }
  return out;
}

ChannelRealization sample_channel(const ChannelModel& model, const ChannelDims& dims,
                                  const std::vector<double>& powers, RngStream& rng) {
  Eigen::MatrixXcd white(dims.n_r, dims.n_streams());
  fill_cnormal(white, rng);
  return realize_channel(model, white, dims, powers);
}

ChannelRealization apply_estimation_error(const ChannelRealization& h,
                                          const Eigen::MatrixXcd& ke_sqrt, RngStream& rng) {
  ChannelRealization out = h;
  if (ke_sqrt.size() == 0) return out;
  Eigen::MatrixXcd dh(h.h.rows(), h.h.cols());
  fill_cnormal(dh, rng);
  out.h -= ke_sqrt * dh;
  return out;
}

double olpc_power(double p0_dbm, double alpha, double pl_db, int n_prb, double pmax_dbm) {
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("olpc_power: alpha in [0,1]");
  if (n_prb < 1) throw std::invalid_argument("olpc_power: n_prb >= 1");
  return std::min(pmax_dbm, p0_dbm + 10.0 * std::log10(static_cast<double>(n_prb)) + alpha * pl_db);
}

}  // namespace mulink
