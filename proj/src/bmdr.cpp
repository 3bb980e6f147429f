#include "mulink/bmdr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>

#include "mulink/errors.hpp"
#include "mulink/parallel.hpp"

namespace mulink {

namespace {
inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }

inline unsigned gray_encode(unsigned v) { return v ^ (v >> 1); }
}  // namespace

BmdrEstimate bmdr_of_set(std::span<const BmdrEstimate> per_re) {
  if (per_re.empty()) throw std::invalid_argument("bmdr_of_set: empty set");
  const std::size_t n_ue = per_re.front().value.size();
  BmdrEstimate out;
  out.value.assign(n_ue, 0.0);
  out.std_err.assign(n_ue, 0.0);
  for (const auto& e : per_re) {
    if (e.value.size() != n_ue) throw std::invalid_argument("bmdr_of_set: inconsistent UE count");
    for (std::size_t u = 0; u < n_ue; ++u) {
      out.value[u] += e.value[u];
      out.std_err[u] += e.std_err[u] * e.std_err[u];
    }
    out.samples += e.samples;
  }
  const double inv = 1.0 / static_cast<double>(per_re.size());
  for (std::size_t u = 0; u < n_ue; ++u) {
    out.value[u] *= inv;
    out.std_err[u] = std::sqrt(out.std_err[u]) * inv;
  }
  return out;
}

BmdrEstimate estimate_bmdr_mc(const DetectorSpec& spec, const ChannelRealization& h,
                              const std::vector<const Constellation*>& mods, int n_samples,
                              RngStream& rng, double clip) {
  if (n_samples < 1) throw std::invalid_argument("estimate_bmdr_mc: n_samples >= 1");
  const StreamLayout layout = StreamLayout::build(h.per_ue, mods);
  const int n_ue = h.num_ues();
  const int n_streams = layout.n_streams();
  const int n_r = h.n_rx();

  std::vector<double> bits_per_ue(n_ue, 0.0);
  for (int s = 0; s < n_streams; ++s) bits_per_ue[layout.ue_of_stream[s]] += layout.per_stream[s]->order_m;

  std::vector<double> sum(n_ue, 0.0), sumsq(n_ue, 0.0);
  std::vector<unsigned> labels(n_streams);
  Eigen::VectorXcd y(n_r);
  for (int it = 0; it < n_samples; ++it) {
    y.setZero();
    for (int s = 0; s < n_streams; ++s) {
      labels[s] = static_cast<unsigned>(rng.uniform_int(layout.per_stream[s]->size()));
      y += h.h.col(s) * layout.per_stream[s]->points[labels[s]];
    }
    for (int r = 0; r < n_r; ++r) y(r) += rng.cnormal();

    const DetectorOutput det = detect(spec, y, h, layout, clip);
    std::vector<double> acc(n_ue, 0.0);
    for (int s = 0; s < n_streams; ++s) {
      const Constellation& q = *layout.per_stream[s];
      const int base = layout.bit_offset[s];
      for (int j = 0; j < q.order_m; ++j) {
        const int bit = (labels[s] >> (q.order_m - 1 - j)) & 1u;
        acc[layout.ue_of_stream[s]] += std::log2(llr_to_posterior(det.llrs[base + j], bit));
      }
    }
    for (int u = 0; u < n_ue; ++u) {
      const double v = 1.0 + acc[u] / bits_per_ue[u];
      sum[u] += v;
      sumsq[u] += v * v;
    }
  }

  BmdrEstimate out;
  out.samples = n_samples;
  out.value.resize(n_ue);
  out.std_err.resize(n_ue);
  for (int u = 0; u < n_ue; ++u) {
    const double mean = sum[u] / n_samples;
    const double var = std::max(0.0, sumsq[u] / n_samples - mean * mean);
    out.value[u] = std::max(mean, 0.0);
    out.std_err[u] = (n_samples > 1) ? std::sqrt(var / (n_samples - 1)) : 1.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// MI curves

MiCurve::MiCurve(int m, double snr_db_min, double snr_db_max, double step_db, double clip)
    : m_(m), db_min_(snr_db_min), step_db_(step_db) {
  const Constellation& c = shared_constellation(m);
  const int half = c.bits_per_axis();
  const int levels = 1 << half;
  const double sigma = std::sqrt(0.5);  // per-axis noise std of CN(0,1)

  const int n_points = static_cast<int>(std::floor((snr_db_max - snr_db_min) / step_db + 0.5)) + 1;
  mi_.resize(n_points);

  // Quadrature over the per-axis Gaussian: the Gray labeling makes the
  // max-log metric separable, so a 1D integral per axis bit suffices.
  const int n_quad = 1601;
  const double w_span = 8.0 * sigma;
  const double dw = 2.0 * w_span / (n_quad - 1);

  std::vector<double> tx(levels), phi(n_quad), woff(n_quad);
  for (int i = 0; i < n_quad; ++i) {
    woff[i] = -w_span + i * dw;
    phi[i] = std::exp(-woff[i] * woff[i] / (2.0 * sigma * sigma)) /
             (sigma * std::sqrt(2.0 * M_PI));
  }

  for (int p = 0; p < n_points; ++p) {
    const double snr = db_to_lin(snr_db_min + p * step_db);
    const double amp = std::sqrt(snr);
    for (int l = 0; l < levels; ++l) tx[l] = amp * c.axis_levels[l];

    double axis_sum = 0.0;  // sum over levels and bits of E[log2 q]
    for (int a = 0; a < levels; ++a) {
      const unsigned ga = gray_encode(static_cast<unsigned>(a));
      for (int i = 0; i < n_quad; ++i) {
        const double y = tx[a] + woff[i];
        // per-bit max-log LLRs at this observation
        for (int j = 0; j < half; ++j) {
          double min0 = 1e300, min1 = 1e300;
          for (int l = 0; l < levels; ++l) {
            const double d = y - tx[l];
            const double metric = d * d;
            const bool one = (gray_encode(static_cast<unsigned>(l)) >> (half - 1 - j)) & 1u;
            double& slot = one ? min1 : min0;
            if (metric < slot) slot = metric;
          }
          const double llr = clip_llr(min0 - min1, clip);
          const int bit = (ga >> (half - 1 - j)) & 1u;
          const double w = phi[i] * dw * ((i == 0 || i == n_quad - 1) ? 0.5 : 1.0);
          axis_sum += w * std::log2(llr_to_posterior(llr, bit));
        }
      }
    }
    // per-axis: half bits, each contributing 1 + E[log2 q]; two axes
    const double per_axis = half + axis_sum / levels;
    mi_[p] = std::max(0.0, 2.0 * per_axis);
  }

  // Fritsch-Carlson monotone cubic tangents.
  slope_.assign(n_points, 0.0);
  if (n_points >= 2) {
    std::vector<double> sec(n_points - 1);
    for (int i = 0; i + 1 < n_points; ++i) sec[i] = (mi_[i + 1] - mi_[i]) / step_db;
    slope_[0] = sec[0];
    slope_[n_points - 1] = sec[n_points - 2];
    for (int i = 1; i + 1 < n_points; ++i) {
      slope_[i] = (sec[i - 1] * sec[i] <= 0.0) ? 0.0 : 0.5 * (sec[i - 1] + sec[i]);
    }
    for (int i = 0; i + 1 < n_points; ++i) {
      if (sec[i] == 0.0) {
        slope_[i] = slope_[i + 1] = 0.0;
      } else {
        const double alpha = slope_[i] / sec[i];
        const double beta = slope_[i + 1] / sec[i];
        const double s = alpha * alpha + beta * beta;
        if (s > 9.0) {
          const double tau = 3.0 / std::sqrt(s);
          slope_[i] = tau * alpha * sec[i];
          slope_[i + 1] = tau * beta * sec[i];
        }
      }
    }
  }
}

double MiCurve::interp(double x_db) const {
  const int n = static_cast<int>(mi_.size());
  const double pos = (x_db - db_min_) / step_db_;
  if (pos <= 0.0) return mi_.front();
  if (pos >= n - 1) return mi_.back();
  const int i = static_cast<int>(pos);
  const double t = pos - i;
  const double h = step_db_;
  const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
  const double h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t);
  const double h11 = t * t * (t - 1);
  return h00 * mi_[i] + h10 * h * slope_[i] + h01 * mi_[i + 1] + h11 * h * slope_[i + 1];
}

double MiCurve::at_snr_db(double snr_db) const { return interp(snr_db); }
double MiCurve::at_snr(double snr_lin) const {
  return interp(lin_to_db(std::max(snr_lin, 1e-300)));
}

double MiCurve::invert(double mi, bool* clamped) const {
  if (clamped) *clamped = false;
  const double db_max = db_min_ + step_db_ * (mi_.size() - 1);
  if (mi <= mi_.front()) {
    if (clamped) *clamped = true;
    return db_to_lin(db_min_);
  }
  if (mi >= mi_.back()) {
    if (clamped) *clamped = true;
    return db_to_lin(db_max);
  }
  double lo = db_min_, hi = db_max;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double v = interp(mid);
    if (std::abs(v - mi) <= 1e-10) return db_to_lin(mid);
    if (v < mi)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-13) break;
  }
  return db_to_lin(0.5 * (lo + hi));
}

void MiCurve::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("MiCurve: cannot write " + path);
  char buf[128];
  std::snprintf(buf, sizeof buf, "#bit_mi_curve,v=1,m=%d,step_db=%.3f\n", m_, step_db_);
  out << buf << "snr_db,mi_bits\n";
  for (std::size_t i = 0; i < mi_.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.4f,%.12g\n", db_min_ + i * step_db_, mi_[i]);
    out << buf;
  }
}

const MiCurve& CurveSet::curve(int m) const {
  static std::mutex mu;
  std::lock_guard<std::mutex> lk(mu);
  auto it = curves_.find(m);
  if (it == curves_.end()) {
    it = curves_.emplace(m, MiCurve(m, -20.0, 45.0, 0.1)).first;
  }
  return it->second;
}

const CurveSet& shared_curves() {
  static CurveSet set;
  return set;
}

// ---------------------------------------------------------------------------
// BMDR-CER table

void BmdrCerTable::apply_isotonic() {
  std::sort(rows.begin(), rows.end(),
            [](const BmdrCerRow& a, const BmdrCerRow& b) { return a.bmdr < b.bmdr; });
  // Pool adjacent violators for a non-increasing fit of cer vs bmdr,
  // weighted by codeword counts.
  struct Block {
    double mean, weight;
    int count;
  };
  std::vector<Block> st;
  for (const auto& r : rows) {
    Block b{r.cer, static_cast<double>(std::max<long>(r.n_cw, 1)), 1};
    while (!st.empty() && st.back().mean < b.mean) {
      const Block& p = st.back();
      b.mean = (b.mean * b.weight + p.mean * p.weight) / (b.weight + p.weight);
      b.weight += p.weight;
      b.count += p.count;
      st.pop_back();
    }
    st.push_back(b);
  }
  std::size_t i = 0;
  for (const auto& b : st) {
    for (int c = 0; c < b.count; ++c) rows[i++].cer_iso = b.mean;
  }
}

std::optional<double> BmdrCerTable::target_bmdr(double eps) const {
  for (const auto& r : rows) {
    if (r.cer_iso <= eps) return r.bmdr;
  }
  return std::nullopt;
}

std::optional<double> BmdrCerTable::target_snr_db(double eps) const {
  std::optional<double> best;
  for (const auto& r : rows) {
    if (r.cer_iso <= eps && (!best || r.snr_db < *best)) best = r.snr_db;
  }
  return best;
}

void BmdrCerTable::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("BmdrCerTable: cannot write " + path);
  char buf[192];
  std::snprintf(buf, sizeof buf, "#bmdr_cer_table,v=1,rate=%.9g,n=%d,m=%d\n", rate, n, m);
  out << buf << "snr_db,bmdr,cer,n_cw,n_mi\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.4f,%.12g,%.12g,%ld,%ld\n", r.snr_db, r.bmdr, r.cer, r.n_cw,
                  r.n_mi);
    out << buf;
  }
}

BmdrCerTable load_table_csv_impl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("BmdrCerTable: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("#bmdr_cer_table,v=1", 0) != 0) {
    throw ConfigError("BmdrCerTable: bad header in " + path);
  }
  BmdrCerTable t;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok.rfind("rate=", 0) == 0) t.rate = std::stod(tok.substr(5));
      if (tok.rfind("n=", 0) == 0) t.n = std::stoi(tok.substr(2));
      if (tok.rfind("m=", 0) == 0) t.m = std::stoi(tok.substr(2));
    }
  }
  std::getline(in, line);  // column header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    BmdrCerRow r;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%ld,%ld", &r.snr_db, &r.bmdr, &r.cer, &r.n_cw,
                    &r.n_mi) != 5) {
      throw ConfigError("BmdrCerTable: bad row in " + path + ": " + line);
    }
    t.rows.push_back(r);
  }
  if (t.rows.empty()) throw ConfigError("BmdrCerTable: no rows in " + path);
  t.apply_isotonic();
  return t;
}

BmdrCerTable BmdrCerTable::load_csv(const std::string& path) { return load_table_csv_impl(path); }

std::vector<double> auto_snr_grid(double rate, int m, double below_db, double above_db,
                                  double step_db) {
  const MiCurve& curve = shared_curves().curve(m);
  const double snr_cap = curve.invert(rate * m);
  const double center_db = lin_to_db(snr_cap);
  std::vector<double> grid;
  for (double db = center_db - below_db; db <= center_db + above_db + 1e-9; db += step_db) {
    grid.push_back(std::round(db * 100.0) / 100.0);
  }
  return grid;
}

BmdrCerTable build_awgn_table(const CodeSpec& code, int m, const TableBuildConfig& cfg,
                              std::uint64_t seed) {
  if (cfg.snr_grid_db.empty()) throw std::invalid_argument("build_awgn_table: empty SNR grid");
  if (cfg.cw_budget < 1 || cfg.mi_budget < 1) {
    throw std::invalid_argument("build_awgn_table: budgets must be >= 1");
  }
  const Constellation& c = shared_constellation(m);
  const LdpcDecoder decoder(code, cfg.decoder_norm);
  const int n = code.n();
  const int k = code.k();
  if (n % m != 0) throw std::invalid_argument("build_awgn_table: n not divisible by m");

  BmdrCerTable table;
  table.rate = code.rate();
  table.n = n;
  table.m = m;
  table.rows.resize(cfg.snr_grid_db.size());

  parallel_for(static_cast<int>(cfg.snr_grid_db.size()), cfg.workers, [&](int p) {
    const double snr_db = cfg.snr_grid_db[p];
    const double snr = db_to_lin(snr_db);
    const double amp = std::sqrt(snr);

    // empirical CER of the full coded chain
    RngStream rng_cer = RngStream::derive(seed, {kStreamTableCer, std::uint64_t(p)});
    long errors = 0;
    BitVec msg(k);
    std::vector<double> llrs;
    llrs.reserve(n);
    for (long cw = 0; cw < cfg.cw_budget; ++cw) {
      for (int i = 0; i < k; ++i) msg[i] = static_cast<std::uint8_t>(rng_cer.next_u64() & 1);
      const BitVec codeword = code.encode(msg);
      const std::vector<cplx> syms = map_bits(codeword, c);
      llrs.clear();
      for (const cplx& s : syms) {
        const cplx y = amp * s + rng_cer.cnormal();
        demap_maxlog(y / amp, snr, c, cfg.clip, llrs);
      }
      const DecodeResult res = decoder.decode(llrs, cfg.decoder_max_iters);
      if (res.msg != msg) ++errors;
    }

    // empirical BMDR at the same SNR (SISO MLD = per-axis max-log demap)
    RngStream rng_mi = RngStream::derive(seed, {kStreamTableMi, std::uint64_t(p)});
    double acc = 0.0;
    std::vector<double> bit_llrs;
    for (long it = 0; it < cfg.mi_budget; ++it) {
      const unsigned label = static_cast<unsigned>(rng_mi.uniform_int(c.size()));
      const cplx y = amp * c.points[label] + rng_mi.cnormal();
      bit_llrs.clear();
      demap_maxlog(y / amp, snr, c, cfg.clip, bit_llrs);
      for (int j = 0; j < m; ++j) {
        const int bit = (label >> (m - 1 - j)) & 1u;
        acc += std::log2(llr_to_posterior(bit_llrs[j], bit));
      }
    }
    const double bmdr = std::max(0.0, 1.0 + acc / (static_cast<double>(cfg.mi_budget) * m));

    BmdrCerRow row;
    row.snr_db = snr_db;
    row.bmdr = bmdr;
    row.cer = static_cast<double>(errors) / static_cast<double>(cfg.cw_budget);
    row.n_cw = cfg.cw_budget;
    row.n_mi = cfg.mi_budget;
    table.rows[p] = row;
  });

  table.apply_isotonic();
  return table;
}

std::optional<double> target_bmdr(std::span<const BmdrCerTable> tables, int m, double rate, int n,
                                  double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("target_bmdr: eps in (0,1)");
  auto rate_match = [&](const BmdrCerTable& t) {
    return std::abs(t.rate - rate) <= 1e-9 * std::max(1.0, std::abs(rate)) + 1e-12;
  };

  // exact length first; prefer a table built with the queried modulation
  const BmdrCerTable* exact = nullptr;
  for (const auto& t : tables) {
    if (!rate_match(t) || t.n != n) continue;
    if (!exact || (std::abs(t.m - m) < std::abs(exact->m - m))) exact = &t;
  }
  if (exact) return exact->target_bmdr(eps);

  // bracket in length, interpolate targets linearly in 1/n
  const BmdrCerTable* lo = nullptr;
  const BmdrCerTable* hi = nullptr;
  for (const auto& t : tables) {
    if (!rate_match(t)) continue;
    if (t.n < n && (!lo || t.n > lo->n)) lo = &t;
    if (t.n > n && (!hi || t.n < hi->n)) hi = &t;
  }
  if (!lo || !hi) {
    throw std::invalid_argument("target_bmdr: no table of rate " + std::to_string(rate) +
                                " brackets n=" + std::to_string(n));
  }
  const auto zlo = lo->target_bmdr(eps);
  const auto zhi = hi->target_bmdr(eps);
  if (!zlo || !zhi) return std::nullopt;
  const double x = (1.0 / n - 1.0 / lo->n) / (1.0 / hi->n - 1.0 / lo->n);
  return *zlo + (*zhi - *zlo) * x;
}

// ---------------------------------------------------------------------------
// Predictor

BmdrEstimate predict_bmdr(const BmdrPredictor& p, const std::vector<int>& mods,
                          const ChannelRealization& h, RngStream* rng) {
  if (static_cast<int>(mods.size()) != h.num_ues()) {
    throw std::invalid_argument("predict_bmdr: one modulation order per UE required");
  }
  if (p.kind == PredictorKind::monte_carlo) {
    if (!rng) throw std::invalid_argument("predict_bmdr: monte_carlo predictor needs an RNG");
    std::vector<const Constellation*> cs;
    cs.reserve(mods.size());
    for (int m : mods) cs.push_back(&shared_constellation(m));
    return estimate_bmdr_mc(p.detector, h, cs, p.mc_samples_per_re, *rng, p.clip);
  }

  // mi_table: per-stream post-equalization SINR through the AWGN bit-metric
  // MI curve, normalized per bit. Valid for linear detection.
  const Eigen::VectorXd sinr = lmmse_post_eq_sinr(h);
  BmdrEstimate out;
  out.value.resize(h.num_ues());
  out.std_err.assign(h.num_ues(), 0.0);
  out.samples = 0;
  for (int u = 0; u < h.num_ues(); ++u) {
    const UeLayout& lay = h.per_ue[u];
    const MiCurve& curve = p.curves->curve(mods[u]);
    double acc = 0.0;
    for (int l = 0; l < lay.n_t; ++l) acc += curve.at_snr(sinr(lay.col_begin + l)) / mods[u];
    out.value[u] = acc / lay.n_t;
  }
  return out;
}

}  // namespace mulink
