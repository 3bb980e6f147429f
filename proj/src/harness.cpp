#include "mulink/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "mulink/errors.hpp"
#include "mulink/parallel.hpp"
#include "mulink/util.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace mulink {

namespace {

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(std::max(lin, 1e-300)); }

// Codes are part of the system definition, not of a run's randomness:
// the same (k, n) always yields the same parity-check matrix.
constexpr std::uint64_t kCodeSeed = 0x5EEDC0DEULL;

struct CachedCode {
  CodeSpec spec;
  LdpcDecoder decoder;
  explicit CachedCode(CodeSpec s) : spec(std::move(s)), decoder(spec) {}
};

const CachedCode& code_for(int k, int n) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<CachedCode>> cache;
  std::lock_guard<std::mutex> lk(mu);
  auto it = cache.find({k, n});
  if (it == cache.end()) {
    const double rate = static_cast<double>(k) / n;
    CodeSpec spec = CodeSpec::make_qc(rate, n, kCodeSeed);
    if (spec.k() != k) {
      throw ConfigError("code cache: rate " + std::to_string(rate) +
                        " is not on the supported 1/24 grid for n=" + std::to_string(n));
    }
    it = cache.emplace(std::pair{k, n}, std::make_unique<CachedCode>(std::move(spec))).first;
  }
  return *it->second;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

Eigen::MatrixXcd CovarianceConfig::build(int n_r) const {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n_r, n_r);
  switch (kind) {
    case Kind::scalar:
      out = value * Eigen::MatrixXcd::Identity(n_r, n_r);
      break;
    case Kind::diagonal: {
      if (static_cast<int>(diagonal.size()) != n_r) {
        throw ConfigError("covariance: diagonal must have n_r entries");
      }
      for (int i = 0; i < n_r; ++i) out(i, i) = diagonal[i];
      break;
    }
    case Kind::dense_file: {
      std::ifstream in(path);
      if (!in) throw ConfigError("covariance: cannot open " + path);
      int n = 0;
      in >> n;
      if (n != n_r) throw ConfigError("covariance: size mismatch in " + path);
      for (int i = 0; i < n_r; ++i) {
        for (int j = 0; j < n_r; ++j) {
          double re, im;
          if (!(in >> re >> im)) throw ConfigError("covariance: truncated " + path);
          out(i, j) = {re, im};
        }
      }
      break;
    }
  }
  return out;
}

namespace {

CovarianceConfig parse_cov(const json& j, double default_scalar) {
  CovarianceConfig c;
  c.value = default_scalar;
  if (j.is_null()) return c;
  const std::string kind = j.value("kind", "scalar");
  if (kind == "scalar") {
    c.kind = CovarianceConfig::Kind::scalar;
    c.value = j.value("value", default_scalar);
  } else if (kind == "diagonal") {
    c.kind = CovarianceConfig::Kind::diagonal;
    c.diagonal = j.at("values").get<std::vector<double>>();
  } else if (kind == "dense_file") {
    c.kind = CovarianceConfig::Kind::dense_file;
    c.path = j.at("path").get<std::string>();
  } else {
    throw ConfigError("covariance: unknown kind '" + kind + "'");
  }
  return c;
}

PredictorConfig parse_predictor(const json& j) {
  PredictorConfig p;
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "mi_table") {
      p.kind = PredictorKind::mi_table;
    } else if (s == "monte_carlo") {
      p.kind = PredictorKind::monte_carlo;
    } else {
      throw ConfigError("predictor: unknown kind '" + s + "'");
    }
    return p;
  }
  const std::string kind = j.value("kind", "mi_table");
  if (kind == "mi_table") {
    p.kind = PredictorKind::mi_table;
  } else if (kind == "monte_carlo") {
    p.kind = PredictorKind::monte_carlo;
  } else {
    throw ConfigError("predictor: unknown kind '" + kind + "'");
  }
  p.mc_samples_per_re = j.value("samples_per_re", 4);
  p.re_stride = j.value("re_stride", 1);
  return p;
}

}  // namespace

SimConfig SimConfig::load_json(const std::string& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path);
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  try {
    SimConfig c;
    c.version = j.value("version", 1);
    if (c.version != 1) throw ConfigError("config: unsupported version");
    c.drops = j.value("drops", 3);
    c.slots = j.value("slots", 100);
    c.t_slot = j.value("t_slot", 5e-4);
    c.n_re = j.value("n_re", 300);
    c.cb_per_slot = j.value("cb_per_slot", 1);
    c.n_r = j.value("n_r", 8);
    c.noise_floor_dbm = j.value("noise_floor_dbm", -98.0);

    for (const auto& ju : j.at("ues")) {
      UeConfig u;
      u.n_t = ju.value("n_t", 1);
      u.p0_dbm = ju.value("p0_dbm", -98.0);
      u.alpha = ju.value("alpha", 1.0);
      u.pl_db = ju.value("pl_db", 100.0);
      u.pmax_dbm = ju.value("pmax_dbm", 23.0);
      u.n_prb = ju.value("n_prb", 24);
      c.ues.push_back(u);
    }

    if (j.contains("channel")) {
      const auto& jc = j["channel"];
      const std::string kind = jc.value("kind", "iid_rayleigh");
      if (kind == "iid_rayleigh") {
        c.ch_kind = ChannelKind::iid_rayleigh;
      } else if (kind == "kronecker") {
        c.ch_kind = ChannelKind::kronecker;
      } else if (kind == "ar1") {
        c.ch_kind = ChannelKind::iid_rayleigh;  // ar1 over iid innovations
      } else {
        throw ConfigError("channel: unknown kind '" + kind + "'");
      }
      c.kron_rt_rho = jc.value("rt_rho", 0.0);
      c.kron_rr_rho = jc.value("rr_rho", 0.0);
      c.ar1_coef = jc.value("ar1", 0.98);
      c.mix_prob = jc.value("mix_prob", 0.0);
      c.mix_rt_rho = jc.value("mix_rt_rho", 0.0);
    }

    c.kn = parse_cov(j.contains("noise") ? j["noise"].value("kn", json()) : json(), 1.0);
    c.ke = parse_cov(j.contains("noise") ? j["noise"].value("ke", json()) : json(), 0.0);

    if (j.contains("detectors")) {
      for (const auto& jd : j["detectors"]) {
        DetectorConfig d;
        const std::string kind = jd.value("kind", "lmmse");
        if (kind == "lmmse") {
          d.spec = DetectorSpec::lmmse();
        } else if (kind == "kbest") {
          d.spec = DetectorSpec::kbest(jd.value("k", 32));
        } else if (kind == "mld") {
          d.spec = DetectorSpec::mld();
        } else {
          throw ConfigError("detector: unknown kind '" + kind + "'");
        }
        if (jd.contains("complexity")) d.spec.complexity = jd["complexity"].get<double>();
        if (d.spec.kind == DetectorKind::mld && d.spec.complexity == 0.0) d.spec.complexity = 1e6;
        if (jd.contains("predictor")) {
          d.predictor = parse_predictor(jd["predictor"]);
        } else {
          d.predictor.kind = (d.spec.kind == DetectorKind::lmmse) ? PredictorKind::mi_table
                                                                  : PredictorKind::monte_carlo;
        }
        c.detectors.push_back(d);
      }
    } else {
      DetectorConfig d;
      d.spec = DetectorSpec::lmmse();
      c.detectors.push_back(d);
    }

    c.hybrid = j.value("hybrid", false);
    c.gamma = j.value("gamma", -1.0);

    const std::string metric = j.value("la_metric", "bmdr");
    if (metric == "bmdr") {
      c.la_metric = LaMetric::bmdr;
    } else if (metric == "esm") {
      c.la_metric = LaMetric::esm;
    } else {
      throw ConfigError("la_metric must be 'bmdr' or 'esm'");
    }
    if (j.contains("esm")) {
      const auto& je = j["esm"];
      const std::string fam = je.value("family", "miesm");
      if (fam == "cesm") c.esm.family = EsmFamily::cesm;
      else if (fam == "eesm") c.esm.family = EsmFamily::eesm;
      else if (fam == "lesm") c.esm.family = EsmFamily::lesm;
      else if (fam == "miesm") c.esm.family = EsmFamily::miesm;
      else throw ConfigError("esm: unknown family '" + fam + "'");
      c.esm.olla_step_fail_db = je.value("olla_step_fail_db", 0.2);
      if (je.contains("beta_csv")) {
        std::ifstream in(je["beta_csv"].get<std::string>());
        if (!in) throw ConfigError("esm: cannot open beta csv");
        std::string line;
        while (std::getline(in, line)) {
          if (line.empty() || line[0] == '#' || line.rfind("mcs_index", 0) == 0) continue;
          int idx;
          double beta;
          if (std::sscanf(line.c_str(), "%d,%lf", &idx, &beta) == 2) c.esm.beta_per_mcs[idx] = beta;
        }
      }
    }

    c.mcs_table_path = j.value("mcs_table", std::string());
    c.epsilon = j.value("epsilon", 1e-2);
    c.tables_dir = j.value("tables_dir", std::string());
    c.olla.step_fail = j.contains("olla") ? j["olla"].value("step_fail", 0.01) : 0.01;
    c.olla.step_ok = j.contains("olla") ? j["olla"].value("step_ok", 0.0) : 0.0;
    c.llr_clip = j.value("llr_clip", kDefaultLlrClip);
    c.seed = j.value("seed", 1ULL);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError("config error in " + path + ": " + e.what());
  }
}

void SimConfig::validate() const {
  if (drops < 1 || slots < 1 || n_re < 1 || n_r < 1) {
    throw ConfigError("config: counts must be positive");
  }
  if (!(t_slot > 0.0)) throw ConfigError("config: t_slot must be positive");
  if (ues.empty()) throw ConfigError("config: at least one UE required");
  if (cb_per_slot < 1 || n_re % cb_per_slot != 0) {
    throw ConfigError("config: cb_per_slot must divide n_re");
  }
  if (detectors.empty()) throw ConfigError("config: at least one detector required");
  for (std::size_t p = 1; p < detectors.size(); ++p) {
    if (detectors[p].spec.complexity < detectors[p - 1].spec.complexity) {
      throw ConfigError("config: detectors must be ordered by non-decreasing complexity");
    }
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("config: epsilon in (0,1)");
  if (la_metric == LaMetric::esm) {
    for (const auto& d : detectors) {
      if (d.spec.kind != DetectorKind::lmmse) {
        throw ConfigError("config: la_metric 'esm' requires linear (lmmse) detectors");
      }
    }
  }
  int streams = 0;
  for (const auto& u : ues) streams += u.n_t;
  if (streams > 8) throw ConfigError("config: at most 8 composite streams supported");
}

std::vector<int> SimConfig::n_t_per_ue() const {
  std::vector<int> out;
  for (const auto& u : ues) out.push_back(u.n_t);
  return out;
}

std::vector<double> SimConfig::ue_powers_lin() const {
  std::vector<double> out;
  for (const auto& u : ues) {
    const double tx_dbm = olpc_power(u.p0_dbm, u.alpha, u.pl_db, u.n_prb, u.pmax_dbm);
    out.push_back(db_to_lin(tx_dbm - u.pl_db - noise_floor_dbm));
  }
  return out;
}

McsTable SimConfig::mcs_table() const {
  if (mcs_table_path.empty()) {
    int n_t = ues.front().n_t;
    for (const auto& u : ues) {
      if (u.n_t != n_t) {
        throw ConfigError("config: default MCS table needs a uniform n_t; provide mcs_table");
      }
    }
    return McsTable::make_default(n_re_per_cb(), n_t);
  }
  return McsTable::load_csv(mcs_table_path);
}

// ---------------------------------------------------------------------------
// TableSet

TableSet TableSet::load_dir(const std::string& dir) {
  TableSet set;
  if (!fs::exists(dir)) return set;
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".csv") {
      std::ifstream in(entry.path());
      std::string first;
      std::getline(in, first);
      if (first.rfind("#bmdr_cer_table", 0) == 0) paths.push_back(entry.path().string());
    }
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) set.tables_.push_back(BmdrCerTable::load_csv(p));
  return set;
}

const BmdrCerTable* TableSet::find(double rate, int n, bool* approx) const {
  if (approx) *approx = false;
  const BmdrCerTable* best = nullptr;
  for (const auto& t : tables_) {
    if (std::abs(t.rate - rate) > 1e-9 * std::max(1.0, rate) + 1e-12) continue;
    if (t.n == n) return &t;
    if (!best || std::abs(t.n - n) < std::abs(best->n - n)) best = &t;
  }
  if (best && approx) *approx = true;
  return best;
}

ThresholdFn TableSet::threshold_fn(double) const {
  // memoized Eq.-6 queries with 1/n interpolation
  auto cache = std::make_shared<std::map<std::tuple<int, long, int, long>, std::optional<double>>>();
  auto mu = std::make_shared<std::mutex>();
  std::span<const BmdrCerTable> tabs = tables();
  return [cache, mu, tabs](int m, double r, int n, double eps) -> std::optional<double> {
    const auto key = std::make_tuple(m, std::lround(r * 1e9), n, std::lround(eps * 1e12));
    {
      std::lock_guard<std::mutex> lk(*mu);
      auto it = cache->find(key);
      if (it != cache->end()) return it->second;
    }
    std::optional<double> z;
    try {
      z = target_bmdr(tabs, m, r, n, eps);
    } catch (const std::invalid_argument&) {
      z = std::nullopt;  // no table: treated as unreachable -> min-rate fallback
    }
    std::lock_guard<std::mutex> lk(*mu);
    (*cache)[key] = z;
    return z;
  };
}

// ---------------------------------------------------------------------------
// Closed-loop simulation

double cer_at_snr(const BmdrCerTable& t, double snr_db) {
  const BmdrCerRow* best = &t.rows.front();
  double bd = std::abs(best->snr_db - snr_db);
  for (const auto& row : t.rows) {
    const double d = std::abs(row.snr_db - snr_db);
    if (d < bd || (d == bd && row.snr_db < best->snr_db)) {
      bd = d;
      best = &row;
    }
  }
  return best->cer_iso;
}

namespace {

struct DropContext {
  const SimConfig* cfg;
  const McsTable* mcs;
  const TableSet* tables;
  ThresholdFn threshold;
  ChannelModel model;
  ChannelDims dims;
  std::vector<double> powers;
  Eigen::MatrixXcd whitener;  // empty when kn+ke == I
  Eigen::MatrixXcd kn_sqrt;   // empty when kn == I
  Eigen::MatrixXcd ke_sqrt;   // empty when ke == 0
  double r_max_m_max = 0.0;
  bool full = false;  // full chain vs abstracted
  int workers = 1;
};

struct EsmState {
  std::vector<double> delta_db;
};

// Per-UE SINR lists for one slot: sinr_re_stream[re](stream)
using SinrField = std::vector<Eigen::VectorXd>;

std::vector<double> ue_sinr_list(const SinrField& field, const UeLayout& lay, int re_begin,
                                 int re_end) {
  std::vector<double> out;
  out.reserve((re_end - re_begin) * lay.n_t);
  for (int re = re_begin; re < re_end; ++re) {
    for (int l = 0; l < lay.n_t; ++l) {
      out.push_back(std::max(field[re](lay.col_begin + l), 1e-12));
    }
  }
  return out;
}

// Classical ESM-based selection for linear detectors: per UE, choose the
// highest-SE entry whose effective SINR clears the SNR-domain threshold.
SelectResult select_mcs_esm(const DropContext& ctx, const SinrField& sinrs,
                            const std::vector<UeLayout>& layout, const EsmState& state) {
  const SimConfig& cfg = *ctx.cfg;
  const auto& entries = ctx.mcs->entries();
  SelectResult res;
  res.per_ue.resize(cfg.n_ue());
  res.r_hat.assign(cfg.n_ue(), 0.0);

  std::vector<const McsEntry*> by_se(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) by_se[i] = &entries[i];
  std::sort(by_se.begin(), by_se.end(),
            [](const McsEntry* a, const McsEntry* b) { return a->se > b->se; });

  for (int u = 0; u < cfg.n_ue(); ++u) {
    const std::vector<double> list = ue_sinr_list(sinrs, layout[u], 0, cfg.n_re);
    const McsEntry* chosen = nullptr;
    double chosen_metric_db = 0.0;
    for (const McsEntry* e : by_se) {
      EsmConfig ec;
      ec.family = cfg.esm.family;
      if (cfg.esm.family == EsmFamily::eesm) {
        auto it = cfg.esm.beta_per_mcs.find(e->index);
        const double beta = (it != cfg.esm.beta_per_mcs.end()) ? it->second : 1.0;
        ec.beta1 = ec.beta2 = beta;
      }
      const EsmResult eff = esm_effective_sinr(list, ec, e->m);
      const double eff_db = lin_to_db(eff.rho_eff);
      bool approx = false;
      const BmdrCerTable* t = ctx.tables->find(e->r, e->n, &approx);
      if (!t) continue;
      const auto thr = t->target_snr_db(cfg.epsilon);
      if (!thr) continue;
      if (eff_db >= *thr - state.delta_db[u]) {
        chosen = e;
        chosen_metric_db = eff_db;
        break;
      }
      ++res.criterion_evals;
    }
    McsDecision d;
    if (!chosen) {
      chosen = &entries.front();
      d.fallback = true;
      EsmConfig ec;
      ec.family = cfg.esm.family;
      const EsmResult eff = esm_effective_sinr(list, ec, chosen->m);
      chosen_metric_db = lin_to_db(eff.rho_eff);
    }
    d.mcs_index = chosen->index;
    d.m = chosen->m;
    d.r = chosen->r;
    d.k = chosen->k;
    d.n = chosen->n;
    res.per_ue[u] = d;
    res.r_hat[u] = chosen_metric_db;
    res.mean_se += chosen->se;
  }
  res.mean_se /= cfg.n_ue();
  return res;
}

struct CbOutcome {
  bool true_ok = false;
  bool crc_ok = false;
  double p_hat = 0.0;
  double metric = 0.0;  // abstraction metric (set BMDR or effective SINR dB)
  bool draw_ok = true;
};

struct PathOutcome {
  std::vector<std::vector<CbOutcome>> per_ue_cb;  // [ue][cb]
  double realized_bits = 0.0;                     // sum over UEs/CBs of ok*k
};

// Full coded data path for one detector's decisions on one slot.
PathOutcome run_data_path(const DropContext& ctx, const std::vector<ChannelRealization>& h_true,
                          const std::vector<ChannelRealization>& h_est_white,
                          const std::vector<Eigen::VectorXcd>& noise,
                          const std::vector<McsDecision>& dec, int drop, int slot, int det_index) {
  const SimConfig& cfg = *ctx.cfg;
  const int n_ue = cfg.n_ue();
  const int n_cb = cfg.cb_per_slot;
  const int re_per_cb = cfg.n_re_per_cb();
  const DetectorSpec& spec = cfg.detectors[det_index].spec;

  std::vector<const Constellation*> consts(n_ue);
  std::vector<int> mods(n_ue);
  for (int u = 0; u < n_ue; ++u) {
    mods[u] = dec[u].m;
    consts[u] = &shared_constellation(dec[u].m);
  }
  const StreamLayout layout = StreamLayout::build(h_true[0].per_ue, consts);

  // encode all code blocks
  struct CbTx {
    BitVec msg;
    std::vector<cplx> syms;  // re-major, layer-minor
  };
  std::vector<std::vector<CbTx>> tx(n_ue, std::vector<CbTx>(n_cb));
  for (int u = 0; u < n_ue; ++u) {
    const auto& code = code_for(dec[u].k, dec[u].n);
    for (int cb = 0; cb < n_cb; ++cb) {
      RngStream rng = RngStream::derive(
          cfg.seed, {kStreamPayload, std::uint64_t(drop), std::uint64_t(slot), std::uint64_t(u),
                     std::uint64_t(det_index), std::uint64_t(cb)});
      BitVec payload(dec[u].k - 24);
      for (auto& b : payload) b = static_cast<std::uint8_t>(rng.next_u64() & 1);
      CbTx& t = tx[u][cb];
      t.msg = crc24_append(payload);
      t.syms = map_bits(code.spec.encode(t.msg), *consts[u]);
    }
  }

  // transmit + detect, accumulating per-CB LLR buffers
  std::vector<std::vector<std::vector<double>>> llr(n_ue);
  for (int u = 0; u < n_ue; ++u) {
    llr[u].assign(n_cb, {});
    for (auto& v : llr[u]) v.reserve(dec[u].n);
  }
  const int n_streams = layout.n_streams();
  Eigen::VectorXcd s(n_streams), y(cfg.n_r);
  for (int re = 0; re < cfg.n_re; ++re) {
    const int cb = re / re_per_cb;
    const int re_local = re % re_per_cb;
    for (int u = 0; u < n_ue; ++u) {
      const UeLayout& lay = h_true[re].per_ue[u];
      for (int l = 0; l < lay.n_t; ++l) {
        s(lay.col_begin + l) = tx[u][cb].syms[re_local * lay.n_t + l];
      }
    }
    y = h_true[re].h * s + noise[re];
    if (ctx.whitener.size() != 0) y = ctx.whitener * y;
    const DetectorOutput out = detect(spec, y, h_est_white[re], layout, cfg.llr_clip);
    for (int u = 0; u < n_ue; ++u) {
      const UeLayout& lay = h_true[re].per_ue[u];
      for (int l = 0; l < lay.n_t; ++l) {
        const int stream = lay.col_begin + l;
        const int base = layout.bit_offset[stream];
        for (int j = 0; j < mods[u]; ++j) llr[u][cb].push_back(out.llrs[base + j]);
      }
    }
  }

  PathOutcome outcome;
  outcome.per_ue_cb.assign(n_ue, std::vector<CbOutcome>(n_cb));
  for (int u = 0; u < n_ue; ++u) {
    const auto& code = code_for(dec[u].k, dec[u].n);
    for (int cb = 0; cb < n_cb; ++cb) {
      const DecodeResult r = code.decoder.decode(llr[u][cb]);
      CbOutcome& oc = outcome.per_ue_cb[u][cb];
      oc.true_ok = (r.msg == tx[u][cb].msg);
      oc.crc_ok = r.success && crc24_ok(r.msg);
      if (oc.true_ok) outcome.realized_bits += dec[u].k;
    }
  }
  return outcome;
}

// Abstracted data path: predicted BMDR per code block -> CER lookup.
PathOutcome run_abstract_path(const DropContext& ctx,
                              const std::vector<ChannelRealization>& h_est_white,
                              const std::vector<McsDecision>& dec, int drop, int slot,
                              int det_index, const SinrField* sinrs) {
  const SimConfig& cfg = *ctx.cfg;
  const int n_ue = cfg.n_ue();
  const int n_cb = cfg.cb_per_slot;
  const int re_per_cb = cfg.n_re_per_cb();
  const DetectorConfig& d = cfg.detectors[det_index];

  std::vector<int> mods(n_ue);
  for (int u = 0; u < n_ue; ++u) mods[u] = dec[u].m;

  PathOutcome outcome;
  outcome.per_ue_cb.assign(n_ue, std::vector<CbOutcome>(n_cb));

  for (int cb = 0; cb < n_cb; ++cb) {
    const int re0 = cb * re_per_cb, re1 = (cb + 1) * re_per_cb;
    if (cfg.la_metric == LaMetric::esm && sinrs) {
      // classical pipeline: effective SINR -> SNR-CER lookup
      for (int u = 0; u < n_ue; ++u) {
        const std::vector<double> list =
            ue_sinr_list(*sinrs, h_est_white[0].per_ue[u], re0, re1);
        EsmConfig ec;
        ec.family = cfg.esm.family;
        if (cfg.esm.family == EsmFamily::eesm) {
          auto it = cfg.esm.beta_per_mcs.find(dec[u].mcs_index);
          const double beta = (it != cfg.esm.beta_per_mcs.end()) ? it->second : 1.0;
          ec.beta1 = ec.beta2 = beta;
        }
        const EsmResult eff = esm_effective_sinr(list, ec, dec[u].m);
        bool approx = false;
        const BmdrCerTable* t = ctx.tables->find(dec[u].r, dec[u].n, &approx);
        if (!t) throw ConfigError("abstract: missing table for r/n; run `mulinksim build-table`");
        outcome.per_ue_cb[u][cb].p_hat = cer_at_snr(*t, lin_to_db(eff.rho_eff));
        outcome.per_ue_cb[u][cb].metric = lin_to_db(eff.rho_eff);
      }
    } else {
      BmdrPredictor pred;
      pred.kind = d.predictor.kind;
      pred.detector = d.spec;
      pred.mc_samples_per_re = d.predictor.mc_samples_per_re;
      pred.clip = cfg.llr_clip;
      RngStream rng = RngStream::derive(cfg.seed, {kStreamAbstraction, std::uint64_t(drop),
                                                   std::uint64_t(slot), std::uint64_t(cb), 77});
      std::vector<BmdrEstimate> per_re;
      for (int re = re0; re < re1; re += d.predictor.re_stride) {
        per_re.push_back(predict_bmdr(pred, mods, h_est_white[re], &rng));
      }
      const BmdrEstimate est = bmdr_of_set(per_re);
      for (int u = 0; u < n_ue; ++u) {
        bool approx = false;
        const BmdrCerTable* t = ctx.tables->find(dec[u].r, dec[u].n, &approx);
        if (!t) throw ConfigError("abstract: missing table for r/n; run `mulinksim build-table`");
        outcome.per_ue_cb[u][cb].p_hat = map_cer(*t, est.value[u]);
        outcome.per_ue_cb[u][cb].metric = est.value[u];
      }
    }

    // Bernoulli decode-success surrogates feed the OLLA loop.
    for (int u = 0; u < n_ue; ++u) {
      RngStream rng = RngStream::derive(
          cfg.seed, {kStreamAbstraction, std::uint64_t(drop), std::uint64_t(slot),
                     std::uint64_t(u), std::uint64_t(cb)});
      CbOutcome& oc = outcome.per_ue_cb[u][cb];
      oc.draw_ok = !rng.bernoulli(oc.p_hat);
      oc.true_ok = oc.draw_ok;
      oc.crc_ok = oc.draw_ok;
      outcome.realized_bits += (1.0 - oc.p_hat) * dec[u].k;
    }
  }
  return outcome;
}

void run_drop(const DropContext& ctx, int drop, std::vector<SlotRecord>& out) {
  const SimConfig& cfg = *ctx.cfg;
  const int n_ue = cfg.n_ue();
  const int n_det = static_cast<int>(cfg.detectors.size());
  const int k_max = ctx.mcs->k_max();

  std::vector<ChannelTrack> tracks;
  std::vector<RngStream> ch_rng;
  tracks.reserve(cfg.n_re);
  ch_rng.reserve(cfg.n_re);
  for (int re = 0; re < cfg.n_re; ++re) {
    tracks.emplace_back(cfg.n_r, ctx.dims.n_streams());
    ch_rng.push_back(
        RngStream::derive(cfg.seed, {kStreamChannel, std::uint64_t(drop), std::uint64_t(re)}));
  }
  RngStream mix_rng = RngStream::derive(cfg.seed, {kStreamMixture, std::uint64_t(drop)});

  std::vector<LaState> la(n_det, LaState::init(n_ue, k_max));
  std::vector<EsmState> esm_state(n_det);
  for (auto& s : esm_state) s.delta_db.assign(n_ue, 0.0);

  const double step_ok = cfg.olla.resolved_step_ok(cfg.epsilon);
  const double esm_step_ok = cfg.esm.olla_step_fail_db * cfg.epsilon / (1.0 - cfg.epsilon);

  std::vector<ChannelRealization> h_true(cfg.n_re), h_est(cfg.n_re);
  std::vector<ChannelRealization> prev_est;
  std::vector<Eigen::VectorXcd> noise(cfg.n_re);

  for (int slot = 0; slot < cfg.slots; ++slot) {
    // channel evolution
    const bool high_corr = (cfg.mix_prob > 0.0) && mix_rng.bernoulli(cfg.mix_prob);
    for (int re = 0; re < cfg.n_re; ++re) {
      if (slot == 0) {
        tracks[re].init(ch_rng[re]);
      } else {
        tracks[re].step(cfg.ar1_coef, ch_rng[re]);
      }
      h_true[re] =
          realize_channel(ctx.model, tracks[re].white(), ctx.dims, ctx.powers, high_corr, re, slot);
      if (ctx.ke_sqrt.size() != 0) {
        RngStream rng_e = RngStream::derive(cfg.seed, {kStreamEstError, std::uint64_t(drop),
                                                       std::uint64_t(slot), std::uint64_t(re)});
        h_est[re] = apply_estimation_error(h_true[re], ctx.ke_sqrt, rng_e);
      } else {
        h_est[re] = h_true[re];
      }
      if (ctx.whitener.size() != 0) h_est[re].h = ctx.whitener * h_est[re].h;
    }
    const std::vector<ChannelRealization>& sel_set = (slot == 0 || prev_est.empty()) ? h_est : prev_est;

    // per-RE post-equalization SINRs (linear pipelines and traces)
    SinrField sel_sinrs;
    bool need_sinrs = (cfg.la_metric == LaMetric::esm);
    for (const auto& d : cfg.detectors) {
      if (d.predictor.kind == PredictorKind::mi_table) need_sinrs = true;
    }
    if (need_sinrs) {
      sel_sinrs.resize(cfg.n_re);
      for (int re = 0; re < cfg.n_re; ++re) sel_sinrs[re] = lmmse_post_eq_sinr(sel_set[re]);
    }

    // MCS selection per detector
    std::vector<SelectResult> sel(n_det);
    for (int d = 0; d < n_det; ++d) {
      if (cfg.la_metric == LaMetric::esm) {
        sel[d] = select_mcs_esm(ctx, sel_sinrs, sel_set[0].per_ue, esm_state[d]);
        continue;
      }
      const DetectorConfig& dc = cfg.detectors[d];
      SetPredictFn predict;
      if (dc.predictor.kind == PredictorKind::mi_table) {
        predict = [&](const std::vector<int>& mods) {
          std::vector<double> vals(n_ue, 0.0);
          for (int u = 0; u < n_ue; ++u) {
            const UeLayout& lay = sel_set[0].per_ue[u];
            const MiCurve& curve = shared_curves().curve(mods[u]);
            double acc = 0.0;
            for (int re = 0; re < cfg.n_re; ++re) {
              for (int l = 0; l < lay.n_t; ++l) {
                acc += curve.at_snr(sel_sinrs[re](lay.col_begin + l)) / mods[u];
              }
            }
            vals[u] = acc / (cfg.n_re * lay.n_t);
          }
          return vals;
        };
      } else {
        auto rng = std::make_shared<RngStream>(RngStream::derive(
            cfg.seed,
            {kStreamPredictor, std::uint64_t(drop), std::uint64_t(slot), std::uint64_t(d)}));
        predict = [&, rng](const std::vector<int>& mods) {
          std::vector<const Constellation*> cs(n_ue);
          for (int u = 0; u < n_ue; ++u) cs[u] = &shared_constellation(mods[u]);
          std::vector<double> vals(n_ue, 0.0);
          int count = 0;
          for (int re = 0; re < cfg.n_re; re += dc.predictor.re_stride) {
            const BmdrEstimate est = estimate_bmdr_mc(dc.spec, sel_set[re], cs,
                                                      dc.predictor.mc_samples_per_re, *rng,
                                                      cfg.llr_clip);
            for (int u = 0; u < n_ue; ++u) vals[u] += est.value[u];
            ++count;
          }
          for (auto& v : vals) v /= count;
          return vals;
        };
      }
      sel[d] = select_mcs(predict, *ctx.mcs, ctx.threshold, cfg.epsilon, la[d], cfg.n_re_per_cb(),
                          cfg.n_t_per_ue());
    }

    // detector choice
    std::vector<DetectorSpec> specs;
    for (const auto& d : cfg.detectors) specs.push_back(d.spec);
    int chosen = 0;
    if (cfg.hybrid && n_det > 1) {
      chosen = (cfg.gamma >= 0.0)
                   ? select_detector_weighted(sel, specs, cfg.gamma, ctx.r_max_m_max)
                   : select_detector(sel, specs);
    }

    // noise shared across paired detector evaluations
    if (ctx.full) {
      for (int re = 0; re < cfg.n_re; ++re) {
        RngStream rng_n = RngStream::derive(
            cfg.seed, {kStreamNoise, std::uint64_t(drop), std::uint64_t(slot), std::uint64_t(re)});
        Eigen::VectorXcd w(cfg.n_r);
        for (int i = 0; i < cfg.n_r; ++i) w(i) = rng_n.cnormal();
        noise[re] = (ctx.kn_sqrt.size() != 0) ? Eigen::VectorXcd(ctx.kn_sqrt * w) : w;
      }
    }

    // data paths (paired over all detectors when hybrid, for ground truth)
    SlotRecord rec;
    rec.drop = drop;
    rec.slot = slot;
    rec.chosen_detector = chosen;
    rec.realized_bits_per_detector.assign(n_det, 0.0);
    rec.predicted_se_per_detector.assign(n_det, 0.0);
    for (int d = 0; d < n_det; ++d) rec.predicted_se_per_detector[d] = sel[d].mean_se;

    std::vector<PathOutcome> outcomes(n_det);
    for (int d = 0; d < n_det; ++d) {
      const bool evaluate = ctx.full ? (cfg.hybrid || d == chosen) : (d == chosen);
      if (!evaluate) continue;
      if (ctx.full) {
        outcomes[d] = run_data_path(ctx, h_true, h_est, noise, sel[d].per_ue, drop, slot, d);
      } else {
        SinrField cur_sinrs;
        const SinrField* sptr = nullptr;
        if (cfg.la_metric == LaMetric::esm ||
            cfg.detectors[d].predictor.kind == PredictorKind::mi_table) {
          cur_sinrs.resize(cfg.n_re);
          for (int re = 0; re < cfg.n_re; ++re) cur_sinrs[re] = lmmse_post_eq_sinr(h_est[re]);
          sptr = &cur_sinrs;
        }
        outcomes[d] = run_abstract_path(ctx, h_est, sel[d].per_ue, drop, slot, d, sptr);
      }
      rec.realized_bits_per_detector[d] = outcomes[d].realized_bits;

      // OLLA feedback from this detector's own outcomes
      for (int u = 0; u < n_ue; ++u) {
        for (const CbOutcome& oc : outcomes[d].per_ue_cb[u]) {
          const bool ok = ctx.full ? oc.crc_ok : oc.draw_ok;
          if (cfg.la_metric == LaMetric::esm) {
            double& dd = esm_state[d].delta_db[u];
            dd += ok ? esm_step_ok : -cfg.esm.olla_step_fail_db;
            dd = std::clamp(dd, -3.0, 3.0);
          } else {
            update_delta(la[d], u, ok, step_ok, cfg.olla.step_fail, cfg.olla.delta_min,
                         cfg.olla.delta_max);
          }
        }
      }
    }

    // record
    std::vector<double> conds;
    conds.reserve(cfg.n_re);
    for (int re = 0; re < cfg.n_re; ++re) conds.push_back(h_est[re].log_cond_db());
    std::sort(conds.begin(), conds.end());
    rec.median_log_cond_db = conds[conds.size() / 2];

    SinrField cur_sinr_field;
    if (cfg.record_sinr_lists) {
      cur_sinr_field.resize(cfg.n_re);
      for (int re = 0; re < cfg.n_re; ++re) cur_sinr_field[re] = lmmse_post_eq_sinr(h_est[re]);
    }

    rec.ue.resize(n_ue);
    for (int u = 0; u < n_ue; ++u) {
      UeSlotRecord& ur = rec.ue[u];
      const McsDecision& d = sel[chosen].per_ue[u];
      ur.mcs_index = d.mcs_index;
      ur.m = d.m;
      ur.r = d.r;
      ur.k_bits = d.k;
      ur.detector = chosen;
      ur.r_hat = sel[chosen].r_hat.empty() ? 0.0 : sel[chosen].r_hat[u];
      ur.delta = (cfg.la_metric == LaMetric::esm) ? esm_state[chosen].delta_db[u]
                                                  : la[chosen].delta[u];
      const auto& cbs = outcomes[chosen].per_ue_cb[u];
      ur.cb_total = static_cast<int>(cbs.size());
      bool tb_fail = false;
      for (const CbOutcome& oc : cbs) {
        if (oc.true_ok) ++ur.cb_ok;
        if (!oc.true_ok) tb_fail = true;
        ur.cb_ok_flags.push_back(oc.true_ok ? 1 : 0);
        ur.p_hat.push_back(oc.p_hat);
        ur.cb_metric.push_back(oc.metric);
      }
      ur.tb_ok = !tb_fail;
      ur.tb_p_hat = ur.p_hat.empty() ? 0.0 : compose_tb(ur.p_hat);
      if (need_sinrs) {
        const UeLayout& lay = sel_set[0].per_ue[u];
        double acc = 0.0;
        for (int re = 0; re < cfg.n_re; ++re)
          for (int l = 0; l < lay.n_t; ++l) acc += sel_sinrs[re](lay.col_begin + l);
        ur.mean_sinr_db = lin_to_db(acc / (cfg.n_re * lay.n_t));
      }
      if (cfg.record_sinr_lists) {
        const int re_per_cb = cfg.n_re_per_cb();
        const UeLayout& lay = h_est[0].per_ue[u];
        for (int cb = 0; cb < ur.cb_total; ++cb) {
          ur.cb_sinrs.push_back(ue_sinr_list(cur_sinr_field, lay, cb * re_per_cb,
                                             (cb + 1) * re_per_cb));
        }
      }
    }
    out[static_cast<std::size_t>(drop) * cfg.slots + slot] = std::move(rec);
    prev_est = h_est;
  }
}

}  // namespace

static RunResult run_sim_impl(const SimConfig& cfg, const TableSet& tables, int workers,
                              bool full) {
  cfg.validate();
  if (tables.empty()) {
    throw ConfigError(
        "no BMDR-CER tables found in tables_dir '" + cfg.tables_dir +
        "'; build them first: mulinksim build-table --config <table-config> --out <dir>");
  }
  const McsTable mcs = cfg.mcs_table();

  DropContext ctx;
  ctx.cfg = &cfg;
  ctx.mcs = &mcs;
  ctx.tables = &tables;
  ctx.threshold = tables.threshold_fn();
  ctx.dims.n_r = cfg.n_r;
  ctx.dims.n_t_per_ue = cfg.n_t_per_ue();
  ctx.powers = cfg.ue_powers_lin();
  ctx.full = full;
  ctx.workers = workers;
  ctx.r_max_m_max = mcs.entries().back().se;

  ctx.model.kind = cfg.ch_kind;
  ctx.model.ar1_coef = cfg.ar1_coef;
  ctx.model.mix_prob = cfg.mix_prob;
  ctx.model.mix_rt_rho = cfg.mix_rt_rho;
  if (cfg.ch_kind == ChannelKind::kronecker) {
    if (cfg.kron_rt_rho > 0.0) ctx.model.rt = exp_correlation(ctx.dims.n_streams(), cfg.kron_rt_rho);
    if (cfg.kron_rr_rho > 0.0) ctx.model.rr = exp_correlation(cfg.n_r, cfg.kron_rr_rho);
  }

  const Eigen::MatrixXcd kn = cfg.kn.build(cfg.n_r);
  const Eigen::MatrixXcd ke = cfg.ke.build(cfg.n_r);
  NoiseModel nm{kn, ke};
  if (!nm.is_identity()) {
    ctx.whitener = inverse_sqrt(nm);
  }
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(cfg.n_r, cfg.n_r);
  if ((kn - id).norm() > 1e-14) ctx.kn_sqrt = matrix_sqrt_psd(kn);
  if (ke.norm() > 0.0) ctx.ke_sqrt = matrix_sqrt_psd(ke);

  RunResult result;
  result.slots.resize(static_cast<std::size_t>(cfg.drops) * cfg.slots);
  parallel_for(cfg.drops, workers, [&](int drop) { run_drop(ctx, drop, result.slots); });
  result.metrics = compute_metrics(result.slots, cfg, !full);
  return result;
}

RunResult run_full_sim(const SimConfig& cfg, const TableSet& tables, int workers) {
  return run_sim_impl(cfg, tables, workers, true);
}

RunResult run_abstracted_sim(const SimConfig& cfg, const TableSet& tables, int workers) {
  return run_sim_impl(cfg, tables, workers, false);
}

// ---------------------------------------------------------------------------
// Metrics

MetricsReport compute_metrics(std::span<const SlotRecord> slots, const SimConfig& cfg,
                              bool estimated) {
  if (slots.empty()) throw std::invalid_argument("compute_metrics: empty results");
  const int n_ue = cfg.n_ue();
  const int n_det = static_cast<int>(cfg.detectors.size());

  MetricsReport rep;
  rep.tp.assign(cfg.drops, std::vector<double>(n_ue, 0.0));
  rep.cer.assign(cfg.drops, std::vector<double>(n_ue, 0.0));
  std::vector<std::vector<long>> tb_total(cfg.drops, std::vector<long>(n_ue, 0));
  std::vector<std::vector<double>> tb_fail(cfg.drops, std::vector<double>(n_ue, 0.0));

  rep.confusion.assign(n_det, std::vector<long>(n_det, 0));
  long paired_slots = 0, matched = 0;

  for (const SlotRecord& sr : slots) {
    for (int u = 0; u < n_ue; ++u) {
      const UeSlotRecord& ur = sr.ue[u];
      if (estimated) {
        for (double p : ur.p_hat) rep.tp[sr.drop][u] += (1.0 - p) * ur.k_bits;
        tb_fail[sr.drop][u] += ur.tb_p_hat;
      } else {
        rep.tp[sr.drop][u] += static_cast<double>(ur.cb_ok) * ur.k_bits;
        tb_fail[sr.drop][u] += ur.tb_ok ? 0.0 : 1.0;
      }
      tb_total[sr.drop][u] += 1;
      rep.mcs_sorted.push_back(ur.mcs_index);
    }
    if (sr.realized_bits_per_detector.size() > 1) {
      int best = 0;
      for (std::size_t d = 1; d < sr.realized_bits_per_detector.size(); ++d) {
        if (sr.realized_bits_per_detector[d] > sr.realized_bits_per_detector[best])
          best = static_cast<int>(d);
      }
      rep.confusion[sr.chosen_detector][best]++;
      ++paired_slots;
      if (best == sr.chosen_detector) ++matched;
    }
  }

  const double denom = cfg.slots * cfg.t_slot * 1e6;
  double am = 0.0, gm = 0.0;
  int cnt = 0;
  for (int dr = 0; dr < cfg.drops; ++dr) {
    for (int u = 0; u < n_ue; ++u) {
      rep.tp[dr][u] /= denom;
      rep.cer[dr][u] = tb_fail[dr][u] / std::max<long>(tb_total[dr][u], 1);
      am += rep.tp[dr][u];
      gm += std::log(std::max(rep.tp[dr][u], 1e-6));  // epsilon floor for zero throughput
      rep.cer_sorted.push_back(rep.cer[dr][u]);
      ++cnt;
    }
  }
  rep.am_tp = am / cnt;
  rep.gm_tp = std::exp(gm / cnt);
  std::sort(rep.cer_sorted.begin(), rep.cer_sorted.end());
  std::sort(rep.mcs_sorted.begin(), rep.mcs_sorted.end());
  rep.detector_accuracy = paired_slots > 0 ? static_cast<double>(matched) / paired_slots : -1.0;
  return rep;
}

// ---------------------------------------------------------------------------
// CSV / manifest output

namespace {
void open_out(std::ofstream& out, const std::string& path) {
  fs::create_directories(fs::path(path).parent_path().empty() ? "." : fs::path(path).parent_path());
  out.open(path);
  if (!out) throw ConfigError("cannot write " + path);
}
}  // namespace

void write_metrics_csv(const std::string& path, const MetricsReport& m, const SimConfig& cfg) {
  std::ofstream out;
  open_out(out, path);
  char buf[160];
  out << "#metrics,v=1\n";
  std::snprintf(buf, sizeof buf, "am_tp_mbps,%.10g\ngm_tp_mbps,%.10g\n", m.am_tp, m.gm_tp);
  out << buf;
  if (m.detector_accuracy >= 0.0) {
    std::snprintf(buf, sizeof buf, "detector_accuracy,%.10g\n", m.detector_accuracy);
    out << buf;
  }
  out << "drop,ue,tp_mbps,cer\n";
  for (int dr = 0; dr < cfg.drops; ++dr) {
    for (int u = 0; u < cfg.n_ue(); ++u) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.10g,%.10g\n", dr, u, m.tp[dr][u], m.cer[dr][u]);
      out << buf;
    }
  }
}

void write_slots_csv(const std::string& path, std::span<const SlotRecord> slots) {
  std::ofstream out;
  open_out(out, path);
  out << "drop,slot,ue,detector,mcs,m,r,k,cb_total,cb_ok,tb_ok,r_hat,delta,median_log_cond_db\n";
  char buf[256];
  for (const auto& sr : slots) {
    for (std::size_t u = 0; u < sr.ue.size(); ++u) {
      const auto& ur = sr.ue[u];
      std::snprintf(buf, sizeof buf, "%d,%d,%zu,%d,%d,%d,%.9g,%d,%d,%d,%d,%.10g,%.10g,%.6g\n",
                    sr.drop, sr.slot, u, ur.detector, ur.mcs_index, ur.m, ur.r, ur.k_bits,
                    ur.cb_total, ur.cb_ok, ur.tb_ok ? 1 : 0, ur.r_hat, ur.delta,
                    sr.median_log_cond_db);
      out << buf;
    }
  }
}

void write_la_trace_csv(const std::string& path, std::span<const SlotRecord> slots) {
  std::ofstream out;
  open_out(out, path);
  out << "drop,slot,ue,r_hat,delta,mcs,detector\n";
  char buf[160];
  for (const auto& sr : slots) {
    for (std::size_t u = 0; u < sr.ue.size(); ++u) {
      const auto& ur = sr.ue[u];
      std::snprintf(buf, sizeof buf, "%d,%d,%zu,%.10g,%.10g,%d,%d\n", sr.drop, sr.slot, u,
                    ur.r_hat, ur.delta, ur.mcs_index, ur.detector);
      out << buf;
    }
  }
}

void write_abstraction_report_csv(const std::string& path, std::span<const SlotRecord> slots) {
  std::ofstream out;
  open_out(out, path);
  out << "drop,tb,ue,cb,metric,p_hat,tb_p_hat\n";
  char buf[160];
  for (const auto& sr : slots) {
    for (std::size_t u = 0; u < sr.ue.size(); ++u) {
      const auto& ur = sr.ue[u];
      for (std::size_t cb = 0; cb < ur.p_hat.size(); ++cb) {
        std::snprintf(buf, sizeof buf, "%d,%d,%zu,%zu,%.10g,%.10g,%.10g\n", sr.drop, sr.slot, u,
                      cb, ur.cb_metric[cb], ur.p_hat[cb], ur.tb_p_hat);
        out << buf;
      }
    }
  }
}

void write_percentiles_csv(const std::string& path, const MetricsReport& m) {
  std::ofstream out;
  open_out(out, path);
  out << "kind,value,fraction_le\n";
  char buf[96];
  const std::size_t nc = m.cer_sorted.size();
  for (std::size_t i = 0; i < nc; ++i) {
    std::snprintf(buf, sizeof buf, "cer,%.10g,%.8g\n", m.cer_sorted[i],
                  static_cast<double>(i + 1) / nc);
    out << buf;
  }
  const std::size_t nm = m.mcs_sorted.size();
  for (std::size_t i = 0; i < nm; ++i) {
    std::snprintf(buf, sizeof buf, "mcs,%d,%.8g\n", m.mcs_sorted[i],
                  static_cast<double>(i + 1) / nm);
    out << buf;
  }
}

void write_confusion_csv(const std::string& path, const MetricsReport& m) {
  std::ofstream out;
  open_out(out, path);
  out << "chosen,best,count\n";
  for (std::size_t i = 0; i < m.confusion.size(); ++i) {
    for (std::size_t j = 0; j < m.confusion[i].size(); ++j) {
      out << i << "," << j << "," << m.confusion[i][j] << "\n";
    }
  }
}

void write_manifest(const std::string& path, const std::string& config_path, const SimConfig& cfg,
                    const std::string& command, int workers) {
  std::ofstream out;
  open_out(out, path);
  json j;
  j["version"] = "0.1.0";
  j["command"] = command;
  j["config"] = config_path;
  j["config_sha256"] = sha256_hex(read_file(config_path));
  j["seed"] = cfg.seed;
  j["workers"] = workers;
  out << j.dump(2) << "\n";
}

}  // namespace mulink
