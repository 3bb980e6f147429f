#pragma once

// Bit-metric decoding rate machinery: Monte-Carlo estimation, AWGN
// BMDR-to-CER lookup tables, target-BMDR queries with 1/n interpolation,
// the AWGN bit-metric MI curves, and the pluggable BMDR predictor used by
// link adaptation and PHY abstraction.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mulink/channel.hpp"
#include "mulink/coding.hpp"
#include "mulink/detect.hpp"
#include "mulink/modem.hpp"
#include "mulink/rng.hpp"

namespace mulink {

struct BmdrEstimate {
  std::vector<double> value;    // per UE, in [0,1]
  std::vector<double> std_err;  // per UE
  long samples = 0;
};

// Mean of per-RE estimates (one slot / one codeword's channel set).
BmdrEstimate bmdr_of_set(std::span<const BmdrEstimate> per_re);

// Monte-Carlo estimate of the per-UE BMDR of `spec` on channel `h`
// (whitened): uniform symbols, CN(0,I) noise, detector LLRs, average of
// 1 + mean_bits log2 q over samples, clamped at 0.
BmdrEstimate estimate_bmdr_mc(const DetectorSpec& spec, const ChannelRealization& h,
                              const std::vector<const Constellation*>& mods, int n_samples,
                              RngStream& rng, double clip = kDefaultLlrClip);

// ---------------------------------------------------------------------------
// AWGN bit-metric mutual information curves
//
// mi(snr) is the per-symbol max-log bit-metric rate of 2^m-QAM on the scalar
// AWGN channel (m times the MLD BMDR), computed by deterministic quadrature.
// It doubles as the I_m(.) curve of MIESM so that the BMDR and MIESM
// pipelines share one curve by construction.

class MiCurve {
 public:
  MiCurve() = default;
  MiCurve(int m, double snr_db_min, double snr_db_max, double step_db,
          double clip = kDefaultLlrClip);

  int order_m() const { return m_; }
  double max_mi() const { return mi_.back(); }
  double min_mi() const { return mi_.front(); }
  double snr_db_min() const { return db_min_; }
  double step_db() const { return step_db_; }
  std::size_t size() const { return mi_.size(); }
  double grid_value(std::size_t i) const { return mi_[i]; }

  // Monotone-cubic interpolated MI at a linear SNR (clamped to the grid).
  double at_snr(double snr_lin) const;
  double at_snr_db(double snr_db) const;

  // Inverse map: linear SNR whose MI equals `mi`, by bisection to 1e-10.
  // Out-of-range values clamp to the grid endpoint and set *clamped.
  double invert(double mi, bool* clamped = nullptr) const;

  void save_csv(const std::string& path) const;

 private:
  double interp(double x_db) const;

  int m_ = 0;
  double db_min_ = 0.0, step_db_ = 0.1;
  std::vector<double> mi_;
  std::vector<double> slope_;  // Fritsch-Carlson tangents
};

// Lazily-built shared curve set (0.1 dB grid, [-20, 45] dB).
class CurveSet {
 public:
  const MiCurve& curve(int m) const;

 private:
  mutable std::map<int, MiCurve> curves_;
};

const CurveSet& shared_curves();

// ---------------------------------------------------------------------------
// BMDR-CER lookup table (Algorithm-1 output)

struct BmdrCerRow {
  double snr_db = 0.0;
  double bmdr = 0.0;      // R_MLD at this SNR
  double cer = 0.0;       // raw empirical CER
  long n_cw = 0;
  long n_mi = 0;
  double cer_iso = 0.0;   // after isotonic cleanup (non-increasing in bmdr)
};

struct BmdrCerTable {
  double rate = 0.0;  // realized k/n
  int n = 0;
  int m = 0;          // modulation order used for the build
  std::vector<BmdrCerRow> rows;  // sorted by bmdr ascending

  // min{ R_MLD | P_e <= eps } on the isotonic rows (Eq.-6 form);
  // nullopt when no row qualifies.
  std::optional<double> target_bmdr(double eps) const;

  // min{ snr | P_e <= eps }, the classical SNR-domain threshold.
  std::optional<double> target_snr_db(double eps) const;

  void apply_isotonic();
  void save_csv(const std::string& path) const;
  static BmdrCerTable load_csv(const std::string& path);
};

struct TableBuildConfig {
  std::vector<double> snr_grid_db;  // the set P of Algorithm 1
  long cw_budget = 20000;           // codewords per SNR point
  long mi_budget = 10000;           // BMDR samples per SNR point
  int decoder_max_iters = 30;
  double decoder_norm = 0.8;
  double clip = kDefaultLlrClip;
  int workers = 1;
};

// Equally spaced grid bracketing the code's capacity threshold:
// [snr(r) - below_db, snr(r) + above_db] in steps of step_db.
std::vector<double> auto_snr_grid(double rate, int m, double below_db, double above_db,
                                  double step_db);

// Algorithm 1: empirical CER of the full SISO-AWGN coded chain with MLD
// demapping, paired with the empirical BMDR at the same SNR.
BmdrCerTable build_awgn_table(const CodeSpec& code, int m, const TableBuildConfig& cfg,
                              std::uint64_t seed);

// Eq. 6 with length interpolation: exact-(r,n) table when available,
// otherwise linear interpolation in 1/n between bracketing tables of the
// same rate. Throws std::invalid_argument when no table of that rate
// brackets n; returns nullopt when the target CER is unreachable.
std::optional<double> target_bmdr(std::span<const BmdrCerTable> tables, int m, double rate,
                                  int n, double eps);

// ---------------------------------------------------------------------------
// Pluggable BMDR predictor (stand-in for the part-1 CNN)

enum class PredictorKind { mi_table, monte_carlo };

struct BmdrPredictor {
  PredictorKind kind = PredictorKind::mi_table;
  DetectorSpec detector;
  int mc_samples_per_re = 4;  // monte_carlo budget
  double clip = kDefaultLlrClip;
  const CurveSet* curves = &shared_curves();
};

// Per-UE predicted BMDR on one whitened channel realization; `mods` holds
// each UE's modulation order. monte_carlo needs an RNG stream.
BmdrEstimate predict_bmdr(const BmdrPredictor& p, const std::vector<int>& mods,
                          const ChannelRealization& h, RngStream* rng = nullptr);

}  // namespace mulink
