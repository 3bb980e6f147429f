#pragma once

// End-to-end closed-loop simulation: full coded chain and the abstracted
// counterpart, metrics, configuration, and CSV/manifest output.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mulink/abstraction.hpp"
#include "mulink/bmdr.hpp"
#include "mulink/channel.hpp"
#include "mulink/coding.hpp"
#include "mulink/detect.hpp"
#include "mulink/linkadapt.hpp"

namespace mulink {

struct UeConfig {
  int n_t = 1;
  double p0_dbm = -98.0;
  double alpha = 1.0;
  double pl_db = 100.0;
  double pmax_dbm = 23.0;
  int n_prb = 24;
};

struct PredictorConfig {
  PredictorKind kind = PredictorKind::mi_table;
  int mc_samples_per_re = 4;
  int re_stride = 1;  // predict on every re_stride-th RE of the set
};

struct DetectorConfig {
  DetectorSpec spec;
  PredictorConfig predictor;
};

enum class LaMetric { bmdr, esm };

struct EsmPipelineConfig {
  EsmFamily family = EsmFamily::miesm;
  std::map<int, double> beta_per_mcs;  // EESM betas; missing index -> 1.0
  double olla_step_fail_db = 0.2;
};

struct CovarianceConfig {
  enum class Kind { scalar, diagonal, dense_file } kind = Kind::scalar;
  double value = 1.0;                 // scalar
  std::vector<double> diagonal;       // diagonal
  std::string path;                   // dense_file
  Eigen::MatrixXcd build(int n_r) const;
};

struct SimConfig {
  int version = 1;
  int drops = 3;
  int slots = 100;
  double t_slot = 5e-4;
  int n_re = 300;       // REs per slot (per-UE codeword span)
  int cb_per_slot = 1;  // L code blocks per slot; n_re must divide evenly
  int n_r = 8;
  double noise_floor_dbm = -98.0;
  std::vector<UeConfig> ues;

  // channel
  ChannelKind ch_kind = ChannelKind::iid_rayleigh;
  double kron_rt_rho = 0.0;
  double kron_rr_rho = 0.0;
  double ar1_coef = 0.98;
  double mix_prob = 0.0;
  double mix_rt_rho = 0.0;

  CovarianceConfig kn;  // defaults to identity
  CovarianceConfig ke;  // defaults to zero

  std::vector<DetectorConfig> detectors;
  bool hybrid = false;
  double gamma = -1.0;  // <0: least-complexity-among-SE-maximizers rule

  LaMetric la_metric = LaMetric::bmdr;
  EsmPipelineConfig esm;

  std::string mcs_table_path;  // empty -> default 12-entry table
  double epsilon = 1e-2;
  std::string tables_dir;
  OllaConfig olla;
  double llr_clip = kDefaultLlrClip;
  std::uint64_t seed = 1;
  bool record_sinr_lists = false;  // per-CB SINR capture (beta calibration)

  static SimConfig load_json(const std::string& path);
  void validate() const;

  int n_ue() const { return static_cast<int>(ues.size()); }
  int n_re_per_cb() const { return n_re / cb_per_slot; }
  std::vector<int> n_t_per_ue() const;
  // linear per-UE receive SNR scale (OLPC power through pathloss over the
  // noise floor); the rho_i of the signal model
  std::vector<double> ue_powers_lin() const;
  McsTable mcs_table() const;
};

// Loaded BMDR-CER tables with the threshold oracle on top.
class TableSet {
 public:
  TableSet() = default;
  static TableSet load_dir(const std::string& dir);
  void add(BmdrCerTable t) { tables_.push_back(std::move(t)); }
  bool empty() const { return tables_.empty(); }
  std::span<const BmdrCerTable> tables() const { return tables_; }

  // exact-(r,n) table; nearest-n fallback of the same rate sets *approx.
  const BmdrCerTable* find(double rate, int n, bool* approx = nullptr) const;
  ThresholdFn threshold_fn(double /*unused eps; bound at call*/ = 0.0) const;

 private:
  std::vector<BmdrCerTable> tables_;
};

struct UeSlotRecord {
  int mcs_index = 0;
  int m = 2;
  double r = 0.0;
  int k_bits = 0;            // per code block
  int detector = 0;          // chosen detector index
  int cb_total = 0;
  int cb_ok = 0;             // true decode successes (full) / Bernoulli draws (abstracted)
  bool tb_ok = true;
  std::vector<std::uint8_t> cb_ok_flags;  // per-CB true decode outcome
  double tb_p_hat = 0.0;         // abstracted TB error probability
  std::vector<double> p_hat;     // abstracted per-CB CER
  std::vector<double> cb_metric; // abstracted per-CB R_hat (or effective SINR dB)
  std::vector<std::vector<double>> cb_sinrs;  // optional per-CB SINR lists
  double r_hat = 0.0;        // predicted set metric at selection time
  double delta = 0.0;        // offset when selected
  double mean_sinr_db = 0.0; // mean post-eq SINR trace (linear det only)
};

struct SlotRecord {
  int drop = 0;
  int slot = 0;
  int chosen_detector = 0;
  double median_log_cond_db = 0.0;
  std::vector<UeSlotRecord> ue;
  // paired per-detector realized bits (hybrid full sim): sum over UEs of
  // delta*k in this slot, one entry per detector
  std::vector<double> realized_bits_per_detector;
  std::vector<double> predicted_se_per_detector;
};

struct MetricsReport {
  // indexed [drop][ue]
  std::vector<std::vector<double>> tp;
  std::vector<std::vector<double>> cer;  // realized (or estimated) per UE-drop
  double am_tp = 0.0;
  double gm_tp = 0.0;
  std::vector<double> cer_sorted;         // percentile curve support
  std::vector<int> mcs_sorted;            // percentile curve support
  std::vector<std::vector<long>> confusion;  // [chosen][post-hoc best]
  double detector_accuracy = -1.0;           // diagonal fraction; -1 if n/a
};

struct RunResult {
  std::vector<SlotRecord> slots;
  MetricsReport metrics;
};

RunResult run_full_sim(const SimConfig& cfg, const TableSet& tables, int workers);
RunResult run_abstracted_sim(const SimConfig& cfg, const TableSet& tables, int workers);

MetricsReport compute_metrics(std::span<const SlotRecord> slots, const SimConfig& cfg,
                              bool estimated = false);

// CER of the row with the nearest SNR (ties to the lower SNR, pessimistic);
// the SNR-domain lookup used by the classical ESM pipelines.
double cer_at_snr(const BmdrCerTable& t, double snr_db);

// CSV / manifest output (fixed formatting; byte-identical across workers).
void write_metrics_csv(const std::string& path, const MetricsReport& m, const SimConfig& cfg);
void write_slots_csv(const std::string& path, std::span<const SlotRecord> slots);
void write_la_trace_csv(const std::string& path, std::span<const SlotRecord> slots);
void write_abstraction_report_csv(const std::string& path, std::span<const SlotRecord> slots);
void write_percentiles_csv(const std::string& path, const MetricsReport& m);
void write_confusion_csv(const std::string& path, const MetricsReport& m);
void write_manifest(const std::string& path, const std::string& config_path,
                    const SimConfig& cfg, const std::string& command, int workers);

}  // namespace mulink
