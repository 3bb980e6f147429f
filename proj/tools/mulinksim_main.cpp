// mulinksim: MU-MIMO uplink link-level simulator with BMDR-based link
// adaptation, dynamic detector selection, and PHY abstraction.
//
// Subcommands:
//   build-table     build BMDR-CER lookup tables on the SISO-AWGN channel
//   simulate        closed-loop full-chain simulation
//   abstract        closed-loop abstracted simulation
//   compare         paired full vs abstracted run with agreement stats
//   calibrate-beta  fit per-MCS EESM beta against full-sim outcomes
//   la-trace        single-drop MCS-selection trace dump

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "mulink/abstraction.hpp"
#include "mulink/errors.hpp"
#include "mulink/harness.hpp"
#include "mulink/parallel.hpp"
#include "mulink/util.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace mulink;

namespace {

struct CommonOpts {
  std::string config;
  std::string out = "out";
  int workers = 1;
  std::optional<std::uint64_t> seed;
  std::string detector;  // restrict simulate/abstract to one detector by name
  std::optional<double> gamma;
};

SimConfig load_sim_config(const CommonOpts& opts) {
  SimConfig cfg = SimConfig::load_json(opts.config);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.gamma) cfg.gamma = *opts.gamma;
  if (!opts.detector.empty()) {
    std::vector<DetectorConfig> keep;
    for (const auto& d : cfg.detectors) {
      if (d.spec.name() == opts.detector) keep.push_back(d);
    }
    if (keep.empty()) {
      throw ConfigError("detector '" + opts.detector + "' not present in config " + opts.config);
    }
    cfg.detectors = keep;
    cfg.hybrid = false;
  }
  return cfg;
}

void write_common_outputs(const std::string& out_dir, const CommonOpts& opts, const SimConfig& cfg,
                          const RunResult& res, const std::string& command) {
  fs::create_directories(out_dir);
  write_metrics_csv(out_dir + "/metrics.csv", res.metrics, cfg);
  write_slots_csv(out_dir + "/slots.csv", res.slots);
  write_percentiles_csv(out_dir + "/percentiles.csv", res.metrics);
  if (cfg.hybrid) write_confusion_csv(out_dir + "/confusion.csv", res.metrics);
  write_manifest(out_dir + "/manifest.json", opts.config, cfg, command, opts.workers);
}

// ---------------------------------------------------------------------------
// build-table

int cmd_build_table(const CommonOpts& opts) {
  if (!fs::exists(opts.config)) throw ConfigError("config file not found: " + opts.config);
  json j;
  try {
    j = json::parse(read_file(opts.config));
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + opts.config + ": " + e.what());
  }
  if (j.value("version", 1) != 1) throw ConfigError("table config: unsupported version");

  const std::uint64_t seed = opts.seed.value_or(j.value("seed", 7ULL));
  const int m = j.value("m", 2);
  TableBuildConfig bc;
  bc.cw_budget = j.value("cw_budget", 20000L);
  bc.mi_budget = j.value("mi_budget", 10000L);
  bc.workers = opts.workers;

  struct CodeReq {
    double rate;
    int n;
    std::string kind;
    std::string alist;
  };
  std::vector<CodeReq> reqs;
  if (j.contains("codes")) {
    for (const auto& jc : j["codes"]) {
      CodeReq r;
      r.rate = jc.value("rate", 0.5);
      r.n = jc.value("n", 648);
      r.kind = jc.value("kind", "qc");
      r.alist = jc.value("alist", std::string());
      reqs.push_back(r);
    }
  }
  if (j.contains("from_mcs")) {
    const auto& jm = j["from_mcs"];
    const int n_re = jm.value("n_re", 300);
    const int n_t = jm.value("n_t", 1);
    const std::string path = jm.value("path", std::string());
    const McsTable table =
        path.empty() ? McsTable::make_default(n_re, n_t) : McsTable::load_csv(path);
    for (const auto& e : table.entries()) {
      reqs.push_back({e.r, e.n, "qc", ""});
    }
  }
  if (reqs.empty()) throw ConfigError("table config: no codes requested");

  fs::create_directories(opts.out);
  const CurveSet& curves = shared_curves();
  curves.curve(m).save_csv(opts.out + "/mi_curve_m" + std::to_string(m) + ".csv");

  for (const auto& r : reqs) {
    CodeSpec code = [&]() {
      if (r.kind == "qc") return CodeSpec::make_qc(r.rate, r.n, 0x5EEDC0DEULL);
      if (r.kind == "peg") {
        // (3,6)-regular; rate fixed at 1/2 by the construction
        return CodeSpec::make_peg(r.n, 3, 6, 0x5EEDC0DEULL);
      }
      if (r.kind == "alist") return CodeSpec::load_alist(r.alist);
      throw ConfigError("table config: unknown code kind '" + r.kind + "'");
    }();

    TableBuildConfig cfg = bc;
    if (j.contains("snr_grid")) {
      const auto& jg = j["snr_grid"];
      if (jg.contains("min")) {
        for (double db = jg["min"].get<double>(); db <= jg["max"].get<double>() + 1e-9;
             db += jg.value("step", 0.5)) {
          cfg.snr_grid_db.push_back(db);
        }
      }
    }
    if (cfg.snr_grid_db.empty()) {
      const auto& ja = j.contains("snr_grid") ? j["snr_grid"] : json::object();
      cfg.snr_grid_db = auto_snr_grid(code.rate(), m, ja.value("below_db", 2.0),
                                      ja.value("above_db", 5.0), ja.value("step", 0.5));
    }

    const BmdrCerTable table = build_awgn_table(code, m, cfg, seed);
    char name[160];
    std::snprintf(name, sizeof name, "%s/bmdr_cer_r%.4f_n%d_m%d.csv", opts.out.c_str(),
                  table.rate, table.n, m);
    table.save_csv(name);
    std::fprintf(stderr, "built table r=%.4f n=%d m=%d (%zu SNR points) -> %s\n", table.rate,
                 table.n, m, table.rows.size(), name);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// simulate / abstract / la-trace

int cmd_simulate(const CommonOpts& opts, bool abstracted, bool trace_only) {
  SimConfig cfg = load_sim_config(opts);
  if (trace_only) cfg.drops = 1;
  const TableSet tables = TableSet::load_dir(cfg.tables_dir);
  const RunResult res = abstracted ? run_abstracted_sim(cfg, tables, opts.workers)
                                   : run_full_sim(cfg, tables, opts.workers);
  fs::create_directories(opts.out);
  if (trace_only) {
    write_la_trace_csv(opts.out + "/la_trace.csv", res.slots);
    write_manifest(opts.out + "/manifest.json", opts.config, cfg, "la-trace", opts.workers);
    return 0;
  }
  write_common_outputs(opts.out, opts, cfg, res, abstracted ? "abstract" : "simulate");
  if (abstracted) {
    write_abstraction_report_csv(opts.out + "/abstraction_report.csv", res.slots);
  }
  std::printf("am_tp_mbps=%.6g gm_tp_mbps=%.6g\n", res.metrics.am_tp, res.metrics.gm_tp);
  return 0;
}

// ---------------------------------------------------------------------------
// compare

int cmd_compare(const CommonOpts& opts) {
  SimConfig cfg = load_sim_config(opts);
  const TableSet tables = TableSet::load_dir(cfg.tables_dir);
  const RunResult full = run_full_sim(cfg, tables, opts.workers);
  const RunResult abs = run_abstracted_sim(cfg, tables, opts.workers);

  fs::create_directories(opts.out);
  write_metrics_csv(opts.out + "/metrics_full.csv", full.metrics, cfg);
  write_metrics_csv(opts.out + "/metrics_abstracted.csv", abs.metrics, cfg);
  write_abstraction_report_csv(opts.out + "/abstraction_report.csv", abs.slots);

  std::ofstream out(opts.out + "/agreement.csv");
  if (!out) throw ConfigError("cannot write agreement.csv");
  out << "drop,ue,full_tp,abs_tp,full_bler,abs_bler,bler_ratio\n";
  char buf[200];
  for (int dr = 0; dr < cfg.drops; ++dr) {
    for (int u = 0; u < cfg.n_ue(); ++u) {
      const double fb = full.metrics.cer[dr][u];
      const double ab = abs.metrics.cer[dr][u];
      const double ratio = (fb > 0.0 && ab > 0.0) ? ab / fb : 0.0;
      std::snprintf(buf, sizeof buf, "%d,%d,%.10g,%.10g,%.10g,%.10g,%.10g\n", dr, u,
                    full.metrics.tp[dr][u], abs.metrics.tp[dr][u], fb, ab, ratio);
      out << buf;
    }
  }
  std::snprintf(buf, sizeof buf, "summary,,%.10g,%.10g,,,\n", full.metrics.am_tp,
                abs.metrics.am_tp);
  out << buf;
  write_manifest(opts.out + "/manifest.json", opts.config, cfg, "compare", opts.workers);
  std::printf("full_am_tp=%.6g abstracted_am_tp=%.6g rel_err=%.4g\n", full.metrics.am_tp,
              abs.metrics.am_tp,
              std::abs(full.metrics.am_tp - abs.metrics.am_tp) / std::max(full.metrics.am_tp, 1e-12));
  return 0;
}

// ---------------------------------------------------------------------------
// calibrate-beta: least-squares fit of the per-MCS EESM beta against
// full-sim code-block outcomes.

int cmd_calibrate_beta(const CommonOpts& opts) {
  SimConfig cfg = load_sim_config(opts);
  cfg.record_sinr_lists = true;
  const TableSet tables = TableSet::load_dir(cfg.tables_dir);
  const RunResult full = run_full_sim(cfg, tables, opts.workers);

  struct Sample {
    const std::vector<double>* sinrs;
    int m;
    bool ok;
  };
  std::map<int, std::vector<Sample>> by_mcs;
  for (const auto& rec : full.slots) {
    for (const auto& ur : rec.ue) {
      for (int cb = 0; cb < ur.cb_total; ++cb) {
        by_mcs[ur.mcs_index].push_back({&ur.cb_sinrs[cb], ur.m, ur.cb_ok_flags[cb] != 0});
      }
    }
  }

  // grid search beta per MCS minimizing sum (p_hat - fail)^2
  fs::create_directories(opts.out);
  std::ofstream out(opts.out + "/beta.csv");
  if (!out) throw ConfigError("cannot write beta.csv");
  out << "mcs_index,beta,n_samples\n";
  const McsTable mcs = cfg.mcs_table();
  char buf[96];
  for (const auto& e : mcs.entries()) {
    const auto it = by_mcs.find(e.index);
    double best_beta = 1.0, best_loss = 1e300;
    std::size_t n_samples = 0;
    if (it != by_mcs.end()) {
      n_samples = it->second.size();
      bool approx = false;
      const BmdrCerTable* t = tables.find(e.r, e.n, &approx);
      if (t) {
        for (int g = 0; g <= 60; ++g) {
          const double beta = std::pow(10.0, -1.0 + 2.0 * g / 60.0);  // 0.1 .. 10
          double loss = 0.0;
          for (const Sample& s : it->second) {
            EsmConfig ec{EsmFamily::eesm, beta, beta};
            const EsmResult eff = esm_effective_sinr(*s.sinrs, ec, s.m);
            const double p = cer_at_snr(*t, 10.0 * std::log10(std::max(eff.rho_eff, 1e-300)));
            const double fail = s.ok ? 0.0 : 1.0;
            loss += (p - fail) * (p - fail);
          }
          if (loss < best_loss) {
            best_loss = loss;
            best_beta = beta;
          }
        }
      }
    }
    std::snprintf(buf, sizeof buf, "%d,%.6g,%zu\n", e.index, best_beta, n_samples);
    out << buf;
  }
  write_manifest(opts.out + "/manifest.json", opts.config, cfg, "calibrate-beta", opts.workers);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MU-MIMO uplink link-level simulator (BMDR link adaptation & PHY abstraction)"};
  app.require_subcommand(1);

  CommonOpts opts;
  auto add_common = [&](CLI::App* sub, bool needs_config = true) {
    auto* c = sub->add_option("--config", opts.config, "configuration file (JSON)");
    if (needs_config) c->required();
    sub->add_option("--out", opts.out, "output directory");
    sub->add_option("--workers", opts.workers, "worker threads");
    sub->add_option("--seed", opts.seed, "override config seed");
    sub->add_option("--detector", opts.detector, "restrict to one detector by name");
    sub->add_option("--gamma", opts.gamma, "weighted detector-selection gamma in [0,1]");
  };

  auto* sub_table = app.add_subcommand("build-table", "build BMDR-CER lookup tables");
  add_common(sub_table);
  auto* sub_sim = app.add_subcommand("simulate", "closed-loop full-chain simulation");
  add_common(sub_sim);
  auto* sub_abs = app.add_subcommand("abstract", "closed-loop abstracted simulation");
  add_common(sub_abs);
  auto* sub_cmp = app.add_subcommand("compare", "paired full vs abstracted comparison");
  add_common(sub_cmp);
  auto* sub_beta = app.add_subcommand("calibrate-beta", "fit per-MCS EESM beta");
  add_common(sub_beta);
  auto* sub_trace = app.add_subcommand("la-trace", "single-drop MCS-selection trace");
  add_common(sub_trace);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (sub_table->parsed()) return cmd_build_table(opts);
    if (sub_sim->parsed()) return cmd_simulate(opts, false, false);
    if (sub_abs->parsed()) return cmd_simulate(opts, true, false);
    if (sub_cmp->parsed()) return cmd_compare(opts);
    if (sub_beta->parsed()) return cmd_calibrate_beta(opts);
    if (sub_trace->parsed()) return cmd_simulate(opts, false, true);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
