// Command-line front end: single points, the three sweep campaigns,
// back-to-back calibration, analytic prediction and plot-series export.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "splitnlc/splitnlc.hpp"

namespace {

using namespace splitnlc;

struct CommonOpts {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 1;
  int steps_per_span = 0;
};

ExperimentConfig load_with_overrides(const CommonOpts& o) {
  ExperimentConfig cfg = load_config(o.config_path);
  if (o.seed_set) cfg.master_seed = o.seed;
  if (o.steps_per_span > 0) cfg.ssfm.steps_per_span = o.steps_per_span;
  if (!o.out_path.empty()) cfg.output_path = o.out_path;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* app, CommonOpts& o) {
  app->add_option("--config", o.config_path, "experiment config (JSON)")->required();
  app->add_option("--out", o.out_path, "output path (overrides config)");
  app->add_option("--seed", o.seed, "master seed (overrides config)")
      ->each([&](const std::string&) { o.seed_set = true; });
  app->add_option("--workers", o.workers, "worker threads for sweep points");
  app->add_option("--steps-per-span", o.steps_per_span, "SSFM steps per span override");
}

void report_peaks(const std::vector<MeasurementRecord>& records, int channel) {
  std::set<std::pair<int, int>> keys;
  for (const auto& r : records)
    if (r.channel == channel) keys.emplace(r.spans, r.tx_spans);
  for (const auto& [n, k] : keys) {
    const auto peak = peak_for(records, n, k, channel);
    const std::string label = k < 0 ? "edc" : (std::to_string(k) + ":" + std::to_string(n - k));
    std::printf("N=%-3d plan=%-7s peak SNR %.3f dB at %+.2f dBm%s\n", n, label.c_str(),
                peak.snr_peak_db, peak.p_opt_dbm, peak.interior ? "" : " (grid edge)");
  }
}

int cmd_run(const CommonOpts& o, int n_spans, const std::string& plan_text, double p_dbm,
            const std::string& dump_path) {
  ExperimentConfig cfg = load_with_overrides(o);
  const PlanRequest plan = PlanRequest::parse(plan_text);
  const int k = plan.resolve_tx_spans(n_spans);
  const SweepJob job{n_spans, k, p_dbm, 0, 0};
  DualPolSignal dump;
  const auto records = run_point(cfg, n_spans, k, p_dbm, point_seed(cfg, job),
                                 dump_path.empty() ? nullptr : &dump);
  if (!dump_path.empty()) {
    write_waveform_csv(dump_path, dump);
    std::printf("dumped compensated waveform to %s (%zu samples)\n", dump_path.c_str(),
                dump.size());
  }
  for (const auto& r : records)
    std::printf("channel %d: SNR %.3f dB (x %.3f, y %.3f)  [%.1f s]\n", r.channel, r.snr_db,
                r.snr_x_db, r.snr_y_db, r.wall_time_s);
  if (!cfg.output_path.empty()) write_csv(cfg.output_path, records);
  return 0;
}

int cmd_sweep(const CommonOpts& o, const std::string& mode, int split_spans) {
  ExperimentConfig cfg = load_with_overrides(o);
  const int center = (cfg.channel_count - 1) / 2;
  std::vector<MeasurementRecord> records;
  if (mode == "power") {
    records = sweep_power(cfg, o.workers);
  } else if (mode == "split") {
    const int n = split_spans > 0 ? split_spans : cfg.span_counts.front();
    records = sweep_split(cfg, n, o.workers);
    write_csv(cfg.output_path, records);
    const auto table = split_gain_table(records, n, center);
    std::string gains_path = cfg.output_path + ".gains.csv";
    std::ofstream gains(gains_path);
    gains << "tx_spans,rx_spans,peak_snr_db,gain_over_edc_db,p_opt_dbm\r\n";
    for (const auto& row : table) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%d,%d,%.6f,%.6f,%.3f", row.tx_spans,
                    n - row.tx_spans, row.peak_snr_db, row.gain_over_edc_db, row.p_opt_dbm);
      gains << buf << "\r\n";
    }
    std::printf("wrote %s and %s\n", cfg.output_path.c_str(), gains_path.c_str());
    report_peaks(records, center);
    return 0;
  } else if (mode == "distance") {
    records = sweep_distance(cfg, o.workers);
    write_csv(cfg.output_path, records);
    if (!std::isinf(analytic::combined_trx_snr_lin(cfg.trx.tx_snr_db, cfg.trx.rx_snr_db))) {
      analytic::NoiseBudget budget = make_budget(cfg, cfg.span_counts.front());
      try {
        calibrate_budget(budget, records, center);
      } catch (const CalibrationError& e) {
        std::cerr << "analytic calibration incomplete: " << e.what() << "\n";
      }
      analytic::Crossover crossover;
      if (!std::isnan(budget.xi)) crossover = analytic::crossover_distance(budget);
      write_analytic_sidecar(cfg.output_path, budget, crossover);
      if (crossover.found)
        std::printf("analytic TRX/ASE-beating crossover: %d spans (%.0f km)\n",
                    crossover.spans, crossover.distance_km);
    }
    report_peaks(records, center);
    return 0;
  } else {
    std::cerr << "unknown sweep mode '" << mode << "' (power|split|distance)\n";
    return 2;
  }
  write_csv(cfg.output_path, records);
  std::printf("wrote %s (%zu rows)\n", cfg.output_path.c_str(), records.size());
  report_peaks(records, center);
  return 0;
}

int cmd_calibrate(const CommonOpts& o, double target_db, double tx_share) {
  ExperimentConfig cfg = load_with_overrides(o);
  const TrxNoiseSpec trx = calibrate_b2b(cfg, target_db, tx_share);
  nlohmann::json j;
  j["tx_snr_db"] = std::isinf(trx.tx_snr_db) ? nlohmann::json("inf")
                                             : nlohmann::json(trx.tx_snr_db);
  j["rx_snr_db"] = std::isinf(trx.rx_snr_db) ? nlohmann::json("inf")
                                             : nlohmann::json(trx.rx_snr_db);
  j["target_b2b_snr_db"] = target_db;
  j["tx_noise_share"] = tx_share;
  std::cout << j.dump(2) << "\n";
  if (!o.out_path.empty()) {
    std::ofstream out(o.out_path);
    out << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_predict(const CommonOpts& o, const std::string& results_path) {
  ExperimentConfig cfg = load_with_overrides(o);
  analytic::NoiseBudget budget = make_budget(cfg, cfg.span_counts.front());
  const int center = (cfg.channel_count - 1) / 2;
  if (!results_path.empty()) {
    calibrate_budget(budget, read_csv(results_path), center);
  } else {
    throw ConfigError("predict needs --results with EDC and Rx-DBP sweep rows");
  }
  std::string path = cfg.output_path.empty() ? "predict.csv" : cfg.output_path;
  std::ofstream out(path);
  out << "scheme,spans,tx_spans,distance_km,p_opt_dbm,peak_snr_db\r\n";
  for (int n : cfg.span_counts) {
    analytic::NoiseBudget b = budget;
    b.n_spans = n;
    struct Row { Scheme s; int k; };
    const Row rows[] = {{Scheme::kEdc, -1},
                        {Scheme::kTxDbp, n},
                        {Scheme::kRxDbp, 0},
                        {Scheme::kSplit, half_split_tx_spans(n)}};
    for (const auto& row : rows) {
      const double p_opt = analytic::optimal_power_dbm(b, row.s, row.k);
      const double snr = analytic::budget_snr_db(b, row.s, row.k, p_opt);
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%s,%d,%d,%.4f,%.3f,%.6f",
                    analytic::scheme_label(row.s).c_str(), n, row.k,
                    n * cfg.fiber.length_km, p_opt, snr);
      out << buf << "\r\n";
    }
  }
  const auto crossover = analytic::crossover_distance(budget);
  write_analytic_sidecar(path, budget, crossover);
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

int cmd_plot(const CommonOpts& o, const std::string& results_path, const std::string& prefix) {
  ExperimentConfig cfg = load_with_overrides(o);
  const auto records = read_csv(results_path);
  const int center = (cfg.channel_count - 1) / 2;

  std::set<std::pair<int, int>> keys;
  for (const auto& r : records)
    if (r.channel == center) keys.emplace(r.spans, r.tx_spans);

  // per-plan SNR vs power series
  std::set<std::string> series_written;
  for (const auto& [n, k] : keys) {
    const auto curve = snr_vs_power(records, n, k, center);
    const std::string label = k < 0 ? "edc" : std::to_string(k) + "-" + std::to_string(n - k);
    const std::string path = prefix + "_power_N" + std::to_string(n) + "_" + label + ".csv";
    std::ofstream out(path);
    out << "power_dbm,snr_db\r\n";
    for (const auto& [p, s] : curve) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.3f,%.6f", p, s);
      out << buf << "\r\n";
    }
    series_written.insert(path);
  }

  // optimum-SNR vs distance series per scheme label
  std::map<std::string, std::map<int, PeakFit>> by_scheme;
  for (const auto& [n, k] : keys) {
    const std::string label = k < 0 ? "edc"
                                    : (k == 0 ? "rx-dbp" : (k == n ? "tx-dbp" : "split"));
    by_scheme[label][n] = peak_for(records, n, k, center);
  }
  for (const auto& [label, rows] : by_scheme) {
    if (rows.size() < 2) continue;
    const std::string path = prefix + "_distance_" + label + ".csv";
    std::ofstream out(path);
    out << "spans,distance_km,p_opt_dbm,peak_snr_db\r\n";
    for (const auto& [n, peak] : rows) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%d,%.4f,%.3f,%.6f", n, n * cfg.fiber.length_km,
                    peak.p_opt_dbm, peak.snr_peak_db);
      out << buf << "\r\n";
    }
    series_written.insert(path);
  }
  std::printf("wrote %zu series files with prefix %s\n", series_written.size(), prefix.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"split nonlinearity compensation transmission simulator"};
  app.require_subcommand(1);

  CommonOpts o;
  int n_spans = 13;
  std::string plan_text = "edc";
  double p_dbm = 0.0;
  int split_spans = 0;
  double target_db = 22.0, tx_share = 0.5;
  std::string results_path, prefix = "series", sweep_mode, dump_path;

  auto* run = app.add_subcommand("run", "simulate a single sweep point");
  add_common(run, o);
  run->add_option("--spans", n_spans, "span count N")->required();
  run->add_option("--plan", plan_text, "edc | tx | rx | split | k:r")->required();
  run->add_option("--power", p_dbm, "launch power per channel, dBm")->required();
  run->add_option("--dump-waveform", dump_path, "write the compensated waveform to CSV");

  auto* sweep = app.add_subcommand("sweep", "run a sweep campaign");
  add_common(sweep, o);
  sweep->add_option("mode", sweep_mode, "power | split | distance")->required();
  sweep->add_option("--split-spans", split_spans, "span count for the split sweep");

  auto* cal = app.add_subcommand("calibrate", "solve tx/rx noise for a target B2B SNR");
  add_common(cal, o);
  cal->add_option("--target-snr", target_db, "back-to-back SNR target, dB")->required();
  cal->add_option("--tx-share", tx_share, "share of noise power at the transmitter [0,1]");

  auto* pred = app.add_subcommand("predict", "analytic budget per scheme and distance");
  add_common(pred, o);
  pred->add_option("--results", results_path, "sweep CSV to calibrate eta/xi against");

  auto* plot = app.add_subcommand("plot", "emit per-figure CSV series from results");
  add_common(plot, o);
  plot->add_option("--results", results_path, "sweep CSV")->required();
  plot->add_option("--prefix", prefix, "series file prefix");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(o, n_spans, plan_text, p_dbm, dump_path);
    if (sweep->parsed()) return cmd_sweep(o, sweep_mode, split_spans);
    if (cal->parsed()) return cmd_calibrate(o, target_db, tx_share);
    if (pred->parsed()) return cmd_predict(o, results_path);
    if (plot->parsed()) return cmd_plot(o, results_path, prefix);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return 2;
  } catch (const AliasingError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const SyncError& e) {
    std::cerr << "sync failure: " << e.what() << "\n";
    return 4;
  } catch (const CalibrationError& e) {
    std::cerr << "calibration failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
