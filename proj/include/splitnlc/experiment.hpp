#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <iomanip>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "splitnlc/analytic.hpp"
#include "splitnlc/errors.hpp"
#include "splitnlc/fiber.hpp"
#include "splitnlc/frame.hpp"
#include "splitnlc/nlc.hpp"
#include "splitnlc/receiver.hpp"
#include "splitnlc/signal.hpp"
#include "splitnlc/transmitter.hpp"

namespace splitnlc {

using analytic::Scheme;

/// One requested compensation plan.  Keyword plans (tx/rx/split) scale with
/// the span count; explicit "k:r" ratios pin both sides.
struct PlanRequest {
  Scheme scheme = Scheme::kEdc;
  int explicit_tx = -1;  // for "k:r" plans
  int explicit_rx = -1;

  /// Transmitter span count for a link of n spans; -1 marks EDC.
  int resolve_tx_spans(int n_spans) const {
    switch (scheme) {
      case Scheme::kEdc: return -1;
      case Scheme::kTxDbp: return n_spans;
      case Scheme::kRxDbp: return 0;
      case Scheme::kSplit:
        if (explicit_tx >= 0) {
          if (explicit_tx + explicit_rx != n_spans)
            throw ConfigError("plan ratio does not match span count " +
                              std::to_string(n_spans));
          return explicit_tx;
        }
        return half_split_tx_spans(n_spans);
    }
    return -1;
  }

  static PlanRequest parse(const std::string& text) {
    PlanRequest p;
    if (text == "edc") { p.scheme = Scheme::kEdc; return p; }
    if (text == "tx" || text == "tx-dbp") { p.scheme = Scheme::kTxDbp; return p; }
    if (text == "rx" || text == "rx-dbp") { p.scheme = Scheme::kRxDbp; return p; }
    if (text == "split") { p.scheme = Scheme::kSplit; return p; }
    const auto colon = text.find(':');
    if (colon == std::string::npos)
      throw ConfigError("unknown plan '" + text + "' (want edc|tx|rx|split|k:r)");
    try {
      p.explicit_tx = std::stoi(text.substr(0, colon));
      p.explicit_rx = std::stoi(text.substr(colon + 1));
    } catch (const std::exception&) {
      throw ConfigError("bad plan ratio '" + text + "'");
    }
    if (p.explicit_tx < 0 || p.explicit_rx < 0)
      throw ConfigError("negative span count in plan '" + text + "'");
    p.scheme = Scheme::kSplit;
    return p;
  }

  std::string to_string() const {
    if (scheme == Scheme::kSplit && explicit_tx >= 0)
      return std::to_string(explicit_tx) + ":" + std::to_string(explicit_rx);
    return analytic::scheme_label(scheme);
  }
};

/// Scheme label recorded per measurement, derived from the resolved split.
inline std::string scheme_label_for(Scheme scheme, int tx_spans, int n_spans) {
  if (scheme == Scheme::kEdc) return "edc";
  if (tx_spans == n_spans && n_spans > 0) return "tx-dbp";
  if (tx_spans == 0) return "rx-dbp";
  return "split";
}

/// Full experiment description; serializes losslessly to JSON.
struct ExperimentConfig {
  int channel_count = 1;
  double spacing = 50e9;
  double center_wavelength = 1553e-9;
  ModulationSpec modulation;
  LaserSpec tx_laser{100e3, 0.0, 1};
  FiberParams fiber;
  double amp_noise_figure_db = 5.0;
  std::vector<int> span_counts = {13};
  std::vector<PlanRequest> plans = {PlanRequest::parse("edc")};
  double power_min_dbm = 0.0;
  double power_max_dbm = 0.0;
  double power_step_db = 1.0;
  TrxNoiseSpec trx;
  SsfmConfig ssfm;
  std::uint64_t master_seed = 1;
  int realizations = 2;
  int oversample = 4;          // composite samples per symbol
  int cpe_half_window = 0;  // 0 = adaptive
  std::vector<int> split_ks;   // optional subset for sweep_split
  std::string output_path = "results.csv";

  double center_frequency() const { return kSpeedOfLight / center_wavelength; }

  SuperchannelSpec superchannel() const {
    SuperchannelSpec sc;
    sc.channel_count = channel_count;
    sc.spacing = spacing;
    sc.center_wavelength = center_wavelength;
    sc.per_channel.assign(channel_count, modulation);
    return sc;
  }

  double composite_rate() const { return oversample * modulation.symbol_rate; }

  std::vector<double> power_grid() const {
    std::vector<double> g;
    for (double p = power_min_dbm; p <= power_max_dbm + 1e-9; p += power_step_db)
      g.push_back(p);
    return g;
  }

  void validate() const {
    modulation.validate();
    superchannel().validate();
    fiber.validate();
    ssfm.validate();
    if (channel_count < 1) throw ConfigError("channel_count < 1");
    if (span_counts.empty()) throw ConfigError("span_counts empty");
    for (int n : span_counts)
      if (n < 0) throw ConfigError("negative span count");
    if (power_grid().empty()) throw ConfigError("empty power grid");
    if (realizations < 1) throw ConfigError("realizations < 1");
    if (oversample < 2) throw ConfigError("oversample < 2");
    const double occupied = (channel_count - 1) * spacing +
                            (1.0 + modulation.roll_off) * modulation.symbol_rate;
    if (composite_rate() < 1.25 * occupied)
      throw ConfigError("composite rate leaves less than 25% guard band");
  }
};

/// One sweep point, one channel.
struct MeasurementRecord {
  std::string scheme;
  int spans = 0;
  int tx_spans = 0;  // -1 for EDC
  double distance_km = 0.0;
  double power_dbm = 0.0;
  int channel = 0;
  double snr_db = 0.0;
  double snr_x_db = 0.0;
  double snr_y_db = 0.0;
  std::uint64_t seed = 0;
  int realization = 0;
  double wall_time_s = 0.0;  // not serialized
};

inline constexpr const char* kCsvHeader =
    "scheme,spans,tx_spans,distance_km,power_dbm,channel,snr_db,snr_x_db,snr_y_db,seed,"
    "realization";

inline std::string record_to_csv(const MeasurementRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%d,%d,%.4f,%.3f,%d,%.6f,%.6f,%.6f,%llu,%d",
                r.scheme.c_str(), r.spans, r.tx_spans, r.distance_km, r.power_dbm, r.channel,
                r.snr_db, r.snr_x_db, r.snr_y_db,
                static_cast<unsigned long long>(r.seed), r.realization);
  return buf;
}

inline void write_csv(const std::string& path, std::vector<MeasurementRecord> records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const MeasurementRecord& a, const MeasurementRecord& b) {
                     return std::tie(a.scheme, a.spans, a.tx_spans, a.power_dbm, a.channel,
                                     a.realization) <
                            std::tie(b.scheme, b.spans, b.tx_spans, b.power_dbm, b.channel,
                                     b.realization);
                   });
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file " + path);
  out << kCsvHeader << "\r\n";
  for (const auto& r : records) out << record_to_csv(r) << "\r\n";
}

/// Opt-in debug dump of a waveform (CSV, one row per sample).  Waveforms are
/// never persisted by default; sweep outputs carry only the SNR records.
inline void write_waveform_csv(const std::string& path, const DualPolSignal& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open waveform dump " + path);
  out << "# sample_rate_hz=" << std::setprecision(17) << s.sample_rate
      << " center_offset_hz=" << s.center_offset << "\r\n";
  out << "x_re,x_im,y_re,y_im\r\n";
  char buf[160];
  for (std::size_t n = 0; n < s.size(); ++n) {
    std::snprintf(buf, sizeof(buf), "%.9e,%.9e,%.9e,%.9e", s.x[n].real(), s.x[n].imag(),
                  s.y[n].real(), s.y[n].imag());
    out << buf << "\r\n";
  }
}

inline std::vector<MeasurementRecord> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open results file " + path);
  std::string line;
  std::getline(in, line);
  std::vector<MeasurementRecord> records;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    MeasurementRecord r;
    auto next = [&] {
      if (!std::getline(ss, field, ',')) throw ConfigError("short CSV row: " + line);
      return field;
    };
    r.scheme = next();
    r.spans = std::stoi(next());
    r.tx_spans = std::stoi(next());
    r.distance_km = std::stod(next());
    r.power_dbm = std::stod(next());
    r.channel = std::stoi(next());
    r.snr_db = std::stod(next());
    r.snr_x_db = std::stod(next());
    r.snr_y_db = std::stod(next());
    r.seed = std::stoull(next());
    r.realization = std::stoi(next());
    records.push_back(std::move(r));
  }
  return records;
}

// ---------------------------------------------------------------------------
// single sweep point
// ---------------------------------------------------------------------------

/// Run the full chain for one (N, k, power) point.  tx_spans = -1 selects the
/// EDC scheme.  Fully deterministic in (config, seed); every noise stream is
/// derived from the point seed.
inline std::vector<MeasurementRecord> run_point(const ExperimentConfig& cfg, int n_spans,
                                                int tx_spans, double p_dbm,
                                                std::uint64_t point_seed,
                                                DualPolSignal* dump_compensated = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  const bool is_edc = tx_spans < 0;
  if (!is_edc && tx_spans > n_spans) throw ParameterError("run_point: k > N");

  const auto sc = cfg.superchannel();
  LinkSpec link = LinkSpec::uniform(cfg.fiber, n_spans, cfg.amp_noise_figure_db,
                                    cfg.center_frequency());
  const NlcPlan plan = is_edc ? NlcPlan{} : plan_split(n_spans, tx_spans, cfg.ssfm);

  // transmitters: frame, shape, power, laser
  std::vector<TxFrame> frames(cfg.channel_count);
  std::vector<DualPolSignal> waves(cfg.channel_count);
  for (int c = 0; c < cfg.channel_count; ++c) {
    ModulationSpec mod = cfg.modulation;
    mod.prng_seed = seed_hash({point_seed, 0x6672616dULL, static_cast<std::uint64_t>(c)});
    frames[c] = build_frame(mod);
    DualPolSignal w = modulate_channel(frames[c], mod, 2.0 * mod.symbol_rate);
    w = set_mean_power(std::move(w), p_dbm);
    LaserSpec laser = cfg.tx_laser;
    laser.prng_seed = seed_hash({point_seed, 0x6c617372ULL, static_cast<std::uint64_t>(c)});
    w = apply_laser(std::move(w), laser);
    waves[c] = std::move(w);
  }
  DualPolSignal composite = mux_superchannel(waves, sc, cfg.composite_rate());
  waves.clear();
  const double total_dbm = p_dbm + lin_to_db(static_cast<double>(cfg.channel_count));
  composite = set_mean_power(std::move(composite), total_dbm);

  if (!is_edc && plan.tx_spans > 0) {
    composite = precompensate(std::move(composite), link, plan);
  }
  // Transmitter noise rides on the launched (possibly pre-distorted) waveform:
  // the DAC/driver/modulator act after any digital pre-compensation, which is
  // what exposes Tx-DBP to signal-TX-noise beating over the k head spans.
  // White across the composite band, each channel slice sees the per-channel
  // PSD reference.
  if (!(std::isinf(cfg.trx.tx_snr_db) && cfg.trx.tx_snr_db > 0.0)) {
    const double psd = (mean_power_w(composite) / cfg.channel_count) /
                       (db_to_lin(cfg.trx.tx_snr_db) * cfg.modulation.symbol_rate);
    Rng rng(seed_hash({point_seed, 0x74786eULL}));
    add_white_noise(composite, psd, rng);
  }
  if (n_spans > 0) {
    composite = propagate_link(std::move(composite), link, cfg.ssfm,
                               seed_hash({point_seed, 0x6c696e6bULL}));
  }

  FrontEndRef ref;
  ref.reference_power_w = mean_power_w(composite) / cfg.channel_count;
  ref.reference_bandwidth = cfg.modulation.symbol_rate;
  const double half_bw = (1.0 + cfg.modulation.roll_off) * cfg.modulation.symbol_rate / 2.0;
  const int center = (cfg.channel_count - 1) / 2;
  for (int c = 0; c < cfg.channel_count; ++c) {
    if (c == center && cfg.channel_count % 2 == 1) continue;
    const double off = sc.channel_offset(c);
    ref.edge_bands.emplace_back(off - half_bw, off + half_bw);
  }
  composite = coherent_front_end(std::move(composite), cfg.trx, ref,
                                 seed_hash({point_seed, 0x66726f6eULL}));

  if (is_edc) {
    composite = edc(std::move(composite), link);
  } else if (plan.rx_spans() > 0) {
    composite = postcompensate(std::move(composite), link, plan);
  }
  if (dump_compensated) *dump_compensated = composite;

  std::vector<MeasurementRecord> records;
  for (int c = 0; c < cfg.channel_count; ++c) {
    const RxResult rx = receive_channel(composite, sc.channel_offset(c), cfg.modulation,
                                        frames[c], cfg.cpe_half_window);
    MeasurementRecord r;
    r.scheme = is_edc ? "edc" : scheme_label_for(Scheme::kSplit, tx_spans, n_spans);
    r.spans = n_spans;
    r.tx_spans = is_edc ? -1 : tx_spans;
    r.distance_km = link.total_length_km();
    r.power_dbm = p_dbm;
    r.channel = c;
    r.snr_db = rx.snr_db;
    r.snr_x_db = rx.snr_x_db;
    r.snr_y_db = rx.snr_y_db;
    r.seed = point_seed;
    records.push_back(std::move(r));
  }
  const auto t1 = std::chrono::steady_clock::now();
  const double secs = std::chrono::duration<double>(t1 - t0).count();
  for (auto& r : records) r.wall_time_s = secs;
  return records;
}

// ---------------------------------------------------------------------------
// sweep execution
// ---------------------------------------------------------------------------

struct SweepJob {
  int n_spans = 0;
  int tx_spans = -1;  // -1: EDC
  double p_dbm = 0.0;
  int power_index = 0;
  int realization = 0;
};

/// Per-point seed: hash(master, N, k, power index, realization).
inline std::uint64_t point_seed(const ExperimentConfig& cfg, const SweepJob& j) {
  return seed_hash({cfg.master_seed, static_cast<std::uint64_t>(j.n_spans),
                    static_cast<std::uint64_t>(static_cast<std::int64_t>(j.tx_spans)),
                    static_cast<std::uint64_t>(j.power_index),
                    static_cast<std::uint64_t>(j.realization)});
}

/// Execute jobs on a small worker pool.  Job order, seeds and results are
/// independent of the worker count; failed points are reported and skipped.
inline std::vector<MeasurementRecord> run_jobs(const ExperimentConfig& cfg,
                                               const std::vector<SweepJob>& jobs,
                                               int workers = 1) {
  std::vector<std::vector<MeasurementRecord>> slots(jobs.size());
  std::vector<std::string> failures(jobs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const auto& j = jobs[i];
      try {
        slots[i] = run_point(cfg, j.n_spans, j.tx_spans, j.p_dbm, point_seed(cfg, j));
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  std::vector<MeasurementRecord> records;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!failures[i].empty()) {
      std::cerr << "point failed (N=" << jobs[i].n_spans << " k=" << jobs[i].tx_spans
                << " P=" << jobs[i].p_dbm << " dBm r=" << jobs[i].realization
                << "): " << failures[i] << "\n";
      continue;
    }
    for (auto& r : slots[i]) records.push_back(std::move(r));
  }
  return records;
}

inline std::vector<SweepJob> make_jobs(const ExperimentConfig& cfg,
                                       const std::vector<int>& span_counts,
                                       const std::vector<int>& tx_span_choices) {
  const auto powers = cfg.power_grid();
  std::vector<SweepJob> jobs;
  for (int n : span_counts)
    for (int k : tx_span_choices)
      for (std::size_t pi = 0; pi < powers.size(); ++pi)
        for (int r = 0; r < cfg.realizations; ++r)
          jobs.push_back(SweepJob{n, k, powers[pi], static_cast<int>(pi), r});
  return jobs;
}

// ---------------------------------------------------------------------------
// peak extraction and sweep campaigns
// ---------------------------------------------------------------------------

struct PeakFit {
  double p_opt_dbm = 0.0;
  double snr_peak_db = 0.0;
  bool interior = false;  // true when the quadratic fit had both neighbors
};

/// Quadratic fit through the best grid point and its neighbors; stabilizes
/// 0.1 dB-scale comparisons against the power grid granularity.
inline PeakFit fit_peak(const std::vector<std::pair<double, double>>& curve) {
  if (curve.empty()) throw ParameterError("fit_peak: empty curve");
  auto sorted = curve;
  std::sort(sorted.begin(), sorted.end());
  std::size_t best = 0;
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i].second > sorted[best].second) best = i;
  PeakFit fit{sorted[best].first, sorted[best].second, false};
  if (best == 0 || best + 1 == sorted.size()) return fit;
  const double sm = sorted[best - 1].second, s0 = sorted[best].second,
               sp = sorted[best + 1].second;
  const double curv = sm - 2.0 * s0 + sp;
  if (curv >= -1e-12) return fit;
  const double d = (sorted[best + 1].first - sorted[best - 1].first) / 2.0;
  fit.p_opt_dbm = sorted[best].first + d * (sm - sp) / (2.0 * curv);
  fit.snr_peak_db = s0 - (sm - sp) * (sm - sp) / (8.0 * curv);
  fit.interior = true;
  return fit;
}

/// Mean SNR (dB) per power for one (scheme, N, k, channel) slice.
inline std::vector<std::pair<double, double>> snr_vs_power(
    const std::vector<MeasurementRecord>& records, int n_spans, int tx_spans, int channel) {
  std::map<double, std::pair<double, int>> acc;
  for (const auto& r : records) {
    if (r.spans != n_spans || r.tx_spans != tx_spans || r.channel != channel) continue;
    auto& a = acc[r.power_dbm];
    a.first += r.snr_db;
    a.second += 1;
  }
  std::vector<std::pair<double, double>> curve;
  for (const auto& [p, a] : acc) curve.emplace_back(p, a.first / a.second);
  return curve;
}

inline PeakFit peak_for(const std::vector<MeasurementRecord>& records, int n_spans,
                        int tx_spans, int channel) {
  return fit_peak(snr_vs_power(records, n_spans, tx_spans, channel));
}

/// Fig. 2 campaign: SNR vs launch power for every configured plan.
inline std::vector<MeasurementRecord> sweep_power(const ExperimentConfig& cfg,
                                                  int workers = 1) {
  cfg.validate();
  std::vector<MeasurementRecord> records;
  for (int n : cfg.span_counts) {
    std::vector<int> ks;
    for (const auto& p : cfg.plans) ks.push_back(p.resolve_tx_spans(n));
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    auto jobs = make_jobs(cfg, {n}, ks);
    auto part = run_jobs(cfg, jobs, workers);
    records.insert(records.end(), part.begin(), part.end());
  }
  return records;
}

/// Fig. 3 campaign: peak SNR for every split ratio k in 0..N (or the
/// configured subset) plus the EDC baseline.
inline std::vector<MeasurementRecord> sweep_split(const ExperimentConfig& cfg, int n_spans,
                                                  int workers = 1) {
  cfg.validate();
  std::vector<int> ks = cfg.split_ks;
  if (ks.empty())
    for (int k = 0; k <= n_spans; ++k) ks.push_back(k);
  for (int k : ks)
    if (k < 0 || k > n_spans) throw ConfigError("sweep_split: k outside 0..N");
  ks.push_back(-1);  // EDC baseline
  auto jobs = make_jobs(cfg, {n_spans}, ks);
  return run_jobs(cfg, jobs, workers);
}

struct SplitGainRow {
  int tx_spans = 0;
  double peak_snr_db = 0.0;
  double gain_over_edc_db = 0.0;
  double p_opt_dbm = 0.0;
};

/// Peak-SNR gain over the EDC baseline per split ratio (center channel).
inline std::vector<SplitGainRow> split_gain_table(const std::vector<MeasurementRecord>& records,
                                                  int n_spans, int channel) {
  const PeakFit edc_peak = peak_for(records, n_spans, -1, channel);
  std::vector<int> ks;
  for (const auto& r : records)
    if (r.spans == n_spans && r.channel == channel && r.tx_spans >= 0)
      ks.push_back(r.tx_spans);
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  std::vector<SplitGainRow> rows;
  for (int k : ks) {
    const PeakFit pk = peak_for(records, n_spans, k, channel);
    rows.push_back({k, pk.snr_peak_db, pk.snr_peak_db - edc_peak.snr_peak_db, pk.p_opt_dbm});
  }
  return rows;
}

/// Fig. 4 campaign: optimum SNR vs distance for EDC, Tx-DBP, Rx-DBP and the
/// 50% split.
inline std::vector<MeasurementRecord> sweep_distance(const ExperimentConfig& cfg,
                                                     int workers = 1) {
  cfg.validate();
  std::vector<MeasurementRecord> records;
  for (int n : cfg.span_counts) {
    std::vector<int> ks = {-1, 0, half_split_tx_spans(n), n};
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    auto jobs = make_jobs(cfg, {n}, ks);
    auto part = run_jobs(cfg, jobs, workers);
    records.insert(records.end(), part.begin(), part.end());
  }
  return records;
}

// ---------------------------------------------------------------------------
// analytic calibration against sweep results
// ---------------------------------------------------------------------------

/// Budget with everything but eta/xi filled in from the configuration.
inline analytic::NoiseBudget make_budget(const ExperimentConfig& cfg, int n_spans) {
  analytic::NoiseBudget b;
  b.n_spans = n_spans;
  const AmpSpec amp{cfg.fiber.loss_db(), cfg.amp_noise_figure_db, 0};
  b.sigma2_ase_per_span =
      analytic::ase_power_per_span_w(amp, cfg.center_frequency(), cfg.modulation.symbol_rate);
  b.snr_trx_lin = analytic::combined_trx_snr_lin(cfg.trx.tx_snr_db, cfg.trx.rx_snr_db);
  b.span_length_km = cfg.fiber.length_km;
  return b;
}

/// Fit eta (EDC) and xi (from Rx-DBP rows, effective spans = N) jointly over
/// all distances present in the records; center channel only.
inline void calibrate_budget(analytic::NoiseBudget& budget,
                             const std::vector<MeasurementRecord>& records, int channel,
                             double epsilon = 0.0) {
  std::vector<double> ue, re, ux, rx;
  const double inv_trx =
      std::isinf(budget.snr_trx_lin) ? 0.0 : 1.0 / budget.snr_trx_lin;
  for (const auto& r : records) {
    if (r.channel != channel || r.spans < 1) continue;
    const double p = dbm_to_watt(r.power_dbm);
    const double resid =
        1.0 / db_to_lin(r.snr_db) - inv_trx - budget.sigma2_ase_per_span * r.spans / p;
    if (r.tx_spans == -1) {
      ue.push_back(std::pow(static_cast<double>(r.spans), 1.0 + epsilon) * p * p);
      re.push_back(resid);
    } else if (r.tx_spans == 0) {
      ux.push_back(static_cast<double>(r.spans) * p * p);
      rx.push_back(resid);
    }
  }
  auto fit2 = [](const std::vector<double>& u, const std::vector<double>& r) {
    double s1 = 0, su = 0, suu = 0, sr = 0, sur = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      s1 += 1.0;
      su += u[i];
      suu += u[i] * u[i];
      sr += r[i];
      sur += u[i] * r[i];
    }
    const double det = s1 * suu - su * su;
    if (u.size() < 3 || det <= 0.0)
      throw CalibrationError("calibrate_budget: not enough sweep points");
    const double coeff = (s1 * sur - su * sr) / det;
    if (!(coeff > 0.0)) throw CalibrationError("calibrate_budget: coefficient not positive");
    return coeff;
  };
  budget.epsilon = epsilon;
  if (!ue.empty()) budget.eta = fit2(ue, re);
  if (!ux.empty()) budget.xi = fit2(ux, rx);
}

// ---------------------------------------------------------------------------
// back-to-back calibration
// ---------------------------------------------------------------------------

/// Solve for tx/rx AWGN levels hitting a target back-to-back SNR at a given
/// share of the noise power assigned to the transmitter (1.0 = tx only).
/// Bisects the combined level; the tx:rx power ratio is held fixed.
inline TrxNoiseSpec calibrate_b2b(const ExperimentConfig& base, double target_snr_db,
                                  double tx_noise_share, double tolerance_db = 0.1) {
  if (tx_noise_share < 0.0 || tx_noise_share > 1.0)
    throw ParameterError("calibrate_b2b: tx share outside [0,1]");
  ExperimentConfig cfg = base;
  auto spec_for = [&](double combined_db) {
    TrxNoiseSpec t = base.trx;
    const double n_tot = db_to_lin(-combined_db);
    t.tx_snr_db = tx_noise_share > 0.0 ? -lin_to_db(tx_noise_share * n_tot)
                                       : std::numeric_limits<double>::infinity();
    t.rx_snr_db = tx_noise_share < 1.0 ? -lin_to_db((1.0 - tx_noise_share) * n_tot)
                                       : std::numeric_limits<double>::infinity();
    return t;
  };
  auto measure_once = [&](std::uint64_t sub) {
    const auto recs = run_point(cfg, 0, -1, cfg.power_min_dbm,
                                seed_hash({cfg.master_seed, 0x623262ULL, sub}));
    const int center = (cfg.channel_count - 1) / 2;
    for (const auto& r : recs)
      if (r.channel == center) return r.snr_db;
    throw CalibrationError("calibrate_b2b: no center channel record");
  };
  auto measure = [&](double combined_db) {
    cfg.trx = spec_for(combined_db);
    return 0.5 * (measure_once(0) + measure_once(1));
  };

  cfg.trx.tx_snr_db = std::numeric_limits<double>::infinity();
  cfg.trx.rx_snr_db = std::numeric_limits<double>::infinity();
  const double floor_db = 0.5 * (measure_once(0) + measure_once(1));
  if (target_snr_db > floor_db - 0.2)
    throw CalibrationError("calibrate_b2b: target above the implementation floor");

  double lo = target_snr_db - 3.0, hi = target_snr_db + 3.0;
  while (measure(hi) < target_snr_db) hi += 3.0;
  while (measure(lo) > target_snr_db) lo -= 3.0;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double got = measure(mid);
    if (std::abs(got - target_snr_db) <= tolerance_db * 0.5) return spec_for(mid);
    (got < target_snr_db ? lo : hi) = mid;
    if (hi - lo < 1e-4) break;
  }
  const double mid = 0.5 * (lo + hi);
  if (std::abs(measure(mid) - target_snr_db) > tolerance_db)
    throw CalibrationError("calibrate_b2b: did not converge");
  return spec_for(mid);
}

// ---------------------------------------------------------------------------
// JSON configuration
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["channels"] = c.channel_count;
  j["spacing_hz"] = c.spacing;
  j["center_wavelength_m"] = c.center_wavelength;
  j["modulation"] = {{"qam_order", c.modulation.qam_order},
                     {"symbol_rate_hz", c.modulation.symbol_rate},
                     {"roll_off", c.modulation.roll_off},
                     {"payload_symbols", c.modulation.payload_symbols},
                     {"preamble_symbols", c.modulation.pilot_preamble_len},
                     {"pilot_rate_inverse", c.modulation.pilot_rate_inverse}};
  j["tx_laser"] = {{"linewidth_hz", c.tx_laser.linewidth},
                   {"frequency_offset_hz", c.tx_laser.frequency_offset}};
  j["fiber"] = {{"span_length_km", c.fiber.length_km},
                {"attenuation_db_per_km", c.fiber.attenuation_db_per_km},
                {"dispersion_ps_nm_km", c.fiber.dispersion_ps_nm_km},
                {"gamma_per_w_km", c.fiber.gamma_per_w_km},
                {"manakov_factor", c.fiber.manakov_factor}};
  j["amp"] = {{"noise_figure_db", c.amp_noise_figure_db}};
  j["span_counts"] = c.span_counts;
  std::vector<std::string> plans;
  for (const auto& p : c.plans) plans.push_back(p.to_string());
  j["plans"] = plans;
  j["power_sweep"] = {{"min_dbm", c.power_min_dbm},
                      {"max_dbm", c.power_max_dbm},
                      {"step_db", c.power_step_db}};
  auto snr_or_inf = [](double v) {
    return std::isinf(v) ? nlohmann::json("inf") : nlohmann::json(v);
  };
  j["trx"] = {{"tx_snr_db", snr_or_inf(c.trx.tx_snr_db)},
              {"rx_snr_db", snr_or_inf(c.trx.rx_snr_db)},
              {"lo_linewidth_hz", c.trx.lo.linewidth},
              {"lo_frequency_offset_hz", c.trx.lo.frequency_offset},
              {"edge_rx_penalty_db", c.trx.edge_rx_penalty_db}};
  j["ssfm"] = {{"steps_per_span", c.ssfm.steps_per_span},
               {"step_distribution",
                c.ssfm.step_distribution == StepDistribution::kUniform ? "uniform"
                                                                       : "logarithmic"}};
  j["seeds"] = {{"master", c.master_seed}, {"realizations", c.realizations}};
  j["sim"] = {{"oversample", c.oversample}, {"cpe_half_window", c.cpe_half_window}};
  if (!c.split_ks.empty()) j["split_ks"] = c.split_ks;
  j["output"] = c.output_path;
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    c.channel_count = j.at("channels").get<int>();
    c.spacing = j.at("spacing_hz").get<double>();
    c.center_wavelength = j.at("center_wavelength_m").get<double>();
    const auto& m = j.at("modulation");
    c.modulation.qam_order = m.at("qam_order").get<int>();
    c.modulation.symbol_rate = m.at("symbol_rate_hz").get<double>();
    c.modulation.roll_off = m.at("roll_off").get<double>();
    c.modulation.payload_symbols = m.at("payload_symbols").get<int>();
    c.modulation.pilot_preamble_len = m.at("preamble_symbols").get<int>();
    c.modulation.pilot_rate_inverse = m.at("pilot_rate_inverse").get<int>();
    const auto& l = j.at("tx_laser");
    c.tx_laser.linewidth = l.at("linewidth_hz").get<double>();
    c.tx_laser.frequency_offset = l.at("frequency_offset_hz").get<double>();
    const auto& f = j.at("fiber");
    c.fiber.length_km = f.at("span_length_km").get<double>();
    c.fiber.attenuation_db_per_km = f.at("attenuation_db_per_km").get<double>();
    c.fiber.dispersion_ps_nm_km = f.at("dispersion_ps_nm_km").get<double>();
    c.fiber.gamma_per_w_km = f.at("gamma_per_w_km").get<double>();
    c.fiber.manakov_factor = f.value("manakov_factor", 8.0 / 9.0);
    c.fiber.reference_wavelength = c.center_wavelength;
    c.amp_noise_figure_db = j.at("amp").at("noise_figure_db").get<double>();
    c.span_counts = j.at("span_counts").get<std::vector<int>>();
    c.plans.clear();
    for (const auto& p : j.at("plans")) c.plans.push_back(PlanRequest::parse(p.get<std::string>()));
    const auto& pw = j.at("power_sweep");
    c.power_min_dbm = pw.at("min_dbm").get<double>();
    c.power_max_dbm = pw.at("max_dbm").get<double>();
    c.power_step_db = pw.at("step_db").get<double>();
    const auto& t = j.at("trx");
    c.trx.tx_snr_db = t.at("tx_snr_db").is_string()
                          ? std::numeric_limits<double>::infinity()
                          : t.at("tx_snr_db").get<double>();
    c.trx.rx_snr_db = t.at("rx_snr_db").is_string()
                          ? std::numeric_limits<double>::infinity()
                          : t.at("rx_snr_db").get<double>();
    c.trx.lo.linewidth = t.at("lo_linewidth_hz").get<double>();
    c.trx.lo.frequency_offset = t.value("lo_frequency_offset_hz", 0.0);
    c.trx.edge_rx_penalty_db = t.value("edge_rx_penalty_db", 2.0);
    const auto& s = j.at("ssfm");
    c.ssfm.steps_per_span = s.at("steps_per_span").get<int>();
    const std::string dist = s.value("step_distribution", "uniform");
    if (dist == "uniform") c.ssfm.step_distribution = StepDistribution::kUniform;
    else if (dist == "logarithmic") c.ssfm.step_distribution = StepDistribution::kLogarithmic;
    else throw ConfigError("unknown step_distribution '" + dist + "'");
    c.master_seed = j.at("seeds").at("master").get<std::uint64_t>();
    c.realizations = j.at("seeds").at("realizations").get<int>();
    c.oversample = j.at("sim").value("oversample", 4);
    c.cpe_half_window = j.at("sim").value("cpe_half_window", 0);
    if (j.contains("split_ks")) c.split_ks = j.at("split_ks").get<std::vector<int>>();
    c.output_path = j.value("output", std::string("results.csv"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }
  return config_from_json(j);
}

/// Sidecar with the calibrated analytic overlay, written next to distance
/// sweep results so the dashed-line annotation is reproducible.  Coefficients
/// that could not be resolved from the sweep serialize as null.
inline void write_analytic_sidecar(const std::string& csv_path,
                                   const analytic::NoiseBudget& budget,
                                   const analytic::Crossover& crossover) {
  nlohmann::json j;
  j["model"] = "calibrated first-order budget (not the closed-form theory)";
  j["eta_per_w2"] = budget.eta;
  j["xi_per_w2"] = budget.xi;
  j["epsilon"] = budget.epsilon;
  j["sigma2_ase_per_span_w"] = budget.sigma2_ase_per_span;
  j["snr_trx_db"] = std::isinf(budget.snr_trx_lin) ? nlohmann::json("inf")
                                                   : nlohmann::json(lin_to_db(budget.snr_trx_lin));
  j["crossover_found"] = crossover.found;
  j["crossover_spans"] = crossover.spans;
  j["crossover_km"] = crossover.distance_km;
  if (std::isnan(budget.xi))
    j["note"] = "xi not resolvable from this sweep; crossover not evaluated";
  std::ofstream out(csv_path + ".analytic.json");
  out << j.dump(2) << "\n";
}

}  // namespace splitnlc
