#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "splitnlc/experiment.hpp"

using namespace splitnlc;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.channel_count = 1;
  c.modulation.payload_symbols = 4096;
  c.span_counts = {2};
  c.plans = {PlanRequest::parse("edc"), PlanRequest::parse("rx"), PlanRequest::parse("split")};
  c.power_min_dbm = 0.0;
  c.power_max_dbm = 1.0;
  c.power_step_db = 1.0;
  c.trx.tx_snr_db = 25.0;
  c.trx.rx_snr_db = 25.0;
  c.trx.lo.linewidth = 0.0;
  c.tx_laser.linewidth = 0.0;
  c.ssfm.steps_per_span = 50;
  c.realizations = 1;
  c.master_seed = 7;
  return c;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("config round-trips through JSON losslessly", "[experiment]") {
  auto c = small_config();
  c.split_ks = {0, 1, 2};
  const auto j1 = to_json(c);
  const auto c2 = config_from_json(j1);
  const auto j2 = to_json(c2);
  REQUIRE(j1.dump() == j2.dump());
}

TEST_CASE("plan parsing covers keywords and explicit ratios", "[experiment]") {
  REQUIRE(PlanRequest::parse("edc").resolve_tx_spans(13) == -1);
  REQUIRE(PlanRequest::parse("tx").resolve_tx_spans(13) == 13);
  REQUIRE(PlanRequest::parse("rx").resolve_tx_spans(13) == 0);
  REQUIRE(PlanRequest::parse("split").resolve_tx_spans(13) == 7);
  REQUIRE(PlanRequest::parse("5:8").resolve_tx_spans(13) == 5);
  REQUIRE_THROWS_AS(PlanRequest::parse("5:8").resolve_tx_spans(12), ConfigError);
  REQUIRE_THROWS_AS(PlanRequest::parse("five:eight"), ConfigError);
  REQUIRE_THROWS_AS(PlanRequest::parse("nonsense"), ConfigError);
  REQUIRE(scheme_label_for(Scheme::kSplit, 13, 13) == "tx-dbp");
  REQUIRE(scheme_label_for(Scheme::kSplit, 0, 13) == "rx-dbp");
  REQUIRE(scheme_label_for(Scheme::kSplit, 5, 13) == "split");
}

TEST_CASE("per-point seeds differ across every job coordinate", "[experiment]") {
  const auto cfg = small_config();
  const std::uint64_t base = point_seed(cfg, SweepJob{4, 2, 0.0, 3, 1});
  REQUIRE(point_seed(cfg, SweepJob{5, 2, 0.0, 3, 1}) != base);
  REQUIRE(point_seed(cfg, SweepJob{4, 3, 0.0, 3, 1}) != base);
  REQUIRE(point_seed(cfg, SweepJob{4, 2, 0.0, 4, 1}) != base);
  REQUIRE(point_seed(cfg, SweepJob{4, 2, 0.0, 3, 2}) != base);
  ExperimentConfig other = cfg;
  other.master_seed = 8;
  REQUIRE(point_seed(other, SweepJob{4, 2, 0.0, 3, 1}) != base);
}

TEST_CASE("back-to-back point reproduces the TRX noise bookkeeping", "[experiment]") {
  auto cfg = small_config();
  cfg.modulation.payload_symbols = 15360;
  const auto records = run_point(cfg, 0, -1, 0.0, 1234);
  REQUIRE(records.size() == 1);
  REQUIRE(records[0].snr_db == Catch::Approx(22.0).margin(0.2));
  REQUIRE(records[0].spans == 0);
  REQUIRE(records[0].distance_km == 0.0);
}

TEST_CASE("noiseless chain floor exceeds 35 dB", "[experiment]") {
  auto cfg = small_config();
  cfg.trx.tx_snr_db = std::numeric_limits<double>::infinity();
  cfg.trx.rx_snr_db = std::numeric_limits<double>::infinity();
  cfg.amp_noise_figure_db = -std::numeric_limits<double>::infinity();
  for (int k : {0, 1, 2}) {
    const auto records = run_point(cfg, 2, k, -6.0, 99);
    REQUIRE(records[0].snr_db >= 35.0);
  }
}

TEST_CASE("records carry the resolved scheme labels", "[experiment]") {
  auto cfg = small_config();
  const auto e = run_point(cfg, 2, -1, 0.0, 5);
  const auto r = run_point(cfg, 2, 0, 0.0, 5);
  const auto s = run_point(cfg, 2, 1, 0.0, 5);
  const auto t = run_point(cfg, 2, 2, 0.0, 5);
  REQUIRE(e[0].scheme == "edc");
  REQUIRE(r[0].scheme == "rx-dbp");
  REQUIRE(s[0].scheme == "split");
  REQUIRE(t[0].scheme == "tx-dbp");
  REQUIRE(e[0].tx_spans == -1);
  REQUIRE(t[0].tx_spans == 2);
  REQUIRE(e[0].distance_km == Catch::Approx(2 * 76.96));
}

TEST_CASE("CSV writing is canonical and parses back", "[experiment]") {
  std::vector<MeasurementRecord> records;
  MeasurementRecord r;
  r.scheme = "edc";
  r.spans = 2;
  r.tx_spans = -1;
  r.distance_km = 153.92;
  r.channel = 0;
  r.seed = 42;
  for (double p : {1.0, 0.0}) {
    r.power_dbm = p;
    r.snr_db = 20.0 + p;
    r.snr_x_db = r.snr_db - 0.1;
    r.snr_y_db = r.snr_db + 0.1;
    records.push_back(r);
  }
  const std::string path = "/tmp/splitnlc_test.csv";
  write_csv(path, records);
  const auto text = slurp(path);
  REQUIRE(text.rfind("scheme,spans,tx_spans,distance_km,power_dbm,channel,snr_db,"
                     "snr_x_db,snr_y_db,seed,realization\r\n", 0) == 0);
  const auto back = read_csv(path);
  REQUIRE(back.size() == 2);
  REQUIRE(back[0].power_dbm < back[1].power_dbm);  // sorted
  REQUIRE(back[0].snr_db == Catch::Approx(20.0));
  REQUIRE(back[1].seed == 42);
}

TEST_CASE("sweep output is byte-identical across worker counts", "[experiment]") {
  auto cfg = small_config();
  cfg.modulation.payload_symbols = 2048;
  const auto jobs = make_jobs(cfg, {1}, {-1, 0});
  const auto a = run_jobs(cfg, jobs, 1);
  const auto b = run_jobs(cfg, jobs, 3);
  write_csv("/tmp/splitnlc_det_a.csv", a);
  write_csv("/tmp/splitnlc_det_b.csv", b);
  REQUIRE(slurp("/tmp/splitnlc_det_a.csv") == slurp("/tmp/splitnlc_det_b.csv"));
}

TEST_CASE("quadratic peak fit refines the grid maximum", "[experiment]") {
  // synthetic parabola: peak at 1.7 dBm, value 23.4 dB
  std::vector<std::pair<double, double>> curve;
  for (double p = -2.0; p <= 5.0; p += 1.0)
    curve.emplace_back(p, 23.4 - 0.2 * (p - 1.7) * (p - 1.7));
  const auto fit = fit_peak(curve);
  REQUIRE(fit.interior);
  REQUIRE(fit.p_opt_dbm == Catch::Approx(1.7).margin(1e-9));
  REQUIRE(fit.snr_peak_db == Catch::Approx(23.4).margin(1e-9));

  // monotone curve: falls back to the grid edge
  std::vector<std::pair<double, double>> mono;
  for (double p = -2.0; p <= 2.0; p += 1.0) mono.emplace_back(p, 10.0 + p);
  const auto edge = fit_peak(mono);
  REQUIRE_FALSE(edge.interior);
  REQUIRE(edge.p_opt_dbm == 2.0);
}

TEST_CASE("calibrate_b2b closes the loop on its target", "[experiment]") {
  auto cfg = small_config();
  cfg.modulation.payload_symbols = 15360;
  const auto trx = calibrate_b2b(cfg, 20.0, 0.5);
  REQUIRE(trx.tx_snr_db == Catch::Approx(trx.rx_snr_db).margin(1e-9));  // equal split
  auto check = cfg;
  check.trx = trx;
  const auto records = run_point(check, 0, -1, 0.0, 4321);
  REQUIRE(records[0].snr_db == Catch::Approx(20.0).margin(0.1));

  // tx-only split leaves the rx side clean
  const auto tx_only = calibrate_b2b(cfg, 20.0, 1.0);
  REQUIRE(std::isinf(tx_only.rx_snr_db));
  REQUIRE(tx_only.tx_snr_db == Catch::Approx(20.0).margin(0.5));
  REQUIRE_THROWS_AS(calibrate_b2b(cfg, 55.0, 0.5), CalibrationError);
}

TEST_CASE("config validation rejects inconsistent settings", "[experiment]") {
  auto c = small_config();
  c.power_min_dbm = 5.0;
  c.power_max_dbm = 0.0;
  REQUIRE_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.oversample = 1;
  REQUIRE_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.channel_count = 5;
  // five 50 GHz channels exceed the 4x49.5 GHz composite band
  REQUIRE_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("config JSON keeps infinite SNR sentinels", "[experiment]") {
  auto c = small_config();
  c.trx.tx_snr_db = std::numeric_limits<double>::infinity();
  const auto j = to_json(c);
  REQUIRE(j["trx"]["tx_snr_db"] == "inf");
  const auto back = config_from_json(j);
  REQUIRE(std::isinf(back.trx.tx_snr_db));
  REQUIRE(back.trx.rx_snr_db == Catch::Approx(25.0));
}

TEST_CASE("EDC in the linear regime loses 10 log10(N2/N1) per span growth",
          "[experiment][slow]") {
  auto cfg = small_config();
  cfg.modulation.payload_symbols = 7168;
  cfg.trx.tx_snr_db = std::numeric_limits<double>::infinity();
  cfg.trx.rx_snr_db = std::numeric_limits<double>::infinity();
  cfg.ssfm.steps_per_span = 60;
  const double p = -6.0;  // well below the EDC optimum
  const auto a = run_point(cfg, 2, -1, p, 11);
  const auto b = run_point(cfg, 8, -1, p, 12);
  const double drop = a[0].snr_db - b[0].snr_db;
  REQUIRE(drop == Catch::Approx(10.0 * std::log10(8.0 / 2.0)).margin(0.3));
}
