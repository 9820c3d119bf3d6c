#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "splitnlc/errors.hpp"
#include "splitnlc/fiber.hpp"
#include "splitnlc/signal.hpp"

namespace splitnlc::analytic {

enum class Scheme { kEdc, kTxDbp, kRxDbp, kSplit };

inline std::string scheme_label(Scheme s) {
  switch (s) {
    case Scheme::kEdc: return "edc";
    case Scheme::kTxDbp: return "tx-dbp";
    case Scheme::kRxDbp: return "rx-dbp";
    case Scheme::kSplit: return "split";
  }
  return "?";
}

/// First-order noise budget for one link configuration.  The only structural
/// commitments are the cubic signal power law and the per-scheme effective
/// span counts (N for Rx-DBP, N-1 for Tx-DBP, max(k, N-k) for a split); eta
/// and xi are calibrated against simulation sweeps, not taken from theory.
struct NoiseBudget {
  int n_spans = 0;
  double sigma2_ase_per_span = 0.0;  // W in the signal bandwidth, both pols
  double snr_trx_lin = std::numeric_limits<double>::infinity();
  double eta = std::numeric_limits<double>::quiet_NaN();  // 1/W^2, EDC NLI
  double xi = std::numeric_limits<double>::quiet_NaN();   // 1/W^2 per beating span
  double epsilon = 0.0;  // coherent NLI accumulation exponent (EDC only)
  double span_length_km = 76.96;

  double sigma2_ase() const { return sigma2_ase_per_span * n_spans; }
  double inv_snr_trx() const {
    return std::isinf(snr_trx_lin) ? 0.0 : 1.0 / snr_trx_lin;
  }
};

/// ASE power per span falling in `bandwidth`, summed over both polarizations.
inline double ase_power_per_span_w(const AmpSpec& amp, double center_frequency,
                                   double bandwidth) {
  return 2.0 * ase_psd_per_pol(amp, center_frequency) * bandwidth;
}

/// Combined transceiver SNR: 1/SNR_trx = 1/SNR_tx + 1/SNR_rx.
inline double combined_trx_snr_lin(double tx_snr_db, double rx_snr_db) {
  double inv = 0.0;
  if (!std::isinf(tx_snr_db)) inv += 1.0 / db_to_lin(tx_snr_db);
  if (!std::isinf(rx_snr_db)) inv += 1.0 / db_to_lin(rx_snr_db);
  return inv > 0.0 ? 1.0 / inv : std::numeric_limits<double>::infinity();
}

/// Effective span count over which residual signal-ASE beating accumulates.
inline double effective_beating_spans(Scheme scheme, int n_spans, int tx_spans) {
  switch (scheme) {
    case Scheme::kRxDbp: return static_cast<double>(n_spans);
    case Scheme::kTxDbp: return static_cast<double>(n_spans - 1);
    case Scheme::kSplit: return static_cast<double>(std::max(tx_spans, n_spans - tx_spans));
    case Scheme::kEdc: break;
  }
  throw ParameterError("effective_beating_spans: not a DBP scheme");
}

/// Cubic noise coefficient (sigma2_nl = coeff * P^3) of a scheme.
inline double cubic_coefficient(const NoiseBudget& b, Scheme scheme, int tx_spans) {
  if (scheme == Scheme::kEdc) {
    if (std::isnan(b.eta)) throw CalibrationError("budget: eta not calibrated");
    return b.eta * std::pow(static_cast<double>(b.n_spans), 1.0 + b.epsilon);
  }
  if (std::isnan(b.xi)) throw CalibrationError("budget: xi not calibrated");
  return b.xi * effective_beating_spans(scheme, b.n_spans, tx_spans);
}

/// Predicted SNR at the given launch power:
/// 1/SNR = 1/SNR_trx + (sigma2_ase + coeff P^3) / P.
inline double budget_snr_db(const NoiseBudget& b, Scheme scheme, int tx_spans,
                            double p_dbm) {
  const double p = dbm_to_watt(p_dbm);
  const double coeff = cubic_coefficient(b, scheme, tx_spans);
  const double inv = b.inv_snr_trx() + (b.sigma2_ase() + coeff * p * p * p) / p;
  return lin_to_db(1.0 / inv);
}

/// Closed-form optimum of P / (A + B P^3): P_opt = (A / 2B)^(1/3).
inline double optimal_power_dbm(double sigma2_ase_total_w, double cubic_coeff) {
  if (sigma2_ase_total_w <= 0.0) throw ParameterError("optimal_power: no linear noise");
  if (cubic_coeff <= 0.0) throw ParameterError("optimal_power: zero nonlinear coefficient");
  return watt_to_dbm(std::cbrt(sigma2_ase_total_w / (2.0 * cubic_coeff)));
}

inline double optimal_power_dbm(const NoiseBudget& b, Scheme scheme, int tx_spans) {
  return optimal_power_dbm(b.sigma2_ase(), cubic_coefficient(b, scheme, tx_spans));
}

inline double peak_snr_db(const NoiseBudget& b, Scheme scheme, int tx_spans) {
  return budget_snr_db(b, scheme, tx_spans, optimal_power_dbm(b, scheme, tx_spans));
}

/// Least-squares fit of the cubic coefficient from one simulated power sweep:
/// 1/SNR_i - 1/SNR_trx - sigma2_ase/P_i = c0 + coeff P_i^2.  The constant c0
/// absorbs the flat implementation penalty of the receiver chain.
inline double fit_cubic_coefficient(const std::vector<double>& power_dbm,
                                    const std::vector<double>& snr_db,
                                    double sigma2_ase_total_w, double snr_trx_lin) {
  if (power_dbm.size() != snr_db.size() || power_dbm.size() < 3)
    throw CalibrationError("fit_cubic_coefficient: need at least 3 sweep points");
  const double inv_trx = std::isinf(snr_trx_lin) ? 0.0 : 1.0 / snr_trx_lin;
  double s1 = 0.0, sx = 0.0, sxx = 0.0, sy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < power_dbm.size(); ++i) {
    const double p = dbm_to_watt(power_dbm[i]);
    const double r = 1.0 / db_to_lin(snr_db[i]) - inv_trx - sigma2_ase_total_w / p;
    const double x = p * p;
    s1 += 1.0;
    sx += x;
    sxx += x * x;
    sy += r;
    sxy += x * r;
  }
  const double det = s1 * sxx - sx * sx;
  if (det <= 0.0) throw CalibrationError("fit_cubic_coefficient: degenerate sweep grid");
  const double coeff = (s1 * sxy - sx * sy) / det;
  if (!(coeff > 0.0))
    throw CalibrationError("fit_cubic_coefficient: nonlinear term not resolvable");
  return coeff;
}

struct Crossover {
  bool found = false;
  int spans = 0;
  double distance_km = 0.0;
};

/// Smallest span count where the ASE-related noise terms at optimum power
/// (linear + beating, together (3/2) sigma2_ase at P_opt) reach the TRX noise
/// term P_opt/SNR_trx, evaluated for the 50% split scheme.  Searches up to
/// max_spans and reports not-found beyond that.
inline Crossover crossover_distance(const NoiseBudget& budget, int max_spans = 200) {
  Crossover c;
  if (budget.inv_snr_trx() == 0.0) {
    c.found = true;  // ASE dominates immediately
    return c;
  }
  if (std::isnan(budget.xi)) throw CalibrationError("crossover: xi not calibrated");
  for (int n = 1; n <= max_spans; ++n) {
    NoiseBudget b = budget;
    b.n_spans = n;
    const int k = (n + 1) / 2;
    const double coeff = cubic_coefficient(b, Scheme::kSplit, k);
    const double p_opt = dbm_to_watt(optimal_power_dbm(b.sigma2_ase(), coeff));
    const double ase_related = 1.5 * b.sigma2_ase();
    const double trx = p_opt * b.inv_snr_trx();
    if (ase_related >= trx) {
      c.found = true;
      c.spans = n;
      c.distance_km = n * budget.span_length_km;
      return c;
    }
  }
  return c;
}

}  // namespace splitnlc::analytic
