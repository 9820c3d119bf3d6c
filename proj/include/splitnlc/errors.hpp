#pragma once

#include <stdexcept>
#include <string>

namespace splitnlc {

/// Invalid argument to a DSP or physics primitive (bad roll-off, zero signal, ...).
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A spectral operation would fold meaningful signal power across the Nyquist edge.
struct AliasingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Frame synchronization failed (correlation peak below threshold).
struct SyncError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A calibration loop could not reach its target.
struct CalibrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Experiment configuration is inconsistent or unreadable.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace splitnlc
