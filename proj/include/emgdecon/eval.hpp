#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emgdecon/contamination.hpp"
#include "emgdecon/filters.hpp"

namespace emgdecon {

// RMS(filtered - clean) / RMS(noisy - clean); nullopt when noisy == clean.
std::optional<double> omega(std::span<const double> filtered, std::span<const double> clean,
                            std::span<const double> noisy);
std::optional<double> omega(const SampledSignal& filtered, const SampledSignal& clean,
                            const SampledSignal& noisy);

// Omega of each 1000-sample segment.
std::vector<std::optional<double>> omega_per_segment(const SampledSignal& filtered,
                                                     const SampledSignal& clean,
                                                     const SampledSignal& noisy);

// (T - missed) / T * 100
double action_accuracy(std::span<const FilterAction> taken, std::span<const FilterAction> desired);

std::vector<FilterAction> desired_actions(const NoiseSequence& seq);

// Rows MOA/PLI/WGN, columns HPF/NF/LPF.
using ConfusionMatrix = std::array<std::array<std::size_t, 3>, 3>;
ConfusionMatrix confusion(std::span<const FilterAction> taken, std::span<const NoiseKind> kinds);

struct OmegaRow {
  double level_db = 0.0;
  std::string dataset;
  std::string method;
  std::optional<double> omega;
};

struct SegmentOmegaRow {
  double level_db = 0.0;
  std::string dataset;
  std::string method;
  std::size_t segment = 0;
  std::optional<double> omega;
};

struct AccuracyRow {
  double level_db = 0.0;
  std::string dataset;
  double accuracy_pct = 0.0;
};

struct ActionTrace {
  double level_db = 0.0;
  std::string dataset;
  std::vector<FilterAction> desired;
  std::vector<FilterAction> taken;
  ConfusionMatrix confusion{};
};

struct EvalReport {
  std::vector<OmegaRow> omega;
  std::vector<SegmentOmegaRow> segment_omega;
  std::vector<AccuracyRow> accuracy;
  std::vector<ActionTrace> traces;

  // Arithmetic mean over applicable cells at the given levels (all levels
  // when empty); nullopt if there are none.
  [[nodiscard]] std::optional<double> mean_omega(const std::string& method,
                                                 std::span<const double> levels = {}) const;
  [[nodiscard]] std::vector<std::string> methods() const;
};

std::string format_level(double level_db);
std::string format_number(double v, int decimals = 6);

// omega.csv, omega_segments.csv, mean_omega.csv, accuracy.csv,
// confusion_<level>_<dataset>.csv and SVG action plots.
void write_report(const std::filesystem::path& dir, const EvalReport& report);

void write_action_svg(const std::filesystem::path& path, std::span<const FilterAction> desired,
                      std::span<const FilterAction> taken, const std::string& title);
// First `seconds` of each trace, decimated for size.
void write_signal_svg(const std::filesystem::path& path, const SampledSignal& clean,
                      const SampledSignal& noisy, const SampledSignal& filtered,
                      const std::string& title, double seconds = 2.0);

}  // namespace emgdecon
