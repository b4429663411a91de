#include "mcsync/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

namespace mcsync {

double symbol_error_rate(std::span<const std::uint8_t> tx_bits, std::span<const std::uint8_t> rx_bits) {
  if (tx_bits.size() != rx_bits.size()) {
    throw std::invalid_argument("symbol_error_rate: sequences differ in length");
  }
  if (tx_bits.empty()) {
    throw std::invalid_argument("symbol_error_rate: empty sequences");
  }
  std::size_t errors = 0;
  for (std::size_t k = 0; k < tx_bits.size(); ++k) {
    errors += tx_bits[k] != rx_bits[k] ? 1 : 0;
  }
  return static_cast<double>(errors) / static_cast<double>(tx_bits.size());
}

double normalized_sync_error(const SyncEstimate& est, std::span<const double> truth_starts,
                             const ChannelGeometry& geom, double sync_diffusion, std::span<const double> durations) {
  if (est.size() != truth_starts.size() || durations.size() != truth_starts.size() || truth_starts.empty()) {
    throw std::invalid_argument("normalized_sync_error: length mismatch");
  }
  const double offset = peak_time(geom, sync_diffusion);
  double abs_error = 0.0;
  double total_duration = 0.0;
  for (std::size_t k = 0; k < truth_starts.size(); ++k) {
    abs_error += std::abs(est.sync_peak_s[k] - (truth_starts[k] + offset));
    total_duration += durations[k];
  }
  return abs_error / total_duration;
}

EyeDiagram eye_diagram(const ArrivalSeries& series, std::span<const double> starts, const SymbolSequence& bits,
                       double span_s, double sample_fraction, std::int64_t n_info, std::int64_t n_points) {
  if (starts.size() != bits.size()) {
    throw std::invalid_argument("eye_diagram: starts and bits differ in length");
  }
  if (!(span_s > 0.0) || !(sample_fraction > 0.0 && sample_fraction <= 1.0) || n_info < 1 || n_points < 1) {
    throw std::invalid_argument("eye_diagram: invalid span, sample fraction, N_info or resolution");
  }
  const bool has_one = std::find(bits.begin(), bits.end(), 1) != bits.end();
  const bool has_zero = std::find(bits.begin(), bits.end(), 0) != bits.end();
  if (!has_one || !has_zero) {
    throw UndefinedEye("eye_diagram: both bit values are needed");
  }

  EyeDiagram eye;
  const double step = span_s / static_cast<double>(n_points);
  eye.offsets_s.resize(static_cast<std::size_t>(n_points));
  for (std::int64_t j = 0; j < n_points; ++j) {
    eye.offsets_s[static_cast<std::size_t>(j)] = static_cast<double>(j + 1) * step;
  }
  const double t_star = sample_fraction * span_s;

  std::vector<double> opening_one(eye.offsets_s.size(), std::numeric_limits<double>::infinity());
  std::vector<double> opening_zero(eye.offsets_s.size(), -std::numeric_limits<double>::infinity());
  double min_one_at_star = std::numeric_limits<double>::infinity();
  double max_zero_at_star = -std::numeric_limits<double>::infinity();

  SeriesReader reader(series, MoleculeType::Information);
  std::vector<double> values;
  std::vector<double> cumulative;  // cumulative[i] = count in the first i bins of the window
  const double norm = static_cast<double>(n_info);
  eye.traces.reserve(bits.size());
  for (std::size_t k = 0; k < bits.size(); ++k) {
    const double start = std::max(0.0, starts[k]);
    const std::int64_t first = series.first_bin_at_or_after(start);
    const std::int64_t last = series.first_bin_at_or_after(start + span_s);
    values.resize(static_cast<std::size_t>(last - first));
    reader.read(first, values);
    cumulative.assign(values.size() + 1, 0.0);
    for (std::size_t i = 0; i < values.size(); ++i) {
      cumulative[i + 1] = cumulative[i] + values[i];
    }
    const auto count_until = [&](double offset) {
      const std::int64_t end = std::min(last, series.first_bin_at_or_after(start + offset));
      return cumulative[static_cast<std::size_t>(std::max<std::int64_t>(0, end - first))] / norm;
    };

    EyeTrace trace{static_cast<std::int64_t>(k), bits[k], {}};
    trace.cumulative.resize(eye.offsets_s.size());
    for (std::size_t j = 0; j < eye.offsets_s.size(); ++j) {
      const double c = count_until(eye.offsets_s[j]);
      trace.cumulative[j] = c;
      if (bits[k] == 1) {
        opening_one[j] = std::min(opening_one[j], c);
      } else {
        opening_zero[j] = std::max(opening_zero[j], c);
      }
    }
    const double c_star = count_until(t_star);
    if (bits[k] == 1) {
      min_one_at_star = std::min(min_one_at_star, c_star);
    } else {
      max_zero_at_star = std::max(max_zero_at_star, c_star);
    }
    eye.traces.push_back(std::move(trace));
  }

  eye.opening.resize(eye.offsets_s.size());
  std::size_t run = 0;
  std::size_t best_run = 0;
  for (std::size_t j = 0; j < eye.offsets_s.size(); ++j) {
    eye.opening[j] = opening_one[j] - opening_zero[j];
    run = eye.opening[j] > 0.0 ? run + 1 : 0;
    best_run = std::max(best_run, run);
  }
  eye.eye_height = min_one_at_star - max_zero_at_star;
  eye.eye_width = static_cast<double>(best_run) * step;
  return eye;
}

void write_eye_csv(const EyeDiagram& eye, std::ostream& out) {
  out << "symbol_index,bit,t_offset_s,normalized_cumulative_count\n";
  for (const auto& trace : eye.traces) {
    for (std::size_t j = 0; j < eye.offsets_s.size(); ++j) {
      out << fmt::format("{},{},{:.17g},{:.17g}\n", trace.symbol, trace.bit, eye.offsets_s[j], trace.cumulative[j]);
    }
  }
}

}  // namespace mcsync
