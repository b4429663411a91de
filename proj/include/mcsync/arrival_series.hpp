#pragma once

// Time-binned absorbed-molecule counts for both molecule types.
//
// Absorptions are stored sparsely as sorted bin indices; additive counting
// noise is stored as a generator description and realized on demand in
// fixed blocks of kNoiseBlockBins bins, each from its own (seed, type, block)
// stream. A 10 us grid over 10^4 symbols has ~4e8 bins per type, which does
// not fit in memory densely, while every read still sees the same per-bin
// values.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mcsync/channel_model.hpp"

namespace mcsync {

enum class ClampMode {
  PerBin,        // each noisy bin is clamped at zero independently
  CarryDeficit,  // a negative bin is set to zero and its deficit is carried into the next bins of the block
};

struct NoiseLayer {
  double sigma = 0.0;  // per-bin standard deviation, molecules
  std::uint64_t seed = 0;
  ClampMode clamp = ClampMode::CarryDeficit;
};

class ArrivalSeries {
 public:
  static constexpr std::int64_t kNoiseBlockBins = 4096;

  ArrivalSeries() = default;

  /// hits_* are absorption bin indices (one entry per molecule, any order).
  /// Throws std::invalid_argument if an index falls outside [0, n_bins).
  ArrivalSeries(double bin_width_s, std::int64_t n_bins, std::vector<std::int64_t> info_hits,
                std::vector<std::int64_t> sync_hits);

  double bin_width() const noexcept { return bin_width_; }
  std::int64_t size() const noexcept { return n_bins_; }
  double duration() const noexcept { return static_cast<double>(n_bins_) * bin_width_; }
  double bin_start(std::int64_t bin) const noexcept { return static_cast<double>(bin) * bin_width_; }

  /// Index of the first bin whose start time is >= t, clamped to [0, size()].
  std::int64_t first_bin_at_or_after(double t) const noexcept;

  /// Sorted absorption bin indices (multiset) before noise.
  std::span<const std::int64_t> hits(MoleculeType type) const noexcept;
  const std::optional<NoiseLayer>& noise(MoleculeType type) const noexcept { return channel(type).noise; }

  /// Copy sharing the absorption data, with the given noise layer on `type`.
  ArrivalSeries with_noise(MoleculeType type, const NoiseLayer& layer) const;

  /// Sum of bin values over [first, last).
  double sum(MoleculeType type, std::int64_t first, std::int64_t last) const;

  /// Bin values over [first, last).
  std::vector<double> values(MoleculeType type, std::int64_t first, std::int64_t last) const;

 private:
  friend class SeriesReader;

  struct BlockTotals;
  struct Channel {
    std::shared_ptr<const std::vector<std::int64_t>> hits;
    std::optional<NoiseLayer> noise;
    std::shared_ptr<BlockTotals> totals;  // lazily filled prefix sums of noisy block totals
  };

  const Channel& channel(MoleculeType type) const noexcept {
    return type == MoleculeType::Information ? info_ : sync_;
  }
  std::int64_t raw_count(const Channel& ch, std::int64_t first, std::int64_t last) const;
  void decode_block(const Channel& ch, MoleculeType type, std::int64_t block, std::span<double> out) const;
  std::int64_t block_length(std::int64_t block) const noexcept;
  const std::vector<double>& block_prefix(MoleculeType type) const;

  double bin_width_ = 1e-5;
  std::int64_t n_bins_ = 0;
  Channel info_;
  Channel sync_;
};

/// Sequential accessor over one molecule type with a small block cache. Cheap
/// to create; not thread-safe, but any number of readers may share a series.
class SeriesReader {
 public:
  SeriesReader(const ArrivalSeries& series, MoleculeType type);

  double sum(std::int64_t first, std::int64_t last);
  /// Writes bin values for [first, first + out.size()) into out.
  void read(std::int64_t first, std::span<double> out);

 private:
  std::span<const double> block(std::int64_t index);

  static constexpr std::size_t kSlots = 64;
  const ArrivalSeries* series_;
  MoleculeType type_;
  std::array<std::int64_t, kSlots> slot_block_{};
  std::array<std::vector<double>, kSlots> slot_data_;
};

/// CSV with header `bin_start_s,count_info,count_sync` over bins [first, last).
void write_series_csv(const ArrivalSeries& series, std::ostream& out, std::int64_t first, std::int64_t last);
void write_series_csv(const ArrivalSeries& series, std::ostream& out);

}  // namespace mcsync
