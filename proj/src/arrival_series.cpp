#include "mcsync/arrival_series.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <ostream>
#include <stdexcept>

#include <boost/random/normal_distribution.hpp>
#include <fmt/format.h>

#include "mcsync/random.hpp"

namespace mcsync {

struct ArrivalSeries::BlockTotals {
  std::once_flag once;
  std::vector<double> prefix;
};

namespace {

std::shared_ptr<const std::vector<std::int64_t>> sorted_hits(std::vector<std::int64_t> hits, std::int64_t n_bins) {
  std::sort(hits.begin(), hits.end());
  if (!hits.empty() && (hits.front() < 0 || hits.back() >= n_bins)) {
    throw std::invalid_argument("arrival series: hit bin outside the series");
  }
  return std::make_shared<const std::vector<std::int64_t>>(std::move(hits));
}

void apply_clamp(std::span<double> values, ClampMode mode) {
  if (mode == ClampMode::PerBin) {
    for (double& v : values) {
      v = std::max(v, 0.0);
    }
    return;
  }
  double deficit = 0.0;
  for (double& v : values) {
    const double level = v + deficit;
    if (level < 0.0) {
      v = 0.0;
      deficit = level;
    } else {
      v = level;
      deficit = 0.0;
    }
  }
}

}  // namespace

ArrivalSeries::ArrivalSeries(double bin_width_s, std::int64_t n_bins, std::vector<std::int64_t> info_hits,
                             std::vector<std::int64_t> sync_hits)
    : bin_width_(bin_width_s), n_bins_(n_bins) {
  if (!std::isfinite(bin_width_s) || bin_width_s <= 0.0) {
    throw std::invalid_argument("arrival series: bin width must be positive");
  }
  if (n_bins < 0) {
    throw std::invalid_argument("arrival series: negative length");
  }
  info_.hits = sorted_hits(std::move(info_hits), n_bins);
  sync_.hits = sorted_hits(std::move(sync_hits), n_bins);
}

std::int64_t ArrivalSeries::first_bin_at_or_after(double t) const noexcept {
  if (!(t > 0.0)) {
    return 0;
  }
  const double x = t / bin_width_;
  const double nearest = std::nearbyint(x);
  const double bin = std::abs(x - nearest) < 1e-7 ? nearest : std::ceil(x);
  return static_cast<std::int64_t>(std::min(bin, static_cast<double>(n_bins_)));
}

std::span<const std::int64_t> ArrivalSeries::hits(MoleculeType type) const noexcept {
  const auto& h = channel(type).hits;
  if (!h) {
    return {};
  }
  return {h->data(), h->size()};
}

ArrivalSeries ArrivalSeries::with_noise(MoleculeType type, const NoiseLayer& layer) const {
  if (!std::isfinite(layer.sigma) || layer.sigma < 0.0) {
    throw std::invalid_argument("noise layer: sigma must be finite and non-negative");
  }
  ArrivalSeries copy = *this;
  Channel& ch = type == MoleculeType::Information ? copy.info_ : copy.sync_;
  ch.noise = layer;
  ch.totals = std::make_shared<BlockTotals>();
  return copy;
}

std::int64_t ArrivalSeries::raw_count(const Channel& ch, std::int64_t first, std::int64_t last) const {
  if (!ch.hits || last <= first) {
    return 0;
  }
  const auto lo = std::lower_bound(ch.hits->begin(), ch.hits->end(), first);
  const auto hi = std::lower_bound(lo, ch.hits->end(), last);
  return hi - lo;
}

std::int64_t ArrivalSeries::block_length(std::int64_t block) const noexcept {
  return std::min(kNoiseBlockBins, n_bins_ - block * kNoiseBlockBins);
}

void ArrivalSeries::decode_block(const Channel& ch, MoleculeType type, std::int64_t block,
                                 std::span<double> out) const {
  const std::int64_t first = block * kNoiseBlockBins;
  const NoiseLayer& layer = *ch.noise;
  Xoshiro256 rng(derive_seed(layer.seed, {static_cast<std::uint64_t>(type), static_cast<std::uint64_t>(block)}));
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : out) {
    v = layer.sigma * normal(rng);
  }
  const auto lo = std::lower_bound(ch.hits->begin(), ch.hits->end(), first);
  for (auto it = lo; it != ch.hits->end() && *it < first + static_cast<std::int64_t>(out.size()); ++it) {
    out[static_cast<std::size_t>(*it - first)] += 1.0;
  }
  apply_clamp(out, layer.clamp);
}

const std::vector<double>& ArrivalSeries::block_prefix(MoleculeType type) const {
  const Channel& ch = channel(type);
  std::call_once(ch.totals->once, [&] {
    const std::int64_t n_blocks = (n_bins_ + kNoiseBlockBins - 1) / kNoiseBlockBins;
    auto& prefix = ch.totals->prefix;
    prefix.assign(static_cast<std::size_t>(n_blocks) + 1, 0.0);
    std::vector<double> buffer(static_cast<std::size_t>(kNoiseBlockBins));
    for (std::int64_t b = 0; b < n_blocks; ++b) {
      std::span<double> out(buffer.data(), static_cast<std::size_t>(block_length(b)));
      decode_block(ch, type, b, out);
      double total = 0.0;
      for (double v : out) {
        total += v;
      }
      prefix[static_cast<std::size_t>(b) + 1] = prefix[static_cast<std::size_t>(b)] + total;
    }
  });
  return ch.totals->prefix;
}

double ArrivalSeries::sum(MoleculeType type, std::int64_t first, std::int64_t last) const {
  SeriesReader reader(*this, type);
  return reader.sum(first, last);
}

std::vector<double> ArrivalSeries::values(MoleculeType type, std::int64_t first, std::int64_t last) const {
  first = std::clamp<std::int64_t>(first, 0, n_bins_);
  last = std::clamp<std::int64_t>(last, first, n_bins_);
  std::vector<double> out(static_cast<std::size_t>(last - first));
  SeriesReader reader(*this, type);
  reader.read(first, out);
  return out;
}

SeriesReader::SeriesReader(const ArrivalSeries& series, MoleculeType type) : series_(&series), type_(type) {
  slot_block_.fill(-1);
}

std::span<const double> SeriesReader::block(std::int64_t index) {
  const std::size_t slot = static_cast<std::size_t>(index) % kSlots;
  auto& data = slot_data_[slot];
  if (slot_block_[slot] != index) {
    data.resize(static_cast<std::size_t>(series_->block_length(index)));
    series_->decode_block(series_->channel(type_), type_, index, data);
    slot_block_[slot] = index;
  }
  return data;
}

void SeriesReader::read(std::int64_t first, std::span<double> out) {
  const std::int64_t last = first + static_cast<std::int64_t>(out.size());
  if (first < 0 || last > series_->size()) {
    throw std::out_of_range("series reader: range outside the series");
  }
  const auto& ch = series_->channel(type_);
  if (!ch.noise) {
    std::fill(out.begin(), out.end(), 0.0);
    if (!ch.hits) {
      return;
    }
    const auto lo = std::lower_bound(ch.hits->begin(), ch.hits->end(), first);
    for (auto it = lo; it != ch.hits->end() && *it < last; ++it) {
      out[static_cast<std::size_t>(*it - first)] += 1.0;
    }
    return;
  }
  constexpr std::int64_t B = ArrivalSeries::kNoiseBlockBins;
  std::int64_t pos = first;
  while (pos < last) {
    const std::int64_t b = pos / B;
    const auto data = block(b);
    const std::int64_t offset = pos - b * B;
    const std::int64_t n = std::min<std::int64_t>(last - pos, static_cast<std::int64_t>(data.size()) - offset);
    std::copy_n(data.begin() + offset, n, out.begin() + (pos - first));
    pos += n;
  }
}

double SeriesReader::sum(std::int64_t first, std::int64_t last) {
  first = std::clamp<std::int64_t>(first, 0, series_->size());
  last = std::clamp<std::int64_t>(last, first, series_->size());
  if (last == first) {
    return 0.0;
  }
  const auto& ch = series_->channel(type_);
  if (!ch.noise) {
    return static_cast<double>(series_->raw_count(ch, first, last));
  }
  constexpr std::int64_t B = ArrivalSeries::kNoiseBlockBins;
  auto partial = [&](std::int64_t lo, std::int64_t hi) {
    const std::int64_t b = lo / B;
    const auto data = block(b);
    double s = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) {
      s += data[static_cast<std::size_t>(i - b * B)];
    }
    return s;
  };
  const std::int64_t first_block = first / B;
  const std::int64_t last_block = (last - 1) / B;
  if (first_block == last_block) {
    return partial(first, last);
  }
  const auto& prefix = series_->block_prefix(type_);
  double total = partial(first, (first_block + 1) * B);
  total += prefix[static_cast<std::size_t>(last_block)] - prefix[static_cast<std::size_t>(first_block) + 1];
  total += partial(last_block * B, last);
  return total;
}

void write_series_csv(const ArrivalSeries& series, std::ostream& out, std::int64_t first, std::int64_t last) {
  first = std::clamp<std::int64_t>(first, 0, series.size());
  last = std::clamp<std::int64_t>(last, first, series.size());
  out << "bin_start_s,count_info,count_sync\n";
  constexpr std::int64_t kChunk = 1 << 16;
  SeriesReader info(series, MoleculeType::Information);
  SeriesReader sync(series, MoleculeType::Synchronization);
  std::vector<double> a;
  std::vector<double> b;
  for (std::int64_t pos = first; pos < last; pos += kChunk) {
    const std::int64_t n = std::min(kChunk, last - pos);
    a.resize(static_cast<std::size_t>(n));
    b.resize(static_cast<std::size_t>(n));
    info.read(pos, a);
    sync.read(pos, b);
    for (std::int64_t i = 0; i < n; ++i) {
      out << fmt::format("{:.17g},{:.17g},{:.17g}\n", series.bin_start(pos + i), a[static_cast<std::size_t>(i)],
                         b[static_cast<std::size_t>(i)]);
    }
  }
}

void write_series_csv(const ArrivalSeries& series, std::ostream& out) {
  write_series_csv(series, out, 0, series.size());
}

}  // namespace mcsync
