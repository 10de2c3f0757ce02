#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "error.hpp"
#include "parent.hpp"
#include "random.hpp"

namespace rsse {

/// Row-major n x p matrix of observations.
class PointSet {
 public:
  PointSet() = default;
  PointSet(std::size_t dim, std::vector<double> values) : dim_(dim), values_(std::move(values)) {
    if (dim_ == 0) throw ParameterError("point dimension must be >= 1");
    if (values_.size() % dim_ != 0) throw ParameterError("value count is not a multiple of the dimension");
  }

  std::size_t size() const noexcept { return dim_ == 0 ? 0 : values_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return values_.empty(); }

  std::span<const double> operator[](std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<const double> values() const noexcept { return values_; }

  /// Copy keeping only the listed coordinates, in the listed order.
  PointSet project(std::span<const std::size_t> coords) const {
    for (std::size_t c : coords)
      if (c >= dim_) throw ParameterError("projection coordinate out of range");
    std::vector<double> out;
    out.reserve(size() * coords.size());
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t c : coords) out.push_back(values_[i * dim_ + c]);
    return PointSet(coords.size(), std::move(out));
  }

  /// Copy keeping only rows for which keep(row) is true.
  template <class Pred>
  PointSet filter_rows(Pred keep) const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i)
      if (keep(i)) out.insert(out.end(), values_.begin() + i * dim_, values_.begin() + (i + 1) * dim_);
    return PointSet(dim_, std::move(out));
  }

  bool operator==(const PointSet&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

/// Balanced (multistage) ranked set sampling design.
struct Design {
  int k = 3;           // set size
  int m = 10;          // cycles
  int r = 1;           // ranking stages; 1 = RSS, 2 = DRSS
  std::size_t rank_by = 0;
  bool replacement = true;       // finite-population draws
  double ranking_noise_sd = 0.0; // judgement error: rank by coordinate + N(0, sd^2)

  std::size_t n() const noexcept { return static_cast<std::size_t>(k) * static_cast<std::size_t>(m); }

  /// Units inspected per cycle, k^(r+1).
  std::size_t units_per_cycle() const noexcept {
    std::size_t u = 1;
    for (int s = 0; s <= r; ++s) u *= static_cast<std::size_t>(k);
    return u;
  }

  void validate(std::size_t dim) const {
    if (k < 1) throw ParameterError("set size k must be >= 1");
    if (m < 1) throw ParameterError("cycle count m must be >= 1");
    if (r < 1) throw ParameterError("stage count r must be >= 1");
    if (rank_by >= dim) throw ParameterError("rank_by coordinate out of range");
    if (!(ranking_noise_sd >= 0.0) || !std::isfinite(ranking_noise_sd))
      throw ParameterError("ranking noise sd must be finite and >= 0");
  }
};

/// k x m grid of measured units; row-major storage with index j*k + i
/// for rank i (0-based) in cycle j (0-based).
class RankedSetSample {
 public:
  RankedSetSample() = default;
  RankedSetSample(Design design, PointSet points) : design_(design), points_(std::move(points)) {
    if (points_.size() != design_.n())
      throw ParameterError("ranked set sample must hold exactly k*m observations");
    for (double v : points_.values())
      if (!std::isfinite(v)) throw ParameterError("ranked set sample contains a non-finite value");
  }

  /// Unstructured iid sample viewed as k = 1, m = n.
  static RankedSetSample simple(PointSet points) {
    Design d;
    d.k = 1;
    d.m = static_cast<int>(points.size());
    d.r = 1;
    return RankedSetSample(d, std::move(points));
  }

  const Design& design() const noexcept { return design_; }
  const PointSet& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  std::size_t dim() const noexcept { return points_.dim(); }
  std::size_t k() const noexcept { return static_cast<std::size_t>(design_.k); }
  std::size_t m() const noexcept { return static_cast<std::size_t>(design_.m); }

  std::span<const double> at(std::size_t rank, std::size_t cycle) const {
    return points_[cycle * k() + rank];
  }
  std::size_t cycle_of(std::size_t index) const noexcept { return index / k(); }
  std::size_t rank_of(std::size_t index) const noexcept { return index % k(); }

  RankedSetSample project(std::span<const std::size_t> coords) const {
    Design d = design_;
    d.rank_by = 0;
    return RankedSetSample(d, points_.project(coords));
  }

  /// Same sample with the cycles reordered; `order[j]` is the old cycle index.
  RankedSetSample permute_cycles(std::span<const std::size_t> order) const {
    std::vector<double> out;
    out.reserve(points_.values().size());
    for (std::size_t j : order)
      for (std::size_t i = 0; i < k(); ++i) {
        auto row = at(i, j);
        out.insert(out.end(), row.begin(), row.end());
      }
    return RankedSetSample(design_, PointSet(dim(), std::move(out)));
  }

  bool operator==(const RankedSetSample& o) const { return points_ == o.points_; }

 private:
  Design design_;
  PointSet points_;
};

/// A finite population of N p-variate rows (loaded from CSV).
struct FinitePopulation {
  std::vector<std::string> columns;
  PointSet rows;

  std::size_t size() const noexcept { return rows.size(); }
  std::size_t dim() const noexcept { return rows.dim(); }
  std::size_t column_index(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw IngestionError("unknown column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
  }
};

using PopulationSource = std::variant<ParentModel, FinitePopulation>;

inline std::size_t source_dim(const PopulationSource& s) {
  return std::visit([](const auto& v) -> std::size_t {
    if constexpr (std::is_same_v<std::decay_t<decltype(v)>, ParentModel>) return v.dimension();
    else return v.dim();
  }, s);
}

/// Hook observing every ranking step: (stage, target rank, sorted ranking keys).
/// The unit kept is keys[target rank].
using RankingObserver = std::function<void(int stage, std::size_t rank, std::span<const double> sorted_keys)>;

namespace detail {

struct Unit {
  double key;
  std::uint64_t tie;  // draw order (parent) or row index (population)
  std::size_t slot;   // position in the cycle buffer
};

class CycleDrawer {
 public:
  CycleDrawer(const PopulationSource& src, const Design& d, Rng& rng, std::size_t dim)
      : src_(src), design_(d), rng_(rng), dim_(dim) {
    buffer_.reserve(d.units_per_cycle() * dim);
    if (const auto* pop = std::get_if<FinitePopulation>(&src_); pop && !d.replacement) {
      pool_.resize(pop->size());
      std::iota(pool_.begin(), pool_.end(), std::size_t{0});
    }
  }

  Unit draw() {
    const std::size_t slot = buffer_.size() / dim_;
    buffer_.resize(buffer_.size() + dim_);
    std::span<double> out(buffer_.data() + slot * dim_, dim_);
    std::uint64_t tie = drawn_;
    if (const auto* parent = std::get_if<ParentModel>(&src_)) {
      parent->sample(rng_, out);
    } else {
      const auto& pop = std::get<FinitePopulation>(src_);
      std::size_t row;
      if (design_.replacement) {
        row = static_cast<std::size_t>(rng_.index(pop.size()));
      } else {
        const std::size_t left = pool_.size() - drawn_;
        const std::size_t pick = drawn_ + static_cast<std::size_t>(rng_.index(left));
        std::swap(pool_[drawn_], pool_[pick]);
        row = pool_[drawn_];
      }
      auto src_row = pop.rows[row];
      std::copy(src_row.begin(), src_row.end(), out.begin());
      tie = row;
    }
    ++drawn_;
    double key = out[design_.rank_by];
    if (design_.ranking_noise_sd > 0.0) key += design_.ranking_noise_sd * rng_.normal();
    return {key, tie, slot};
  }

  std::span<const double> values(const Unit& u) const { return {buffer_.data() + u.slot * dim_, dim_}; }

 private:
  const PopulationSource& src_;
  const Design& design_;
  Rng& rng_;
  std::size_t dim_;
  std::vector<double> buffer_;
  std::vector<std::size_t> pool_;
  std::size_t drawn_ = 0;
};

// Stage s ranked set: for each rank i, take k units that are either fresh
// draws (s = 1) or a stage s-1 ranked set, rank them and keep the i-th.
inline std::vector<Unit> ranked_set(int stage, int k, CycleDrawer& drawer, const RankingObserver* obs) {
  std::vector<Unit> out;
  out.reserve(static_cast<std::size_t>(k));
  std::vector<double> keys;
  for (int i = 0; i < k; ++i) {
    std::vector<Unit> cand;
    if (stage == 1) {
      cand.reserve(static_cast<std::size_t>(k));
      for (int c = 0; c < k; ++c) cand.push_back(drawer.draw());
    } else {
      cand = ranked_set(stage - 1, k, drawer, obs);
    }
    std::sort(cand.begin(), cand.end(), [](const Unit& a, const Unit& b) {
      return a.key < b.key || (a.key == b.key && a.tie < b.tie);
    });
    if (obs && *obs) {
      keys.clear();
      for (const Unit& u : cand) keys.push_back(u.key);
      (*obs)(stage, static_cast<std::size_t>(i), keys);
    }
    out.push_back(cand[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace detail

/// Draws one balanced MRSS sample. Cycle j uses its own substream derived
/// from (seed, j), so cycles are exchangeable and the result does not depend
/// on generation order.
inline RankedSetSample draw_mrss(const PopulationSource& source, const Design& design, std::uint64_t seed,
                                 const RankingObserver* observer = nullptr) {
  const std::size_t dim = source_dim(source);
  design.validate(dim);
  if (const auto* pop = std::get_if<FinitePopulation>(&source)) {
    if (pop->size() == 0) throw SizeError("finite population is empty");
    if (!design.replacement && pop->size() < design.units_per_cycle())
      throw SizeError("finite population smaller than k^(r+1) units needed per cycle without replacement");
  }
  std::vector<double> values;
  values.reserve(design.n() * dim);
  for (int j = 0; j < design.m; ++j) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(j)}));
    detail::CycleDrawer drawer(source, design, rng, dim);
    const auto set = detail::ranked_set(design.r, design.k, drawer, observer);
    for (const auto& u : set) {
      auto v = drawer.values(u);
      values.insert(values.end(), v.begin(), v.end());
    }
  }
  return RankedSetSample(design, PointSet(dim, std::move(values)));
}

/// n iid draws (with replacement for finite populations unless `replacement`
/// is false), returned as a k = 1 sample.
inline RankedSetSample draw_srs(const PopulationSource& source, std::size_t n, std::uint64_t seed,
                                bool replacement = true) {
  if (n == 0) throw ParameterError("simple random sample size must be >= 1");
  const std::size_t dim = source_dim(source);
  Design d;
  d.k = 1;
  d.m = static_cast<int>(n);
  d.r = 1;
  d.replacement = replacement;
  if (const auto* pop = std::get_if<FinitePopulation>(&source)) {
    if (pop->size() == 0) throw SizeError("finite population is empty");
    if (!replacement && pop->size() < n) throw SizeError("finite population smaller than the sample");
  }
  Rng rng(derive_seed(seed, {0x535253ULL, n}));
  detail::CycleDrawer drawer(source, d, rng, dim);
  std::vector<double> values;
  values.reserve(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto u = drawer.draw();
    auto v = drawer.values(u);
    values.insert(values.end(), v.begin(), v.end());
  }
  return RankedSetSample(d, PointSet(dim, std::move(values)));
}

}  // namespace rsse
