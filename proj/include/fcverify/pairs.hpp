#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fcverify/errors.hpp"

namespace fcv {

// Extent of a (time, y, x) grid.
struct Shape3 {
  std::size_t time = 0;
  std::size_t y = 0;
  std::size_t x = 0;

  [[nodiscard]] std::size_t cells() const { return y * x; }
  [[nodiscard]] std::size_t size() const { return time * y * x; }
  [[nodiscard]] std::size_t flat(std::size_t t, std::size_t iy, std::size_t ix) const {
    return (t * y + iy) * x + ix;
  }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

inline bool is_probability(double v) { return v >= 0.0 && v <= 1.0; }

// Forecast/outcome pairs ready for scoring.
//
// time_index and cell_index are either empty or have one entry per pair; when
// present, time_index is the position along the time axis and cell_index the
// row-major (y, x) position within a time slice of `shape`.
class PairSet {
 public:
  PairSet() = default;

  PairSet(std::vector<double> forecasts, std::vector<std::uint8_t> outcomes)
      : forecasts_(std::move(forecasts)), outcomes_(std::move(outcomes)) {
    validate();
  }

  PairSet(std::vector<double> forecasts, std::vector<std::uint8_t> outcomes,
          std::vector<std::int64_t> time_index, std::vector<std::int64_t> cell_index,
          std::optional<Shape3> shape = std::nullopt)
      : forecasts_(std::move(forecasts)),
        outcomes_(std::move(outcomes)),
        time_index_(std::move(time_index)),
        cell_index_(std::move(cell_index)),
        shape_(shape) {
    validate();
  }

  [[nodiscard]] std::size_t size() const { return forecasts_.size(); }
  [[nodiscard]] bool empty() const { return forecasts_.empty(); }

  [[nodiscard]] std::span<const double> forecasts() const { return forecasts_; }
  [[nodiscard]] std::span<const std::uint8_t> outcomes() const { return outcomes_; }
  [[nodiscard]] double forecast(std::size_t i) const { return forecasts_[i]; }
  [[nodiscard]] int outcome(std::size_t i) const { return outcomes_[i]; }

  [[nodiscard]] bool has_positions() const { return !time_index_.empty(); }
  [[nodiscard]] std::span<const std::int64_t> time_index() const { return time_index_; }
  [[nodiscard]] std::span<const std::int64_t> cell_index() const { return cell_index_; }
  [[nodiscard]] const std::optional<Shape3>& shape() const { return shape_; }

  // Same outcomes and positions, different forecasts.
  [[nodiscard]] PairSet with_forecasts(std::vector<double> forecasts) const {
    if (forecasts.size() != forecasts_.size()) {
      throw ValidationError("replacement forecasts have length " +
                            std::to_string(forecasts.size()) + ", expected " +
                            std::to_string(forecasts_.size()));
    }
    PairSet out = *this;
    out.forecasts_ = std::move(forecasts);
    out.validate();
    return out;
  }

  // Subset by pair index (duplicates allowed); positions are carried along.
  [[nodiscard]] PairSet select(std::span<const std::size_t> idx) const {
    PairSet out;
    out.forecasts_.reserve(idx.size());
    out.outcomes_.reserve(idx.size());
    for (std::size_t i : idx) {
      out.forecasts_.push_back(forecasts_[i]);
      out.outcomes_.push_back(outcomes_[i]);
      if (has_positions()) {
        out.time_index_.push_back(time_index_[i]);
        out.cell_index_.push_back(cell_index_[i]);
      }
    }
    out.shape_ = shape_;
    return out;
  }

 private:
  void validate() const {
    if (forecasts_.size() != outcomes_.size()) {
      throw ValidationError("forecasts and outcomes differ in length (" +
                            std::to_string(forecasts_.size()) + " vs " +
                            std::to_string(outcomes_.size()) + ")");
    }
    for (std::size_t i = 0; i < forecasts_.size(); ++i) {
      if (!is_probability(forecasts_[i])) {
        throw ValidationError("forecast " + std::to_string(i) + " is not a probability");
      }
      if (outcomes_[i] > 1) {
        throw ValidationError("outcome " + std::to_string(i) + " is not binary");
      }
    }
    if (time_index_.size() != cell_index_.size() ||
        (!time_index_.empty() && time_index_.size() != forecasts_.size())) {
      throw ValidationError("position indices must be absent or cover every pair");
    }
  }

  std::vector<double> forecasts_;
  std::vector<std::uint8_t> outcomes_;
  std::vector<std::int64_t> time_index_;
  std::vector<std::int64_t> cell_index_;
  std::optional<Shape3> shape_;
};

inline void require_nonempty(const PairSet& pairs, const char* what) {
  if (pairs.empty()) throw EmptyDataError(std::string(what) + ": no forecast-observation pairs");
}

// Fraction of pairs whose outcome is 1.
inline double base_rate(const PairSet& pairs) {
  require_nonempty(pairs, "base_rate");
  std::size_t events = 0;
  for (auto y : pairs.outcomes()) events += y;
  return static_cast<double>(events) / static_cast<double>(pairs.size());
}

}  // namespace fcv
