#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <functional>
#include <istream>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hewe/error.hpp"

namespace hewe {

/// Positive observations held as descending order statistics.
///
/// The sorted values live in shared immutable storage; removing the top m
/// values only advances an offset, so removal is O(1) and every derived
/// sample can be shared freely between threads.
class OrderedSample {
 public:
  /// Sorts `values` descending (stable) after checking every value is > 0.
  static OrderedSample from_values(std::vector<double> values) {
    if (values.empty()) fail(ErrorCode::EmptyData, "sample has no values");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
        fail(ErrorCode::NonPositiveValue,
             "value " + std::to_string(values[i]) + " at position " + std::to_string(i) +
                 " is not a finite positive number");
      }
    }
    std::stable_sort(values.begin(), values.end(), std::greater<>{});
    auto storage = std::make_shared<Storage>();
    storage->values = std::move(values);
    return OrderedSample(std::move(storage), 0);
  }

  [[nodiscard]] std::span<const double> values() const noexcept {
    return std::span<const double>(storage_->values).subspan(offset_);
  }
  [[nodiscard]] std::size_t size() const noexcept { return storage_->values.size() - offset_; }
  [[nodiscard]] std::size_t n_original() const noexcept { return storage_->values.size(); }
  [[nodiscard]] std::size_t removed_top() const noexcept { return offset_; }

  /// i-th largest available value, 1-based.
  [[nodiscard]] double order_statistic(std::size_t rank) const {
    if (rank < 1 || rank > size()) {
      fail(ErrorCode::RankOutOfRange, "rank " + std::to_string(rank) + " outside [1, " +
                                          std::to_string(size()) + "]");
    }
    return storage_->values[offset_ + rank - 1];
  }

  /// Drops the m largest available values. The receiver is left untouched.
  [[nodiscard]] OrderedSample remove_top(std::size_t m) const {
    if (m >= size()) {
      fail(ErrorCode::RemovalExhaustsSample, "cannot remove " + std::to_string(m) +
                                                 " values from a sample of " +
                                                 std::to_string(size()));
    }
    return OrderedSample(storage_, offset_ + m);
  }

  /// Natural logs of the available order statistics (descending).
  [[nodiscard]] std::span<const double> logs() const {
    storage_->ensure_logs();
    return std::span<const double>(storage_->logs).subspan(offset_);
  }

 private:
  struct Storage {
    std::vector<double> values;
    mutable std::once_flag logs_once;
    mutable std::vector<double> logs;

    void ensure_logs() const {
      std::call_once(logs_once, [this] {
        logs.resize(values.size());
        std::transform(values.begin(), values.end(), logs.begin(),
                       [](double x) { return std::log(x); });
      });
    }
  };

  OrderedSample(std::shared_ptr<const Storage> storage, std::size_t offset)
      : storage_(std::move(storage)), offset_(offset) {}

  std::shared_ptr<const Storage> storage_;
  std::size_t offset_ = 0;
};

inline OrderedSample remove_top(const OrderedSample& sample, std::size_t m) {
  return sample.remove_top(m);
}

inline double order_statistic(const OrderedSample& sample, std::size_t rank) {
  return sample.order_statistic(rank);
}

/// Column chosen by 0-based index or by header name.
using ColumnRef = std::variant<std::size_t, std::string>;

/// Digits only means an index, anything else is a header name.
inline ColumnRef parse_column_ref(std::string_view text) {
  if (!text.empty() && std::all_of(text.begin(), text.end(),
                                   [](char c) { return c >= '0' && c <= '9'; })) {
    std::size_t index = 0;
    std::from_chars(text.data(), text.data() + text.size(), index);
    return index;
  }
  return std::string(text);
}

struct LoadStats {
  std::size_t rows_read = 0;
  std::size_t skipped_rows = 0;
  std::optional<std::string> header;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n\"'";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  if (line.find(',') != std::string_view::npos || line.find(';') != std::string_view::npos) {
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find_first_of(",;", start);
      out.push_back(trim(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start)));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
  } else {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
      if (i >= line.size()) break;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
      out.push_back(trim(line.substr(i, j - i)));
      i = j;
    }
  }
  return out;
}

inline std::optional<double> parse_number(std::string_view field) {
  if (field.empty()) return std::nullopt;
  if (field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace detail

/// Reads one column of comma-, semicolon- or whitespace-delimited text.
///
/// Blank lines and lines starting with '#' are ignored. A header row is
/// required when the column is selected by name; with an index selector the
/// first row is treated as a header if its selected field is not numeric.
/// Later non-numeric rows are skipped and counted in `stats`.
inline OrderedSample load_sample(std::istream& in, const ColumnRef& column,
                                 LoadStats* stats = nullptr) {
  if (!in) fail(ErrorCode::ParseError, "input stream is not readable");
  LoadStats local;
  std::vector<double> values;
  std::optional<std::size_t> index;
  if (const auto* idx = std::get_if<std::size_t>(&column)) index = *idx;
  bool first = true;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = detail::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto fields = detail::split_fields(line);
    if (first) {
      first = false;
      if (!index) {
        const auto& name = std::get<std::string>(column);
        const auto it = std::find(fields.begin(), fields.end(), std::string_view(name));
        if (it == fields.end()) {
          fail(ErrorCode::ParseError, "column '" + name + "' not found in header");
        }
        index = static_cast<std::size_t>(it - fields.begin());
        local.header = name;
        continue;
      }
      if (*index < fields.size() && !detail::parse_number(fields[*index])) {
        local.header = std::string(fields[*index]);
        continue;
      }
      if (*index >= fields.size()) {
        fail(ErrorCode::ParseError, "column " + std::to_string(*index) + " does not exist");
      }
    }
    ++local.rows_read;
    const auto value = *index < fields.size() ? detail::parse_number(fields[*index]) : std::nullopt;
    if (!value) {
      ++local.skipped_rows;
      continue;
    }
    if (*value <= 0.0) {
      fail(ErrorCode::NonPositiveValue, "non-positive value " + std::string(fields[*index]) +
                                            " at line " + std::to_string(line_no));
    }
    values.push_back(*value);
  }
  if (in.bad()) fail(ErrorCode::ParseError, "read error on input stream");
  if (values.empty()) fail(ErrorCode::EmptyData, "selected column holds no numeric values");
  if (stats) *stats = local;
  return OrderedSample::from_values(std::move(values));
}

}  // namespace hewe
