#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gbps {

/// Calendar month, the time unit of every table ("YYYY-MM" on disk).
struct YearMonth {
  int year = 2000;
  int month = 1;  // 1..12

  static YearMonth parse(const std::string& text);
  static YearMonth from_index(int index) { return {index / 12, index % 12 + 1}; }

  std::string str() const;
  int index() const noexcept { return year * 12 + (month - 1); }
  YearMonth plus_months(int n) const { return from_index(index() + n); }

  friend auto operator<=>(const YearMonth&, const YearMonth&) = default;
};

/// Whole months from `a` to `b` (b.index - a.index).
inline int months_between(YearMonth a, YearMonth b) { return b.index() - a.index(); }

/// Monthly close prices, T rows by K assets, strictly consecutive months,
/// all cells present and positive.
struct PriceTable {
  std::vector<YearMonth> dates;
  std::vector<std::string> assets;
  std::vector<double> values;  // row-major T x K

  std::size_t rows() const noexcept { return dates.size(); }
  std::size_t cols() const noexcept { return assets.size(); }
  double at(std::size_t t, std::size_t k) const { return values[t * cols() + k]; }
  std::span<const double> row(std::size_t t) const { return {values.data() + t * cols(), cols()}; }
};

/// Simple monthly returns; every entry > -1.
struct ReturnTable {
  std::vector<YearMonth> dates;
  std::vector<std::string> assets;
  std::vector<double> values;  // row-major T x K

  std::size_t rows() const noexcept { return dates.size(); }
  std::size_t cols() const noexcept { return assets.size(); }
  double at(std::size_t t, std::size_t k) const { return values[t * cols() + k]; }
  std::span<const double> row(std::size_t t) const { return {values.data() + t * cols(), cols()}; }

  /// One asset's full history, oldest first.
  std::vector<double> column(std::size_t k) const;
};

/// Loads and validates the CSV contract: header `date,<asset1>,...,<assetK>`,
/// dates `YYYY-MM`, positive decimal prices, no gaps, no duplicates.
/// Errors carry the offending line number.
PriceTable load_prices_csv(const std::filesystem::path& path);

/// Same contract with return values (each > -1) instead of prices.
ReturnTable load_returns_csv(const std::filesystem::path& path);

void write_prices_csv(const PriceTable& table, const std::filesystem::path& path);
void write_returns_csv(const ReturnTable& table, const std::filesystem::path& path);

/// return_t(a) = price_t(a) / price_{t-1}(a) - 1; output has T-1 rows.
ReturnTable to_returns(const PriceTable& prices);

/// Rebuilds a price path from returns: row 0 is `base_price` one month before
/// the first return date, then compounds forward.
PriceTable to_prices(const ReturnTable& returns, double base_price = 100.0);

/// Rows with date in [end - months, end); never includes `end` (no lookahead).
ReturnTable window(const ReturnTable& table, YearMonth end, int months);

/// One i.i.d. Gaussian regime: months [start_month, next start) get
/// N(mean_k, vol_k^2) returns per asset, truncated below at -0.99.
struct RegimeSegment {
  int start_month = 1;  // 1-based month index within [1, T]
  std::vector<double> means;
  std::vector<double> vols;
};

/// Synthetic monthly market; segments must cover [1, T] without gaps or
/// overlaps. Deterministic per seed.
ReturnTable generate_synthetic(std::vector<std::string> assets, int months, YearMonth start,
                               std::span<const RegimeSegment> regimes, std::uint64_t seed);

}  // namespace gbps
