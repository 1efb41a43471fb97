#include "gbps/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gbps/errors.hpp"
#include "gbps/rng.hpp"
#include "gbps/detail/text.hpp"

namespace gbps {

namespace {

[[noreturn]] void fail_at_line(std::size_t line, const std::string& message) {
  fail_validation("parse", "line " + std::to_string(line) + ": " + message);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& token, std::size_t line, const std::string& context) {
  if (token.empty()) fail_at_line(line, "missing cell in column " + context);
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    fail_at_line(line, "cannot parse number " + detail::quoted(token) + " in column " + context);
  }
  if (!std::isfinite(value)) fail_at_line(line, "non-finite value in column " + context);
  return value;
}

struct RawTable {
  std::vector<YearMonth> dates;
  std::vector<std::string> assets;
  std::vector<double> values;
};

RawTable load_table_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail_validation("io", "cannot open " + detail::quoted(path.string()));

  RawTable table;
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) fail_validation("parse", "empty file " + detail::quoted(path.string()));
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "date") {
    fail_at_line(line_no, "header must be 'date,<asset1>,...,<assetK>'");
  }
  table.assets.assign(header.begin() + 1, header.end());
  for (std::size_t k = 0; k < table.assets.size(); ++k) {
    if (table.assets[k].empty()) fail_at_line(line_no, "empty asset label in header");
    for (std::size_t j = 0; j < k; ++j) {
      if (table.assets[j] == table.assets[k]) {
        fail_at_line(line_no, "duplicate asset label " + detail::quoted(table.assets[k]));
      }
    }
  }

  const std::size_t k_assets = table.assets.size();
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != k_assets + 1) {
      fail_at_line(line_no, "expected " + std::to_string(k_assets + 1) + " fields, got " +
                                std::to_string(fields.size()));
    }
    YearMonth date;
    try {
      date = YearMonth::parse(fields[0]);
    } catch (const Error& e) {
      fail_at_line(line_no, e.what());
    }
    if (!table.dates.empty()) {
      const int gap = months_between(table.dates.back(), date);
      if (gap <= 0) {
        fail_at_line(line_no, "dates must be strictly increasing (" + date.str() + " after " +
                                  table.dates.back().str() + ")");
      }
      if (gap > 1) {
        fail_at_line(line_no, "gap in monthly sequence between " + table.dates.back().str() +
                                  " and " + date.str());
      }
    }
    table.dates.push_back(date);
    for (std::size_t k = 0; k < k_assets; ++k) {
      table.values.push_back(parse_number(fields[k + 1], line_no, detail::quoted(table.assets[k])));
    }
  }
  if (table.dates.empty()) fail_validation("parse", "no data rows in " + detail::quoted(path.string()));
  return table;
}

void write_table_csv(const std::filesystem::path& path, const std::vector<YearMonth>& dates,
                     const std::vector<std::string>& assets, const std::vector<double>& values) {
  std::ofstream out(path);
  if (!out) fail_validation("io", "cannot write " + detail::quoted(path.string()));
  out << "date";
  for (const auto& a : assets) out << ',' << a;
  out << '\n';
  const std::size_t k_assets = assets.size();
  for (std::size_t t = 0; t < dates.size(); ++t) {
    out << dates[t].str();
    for (std::size_t k = 0; k < k_assets; ++k) out << ',' << detail::format_g12(values[t * k_assets + k]);
    out << '\n';
  }
  if (!out.good()) fail_runtime("io", "write failed for " + detail::quoted(path.string()));
}

}  // namespace

YearMonth YearMonth::parse(const std::string& text) {
  const auto bad = [&]() -> YearMonth {
    fail_validation("parse", "date " + detail::quoted(text) + " is not in YYYY-MM format");
  };
  if (text.size() != 7 || text[4] != '-') return bad();
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u}) {
    if (text[i] < '0' || text[i] > '9') return bad();
  }
  YearMonth ym;
  ym.year = std::stoi(text.substr(0, 4));
  ym.month = std::stoi(text.substr(5, 2));
  if (ym.month < 1 || ym.month > 12) {
    fail_validation("parse", "month out of range in date " + detail::quoted(text));
  }
  return ym;
}

std::string YearMonth::str() const {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
  return buf;
}

std::vector<double> ReturnTable::column(std::size_t k) const {
  std::vector<double> out(rows());
  for (std::size_t t = 0; t < rows(); ++t) out[t] = at(t, k);
  return out;
}

PriceTable load_prices_csv(const std::filesystem::path& path) {
  RawTable raw = load_table_csv(path);
  for (std::size_t t = 0; t < raw.dates.size(); ++t) {
    for (std::size_t k = 0; k < raw.assets.size(); ++k) {
      const double p = raw.values[t * raw.assets.size() + k];
      if (p <= 0.0) {
        fail_validation("validation", "non-positive price " + detail::format_g12(p) + " at " +
                                          raw.dates[t].str() + ", asset " +
                                          detail::quoted(raw.assets[k]));
      }
    }
  }
  return PriceTable{std::move(raw.dates), std::move(raw.assets), std::move(raw.values)};
}

ReturnTable load_returns_csv(const std::filesystem::path& path) {
  RawTable raw = load_table_csv(path);
  for (std::size_t t = 0; t < raw.dates.size(); ++t) {
    for (std::size_t k = 0; k < raw.assets.size(); ++k) {
      const double r = raw.values[t * raw.assets.size() + k];
      if (r <= -1.0) {
        fail_validation("validation", "return " + detail::format_g12(r) + " at " +
                                          raw.dates[t].str() + ", asset " +
                                          detail::quoted(raw.assets[k]) + " is not > -1");
      }
    }
  }
  return ReturnTable{std::move(raw.dates), std::move(raw.assets), std::move(raw.values)};
}

void write_prices_csv(const PriceTable& table, const std::filesystem::path& path) {
  write_table_csv(path, table.dates, table.assets, table.values);
}

void write_returns_csv(const ReturnTable& table, const std::filesystem::path& path) {
  write_table_csv(path, table.dates, table.assets, table.values);
}

ReturnTable to_returns(const PriceTable& prices) {
  if (prices.rows() < 2) {
    fail_validation("validation", "need at least 2 price rows to compute returns, got " +
                                      std::to_string(prices.rows()));
  }
  ReturnTable out;
  out.assets = prices.assets;
  out.dates.assign(prices.dates.begin() + 1, prices.dates.end());
  out.values.reserve((prices.rows() - 1) * prices.cols());
  for (std::size_t t = 1; t < prices.rows(); ++t) {
    for (std::size_t k = 0; k < prices.cols(); ++k) {
      out.values.push_back(prices.at(t, k) / prices.at(t - 1, k) - 1.0);
    }
  }
  return out;
}

PriceTable to_prices(const ReturnTable& returns, double base_price) {
  if (!(base_price > 0.0)) fail_validation("validation", "base price must be positive");
  PriceTable out;
  out.assets = returns.assets;
  out.dates.reserve(returns.rows() + 1);
  out.dates.push_back(returns.dates.front().plus_months(-1));
  out.dates.insert(out.dates.end(), returns.dates.begin(), returns.dates.end());
  out.values.assign(returns.cols(), base_price);
  for (std::size_t t = 0; t < returns.rows(); ++t) {
    for (std::size_t k = 0; k < returns.cols(); ++k) {
      out.values.push_back(out.values[t * returns.cols() + k] * (1.0 + returns.at(t, k)));
    }
  }
  return out;
}

ReturnTable window(const ReturnTable& table, YearMonth end, int months) {
  if (months <= 0) fail_validation("validation", "window length must be positive");
  const YearMonth start = end.plus_months(-months);
  if (table.rows() == 0 || start < table.dates.front() || table.dates.back().plus_months(1) < end) {
    fail_validation("insufficient_history",
                    "window [" + start.str() + ", " + end.str() + ") is not fully covered by table [" +
                        (table.rows() ? table.dates.front().str() : std::string("-")) + ", " +
                        (table.rows() ? table.dates.back().str() : std::string("-")) + "]");
  }
  const std::size_t first = static_cast<std::size_t>(months_between(table.dates.front(), start));
  ReturnTable out;
  out.assets = table.assets;
  out.dates.assign(table.dates.begin() + first, table.dates.begin() + first + months);
  out.values.assign(table.values.begin() + first * table.cols(),
                    table.values.begin() + (first + months) * table.cols());
  return out;
}

ReturnTable generate_synthetic(std::vector<std::string> assets, int months, YearMonth start,
                               std::span<const RegimeSegment> regimes, std::uint64_t seed) {
  if (assets.empty() || months < 1) {
    fail_validation("validation", "synthetic market needs at least one asset and one month");
  }
  if (regimes.empty() || regimes.front().start_month != 1) {
    fail_validation("validation", "regime segments must start at month 1");
  }
  const std::size_t k_assets = assets.size();
  for (std::size_t i = 0; i < regimes.size(); ++i) {
    const auto& seg = regimes[i];
    if (seg.means.size() != k_assets || seg.vols.size() != k_assets) {
      fail_validation("dimension", "regime " + std::to_string(i + 1) + " must list " +
                                       std::to_string(k_assets) + " means and vols");
    }
    if (i > 0 && seg.start_month <= regimes[i - 1].start_month) {
      fail_validation("validation", "regime start months must be strictly increasing");
    }
    if (seg.start_month > months) {
      fail_validation("validation", "regime starts at month " + std::to_string(seg.start_month) +
                                        " beyond horizon " + std::to_string(months));
    }
    for (std::size_t k = 0; k < k_assets; ++k) {
      if (seg.vols[k] < 0.0) fail_validation("validation", "negative volatility in regime spec");
      if (seg.vols[k] == 0.0 && seg.means[k] <= -0.99) {
        fail_validation("validation", "degenerate regime mean below the -0.99 truncation");
      }
    }
  }

  ReturnTable out;
  out.assets = std::move(assets);
  out.dates.reserve(months);
  for (int t = 0; t < months; ++t) out.dates.push_back(start.plus_months(t));
  out.values.resize(static_cast<std::size_t>(months) * k_assets);

  Rng rng(seed);
  std::size_t seg = 0;
  for (int t = 0; t < months; ++t) {
    while (seg + 1 < regimes.size() && regimes[seg + 1].start_month <= t + 1) ++seg;
    for (std::size_t k = 0; k < k_assets; ++k) {
      const double mu = regimes[seg].means[k];
      const double sigma = regimes[seg].vols[k];
      double r = mu + sigma * rng.normal();
      int attempts = 0;
      while (r <= -0.99) {  // truncation keeps prices positive
        if (++attempts > 1000) fail_runtime("degenerate", "return truncation failed to converge");
        r = mu + sigma * rng.normal();
      }
      out.values[static_cast<std::size_t>(t) * k_assets + k] = r;
    }
  }
  return out;
}

}  // namespace gbps
