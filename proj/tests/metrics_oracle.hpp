#pragma once

// Brute-force reference implementation for the metrics module, kept
// deliberately independent of lexchain/metrics.hpp: fractions here are
// unreduced (numerator, denominator) pairs compared by cross-multiplication,
// and the macro mean is computed with the textbook common-denominator product
// formula instead of incremental reduced addition.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace oracle {

struct Frac {
  long long num = 0;
  long long den = 1;  // > 0, not necessarily reduced
};

struct Item {
  std::set<char> selected;
  std::set<char> gold;
};

struct Confusion {
  long long tp = 0, fp = 0, fn = 0, tn = 0;
};

inline Frac exact_match(const std::vector<Item>& items) {
  long long matches = 0;
  for (const auto& item : items) {
    if (item.selected == item.gold) {
      ++matches;
    }
  }
  return {matches, static_cast<long long>(items.size())};
}

inline Confusion confusion(const std::vector<Item>& items, char option) {
  Confusion c;
  for (const auto& item : items) {
    const bool g = item.gold.count(option) > 0;
    const bool s = item.selected.count(option) > 0;
    if (g && s) ++c.tp;
    if (!g && s) ++c.fp;
    if (g && !s) ++c.fn;
    if (!g && !s) ++c.tn;
  }
  return c;
}

inline std::optional<Frac> precision(const Confusion& c) {
  if (c.tp + c.fp == 0) return std::nullopt;
  return Frac{c.tp, c.tp + c.fp};
}

inline std::optional<Frac> recall(const Confusion& c) {
  if (c.tp + c.fn == 0) return std::nullopt;
  return Frac{c.tp, c.tp + c.fn};
}

// Mean over defined values: sum_i n_i * prod_{j != i} d_j over k * prod_j d_j.
// With k <= 9 options and denominators <= 50 everything fits in int64.
inline std::optional<Frac> macro_mean(const std::vector<std::optional<Frac>>& values) {
  std::vector<Frac> defined;
  for (const auto& v : values) {
    if (v) defined.push_back(*v);
  }
  if (defined.empty()) return std::nullopt;
  long long prod = 1;
  for (const auto& f : defined) prod *= f.den;
  long long num = 0;
  for (const auto& f : defined) num += f.num * (prod / f.den);
  return Frac{num, static_cast<long long>(defined.size()) * prod};
}

inline std::optional<Frac> micro_precision(const std::vector<Confusion>& cs) {
  Confusion pooled;
  for (const auto& c : cs) {
    pooled.tp += c.tp;
    pooled.fp += c.fp;
  }
  return precision(pooled);
}

inline std::optional<Frac> micro_recall(const std::vector<Confusion>& cs) {
  Confusion pooled;
  for (const auto& c : cs) {
    pooled.tp += c.tp;
    pooled.fn += c.fn;
  }
  return recall(pooled);
}

// a/b == c/d without normalizing either side.
inline bool same_fraction(long long a_num, long long a_den, long long b_num, long long b_den) {
  return static_cast<__int128>(a_num) * b_den == static_cast<__int128>(b_num) * a_den;
}

}  // namespace oracle
