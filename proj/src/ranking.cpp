#include "elembed/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "elembed/errors.hpp"

namespace elembed {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(Errc::DimensionMismatch, "cosine of vectors with dims " + std::to_string(a.size()) +
                                             " and " + std::to_string(b.size()));
  double dot = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  const double na = std::sqrt(aa);
  const double nb = std::sqrt(bb);
  if (na <= kZeroNormThreshold || nb <= kZeroNormThreshold)
    throw Error(Errc::ZeroNorm, "cosine of a vector with norm below 1e-12");
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  return cosine_similarity(a.values(), b.values());
}

double RankTable::rank_of(const std::string& item) const {
  auto it = std::find(items_.begin(), items_.end(), item);
  if (it == items_.end()) throw Error(Errc::ItemSetMismatch, "no item '" + item + "' in table");
  return ranks_[static_cast<std::size_t>(it - items_.begin())];
}

RankTable RankTable::from_ranks(std::vector<std::string> items, std::vector<double> ranks) {
  if (items.size() != ranks.size())
    throw Error(Errc::ItemSetMismatch, "items and ranks differ in length");
  if (items.empty()) throw Error(Errc::EmptyInput, "empty rank table");
  std::unordered_set<std::string> seen;
  for (const auto& item : items) {
    if (!seen.insert(item).second)
      throw Error(Errc::DuplicateItem, "item '" + item + "' appears twice");
  }
  const double n = static_cast<double>(items.size());
  const double sum = std::accumulate(ranks.begin(), ranks.end(), 0.0);
  if (std::abs(sum - n * (n + 1.0) / 2.0) > 1e-9)
    throw Error(Errc::DegenerateInput, "ranks do not sum to n(n+1)/2");

  RankTable table;
  std::vector<double> sorted(ranks);
  std::sort(sorted.begin(), sorted.end());
  table.has_ties_ = std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
  table.items_ = std::move(items);
  table.ranks_ = std::move(ranks);
  return table;
}

RankTable rank_by_score(std::span<const ScoredItem> scores) {
  if (scores.empty()) throw Error(Errc::EmptyInput, "cannot rank an empty list");
  std::unordered_set<std::string> seen;
  for (const auto& s : scores) {
    if (!std::isfinite(s.score))
      throw Error(Errc::NonFiniteScore, "score of '" + s.item + "' is not finite");
    if (!seen.insert(s.item).second)
      throw Error(Errc::DuplicateItem, "item '" + s.item + "' appears twice");
  }

  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a].score > scores[b].score; });

  RankTable table;
  table.items_.reserve(n);
  for (const auto& s : scores) table.items_.push_back(s.item);
  table.ranks_.assign(n, 0.0);

  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && scores[order[j]].score == scores[order[i]].score) ++j;
    // Positions i..j-1 hold ranks i+1..j; their mean is (i + 1 + j) / 2.
    const double rank = static_cast<double>(i + 1 + j) / 2.0;
    if (j - i > 1) table.has_ties_ = true;
    for (std::size_t k = i; k < j; ++k) table.ranks_[order[k]] = rank;
    i = j;
  }
  return table;
}

double spearman_from_rank_differences(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size()) throw Error(Errc::ItemSetMismatch, "rank vectors differ in length");
  if (n < 2) throw Error(Errc::DegenerateInput, "Spearman correlation needs at least 2 items");
  double sum_d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - y[i];
    sum_d2 += d * d;
  }
  const double nd = static_cast<double>(n);
  return 1.0 - 6.0 * sum_d2 / (nd * (nd * nd - 1.0));
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size()) throw Error(Errc::ItemSetMismatch, "vectors differ in length");
  if (n < 2) throw Error(Errc::DegenerateInput, "correlation needs at least 2 items");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw Error(Errc::DegenerateInput, "correlation undefined: all values tied");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman_rho(const RankTable& x, const RankTable& y) {
  const std::size_t n = x.size();
  if (n != y.size())
    throw Error(Errc::ItemSetMismatch, "tables hold " + std::to_string(n) + " and " +
                                           std::to_string(y.size()) + " items");
  if (n < 2) throw Error(Errc::DegenerateInput, "Spearman correlation needs at least 2 items");

  std::unordered_map<std::string, std::size_t> y_index;
  y_index.reserve(n);
  for (std::size_t i = 0; i < n; ++i) y_index.emplace(y.items()[i], i);

  std::vector<double> yr(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = y_index.find(x.items()[i]);
    if (it == y_index.end())
      throw Error(Errc::ItemSetMismatch, "item '" + x.items()[i] + "' missing from second table");
    yr[i] = y.ranks()[it->second];
  }

  auto all_tied = [](const std::vector<double>& r) {
    return std::all_of(r.begin(), r.end(), [&](double v) { return v == r.front(); });
  };
  if (all_tied(x.ranks()) || all_tied(yr))
    throw Error(Errc::DegenerateInput, "every item shares one rank");

  if (!x.has_ties() && !y.has_ties()) return spearman_from_rank_differences(x.ranks(), yr);
  return pearson_correlation(x.ranks(), yr);
}

}  // namespace elembed
