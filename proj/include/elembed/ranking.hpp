#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "elembed/embedding.hpp"

namespace elembed {

// v.w / (|v||w|), clamped to [-1, 1]. Throws Errc::DimensionMismatch or
// Errc::ZeroNorm (either norm <= 1e-12).
double cosine_similarity(std::span<const double> a, std::span<const double> b);
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

inline constexpr double kZeroNormThreshold = 1e-12;

struct ScoredItem {
  std::string item;
  double score;
};

// Fractional ranks of a set of items; rank 1 is the largest score and tied
// items share the mean of the ranks they span.
class RankTable {
 public:
  RankTable() = default;

  // Adopts precomputed ranks. Throws Errc::ItemSetMismatch on length mismatch,
  // Errc::DuplicateItem, and Errc::DegenerateInput unless the ranks sum to
  // n(n+1)/2 within 1e-9.
  static RankTable from_ranks(std::vector<std::string> items, std::vector<double> ranks);

  const std::vector<std::string>& items() const noexcept { return items_; }
  const std::vector<double>& ranks() const noexcept { return ranks_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool has_ties() const noexcept { return has_ties_; }

  // Rank of `item`; throws Errc::ItemSetMismatch when absent.
  double rank_of(const std::string& item) const;

  friend RankTable rank_by_score(std::span<const ScoredItem> scores);

 private:
  std::vector<std::string> items_;
  std::vector<double> ranks_;
  bool has_ties_ = false;
};

// Items keep their input order in the table; only the ranks depend on scores.
// Throws Errc::EmptyInput, Errc::NonFiniteScore, Errc::DuplicateItem.
RankTable rank_by_score(std::span<const ScoredItem> scores);

// Spearman rank correlation of two tables over the same item set. Tie-free
// tables use 1 - 6 sum d^2 / (n (n^2 - 1)); otherwise the Pearson correlation
// of the fractional ranks. Throws Errc::ItemSetMismatch, and
// Errc::DegenerateInput for n < 2 or when every rank in a table is tied.
double spearman_rho(const RankTable& x, const RankTable& y);

// The two evaluation routes, on rank vectors already aligned by item.
double spearman_from_rank_differences(std::span<const double> x, std::span<const double> y);
double pearson_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace elembed
