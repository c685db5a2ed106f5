#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "elembed/formula.hpp"
#include "elembed/ranking.hpp"

namespace elembed {

enum class DedupPolicy { Mean, Max, First };

std::string_view dedup_policy_name(DedupPolicy p) noexcept;
std::optional<DedupPolicy> parse_dedup_policy(std::string_view name) noexcept;

// Formula datasets key records by canonical formula. Entity datasets (country
// names and the like) key them by the trimmed raw text and carry no
// composition.
enum class ItemKind { Formula, Entity };

struct DatasetConfig {
  std::string name;
  std::string unit;
  DedupPolicy dedup = DedupPolicy::Mean;
  ItemKind kind = ItemKind::Formula;
};

struct PropertyRecord {
  std::string key;          // canonical formula or entity name
  std::string raw_formula;  // text of the first row that produced this record
  std::optional<Composition> composition;
  double value = 0.0;
  std::size_t source_line = 0;
  std::string source;
};

struct RejectedRow {
  std::size_t line = 0;
  std::string raw_formula;
  std::string reason;
};

struct PropertyDataset {
  std::string name;
  std::string unit;
  DedupPolicy dedup = DedupPolicy::Mean;
  ItemKind kind = ItemKind::Formula;
  std::vector<PropertyRecord> records;  // sorted by key, one per key
  std::vector<RejectedRow> rejects;
  std::size_t rows_read = 0;
  std::size_t merged_duplicates = 0;
};

// CSV with a header row naming `formula` (or `name`) and `value`, plus an
// optional `source` column. Bad rows go to `rejects` with their 1-based line
// number. Throws Errc::FileUnreadable, Errc::SchemaMismatch and
// Errc::AllRowsRejected.
PropertyDataset ingest_csv(const std::filesystem::path& path, const DatasetConfig& config);
PropertyDataset ingest_csv(std::istream& in, const DatasetConfig& config);

// Ranks records by value, rank 1 = highest. Throws Errc::DegenerateInput when
// fewer than two records exist or every value is equal.
RankTable ground_truth_ranks(const PropertyDataset& d);

// Writes the deduplicated dataset back out as `formula,value[,source]`.
void write_dataset_csv(const PropertyDataset& d, const std::filesystem::path& path);
// `line,raw_formula,reason`
void write_rejects_csv(const PropertyDataset& d, const std::filesystem::path& path);

// Splits one CSV line (RFC 4180 quoting, no embedded newlines).
std::vector<std::string> split_csv_line(std::string_view line);
// Quotes a field when it contains a comma, quote or leading/trailing space.
std::string csv_escape(std::string_view field);
// Shortest decimal that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace elembed
