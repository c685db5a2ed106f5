#include "elembed/dataset.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>

#include "elembed/errors.hpp"

namespace elembed {

std::string_view dedup_policy_name(DedupPolicy p) noexcept {
  switch (p) {
    case DedupPolicy::Mean: return "mean";
    case DedupPolicy::Max: return "max";
    case DedupPolicy::First: return "first";
  }
  return "unknown";
}

std::optional<DedupPolicy> parse_dedup_policy(std::string_view name) noexcept {
  if (name == "mean") return DedupPolicy::Mean;
  if (name == "max") return DedupPolicy::Max;
  if (name == "first") return DedupPolicy::First;
  return std::nullopt;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string csv_escape(std::string_view field) {
  const bool needs_quotes = field.find_first_of(",\"\n") != std::string_view::npos ||
                            (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

namespace {

std::string trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::optional<double> parse_value(const std::string& text) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || begin == end || !std::isfinite(v)) return std::nullopt;
  return v;
}

struct Accumulator {
  PropertyRecord record;
  double sum = 0.0;
  std::size_t count = 0;
};

}  // namespace

PropertyDataset ingest_csv(std::istream& in, const DatasetConfig& config) {
  PropertyDataset d;
  d.name = config.name;
  d.unit = config.unit;
  d.dedup = config.dedup;
  d.kind = config.kind;

  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> col_formula, col_value, col_source;
  std::size_t header_width = 0;
  bool have_header = false;
  std::map<std::string, Accumulator> merged;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;

    auto fields = split_csv_line(line);
    if (!have_header) {
      have_header = true;
      header_width = fields.size();
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const std::string name = lower(trim(fields[i]));
        if (name == "formula" || name == "name") col_formula = i;
        else if (name == "value") col_value = i;
        else if (name == "source") col_source = i;
      }
      if (!col_formula || !col_value)
        throw Error(Errc::SchemaMismatch,
                    "header must name 'formula' and 'value' columns, got '" + line + "'");
      continue;
    }

    ++d.rows_read;
    const std::string raw = *col_formula < fields.size() ? trim(fields[*col_formula]) : "";
    auto reject = [&](std::string reason) {
      d.rejects.push_back(RejectedRow{line_no, raw, std::move(reason)});
    };
    if (fields.size() != header_width) {
      reject("expected " + std::to_string(header_width) + " fields, got " +
             std::to_string(fields.size()));
      continue;
    }
    const auto value = parse_value(trim(fields[*col_value]));
    if (!value) {
      reject("value '" + trim(fields[*col_value]) + "' is not a finite number");
      continue;
    }

    PropertyRecord rec;
    rec.raw_formula = raw;
    rec.value = *value;
    rec.source_line = line_no;
    if (col_source) rec.source = trim(fields[*col_source]);
    if (config.kind == ItemKind::Formula) {
      try {
        rec.composition = parse_formula(raw);
      } catch (const Error& e) {
        reject(e.what());
        continue;
      }
      rec.key = canonical_string(*rec.composition);
    } else {
      if (raw.empty()) {
        reject("empty name");
        continue;
      }
      rec.key = raw;
    }

    auto [it, inserted] = merged.try_emplace(rec.key);
    Accumulator& acc = it->second;
    if (inserted) {
      acc.record = std::move(rec);
      acc.sum = *value;
      acc.count = 1;
      continue;
    }
    ++d.merged_duplicates;
    ++acc.count;
    acc.sum += *value;
    if (config.dedup == DedupPolicy::Max) acc.record.value = std::max(acc.record.value, *value);
  }

  for (auto& [key, acc] : merged) {
    if (config.dedup == DedupPolicy::Mean) acc.record.value = acc.sum / static_cast<double>(acc.count);
    d.records.push_back(std::move(acc.record));
  }
  if (d.records.empty())
    throw Error(Errc::AllRowsRejected, "dataset '" + config.name + "' has no usable rows (" +
                                           std::to_string(d.rejects.size()) + " rejected)");
  return d;
}

PropertyDataset ingest_csv(const std::filesystem::path& path, const DatasetConfig& config) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::FileUnreadable, "cannot read dataset " + path.string());
  DatasetConfig effective = config;
  if (effective.name.empty()) effective.name = path.stem().string();
  return ingest_csv(in, effective);
}

RankTable ground_truth_ranks(const PropertyDataset& d) {
  if (d.records.size() < 2)
    throw Error(Errc::DegenerateInput, "ranking needs at least 2 records");
  std::vector<ScoredItem> scores;
  scores.reserve(d.records.size());
  for (const auto& r : d.records) scores.push_back({r.key, r.value});
  const bool all_equal = std::all_of(scores.begin(), scores.end(),
                                     [&](const ScoredItem& s) { return s.score == scores[0].score; });
  if (all_equal) throw Error(Errc::DegenerateInput, "every record has the same value");
  return rank_by_score(scores);
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path);
  if (!out) throw Error(Errc::OutputUnwritable, "cannot write " + path.string());
  return out;
}

}  // namespace

void write_dataset_csv(const PropertyDataset& d, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  const bool with_source = std::any_of(d.records.begin(), d.records.end(),
                                       [](const PropertyRecord& r) { return !r.source.empty(); });
  out << (d.kind == ItemKind::Formula ? "formula" : "name") << ",value"
      << (with_source ? ",source" : "") << '\n';
  for (const auto& r : d.records) {
    out << csv_escape(r.key) << ',' << format_double(r.value);
    if (with_source) out << ',' << csv_escape(r.source);
    out << '\n';
  }
  if (!out) throw Error(Errc::OutputUnwritable, "failed writing " + path.string());
}

void write_rejects_csv(const PropertyDataset& d, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out << "line,raw_formula,reason\n";
  for (const auto& r : d.rejects)
    out << r.line << ',' << csv_escape(r.raw_formula) << ',' << csv_escape(r.reason) << '\n';
  if (!out) throw Error(Errc::OutputUnwritable, "failed writing " + path.string());
}

}  // namespace elembed
