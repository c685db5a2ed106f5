#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "elembed/compound_embedding.hpp"
#include "elembed/dataset.hpp"
#include "elembed/embedding.hpp"
#include "elembed/errors.hpp"
#include "elembed/ranking.hpp"

namespace elembed {

// Ground-truth rank vs similarity rank for every item, with a bins x bins
// count histogram over the rank range [1, n].
struct ParitySeries {
  std::vector<std::string> items;
  std::vector<double> truth_rank;
  std::vector<double> similarity_rank;
  std::size_t bins = 0;
  std::size_t n = 0;
  std::vector<std::size_t> histogram;  // row-major, [truth_bin * bins + similarity_bin]

  std::size_t bin_of(double rank) const noexcept;
  std::size_t count_for(std::size_t pair_index) const noexcept;
  std::size_t total_count() const noexcept;
};

inline constexpr std::size_t kDefaultParityBins = 50;

// Pairs follow `truth` item order. Throws Errc::ItemSetMismatch.
ParitySeries make_parity(const RankTable& truth, const RankTable& similarity,
                         std::size_t bins = kDefaultParityBins);

struct ItemFailure {
  std::string item;
  std::string reason;
};

// Raised when any item of a dataset cannot be embedded.
class RankingFailed : public Error {
 public:
  explicit RankingFailed(std::vector<ItemFailure> failures);
  const std::vector<ItemFailure>& failures() const noexcept { return failures_; }

 private:
  std::vector<ItemFailure> failures_;
};

// Item vectors aligned with PropertyDataset::records.
struct EmbeddedItems {
  std::vector<std::string> keys;
  std::vector<EmbeddingVector> vectors;
};

// Embeds every record under `strategy`. For the composition-averaged strategy
// each distinct element is embedded once. Throws RankingFailed listing every
// item that could not be embedded.
EmbeddedItems embed_items(const PropertyDataset& dataset, Strategy strategy,
                          const ContextSpec& ctx, EmbeddingProvider& provider,
                          PhrasePooling pooling = PhrasePooling::WholePhrase);

struct RankingResult {
  std::vector<double> similarity;  // aligned with the embedded items
  RankTable similarity_ranks;
  double rho = 0.0;
  ParitySeries parity;
};

RankingResult rank_against(const EmbeddedItems& items, const EmbeddingVector& query,
                           const RankTable& truth, std::size_t bins = kDefaultParityBins);

struct RankingOptions {
  PhrasePooling pooling = PhrasePooling::WholePhrase;
  std::size_t parity_bins = kDefaultParityBins;
};

// One full ranking experiment: embed items and query key, rank by cosine
// similarity, correlate with the ground truth.
RankingResult run_ranking(const PropertyDataset& dataset, Strategy strategy,
                          const ContextSpec& ctx, const std::string& query_key,
                          EmbeddingProvider& provider, const RankingOptions& options = {});

struct ProviderSettings {
  std::string kind = "mock";  // "mock" or "remote"
  std::string url;
  std::string model = "mock";
  std::size_t dim = 64;  // mock only
  std::string cache_path;
  std::size_t in_flight = 4;
  double timeout_seconds = 60.0;
};

struct ExperimentSpec {
  std::string dataset_path;
  DatasetConfig dataset;
  Strategy strategy = Strategy::CompositionAveraged;
  std::vector<std::string> context_terms;
  std::vector<std::string> query_keys;
  PhrasePooling pooling = PhrasePooling::WholePhrase;
  ProviderSettings provider;
  std::string output_dir = "out";
  std::vector<std::string> formats{"csv", "json"};
  std::size_t parity_bins = kDefaultParityBins;

  // Copy with "" placed first in both axes and duplicates removed (first
  // occurrence wins). Throws Errc::SpecInvalid for an unusable spec, e.g.
  // context terms with the whole-formula strategy.
  ExperimentSpec normalized() const;
};

// JSON <-> spec. Relative dataset paths are resolved against `base_dir`.
ExperimentSpec spec_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json spec_to_json(const ExperimentSpec& spec);
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);
// FNV-1a of the normalized spec's JSON, as 16 hex digits.
std::string spec_hash(const ExperimentSpec& spec);

struct GridCell {
  std::optional<double> rho;
  std::string error;  // set iff rho is empty

  bool ok() const noexcept { return rho.has_value(); }
};

struct GridMetadata {
  std::string model_id;
  std::string dataset_name;
  std::string strategy;
  std::string pooling;
  std::string timestamp;
  std::string spec_hash;
  nlohmann::json config;  // effective configuration echoed into reports
};

struct GridResult {
  std::vector<std::string> terms;
  std::vector<std::string> keys;
  std::vector<GridCell> cells;  // row-major: terms x keys
  GridMetadata metadata;

  const GridCell& cell(std::size_t term, std::size_t key) const { return cells[term * keys.size() + key]; }
  std::size_t failed_cells() const noexcept;
};

// Everything a grid needs from the provider: one EmbeddedItems per term and
// one vector per query key, or the error that prevented it.
struct GridInputs {
  std::vector<std::optional<EmbeddedItems>> rows;
  std::vector<std::string> row_errors;
  std::vector<std::optional<EmbeddingVector>> key_vectors;
  std::vector<std::string> key_errors;
};

// `spec` must already be normalized.
GridInputs embed_grid_inputs(const ExperimentSpec& spec, const PropertyDataset& dataset,
                             EmbeddingProvider& provider);
GridResult assemble_grid(const ExperimentSpec& spec, const GridInputs& inputs,
                         const RankTable& truth);

// Normalizes the spec, embeds, and fills every (term, key) cell. Cells whose
// row or column could not be embedded carry an error instead of a value.
GridResult run_grid(const ExperimentSpec& spec, const PropertyDataset& dataset,
                    EmbeddingProvider& provider);

std::string utc_timestamp();

}  // namespace elembed
