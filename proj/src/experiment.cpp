#include "elembed/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

namespace elembed {

using nlohmann::json;

std::size_t ParitySeries::bin_of(double rank) const noexcept {
  if (n < 2 || bins == 0) return 0;
  const double scaled = (rank - 1.0) * static_cast<double>(bins) / static_cast<double>(n - 1);
  const auto idx = static_cast<std::size_t>(std::max(0.0, std::floor(scaled)));
  return std::min(idx, bins - 1);
}

std::size_t ParitySeries::count_for(std::size_t i) const noexcept {
  return histogram[bin_of(truth_rank[i]) * bins + bin_of(similarity_rank[i])];
}

std::size_t ParitySeries::total_count() const noexcept {
  std::size_t sum = 0;
  for (std::size_t c : histogram) sum += c;
  return sum;
}

ParitySeries make_parity(const RankTable& truth, const RankTable& similarity, std::size_t bins) {
  if (truth.size() != similarity.size())
    throw Error(Errc::ItemSetMismatch, "parity tables differ in size");
  if (bins == 0) bins = 1;

  std::unordered_map<std::string, double> sim_rank;
  for (std::size_t i = 0; i < similarity.size(); ++i)
    sim_rank.emplace(similarity.items()[i], similarity.ranks()[i]);

  ParitySeries p;
  p.bins = bins;
  p.n = truth.size();
  p.items = truth.items();
  p.truth_rank = truth.ranks();
  p.similarity_rank.reserve(p.n);
  for (const auto& item : truth.items()) {
    auto it = sim_rank.find(item);
    if (it == sim_rank.end())
      throw Error(Errc::ItemSetMismatch, "item '" + item + "' missing from similarity ranking");
    p.similarity_rank.push_back(it->second);
  }
  p.histogram.assign(bins * bins, 0);
  for (std::size_t i = 0; i < p.n; ++i)
    ++p.histogram[p.bin_of(p.truth_rank[i]) * bins + p.bin_of(p.similarity_rank[i])];
  return p;
}

namespace {

std::string describe(const std::vector<ItemFailure>& failures) {
  std::string msg = std::to_string(failures.size()) + " item(s) could not be embedded";
  const std::size_t shown = std::min<std::size_t>(failures.size(), 3);
  for (std::size_t i = 0; i < shown; ++i)
    msg += (i == 0 ? ": " : "; ") + failures[i].item + " (" + failures[i].reason + ")";
  if (failures.size() > shown) msg += "; ...";
  return msg;
}

// Embeds `requests` in one batch; when the batch fails, retries one by one so
// every failing request is identified. Failed slots are left empty.
std::vector<std::optional<EmbeddingVector>> embed_all(EmbeddingProvider& provider,
                                                      const std::vector<EmbeddingRequest>& requests,
                                                      std::vector<std::string>& errors) {
  std::vector<std::optional<EmbeddingVector>> out(requests.size());
  errors.assign(requests.size(), {});
  if (requests.empty()) return out;
  try {
    auto vectors = provider.embed_batch(requests);
    for (std::size_t i = 0; i < vectors.size(); ++i) out[i] = std::move(vectors[i]);
    return out;
  } catch (const Error&) {
  }
  for (std::size_t i = 0; i < requests.size(); ++i) {
    try {
      out[i] = provider.embed(requests[i]);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  }
  return out;
}

}  // namespace

RankingFailed::RankingFailed(std::vector<ItemFailure> failures)
    : Error(Errc::RankingFailed, describe(failures)), failures_(std::move(failures)) {}

EmbeddedItems embed_items(const PropertyDataset& dataset, Strategy strategy,
                          const ContextSpec& ctx, EmbeddingProvider& provider,
                          PhrasePooling pooling) {
  EmbeddedItems out;
  std::vector<ItemFailure> failures;
  const auto& records = dataset.records;

  if (strategy == Strategy::CompositionAveraged) {
    if (dataset.kind != ItemKind::Formula)
      throw Error(Errc::SpecInvalid, "composition-averaged strategy needs a formula dataset");
    std::set<std::string> symbols;
    for (const auto& r : records)
      for (const auto& [symbol, amount] : r.composition->amounts()) symbols.insert(symbol);

    std::vector<std::string> ordered(symbols.begin(), symbols.end());
    std::vector<EmbeddingRequest> requests;
    for (const auto& s : ordered) requests.push_back(ctx.request_for(element_by_symbol(s).name, pooling));
    std::vector<std::string> errors;
    auto vectors = embed_all(provider, requests, errors);
    std::map<std::string, std::size_t, std::less<>> slot;
    for (std::size_t i = 0; i < ordered.size(); ++i) slot.emplace(ordered[i], i);

    for (const auto& r : records) {
      const auto fractions = atomic_fractions(*r.composition);
      std::vector<EmbeddingVector> parts;
      std::string reason;
      for (const auto& f : fractions) {
        const std::size_t k = slot.at(f.element->symbol);
        if (!vectors[k]) {
          reason = "'" + requests[k].text + "': " + errors[k];
          break;
        }
        parts.push_back(*vectors[k]);
      }
      if (!reason.empty()) {
        failures.push_back({r.key, reason});
        continue;
      }
      try {
        out.vectors.push_back(weighted_sum(fractions, parts));
        out.keys.push_back(r.key);
      } catch (const Error& e) {
        failures.push_back({r.key, e.what()});
      }
    }
  } else {
    std::vector<EmbeddingRequest> requests;
    requests.reserve(records.size());
    for (const auto& r : records) {
      if (strategy == Strategy::WholeFormula) {
        if (dataset.kind != ItemKind::Formula)
          throw Error(Errc::SpecInvalid, "whole-formula strategy needs a formula dataset");
        requests.push_back(EmbeddingRequest::whole(r.key));
      } else {
        requests.push_back(ctx.request_for(r.key, pooling));
      }
    }
    std::vector<std::string> errors;
    auto vectors = embed_all(provider, requests, errors);
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!vectors[i]) {
        failures.push_back({records[i].key, errors[i]});
        continue;
      }
      out.keys.push_back(records[i].key);
      out.vectors.push_back(std::move(*vectors[i]));
    }
  }

  if (!failures.empty()) throw RankingFailed(std::move(failures));
  require_same_dim(out.vectors);
  return out;
}

RankingResult rank_against(const EmbeddedItems& items, const EmbeddingVector& query,
                           const RankTable& truth, std::size_t bins) {
  RankingResult result;
  std::vector<ScoredItem> scores;
  scores.reserve(items.keys.size());
  for (std::size_t i = 0; i < items.keys.size(); ++i) {
    const double s = cosine_similarity(items.vectors[i], query);
    result.similarity.push_back(s);
    scores.push_back({items.keys[i], s});
  }
  result.similarity_ranks = rank_by_score(scores);
  result.rho = spearman_rho(truth, result.similarity_ranks);
  result.parity = make_parity(truth, result.similarity_ranks, bins);
  return result;
}

RankingResult run_ranking(const PropertyDataset& dataset, Strategy strategy,
                          const ContextSpec& ctx, const std::string& query_key,
                          EmbeddingProvider& provider, const RankingOptions& options) {
  const RankTable truth = ground_truth_ranks(dataset);
  const EmbeddedItems items = embed_items(dataset, strategy, ctx, provider, options.pooling);
  const EmbeddingVector query = provider.embed(EmbeddingRequest::whole(query_key));
  return rank_against(items, query, truth, options.parity_bins);
}

// ---------------------------------------------------------------------------
// Spec

namespace {

std::vector<std::string> with_empty_first(const std::vector<std::string>& in) {
  std::vector<std::string> out{""};
  std::set<std::string> seen{""};
  for (const auto& s : in)
    if (seen.insert(s).second) out.push_back(s);
  return out;
}

std::string phrase_pooling_name(PhrasePooling p) {
  return p == PhrasePooling::WholePhrase ? "whole_input" : "target_span";
}

}  // namespace

ExperimentSpec ExperimentSpec::normalized() const {
  ExperimentSpec s = *this;
  s.context_terms = with_empty_first(context_terms);
  s.query_keys = with_empty_first(query_keys);
  if (s.strategy == Strategy::WholeFormula && s.context_terms.size() > 1)
    throw Error(Errc::SpecInvalid, "the whole-formula strategy takes no context terms");
  if (s.strategy != Strategy::Entity && s.dataset.kind == ItemKind::Entity)
    throw Error(Errc::SpecInvalid, "entity datasets need the entity strategy");
  if (s.strategy == Strategy::Entity && s.dataset.kind != ItemKind::Entity)
    throw Error(Errc::SpecInvalid, "the entity strategy needs an entity dataset");
  if (s.provider.kind != "mock" && s.provider.kind != "remote")
    throw Error(Errc::SpecInvalid, "provider kind must be 'mock' or 'remote'");
  if (s.provider.kind == "mock" && s.provider.dim == 0)
    throw Error(Errc::SpecInvalid, "mock provider dim must be positive");
  if (s.parity_bins == 0) throw Error(Errc::SpecInvalid, "parity_bins must be positive");
  for (const auto& f : s.formats) {
    if (f != "csv" && f != "json" && f != "svg")
      throw Error(Errc::SpecInvalid, "unknown report format '" + f + "'");
  }
  return s;
}

ExperimentSpec spec_from_json(const json& j, const std::filesystem::path& base_dir) {
  ExperimentSpec s;
  try {
    if (!j.is_object()) throw Error(Errc::SpecInvalid, "spec must be a JSON object");
    if (!j.contains("dataset")) throw Error(Errc::SpecInvalid, "spec has no 'dataset'");

    const json& ds = j.at("dataset");
    std::string path = ds.is_string() ? ds.get<std::string>() : ds.at("path").get<std::string>();
    if (!base_dir.empty() && std::filesystem::path(path).is_relative())
      path = (base_dir / path).lexically_normal().string();
    s.dataset_path = path;
    if (ds.is_object()) {
      s.dataset.name = ds.value("name", "");
      s.dataset.unit = ds.value("unit", "");
      if (ds.contains("kind")) {
        const auto kind = ds.at("kind").get<std::string>();
        if (kind == "formula") s.dataset.kind = ItemKind::Formula;
        else if (kind == "entity") s.dataset.kind = ItemKind::Entity;
        else throw Error(Errc::SpecInvalid, "dataset kind must be 'formula' or 'entity'");
      }
    }
    if (j.contains("dedup")) {
      auto p = parse_dedup_policy(j.at("dedup").get<std::string>());
      if (!p) throw Error(Errc::SpecInvalid, "dedup must be mean, max or first");
      s.dataset.dedup = *p;
    }
    if (j.contains("strategy")) {
      auto st = parse_strategy(j.at("strategy").get<std::string>());
      if (!st) throw Error(Errc::SpecInvalid, "unknown strategy");
      s.strategy = *st;
    }
    s.context_terms = j.value("terms", std::vector<std::string>{});
    s.query_keys = j.value("keys", std::vector<std::string>{});
    if (j.contains("pooling")) {
      auto p = parse_pooling(j.at("pooling").get<std::string>());
      if (!p) throw Error(Errc::SpecInvalid, "pooling must be whole_input or target_span");
      s.pooling = *p == Pooling::WholeInput ? PhrasePooling::WholePhrase : PhrasePooling::NameSpan;
    }
    if (j.contains("provider")) {
      const json& p = j.at("provider");
      s.provider.kind = p.value("kind", s.provider.kind);
      s.provider.url = p.value("url", s.provider.url);
      s.provider.model = p.value("model", s.provider.model);
      s.provider.dim = p.value("dim", s.provider.dim);
      s.provider.cache_path = p.value("cache", s.provider.cache_path);
      s.provider.in_flight = p.value("in_flight", s.provider.in_flight);
      s.provider.timeout_seconds = p.value("timeout_seconds", s.provider.timeout_seconds);
      if (!p.contains("kind") && !s.provider.url.empty()) s.provider.kind = "remote";
    }
    s.output_dir = j.value("output_dir", s.output_dir);
    s.formats = j.value("formats", s.formats);
    s.parity_bins = j.value("parity_bins", s.parity_bins);
  } catch (const json::exception& e) {
    throw Error(Errc::SpecInvalid, e.what());
  }
  return s;
}

json spec_to_json(const ExperimentSpec& s) {
  json dataset = {{"path", s.dataset_path},
                  {"name", s.dataset.name},
                  {"unit", s.dataset.unit},
                  {"kind", s.dataset.kind == ItemKind::Formula ? "formula" : "entity"}};
  json provider = {{"kind", s.provider.kind},
                   {"url", s.provider.url},
                   {"model", s.provider.model},
                   {"dim", s.provider.dim},
                   {"cache", s.provider.cache_path},
                   {"in_flight", s.provider.in_flight},
                   {"timeout_seconds", s.provider.timeout_seconds}};
  return json{{"dataset", dataset},
              {"dedup", std::string(dedup_policy_name(s.dataset.dedup))},
              {"strategy", std::string(strategy_name(s.strategy))},
              {"terms", s.context_terms},
              {"keys", s.query_keys},
              {"pooling", phrase_pooling_name(s.pooling)},
              {"provider", provider},
              {"output_dir", s.output_dir},
              {"formats", s.formats},
              {"parity_bins", s.parity_bins}};
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::FileUnreadable, "cannot read spec " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::SpecInvalid, path.string() + ": " + e.what());
  }
  return spec_from_json(j, path.parent_path());
}

std::string spec_hash(const ExperimentSpec& spec) {
  const std::string text = spec_to_json(spec.normalized()).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Grid

std::size_t GridResult::failed_cells() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const GridCell& c) { return !c.ok(); }));
}

GridInputs embed_grid_inputs(const ExperimentSpec& spec, const PropertyDataset& dataset,
                             EmbeddingProvider& provider) {
  GridInputs in;
  in.rows.resize(spec.context_terms.size());
  in.row_errors.resize(spec.context_terms.size());
  for (std::size_t r = 0; r < spec.context_terms.size(); ++r) {
    try {
      in.rows[r] = embed_items(dataset, spec.strategy, ContextSpec{spec.context_terms[r]}, provider,
                               spec.pooling);
    } catch (const Error& e) {
      in.row_errors[r] = e.what();
    }
  }

  std::vector<EmbeddingRequest> key_requests;
  for (const auto& key : spec.query_keys) key_requests.push_back(EmbeddingRequest::whole(key));
  in.key_vectors = embed_all(provider, key_requests, in.key_errors);
  return in;
}

GridResult assemble_grid(const ExperimentSpec& spec, const GridInputs& inputs,
                         const RankTable& truth) {
  GridResult g;
  g.terms = spec.context_terms;
  g.keys = spec.query_keys;
  g.cells.resize(g.terms.size() * g.keys.size());
  for (std::size_t r = 0; r < g.terms.size(); ++r) {
    for (std::size_t c = 0; c < g.keys.size(); ++c) {
      GridCell& cell = g.cells[r * g.keys.size() + c];
      if (!inputs.rows[r]) {
        cell.error = "row: " + inputs.row_errors[r];
        continue;
      }
      if (!inputs.key_vectors[c]) {
        cell.error = "key: " + inputs.key_errors[c];
        continue;
      }
      try {
        cell.rho = rank_against(*inputs.rows[r], *inputs.key_vectors[c], truth, spec.parity_bins).rho;
      } catch (const Error& e) {
        cell.error = e.what();
      }
    }
  }
  return g;
}

GridResult run_grid(const ExperimentSpec& raw_spec, const PropertyDataset& dataset,
                    EmbeddingProvider& provider) {
  const ExperimentSpec spec = raw_spec.normalized();
  const RankTable truth = ground_truth_ranks(dataset);
  const GridInputs inputs = embed_grid_inputs(spec, dataset, provider);
  GridResult g = assemble_grid(spec, inputs, truth);
  g.metadata.model_id = provider.model_id();
  g.metadata.dataset_name = dataset.name;
  g.metadata.strategy = std::string(strategy_name(spec.strategy));
  g.metadata.pooling = phrase_pooling_name(spec.pooling);
  g.metadata.timestamp = utc_timestamp();
  g.metadata.spec_hash = spec_hash(spec);
  g.metadata.config = spec_to_json(spec);
  return g;
}

}  // namespace elembed
