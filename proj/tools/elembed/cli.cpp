#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "elembed/cached_provider.hpp"
#include "elembed/compound_embedding.hpp"
#include "elembed/dataset.hpp"
#include "elembed/embedding_cache.hpp"
#include "elembed/experiment.hpp"
#include "elembed/formula.hpp"
#include "elembed/mock_provider.hpp"
#include "elembed/ranking.hpp"
#include "elembed/remote_provider.hpp"
#include "elembed/report.hpp"

namespace elembed::cli {
namespace {

using nlohmann::json;

constexpr const char* kUrlEnv = "ELEMBED_PROVIDER_URL";

struct ProviderFlags {
  std::string kind;
  std::string url;
  std::string model;
  std::string cache;
  std::size_t dim = 0;
  std::size_t in_flight = 0;
  double timeout = 0.0;

  void attach(CLI::App& app) {
    app.add_option("--provider", kind, "Embedding provider")->check(CLI::IsMember({"mock", "remote"}));
    app.add_option("--url", url, std::string("Sidecar base URL (env ") + kUrlEnv + ")");
    app.add_option("--model", model, "Model id");
    app.add_option("--dim", dim, "Mock provider dimension");
    app.add_option("--cache", cache, "Persistent embedding cache file");
    app.add_option("--in-flight", in_flight, "Concurrent sidecar requests");
    app.add_option("--timeout", timeout, "Sidecar timeout in seconds");
  }

  // flag > environment > spec file > defaults
  ProviderSettings resolve(ProviderSettings base) const {
    const char* env = std::getenv(kUrlEnv);
    const std::string env_url = env ? env : "";
    if (!kind.empty()) base.kind = kind;
    else if (!url.empty() || !env_url.empty()) base.kind = "remote";
    if (!url.empty()) base.url = url;
    else if (!env_url.empty()) base.url = env_url;
    if (!model.empty()) base.model = model;
    if (dim > 0) base.dim = dim;
    if (!cache.empty()) base.cache_path = cache;
    if (in_flight > 0) base.in_flight = in_flight;
    if (timeout > 0) base.timeout_seconds = timeout;
    return base;
  }
};

json settings_json(const ProviderSettings& p) {
  return json{{"kind", p.kind},     {"url", p.url},           {"model", p.model},
              {"dim", p.dim},       {"cache", p.cache_path},  {"in_flight", p.in_flight},
              {"timeout_seconds", p.timeout_seconds}};
}

// Owns the provider chain: base provider, optionally behind a persistent cache.
class ProviderStack {
 public:
  explicit ProviderStack(const ProviderSettings& s) {
    if (s.kind == "remote") {
      if (s.url.empty())
        throw Error(Errc::SpecInvalid, std::string("remote provider needs --url or ") + kUrlEnv);
      base_ = std::make_unique<RemoteProvider>(
          RemoteProviderConfig{s.url, s.model, s.in_flight, s.timeout_seconds});
    } else {
      base_ = std::make_unique<MockProvider>(s.model, s.dim);
    }
    if (!s.cache_path.empty()) {
      cache_ = std::make_unique<EmbeddingCache>(s.cache_path);
      cached_ = std::make_unique<CachedProvider>(*base_, *cache_);
    }
  }

  EmbeddingProvider& get() { return cached_ ? static_cast<EmbeddingProvider&>(*cached_) : *base_; }

 private:
  std::unique_ptr<EmbeddingProvider> base_;
  std::unique_ptr<EmbeddingCache> cache_;
  std::unique_ptr<CachedProvider> cached_;
};

std::string fixed4(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

int cmd_parse(const std::string& formula, std::ostream& out) {
  const Composition c = parse_formula(formula);
  out << canonical_string(c) << '\n';
  for (const auto& f : atomic_fractions(c)) out << f.element->symbol << ' ' << fixed4(f.fraction) << '\n';
  return kExitOk;
}

struct EmbedArgs {
  std::string text;
  std::string pooling = "whole_input";
  std::vector<std::size_t> span;
  bool print_values = false;
};

int cmd_embed(const EmbedArgs& a, const ProviderSettings& settings, std::ostream& out) {
  ProviderStack stack(settings);
  EmbeddingRequest req = EmbeddingRequest::whole(a.text);
  if (a.pooling == "target_span") {
    if (a.span.size() != 2) throw Error(Errc::BadSpan, "--span START END is required for target_span");
    req = EmbeddingRequest::target(a.text, CharSpan{a.span[0], a.span[1]});
  }
  const EmbeddingVector v = stack.get().embed(req);
  double sq = 0.0;
  for (double x : v.values()) sq += x * x;
  out << "model " << stack.get().model_id() << "\ndim " << v.dim() << "\nnorm "
      << fixed4(std::sqrt(sq)) << '\n';
  if (a.print_values) {
    json values = json::array();
    for (double x : v.values()) values.push_back(x);
    out << values.dump() << '\n';
  }
  return kExitOk;
}

struct RankArgs {
  std::string dataset;
  std::string kind = "formula";
  std::string strategy = "averaged";
  std::string context;
  std::string key;
  std::string pooling = "whole_input";
  std::string dedup = "mean";
  std::string out_dir = "out";
  std::size_t bins = kDefaultParityBins;
};

int cmd_rank(const RankArgs& a, const ProviderSettings& settings, std::ostream& out,
             std::ostream& err) {
  DatasetConfig dc;
  dc.kind = a.kind == "entity" ? ItemKind::Entity : ItemKind::Formula;
  dc.dedup = parse_dedup_policy(a.dedup).value_or(DedupPolicy::Mean);
  const auto strategy = parse_strategy(a.strategy);
  if (!strategy) throw Error(Errc::SpecInvalid, "unknown strategy '" + a.strategy + "'");
  const PhrasePooling pooling =
      a.pooling == "target_span" ? PhrasePooling::NameSpan : PhrasePooling::WholePhrase;

  const PropertyDataset dataset = ingest_csv(a.dataset, dc);
  const std::filesystem::path dir(a.out_dir);
  if (!dataset.rejects.empty()) write_rejects_csv(dataset, dir / "rejects.csv");

  ProviderStack stack(settings);
  const RankTable truth = ground_truth_ranks(dataset);
  EmbeddedItems items;
  try {
    items = embed_items(dataset, *strategy, ContextSpec{a.context}, stack.get(), pooling);
  } catch (const RankingFailed& e) {
    err << e.what() << '\n';
    return kExitPartial;
  }
  EmbeddingVector query = [&] {
    try {
      return stack.get().embed(EmbeddingRequest::whole(a.key));
    } catch (const Error& e) {
      throw RankingFailed({{"query key '" + a.key + "'", e.what()}});
    }
  }();
  const RankingResult r = rank_against(items, query, truth, a.bins);

  write_text_file(dir / "ranking.csv", ranking_to_csv(dataset, items, r));
  write_text_file(dir / "parity.csv", parity_to_csv(r.parity));
  const json summary = {
      {"rho", r.rho},
      {"n", dataset.records.size()},
      {"rejects", dataset.rejects.size()},
      {"merged_duplicates", dataset.merged_duplicates},
      {"metadata",
       {{"model_id", stack.get().model_id()},
        {"dataset", dataset.name},
        {"strategy", std::string(strategy_name(*strategy))},
        {"context", a.context},
        {"key", a.key},
        {"pooling", a.pooling},
        {"timestamp", utc_timestamp()},
        {"config",
         {{"dataset", a.dataset},
          {"kind", a.kind},
          {"dedup", a.dedup},
          {"parity_bins", a.bins},
          {"output_dir", a.out_dir},
          {"provider", settings_json(settings)}}}}}};
  write_text_file(dir / "summary.json", summary.dump(2) + "\n");

  out << "dataset " << dataset.name << ": " << dataset.records.size() << " records, "
      << dataset.rejects.size() << " rejected, " << dataset.merged_duplicates << " merged\n";
  out << "strategy " << strategy_name(*strategy) << ", context '" << a.context << "', key '"
      << a.key << "'\n";
  out << "spearman rho " << format_double(r.rho) << '\n';
  out << "wrote " << (dir / "ranking.csv").string() << ", " << (dir / "parity.csv").string()
      << ", " << (dir / "summary.json").string() << '\n';
  return kExitOk;
}

struct GridArgs {
  std::string spec;
  std::vector<std::string> formats;
  std::string out_dir;
};

int cmd_grid(const GridArgs& a, const ProviderFlags& flags, std::ostream& out) {
  ExperimentSpec spec = load_experiment_spec(a.spec);
  spec.provider = flags.resolve(spec.provider);
  if (!a.out_dir.empty()) spec.output_dir = a.out_dir;
  for (const auto& f : a.formats) {
    if (std::find(spec.formats.begin(), spec.formats.end(), f) == spec.formats.end())
      spec.formats.push_back(f);
  }
  spec = spec.normalized();

  const PropertyDataset dataset = ingest_csv(spec.dataset_path, spec.dataset);
  const std::filesystem::path dir(spec.output_dir);
  if (!dataset.rejects.empty()) write_rejects_csv(dataset, dir / "rejects.csv");

  ProviderStack stack(spec.provider);
  const GridResult g = run_grid(spec, dataset, stack.get());
  const auto written = emit_grid_reports(g, spec.formats, dir);

  out << "grid " << g.terms.size() << " x " << g.keys.size() << " on " << dataset.name << " ("
      << dataset.records.size() << " records), model " << g.metadata.model_id << '\n';
  out << "failed cells " << g.failed_cells() << '\n';
  for (const auto& p : written) out << "wrote " << p.string() << '\n';
  return g.failed_cells() == 0 ? kExitOk : kExitPartial;
}

int cmd_cache(const std::string& action, const std::string& path, std::ostream& out) {
  EmbeddingCache cache(path);
  if (action == "clear") {
    cache.clear();
    out << "cleared " << path << '\n';
    return kExitOk;
  }
  const auto s = cache.stats();
  out << "path " << path << "\nentries " << s.entries << "\nbytes " << s.file_bytes
      << "\nevicted_on_load " << s.evicted_on_load << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compound embeddings from language-model text embeddings, ranked against property data"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  std::string formula;
  auto* parse = app.add_subcommand("parse", "Canonical form and atomic fractions of a formula");
  parse->add_option("formula", formula)->required();

  EmbedArgs embed_args;
  ProviderFlags embed_flags;
  auto* embed = app.add_subcommand("embed", "Embed one text");
  embed->add_option("text", embed_args.text)->required();
  embed->add_option("--pooling", embed_args.pooling)->check(CLI::IsMember({"whole_input", "target_span"}));
  embed->add_option("--span", embed_args.span, "START END character range")->expected(2);
  embed->add_flag("--values", embed_args.print_values, "Print the vector as JSON");
  embed_flags.attach(*embed);

  RankArgs rank_args;
  ProviderFlags rank_flags;
  auto* rank = app.add_subcommand("rank", "Rank a dataset against one query key");
  rank->add_option("--dataset", rank_args.dataset, "CSV with formula,value columns")->required();
  rank->add_option("--kind", rank_args.kind)->check(CLI::IsMember({"formula", "entity"}));
  rank->add_option("--strategy", rank_args.strategy)
      ->check(CLI::IsMember({"averaged", "composition_averaged", "whole-formula", "whole_formula", "entity"}));
  rank->add_option("--context", rank_args.context, "Contextualization term");
  rank->add_option("--key", rank_args.key, "Query key");
  rank->add_option("--pooling", rank_args.pooling)->check(CLI::IsMember({"whole_input", "target_span"}));
  rank->add_option("--dedup", rank_args.dedup)->check(CLI::IsMember({"mean", "max", "first"}));
  rank->add_option("--out", rank_args.out_dir, "Output directory");
  rank->add_option("--bins", rank_args.bins, "Parity histogram bins per axis")->check(CLI::PositiveNumber);
  rank_flags.attach(*rank);

  GridArgs grid_args;
  ProviderFlags grid_flags;
  auto* grid = app.add_subcommand("grid", "Run a (context term x query key) grid from a spec file");
  grid->add_option("spec", grid_args.spec, "Experiment spec JSON")->required();
  grid->add_option("--format", grid_args.formats, "Extra report formats")
      ->check(CLI::IsMember({"csv", "json", "svg"}));
  grid->add_option("--out", grid_args.out_dir, "Output directory (overrides the spec)");
  grid_flags.attach(*grid);

  std::string cache_action;
  std::string cache_path;
  auto* cache = app.add_subcommand("cache", "Inspect or clear an embedding cache");
  cache->add_option("action", cache_action)->required()->check(CLI::IsMember({"stats", "clear"}));
  cache->add_option("--cache", cache_path, "Cache file")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);

  try {
    if (*parse) return cmd_parse(formula, out);
    if (*embed) return cmd_embed(embed_args, embed_flags.resolve(ProviderSettings{}), out);
    if (*rank) return cmd_rank(rank_args, rank_flags.resolve(ProviderSettings{}), out, err);
    if (*grid) return cmd_grid(grid_args, grid_flags, out);
    if (*cache) return cmd_cache(cache_action, cache_path, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    switch (e.code()) {
      case Errc::ProviderUnavailable:
      case Errc::EmptyModelOutput:
      case Errc::RankingFailed:
      case Errc::DimensionMismatch:
        return kExitPartial;
      default:
        return kExitUsage;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace elembed::cli
