#include "elembed/compound_embedding.hpp"

#include <vector>

#include "elembed/errors.hpp"

namespace elembed {

std::string_view strategy_name(Strategy s) noexcept {
  switch (s) {
    case Strategy::WholeFormula: return "whole_formula";
    case Strategy::CompositionAveraged: return "composition_averaged";
    case Strategy::Entity: return "entity";
  }
  return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view name) noexcept {
  if (name == "whole_formula" || name == "whole-formula") return Strategy::WholeFormula;
  if (name == "composition_averaged" || name == "composition-averaged" || name == "averaged")
    return Strategy::CompositionAveraged;
  if (name == "entity") return Strategy::Entity;
  return std::nullopt;
}

std::string ContextSpec::render(std::string_view name) const {
  if (term.empty()) return std::string(name);
  return term + " " + std::string(name);
}

EmbeddingRequest ContextSpec::request_for(std::string_view name, PhrasePooling pooling) const {
  std::string phrase = render(name);
  if (pooling == PhrasePooling::WholePhrase) return EmbeddingRequest::whole(std::move(phrase));
  const std::size_t start = phrase.size() - name.size();
  return EmbeddingRequest::target(std::move(phrase), CharSpan{start, start + name.size()});
}

CompoundVector whole_formula_vector(const Composition& c, EmbeddingProvider& provider) {
  const std::string formula = canonical_string(c);
  try {
    return CompoundVector{c, Strategy::WholeFormula, ContextSpec{},
                          provider.embed(EmbeddingRequest::whole(formula))};
  } catch (const Error& e) {
    throw Error(e.code(), "embedding formula " + formula + ": " + e.what());
  }
}

EmbeddingVector element_vector(const Element& e, const ContextSpec& ctx,
                               EmbeddingProvider& provider, PhrasePooling pooling) {
  return provider.embed(ctx.request_for(e.name, pooling));
}

EmbeddingVector weighted_sum(std::span<const ElementFraction> fractions,
                             std::span<const EmbeddingVector> vectors) {
  if (fractions.size() != vectors.size() || fractions.empty())
    throw Error(Errc::DimensionMismatch, "weighted_sum needs one vector per fraction");
  require_same_dim(vectors);

  const std::size_t dim = vectors.front().dim();
  std::vector<double> acc(dim);
  for (std::size_t d = 0; d < dim; ++d) acc[d] = fractions[0].fraction * vectors[0][d];
  for (std::size_t i = 1; i < fractions.size(); ++i) {
    const double w = fractions[i].fraction;
    for (std::size_t d = 0; d < dim; ++d) acc[d] += w * vectors[i][d];
  }
  return EmbeddingVector(std::move(acc));
}

CompoundVector composition_averaged_vector(const Composition& c, const ContextSpec& ctx,
                                           EmbeddingProvider& provider, PhrasePooling pooling) {
  const auto fractions = atomic_fractions(c);
  std::vector<EmbeddingRequest> requests;
  requests.reserve(fractions.size());
  for (const auto& f : fractions) requests.push_back(ctx.request_for(f.element->name, pooling));

  std::vector<EmbeddingVector> vectors;
  try {
    vectors = provider.embed_batch(requests);
  } catch (const BatchError& e) {
    throw Error(e.code(), "embedding '" + requests[e.index()].text + "' for " +
                              canonical_string(c) + ": " + e.what());
  }
  return CompoundVector{c, Strategy::CompositionAveraged, ctx, weighted_sum(fractions, vectors)};
}

}  // namespace elembed
