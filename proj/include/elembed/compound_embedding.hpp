#pragma once

#include <span>
#include <string>
#include <string_view>

#include "elembed/embedding.hpp"
#include "elembed/formula.hpp"

namespace elembed {

enum class Strategy { WholeFormula, CompositionAveraged, Entity };

std::string_view strategy_name(Strategy s) noexcept;
// Accepts "whole_formula"/"whole-formula", "composition_averaged"/"averaged",
// "entity".
std::optional<Strategy> parse_strategy(std::string_view name) noexcept;

// Which tokens of a rendered "<term> <name>" phrase are pooled.
enum class PhrasePooling {
  WholePhrase,  // mean over every token of the phrase
  NameSpan,     // mean over the tokens of the name only
};

// Prefix term placed in front of an element or entity name. An empty term
// means no contextualisation.
struct ContextSpec {
  std::string term;

  // "<term> <name>" or just "<name>" when the term is empty.
  std::string render(std::string_view name) const;

  // The request embedding `name` in this context with the given pooling.
  EmbeddingRequest request_for(std::string_view name, PhrasePooling pooling) const;
};

struct CompoundVector {
  Composition composition;
  Strategy strategy;
  ContextSpec context;
  EmbeddingVector vector;
};

// embed(canonical_string(c)) with whole_input pooling. Provider errors are
// rethrown with the formula in the message and the original error code.
CompoundVector whole_formula_vector(const Composition& c, EmbeddingProvider& provider);

// Embedding of the element's lowercase English name under `ctx`.
EmbeddingVector element_vector(const Element& e, const ContextSpec& ctx,
                               EmbeddingProvider& provider,
                               PhrasePooling pooling = PhrasePooling::WholePhrase);

// Sum over elements X of w_X * v_X, accumulated left to right in canonical
// order in 64-bit arithmetic. Element vectors are fetched in one batch.
CompoundVector composition_averaged_vector(const Composition& c, const ContextSpec& ctx,
                                           EmbeddingProvider& provider,
                                           PhrasePooling pooling = PhrasePooling::WholePhrase);

// The weighted sum on its own, for callers that already hold element vectors.
// `vectors[i]` belongs to `fractions[i]`.
EmbeddingVector weighted_sum(std::span<const ElementFraction> fractions,
                             std::span<const EmbeddingVector> vectors);

}  // namespace elembed
