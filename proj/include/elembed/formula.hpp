#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "elembed/element_table.hpp"

namespace elembed {

// A chemical composition: element symbol -> positive stoichiometric amount.
// Iteration order is alphabetical by symbol, which is also the canonical
// order used for printing, fractions and weighted sums.
class Composition {
 public:
  using Amounts = std::map<std::string, double, std::less<>>;

  // Throws Errc::UnknownElement for an unknown symbol, Errc::NonPositiveAmount
  // for an amount <= 0 or non-finite, Errc::MalformedFormula when empty.
  explicit Composition(Amounts amounts);

  const Amounts& amounts() const noexcept { return amounts_; }
  std::size_t size() const noexcept { return amounts_.size(); }
  double amount(std::string_view symbol) const noexcept;
  double total() const noexcept;

  friend bool operator==(const Composition&, const Composition&) = default;

 private:
  Amounts amounts_;
};

struct ElementFraction {
  const Element* element;
  double fraction;
};

inline constexpr int kMaxGroupDepth = 16;

// Grammar: sequence of element symbols and parenthesised groups, each with an
// optional decimal amount. Groups nest up to kMaxGroupDepth levels. Repeated
// elements accumulate; omitted amounts are 1. Whitespace is rejected.
Composition parse_formula(std::string_view text);

// Atomic fractions in canonical order; they sum to 1 within 1e-12.
std::vector<ElementFraction> atomic_fractions(const Composition& c);

// "Fe2O3", "Co0.5Fe0.5": alphabetical, integer amounts without a decimal
// point, unit amounts omitted. Non-integer amounts use at most 6 significant
// digits unless that would move the value by more than 1e-9, in which case the
// shortest exactly round-tripping decimal is printed instead.
std::string canonical_string(const Composition& c);

// Same elements and every amount within `tolerance`.
bool approx_equal(const Composition& a, const Composition& b, double tolerance) noexcept;

}  // namespace elembed
