#pragma once

#include <span>
#include <string>
#include <string_view>

namespace elembed {

struct Element {
  std::string symbol;  // "Fe"
  std::string name;    // lowercase English name, "iron"
  int atomic_number = 0;

  friend bool operator==(const Element&, const Element&) = default;
};

// All 118 elements ordered by atomic number.
std::span<const Element> all_elements();

// Lookups return nullptr when nothing matches. Symbol lookup is case-sensitive;
// name lookup accepts any ASCII casing.
const Element* find_element_by_symbol(std::string_view symbol) noexcept;
const Element* find_element_by_name(std::string_view name) noexcept;
const Element* find_element_by_number(int atomic_number) noexcept;

// Throwing variant of find_element_by_symbol (Errc::UnknownElement).
const Element& element_by_symbol(std::string_view symbol);

}  // namespace elembed
