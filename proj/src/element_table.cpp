#include "elembed/element_table.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "elembed/errors.hpp"

#include "element_table_data.inc"

namespace elembed {
namespace {

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

struct Table {
  std::vector<Element> elements;
  std::unordered_map<std::string, std::size_t> by_symbol;
  std::unordered_map<std::string, std::size_t> by_name;

  Table() {
    std::istringstream in(kElementTableCsv);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line.front() == '#') continue;
      std::istringstream row(line);
      std::string number, symbol, name;
      std::getline(row, number, ',');
      std::getline(row, symbol, ',');
      std::getline(row, name, ',');
      elements.push_back(Element{symbol, name, std::stoi(number)});
    }
    if (elements.size() != 118) throw std::logic_error("element table must list 118 elements");
    for (std::size_t i = 0; i < elements.size(); ++i) {
      if (elements[i].atomic_number != static_cast<int>(i) + 1)
        throw std::logic_error("element table is not ordered by atomic number");
      by_symbol.emplace(elements[i].symbol, i);
      by_name.emplace(elements[i].name, i);
    }
  }
};

const Table& table() {
  static const Table t;
  return t;
}

}  // namespace

std::span<const Element> all_elements() { return table().elements; }

const Element* find_element_by_symbol(std::string_view symbol) noexcept {
  const auto& t = table();
  auto it = t.by_symbol.find(std::string(symbol));
  return it == t.by_symbol.end() ? nullptr : &t.elements[it->second];
}

const Element* find_element_by_name(std::string_view name) noexcept {
  const auto& t = table();
  auto it = t.by_name.find(to_lower(name));
  return it == t.by_name.end() ? nullptr : &t.elements[it->second];
}

const Element* find_element_by_number(int atomic_number) noexcept {
  const auto& t = table();
  if (atomic_number < 1 || atomic_number > static_cast<int>(t.elements.size())) return nullptr;
  return &t.elements[static_cast<std::size_t>(atomic_number - 1)];
}

const Element& element_by_symbol(std::string_view symbol) {
  if (const Element* e = find_element_by_symbol(symbol)) return *e;
  throw Error(Errc::UnknownElement, "'" + std::string(symbol) + "' is not an element symbol");
}

}  // namespace elembed
