#include "elembed/formula.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>

#include "elembed/errors.hpp"

namespace elembed {

Composition::Composition(Amounts amounts) : amounts_(std::move(amounts)) {
  if (amounts_.empty()) throw Error(Errc::MalformedFormula, "composition has no elements");
  for (const auto& [symbol, amount] : amounts_) {
    element_by_symbol(symbol);
    if (!std::isfinite(amount) || amount <= 0.0)
      throw Error(Errc::NonPositiveAmount,
                  "amount of " + symbol + " must be positive, got " + std::to_string(amount));
  }
}

double Composition::amount(std::string_view symbol) const noexcept {
  auto it = amounts_.find(symbol);
  return it == amounts_.end() ? 0.0 : it->second;
}

double Composition::total() const noexcept {
  double sum = 0.0;
  for (const auto& [symbol, amount] : amounts_) sum += amount;
  return sum;
}

namespace {

class FormulaParser {
 public:
  explicit FormulaParser(std::string_view text) : text_(text) {}

  Composition::Amounts parse() {
    if (text_.empty()) fail("empty formula");
    for (std::size_t i = 0; i < text_.size(); ++i) {
      if (std::isspace(static_cast<unsigned char>(text_[i])))
        fail("whitespace at position " + std::to_string(i));
    }
    Composition::Amounts result = parse_sequence(0);
    if (pos_ < text_.size()) {
      if (text_[pos_] == ')') fail("unbalanced ')' at position " + std::to_string(pos_));
      fail("unexpected character at position " + std::to_string(pos_));
    }
    return result;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(Errc::MalformedFormula, "'" + std::string(text_) + "': " + what);
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  static bool starts_amount(char c) {
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.';
  }

  // Parses items until end of input or a closing parenthesis.
  Composition::Amounts parse_sequence(int depth) {
    Composition::Amounts amounts;
    bool any = false;
    while (!at_end() && peek() != ')') {
      const char c = peek();
      if (c == '(') {
        const std::size_t open = pos_;
        if (depth + 1 > kMaxGroupDepth)
          fail("groups nested deeper than " + std::to_string(kMaxGroupDepth));
        ++pos_;
        if (!at_end() && peek() == ')') fail("empty group at position " + std::to_string(open));
        Composition::Amounts inner = parse_sequence(depth + 1);
        if (at_end()) fail("unbalanced '(' at position " + std::to_string(open));
        ++pos_;  // ')'
        const double multiplier = parse_optional_amount();
        for (const auto& [symbol, amount] : inner) amounts[symbol] += amount * multiplier;
      } else if (std::isalpha(static_cast<unsigned char>(c))) {
        const std::string symbol = parse_symbol();
        const double amount = parse_optional_amount();
        amounts[symbol] += amount;
      } else if (starts_amount(c)) {
        fail("dangling multiplier at position " + std::to_string(pos_));
      } else {
        fail(std::string("unexpected character '") + c + "' at position " + std::to_string(pos_));
      }
      any = true;
    }
    if (!any) fail("empty group or formula");
    return amounts;
  }

  std::string parse_symbol() {
    const std::size_t start = pos_;
    ++pos_;
    while (!at_end() && std::islower(static_cast<unsigned char>(peek()))) ++pos_;
    std::string symbol(text_.substr(start, pos_ - start));
    element_by_symbol(symbol);
    return symbol;
  }

  double parse_optional_amount() {
    if (at_end() || !starts_amount(peek())) return 1.0;
    const std::size_t start = pos_;
    std::size_t digits_before = 0;
    std::size_t digits_after = 0;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
      ++pos_;
      ++digits_before;
    }
    if (!at_end() && peek() == '.') {
      ++pos_;
      while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
        ++pos_;
        ++digits_after;
      }
      if (digits_after == 0) fail("amount without digits after '.' at position " + std::to_string(start));
    }
    if (digits_before + digits_after == 0) fail("bad amount at position " + std::to_string(start));
    if (!at_end() && peek() == '.') fail("second decimal point at position " + std::to_string(pos_));

    const std::string_view token = text_.substr(start, pos_ - start);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value))
      fail("amount out of range at position " + std::to_string(start));
    if (value <= 0.0)
      throw Error(Errc::NonPositiveAmount, "'" + std::string(text_) + "': amount '" +
                                               std::string(token) + "' at position " +
                                               std::to_string(start) + " is not positive");
    return value;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string format_amount(double amount) {
  std::array<char, 512> buf{};
  if (amount == std::floor(amount) && amount < 1e15) {
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), amount,
                                   std::chars_format::fixed, 0);
    return std::string(buf.data(), ptr);
  }
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), amount,
                                 std::chars_format::general, 6);
  std::string shortened(buf.data(), ptr);
  double reparsed = 0.0;
  std::from_chars(shortened.data(), shortened.data() + shortened.size(), reparsed);
  if (shortened.find('e') == std::string::npos && std::abs(reparsed - amount) <= 1e-9)
    return shortened;
  auto [exact_end, exact_ec] =
      std::to_chars(buf.data(), buf.data() + buf.size(), amount, std::chars_format::fixed);
  return std::string(buf.data(), exact_end);
}

}  // namespace

Composition parse_formula(std::string_view text) {
  return Composition(FormulaParser(text).parse());
}

std::vector<ElementFraction> atomic_fractions(const Composition& c) {
  const double total = c.total();
  std::vector<ElementFraction> out;
  out.reserve(c.size());
  for (const auto& [symbol, amount] : c.amounts())
    out.push_back({find_element_by_symbol(symbol), amount / total});
  return out;
}

std::string canonical_string(const Composition& c) {
  std::string out;
  for (const auto& [symbol, amount] : c.amounts()) {
    out += symbol;
    if (amount != 1.0) out += format_amount(amount);
  }
  return out;
}

bool approx_equal(const Composition& a, const Composition& b, double tolerance) noexcept {
  if (a.size() != b.size()) return false;
  auto ib = b.amounts().begin();
  for (const auto& [symbol, amount] : a.amounts()) {
    if (symbol != ib->first || std::abs(amount - ib->second) > tolerance) return false;
    ++ib;
  }
  return true;
}

}  // namespace elembed
