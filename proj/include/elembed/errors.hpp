#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace elembed {

enum class Errc {
  // formula
  UnknownElement,
  MalformedFormula,
  NonPositiveAmount,
  // embedding provider
  ProviderUnavailable,
  BadSpan,
  EmptyModelOutput,
  EmptyBatch,
  CacheCorrupt,
  // numerics shared by several modules
  DimensionMismatch,
  ZeroNorm,
  EmptyInput,
  NonFiniteScore,
  ItemSetMismatch,
  DegenerateInput,
  DuplicateItem,
  // dataset
  FileUnreadable,
  SchemaMismatch,
  AllRowsRejected,
  // harness
  SpecInvalid,
  RankingFailed,
  OutputUnwritable,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Failure of one element of a batched embedding call.
class BatchError : public Error {
 public:
  BatchError(std::size_t index, const Error& cause);

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace elembed
