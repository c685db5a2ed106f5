#include "elembed/errors.hpp"

namespace elembed {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::UnknownElement: return "UnknownElement";
    case Errc::MalformedFormula: return "MalformedFormula";
    case Errc::NonPositiveAmount: return "NonPositiveAmount";
    case Errc::ProviderUnavailable: return "ProviderUnavailable";
    case Errc::BadSpan: return "BadSpan";
    case Errc::EmptyModelOutput: return "EmptyModelOutput";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::CacheCorrupt: return "CacheCorrupt";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::ZeroNorm: return "ZeroNorm";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::NonFiniteScore: return "NonFiniteScore";
    case Errc::ItemSetMismatch: return "ItemSetMismatch";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::DuplicateItem: return "DuplicateItem";
    case Errc::FileUnreadable: return "FileUnreadable";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::AllRowsRejected: return "AllRowsRejected";
    case Errc::SpecInvalid: return "SpecInvalid";
    case Errc::RankingFailed: return "RankingFailed";
    case Errc::OutputUnwritable: return "OutputUnwritable";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

BatchError::BatchError(std::size_t index, const Error& cause)
    : Error(cause.code(), "batch element " + std::to_string(index) + ": " + cause.what()),
      index_(index) {}

}  // namespace elembed
