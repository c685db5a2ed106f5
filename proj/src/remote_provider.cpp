#include "elembed/remote_provider.hpp"

#include <future>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "elembed/errors.hpp"

namespace elembed {

using nlohmann::json;

namespace {

class SemaphoreGuard {
 public:
  explicit SemaphoreGuard(std::counting_semaphore<>& s) : s_(s) { s_.acquire(); }
  ~SemaphoreGuard() { s_.release(); }
  SemaphoreGuard(const SemaphoreGuard&) = delete;
  SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

 private:
  std::counting_semaphore<>& s_;
};

}  // namespace

RemoteProvider::RemoteProvider(RemoteProviderConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty())
    throw Error(Errc::ProviderUnavailable, "no provider base URL configured");
  if (config_.in_flight_limit == 0) config_.in_flight_limit = 1;

  const auto scheme_end = config_.base_url.find("://");
  const auto path_start =
      config_.base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  host_ = config_.base_url.substr(0, path_start);
  if (path_start != std::string::npos) prefix_ = config_.base_url.substr(path_start);
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();

  in_flight_ = std::make_unique<std::counting_semaphore<>>(
      static_cast<std::ptrdiff_t>(config_.in_flight_limit));
}

RemoteProvider::~RemoteProvider() = default;

EmbeddingVector RemoteProvider::embed(const EmbeddingRequest& request) {
  request.validate();
  SemaphoreGuard slot(*in_flight_);
  return post_embed(request);
}

std::vector<EmbeddingVector> RemoteProvider::embed_batch(
    std::span<const EmbeddingRequest> requests) {
  if (requests.empty()) throw Error(Errc::EmptyBatch, "embed_batch called with no requests");

  std::vector<std::future<EmbeddingVector>> pending;
  pending.reserve(requests.size());
  for (const auto& r : requests)
    pending.push_back(std::async(std::launch::async, [this, &r] { return embed(r); }));

  std::vector<EmbeddingVector> out;
  out.reserve(requests.size());
  std::optional<BatchError> first_failure;
  for (std::size_t i = 0; i < pending.size(); ++i) {
    try {
      out.push_back(pending[i].get());
    } catch (const Error& e) {
      if (!first_failure) first_failure.emplace(i, e);
    }
  }
  if (first_failure) throw *first_failure;
  return out;
}

EmbeddingVector RemoteProvider::post_embed(const EmbeddingRequest& request) {
  json body = {{"model", config_.model_id},
               {"text", request.text},
               {"pooling", std::string(pooling_name(request.pooling))}};
  if (request.span) body["span"] = {request.span->start, request.span->end};

  httplib::Client client(host_);
  const auto secs = static_cast<time_t>(config_.timeout_seconds);
  const auto usecs = static_cast<time_t>((config_.timeout_seconds - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  const auto result = client.Post(prefix_ + "/embed", body.dump(), "application/json");
  if (!result)
    throw Error(Errc::ProviderUnavailable,
                "POST " + config_.base_url + "/embed failed: " + httplib::to_string(result.error()));

  json reply;
  try {
    reply = json::parse(result->body);
  } catch (const json::exception& e) {
    throw Error(Errc::ProviderUnavailable,
                "unparseable reply (HTTP " + std::to_string(result->status) + "): " + e.what());
  }

  if (result->status != 200) {
    const std::string reason =
        reply.is_object() && reply.contains("error") && reply["error"].is_string()
            ? reply["error"].get<std::string>()
            : result->body;
    if (result->status == 400 && reason.find("BadSpan") != std::string::npos)
      throw Error(Errc::BadSpan, reason);
    throw Error(Errc::ProviderUnavailable, "HTTP " + std::to_string(result->status) + ": " + reason);
  }

  if (!reply.is_object() || !reply.contains("values") || !reply["values"].is_array())
    throw Error(Errc::ProviderUnavailable, "reply has no 'values' array");
  if (reply.contains("model") && reply["model"].is_string() &&
      reply["model"].get<std::string>() != config_.model_id)
    throw Error(Errc::ProviderUnavailable, "sidecar serves '" + reply["model"].get<std::string>() +
                                               "', expected '" + config_.model_id + "'");

  const auto& raw = reply["values"];
  if (raw.empty())
    throw Error(Errc::EmptyModelOutput, "no values returned for '" + request.text + "'");
  std::vector<double> values;
  values.reserve(raw.size());
  for (const auto& v : raw) {
    if (!v.is_number()) throw Error(Errc::ProviderUnavailable, "non-numeric value in reply");
    values.push_back(v.get<double>());
  }
  if (reply.contains("dim") && reply["dim"].is_number_integer() &&
      reply["dim"].get<std::size_t>() != values.size())
    throw Error(Errc::DimensionMismatch, "reply declares dim " + reply["dim"].dump() + " but carries " +
                                             std::to_string(values.size()) + " values");

  {
    std::lock_guard lock(dim_mutex_);
    if (!dim_) dim_ = values.size();
    if (*dim_ != values.size())
      throw Error(Errc::DimensionMismatch, "provider returned dim " + std::to_string(values.size()) +
                                               " after " + std::to_string(*dim_));
  }
  return EmbeddingVector(std::move(values));
}

}  // namespace elembed
