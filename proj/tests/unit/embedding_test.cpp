#include <doctest.h>

#include <cmath>
#include <thread>

#include "elembed/cached_provider.hpp"
#include "elembed/mock_provider.hpp"
#include "elembed/ranking.hpp"
#include "test_support.hpp"

using namespace elembed;
using elembed::testing::error_code_of;

TEST_SUITE("embedding") {

TEST_CASE("mock embed is deterministic") {
  MockProvider mock;
  const auto a = mock.embed(EmbeddingRequest::whole("iron"));
  const auto b = mock.embed(EmbeddingRequest::whole("iron"));
  CHECK(a.bit_identical(b));
  CHECK(a.dim() == MockProvider::kDefaultDim);

  MockProvider other_instance;
  CHECK(other_instance.embed(EmbeddingRequest::whole("iron")).bit_identical(a));
}

TEST_CASE("mock vectors match the independent reference construction") {
  // Frozen from tests/oracles/mock_oracle.py.
  MockProvider mock;
  const auto iron = mock.embed(EmbeddingRequest::whole("iron"));
  CHECK(iron[0] == doctest::Approx(-0.1771478401200712).epsilon(1e-12));
  CHECK(iron[1] == doctest::Approx(0.06782242029714432).epsilon(1e-12));
  CHECK(iron[2] == doctest::Approx(0.07218473263863616).epsilon(1e-12));

  const auto empty = mock.embed(EmbeddingRequest::whole(""));
  CHECK(empty[0] == doctest::Approx(-0.1555338589667616).epsilon(1e-12));
  CHECK(empty[1] == doctest::Approx(0.17258213592043684).epsilon(1e-12));
  CHECK(empty[2] == doctest::Approx(0.0946576378537475).epsilon(1e-12));
  CHECK(mock.embed(EmbeddingRequest::whole("")).bit_identical(empty));

  const auto cobalt = mock.embed(EmbeddingRequest::whole("cobalt"));
  const double c = cosine_similarity(iron, cobalt);
  CHECK(std::abs(c - -0.047692065198656555) <= 1e-12);
  CHECK(c < 1.0 - 1e-6);
}

TEST_CASE("mock vectors have unit norm and depend on every key field") {
  MockProvider mock("mock", 31);
  for (const char* text : {"", "iron", "ferromagnet iron", "Curie temperature", "economy of Ireland"}) {
    const auto v = mock.embed(EmbeddingRequest::whole(text));
    CHECK(v.dim() == 31);
    double sq = 0.0;
    for (double x : v.values()) sq += x * x;
    CHECK(std::abs(std::sqrt(sq) - 1.0) <= 1e-9);
  }
  const auto whole = mock.embed(EmbeddingRequest::whole("ferromagnet iron"));
  const auto span = mock.embed(EmbeddingRequest::target("ferromagnet iron", {12, 16}));
  const auto other_span = mock.embed(EmbeddingRequest::target("ferromagnet iron", {0, 11}));
  CHECK_FALSE(whole.bit_identical(span));
  CHECK_FALSE(span.bit_identical(other_span));
  MockProvider other_model("other", 31);
  CHECK_FALSE(other_model.embed(EmbeddingRequest::whole("iron"))
                  .bit_identical(mock.embed(EmbeddingRequest::whole("iron"))));
}

TEST_CASE("key_hash distinguishes field boundaries") {
  const auto h1 = key_hash({"m", EmbeddingRequest::whole("ab")});
  const auto h2 = key_hash({"ma", EmbeddingRequest::whole("b")});
  CHECK(h1 != h2);
  CHECK(key_hash({"m", EmbeddingRequest::whole("x")}) == key_hash({"m", EmbeddingRequest::whole("x")}));
}

TEST_CASE("request validation") {
  CHECK_NOTHROW(EmbeddingRequest::whole("").validate());
  CHECK_NOTHROW(EmbeddingRequest::target("ferromagnet iron", {12, 16}).validate());
  CHECK(error_code_of([] { EmbeddingRequest::target("iron", {2, 9}).validate(); }) == Errc::BadSpan);
  CHECK(error_code_of([] { EmbeddingRequest::target("iron", {2, 2}).validate(); }) == Errc::BadSpan);
  CHECK(error_code_of([] {
          EmbeddingRequest r{"iron", Pooling::TargetSpan, std::nullopt};
          r.validate();
        }) == Errc::BadSpan);
  CHECK(error_code_of([] {
          EmbeddingRequest r{"iron", Pooling::WholeInput, CharSpan{0, 1}};
          r.validate();
        }) == Errc::BadSpan);
  MockProvider mock;
  CHECK(error_code_of([&] { mock.embed(EmbeddingRequest::target("iron", {3, 7})); }) == Errc::BadSpan);
}

TEST_CASE("EmbeddingVector rejects empty and non-finite input") {
  CHECK(error_code_of([] { EmbeddingVector({}); }) == Errc::EmptyModelOutput);
  CHECK(error_code_of([] { EmbeddingVector({1.0, INFINITY}); }) == Errc::NonFiniteScore);
  CHECK(error_code_of([] { EmbeddingVector({NAN}); }) == Errc::NonFiniteScore);
  const EmbeddingVector v({1.0, -2.0});
  CHECK(v.scaled(3.0) == EmbeddingVector({3.0, -6.0}));
}

TEST_CASE("embed_batch maps embed in order") {
  MockProvider mock;
  std::vector<EmbeddingRequest> reqs{EmbeddingRequest::whole("iron"), EmbeddingRequest::whole("cobalt")};
  const auto out = mock.embed_batch(reqs);
  REQUIRE(out.size() == 2);
  CHECK(out[0].bit_identical(mock.embed(reqs[0])));
  CHECK(out[1].bit_identical(mock.embed(reqs[1])));

  CHECK(error_code_of([&] { mock.embed_batch({}); }) == Errc::EmptyBatch);

  std::vector<EmbeddingRequest> bad{EmbeddingRequest::whole("iron"), EmbeddingRequest::target("x", {0, 5})};
  try {
    mock.embed_batch(bad);
    FAIL("expected BatchError");
  } catch (const BatchError& e) {
    CHECK(e.index() == 1);
    CHECK(e.code() == Errc::BadSpan);
  }
}

TEST_CASE("require_same_dim rejects mixed dimensions") {
  std::vector<EmbeddingVector> vs{EmbeddingVector({1.0, 2.0}), EmbeddingVector({1.0})};
  CHECK(error_code_of([&] { require_same_dim(vs); }) == Errc::DimensionMismatch);
}

TEST_CASE("cached provider forwards only misses") {
  MockProvider mock;
  EmbeddingCache cache;
  CachedProvider cached(mock, cache);

  const auto iron = cached.embed(EmbeddingRequest::whole("iron"));
  CHECK(mock.call_count() == 1);
  mock.reset_call_count();

  std::vector<EmbeddingRequest> reqs{EmbeddingRequest::whole("iron"), EmbeddingRequest::whole("cobalt")};
  const auto out = cached.embed_batch(reqs);
  CHECK(mock.call_count() == 1);
  CHECK(out[0].bit_identical(iron));
  CHECK(out[1].bit_identical(mock.embed(reqs[1])));

  mock.reset_call_count();
  cached.embed_batch(reqs);
  CHECK(mock.call_count() == 0);
  CHECK(cached.forwarded() == 2);
}

TEST_CASE("cached provider reports the failing index of the original batch") {
  elembed::testing::DownProvider down;
  EmbeddingCache cache;
  CachedProvider cached(down, cache);
  MockProvider mock("down");
  cache.put({"down", EmbeddingRequest::whole("iron")}, mock.embed(EmbeddingRequest::whole("iron")));

  std::vector<EmbeddingRequest> reqs{EmbeddingRequest::whole("iron"), EmbeddingRequest::whole("cobalt")};
  try {
    cached.embed_batch(reqs);
    FAIL("expected BatchError");
  } catch (const BatchError& e) {
    CHECK(e.index() == 1);
    CHECK(e.code() == Errc::ProviderUnavailable);
  }
}

TEST_CASE("concurrent embeds through the cache stay bit-identical") {
  MockProvider mock;
  EmbeddingCache cache;
  CachedProvider cached(mock, cache);
  const auto expected = mock.embed(EmbeddingRequest::whole("nickel"));
  std::vector<std::thread> threads;
  std::atomic<int> mismatches{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 50; ++i)
        if (!cached.embed(EmbeddingRequest::whole("nickel")).bit_identical(expected)) ++mismatches;
    });
  }
  for (auto& th : threads) th.join();
  CHECK(mismatches == 0);
}

}  // TEST_SUITE
