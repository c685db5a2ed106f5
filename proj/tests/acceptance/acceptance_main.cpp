// Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when a
// gating criterion fails; the live sidecar check only ever logs.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

#include "cli.hpp"
#include "elembed/cached_provider.hpp"
#include "elembed/compound_embedding.hpp"
#include "elembed/experiment.hpp"
#include "elembed/formula.hpp"
#include "elembed/mock_provider.hpp"
#include "elembed/ranking.hpp"
#include "elembed/remote_provider.hpp"
#include "elembed/report.hpp"

using namespace elembed;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = ELEMBED_SOURCE_DIR;

// Thrown by checks; the message becomes the FAIL reason.
struct Failure {
  std::string reason;
};

struct Skip {
  std::string reason;
};

void expect(bool ok, const std::string& what) {
  if (!ok) throw Failure{what};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag)
      : path_(fs::temp_directory_path() /
              ("elembed_accept_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

RankTable table_of(const std::vector<double>& ranks) {
  std::vector<std::string> items;
  for (std::size_t i = 0; i < ranks.size(); ++i) items.push_back(std::to_string(i));
  return RankTable::from_ranks(std::move(items), ranks);
}

std::string spearman_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(31337);
  std::uniform_int_distribution<std::size_t> size(2, 50);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = size(rng);
    std::vector<double> x(n), y(n);
    std::iota(x.begin(), x.end(), 1.0);
    std::iota(y.begin(), y.end(), 1.0);
    std::shuffle(x.begin(), x.end(), rng);
    std::shuffle(y.begin(), y.end(), rng);
    const double diff = spearman_from_rank_differences(x, y);
    const double pearson = pearson_correlation(x, y);
    worst = std::max(worst, std::abs(diff - pearson));
    expect(spearman_rho(table_of(x), table_of(y)) == diff, "spearman_rho did not use the rank-difference form");

    std::vector<double> reversed(n);
    for (std::size_t i = 0; i < n; ++i) reversed[i] = static_cast<double>(n) + 1.0 - x[i];
    expect(spearman_rho(table_of(x), table_of(x)) == 1.0, "rho(x, x) != 1 at n=" + std::to_string(n));
    expect(spearman_rho(table_of(x), table_of(reversed)) == -1.0,
           "rho(x, reverse x) != -1 at n=" + std::to_string(n));
  }
  const double elapsed = seconds_since(t0);
  expect(worst <= 1e-12, "max |rank-difference - Pearson| = " + std::to_string(worst));
  expect(elapsed < 5.0, "took " + std::to_string(elapsed) + " s");
  std::ostringstream s;
  s << "1000 permutations, max deviation " << worst << ", " << elapsed << " s";
  return s.str();
}

std::string averaging_identity() {
  MockProvider mock;
  const auto h = mock.embed(EmbeddingRequest::whole("hydrogen"));
  const auto o = mock.embed(EmbeddingRequest::whole("oxygen"));
  const auto water = composition_averaged_vector(parse_formula("H2O"), {}, mock).vector;
  double worst = 0.0;
  for (std::size_t d = 0; d < water.dim(); ++d)
    worst = std::max(worst, std::abs(water[d] - ((2.0 / 3.0) * h[d] + (1.0 / 3.0) * o[d])));
  expect(worst <= 1e-12, "water deviates by " + std::to_string(worst));

  for (const char* sym : {"Fe", "Co", "Gd", "H"}) {
    const auto single = composition_averaged_vector(Composition({{sym, 3.0}}), {"ferromagnet"}, mock).vector;
    const auto direct = mock.embed(EmbeddingRequest::whole("ferromagnet " + element_by_symbol(sym).name));
    expect(single.bit_identical(direct), std::string("single-element identity fails for ") + sym);
  }

  const auto a = composition_averaged_vector(Composition({{"Fe", 2}, {"O", 4}}), {}, mock).vector;
  const auto b = composition_averaged_vector(Composition({{"Fe", 1}, {"O", 2}}), {}, mock).vector;
  double scale = 0.0;
  for (std::size_t d = 0; d < a.dim(); ++d) scale = std::max(scale, std::abs(a[d] - b[d]));
  expect(scale <= 1e-12, "scale invariance deviates by " + std::to_string(scale));

  std::ostringstream s;
  s << "water max deviation " << worst << ", scale deviation " << scale;
  return s.str();
}

std::map<std::string, double> parse_expected(const std::string& text) {
  std::map<std::string, double> out;
  std::istringstream in(text);
  for (std::string part; std::getline(in, part, ';');) {
    const auto colon = part.find(':');
    out[part.substr(0, colon)] = std::stod(part.substr(colon + 1));
  }
  return out;
}

std::string parser_suite() {
  std::ifstream in(kSource / "tests/fixtures/formulas200.csv");
  expect(static_cast<bool>(in), "missing formula fixtures");
  std::vector<std::pair<std::string, std::string>> fixtures;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    fixtures.emplace_back(line.substr(0, comma), line.substr(comma + 1));
  }
  expect(fixtures.size() == 200, "expected 200 fixtures, found " + std::to_string(fixtures.size()));

  const auto t0 = std::chrono::steady_clock::now();
  std::size_t nested = 0, fractional = 0;
  std::mt19937_64 rng(8);
  for (const auto& [formula, expected_text] : fixtures) {
    if (formula.find('(') != std::string::npos) ++nested;
    if (formula.find('.') != std::string::npos) ++fractional;
    const Composition c = parse_formula(formula);
    const auto expected = parse_expected(expected_text);
    expect(c.size() == expected.size(), formula + ": wrong element set");
    for (const auto& [sym, amount] : expected)
      expect(std::abs(c.amount(sym) - amount) <= 1e-9 * std::max(1.0, amount), formula + ": wrong amount of " + sym);

    const std::string canon = canonical_string(c);
    expect(approx_equal(parse_formula(canon), c, 1e-9), formula + ": round trip through " + canon);

    std::vector<std::pair<std::string, double>> parts(c.amounts().begin(), c.amounts().end());
    std::shuffle(parts.begin(), parts.end(), rng);
    std::string permuted;
    for (const auto& [sym, amount] : parts) permuted += canonical_string(Composition({{sym, amount}}));
    expect(approx_equal(parse_formula(permuted), c, 1e-9), formula + ": permutation " + permuted);
  }
  expect(parse_formula("Fe2O3") == parse_formula("O3Fe2"), "Fe2O3 != O3Fe2");

  auto code_of = [](const std::string& text) -> std::optional<Errc> {
    try {
      parse_formula(text);
    } catch (const Error& e) {
      return e.code();
    }
    return std::nullopt;
  };
  const std::vector<std::pair<std::string, Errc>> errors{
      {"Xx2", Errc::UnknownElement},       {"Ca(OH", Errc::MalformedFormula},
      {"CaOH)2", Errc::MalformedFormula},  {"Ca()2", Errc::MalformedFormula},
      {"2H2O", Errc::MalformedFormula},    {"H2 O", Errc::MalformedFormula},
      {"H0", Errc::NonPositiveAmount},     {"(OH)0", Errc::NonPositiveAmount},
      {std::string(17, '(') + "H" + std::string(17, ')'), Errc::MalformedFormula}};
  for (const auto& [text, code] : errors)
    expect(code_of(text) == code, "'" + text + "' should raise " + std::string(errc_name(code)));

  const double elapsed = seconds_since(t0);
  expect(nested > 0 && fractional > 0, "fixtures lack nested or fractional formulas");
  expect(elapsed < 1.0, "took " + std::to_string(elapsed) + " s");
  std::ostringstream s;
  s << fixtures.size() << " fixtures (" << nested << " nested, " << fractional << " fractional), "
    << errors.size() << " error cases, " << elapsed << " s";
  return s.str();
}

std::vector<double> rho_matrix(const GridResult& g) {
  std::vector<double> out;
  for (const auto& c : g.cells) {
    expect(c.ok(), "unexpected failed cell: " + c.error);
    out.push_back(*c.rho);
  }
  return out;
}

bool bit_identical(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  return true;
}

std::string ranking_invariance() {
  const auto spec = load_experiment_spec(kSource / "specs/golden_grid.json").normalized();
  const auto dataset = ingest_csv(spec.dataset_path, spec.dataset);
  MockProvider mock(spec.provider.model, spec.provider.dim);
  const auto inputs = embed_grid_inputs(spec, dataset, mock);
  const auto truth = ground_truth_ranks(dataset);
  const auto base = rho_matrix(assemble_grid(spec, inputs, truth));

  GridInputs scaled = inputs;
  for (auto& row : scaled.rows)
    for (auto& v : row->vectors) v = v.scaled(3.7);
  expect(bit_identical(rho_matrix(assemble_grid(spec, scaled, truth)), base),
         "scaling compound vectors by 3.7 changed the grid");

  const std::vector<std::pair<std::string, std::function<double(double)>>> transforms{
      {"2v+1", [](double v) { return 2.0 * v + 1.0; }},
      {"v^3", [](double v) { return v * v * v; }},
      {"log v", [](double v) { return std::log(v); }}};
  for (const auto& [name, f] : transforms) {
    PropertyDataset transformed = dataset;
    for (auto& r : transformed.records) r.value = f(r.value);
    expect(bit_identical(rho_matrix(assemble_grid(spec, inputs, ground_truth_ranks(transformed))), base),
           "property transform " + name + " changed the grid");
  }
  return std::to_string(base.size()) + " cells unchanged under x3.7 and 3 monotone transforms";
}

std::string golden_end_to_end() {
  const auto spec = load_experiment_spec(kSource / "specs/golden_grid.json");
  const auto dataset = ingest_csv(spec.dataset_path, spec.dataset);
  const std::string golden = read_file(kSource / "tests/golden/grid_golden.csv");
  expect(!golden.empty(), "golden CSV missing");

  ScratchDir dir("golden");
  const fs::path cache_file = dir.path() / "embeddings.bin";
  std::string first_csv;
  {
    MockProvider mock(spec.provider.model, spec.provider.dim);
    EmbeddingCache cache(cache_file);
    CachedProvider cached(mock, cache);
    const auto g = run_grid(spec, dataset, cached);
    expect(g.terms.size() == 5 && g.keys.size() == 5,
           "grid is " + std::to_string(g.terms.size()) + "x" + std::to_string(g.keys.size()));
    expect(g.failed_cells() == 0, "failed cells in golden run");
    first_csv = grid_to_csv(g);
    expect(first_csv == golden, "grid differs from tests/golden/grid_golden.csv:\n" + first_csv);
    expect(mock.call_count() > 0, "first run made no provider calls");
  }
  MockProvider mock(spec.provider.model, spec.provider.dim);
  EmbeddingCache cache(cache_file);
  CachedProvider cached(mock, cache);
  const auto again = run_grid(spec, dataset, cached);
  expect(grid_to_csv(again) == golden, "second run differs from golden");
  expect(mock.call_count() == 0,
         "second run made " + std::to_string(mock.call_count()) + " provider calls");
  return "5x5 grid matches golden; warm rerun made 0 provider calls";
}

std::string containment() {
  ScratchDir dir("contain");
  std::ostringstream out, err;
  const int code = cli::run({"elembed", "grid", (kSource / "specs/golden_grid.json").string(), "--url",
                             "http://127.0.0.1:1", "--timeout", "0.5", "--out", dir.path().string()},
                            out, err);
  expect(code == cli::kExitPartial, "exit code " + std::to_string(code) + ", stderr: " + err.str());

  const auto g = grid_from_json(json::parse(read_file(dir.path() / "grid.json")));
  expect(g.terms.size() == 5 && g.keys.size() == 5, "report has wrong dimensions");
  expect(g.cells.size() == 25 && g.failed_cells() == 25, "not every cell is an error");
  for (const auto& c : g.cells) expect(!c.error.empty(), "error marker without a reason");

  const std::string csv = read_file(dir.path() / "grid.csv");
  std::istringstream lines(csv);
  std::size_t rows = 0, errs = 0;
  for (std::string line; std::getline(lines, line); ++rows) {
    const auto fields = split_csv_line(line);
    expect(fields.size() == 6, "CSV row with " + std::to_string(fields.size()) + " fields");
    if (rows > 0) errs += static_cast<std::size_t>(std::count(fields.begin() + 1, fields.end(), "ERR"));
  }
  expect(rows == 6 && errs == 25, "CSV is not a 5x5 all-ERR grid");
  return "exit 1, 25/25 cells ERR, CSV and JSON reports valid";
}

std::string live_smoke() {
  const char* url = std::getenv("ELEMBED_SIDECAR_URL");
  if (!url || !*url) throw Skip{"ELEMBED_SIDECAR_URL not set"};

  std::string model;
  if (const char* m = std::getenv("ELEMBED_SIDECAR_MODEL")) model = m;
  if (model.empty()) {
    std::string base(url);
    const auto scheme = base.find("://");
    const auto path_start = base.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    httplib::Client client(base.substr(0, path_start));
    const std::string prefix = path_start == std::string::npos ? "" : base.substr(path_start);
    auto res = client.Get((prefix.empty() || prefix.back() != '/' ? prefix : prefix.substr(0, prefix.size() - 1)) +
                          "/health");
    expect(res && res->status == 200, "GET /health failed");
    model = json::parse(res->body).at("model").get<std::string>();
  }

  auto spec = load_experiment_spec(kSource / "specs/gdp.json").normalized();
  const auto dataset = ingest_csv(spec.dataset_path, spec.dataset);
  RemoteProvider remote({url, model, 4, 120});
  const auto g = run_grid(spec, dataset, remote);
  expect(g.failed_cells() == 0, std::to_string(g.failed_cells()) + " failed cells");
  for (const auto& c : g.cells) expect(*c.rho >= -1.0 && *c.rho <= 1.0, "rho outside [-1, 1]");
  bool differs = false;
  for (std::size_t c = 0; c < g.keys.size(); ++c) differs |= *g.cell(0, c).rho != *g.cell(1, c).rho;
  expect(differs, "contextualised row equals the plain row");

  const double plain = *g.cell(0, 1).rho;
  const double context = *g.cell(1, 1).rho;
  std::ostringstream s;
  s << "model " << model << ": rho plain " << plain << ", with '" << g.terms[1] << "' " << context
    << (context >= plain ? " (context >= plain)" : " (context < plain)");
  return s.str();
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<std::string()> run;
    bool gating;
  };
  const std::vector<Criterion> criteria{
      {"spearman-oracle", spearman_oracle, true},
      {"averaging-identity", averaging_identity, true},
      {"parser-suite", parser_suite, true},
      {"ranking-invariance", ranking_invariance, true},
      {"golden-end-to-end", golden_end_to_end, true},
      {"containment", containment, true},
      {"live-smoke", live_smoke, false},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    try {
      const std::string detail = c.run();
      std::cout << "PASS " << c.name << ": " << detail << '\n';
    } catch (const Skip& s) {
      std::cout << "SKIP " << c.name << ": " << s.reason << '\n';
    } catch (const Failure& f) {
      std::cout << "FAIL " << c.name << (c.gating ? "" : " (non-gating)") << ": " << f.reason << '\n';
      if (c.gating) ++failed;
    } catch (const std::exception& e) {
      std::cout << "FAIL " << c.name << (c.gating ? "" : " (non-gating)") << ": " << e.what() << '\n';
      if (c.gating) ++failed;
    }
  }
  return failed == 0 ? 0 : 1;
}
