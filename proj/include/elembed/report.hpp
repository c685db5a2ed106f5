#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "elembed/dataset.hpp"
#include "elembed/experiment.hpp"

namespace elembed {

// Grid CSV: header "term,<key>...", then one row per term. Cells hold the
// shortest round-tripping decimal of rho, or ERR.
std::string grid_to_csv(const GridResult& g);
nlohmann::json grid_to_json(const GridResult& g);
// Throws Errc::SpecInvalid when the document does not describe a grid.
GridResult grid_from_json(const nlohmann::json& j);
// Heat map, diverging blue-white-red scale centred at 0; failed cells grey.
std::string grid_to_svg(const GridResult& g);

// truth_rank,similarity_rank,bin_count
std::string parity_to_csv(const ParitySeries& p);
// item,value,similarity,truth_rank,similarity_rank
std::string ranking_to_csv(const PropertyDataset& d, const EmbeddedItems& items,
                           const RankingResult& r);

// Writes grid.csv / grid.json / grid.svg into `dir` for each requested format
// and returns the paths written. Throws Errc::OutputUnwritable.
std::vector<std::filesystem::path> emit_grid_reports(const GridResult& g,
                                                     const std::vector<std::string>& formats,
                                                     const std::filesystem::path& dir);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace elembed
