#include "elembed/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace elembed {

using nlohmann::json;

std::string grid_to_csv(const GridResult& g) {
  std::string out = "term";
  for (const auto& k : g.keys) out += "," + csv_escape(k);
  out += '\n';
  for (std::size_t r = 0; r < g.terms.size(); ++r) {
    out += csv_escape(g.terms[r]);
    for (std::size_t c = 0; c < g.keys.size(); ++c) {
      const GridCell& cell = g.cell(r, c);
      out += ',';
      out += cell.ok() ? format_double(*cell.rho) : "ERR";
    }
    out += '\n';
  }
  return out;
}

json grid_to_json(const GridResult& g) {
  json rho = json::array();
  for (std::size_t r = 0; r < g.terms.size(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < g.keys.size(); ++c) {
      const GridCell& cell = g.cell(r, c);
      if (cell.ok()) row.push_back(*cell.rho);
      else row.push_back(json{{"error", cell.error}});
    }
    rho.push_back(std::move(row));
  }
  const auto& m = g.metadata;
  return json{{"metadata",
               {{"model_id", m.model_id},
                {"dataset", m.dataset_name},
                {"strategy", m.strategy},
                {"pooling", m.pooling},
                {"timestamp", m.timestamp},
                {"spec_hash", m.spec_hash},
                {"config", m.config}}},
              {"terms", g.terms},
              {"keys", g.keys},
              {"rho", rho}};
}

GridResult grid_from_json(const json& j) {
  GridResult g;
  try {
    g.terms = j.at("terms").get<std::vector<std::string>>();
    g.keys = j.at("keys").get<std::vector<std::string>>();
    const json& rho = j.at("rho");
    if (!rho.is_array() || rho.size() != g.terms.size())
      throw Error(Errc::SpecInvalid, "rho has the wrong number of rows");
    for (const auto& row : rho) {
      if (!row.is_array() || row.size() != g.keys.size())
        throw Error(Errc::SpecInvalid, "rho row has the wrong number of cells");
      for (const auto& v : row) {
        GridCell cell;
        if (v.is_number()) cell.rho = v.get<double>();
        else cell.error = v.at("error").get<std::string>();
        g.cells.push_back(std::move(cell));
      }
    }
    if (j.contains("metadata")) {
      const json& m = j.at("metadata");
      g.metadata.model_id = m.value("model_id", "");
      g.metadata.dataset_name = m.value("dataset", "");
      g.metadata.strategy = m.value("strategy", "");
      g.metadata.pooling = m.value("pooling", "");
      g.metadata.timestamp = m.value("timestamp", "");
      g.metadata.spec_hash = m.value("spec_hash", "");
      g.metadata.config = m.value("config", json::object());
    }
  } catch (const json::exception& e) {
    throw Error(Errc::SpecInvalid, std::string("not a grid document: ") + e.what());
  }
  return g;
}

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// -1 -> blue, 0 -> white, +1 -> red.
std::string diverging_color(double rho) {
  const double t = std::clamp(rho, -1.0, 1.0);
  int r = 255, g = 255, b = 255;
  if (t >= 0) {
    g = b = static_cast<int>(std::lround(255.0 * (1.0 - t)));
  } else {
    r = g = static_cast<int>(std::lround(255.0 * (1.0 + t)));
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string axis_label(const std::string& s) { return s.empty() ? "(none)" : s; }

}  // namespace

std::string grid_to_svg(const GridResult& g) {
  constexpr int cell = 56;
  constexpr int left = 170;
  constexpr int top = 150;
  const int width = left + cell * static_cast<int>(g.keys.size()) + 20;
  const int height = top + cell * static_cast<int>(g.terms.size()) + 40;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<text x=\"" << left << "\" y=\"16\" font-size=\"13\">Spearman rho: "
      << xml_escape(g.metadata.dataset_name) << " / " << xml_escape(g.metadata.model_id)
      << "</text>\n";
  for (std::size_t c = 0; c < g.keys.size(); ++c) {
    const int x = left + cell * static_cast<int>(c) + cell / 2;
    svg << "<text transform=\"translate(" << x << "," << top - 6
        << ") rotate(-60)\" text-anchor=\"start\">" << xml_escape(axis_label(g.keys[c]))
        << "</text>\n";
  }
  for (std::size_t r = 0; r < g.terms.size(); ++r) {
    const int y = top + cell * static_cast<int>(r);
    svg << "<text x=\"" << left - 6 << "\" y=\"" << y + cell / 2 + 4
        << "\" text-anchor=\"end\">" << xml_escape(axis_label(g.terms[r])) << "</text>\n";
    for (std::size_t c = 0; c < g.keys.size(); ++c) {
      const int x = left + cell * static_cast<int>(c);
      const GridCell& gc = g.cell(r, c);
      const std::string fill = gc.ok() ? diverging_color(*gc.rho) : "#bbbbbb";
      svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
          << "\" fill=\"" << fill << "\" stroke=\"#ffffff\"/>\n";
      char label[16];
      if (gc.ok()) std::snprintf(label, sizeof label, "%.2f", *gc.rho);
      else std::snprintf(label, sizeof label, "ERR");
      svg << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
          << "\" text-anchor=\"middle\">" << label << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string parity_to_csv(const ParitySeries& p) {
  std::string out = "truth_rank,similarity_rank,bin_count\n";
  for (std::size_t i = 0; i < p.items.size(); ++i) {
    out += format_double(p.truth_rank[i]) + "," + format_double(p.similarity_rank[i]) + "," +
           std::to_string(p.count_for(i)) + "\n";
  }
  return out;
}

std::string ranking_to_csv(const PropertyDataset& d, const EmbeddedItems& items,
                           const RankingResult& r) {
  std::unordered_map<std::string, double> value;
  for (const auto& rec : d.records) value.emplace(rec.key, rec.value);
  std::unordered_map<std::string, double> truth;
  for (std::size_t i = 0; i < r.parity.items.size(); ++i)
    truth.emplace(r.parity.items[i], r.parity.truth_rank[i]);

  std::string out = "item,value,similarity,truth_rank,similarity_rank\n";
  for (std::size_t i = 0; i < items.keys.size(); ++i) {
    const auto& key = items.keys[i];
    out += csv_escape(key) + "," + format_double(value.at(key)) + "," +
           format_double(r.similarity[i]) + "," + format_double(truth.at(key)) + "," +
           format_double(r.similarity_ranks.ranks()[i]) + "\n";
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::OutputUnwritable, "cannot write " + path.string());
  out << content;
  out.flush();
  if (!out) throw Error(Errc::OutputUnwritable, "failed writing " + path.string());
}

std::vector<std::filesystem::path> emit_grid_reports(const GridResult& g,
                                                     const std::vector<std::string>& formats,
                                                     const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  for (const auto& f : formats) {
    std::filesystem::path path;
    if (f == "csv") {
      path = dir / "grid.csv";
      write_text_file(path, grid_to_csv(g));
    } else if (f == "json") {
      path = dir / "grid.json";
      write_text_file(path, grid_to_json(g).dump(2) + "\n");
    } else if (f == "svg") {
      path = dir / "grid.svg";
      write_text_file(path, grid_to_svg(g));
    } else {
      throw Error(Errc::SpecInvalid, "unknown report format '" + f + "'");
    }
    written.push_back(path);
  }
  return written;
}

}  // namespace elembed
