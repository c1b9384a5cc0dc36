#include "enrolcast/series_io.hpp"

#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>

#include "enrolcast/error.hpp"
#include "enrolcast/text_util.hpp"

namespace enrolcast {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;
};

CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  int line_no = 0;
  for (const auto& raw_line : split(text, '\n')) {
    ++line_no;
    std::string_view line = trim(raw_line);
    if (line.empty() || line.front() == '#') continue;
    auto cells = split(line, ',');
    for (auto& c : cells) c = std::string(trim(c));
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw Error("line " + std::to_string(line_no) + ": expected " +
                  std::to_string(t.header.size()) + " fields");
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(line_no);
  }
  if (t.header.empty()) throw Error("missing CSV header");
  return t;
}

int column(const CsvTable& t, const std::string& name, bool required) {
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i] == name) return static_cast<int>(i);
  if (required) throw Error("missing CSV column '" + name + "'");
  return -1;
}

std::optional<double> parse_cell(const std::string& cell) {
  if (cell.empty() || cell == "NA" || cell == "na") return std::nullopt;
  return parse_double(cell);
}

std::string resolve(const fs::path& base, const std::string& file) {
  fs::path p(file);
  return (p.is_absolute() ? p : base / p).string();
}

AnnualSeries pick_series(const std::string& path, const std::string& series_id,
                         const std::string& unit) {
  for (auto& s : read_series_csv(path, unit))
    if (s.id() == series_id) return s;
  throw Error("series '" + series_id + "' not found in '" + path + "'");
}

std::string safe_name(std::string s) {
  for (auto& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  return s;
}

}  // namespace

std::vector<AnnualSeries> parse_series_csv(std::string_view text,
                                           const std::string& unit) {
  const CsvTable t = parse_csv(text);
  const int c_id = column(t, "series_id", true);
  const int c_year = column(t, "year", true);
  const int c_value = column(t, "value", true);
  const int c_vintage = column(t, "vintage", false);

  std::vector<std::string> order;
  std::map<std::string, std::vector<Observation>> grouped;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    try {
      Observation o;
      o.year = parse_int(row[c_year]);
      o.value = parse_cell(row[c_value]);
      o.vintage = (c_vintage >= 0 && !row[c_vintage].empty())
                      ? parse_int(row[c_vintage])
                      : o.year;
      const std::string& id = row[c_id];
      if (!grouped.count(id)) order.push_back(id);
      grouped[id].push_back(o);
    } catch (const Error& e) {
      throw Error("line " + std::to_string(t.line_numbers[r]) + ": " + e.what());
    }
  }
  std::vector<AnnualSeries> out;
  for (const auto& id : order)
    out.emplace_back(id, unit, std::move(grouped[id]), c_vintage < 0);
  return out;
}

std::vector<AnnualSeries> read_series_csv(const std::string& path,
                                          const std::string& unit) {
  try {
    return parse_series_csv(read_text_file(path), unit);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

std::string format_series_csv(std::span<const AnnualSeries> series) {
  bool with_vintage = false;
  for (const auto& s : series) with_vintage = with_vintage || !s.vintage_defaulted();
  std::string out = with_vintage ? "series_id,year,value,vintage\n"
                                 : "series_id,year,value\n";
  for (const auto& s : series) {
    for (const auto& p : s.points()) {
      out += s.id() + "," + std::to_string(p.year) + "," +
             (p.value ? format_double(*p.value) : std::string());
      if (with_vintage) out += "," + std::to_string(p.vintage);
      out += "\n";
    }
  }
  return out;
}

std::vector<MonthlySeries> parse_monthly_csv(std::string_view text) {
  const CsvTable t = parse_csv(text);
  const int c_id = column(t, "series_id", true);
  const int c_year = column(t, "year", true);
  const int c_month = column(t, "month", true);
  const int c_value = column(t, "value", true);
  std::vector<MonthlySeries> out;
  std::map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string& id = row[c_id];
    auto [it, fresh] = index.emplace(id, out.size());
    if (fresh) out.push_back(MonthlySeries{id, {}});
    try {
      out[it->second].points.push_back(
          {parse_int(row[c_year]), parse_int(row[c_month]), parse_double(row[c_value])});
    } catch (const Error& e) {
      throw Error("line " + std::to_string(t.line_numbers[r]) + ": " + e.what());
    }
  }
  for (const auto& m : out) m.require_valid();
  return out;
}

std::vector<MonthlySeries> read_monthly_csv(const std::string& path) {
  try {
    return parse_monthly_csv(read_text_file(path));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

Dataset load_dataset(const std::string& manifest_path) {
  json doc;
  try {
    doc = json::parse(read_text_file(manifest_path));
  } catch (const json::exception& e) {
    throw Error(manifest_path + ": " + e.what());
  }
  const fs::path base = fs::path(manifest_path).parent_path();
  Dataset ds;
  try {
    for (const auto& t : doc.at("targets")) {
      const std::string cohort = t.at("cohort").get<std::string>();
      const std::string file = resolve(base, t.at("file").get<std::string>());
      const std::string id = t.value("series_id", cohort);
      ds.targets.emplace(Cohort(cohort).name,
                         pick_series(file, id, t.value("unit", "headcount")));
    }
    for (const auto& r : doc.value("regimes", json::array())) {
      CovariateSet set;
      set.regime_name = r.at("name").get<std::string>();
      for (const auto& c : r.value("series", json::array())) {
        const std::string name = c.at("name").get<std::string>();
        const std::string file = resolve(base, c.at("file").get<std::string>());
        CovariateSpec spec{pick_series(file, c.value("series_id", name),
                                       c.value("unit", "")),
                           c.value("lag_years", 0), c.value("standardize", true)};
        set.series.emplace(name, std::move(spec));
      }
      ds.covariate_regimes.push_back(std::move(set));
    }
  } catch (const json::exception& e) {
    throw Error(manifest_path + ": malformed manifest: " + e.what());
  }
  return ds;
}

std::string save_dataset(const Dataset& ds, const std::string& directory) {
  fs::create_directories(directory);
  json doc;
  doc["targets"] = json::array();
  for (const auto& [cohort, s] : ds.targets) {
    const std::string file = "target_" + safe_name(cohort) + ".csv";
    write_text_file((fs::path(directory) / file).string(),
                    format_series_csv(std::span(&s, 1)));
    doc["targets"].push_back(
        {{"cohort", cohort}, {"file", file}, {"series_id", s.id()}, {"unit", s.unit()}});
  }
  doc["regimes"] = json::array();
  for (const auto& r : ds.covariate_regimes) {
    json jr = {{"name", r.regime_name}, {"series", json::array()}};
    for (const auto& [name, spec] : r.series) {
      const std::string file =
          "cov_" + safe_name(r.regime_name) + "__" + safe_name(name) + ".csv";
      write_text_file((fs::path(directory) / file).string(),
                      format_series_csv(std::span(&spec.series, 1)));
      jr["series"].push_back({{"name", name},
                              {"file", file},
                              {"series_id", spec.series.id()},
                              {"unit", spec.series.unit()},
                              {"lag_years", spec.lag_years},
                              {"standardize", spec.standardize}});
    }
    doc["regimes"].push_back(std::move(jr));
  }
  const std::string manifest = (fs::path(directory) / "manifest.json").string();
  write_text_file(manifest, doc.dump(2) + "\n");
  return manifest;
}

}  // namespace enrolcast
