#include "enrolcast/ioci_io.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <regex>

#include "enrolcast/error.hpp"
#include "enrolcast/text_util.hpp"

namespace enrolcast {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct Keyword {
  std::string_view text;
  StressorTag tag;
};

constexpr Keyword kKeywords[] = {
    {"enrolment", StressorTag::enrolment},
    {"enrollment", StressorTag::enrolment},
    {"recruitment", StressorTag::enrolment},
    {"covid", StressorTag::covid_disruption},
    {"border closure", StressorTag::covid_disruption},
    {"remote delivery", StressorTag::covid_disruption},
    {"restructur", StressorTag::restructure},
    {"job cuts", StressorTag::restructure},
    {"hiring freeze", StressorTag::restructure},
    {"funding gap", StressorTag::funding},
    {"deficit", StressorTag::funding},
    {"liquidity", StressorTag::funding},
    {"revenue shock", StressorTag::funding},
    {"strategic", StressorTag::strategic},
    {"regulatory", StressorTag::strategic},
    {"governance", StressorTag::strategic},
};

std::optional<BandRange> hull(const std::vector<NarrativeBand>& bands) {
  if (bands.empty()) return std::nullopt;
  BandRange r = band_range(bands.front());
  for (std::size_t i = 1; i < bands.size(); ++i) {
    const BandRange b = band_range(bands[i]);
    if (b == r) continue;
    r.lo = std::min(r.lo, b.lo);
    r.hi = std::max(r.hi, b.hi);
    r.preferred_lo = std::min(r.preferred_lo, b.preferred_lo);
    r.preferred_hi = std::max(r.preferred_hi, b.preferred_hi);
  }
  return r;
}

std::optional<BandRange> heading_band(std::string_view heading) {
  std::string main;
  std::vector<std::string> parens;
  int depth = 0;
  for (char ch : heading) {
    if (ch == '(') {
      if (depth++ == 0) parens.emplace_back();
      continue;
    }
    if (ch == ')') {
      depth = std::max(0, depth - 1);
      continue;
    }
    (depth > 0 ? parens.back() : main) += ch;
  }
  std::vector<NarrativeBand> found;
  if (auto b = find_band_in_text(main)) found.push_back(*b);
  for (const auto& p : parens)
    if (auto b = find_band_in_text(p)) found.push_back(*b);
  return hull(found);
}

Year parse_year_key(const std::string& key) {
  try {
    return parse_int(key);
  } catch (const Error&) {
    throw Error("bad year key '" + key + "'");
  }
}

LedgerKind parse_kind(const std::string& s) {
  const auto l = to_lower(s);
  if (l == "constraint") return LedgerKind::constraint;
  if (l == "offset") return LedgerKind::offset;
  throw Error("ledger type must be Constraint or Offset, got '" + s + "'");
}

const char* kind_name(LedgerKind k) {
  return k == LedgerKind::offset ? "Offset" : "Constraint";
}

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("cannot parse ") + what + ": " + e.what());
  }
}

DimensionScores dims_from_json(const json& j) {
  DimensionScores d{};
  if (j.is_array()) {
    if (j.size() != kDimensions) throw Error("dimension list must have five entries");
    for (int i = 0; i < kDimensions; ++i) {
      if (!j.at(i).is_number_integer()) throw Error("dimension scores must be integers");
      d[i] = j.at(i).get<int>();
    }
  } else {
    for (int i = 0; i < kDimensions; ++i) {
      const std::string key(kDimensionKeys[i]);
      if (!j.contains(key)) throw Error("missing dimension '" + key + "'");
      const auto& v = j.at(key);
      if (!v.is_number_integer()) throw Error("dimension '" + key + "' must be an integer");
      d[i] = v.get<int>();
    }
  }
  for (int v : d)
    if (v < 0 || v > 100) throw Error("dimension scores must be in [0, 100]");
  return d;
}

ordered_json nullable(const std::optional<double>& v) {
  if (!v) return nullptr;
  if (!std::isfinite(*v)) throw Error("non-finite value reached serialization");
  return *v;
}

std::optional<double> from_nullable(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

std::set<StressorTag> infer_stressor_tags(std::string_view text) {
  const auto l = to_lower(text);
  std::set<StressorTag> tags;
  for (const auto& k : kKeywords)
    if (l.find(k.text) != std::string::npos) tags.insert(k.tag);
  return tags;
}

EvidencePack parse_evidence_prose(std::string_view text) {
  static const std::regex line_re(R"(^\s*(\d{4})\s*[:&]\s*(.*?)\s*(\\\\)?\s*$)");
  static const std::regex context_re(R"(context from (\d{4}) applied)", std::regex::icase);

  EvidencePack pack;
  std::map<Year, Year> inherits;
  for (const auto& raw_line : split(text, '\n')) {
    std::smatch m;
    const std::string line(raw_line);
    if (!std::regex_match(line, m, line_re)) continue;
    const Year year = parse_int(m[1].str());
    const std::string body = std::string(trim(m[2].str()));
    if (body.empty()) continue;

    auto& ev = pack[year];
    ev.year = year;
    ev.ledger.push_back({LedgerKind::constraint, body});
    const auto colon = body.find(':');
    if (colon != std::string::npos) {
      const std::string heading = body.substr(0, colon);
      if (auto b = heading_band(heading)) ev.band = b;
      std::smatch cm;
      if (std::regex_search(heading, cm, context_re)) inherits[year] = parse_int(cm[1].str());
    }
    for (auto t : infer_stressor_tags(body)) ev.tags.insert(t);
  }
  for (const auto& [year, source] : inherits) {
    auto it = pack.find(source);
    if (it == pack.end() || source >= year) continue;
    auto& ev = pack[year];
    if (!ev.band) ev.band = it->second.band;
    ev.tags.insert(it->second.tags.begin(), it->second.tags.end());
  }
  return pack;
}

EvidencePack parse_evidence_json(std::string_view text) {
  const json doc = parse_json(text, "evidence pack");
  const json& years = doc.contains("years") ? doc.at("years") : doc;
  if (!years.is_object()) throw Error("evidence pack must be an object keyed by year");
  EvidencePack pack;
  try {
    for (const auto& [key, entry] : years.items()) {
      YearEvidence ev;
      ev.year = parse_year_key(key);
      if (entry.is_string()) {
        pack.merge(parse_evidence_prose(key + ": " + entry.get<std::string>()));
        continue;
      }
      for (const auto& item : entry.value("ledger", json::array())) {
        LedgerEntry le;
        le.kind = parse_kind(item.value("type", std::string("Constraint")));
        le.note = item.at("note").get<std::string>();
        if (trim(le.note).empty()) throw Error("ledger notes must not be empty");
        ev.ledger.push_back(std::move(le));
      }
      if (entry.contains("band") && !entry["band"].is_null())
        ev.band = band_of(entry["band"].get<std::string>());
      for (const auto& t : entry.value("tags", json::array()))
        ev.tags.insert(parse_stressor_tag(t.get<std::string>()));
      ev.thin = entry.value("thin", false);
      pack[ev.year] = std::move(ev);
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed evidence pack: ") + e.what());
  }
  return pack;
}

EvidencePack parse_evidence(std::string_view text) {
  const auto t = trim(text);
  if (!t.empty() && t.front() == '{') return parse_evidence_json(t);
  return parse_evidence_prose(text);
}

std::string evidence_to_json(const EvidencePack& pack) {
  ordered_json years = ordered_json::object();
  for (const auto& [year, ev] : pack) {
    ordered_json ledger = ordered_json::array();
    for (const auto& e : ev.ledger) ledger.push_back({{"type", kind_name(e.kind)}, {"note", e.note}});
    ordered_json entry{{"ledger", ledger}};
    if (ev.band) entry["band_range"] = {ev.band->lo, ev.band->hi};
    ordered_json tags = ordered_json::array();
    for (auto t : ev.tags) tags.push_back(to_string(t));
    entry["tags"] = tags;
    entry["thin"] = ev.thin;
    years[std::to_string(year)] = entry;
  }
  return ordered_json{{"years", years}}.dump();
}

std::optional<ReferenceSeries> parse_reference(std::string_view text) {
  const json doc = parse_json(text, "reference series");
  ReferenceSeries ref;
  try {
    if (doc.is_object()) {
      const json& body = doc.contains("reference") ? doc.at("reference") : doc;
      for (const auto& [key, value] : body.items()) ref[parse_year_key(key)] = value.get<int>();
    } else if (doc.is_array()) {
      for (const auto& item : doc) {
        if (item.is_number()) return std::nullopt;
        if (item.is_array() && item.size() == 2) {
          ref[item[0].get<int>()] = item[1].get<int>();
        } else if (item.is_object() && item.contains("year")) {
          const json& v = item.contains("value") ? item["value"] : item.at("ioci");
          ref[item["year"].get<int>()] = v.get<int>();
        } else {
          throw Error("unrecognised reference entry");
        }
      }
    } else {
      return std::nullopt;
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed reference series: ") + e.what());
  }
  for (const auto& [y, v] : ref)
    if (v < 0 || v > 100) throw Error("reference values must be in [0, 100]");
  if (ref.empty()) return std::nullopt;
  return ref;
}

BaselineSet parse_baselines(std::string_view text) {
  const json doc = parse_json(text, "baselines");
  if (!doc.is_object()) throw Error("baselines must be an object keyed by year");
  BaselineSet out;
  try {
    for (const auto& [key, entry] : doc.items()) {
      YearInput in;
      if (entry.is_object() && entry.contains("dimension_scores")) {
        in.dims = dims_from_json(entry.at("dimension_scores"));
      } else {
        in.dims = dims_from_json(entry);
      }
      if (entry.is_object()) in.sanity = entry.value("sanity_adjustment", 0);
      if (in.sanity < -5 || in.sanity > 5) throw Error("sanity adjustment must be in [-5, 5]");
      out[parse_year_key(key)] = in;
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed baselines: ") + e.what());
  }
  return out;
}

BaselineSet parse_assessor_reply(std::string_view text, const std::string& expected_id) {
  const std::string raw(text);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("protocol error: ") + e.what(), raw);
  }
  try {
    if (!doc.is_object()) throw Error("reply must be an object");
    if (doc.value("request_id", std::string()) != expected_id)
      throw Error("reply does not answer request '" + expected_id + "'");
    if (doc.contains("error")) throw Error("assessor error: " + doc["error"].dump());
    BaselineSet out;
    for (const auto& item : doc.at("series")) {
      YearInput in;
      in.dims = dims_from_json(item.at("dimension_scores"));
      in.sanity = item.value("sanity_adjustment", 0);
      if (in.sanity < -5 || in.sanity > 5) throw Error("sanity adjustment must be in [-5, 5]");
      out[item.at("year").get<int>()] = in;
    }
    return out;
  } catch (const ProtocolError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProtocolError(std::string("protocol error: ") + e.what(), raw);
  }
}

std::string emit_schema(const IociAssessment& a) {
  ordered_json weights = ordered_json::object();
  for (int i = 0; i < kDimensions; ++i) weights[std::string(kDimensionKeys[i])] = a.weights.weight(i);

  ordered_json anchors{{"0-20", "exceptionally favorable operating conditions"},
                       {"21-40", "mildly constrained"},
                       {"41-60", "moderately constrained"},
                       {"61-80", "highly constrained"},
                       {"81-100", "crisis-level"}};

  ordered_json series = ordered_json::array();
  for (const auto& y : a.series) {
    ordered_json dims = ordered_json::object();
    for (int i = 0; i < kDimensions; ++i) dims[std::string(kDimensionKeys[i])] = y.dims[i];
    ordered_json ledger = ordered_json::array();
    for (const auto& e : y.ledger) ledger.push_back({{"type", kind_name(e.kind)}, {"note", e.note}});
    series.push_back({{"year", y.year},
                      {"ioci_overall", y.final_ioci},
                      {"dimension_scores", dims},
                      {"calculation",
                       {{"weighted_average_raw", y.weighted_average_raw()},
                        {"rounding", "round_half_up"},
                        {"sanity_adjustment", y.sanity},
                        {"final_ioci", y.final_ioci}}},
                      {"evidence_ledger", ledger},
                      {"confidence", y.confidence()},
                      {"flags", y.flags}});
  }

  const auto& d = a.diagnostics;
  ordered_json comparison = ordered_json::array();
  for (const auto& row : d.comparison)
    comparison.push_back({{"year", row.year}, {"reference", row.reference}, {"llm_ioci", row.output}});
  ordered_json diag{{"enabled", d.enabled},
                    {"aligned_years", d.aligned_years},
                    {"pearson_r", nullable(d.pearson_r)},
                    {"spearman_rho", nullable(d.spearman_rho)},
                    {"mae", nullable(d.mae)},
                    {"rmse", nullable(d.rmse)},
                    {"comparison", comparison}};

  ordered_json doc{{"weights", weights},
                   {"scale_anchors", anchors},
                   {"series", series},
                   {"sequence", a.sequence},
                   {"diagnostics", diag}};
  if (!a.flags.empty()) doc["flags"] = a.flags;
  return doc.dump(2) + "\n";
}

IociAssessment parse_schema(std::string_view text) {
  const json doc = parse_json(text, "IOCI document");
  IociAssessment a;
  try {
    std::array<double, kDimensions> w{};
    for (int i = 0; i < kDimensions; ++i)
      w[i] = doc.at("weights").at(std::string(kDimensionKeys[i])).get<double>();
    a.weights = IociWeights::from_decimal(w);
    for (const auto& item : doc.at("series")) {
      YearAssessment y;
      y.year = item.at("year").get<int>();
      y.dims = dims_from_json(item.at("dimension_scores"));
      const auto& calc = item.at("calculation");
      y.raw_bp = std::llround(calc.at("weighted_average_raw").get<double>() * 10000.0);
      y.sanity = calc.at("sanity_adjustment").get<int>();
      y.final_ioci = calc.at("final_ioci").get<int>();
      for (const auto& e : item.at("evidence_ledger"))
        y.ledger.push_back({parse_kind(e.at("type").get<std::string>()),
                            e.at("note").get<std::string>()});
      y.confidence_hundredths =
          static_cast<int>(std::llround(item.at("confidence").get<double>() * 100.0));
      y.flags = item.at("flags").get<std::vector<std::string>>();
      a.series.push_back(std::move(y));
    }
    a.sequence = doc.at("sequence").get<std::vector<int>>();
    const auto& d = doc.at("diagnostics");
    a.diagnostics.enabled = d.at("enabled").get<bool>();
    a.diagnostics.aligned_years = d.at("aligned_years").get<std::vector<int>>();
    a.diagnostics.pearson_r = from_nullable(d.at("pearson_r"));
    a.diagnostics.spearman_rho = from_nullable(d.at("spearman_rho"));
    a.diagnostics.mae = from_nullable(d.at("mae"));
    a.diagnostics.rmse = from_nullable(d.at("rmse"));
    for (const auto& row : d.at("comparison"))
      a.diagnostics.comparison.push_back({row.at("year").get<int>(),
                                          row.at("reference").get<int>(),
                                          row.at("llm_ioci").get<int>()});
    if (doc.contains("flags")) a.flags = doc.at("flags").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(std::string("malformed IOCI document: ") + e.what());
  }
  return a;
}

}  // namespace enrolcast
