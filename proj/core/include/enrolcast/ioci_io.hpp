#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "enrolcast/ioci.hpp"

namespace enrolcast {

/// Year-tied prose, one year per line: `2014: text` or `2014 & text \\`.
/// The text becomes a single Constraint ledger note. The band comes from
/// the heading (text before the first ':'), whose main clause and
/// parenthetical are matched separately; two different bands give their
/// hull. "Context from YYYY applied" inherits that year's band and tags.
/// Stressor tags are inferred from keywords.
EvidencePack parse_evidence_prose(std::string_view text);

/// Structured form: {"years": {"2014": {"ledger": [{"type": "Constraint",
/// "note": "..."}], "band": "moderately constrained", "tags": ["funding"],
/// "thin": false}}} (the "years" wrapper is optional).
EvidencePack parse_evidence_json(std::string_view text);

/// Chooses the structured parser when the text starts with '{'.
EvidencePack parse_evidence(std::string_view text);
std::string evidence_to_json(const EvidencePack& pack);

std::set<StressorTag> infer_stressor_tags(std::string_view text);

/// A JSON object keyed by year, a list of [year, value] pairs, or a list of
/// {"year", "value"} objects. A plain list of numbers carries no year
/// mapping and yields nullopt, as does an empty mapping.
std::optional<ReferenceSeries> parse_reference(std::string_view text);

/// {"2014": {"financial_strain": 50, ..., "sanity_adjustment": 0}} or
/// {"2014": [50, 50, 50, 50, 50]}.
BaselineSet parse_baselines(std::string_view text);

/// Dimension scores from an assessor reply:
/// {"request_id": ..., "series": [{"year": 2014, "dimension_scores": {...},
///  "sanity_adjustment": 0}]}. Throws ProtocolError with the raw text on
/// any schema violation.
BaselineSet parse_assessor_reply(std::string_view text, const std::string& expected_id);

/// The output document, pretty-printed with a stable key order.
std::string emit_schema(const IociAssessment& a);
IociAssessment parse_schema(std::string_view text);

}  // namespace enrolcast
