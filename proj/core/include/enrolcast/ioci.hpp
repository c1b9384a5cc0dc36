#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "enrolcast/timebase.hpp"

namespace enrolcast {

// Dimension order is fixed throughout: financial, demand, operational,
// workforce, governance.
inline constexpr int kDimensions = 5;
inline constexpr std::array<std::string_view, kDimensions> kDimensionKeys{
    "financial_strain", "demand_enrolment_pressure", "operational_disruption",
    "workforce_capacity", "governance_strategic_constraint"};

/// Weights held as integer basis points so that the weighted average and
/// its rounding are exact.
struct IociWeights {
  std::array<int, kDimensions> bp{3000, 2500, 2000, 1500, 1000};

  /// Throws Error unless every weight is a multiple of 0.0001, non-negative,
  /// and they sum to 1.
  static IociWeights from_decimal(const std::array<double, kDimensions>& w);
  double weight(int i) const { return bp[i] / 10000.0; }
  void require_valid() const;
  friend bool operator==(const IociWeights&, const IociWeights&) = default;
};

using DimensionScores = std::array<int, kDimensions>;

enum class LedgerKind { constraint, offset };

struct LedgerEntry {
  LedgerKind kind = LedgerKind::constraint;
  std::string note;
  friend bool operator==(const LedgerEntry&, const LedgerEntry&) = default;
};

enum class StressorTag { enrolment, covid_disruption, restructure, funding, strategic };

std::string to_string(StressorTag t);
StressorTag parse_stressor_tag(std::string_view s);

enum class NarrativeBand { exceptionally_stable, mild, moderate, upper_moderate, high, crisis };

struct BandRange {
  int lo = 0;
  int hi = 100;
  int preferred_lo = 0;
  int preferred_hi = 100;
  friend bool operator==(const BandRange&, const BandRange&) = default;
};

BandRange band_range(NarrativeBand b);
/// Label text (any documented alias, case-insensitive) to its band.
/// Throws Error on an unknown label.
NarrativeBand parse_band_label(std::string_view label);
BandRange band_of(std::string_view label);
/// Longest alias occurring anywhere inside `text`, if any.
std::optional<NarrativeBand> find_band_in_text(std::string_view text);

struct YearEvidence {
  Year year = 0;
  std::vector<LedgerEntry> ledger;
  /// Hard band implied by the narrative labels; a heading that mixes two
  /// labels yields their hull.
  std::optional<BandRange> band;
  std::set<StressorTag> tags;
  bool thin = false;

  bool has_offsets() const;
  friend bool operator==(const YearEvidence&, const YearEvidence&) = default;
};

using EvidencePack = std::map<Year, YearEvidence>;
using ReferenceSeries = std::map<Year, int>;

enum class IociMode { strict, calibration };

/// Calibration iff the reference carries at least one (year, value) pair.
IociMode select_mode(const std::optional<ReferenceSeries>& reference);

/// floor(x + 0.5) for x >= 0; throws Error on negative input.
long long round_half_up(double x);

struct StrictResult {
  double raw = 0.0;
  int final_ioci = 0;
};

/// Weighted average and clamp(round_half_up(raw) + sanity, 0, 100).
StrictResult compute_strict(const DimensionScores& dims, int sanity,
                            const IociWeights& weights = {});
/// Weighted average in basis points (exact).
long long weighted_raw_bp(const DimensionScores& dims, const IociWeights& weights = {});
int rounding_of_bp(long long raw_bp);

struct Box {
  int lo = 0;
  int hi = 100;
  friend bool operator==(const Box&, const Box&) = default;
};

struct BandConstraint {
  std::optional<BandRange> overall_band;
  std::array<Box, kDimensions> boxes;
};

/// Boxes of +-15 around `overall`, widened upward by the stressor bonus
/// (+10 for enrolment, covid, restructure and funding tags on their
/// dimension, +5 for strategic on governance) and downward by 5 on every
/// dimension when the ledger records offsets.
BandConstraint make_constraint(int overall, const std::set<StressorTag>& tags,
                               bool has_offsets,
                               std::optional<BandRange> band = std::nullopt);

struct CalibrationResult {
  DimensionScores dims{};
  int l1 = 0;
  int steps = 0;
  bool clamped = false;  // baseline had to be pulled into its box
};

/// Single-unit greedy walk from the baseline until round_half_up(raw)
/// equals the target. Dimensions are tried in a fixed total order:
/// tag-matched first, then by weight descending, then dimension order.
/// Throws Error("calibration fit failed") when the step budget runs out.
CalibrationResult fit_calibration(const DimensionScores& baseline, int target,
                                  const BandConstraint& constraint,
                                  const std::set<StressorTag>& tags,
                                  const IociWeights& weights = {}, int step_budget = 500);

struct Feasibility {
  bool feasible = true;
  int closest = 0;
  std::optional<std::string> flag;
};

Feasibility feasibility_check(int target, const BandRange& band);

/// 0.85 - 0.10 thin - 0.10 (ledger < 3) - 0.15 missing, clamped to [0, 1];
/// a missing year is additionally capped at 0.40. Returned in hundredths.
int confidence_hundredths(const YearEvidence* evidence, bool missing);
double confidence(const YearEvidence* evidence, bool missing);

struct YearInput {
  DimensionScores dims{};
  int sanity = 0;
  friend bool operator==(const YearInput&, const YearInput&) = default;
};

using BaselineSet = std::map<Year, YearInput>;

struct YearAssessment {
  Year year = 0;
  DimensionScores dims{};
  long long raw_bp = 0;
  int sanity = 0;
  int final_ioci = 0;
  std::vector<LedgerEntry> ledger;
  int confidence_hundredths = 0;
  std::vector<std::string> flags;

  double weighted_average_raw() const { return static_cast<double>(raw_bp) / 10000.0; }
  double confidence() const { return confidence_hundredths / 100.0; }
  friend bool operator==(const YearAssessment&, const YearAssessment&) = default;
};

struct ComparisonRow {
  Year year = 0;
  int reference = 0;
  int output = 0;
  friend bool operator==(const ComparisonRow&, const ComparisonRow&) = default;
};

struct IociDiagnostics {
  bool enabled = false;
  std::vector<Year> aligned_years;
  std::optional<double> pearson_r;
  std::optional<double> spearman_rho;
  std::optional<double> mae;
  std::optional<double> rmse;
  std::vector<ComparisonRow> comparison;
  friend bool operator==(const IociDiagnostics&, const IociDiagnostics&) = default;
};

/// Computed on the year intersection. r and rho are null with fewer than
/// two aligned years or a constant side; MAE and RMSE only with none.
IociDiagnostics compute_diagnostics(const ReferenceSeries& reference,
                                    const std::map<Year, int>& output);

struct IociAssessment {
  IociWeights weights;
  std::vector<YearAssessment> series;
  std::vector<int> sequence;
  IociDiagnostics diagnostics;
  std::vector<std::string> flags;  // series-level, used for the empty case

  friend bool operator==(const IociAssessment&, const IociAssessment&) = default;
};

/// Runs the full per-year procedure. Years with evidence need a baseline
/// in `inputs` (Error otherwise).
IociAssessment score_series(const EvidencePack& evidence,
                            const std::optional<ReferenceSeries>& reference,
                            const BaselineSet& inputs, const IociWeights& weights = {});

}  // namespace enrolcast
