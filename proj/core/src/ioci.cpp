#include "enrolcast/ioci.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "enrolcast/error.hpp"
#include "enrolcast/metrics.hpp"
#include "enrolcast/text_util.hpp"

namespace enrolcast {

namespace {

struct Alias {
  std::string_view text;
  NarrativeBand band;
};

constexpr Alias kAliases[] = {
    {"exceptionally stable", NarrativeBand::exceptionally_stable},
    {"exceptionally-stable", NarrativeBand::exceptionally_stable},
    {"exceptionally favourable", NarrativeBand::exceptionally_stable},
    {"exceptionally favorable", NarrativeBand::exceptionally_stable},
    {"very low stress", NarrativeBand::exceptionally_stable},
    {"mild", NarrativeBand::mild},
    {"mild constraint", NarrativeBand::mild},
    {"mildly constrained", NarrativeBand::mild},
    {"minor constraint", NarrativeBand::mild},
    {"stabilising", NarrativeBand::mild},
    {"stabilizing", NarrativeBand::mild},
    {"moderate", NarrativeBand::moderate},
    {"moderate constraint", NarrativeBand::moderate},
    {"moderately constrained", NarrativeBand::moderate},
    {"upper-moderate", NarrativeBand::upper_moderate},
    {"upper moderate", NarrativeBand::upper_moderate},
    {"upper-moderate constraint", NarrativeBand::upper_moderate},
    {"upper moderate constraint", NarrativeBand::upper_moderate},
    {"high", NarrativeBand::high},
    {"highly constrained", NarrativeBand::high},
    {"crisis", NarrativeBand::crisis},
    {"crisis-level", NarrativeBand::crisis},
    {"crisis level", NarrativeBand::crisis},
};

constexpr int kTagDimension[] = {1, 2, 3, 0, 4};  // indexed by StressorTag

int tag_dimension(StressorTag t) { return kTagDimension[static_cast<int>(t)]; }

int tag_bonus(StressorTag t) { return t == StressorTag::strategic ? 5 : 10; }

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

bool constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

}  // namespace

IociWeights IociWeights::from_decimal(const std::array<double, kDimensions>& w) {
  IociWeights out;
  for (int i = 0; i < kDimensions; ++i) {
    const double scaled = w[i] * 10000.0;
    const double r = std::round(scaled);
    if (!std::isfinite(scaled) || std::abs(scaled - r) > 1e-6)
      throw Error("weights must be multiples of 0.0001");
    out.bp[i] = static_cast<int>(r);
  }
  out.require_valid();
  return out;
}

void IociWeights::require_valid() const {
  int sum = 0;
  for (int b : bp) {
    if (b < 0) throw Error("weights must be non-negative");
    sum += b;
  }
  if (sum != 10000) throw Error("weights must sum to 1");
}

std::string to_string(StressorTag t) {
  switch (t) {
    case StressorTag::enrolment: return "enrolment";
    case StressorTag::covid_disruption: return "covid_disruption";
    case StressorTag::restructure: return "restructure";
    case StressorTag::funding: return "funding";
    case StressorTag::strategic: return "strategic";
  }
  return "enrolment";
}

StressorTag parse_stressor_tag(std::string_view s) {
  const auto l = to_lower(trim(s));
  if (l == "enrolment" || l == "enrollment") return StressorTag::enrolment;
  if (l == "covid_disruption" || l == "covid" || l == "disruption")
    return StressorTag::covid_disruption;
  if (l == "restructure" || l == "restructuring") return StressorTag::restructure;
  if (l == "funding") return StressorTag::funding;
  if (l == "strategic") return StressorTag::strategic;
  throw Error("unknown stressor tag '" + std::string(s) + "'");
}

BandRange band_range(NarrativeBand b) {
  switch (b) {
    case NarrativeBand::exceptionally_stable: return {0, 20, 0, 20};
    case NarrativeBand::mild: return {21, 40, 21, 40};
    case NarrativeBand::moderate: return {41, 60, 41, 60};
    case NarrativeBand::upper_moderate: return {41, 60, 51, 60};
    case NarrativeBand::high: return {61, 80, 61, 80};
    case NarrativeBand::crisis: return {81, 100, 81, 100};
  }
  return {};
}

NarrativeBand parse_band_label(std::string_view label) {
  const auto l = to_lower(trim(label));
  for (const auto& a : kAliases)
    if (l == a.text) return a.band;
  throw Error("unknown band label '" + std::string(label) + "'");
}

BandRange band_of(std::string_view label) { return band_range(parse_band_label(label)); }

std::optional<NarrativeBand> find_band_in_text(std::string_view text) {
  const auto l = to_lower(text);
  std::optional<NarrativeBand> best;
  std::size_t best_len = 0;
  for (const auto& a : kAliases) {
    // Single-word aliases only count as whole words.
    std::size_t pos = l.find(a.text);
    while (pos != std::string::npos) {
      const std::size_t end = pos + a.text.size();
      const bool left_ok = pos == 0 || !std::isalpha(static_cast<unsigned char>(l[pos - 1]));
      const bool right_ok =
          end == l.size() || !std::isalpha(static_cast<unsigned char>(l[end]));
      if (left_ok && right_ok) {
        if (a.text.size() > best_len) {
          best = a.band;
          best_len = a.text.size();
        }
        break;
      }
      pos = l.find(a.text, pos + 1);
    }
  }
  return best;
}

bool YearEvidence::has_offsets() const {
  return std::any_of(ledger.begin(), ledger.end(),
                     [](const LedgerEntry& e) { return e.kind == LedgerKind::offset; });
}

IociMode select_mode(const std::optional<ReferenceSeries>& reference) {
  return reference && !reference->empty() ? IociMode::calibration : IociMode::strict;
}

long long round_half_up(double x) {
  if (!(x >= 0.0)) throw Error("round_half_up is defined for non-negative values only");
  return static_cast<long long>(std::floor(x + 0.5));
}

long long weighted_raw_bp(const DimensionScores& dims, const IociWeights& weights) {
  long long raw = 0;
  for (int i = 0; i < kDimensions; ++i) raw += static_cast<long long>(weights.bp[i]) * dims[i];
  return raw;
}

int rounding_of_bp(long long raw_bp) { return static_cast<int>((raw_bp + 5000) / 10000); }

StrictResult compute_strict(const DimensionScores& dims, int sanity, const IociWeights& weights) {
  if (sanity < -5 || sanity > 5) throw Error("sanity adjustment must be in [-5, 5]");
  for (int d : dims)
    if (d < 0 || d > 100) throw Error("dimension scores must be in [0, 100]");
  const long long bp = weighted_raw_bp(dims, weights);
  return {static_cast<double>(bp) / 10000.0,
          std::clamp(rounding_of_bp(bp) + sanity, 0, 100)};
}

BandConstraint make_constraint(int overall, const std::set<StressorTag>& tags,
                               bool has_offsets, std::optional<BandRange> band) {
  BandConstraint c;
  c.overall_band = band;
  std::array<int, kDimensions> up{};
  for (auto t : tags) up[tag_dimension(t)] = std::max(up[tag_dimension(t)], tag_bonus(t));
  const int down = has_offsets ? 5 : 0;
  for (int i = 0; i < kDimensions; ++i)
    c.boxes[i] = {std::max(0, overall - 15 - down), std::min(100, overall + 15 + up[i])};
  return c;
}

CalibrationResult fit_calibration(const DimensionScores& baseline, int target,
                                  const BandConstraint& constraint,
                                  const std::set<StressorTag>& tags,
                                  const IociWeights& weights, int step_budget) {
  if (target < 0 || target > 100) throw Error("calibration target must be in [0, 100]");
  std::array<int, kDimensions> order{0, 1, 2, 3, 4};
  std::array<bool, kDimensions> tagged{};
  for (auto t : tags) tagged[tag_dimension(t)] = true;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (tagged[a] != tagged[b]) return tagged[a];
    return weights.bp[a] > weights.bp[b];
  });

  CalibrationResult res;
  res.dims = baseline;
  for (int i = 0; i < kDimensions; ++i) {
    const Box& box = constraint.boxes[i];
    const int lo = std::max(0, box.lo), hi = std::min(100, box.hi);
    if (lo > hi) throw Error("calibration fit failed: empty dimension box");
    const int v = std::clamp(res.dims[i], lo, hi);
    if (v != res.dims[i]) res.clamped = true;
    res.dims[i] = v;
  }

  while (true) {
    const int rounding = rounding_of_bp(weighted_raw_bp(res.dims, weights));
    if (rounding == target) break;
    const int dir = rounding < target ? 1 : -1;
    int pick = -1;
    for (int i : order) {
      const int next = res.dims[i] + dir;
      const Box& box = constraint.boxes[i];
      if (weights.bp[i] > 0 && next >= std::max(0, box.lo) && next <= std::min(100, box.hi)) {
        pick = i;
        break;
      }
    }
    if (pick < 0 || res.steps >= step_budget) throw Error("calibration fit failed");
    res.dims[pick] += dir;
    ++res.steps;
  }
  for (int i = 0; i < kDimensions; ++i) res.l1 += std::abs(res.dims[i] - baseline[i]);
  return res;
}

Feasibility feasibility_check(int target, const BandRange& band) {
  if (target >= band.lo && target <= band.hi) return {true, target, std::nullopt};
  return {false, std::clamp(target, band.lo, band.hi),
          std::string("Reference infeasible under evidence")};
}

int confidence_hundredths(const YearEvidence* evidence, bool missing) {
  int c = 85;
  if (evidence && evidence->thin) c -= 10;
  if (!evidence || evidence->ledger.size() < 3) c -= 10;
  if (missing) c -= 15;
  c = std::clamp(c, 0, 100);
  if (missing) c = std::min(c, 40);
  return c;
}

double confidence(const YearEvidence* evidence, bool missing) {
  return confidence_hundredths(evidence, missing) / 100.0;
}

IociDiagnostics compute_diagnostics(const ReferenceSeries& reference,
                                    const std::map<Year, int>& output) {
  IociDiagnostics d;
  d.enabled = true;
  std::vector<double> ref, out;
  for (const auto& [year, value] : reference) {
    auto it = output.find(year);
    if (it == output.end()) continue;
    d.aligned_years.push_back(year);
    d.comparison.push_back({year, value, it->second});
    ref.push_back(value);
    out.push_back(it->second);
  }
  if (ref.empty()) return d;
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    abs_sum += std::abs(ref[i] - out[i]);
    sq_sum += (ref[i] - out[i]) * (ref[i] - out[i]);
  }
  const double n = static_cast<double>(ref.size());
  d.mae = abs_sum / n;
  d.rmse = std::sqrt(sq_sum / n);
  if (ref.size() >= 2 && !constant(ref) && !constant(out)) {
    d.pearson_r = pearson(ref, out);
    d.spearman_rho = pearson(fractional_ranks(ref), fractional_ranks(out));
  }
  return d;
}

IociAssessment score_series(const EvidencePack& evidence,
                            const std::optional<ReferenceSeries>& reference,
                            const BaselineSet& inputs, const IociWeights& weights) {
  weights.require_valid();
  const IociMode mode = select_mode(reference);
  IociAssessment out;
  out.weights = weights;

  std::set<Year> years;
  for (const auto& [y, ev] : evidence) years.insert(y);
  if (mode == IociMode::calibration)
    for (const auto& [y, v] : *reference) years.insert(y);
  if (years.empty()) {
    out.flags.push_back("No years provided in evidence or reference");
    out.diagnostics.enabled = mode == IociMode::calibration;
    return out;
  }

  auto uniform = [](int v) {
    DimensionScores d;
    d.fill(v);
    return d;
  };

  for (Year year : years) {
    YearAssessment ya;
    ya.year = year;
    const auto ev_it = evidence.find(year);
    const YearEvidence* ev =
        ev_it != evidence.end() && !ev_it->second.ledger.empty() ? &ev_it->second : nullptr;
    std::optional<int> ref;
    if (mode == IociMode::calibration) {
      auto it = reference->find(year);
      if (it != reference->end()) {
        if (it->second < 0 || it->second > 100)
          throw Error("reference value for " + std::to_string(year) + " outside [0, 100]");
        ref = it->second;
      }
    }
    const auto in_it = inputs.find(year);
    const YearInput* input = in_it != inputs.end() ? &in_it->second : nullptr;
    if (input)
      for (int v : input->dims)
        if (v < 0 || v > 100)
          throw Error("baseline for " + std::to_string(year) + " outside [0, 100]");

    if (ev) ya.ledger = ev->ledger;
    ya.confidence_hundredths = confidence_hundredths(ev, ev == nullptr);

    if (!ev) {
      if (ref) {
        ya.final_ioci = *ref;
        ya.flags.push_back("Used reference due to missing evidence");
        ya.dims = uniform(*ref);
        if (input) {
          try {
            ya.dims = fit_calibration(input->dims, *ref, make_constraint(*ref, {}, false), {},
                                      weights)
                          .dims;
          } catch (const Error&) {
          }
        }
      } else {
        ya.final_ioci = 50;
        ya.flags.push_back("Missing evidence for year");
        ya.dims = uniform(50);
      }
      ya.raw_bp = weighted_raw_bp(ya.dims, weights);
      out.series.push_back(std::move(ya));
      continue;
    }

    if (!input)
      throw Error("no dimension baseline for year " + std::to_string(year));

    if (ref) {
      int target = *ref;
      if (ev->band) {
        const auto feas = feasibility_check(target, *ev->band);
        if (!feas.feasible) {
          target = feas.closest;
          ya.flags.push_back(*feas.flag);
        }
      }
      const auto constraint = make_constraint(target, ev->tags, ev->has_offsets(), ev->band);
      const auto fit = fit_calibration(input->dims, target, constraint, ev->tags, weights);
      if (fit.clamped) ya.flags.push_back("Baseline clamped into dimension box");
      ya.dims = fit.dims;
      ya.sanity = 0;
      ya.final_ioci = target;
      ya.flags.push_back("fit_policy: v1");
    } else {
      const auto strict = compute_strict(input->dims, input->sanity, weights);
      ya.dims = input->dims;
      ya.sanity = input->sanity;
      ya.final_ioci = strict.final_ioci;
      if (ev->band && (ya.final_ioci < ev->band->lo || ya.final_ioci > ev->band->hi))
        ya.flags.push_back("Score outside narrative band");
    }
    if (ev->thin) ya.flags.push_back("Evidence thin");
    ya.raw_bp = weighted_raw_bp(ya.dims, weights);
    out.series.push_back(std::move(ya));
  }

  std::map<Year, int> finals;
  for (const auto& ya : out.series) {
    out.sequence.push_back(ya.final_ioci);
    finals[ya.year] = ya.final_ioci;
  }
  if (mode == IociMode::calibration) out.diagnostics = compute_diagnostics(*reference, finals);
  return out;
}

}  // namespace enrolcast
