#include "factlab/model.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "factlab/errors.hpp"
#include "factlab/text.hpp"

namespace factlab {

namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [value, name] : table) {
    if (name == s) return value;
  }
  return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view name_of(E v, const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [value, name] : table) {
    if (value == v) return name;
  }
  return "?";
}

constexpr std::array<std::pair<Tool, std::string_view>, 3> kToolNames = {{
    {Tool::web_search, "web_search"},
    {Tool::credibility_assessment, "credibility_assessment"},
    {Tool::numeric_verification, "numeric_verification"},
}};
constexpr std::array<std::pair<LabelScheme, std::string_view>, 2> kSchemeNames = {{
    {LabelScheme::binary, "binary"},
    {LabelScheme::six_level, "six_level"},
}};
constexpr std::array<std::pair<CredibilityTier, std::string_view>, 4> kTierNames = {{
    {CredibilityTier::high, "high"},
    {CredibilityTier::medium, "medium"},
    {CredibilityTier::low, "low"},
    {CredibilityTier::unknown, "unknown"},
}};
constexpr std::array<std::pair<Stance, std::string_view>, 3> kStanceNames = {{
    {Stance::supporting, "supporting"},
    {Stance::irrelevant, "irrelevant"},
    {Stance::contradicting, "contradicting"},
}};
constexpr std::array<std::pair<RelevanceLabel, std::string_view>, 3> kRelevanceNames = {{
    {RelevanceLabel::highly_relevant, "highly_relevant"},
    {RelevanceLabel::slightly_relevant, "slightly_relevant"},
    {RelevanceLabel::irrelevant, "irrelevant"},
}};
constexpr std::array<std::pair<CallOutcome, std::string_view>, 3> kOutcomeNames = {{
    {CallOutcome::ok, "ok"},
    {CallOutcome::empty, "empty"},
    {CallOutcome::error, "error"},
}};
constexpr std::array<std::pair<BinaryLabel, std::string_view>, 3> kBinaryNames = {{
    {BinaryLabel::real, "real"},
    {BinaryLabel::fake, "fake"},
    {BinaryLabel::unverified, "unverified"},
}};
constexpr std::array<std::pair<SixLevelLabel, std::string_view>, 6> kSixNames = {{
    {SixLevelLabel::pants_fire, "pants_fire"},
    {SixLevelLabel::false_, "false"},
    {SixLevelLabel::barely_true, "barely_true"},
    {SixLevelLabel::half_true, "half_true"},
    {SixLevelLabel::mostly_true, "mostly_true"},
    {SixLevelLabel::true_, "true"},
}};
constexpr std::array<std::pair<Certainty, std::string_view>, 3> kCertaintyNames = {{
    {Certainty::high, "high"},
    {Certainty::medium, "medium"},
    {Certainty::low, "low"},
}};
constexpr std::array<std::pair<ConflictResolution, std::string_view>, 3> kResolutionNames = {{
    {ConflictResolution::retain_a, "retain_a"},
    {ConflictResolution::retain_b, "retain_b"},
    {ConflictResolution::retain_both_flag_uncertainty, "retain_both_flag_uncertainty"},
}};

}  // namespace

std::string_view to_string(Tool t) { return name_of(t, kToolNames); }
std::string_view to_string(LabelScheme s) { return name_of(s, kSchemeNames); }
std::string_view to_string(CredibilityTier t) { return name_of(t, kTierNames); }
std::string_view to_string(Stance s) { return name_of(s, kStanceNames); }
std::string_view to_string(RelevanceLabel r) { return name_of(r, kRelevanceNames); }
std::string_view to_string(CallOutcome o) { return name_of(o, kOutcomeNames); }
std::string_view to_string(BinaryLabel l) { return name_of(l, kBinaryNames); }
std::string_view to_string(SixLevelLabel l) { return name_of(l, kSixNames); }
std::string_view to_string(Certainty c) { return name_of(c, kCertaintyNames); }
std::string_view to_string(ConflictResolution r) { return name_of(r, kResolutionNames); }

std::optional<Tool> tool_from_string(std::string_view s) { return lookup(s, kToolNames); }
std::optional<LabelScheme> scheme_from_string(std::string_view s) { return lookup(s, kSchemeNames); }
std::optional<CredibilityTier> tier_from_string(std::string_view s) { return lookup(s, kTierNames); }
std::optional<Stance> stance_from_string(std::string_view s) { return lookup(s, kStanceNames); }
std::optional<RelevanceLabel> relevance_from_string(std::string_view s) {
  return lookup(s, kRelevanceNames);
}
std::optional<BinaryLabel> binary_label_from_string(std::string_view s) {
  return lookup(s, kBinaryNames);
}
std::optional<SixLevelLabel> six_level_from_string(std::string_view s) {
  return lookup(s, kSixNames);
}
std::optional<Certainty> certainty_from_string(std::string_view s) {
  return lookup(s, kCertaintyNames);
}

double stance_value(Stance s) {
  switch (s) {
    case Stance::supporting: return 1.0;
    case Stance::contradicting: return -1.0;
    case Stance::irrelevant: break;
  }
  return 0.0;
}

double relevance_value(RelevanceLabel r) {
  switch (r) {
    case RelevanceLabel::highly_relevant: return ScoreConfig::kRelevanceValues[0];
    case RelevanceLabel::slightly_relevant: return ScoreConfig::kRelevanceValues[1];
    case RelevanceLabel::irrelevant: break;
  }
  return ScoreConfig::kRelevanceValues[2];
}

void Claim::validate() const {
  if (text::trim(id).empty()) throw ValidationError("claim id is empty");
  if (text::is_blank(text)) throw ValidationError("claim '" + id + "' has blank text");
}

void validate_unique_ids(const std::vector<Claim>& batch) {
  std::unordered_set<std::string> seen;
  for (const auto& c : batch) {
    if (!seen.insert(c.id).second) throw DuplicateIdError("duplicate claim id '" + c.id + "'");
  }
}

void Plan::reindex() {
  for (std::size_t i = 0; i < steps.size(); ++i) steps[i].sequence_index = i;
}

void Plan::validate() const {
  if (steps.empty() && !direct_synthesis) throw ValidationError("plan has no steps");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i].sequence_index != i) {
      throw ValidationError("plan step " + std::to_string(i) + " has sequence index " +
                            std::to_string(steps[i].sequence_index));
    }
  }
}

double ScoreConfig::tier_score(CredibilityTier t) const {
  auto it = tier_scores.find(t);
  if (it == tier_scores.end()) throw ValidationError("no score for tier " + std::string(to_string(t)));
  return it->second;
}

void ScoreConfig::validate() const {
  for (auto t : {CredibilityTier::high, CredibilityTier::medium, CredibilityTier::low,
                 CredibilityTier::unknown}) {
    double s = tier_score(t);
    if (!(s > 0.0 && s <= 1.0)) {
      throw ValidationError("tier score for " + std::string(to_string(t)) + " outside (0,1]");
    }
  }
  if (!(tier_score(CredibilityTier::high) > tier_score(CredibilityTier::medium) &&
        tier_score(CredibilityTier::medium) > tier_score(CredibilityTier::low))) {
    throw ValidationError("tier scores must satisfy high > medium > low");
  }
  for (std::size_t i = 0; i < six_level_bin_edges.size(); ++i) {
    double e = six_level_bin_edges[i];
    if (!(e > -1.0 && e < 1.0)) throw ValidationError("six-level bin edge outside (-1,1)");
    if (i > 0 && !(e > six_level_bin_edges[i - 1])) {
      throw ValidationError("six-level bin edges must be strictly ascending");
    }
  }
  if (!(binary_threshold > -1.0 && binary_threshold < 1.0)) {
    throw ValidationError("binary threshold outside (-1,1)");
  }
}

void EvidenceLog::append(Evidence e) {
  if (contains(e.id)) throw DuplicateIdError("evidence id '" + e.id + "' already in log");
  entries_.push_back(std::move(e));
}

void EvidenceLog::record(ToolCallRecord r) {
  for (const auto& id : r.evidence_ids) {
    if (!contains(id)) throw ValidationError("tool record references unknown evidence '" + id + "'");
  }
  trace_.push_back(std::move(r));
}

const Evidence* EvidenceLog::find(std::string_view id) const {
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Evidence& e) { return e.id == id; });
  return it == entries_.end() ? nullptr : &*it;
}

Evidence& EvidenceLog::at(std::string_view id) {
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Evidence& e) { return e.id == id; });
  if (it == entries_.end()) throw ValidationError("unknown evidence id '" + std::string(id) + "'");
  return *it;
}

void EvidenceLog::set_retained(std::string_view id, bool retained) { at(id).retained = retained; }

void EvidenceLog::set_credibility(std::string_view id, CredibilityTier tier, double score,
                                  std::optional<std::string> domain) {
  Evidence& e = at(id);
  if (e.credibility_tier != CredibilityTier::unknown) {
    throw ValidationError("evidence '" + e.id + "' already carries an assessed tier");
  }
  e.credibility_tier = tier;
  e.credibility_score = score;
  if (domain) e.source_domain = std::move(domain);
}

std::string EvidenceLog::next_evidence_id() const {
  return "E" + std::to_string(entries_.size() + 1);
}

EvidenceLog append_evidence(EvidenceLog log, Evidence e) {
  log.append(std::move(e));
  return log;
}

std::vector<Evidence> retrieve_relevant(const EvidenceLog& log, std::string_view query,
                                        std::size_t k) {
  if (k == 0) throw ValidationError("retrieve_relevant requires k >= 1");
  const auto& entries = log.entries();
  std::vector<double> score(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    score[i] = text::jaccard(query, entries[i].content + " " + entries[i].sub_claim);
  }
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  order.resize(std::min(k, order.size()));
  std::vector<Evidence> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(entries[i]);
  return out;
}

std::string Verdict::label() const {
  if (scheme == LabelScheme::binary) {
    return std::string(to_string(binary_label.value_or(BinaryLabel::unverified)));
  }
  return six_level_label ? std::string(to_string(*six_level_label)) : "unverified";
}

}  // namespace factlab
