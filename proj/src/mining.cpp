#include "kgalloc/mining.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "kgalloc/error.hpp"
#include "kgalloc/vocab.hpp"

namespace kgalloc {

namespace {

GraphUpdate mined(std::set<Triple> additions, std::string provenance) {
  GraphUpdate u;
  u.additions.assign(additions.begin(), additions.end());
  u.provenance = std::move(provenance);
  return u;
}

}  // namespace

std::vector<ResourceIndicator> seniority_indicators(const std::vector<EventRecord>& records,
                                                    const SeniorityConfig& config) {
  if (config.levels.size() != 3) throw Error(ErrorCode::InvalidArgument, "seniority needs exactly three levels");
  std::map<std::string, std::size_t> counts;
  std::map<std::string, std::set<std::string>> breadth;
  std::set<std::string> activities;
  for (const auto& r : records) {
    ++counts[r.resource];
    breadth[r.resource].insert(r.activity);
    activities.insert(r.activity);
  }
  std::vector<ResourceIndicator> out;
  if (counts.empty()) return out;
  std::size_t max_count = 0;
  for (const auto& [_, c] : counts) max_count = std::max(max_count, c);

  for (const auto& [resource, c] : counts) {
    ResourceIndicator ri;
    ri.resource = resource;
    ri.completed = c;
    ri.distinct_activities = breadth[resource].size();
    ri.indicator = config.volume_weight * static_cast<double>(c) / static_cast<double>(max_count) +
                   (1.0 - config.volume_weight) * static_cast<double>(ri.distinct_activities) /
                       static_cast<double>(activities.size());
    out.push_back(std::move(ri));
  }

  const std::size_t n = out.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return out[a].indicator < out[b].indicator; });
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && out[order[j]].indicator == out[order[i]].indicator) ++j;
    double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;  // 1-based mean of ranks i+1..j
    double p = n == 1 ? 1.0 : (mid_rank - 1.0) / static_cast<double>(n - 1);
    for (std::size_t k = i; k < j; ++k) out[order[k]].position = p;
    i = j;
  }
  for (auto& ri : out) {
    ri.level = ri.position >= config.high_cut  ? config.levels[2]
               : ri.position >= config.low_cut ? config.levels[1]
                                               : config.levels[0];
  }
  return out;
}

GraphUpdate derive_seniority(const std::vector<EventRecord>& records, const SeniorityConfig& config,
                             const TripleSource* current) {
  std::set<Triple> additions;
  std::set<Triple> removals;
  for (const auto& ri : seniority_indicators(records, config)) {
    Triple t = make_triple(ri.resource, vocab::kSeniority, ri.level);
    if (current) {
      for (const auto& old : current->match({t.subject, t.predicate, std::nullopt}))
        if (old != t) removals.insert(old);
    }
    additions.insert(std::move(t));
  }
  GraphUpdate u = mined(std::move(additions), "mined seniority from " + std::to_string(records.size()) + " records");
  u.removals.assign(removals.begin(), removals.end());
  return u;
}

CaseAttribute parse_case_attribute(std::string_view s) {
  if (s == "ApplicationType" || s == "application_type") return CaseAttribute::ApplicationType;
  if (s == "LoanGoal" || s == "loan_goal") return CaseAttribute::LoanGoal;
  throw Error(ErrorCode::InvalidArgument, "unknown case attribute '" + std::string(s) + "'");
}

GraphUpdate derive_expertise(const std::vector<EventRecord>& records, CaseAttribute attribute, double threshold,
                             std::size_t floor) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "threshold must lie in (0, 1]");
  std::map<std::string, std::size_t> totals;
  std::map<std::pair<std::string, std::string>, std::size_t> per_value;
  for (const auto& r : records) {
    const std::string& value = attribute == CaseAttribute::ApplicationType ? r.application_type : r.loan_goal;
    ++totals[r.resource];
    if (!value.empty()) ++per_value[{r.resource, value}];
  }
  std::set<Triple> additions;
  for (const auto& [key, count] : per_value) {
    double share = static_cast<double>(count) / static_cast<double>(totals[key.first]);
    if (share >= threshold && count >= floor) additions.insert(make_triple(key.first, vocab::kExpertFor, key.second));
  }
  return mined(std::move(additions), std::string("mined expertise (") +
                                         (attribute == CaseAttribute::ApplicationType ? "ApplicationType" : "LoanGoal") +
                                         ") from " + std::to_string(records.size()) + " records");
}

GraphUpdate derive_permissions(const std::vector<EventRecord>& records) {
  std::set<Triple> additions;
  for (const auto& r : records) additions.insert(make_triple(r.activity, vocab::kCanBeExecutedBy, r.resource));
  return mined(std::move(additions), "mined permissions from " + std::to_string(records.size()) + " records");
}

}  // namespace kgalloc
