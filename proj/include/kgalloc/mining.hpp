#pragma once

#include <string>
#include <vector>

#include "kgalloc/event_log.hpp"
#include "kgalloc/graph.hpp"
#include "kgalloc/update.hpp"

namespace kgalloc {

// indicator = volume_weight * count/max_count + (1 - volume_weight) * breadth,
// where breadth = distinct activities of the resource / distinct activities
// in the log. Resources are ranked by indicator; a resource's position is
// p = (mid-rank - 1) / (n - 1), with p = 1 for a single resource. Ties share
// their mean rank. p >= high_cut gives the top level, p >= low_cut the middle
// one, anything else the bottom one.
struct SeniorityConfig {
  double volume_weight = 0.5;
  double low_cut = 1.0 / 3.0;
  double high_cut = 2.0 / 3.0;
  std::vector<std::string> levels = {"Low", "Medium", "High"};
};

struct ResourceIndicator {
  std::string resource;
  std::size_t completed = 0;
  std::size_t distinct_activities = 0;
  double indicator = 0.0;
  double position = 0.0;
  std::string level;
};

// Sorted by resource id.
std::vector<ResourceIndicator> seniority_indicators(const std::vector<EventRecord>& records,
                                                    const SeniorityConfig& config = {});

// One `seniority` addition per resource. With `current`, existing seniority
// edges that disagree are scheduled for removal so the relation stays
// functional. An empty record list gives an empty update.
GraphUpdate derive_seniority(const std::vector<EventRecord>& records, const SeniorityConfig& config = {},
                             const TripleSource* current = nullptr);

enum class CaseAttribute { ApplicationType, LoanGoal };

CaseAttribute parse_case_attribute(std::string_view s);

// `expertFor` from resource to attribute value when share >= threshold and
// count >= floor. Throws Error{InvalidArgument} unless 0 < threshold <= 1.
GraphUpdate derive_expertise(const std::vector<EventRecord>& records, CaseAttribute attribute, double threshold,
                             std::size_t floor = 5);

// `canBeExecutedBy` from each activity to every resource seen executing it.
GraphUpdate derive_permissions(const std::vector<EventRecord>& records);

}  // namespace kgalloc
