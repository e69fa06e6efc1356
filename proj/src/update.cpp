#include "kgalloc/update.hpp"

#include <set>

#include "kgalloc/error.hpp"

namespace kgalloc {

std::string_view to_string(UpdateStatus s) {
  switch (s) {
    case UpdateStatus::Proposed: return "proposed";
    case UpdateStatus::Accepted: return "accepted";
    case UpdateStatus::Rejected: return "rejected";
    case UpdateStatus::Applied: return "applied";
    case UpdateStatus::Superseded: return "superseded";
  }
  return "unknown";
}

UpdateStatus parse_update_status(std::string_view s) {
  for (auto st : {UpdateStatus::Proposed, UpdateStatus::Accepted, UpdateStatus::Rejected,
                  UpdateStatus::Applied, UpdateStatus::Superseded})
    if (to_string(st) == s) return st;
  throw Error(ErrorCode::InvalidUpdate, "unknown update status '" + std::string(s) + "'");
}

void GraphUpdate::check() const {
  std::set<Triple> added;
  for (const auto& t : additions) {
    check_well_formed(t);
    added.insert(t);
  }
  for (const auto& t : removals) {
    check_well_formed(t);
    if (added.count(t)) throw Error(ErrorCode::InvalidUpdate, "triple both added and removed: " + t.to_string());
  }
}

ApplyResult apply_update(Graph& g, GraphUpdate& u, MissingRemovalPolicy policy) {
  if (u.status != UpdateStatus::Accepted)
    throw Error(ErrorCode::NotAccepted, "update is " + std::string(to_string(u.status)) + ", not accepted");
  u.check();
  ApplyResult result;
  for (const auto& t : u.removals) {
    if (g.contains(t)) continue;
    if (policy == MissingRemovalPolicy::Reject)
      throw Error(ErrorCode::RemovalOfMissingTriple, "cannot remove missing triple " + t.to_string());
    result.warnings.push_back("removal of missing triple " + t.to_string());
  }
  // Every check that can fail is done; the mutation below cannot throw on
  // well-formed triples except for allocation failure.
  for (const auto& t : u.removals) g.remove(t);
  for (const auto& t : u.additions) g.add(t);
  u.status = UpdateStatus::Applied;
  return result;
}

}  // namespace kgalloc
