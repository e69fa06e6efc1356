#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "kgalloc/graph.hpp"

namespace kgalloc {

enum class UpdateStatus { Proposed, Accepted, Rejected, Applied, Superseded };

std::string_view to_string(UpdateStatus s);
UpdateStatus parse_update_status(std::string_view s);

/// A batch of triple additions and removals with its review status.
struct GraphUpdate {
  std::vector<Triple> additions;
  std::vector<Triple> removals;
  std::string provenance;
  UpdateStatus status = UpdateStatus::Proposed;

  bool empty() const { return additions.empty() && removals.empty(); }
  // Throws Error{MalformedTerm} or Error{InvalidUpdate} (additions ∩ removals ≠ ∅).
  void check() const;
};

enum class MissingRemovalPolicy { Warn, Reject };

struct ApplyResult {
  std::vector<std::string> warnings;
};

/// Applies an accepted update all-or-nothing and marks it applied.
/// Throws Error{NotAccepted}, Error{InvalidUpdate}, Error{MalformedTerm} or,
/// under MissingRemovalPolicy::Reject, Error{RemovalOfMissingTriple}; the
/// graph is untouched whenever it throws.
ApplyResult apply_update(Graph& g, GraphUpdate& u,
                         MissingRemovalPolicy policy = MissingRemovalPolicy::Warn);

}  // namespace kgalloc
