#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kgalloc/graph.hpp"
#include "kgalloc/ontology.hpp"
#include "kgalloc/update.hpp"

namespace kgalloc {

struct UpdateProposal {
  std::string id;
  GraphUpdate update;
  std::vector<std::string> rendering;  // one line per addition, then per removal
  std::optional<std::string> supersedes;
  std::optional<std::string> superseded_by;
};

// "Add: person 'Eliza Bryan' takes the role 'Consultant'". Subject classes and
// labels are looked up in `g` plus the update's own additions.
std::vector<std::string> render_update(const GraphUpdate& u, const TripleSource& g, const Ontology& o);

enum class Verdict { Accept, Reject, Amend };

Verdict parse_verdict(std::string_view s);

// In-memory proposal registry. With a journal path every transition is
// appended as one JSON line, and replay() rebuilds the registry from it.
class ProposalStore {
 public:
  ProposalStore() = default;
  explicit ProposalStore(std::string journal_path) : journal_path_(std::move(journal_path)) {}

  // Throws Error{MalformedTerm} or Error{InvalidUpdate} for ill-formed updates.
  const UpdateProposal& propose(GraphUpdate u, const TripleSource& g, const Ontology& o);

  // Accept and reject change the proposal in place; amend creates a fresh
  // proposal from `amendment` and marks the old one superseded. Returns the
  // resulting proposal. Throws Error{UnknownId}, Error{InvalidTransition},
  // Error{InvalidArgument} (amend without an update).
  const UpdateProposal& review(const std::string& id, Verdict v, const std::optional<GraphUpdate>& amendment,
                               const TripleSource& g, const Ontology& o);

  // Applies an accepted proposal. Errors as for apply_update, plus UnknownId.
  ApplyResult apply(const std::string& id, Graph& g, MissingRemovalPolicy policy = MissingRemovalPolicy::Warn);

  const UpdateProposal& get(const std::string& id) const;
  const UpdateProposal* find(const std::string& id) const;
  std::vector<const UpdateProposal*> list() const;  // creation order

  static ProposalStore replay(const std::string& journal_path);

 private:
  UpdateProposal& get_mut(const std::string& id);
  void record(std::string_view event, const UpdateProposal& p);

  std::string journal_path_;
  std::map<std::string, UpdateProposal> by_id_;
  std::vector<std::string> order_;
  std::size_t seq_ = 0;
};

}  // namespace kgalloc
