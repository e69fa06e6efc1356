#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "kgalloc/error.hpp"
#include "kgalloc/graph.hpp"
#include "kgalloc/ontology.hpp"
#include "kgalloc/rules.hpp"

namespace kgalloc {

// One rule match for a candidate, with the rule's contribution.
struct Finding {
  std::string rule_id;
  Polarity polarity = Polarity::Positive;
  Severity severity = Severity::Soft;
  double score = 0.0;  // 0 for hard rules
  std::string message;
  Binding binding;
};

struct Assessment {
  Term task;
  Term resource;
  std::vector<Finding> findings;         // soft matches, rule order
  std::vector<Finding> hard_violations;  // hard matches, rule order
  double score = 0.0;                    // sum of findings' scores

  bool eligible() const { return hard_violations.empty(); }
};

struct Ranking {
  Term task;
  std::vector<Term> available;        // permitted and not busy, sorted
  std::vector<Assessment> eligible;   // score desc, then resource id
  std::vector<Assessment> ineligible; // resource id

  // Eligible first, then ineligible.
  std::vector<Assessment> ordered() const;
};

// Relative tolerance under which two aggregate scores rank as equal.
inline constexpr double kScoreTolerance = 1e-9;
bool scores_tie(double a, double b);

enum class DecisionMode { Automatic, Human };

std::string_view to_string(DecisionMode m);

struct AllocationDecision {
  Term task;
  std::string case_id;         // empty if the task has no partOf edge
  std::string activity_label;
  Term chosen;
  DecisionMode mode = DecisionMode::Automatic;
  std::vector<Term> available;
  std::vector<Assessment> candidates;  // Ranking::ordered()
  std::int64_t timestamp = 0;
  bool divergent = false;  // human picked something other than the rank head

  const Assessment& chosen_assessment() const;
};

/// Raised when a human selects a resource that is unavailable or hard-blocked.
class IneligibleSelection : public Error {
 public:
  IneligibleSelection(const std::string& what, std::vector<std::string> messages)
      : Error(ErrorCode::IneligibleSelection, what), messages_(std::move(messages)) {}

  const std::vector<std::string>& messages() const { return messages_; }

 private:
  std::vector<std::string> messages_;
};

/// Scores hypothetical task-to-resource links against a rule set.
class Reasoner {
 public:
  Reasoner(const RuleSet& rules, const Ontology& ontology) : rules_(&rules), ontology_(&ontology) {}

  // Resources permitted for the task's activity (directly or through a role)
  // that are not busy. Throws Error{UnknownTask}.
  std::vector<Term> eligible_resources(const TripleSource& g, const Term& task) const;

  // Evaluates every rule with the transient link (task performedBy resource);
  // `g` is never modified.
  Assessment assess(const TripleSource& g, const Term& task, const Term& resource) const;

  // Ranking::eligible is empty when no resource qualifies; callers treat that
  // as no-eligible-resource.
  Ranking rank(const TripleSource& g, const Term& task) const;

  // Throws Error{NoEligibleResource}.
  AllocationDecision decide_automatic(const TripleSource& g, const Term& task, std::int64_t timestamp = 0) const;

  // Throws IneligibleSelection (carrying the hard-violation messages).
  AllocationDecision decide_human(const TripleSource& g, const Term& task, const Term& selection,
                                  std::int64_t timestamp = 0) const;

  const RuleSet& rules() const { return *rules_; }
  const Ontology& ontology() const { return *ontology_; }

 private:
  AllocationDecision make_decision(const TripleSource& g, const Term& task, const Ranking& ranking) const;

  const RuleSet* rules_;
  const Ontology* ontology_;
};

// The human-readable block:
//   case-1 task-7: W_Assess potential fraud
//   Resources Available: {'User_26', 'User_55', 'User_83'}
//   Assigning: User_26 to task-7 considering the following:
//       <one finding message per line>
std::string format_explanation(const AllocationDecision& d);

// One JSON object per line for the decision journal.
std::string journal_line(const AllocationDecision& d);

}  // namespace kgalloc

namespace kgalloc {

// Inverse of journal_line, minus match bindings. Throws Error{ParseError}.
AllocationDecision parse_journal_line(std::string_view line);

}  // namespace kgalloc
