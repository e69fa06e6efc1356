#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kgalloc/graph.hpp"
#include "kgalloc/ontology.hpp"
#include "kgalloc/term.hpp"

namespace kgalloc {

struct Variable {
  std::string name;

  friend auto operator<=>(const Variable&, const Variable&) = default;
};

// A pattern position: a variable or a constant term.
using Slot = std::variant<Variable, Term>;

struct PatternAtom {
  Slot subject;
  Term predicate;
  Slot object;
};

enum class FilterOp { ScaleGreaterEq, ScaleLess, Eq, Neq, NumGreaterEq, NumLess };

std::string_view to_string(FilterOp op);

struct Filter {
  FilterOp op = FilterOp::Eq;
  Variable left;
  Slot right;
  std::optional<std::string> scale;  // required for the scale ops
};

enum class Polarity { Positive, Negative };
enum class Severity { Hard, Soft };

std::string_view to_string(Polarity p);
std::string_view to_string(Severity s);

/// A graph pattern anchored on a (task, resource) pair. Positive rules match
/// adherence, negative rules match violations; hard rules disqualify.
struct Rule {
  std::string id;
  Variable task_var;
  Variable resource_var;
  std::vector<PatternAtom> atoms;
  std::vector<Filter> filters;
  Polarity polarity = Polarity::Positive;
  Severity severity = Severity::Soft;
  double score = 0.0;
  std::string message;

  // Every variable of atoms and filters, sorted by name.
  std::vector<Variable> variables() const;
};

struct RuleSet {
  std::vector<Rule> rules;

  std::size_t size() const { return rules.size(); }
  bool empty() const { return rules.empty(); }
  const Rule* find(std::string_view id) const;
};

// Checks the Rule invariants; throws Error{UnboundFocusVariable},
// Error{UnknownScale}, Error{UnboundPlaceholder} or Error{InvalidModel}.
void check_rule(const Rule& rule, const Ontology& ontology);

// Grammar in docs/formats.md. Throws ParseError (line/column) for syntax and
// static errors, Error{UnknownScale} and Error{UnboundFocusVariable}.
RuleSet parse_rules(std::string_view text, const Ontology& ontology);
RuleSet load_rules_file(const std::string& path, const Ontology& ontology);

std::string serialize_rules(const RuleSet& rules);

// Variable name -> bound term. Ordered, so bindings compare lexicographically.
using Binding = std::map<std::string, Term>;

struct Match {
  std::string rule_id;
  Binding binding;
  std::string message;
};

/// Every distinct total binding extending `seed` under which all atoms hold
/// in `g` and all filters pass, sorted by bound terms. `type` atoms see the
/// ontology's subclass closure.
std::vector<Match> evaluate(const Rule& rule, const TripleSource& g, const Ontology& ontology,
                            const Binding& seed = {});

// Substitutes `{var}` placeholders with display labels from `g` (or raw
// identifiers when `g` is null). Throws Error{UnboundPlaceholder}.
std::string render_message(std::string_view tmpl, const Binding& binding,
                           const TripleSource* g = nullptr);

// Placeholder names in order of appearance.
std::vector<std::string> placeholders(std::string_view tmpl);

// Throws Error{NotOnScale}.
std::strong_ordering compare_scale(const OrderedScale& scale, const Term& a, const Term& b);

// Filter semantics, exposed for tests. Operands off the scale or of the wrong
// kind make the filter fail rather than throw.
bool filter_holds(const Filter& f, const Binding& binding, const Ontology& ontology);

}  // namespace kgalloc
