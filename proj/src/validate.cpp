#include "kgalloc/validate.hpp"

#include <map>

namespace kgalloc {

std::vector<std::string> types_of(const TripleSource& g, const Term& node) {
  std::vector<std::string> out;
  for (const auto& t : g.lookup(node, Term::id(std::string(vocab::kType))))
    if (t.object.is_identifier()) out.push_back(t.object.text());
  return out;
}

bool conforms_to(const TripleSource& g, const Ontology& o, const Term& node, std::string_view cls) {
  if (!node.is_identifier()) return false;
  if (const auto* scale = o.find_scale(cls); scale && scale->rank(node)) return true;
  for (const auto& type : types_of(g, node))
    if (o.is_subclass_of(type, cls)) return true;
  return false;
}

namespace {

bool literal_fits(TermKind want, const Term& value) {
  if (value.kind() == want) return true;
  return want == TermKind::Decimal && value.kind() == TermKind::Integer;
}

}  // namespace

ValidationReport validate(const TripleSource& g, const Ontology& o) {
  ValidationReport report;
  std::map<std::pair<Term, Term>, int> functional_seen;
  for (const auto& t : g.lookup()) {
    const auto& pred = t.predicate.text();
    if (pred == vocab::kType) {
      if (!t.object.is_identifier()) report.violations.push_back({t, "type object must be a class identifier"});
      continue;
    }
    if (pred == vocab::kLabel) {
      if (t.object.kind() != TermKind::String) report.violations.push_back({t, "label must be a string literal"});
      continue;
    }
    const RelationDef* rel = o.find_relation(pred);
    if (!rel) {
      report.warnings.push_back({t, "undeclared relation '" + pred + "'"});
      continue;
    }

    if (!conforms_to(g, o, t.subject, rel->domain)) {
      if (types_of(g, t.subject).empty())
        report.warnings.push_back({t, "untyped subject; domain " + rel->domain + " not checked"});
      else
        report.violations.push_back({t, "subject is not a " + rel->domain});
    }

    if (auto kind = Ontology::literal_kind(rel->range)) {
      if (!literal_fits(*kind, t.object))
        report.violations.push_back({t, "object must be a " + rel->range + " literal"});
    } else if (t.object.is_literal()) {
      report.violations.push_back({t, "literal where " + rel->range + " is required"});
    } else if (!conforms_to(g, o, t.object, rel->range)) {
      if (types_of(g, t.object).empty())
        report.warnings.push_back({t, "untyped object; range " + rel->range + " not checked"});
      else
        report.violations.push_back({t, "object is not a " + rel->range});
    }

    if (rel->functional) {
      int& n = functional_seen[{t.subject, t.predicate}];
      if (++n > 1) report.violations.push_back({t, "duplicate value for functional relation '" + pred + "'"});
    }
  }
  return report;
}

}  // namespace kgalloc
