#pragma once

#include <string>
#include <vector>

#include "kgalloc/graph.hpp"
#include "kgalloc/ontology.hpp"

namespace kgalloc {

struct Violation {
  Triple triple;
  std::string reason;
};

struct ValidationReport {
  // Domain/range contradictions and functional-relation duplicates.
  std::vector<Violation> violations;
  // Undeclared predicates and untyped nodes (open world: not errors).
  std::vector<Violation> warnings;

  bool ok() const { return violations.empty(); }
};

// Asserted `type` objects of a node.
std::vector<std::string> types_of(const TripleSource& g, const Term& node);

// True if the node is typed with `cls` or one of its subclasses, or if `cls`
// names a scale and the node is one of its levels.
bool conforms_to(const TripleSource& g, const Ontology& o, const Term& node, std::string_view cls);

ValidationReport validate(const TripleSource& g, const Ontology& o);

}  // namespace kgalloc
