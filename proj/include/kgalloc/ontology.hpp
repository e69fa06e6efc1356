#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgalloc/term.hpp"

namespace kgalloc {

struct ClassDef {
  std::string name;
  std::string description;
  std::optional<std::string> parent;
};

struct RelationDef {
  std::string name;
  std::string description;
  std::string domain;
  std::string range;  // class, scale, or literal kind (string|int|dec|bool)
  bool functional = false;
};

/// A named total order over identifier levels; rank 0 is the lowest.
struct OrderedScale {
  std::string name;
  std::vector<Term> levels;

  std::optional<std::size_t> rank(const Term& level) const;
};

/// Concept-level knowledge: classes, relations and ordered scales.
class Ontology {
 public:
  // Each add_* validates what can be checked locally; check() validates
  // cross references and is called by parse_ontology.
  void add_class(ClassDef def);
  void add_relation(RelationDef def);
  void add_scale(OrderedScale scale);

  // Throws Error{InvalidModel} on dangling references or parent cycles.
  void check() const;

  const ClassDef* find_class(std::string_view name) const;
  const RelationDef* find_relation(std::string_view name) const;
  const OrderedScale* find_scale(std::string_view name) const;

  const std::map<std::string, ClassDef, std::less<>>& classes() const { return classes_; }
  const std::map<std::string, RelationDef, std::less<>>& relations() const { return relations_; }
  const std::map<std::string, OrderedScale, std::less<>>& scales() const { return scales_; }

  // The class itself followed by its parents up to the root.
  std::vector<std::string> ancestors(std::string_view cls) const;
  // The class itself and every class below it.
  std::vector<std::string> descendants(std::string_view cls) const;
  bool is_subclass_of(std::string_view cls, std::string_view ancestor) const;
  bool has_hierarchy() const;

  static bool is_literal_kind(std::string_view name);
  static std::optional<TermKind> literal_kind(std::string_view name);

 private:
  std::map<std::string, ClassDef, std::less<>> classes_;
  std::map<std::string, RelationDef, std::less<>> relations_;
  std::map<std::string, OrderedScale, std::less<>> scales_;
};

// Throws ParseError / Error{InvalidModel}. Grammar in docs/formats.md.
Ontology parse_ontology(std::string_view text);
Ontology load_ontology_file(const std::string& path);

}  // namespace kgalloc
