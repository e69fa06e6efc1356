#include "kgalloc/ontology.hpp"

#include <algorithm>
#include <set>

#include "kgalloc/error.hpp"
#include "text_util.hpp"

namespace kgalloc {

std::optional<std::size_t> OrderedScale::rank(const Term& level) const {
  auto it = std::find(levels.begin(), levels.end(), level);
  if (it == levels.end()) return std::nullopt;
  return static_cast<std::size_t>(it - levels.begin());
}

void Ontology::add_class(ClassDef def) {
  if (!is_valid_identifier(def.name) || is_literal_kind(def.name))
    throw Error(ErrorCode::InvalidModel, "bad class name '" + def.name + "'");
  if (def.parent && *def.parent == def.name)
    throw Error(ErrorCode::InvalidModel, "class " + def.name + " is its own parent");
  auto name = def.name;
  classes_[name] = std::move(def);
}

void Ontology::add_relation(RelationDef def) {
  if (!is_valid_identifier(def.name))
    throw Error(ErrorCode::InvalidModel, "bad relation name '" + def.name + "'");
  auto name = def.name;
  relations_[name] = std::move(def);
}

void Ontology::add_scale(OrderedScale scale) {
  std::set<Term> seen;
  for (const auto& level : scale.levels) {
    if (!level.is_identifier())
      throw Error(ErrorCode::InvalidModel, "scale " + scale.name + " has a literal level");
    if (!seen.insert(level).second)
      throw Error(ErrorCode::InvalidModel, "scale " + scale.name + " repeats level " + level.text());
  }
  if (scale.levels.empty()) throw Error(ErrorCode::InvalidModel, "scale " + scale.name + " has no levels");
  auto name = scale.name;
  scales_[name] = std::move(scale);
}

void Ontology::check() const {
  for (const auto& [name, def] : classes_) {
    if (def.parent && !classes_.count(*def.parent))
      throw Error(ErrorCode::InvalidModel, "class " + name + " has undeclared parent " + *def.parent);
    std::set<std::string> seen{name};
    const ClassDef* cur = &def;
    while (cur->parent) {
      if (!seen.insert(*cur->parent).second)
        throw Error(ErrorCode::InvalidModel, "class hierarchy cycle through " + name);
      cur = &classes_.find(*cur->parent)->second;
    }
  }
  auto known = [&](const std::string& n) {
    return classes_.count(n) || scales_.count(n) || is_literal_kind(n);
  };
  for (const auto& [name, rel] : relations_) {
    if (!classes_.count(rel.domain))
      throw Error(ErrorCode::InvalidModel, "relation " + name + " has undeclared domain " + rel.domain);
    if (!known(rel.range))
      throw Error(ErrorCode::InvalidModel, "relation " + name + " has undeclared range " + rel.range);
  }
}

const ClassDef* Ontology::find_class(std::string_view name) const {
  auto it = classes_.find(name);
  return it == classes_.end() ? nullptr : &it->second;
}

const RelationDef* Ontology::find_relation(std::string_view name) const {
  auto it = relations_.find(name);
  return it == relations_.end() ? nullptr : &it->second;
}

const OrderedScale* Ontology::find_scale(std::string_view name) const {
  auto it = scales_.find(name);
  return it == scales_.end() ? nullptr : &it->second;
}

std::vector<std::string> Ontology::ancestors(std::string_view cls) const {
  std::vector<std::string> out{std::string(cls)};
  const ClassDef* cur = find_class(cls);
  while (cur && cur->parent && out.size() <= classes_.size()) {
    out.push_back(*cur->parent);
    cur = find_class(*cur->parent);
  }
  return out;
}

std::vector<std::string> Ontology::descendants(std::string_view cls) const {
  std::vector<std::string> out{std::string(cls)};
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (const auto& [name, def] : classes_) {
      if (def.parent && *def.parent == out[i] &&
          std::find(out.begin(), out.end(), name) == out.end())
        out.push_back(name);
    }
  }
  return out;
}

bool Ontology::is_subclass_of(std::string_view cls, std::string_view ancestor) const {
  auto chain = ancestors(cls);
  return std::find(chain.begin(), chain.end(), ancestor) != chain.end();
}

bool Ontology::has_hierarchy() const {
  return std::any_of(classes_.begin(), classes_.end(), [](const auto& kv) { return kv.second.parent.has_value(); });
}

std::optional<TermKind> Ontology::literal_kind(std::string_view name) {
  if (name == "string") return TermKind::String;
  if (name == "int") return TermKind::Integer;
  if (name == "dec") return TermKind::Decimal;
  if (name == "bool") return TermKind::Boolean;
  return std::nullopt;
}

bool Ontology::is_literal_kind(std::string_view name) { return literal_kind(name).has_value(); }

namespace {

std::string unquote(const detail::Token& tok, std::size_t line) {
  try {
    Term t = parse_term(tok.text);
    if (t.kind() == TermKind::String) return t.text();
  } catch (const Error&) {
  }
  throw ParseError(line, tok.column, "expected a quoted description, got '" + tok.text + "'");
}

}  // namespace

Ontology parse_ontology(std::string_view text) {
  Ontology onto;
  auto lines = detail::split_lines(text);
  bool seen_content = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    auto toks = detail::tokenize(lines[i], line_no);
    if (toks.empty()) continue;
    const auto& kw = toks[0].text;
    auto expect = [&](std::size_t idx, std::string_view what) -> const detail::Token& {
      if (idx >= toks.size()) {
        std::size_t col = toks.back().column + toks.back().text.size();
        throw ParseError(line_no, col, "expected " + std::string(what));
      }
      return toks[idx];
    };
    auto ident = [&](std::size_t idx, std::string_view what) {
      const auto& tok = expect(idx, what);
      if (!is_valid_identifier(tok.text) || tok.text.front() == '"')
        throw ParseError(line_no, tok.column, "expected " + std::string(what));
      return tok.text;
    };
    try {
      if (kw == "version") {
        if (seen_content) throw ParseError(line_no, toks[0].column, "version must come first");
        if (expect(1, "version number").text != "1")
          throw ParseError(line_no, toks[1].column, "unsupported ontology version " + toks[1].text);
        seen_content = true;
        continue;
      }
      seen_content = true;
      if (kw == "class") {
        ClassDef def;
        def.name = ident(1, "class name");
        std::size_t idx = 2;
        if (idx < toks.size() && toks[idx].text == "<") {
          def.parent = ident(idx + 1, "parent class");
          idx += 2;
        }
        if (idx < toks.size()) def.description = unquote(toks[idx++], line_no);
        if (idx < toks.size()) throw ParseError(line_no, toks[idx].column, "unexpected '" + toks[idx].text + "'");
        onto.add_class(std::move(def));
      } else if (kw == "relation") {
        RelationDef def;
        def.name = ident(1, "relation name");
        def.domain = ident(2, "domain class");
        if (expect(3, "'->'").text != "->") throw ParseError(line_no, toks[3].column, "expected '->'");
        def.range = ident(4, "range");
        std::size_t idx = 5;
        if (idx < toks.size() && toks[idx].text == "functional") {
          def.functional = true;
          ++idx;
        }
        if (idx < toks.size()) def.description = unquote(toks[idx++], line_no);
        if (idx < toks.size()) throw ParseError(line_no, toks[idx].column, "unexpected '" + toks[idx].text + "'");
        onto.add_relation(std::move(def));
      } else if (kw == "scale") {
        OrderedScale scale;
        scale.name = ident(1, "scale name");
        expect(2, "at least one level");
        for (std::size_t idx = 2; idx < toks.size(); ++idx) scale.levels.push_back(Term::id(ident(idx, "level")));
        onto.add_scale(std::move(scale));
      } else {
        throw ParseError(line_no, toks[0].column, "unknown stanza '" + kw + "'");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(line_no, toks[0].column, e.what());
    }
  }
  onto.check();
  return onto;
}

Ontology load_ontology_file(const std::string& path) { return parse_ontology(detail::read_file(path)); }

}  // namespace kgalloc
