#include <algorithm>
#include <limits>
#include <set>

#include "kgalloc/error.hpp"
#include "kgalloc/rules.hpp"

namespace kgalloc {

std::strong_ordering compare_scale(const OrderedScale& scale, const Term& a, const Term& b) {
  auto ra = scale.rank(a);
  auto rb = scale.rank(b);
  if (!ra) throw Error(ErrorCode::NotOnScale, a.to_string() + " is not a level of " + scale.name);
  if (!rb) throw Error(ErrorCode::NotOnScale, b.to_string() + " is not a level of " + scale.name);
  return *ra <=> *rb;
}

namespace {

const Term* resolve(const Slot& slot, const Binding& binding) {
  if (auto* t = std::get_if<Term>(&slot)) return t;
  auto it = binding.find(std::get<Variable>(slot).name);
  return it == binding.end() ? nullptr : &it->second;
}

/// Adds the ontology's subclass closure to `type` lookups: (x type A) holds
/// whenever (x type D) is asserted and D is A or a subclass of A.
class TypeClosureView : public TripleSource {
 public:
  TypeClosureView(const TripleSource& base, const Ontology& onto)
      : base_(base), onto_(onto), type_(Term::id(std::string(vocab::kType))) {}

  std::vector<Triple> match(const TriplePattern& p) const override {
    if (!p.predicate || *p.predicate != type_) return base_.match(p);
    std::set<Triple> out;
    if (p.object && !p.subject) {
      if (!p.object->is_identifier()) return {};
      for (const auto& cls : onto_.descendants(p.object->text()))
        for (const auto& t : base_.lookup(std::nullopt, type_, Term::id(cls)))
          out.insert(Triple{t.subject, type_, *p.object});
    } else {
      for (const auto& t : base_.lookup(p.subject, type_)) {
        if (!t.object.is_identifier()) {
          if (!p.object || *p.object == t.object) out.insert(t);
          continue;
        }
        for (const auto& cls : onto_.ancestors(t.object.text())) {
          Triple entailed{t.subject, type_, Term::id(cls)};
          if (!p.object || *p.object == entailed.object) out.insert(std::move(entailed));
        }
      }
    }
    return {out.begin(), out.end()};
  }

  std::size_t count(const TriplePattern& p) const override {
    if (!p.predicate || *p.predicate != type_) return base_.count(p);
    return match(p).size();
  }

  bool contains(const Triple& t) const override {
    return !match(TriplePattern{t.subject, t.predicate, t.object}).empty();
  }

 private:
  const TripleSource& base_;
  const Ontology& onto_;
  Term type_;
};

class Matcher {
 public:
  Matcher(const Rule& rule, const TripleSource& g, const Ontology& onto)
      : rule_(rule), g_(g), onto_(onto), atom_done_(rule.atoms.size(), false), filter_done_(rule.filters.size(), false) {}

  std::vector<Binding> run(const Binding& seed) {
    auto vars = rule_.variables();
    for (const auto& [name, term] : seed) {
      if (std::binary_search(vars.begin(), vars.end(), Variable{name})) binding_.emplace(name, term);
    }
    if (!check_ready_filters()) return {};
    search();
    std::sort(results_.begin(), results_.end());
    results_.erase(std::unique(results_.begin(), results_.end()), results_.end());
    return std::move(results_);
  }

 private:
  TriplePattern resolve_atom(const PatternAtom& a) const {
    TriplePattern p;
    if (const Term* s = resolve(a.subject, binding_)) p.subject = *s;
    p.predicate = a.predicate;
    if (const Term* o = resolve(a.object, binding_)) p.object = *o;
    return p;
  }

  // Evaluates filters whose operands became bound; marks them done.
  bool check_ready_filters() {
    newly_checked_.clear();
    for (std::size_t i = 0; i < rule_.filters.size(); ++i) {
      if (filter_done_[i]) continue;
      const auto& f = rule_.filters[i];
      if (!binding_.count(f.left.name)) continue;
      if (auto* v = std::get_if<Variable>(&f.right); v && !binding_.count(v->name)) continue;
      if (!filter_holds(f, binding_, onto_)) {
        for (auto j : newly_checked_) filter_done_[j] = false;
        newly_checked_.clear();
        return false;
      }
      filter_done_[i] = true;
      newly_checked_.push_back(i);
    }
    return true;
  }

  // Binds the atom's unbound variables to the triple; returns the names bound,
  // or nullopt if the triple conflicts with the current binding.
  std::optional<std::vector<std::string>> bind(const PatternAtom& a, const Triple& t) {
    std::vector<std::string> added;
    auto bind_slot = [&](const Slot& slot, const Term& value) {
      auto* v = std::get_if<Variable>(&slot);
      if (!v) return std::get<Term>(slot) == value;
      auto [it, inserted] = binding_.emplace(v->name, value);
      if (inserted) {
        added.push_back(v->name);
        return true;
      }
      return it->second == value;
    };
    if (!bind_slot(a.subject, t.subject) || !bind_slot(a.object, t.object)) {
      for (const auto& n : added) binding_.erase(n);
      return std::nullopt;
    }
    return added;
  }

  void search() {
    // Most selective remaining atom first.
    std::size_t best = rule_.atoms.size();
    std::size_t best_count = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i < rule_.atoms.size(); ++i) {
      if (atom_done_[i]) continue;
      std::size_t n = g_.count(resolve_atom(rule_.atoms[i]));
      if (n < best_count) {
        best = i;
        best_count = n;
      }
    }
    if (best == rule_.atoms.size()) {
      results_.push_back(binding_);
      return;
    }
    if (best_count == 0) return;

    const auto& atom = rule_.atoms[best];
    atom_done_[best] = true;
    for (const auto& t : g_.match(resolve_atom(atom))) {
      auto added = bind(atom, t);
      if (!added) continue;
      if (check_ready_filters()) {
        auto checked = newly_checked_;
        search();
        for (auto j : checked) filter_done_[j] = false;
      }
      for (const auto& n : *added) binding_.erase(n);
    }
    atom_done_[best] = false;
  }

  const Rule& rule_;
  const TripleSource& g_;
  const Ontology& onto_;
  Binding binding_;
  std::vector<bool> atom_done_;
  std::vector<bool> filter_done_;
  std::vector<std::size_t> newly_checked_;
  std::vector<Binding> results_;
};

}  // namespace

bool filter_holds(const Filter& f, const Binding& binding, const Ontology& ontology) {
  auto lit = binding.find(f.left.name);
  const Term* right = resolve(f.right, binding);
  if (lit == binding.end() || !right) return false;
  const Term& left = lit->second;
  switch (f.op) {
    case FilterOp::Eq: return left == *right;
    case FilterOp::Neq: return left != *right;
    case FilterOp::NumGreaterEq:
    case FilterOp::NumLess: {
      if (!left.is_numeric() || !right->is_numeric()) return false;
      double a = left.numeric_value(), b = right->numeric_value();
      return f.op == FilterOp::NumGreaterEq ? a >= b : a < b;
    }
    case FilterOp::ScaleGreaterEq:
    case FilterOp::ScaleLess: {
      const OrderedScale* scale = f.scale ? ontology.find_scale(*f.scale) : nullptr;
      if (!scale || !scale->rank(left) || !scale->rank(*right)) return false;
      auto ord = compare_scale(*scale, left, *right);
      return f.op == FilterOp::ScaleGreaterEq ? ord >= 0 : ord < 0;
    }
  }
  return false;
}

std::vector<Match> evaluate(const Rule& rule, const TripleSource& g, const Ontology& ontology, const Binding& seed) {
  std::vector<Binding> bindings;
  if (ontology.has_hierarchy()) {
    TypeClosureView view(g, ontology);
    bindings = Matcher(rule, view, ontology).run(seed);
  } else {
    bindings = Matcher(rule, g, ontology).run(seed);
  }
  std::vector<Match> out;
  out.reserve(bindings.size());
  for (auto& b : bindings) {
    std::string msg = render_message(rule.message, b, &g);
    out.push_back(Match{rule.id, std::move(b), std::move(msg)});
  }
  return out;
}

std::string render_message(std::string_view tmpl, const Binding& binding, const TripleSource* g) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    auto open = tmpl.find('{', pos);
    auto close = open == std::string_view::npos ? open : tmpl.find('}', open + 1);
    if (close == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    out.append(tmpl.substr(pos, open - pos));
    std::string name(tmpl.substr(open + 1, close - open - 1));
    auto it = binding.find(name);
    if (it == binding.end()) throw Error(ErrorCode::UnboundPlaceholder, "placeholder {" + name + "} is unbound");
    if (g) {
      out += display_label(*g, it->second);
    } else {
      out += it->second.is_identifier() || it->second.kind() == TermKind::String ? it->second.text()
                                                                                 : it->second.to_string();
    }
    pos = close + 1;
  }
  return out;
}

}  // namespace kgalloc
