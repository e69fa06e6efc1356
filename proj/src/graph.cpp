#include "kgalloc/graph.hpp"

#include <algorithm>
#include <iterator>

namespace kgalloc {

bool TriplePattern::matches(const Triple& t) const {
  return (!subject || *subject == t.subject) && (!predicate || *predicate == t.predicate) &&
         (!object || *object == t.object);
}

std::optional<Term> TripleSource::object_of(const Term& subject, std::string_view predicate) const {
  auto found = lookup(subject, Term::id(std::string(predicate)));
  if (found.empty()) return std::nullopt;
  return found.front().object;
}

std::vector<Term> TripleSource::objects_of(const Term& subject, std::string_view predicate) const {
  std::vector<Term> out;
  for (auto& t : lookup(subject, Term::id(std::string(predicate)))) out.push_back(t.object);
  return out;
}

std::vector<Term> TripleSource::subjects_of(std::string_view predicate, const Term& object) const {
  std::vector<Term> out;
  for (auto& t : lookup(std::nullopt, Term::id(std::string(predicate)), object)) out.push_back(t.subject);
  return out;
}

bool Graph::add(const Triple& t) {
  check_well_formed(t);
  if (!triples_.insert(t).second) return false;
  by_subject_[t.subject].insert(t);
  by_predicate_[t.predicate].insert(t);
  by_object_[t.object].insert(t);
  return true;
}

namespace {

void erase_from(std::map<Term, std::set<Triple>>& index, const Term& key, const Triple& t) {
  auto it = index.find(key);
  if (it == index.end()) return;
  it->second.erase(t);
  if (it->second.empty()) index.erase(it);
}

std::size_t bucket_size(const std::map<Term, std::set<Triple>>& index, const Term& key) {
  auto it = index.find(key);
  return it == index.end() ? 0 : it->second.size();
}

}  // namespace

bool Graph::remove(const Triple& t) {
  if (triples_.erase(t) == 0) return false;
  erase_from(by_subject_, t.subject, t);
  erase_from(by_predicate_, t.predicate, t);
  erase_from(by_object_, t.object, t);
  return true;
}

void Graph::clear() {
  triples_.clear();
  by_subject_.clear();
  by_predicate_.clear();
  by_object_.clear();
}

const std::set<Triple>* Graph::smallest_candidates(const TriplePattern& p) const {
  static const std::set<Triple> kEmpty;
  const std::set<Triple>* best = &triples_;
  auto consider = [&](const Index& index, const std::optional<Term>& key) {
    if (!key) return;
    auto it = index.find(*key);
    const std::set<Triple>* bucket = it == index.end() ? &kEmpty : &it->second;
    if (bucket->size() < best->size()) best = bucket;
  };
  consider(by_subject_, p.subject);
  consider(by_predicate_, p.predicate);
  consider(by_object_, p.object);
  return best;
}

std::vector<Triple> Graph::match(const TriplePattern& pattern) const {
  std::vector<Triple> out;
  if (pattern.subject && pattern.predicate && pattern.object) {
    Triple t{*pattern.subject, *pattern.predicate, *pattern.object};
    if (contains(t)) out.push_back(std::move(t));
    return out;
  }
  for (const auto& t : *smallest_candidates(pattern))
    if (pattern.matches(t)) out.push_back(t);
  return out;
}

std::size_t Graph::count(const TriplePattern& pattern) const {
  int bound = int(bool(pattern.subject)) + int(bool(pattern.predicate)) + int(bool(pattern.object));
  if (bound == 0) return triples_.size();
  if (bound == 1) {
    if (pattern.subject) return bucket_size(by_subject_, *pattern.subject);
    if (pattern.predicate) return bucket_size(by_predicate_, *pattern.predicate);
    return bucket_size(by_object_, *pattern.object);
  }
  const auto* bucket = smallest_candidates(pattern);
  return static_cast<std::size_t>(
      std::count_if(bucket->begin(), bucket->end(), [&](const Triple& t) { return pattern.matches(t); }));
}

bool Graph::indexes_consistent() const {
  auto check = [&](const Index& index, auto key_of) {
    std::size_t total = 0;
    for (const auto& [key, bucket] : index) {
      if (bucket.empty()) return false;
      for (const auto& t : bucket) {
        if (key_of(t) != key || !triples_.count(t)) return false;
      }
      total += bucket.size();
    }
    return total == triples_.size();
  };
  return check(by_subject_, [](const Triple& t) { return t.subject; }) &&
         check(by_predicate_, [](const Triple& t) { return t.predicate; }) &&
         check(by_object_, [](const Triple& t) { return t.object; });
}

OverlayView::OverlayView(const TripleSource& base, std::vector<Triple> extra) : base_(base) {
  for (auto& t : extra) {
    check_well_formed(t);
    if (!base_.contains(t)) extra_.insert(std::move(t));
  }
}

std::vector<Triple> OverlayView::match(const TriplePattern& pattern) const {
  auto out = base_.match(pattern);
  std::vector<Triple> added;
  for (const auto& t : extra_)
    if (pattern.matches(t)) added.push_back(t);
  if (added.empty()) return out;
  std::vector<Triple> merged;
  merged.reserve(out.size() + added.size());
  std::merge(out.begin(), out.end(), added.begin(), added.end(), std::back_inserter(merged));
  return merged;
}

std::size_t OverlayView::count(const TriplePattern& pattern) const {
  std::size_t n = base_.count(pattern);
  for (const auto& t : extra_)
    if (pattern.matches(t)) ++n;
  return n;
}

bool OverlayView::contains(const Triple& t) const { return extra_.count(t) || base_.contains(t); }

std::string display_label(const TripleSource& g, const Term& entity) {
  if (!entity.is_identifier()) {
    if (entity.kind() == TermKind::String) return entity.text();
    auto s = entity.to_string();
    return s.substr(0, s.rfind("^^"));
  }
  for (const auto& t : g.lookup(entity, Term::id(std::string(vocab::kLabel)))) {
    if (t.object.kind() == TermKind::String) return t.object.text();
  }
  return entity.text();
}

std::vector<Triple> neighborhood(const TripleSource& g, const Term& node, int depth) {
  std::set<Term> frontier{node}, seen{node};
  std::set<Triple> out;
  for (int hop = 0; hop < depth && !frontier.empty(); ++hop) {
    std::set<Term> next;
    for (const auto& n : frontier) {
      auto visit = [&](const std::vector<Triple>& ts) {
        for (const auto& t : ts) {
          out.insert(t);
          for (const Term* other : {&t.subject, &t.object}) {
            if (other->is_identifier() && seen.insert(*other).second) next.insert(*other);
          }
        }
      };
      visit(g.lookup(n));
      visit(g.lookup(std::nullopt, std::nullopt, n));
    }
    frontier = std::move(next);
  }
  return {out.begin(), out.end()};
}

}  // namespace kgalloc
