#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kgalloc/term.hpp"

namespace kgalloc {

// Unbound positions are wildcards.
struct TriplePattern {
  std::optional<Term> subject;
  std::optional<Term> predicate;
  std::optional<Term> object;

  bool matches(const Triple& t) const;
};

/// Read-only access to a set of triples. Results of match() are sorted.
class TripleSource {
 public:
  virtual ~TripleSource() = default;

  virtual std::vector<Triple> match(const TriplePattern& pattern) const = 0;
  // Upper bound on match(pattern).size(); exact for Graph.
  virtual std::size_t count(const TriplePattern& pattern) const = 0;
  virtual bool contains(const Triple& t) const = 0;

  std::vector<Triple> lookup(std::optional<Term> s = std::nullopt,
                             std::optional<Term> p = std::nullopt,
                             std::optional<Term> o = std::nullopt) const {
    return match(TriplePattern{std::move(s), std::move(p), std::move(o)});
  }

  // First object of (subject, predicate, ?), if any.
  std::optional<Term> object_of(const Term& subject, std::string_view predicate) const;
  std::vector<Term> objects_of(const Term& subject, std::string_view predicate) const;
  std::vector<Term> subjects_of(std::string_view predicate, const Term& object) const;
};

/// In-memory triple store with subject, predicate and object indexes.
///
/// Set semantics: adding an existing triple is a no-op. Copying a Graph
/// yields an independent snapshot that can be handed to other threads.
class Graph : public TripleSource {
 public:
  Graph() = default;

  // Returns true if the triple was new. Throws Error{MalformedTerm}.
  bool add(const Triple& t);
  // Returns true if the triple was present.
  bool remove(const Triple& t);
  void clear();

  std::size_t size() const noexcept { return triples_.size(); }
  bool empty() const noexcept { return triples_.empty(); }
  const std::set<Triple>& triples() const noexcept { return triples_; }

  std::vector<Triple> match(const TriplePattern& pattern) const override;
  std::size_t count(const TriplePattern& pattern) const override;
  bool contains(const Triple& t) const override { return triples_.count(t) != 0; }

  // Index/triple-set agreement; used by tests.
  bool indexes_consistent() const;

  friend bool operator==(const Graph& a, const Graph& b) { return a.triples_ == b.triples_; }

 private:
  using Index = std::map<Term, std::set<Triple>>;

  const std::set<Triple>* smallest_candidates(const TriplePattern& p) const;

  std::set<Triple> triples_;
  Index by_subject_;
  Index by_predicate_;
  Index by_object_;
};

/// A base source plus a few transient triples, without touching the base.
class OverlayView : public TripleSource {
 public:
  OverlayView(const TripleSource& base, std::vector<Triple> extra);

  std::vector<Triple> match(const TriplePattern& pattern) const override;
  std::size_t count(const TriplePattern& pattern) const override;
  bool contains(const Triple& t) const override;

 private:
  const TripleSource& base_;
  std::set<Triple> extra_;
};

// Value of the entity's `label` triple when it is a string, else its identifier.
std::string display_label(const TripleSource& g, const Term& entity);

// Triples reachable within `depth` undirected hops of `node`.
std::vector<Triple> neighborhood(const TripleSource& g, const Term& node, int depth);

}  // namespace kgalloc
