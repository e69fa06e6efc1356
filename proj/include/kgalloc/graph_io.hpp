#pragma once

#include <string>
#include <string_view>

#include "kgalloc/graph.hpp"

namespace kgalloc {

// One `<subject> <predicate> <object>` per line; `#` starts a comment.
// Throws ParseError with the line and column of the offending token.
Graph parse_graph(std::string_view text);

// Canonical form: triples sorted, one per line, single spaces, no comments.
std::string serialize_graph(const TripleSource& g);

Graph load_graph_file(const std::string& path);
void save_graph_file(const TripleSource& g, const std::string& path);

}  // namespace kgalloc
