#include "kgalloc/graph_io.hpp"

#include "kgalloc/error.hpp"
#include "text_util.hpp"

namespace kgalloc {

Graph parse_graph(std::string_view text) {
  Graph g;
  auto lines = detail::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto toks = detail::tokenize(lines[i], i + 1);
    if (toks.empty()) continue;
    if (toks.size() != 3) {
      std::size_t col = toks.size() > 3 ? toks[3].column : toks.back().column;
      throw ParseError(i + 1, col, "expected exactly three terms, got " + std::to_string(toks.size()));
    }
    Term parts[3] = {Term::boolean(false), Term::boolean(false), Term::boolean(false)};
    for (int k = 0; k < 3; ++k) {
      try {
        parts[k] = parse_term(toks[k].text);
      } catch (const Error& e) {
        throw ParseError(i + 1, toks[k].column, e.what());
      }
    }
    for (int k = 0; k < 2; ++k) {
      if (!parts[k].is_identifier())
        throw ParseError(i + 1, toks[k].column, "literal in " + std::string(k == 0 ? "subject" : "predicate") + " position");
    }
    g.add(Triple{std::move(parts[0]), std::move(parts[1]), std::move(parts[2])});
  }
  return g;
}

std::string serialize_graph(const TripleSource& g) {
  std::string out;
  for (const auto& t : g.lookup()) {
    out += t.to_string();
    out += '\n';
  }
  return out;
}

Graph load_graph_file(const std::string& path) { return parse_graph(detail::read_file(path)); }

void save_graph_file(const TripleSource& g, const std::string& path) {
  detail::write_file(path, serialize_graph(g));
}

}  // namespace kgalloc
