#include "kgalloc/proposals.hpp"

#include <fstream>
#include <json.hpp>

#include "kgalloc/error.hpp"
#include "kgalloc/graph_io.hpp"
#include "kgalloc/validate.hpp"
#include "kgalloc/vocab.hpp"
#include "text_util.hpp"

namespace kgalloc {

namespace {

using nlohmann::ordered_json;

std::string class_word(const TripleSource& g, const Ontology& o, const Term& node) {
  for (const auto& name : types_of(g, node)) {
    if (const ClassDef* c = o.find_class(name)) return c->description.empty() ? c->name : c->description;
  }
  return {};
}

std::string render_line(const char* verb, const Triple& t, const TripleSource& g, const Ontology& o) {
  std::string subject = "'" + display_label(g, t.subject) + "'";
  std::string object = "'" + display_label(g, t.object) + "'";
  const std::string& pred = t.predicate.text();
  std::string line = std::string(verb) + ": ";
  if (pred == vocab::kType) {
    std::string cls = t.object.is_identifier() ? t.object.text() : object;
    if (const ClassDef* c = o.find_class(cls); c && !c->description.empty()) cls = c->description;
    return line + subject + " is a " + cls;
  }
  if (auto word = class_word(g, o, t.subject); !word.empty()) line += word + " ";
  line += subject + " ";
  if (pred == vocab::kLabel) return line + "is called " + object;
  if (const RelationDef* r = o.find_relation(pred))
    return line + (r->description.empty() ? r->name : r->description) + " " + object;
  return line + pred + " " + object + " (undeclared relation)";
}

ordered_json triples_json(const std::vector<Triple>& ts) {
  auto arr = ordered_json::array();
  for (const auto& t : ts) arr.push_back(t.to_string());
  return arr;
}

std::vector<Triple> triples_from(const ordered_json& arr) {
  std::vector<Triple> out;
  for (const auto& line : arr) {
    Graph one = parse_graph(line.get<std::string>());
    out.insert(out.end(), one.triples().begin(), one.triples().end());
  }
  return out;
}

ordered_json to_json(const UpdateProposal& p) {
  ordered_json j;
  j["id"] = p.id;
  j["status"] = std::string(to_string(p.update.status));
  j["provenance"] = p.update.provenance;
  j["additions"] = triples_json(p.update.additions);
  j["removals"] = triples_json(p.update.removals);
  j["rendering"] = p.rendering;
  j["supersedes"] = p.supersedes ? ordered_json(*p.supersedes) : ordered_json(nullptr);
  j["superseded_by"] = p.superseded_by ? ordered_json(*p.superseded_by) : ordered_json(nullptr);
  return j;
}

UpdateProposal from_json(const ordered_json& j) {
  UpdateProposal p;
  p.id = j.at("id").get<std::string>();
  p.update.status = parse_update_status(j.at("status").get<std::string>());
  p.update.provenance = j.at("provenance").get<std::string>();
  p.update.additions = triples_from(j.at("additions"));
  p.update.removals = triples_from(j.at("removals"));
  p.rendering = j.at("rendering").get<std::vector<std::string>>();
  if (!j.at("supersedes").is_null()) p.supersedes = j["supersedes"].get<std::string>();
  if (!j.at("superseded_by").is_null()) p.superseded_by = j["superseded_by"].get<std::string>();
  return p;
}

}  // namespace

std::vector<std::string> render_update(const GraphUpdate& u, const TripleSource& g, const Ontology& o) {
  OverlayView view(g, u.additions);
  std::vector<std::string> lines;
  for (const auto& t : u.additions) lines.push_back(render_line("Add", t, view, o));
  for (const auto& t : u.removals) lines.push_back(render_line("Remove", t, view, o));
  return lines;
}

Verdict parse_verdict(std::string_view s) {
  if (s == "accept") return Verdict::Accept;
  if (s == "reject") return Verdict::Reject;
  if (s == "amend") return Verdict::Amend;
  throw Error(ErrorCode::InvalidArgument, "unknown verdict '" + std::string(s) + "'");
}

const UpdateProposal& ProposalStore::propose(GraphUpdate u, const TripleSource& g, const Ontology& o) {
  u.check();
  u.status = UpdateStatus::Proposed;
  UpdateProposal p;
  p.id = "p" + std::to_string(order_.size() + 1);
  p.rendering = render_update(u, g, o);
  p.update = std::move(u);
  order_.push_back(p.id);
  auto& stored = by_id_[p.id] = std::move(p);
  record("propose", stored);
  return stored;
}

const UpdateProposal& ProposalStore::review(const std::string& id, Verdict v,
                                            const std::optional<GraphUpdate>& amendment, const TripleSource& g,
                                            const Ontology& o) {
  UpdateProposal& p = get_mut(id);
  if (p.update.status != UpdateStatus::Proposed)
    throw Error(ErrorCode::InvalidTransition,
                "proposal " + id + " is " + std::string(to_string(p.update.status)) + ", not proposed");
  switch (v) {
    case Verdict::Accept:
      p.update.status = UpdateStatus::Accepted;
      record("accept", p);
      return p;
    case Verdict::Reject:
      p.update.status = UpdateStatus::Rejected;
      record("reject", p);
      return p;
    case Verdict::Amend: {
      if (!amendment) throw Error(ErrorCode::InvalidArgument, "amend requires a replacement update");
      amendment->check();
      const UpdateProposal& fresh = propose(*amendment, g, o);
      UpdateProposal& old = get_mut(id);  // propose() may rehash nothing, but keep lookups fresh
      UpdateProposal& neu = get_mut(fresh.id);
      old.update.status = UpdateStatus::Superseded;
      old.superseded_by = neu.id;
      neu.supersedes = old.id;
      record("supersede", old);
      record("amend", neu);
      return neu;
    }
  }
  return p;
}

ApplyResult ProposalStore::apply(const std::string& id, Graph& g, MissingRemovalPolicy policy) {
  UpdateProposal& p = get_mut(id);
  ApplyResult r = apply_update(g, p.update, policy);
  record("apply", p);
  return r;
}

const UpdateProposal& ProposalStore::get(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) throw Error(ErrorCode::UnknownId, "unknown proposal " + id);
  return it->second;
}

UpdateProposal& ProposalStore::get_mut(const std::string& id) { return const_cast<UpdateProposal&>(get(id)); }

const UpdateProposal* ProposalStore::find(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &it->second;
}

std::vector<const UpdateProposal*> ProposalStore::list() const {
  std::vector<const UpdateProposal*> out;
  for (const auto& id : order_) out.push_back(&by_id_.at(id));
  return out;
}

void ProposalStore::record(std::string_view event, const UpdateProposal& p) {
  ++seq_;
  if (journal_path_.empty()) return;
  ordered_json j;
  j["seq"] = seq_;
  j["event"] = std::string(event);
  j["proposal"] = to_json(p);
  std::ofstream out(journal_path_, std::ios::app | std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot append to " + journal_path_);
  out << j.dump() << '\n';
}

ProposalStore ProposalStore::replay(const std::string& journal_path) {
  ProposalStore store;
  std::string text;
  try {
    text = detail::read_file(journal_path);
  } catch (const Error&) {
    text.clear();  // a missing journal is an empty one
  }
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(text)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      auto j = ordered_json::parse(line);
      UpdateProposal p = from_json(j.at("proposal"));
      if (!store.by_id_.count(p.id)) store.order_.push_back(p.id);
      store.by_id_[p.id] = std::move(p);
      store.seq_ = j.at("seq").get<std::size_t>();
    } catch (const ordered_json::exception& e) {
      throw ParseError(line_no, 1, std::string("bad proposal journal record: ") + e.what());
    }
  }
  store.journal_path_ = journal_path;
  return store;
}

}  // namespace kgalloc
