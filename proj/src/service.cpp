#include "kgalloc/service.hpp"

#include <httplib.h>

#include <json.hpp>
#include <map>

#include "kgalloc/error.hpp"
#include "kgalloc/graph_io.hpp"

namespace kgalloc {

namespace {

using nlohmann::ordered_json;

constexpr int kApiVersion = 1;

HttpResponse json_response(int status, const ordered_json& j) { return {status, j.dump()}; }

HttpResponse error_response(int status, std::string_view code, const std::string& message,
                            const std::vector<std::string>& violations = {}) {
  ordered_json j{{"error", std::string(code)}, {"message", message}};
  if (!violations.empty()) j["violations"] = violations;
  return json_response(status, j);
}

int status_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::UnknownId:
    case ErrorCode::UnknownTask:
    case ErrorCode::NotFound: return 404;
    case ErrorCode::IneligibleSelection:
    case ErrorCode::AlreadyDecided:
    case ErrorCode::InvalidTransition:
    case ErrorCode::NotAccepted:
    case ErrorCode::RemovalOfMissingTriple:
    case ErrorCode::NoEligibleResource: return 409;
    default: return 400;
  }
}

std::string url_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
               std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out += static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

struct Target {
  std::vector<std::string> segments;
  std::map<std::string, std::string> query;
};

Target parse_target(const std::string& target) {
  Target t;
  auto q = target.find('?');
  std::string_view path(target.data(), q == std::string::npos ? target.size() : q);
  std::size_t i = 0;
  while (i < path.size()) {
    auto j = path.find('/', i);
    if (j == std::string_view::npos) j = path.size();
    if (j > i) t.segments.push_back(url_decode(path.substr(i, j - i)));
    i = j + 1;
  }
  if (q != std::string::npos) {
    std::string_view rest(target.data() + q + 1, target.size() - q - 1);
    while (!rest.empty()) {
      auto amp = rest.find('&');
      auto pair = rest.substr(0, amp);
      auto eq = pair.find('=');
      t.query[url_decode(pair.substr(0, eq))] = eq == std::string_view::npos ? "" : url_decode(pair.substr(eq + 1));
      if (amp == std::string_view::npos) break;
      rest.remove_prefix(amp + 1);
    }
  }
  return t;
}

ordered_json parse_body(const std::string& body) {
  if (body.empty()) return ordered_json::object();
  auto j = ordered_json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::ParseError, "request body must be a JSON object");
  return j;
}

ordered_json triple_json(const TripleSource& g, const Triple& t) {
  return ordered_json{{"subject", t.subject.to_string()},
                      {"predicate", t.predicate.to_string()},
                      {"object", t.object.to_string()},
                      {"subject_label", display_label(g, t.subject)},
                      {"object_label", display_label(g, t.object)}};
}

ordered_json candidate_json(const Assessment& a) {
  ordered_json c{{"resource", a.resource.to_string()}, {"score", a.score}, {"eligible", a.eligible()}};
  c["findings"] = ordered_json::array();
  for (const auto& f : a.findings)
    c["findings"].push_back(ordered_json{{"rule", f.rule_id}, {"score", f.score}, {"message", f.message}});
  c["violations"] = ordered_json::array();
  for (const auto& f : a.hard_violations)
    c["violations"].push_back(ordered_json{{"rule", f.rule_id}, {"message", f.message}});
  return c;
}

ordered_json pending_json(const PendingDecisionView& v) {
  ordered_json j{{"id", v.id}, {"task", v.task}, {"case", v.case_id}, {"activity", v.activity_label}};
  j["attributes"] = ordered_json::object();
  for (const auto& [k, val] : v.case_attributes) j["attributes"][k] = val;
  j["available"] = ordered_json::array();
  for (const auto& r : v.available) j["available"].push_back(r.to_string());
  j["candidates"] = ordered_json::array();
  for (const auto& c : v.candidates) j["candidates"].push_back(candidate_json(c));
  j["created_at"] = v.created_at;
  return j;
}

ordered_json decision_json(const AllocationDecision& d) {
  return ordered_json{{"task", d.task.to_string()},
                      {"case", d.case_id},
                      {"activity", d.activity_label},
                      {"chosen", d.chosen.to_string()},
                      {"mode", std::string(to_string(d.mode))},
                      {"divergent", d.divergent},
                      {"timestamp", d.timestamp},
                      {"explanation", format_explanation(d)}};
}

ordered_json proposal_json(const UpdateProposal& p) {
  auto lines = [](const std::vector<Triple>& ts) {
    auto arr = ordered_json::array();
    for (const auto& t : ts) arr.push_back(t.to_string());
    return arr;
  };
  return ordered_json{{"id", p.id},
                      {"status", std::string(to_string(p.update.status))},
                      {"provenance", p.update.provenance},
                      {"additions", lines(p.update.additions)},
                      {"removals", lines(p.update.removals)},
                      {"rendering", p.rendering},
                      {"supersedes", p.supersedes ? ordered_json(*p.supersedes) : ordered_json(nullptr)},
                      {"superseded_by", p.superseded_by ? ordered_json(*p.superseded_by) : ordered_json(nullptr)}};
}

std::vector<Triple> triples_of(const ordered_json& j, const char* key) {
  std::vector<Triple> out;
  if (!j.contains(key)) return out;
  if (!j[key].is_array()) throw Error(ErrorCode::ParseError, std::string(key) + " must be an array of triple lines");
  for (const auto& line : j[key]) {
    if (!line.is_string()) throw Error(ErrorCode::ParseError, std::string(key) + " must hold strings");
    Graph one = parse_graph(line.get<std::string>());
    if (one.size() != 1) throw Error(ErrorCode::ParseError, "expected one triple per entry in " + std::string(key));
    out.push_back(*one.triples().begin());
  }
  return out;
}

GraphUpdate update_of(const ordered_json& j) {
  GraphUpdate u;
  u.additions = triples_of(j, "additions");
  u.removals = triples_of(j, "removals");
  u.provenance = j.value("provenance", std::string());
  return u;
}

ordered_json state_json(const Simulator& sim) {
  auto s = sim.stats();
  ordered_json counts{{"enabled", s.enabled},         {"completed", s.completed},
                      {"running", s.running},         {"pending", s.pending},
                      {"waiting", s.waiting},         {"cases_started", s.cases_started},
                      {"cases_completed", s.cases_completed}, {"decisions", s.decisions}};
  return ordered_json{{"version", kApiVersion},
                      {"clock", sim.clock()},
                      {"mode", std::string(to_string(sim.mode()))},
                      {"paused", sim.paused()},
                      {"idle", sim.idle()},
                      {"counts", counts}};
}

DecisionMode parse_mode(const std::string& s) {
  if (s == "auto" || s == "automatic") return DecisionMode::Automatic;
  if (s == "human") return DecisionMode::Human;
  throw Error(ErrorCode::InvalidArgument, "unknown mode '" + s + "'");
}

}  // namespace

Service::Service(std::unique_ptr<Simulator> sim, ServiceOptions options)
    : sim_(std::move(sim)),
      proposals_(options.proposal_journal.empty() ? ProposalStore()
                                                  : ProposalStore::replay(options.proposal_journal)),
      options_(std::move(options)) {
  sim_->pause();
  thread_ = std::thread([this] { worker(); });
}

Service::~Service() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  thread_.join();
}

void Service::enqueue(std::function<void()> job) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    jobs_.push_back(std::move(job));
  }
  cv_.notify_all();
}

void Service::worker() {
  std::unique_lock<std::mutex> lock(mu_);
  while (true) {
    bool running = options_.auto_advance && !sim_->paused() && !sim_->idle();
    if (running) {
      cv_.wait_for(lock, options_.tick, [this] { return stopping_ || !jobs_.empty(); });
    } else {
      cv_.wait(lock, [this] { return stopping_ || !jobs_.empty(); });
    }
    if (stopping_) return;
    while (!jobs_.empty()) {
      auto job = std::move(jobs_.front());
      jobs_.pop_front();
      lock.unlock();
      job();
      lock.lock();
    }
    if (options_.auto_advance && !sim_->paused() && !sim_->idle() && jobs_.empty()) {
      lock.unlock();
      try {
        sim_->step();
      } catch (const std::exception&) {
        sim_->pause();  // surface through GET /state rather than kill the worker
      }
      lock.lock();
    }
  }
}

void Service::with_simulator(const std::function<void(Simulator&)>& fn) {
  std::packaged_task<void()> task([&] { fn(*sim_); });
  auto done = task.get_future();
  enqueue([&task] { task(); });
  done.get();
}

HttpResponse Service::handle(const std::string& method, const std::string& target, const std::string& body) {
  std::packaged_task<HttpResponse()> task([&] { return dispatch(method, target, body); });
  auto result = task.get_future();
  enqueue([&task] { task(); });
  return result.get();
}

HttpResponse Service::dispatch(const std::string& method, const std::string& target, const std::string& body) {
  try {
    const Target t = parse_target(target);
    const auto& seg = t.segments;
    const bool get = method == "GET";
    const bool post = method == "POST";
    Simulator& sim = *sim_;

    if (seg.size() == 1 && seg[0] == "state" && get) return json_response(200, state_json(sim));

    if (seg.size() == 1 && seg[0] == "control" && post) {
      auto j = parse_body(body);
      std::string action = j.value("action", std::string(j.contains("mode") ? "mode" : ""));
      if (action == "pause") sim.pause();
      else if (action == "resume") sim.resume();
      else if (action == "mode") sim.set_mode(parse_mode(j.at("mode").get<std::string>()));
      else if (action == "step") {
        // Stepping is a manual override of the pause flag.
        const bool was_paused = sim.paused();
        sim.resume();
        auto n = j.value("count", 1);
        for (int i = 0; i < n && !sim.idle(); ++i) sim.step();
        if (was_paused) sim.pause();
      } else {
        return error_response(400, "invalid-argument", "unknown control action '" + action + "'");
      }
      return json_response(200, state_json(sim));
    }

    if (!seg.empty() && seg[0] == "decisions") {
      if (seg.size() == 1 && get) {
        ordered_json arr = ordered_json::array();
        for (const auto& v : sim.pending()) arr.push_back(pending_json(v));
        return json_response(200, ordered_json{{"version", kApiVersion}, {"decisions", arr}});
      }
      if (seg.size() == 2 && get) {
        auto v = sim.pending(seg[1]);
        if (!v) return error_response(404, "unknown-id", "no pending decision " + seg[1]);
        return json_response(200, pending_json(*v));
      }
      if (seg.size() == 2 && post) {
        auto j = parse_body(body);
        if (!j.contains("resource") || !j["resource"].is_string())
          return error_response(400, "invalid-argument", "body needs a \"resource\" string");
        auto d = sim.resolve(seg[1], parse_term(j["resource"].get<std::string>()));
        return json_response(200, ordered_json{{"version", kApiVersion}, {"id", seg[1]}, {"decision", decision_json(d)}});
      }
    }

    if (seg.size() == 1 && seg[0] == "explanations" && get) {
      auto it = t.query.find("caseId");
      std::string case_id = it == t.query.end() ? std::string() : it->second;
      ordered_json arr = ordered_json::array();
      for (const auto& d : sim.decisions())
        if (case_id.empty() || d.case_id == case_id) arr.push_back(decision_json(d));
      return json_response(200, ordered_json{{"version", kApiVersion}, {"case", case_id}, {"explanations", arr}});
    }

    if (!seg.empty() && seg[0] == "updates") {
      if (seg.size() == 1 && get) {
        ordered_json arr = ordered_json::array();
        for (const auto* p : proposals_.list()) arr.push_back(proposal_json(*p));
        return json_response(200, ordered_json{{"version", kApiVersion}, {"updates", arr}});
      }
      if (seg.size() == 1 && post) {
        const auto& p = proposals_.propose(update_of(parse_body(body)), sim.graph(), sim.ontology());
        return json_response(201, proposal_json(p));
      }
      if (seg.size() == 2 && get) {
        const UpdateProposal* p = proposals_.find(seg[1]);
        if (!p) return error_response(404, "unknown-id", "no proposal " + seg[1]);
        return json_response(200, proposal_json(*p));
      }
      if (seg.size() == 2 && post) {
        auto j = parse_body(body);
        Verdict v = parse_verdict(j.value("verdict", std::string()));
        std::optional<GraphUpdate> amendment;
        if (v == Verdict::Amend) {
          if (!j.contains("update") || !j["update"].is_object())
            return error_response(400, "invalid-argument", "amend needs an \"update\" object");
          amendment = update_of(j["update"]);
        }
        if (!proposals_.find(seg[1])) return error_response(404, "unknown-id", "no proposal " + seg[1]);
        const UpdateProposal& p = proposals_.review(seg[1], v, amendment, sim.graph(), sim.ontology());
        ordered_json out = proposal_json(p);
        if (v == Verdict::Accept) {
          auto applied = proposals_.apply(p.id, sim.graph());
          out = proposal_json(proposals_.get(p.id));
          out["warnings"] = applied.warnings;
        }
        return json_response(200, out);
      }
    }

    if (seg.size() == 2 && seg[0] == "graph" && seg[1] == "neighborhood" && get) {
      auto node_it = t.query.find("node");
      if (node_it == t.query.end() || node_it->second.empty())
        return error_response(400, "invalid-argument", "missing node");
      int depth = 2;
      if (auto d = t.query.find("depth"); d != t.query.end()) {
        try {
          depth = std::stoi(d->second);
        } catch (const std::exception&) {
          return error_response(400, "invalid-argument", "bad depth");
        }
      }
      if (depth < 0 || depth > 5) return error_response(400, "invalid-argument", "depth must be within 0..5");
      Term node = parse_term(node_it->second);
      if (sim.graph().lookup(node).empty() && sim.graph().lookup(std::nullopt, std::nullopt, node).empty())
        return error_response(404, "unknown-id", "node " + node_it->second + " not in graph");
      ordered_json arr = ordered_json::array();
      for (const auto& tr : neighborhood(sim.graph(), node, depth)) arr.push_back(triple_json(sim.graph(), tr));
      return json_response(200, ordered_json{{"version", kApiVersion},
                                             {"node", node.to_string()},
                                             {"depth", depth},
                                             {"triples", arr}});
    }

    return error_response(404, "not-found", method + " " + target + " is not an endpoint");
  } catch (const IneligibleSelection& e) {
    return error_response(409, to_string(e.code()), e.what(), e.messages());
  } catch (const Error& e) {
    return error_response(status_for(e.code()), to_string(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return error_response(400, "parse-error", e.what());
  }
}

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>()) {
  auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
    auto out = service.handle(req.method, req.target, req.body);
    res.status = out.status;
    res.set_content(out.body, "application/json");
  };
  auto& server = impl_->server;
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Get(".*", forward);
  server.Post(".*", forward);
  server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace kgalloc
