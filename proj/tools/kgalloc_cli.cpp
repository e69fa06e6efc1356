#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "kgalloc/error.hpp"
#include "kgalloc/graph_io.hpp"
#include "kgalloc/mining.hpp"
#include "kgalloc/proposals.hpp"
#include "kgalloc/service.hpp"
#include "kgalloc/simulator.hpp"
#include "kgalloc/validate.hpp"

namespace fs = std::filesystem;
using namespace kgalloc;

namespace {

// Exit statuses.
constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kNotFound = 2;

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : std::move(fallback);
}

Scenario scenario_from(const std::string& name_or_path) {
  return load_scenario(resolve_scenario_path(name_or_path, KGALLOC_DATA_DIR));
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_load_graph(const std::string& file, const std::string& ontology_file) {
  Graph g = load_graph_file(file);
  std::cout << g.size() << " triples\n";
  if (ontology_file.empty()) return kOk;
  auto report = validate(g, load_ontology_file(ontology_file));
  for (const auto& v : report.violations) std::cout << "violation: " << v.triple.to_string() << ": " << v.reason << "\n";
  for (const auto& w : report.warnings) std::cout << "warning: " << w.triple.to_string() << ": " << w.reason << "\n";
  std::cout << report.violations.size() << " violations, " << report.warnings.size() << " warnings\n";
  return report.ok() ? kOk : kFailure;
}

int cmd_load_ontology(const std::string& file) {
  Ontology o = load_ontology_file(file);
  std::cout << o.classes().size() << " classes, " << o.relations().size() << " relations, " << o.scales().size()
            << " scales\n";
  return kOk;
}

int cmd_load_rules(const std::string& file, const std::string& ontology_file, bool print) {
  Ontology o = ontology_file.empty() ? Ontology{} : load_ontology_file(ontology_file);
  RuleSet rules = load_rules_file(file, o);
  if (print) {
    std::cout << serialize_rules(rules);
  } else {
    for (const auto& r : rules.rules)
      std::cout << r.id << " " << to_string(r.polarity) << " " << to_string(r.severity) << " " << r.score << "\n";
    std::cout << rules.rules.size() << " rules\n";
  }
  return kOk;
}

struct MineOptions {
  std::string log;
  std::string emit;
  std::string journal = "proposals.jsonl";
  std::string scenario = "demo";
  std::string attribute = "ApplicationType";
  double threshold = 0.8;
  std::size_t floor = 5;
};

int cmd_mine(const MineOptions& opt) {
  EventLog log = load_event_log(opt.log);
  for (const auto& r : log.rejects) std::cerr << opt.log << ":" << r.line << ": rejected: " << r.reason << "\n";
  Scenario sc = scenario_from(opt.scenario);
  Knowledge k = load_knowledge(sc);

  GraphUpdate u;
  if (opt.emit == "seniority") u = derive_seniority(log.records, {}, &k.graph);
  else if (opt.emit == "expertise") u = derive_expertise(log.records, parse_case_attribute(opt.attribute), opt.threshold, opt.floor);
  else u = derive_permissions(log.records);

  ProposalStore store = ProposalStore::replay(opt.journal);
  const auto& p = store.propose(u, k.graph, k.ontology);
  std::cout << "proposal " << p.id << " (" << p.update.provenance << ")\n";
  for (const auto& line : p.rendering) std::cout << "  " << line << "\n";
  std::cout << log.records.size() << " records, " << log.rejects.size() << " rejected, " << p.rendering.size()
            << " triples proposed -> " << opt.journal << "\n";
  return kOk;
}

struct SimulateOptions {
  std::string scenario = "demo";
  std::optional<std::uint64_t> seed;
  std::string mode = "auto";
  std::optional<std::size_t> cases;
  std::optional<std::int64_t> until;
  std::string out = "run";
  bool block_all = false;
  bool print = false;
  bool graph_out = false;
};

// Human mode on the terminal: show the ranked candidates and read a resource
// id; an empty line or end of input takes the top-ranked candidate.
Term prompt_human(const PendingDecisionView& v) {
  while (true) {
    std::cout << "\nDecision " << v.id << ": " << v.case_id << " " << v.task << " (" << v.activity_label << ")\n";
    for (const auto& c : v.candidates) {
      std::cout << "  " << c.resource.text() << "  score " << c.score << (c.eligible() ? "" : "  [not eligible]") << "\n";
      for (const auto& f : c.findings) std::cout << "      + " << f.message << "\n";
      for (const auto& f : c.hard_violations) std::cout << "      ! " << f.message << "\n";
    }
    std::cout << "resource [" << v.candidates.front().resource.text() << "]: " << std::flush;
    std::string line;
    if (!std::getline(std::cin, line) || line.empty()) return v.candidates.front().resource;
    for (const auto& c : v.candidates)
      if (c.resource.text() == line && c.eligible()) return c.resource;
    std::cout << "not an eligible candidate: " << line << "\n";
  }
}

int cmd_simulate(const SimulateOptions& opt) {
  Scenario sc = scenario_from(opt.scenario);
  if (opt.seed) sc.seed = *opt.seed;
  if (opt.cases) sc.cases = *opt.cases;
  if (opt.block_all) sc.block_all = true;
  DecisionMode mode = opt.mode == "human" ? DecisionMode::Human : DecisionMode::Automatic;
  Simulator sim(sc, load_knowledge(sc), mode);
  RunLimits limits;
  limits.until = opt.until;
  auto report = sim.run(limits, mode == DecisionMode::Human ? HumanCallback(prompt_human) : HumanCallback{});

  fs::create_directories(opt.out);
  write_text(fs::path(opt.out) / "events.csv", sim.event_log_csv());
  write_text(fs::path(opt.out) / "decisions.jsonl", sim.decision_journal());
  write_text(fs::path(opt.out) / "explanations.txt", sim.explanations());
  if (opt.graph_out) save_graph_file(sim.graph(), (fs::path(opt.out) / "final.graph").string());
  if (opt.print) std::cout << sim.explanations() << "\n";

  const auto& s = report.stats;
  std::cout << "cases " << s.cases_completed << "/" << s.cases_started << " completed, tasks " << s.completed << "/"
            << s.enabled << " completed, " << s.decisions << " decisions, " << report.deadlocked.size()
            << " deadlocked\n";
  for (const auto& t : report.deadlocked) {
    const auto& task = sim.tasks().at(t);
    std::cout << "deadlock: " << t << " (" << task.case_id << ", " << task.activity << ") has no eligible resource\n";
  }
  std::cout << "wrote " << opt.out << "/events.csv, decisions.jsonl, explanations.txt\n";
  return kOk;
}

int cmd_report(const std::string& run_dir, const std::string& case_id, bool divergent_only) {
  std::string text = read_text((fs::path(run_dir) / "decisions.jsonl").string());
  std::istringstream lines(text);
  std::string line;
  std::size_t shown = 0, total = 0, divergent = 0;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    AllocationDecision d = parse_journal_line(line);
    ++total;
    divergent += d.divergent ? 1 : 0;
    if (!case_id.empty() && d.case_id != case_id) continue;
    if (divergent_only && !d.divergent) continue;
    if (shown++) std::cout << "\n";
    std::cout << format_explanation(d);
  }
  std::cerr << shown << " of " << total << " decisions shown, " << divergent << " diverged from the ranking\n";
  return kOk;
}

HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

struct ServeOptions {
  std::string scenario = env_or("KGALLOC_SCENARIO", "demo");
  std::string host = "127.0.0.1";
  int port = std::atoi(env_or("KGALLOC_PORT", "8080").c_str());
  std::string mode = "human";
  int tick_ms = 200;
  bool manual = false;
  std::string proposals;
  std::optional<std::size_t> cases;
};

int cmd_serve(const ServeOptions& opt) {
  Scenario sc = scenario_from(opt.scenario);
  if (opt.cases) sc.cases = *opt.cases;
  auto sim = std::make_unique<Simulator>(sc, load_knowledge(sc),
                                         opt.mode == "human" ? DecisionMode::Human : DecisionMode::Automatic);
  ServiceOptions so;
  so.auto_advance = !opt.manual;
  so.tick = std::chrono::milliseconds(opt.tick_ms);
  so.proposal_journal = opt.proposals;
  Service service(std::move(sim), so);
  HttpServer server(service);
  int port = server.bind(opt.host, opt.port);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "serving scenario " << sc.name << " on http://" << opt.host << ":" << port << " (paused)\n" << std::flush;
  server.listen();
  g_server = nullptr;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-graph based resource allocation: load, mine, simulate, serve, report"};
  app.require_subcommand(1);

  std::string file, ontology_file;
  bool print_rules = false;
  auto* lg = app.add_subcommand("load-graph", "Parse a graph file, optionally validating it against an ontology");
  lg->add_option("file", file, "graph file")->required();
  lg->add_option("--ontology", ontology_file, "ontology file to validate against");

  auto* lo = app.add_subcommand("load-ontology", "Parse and check an ontology file");
  lo->add_option("file", file, "ontology file")->required();

  auto* lr = app.add_subcommand("load-rules", "Parse and check a rule file");
  lr->add_option("file", file, "rule file")->required();
  lr->add_option("--ontology", ontology_file, "ontology declaring the scales the rules use");
  lr->add_flag("--print", print_rules, "print the rules in canonical form");

  MineOptions mine;
  auto* mn = app.add_subcommand("mine", "Derive knowledge from an event log into a proposal journal");
  mn->add_option("--log", mine.log, "event log CSV")->required();
  mn->add_option("--emit", mine.emit, "what to derive")
      ->required()
      ->check(CLI::IsMember({"seniority", "expertise", "permissions"}));
  mn->add_option("--journal", mine.journal, "proposal journal to append to")->capture_default_str();
  mn->add_option("--scenario", mine.scenario, "scenario whose knowledge is used for rendering")->capture_default_str();
  mn->add_option("--attribute", mine.attribute, "case attribute for expertise")
      ->check(CLI::IsMember({"ApplicationType", "LoanGoal"}))
      ->capture_default_str();
  mn->add_option("--threshold", mine.threshold, "expertise share threshold in (0, 1]")->capture_default_str();
  mn->add_option("--floor", mine.floor, "minimum tasks on the value for expertise")->capture_default_str();

  SimulateOptions sim;
  auto* sm = app.add_subcommand("simulate", "Run the process simulation");
  sm->add_option("--scenario", sim.scenario, "scenario name or file")->capture_default_str();
  sm->add_option("--seed", sim.seed, "override the scenario seed");
  sm->add_option("--mode", sim.mode, "decision mode")->check(CLI::IsMember({"auto", "human"}))->capture_default_str();
  sm->add_option("--cases", sim.cases, "override the number of generated cases");
  sm->add_option("--until", sim.until, "stop at this clock value (epoch seconds)");
  sm->add_option("--out", sim.out, "output directory")->capture_default_str();
  sm->add_flag("--block-all", sim.block_all, "a pending human decision stalls the whole simulation");
  sm->add_flag("--print", sim.print, "print the explanation log");
  sm->add_flag("--graph-out", sim.graph_out, "also write the final graph as final.graph");

  ServeOptions serve;
  auto* sv = app.add_subcommand("serve", "Serve the HTTP API over a scenario (env KGALLOC_PORT, KGALLOC_SCENARIO)");
  sv->add_option("--scenario", serve.scenario, "scenario name or file")->capture_default_str();
  sv->add_option("--host", serve.host)->capture_default_str();
  sv->add_option("--port", serve.port)->capture_default_str();
  sv->add_option("--mode", serve.mode, "initial decision mode")
      ->check(CLI::IsMember({"auto", "human"}))
      ->capture_default_str();
  sv->add_option("--tick-ms", serve.tick_ms, "delay between simulation steps while running")->capture_default_str();
  sv->add_flag("--manual", serve.manual, "only advance through {\"action\": \"step\"}");
  sv->add_option("--proposals", serve.proposals, "proposal journal (replayed at start)");
  sv->add_option("--cases", serve.cases, "override the number of generated cases");

  std::string run_dir, case_id;
  bool divergent_only = false;
  auto* rp = app.add_subcommand("report", "Print the decision explanations of a simulation run");
  rp->add_option("--run", run_dir, "run directory written by simulate")->required();
  rp->add_option("--case", case_id, "only this case");
  rp->add_flag("--divergent", divergent_only, "only human decisions that overrode the ranking");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*lg) return cmd_load_graph(file, ontology_file);
    if (*lo) return cmd_load_ontology(file);
    if (*lr) return cmd_load_rules(file, ontology_file, print_rules);
    if (*mn) return cmd_mine(mine);
    if (*sm) return cmd_simulate(sim);
    if (*sv) return cmd_serve(serve);
    if (*rp) return cmd_report(run_dir, case_id, divergent_only);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NotFound) {
      std::string what = e.what();
      std::cerr << "error: " << (what.rfind("scenario not found", 0) == 0 ? what : "not found: " + what) << "\n";
      return kNotFound;
    }
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
