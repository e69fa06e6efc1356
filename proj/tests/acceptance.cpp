// Acceptance suite: one PASS/FAIL line per criterion. Usage:
//   kgalloc_acceptance <path-to-kgalloc-cli>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "allocation_worlds.hpp"
#include "kgalloc/error.hpp"
#include "kgalloc/event_log.hpp"
#include "kgalloc/proposals.hpp"
#include "kgalloc/reasoner.hpp"
#include "kgalloc/service.hpp"
#include "kgalloc/vocab.hpp"
#include "matcher_oracle.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace kgalloc;
using nlohmann::json;

namespace {

// Pinned limits and tolerances.
constexpr double kExplanationLimitS = 1.0;
constexpr double kHardSuiteLimitS = 30.0;
constexpr double kOracleLimitS = 60.0;
constexpr double kDeterminismLimitS = 10.0;
constexpr double kScoreTol = 1e-9;
constexpr int kHardFixtures = 200;
constexpr int kOracleInstances = 500;
constexpr int kOracleMaxNodes = 40;
constexpr std::size_t kOracleMaxAtoms = 5;
constexpr int kDeterminismCases = 50;
constexpr int kPerturbations = 200;
constexpr int kMiningCases = 100;
constexpr double kExpertiseThreshold = 0.8;
constexpr double kExpectedShift = 4.0;

const std::string kExpectedConforms = "Assignment conforms separation of concerns with activity 'W_Validate application'";
const std::string kExpectedSeniority = "Seniority 'High' is sufficient for risk class 'High' of loan goal 'Car'";

std::string g_cli;
fs::path g_work;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int run_cli(const std::string& args) {
  std::string cmd = "\"" + g_cli + "\" " + args + " >>\"" + (g_work / "cli.log").string() + "\" 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string normalize(const std::string& s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\r') {
      space = !out.empty();
      continue;
    }
    if (space && c != '\n' && !out.empty() && out.back() != '\n') out += ' ';
    space = false;
    out += c;
  }
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

Outcome explanation_reproduction() {
  auto dir = g_work / "explanation";
  int rc = run_cli("simulate --scenario demo --seed 42 --mode auto --out \"" + dir.string() + "\"");
  if (rc != 0) return {false, "simulate exited with " + std::to_string(rc)};
  // Blocks are separated by blank lines; find the one for task-7.
  std::string block;
  for (const auto& b : lines_of(normalize(slurp(dir / "explanations.txt")) + "\n")) {
    if (b.empty()) {
      if (block.find(" task-7:") != std::string::npos) break;
      block.clear();
      continue;
    }
    block += b + "\n";
  }
  auto has = [&](const std::string& line) { return ("\n" + block).find("\n" + normalize(line) + "\n") != std::string::npos; };
  bool ok = has("case-1 task-7: W_Assess potential fraud") &&
            has("Resources Available: {'User_26', 'User_55', 'User_83'}") &&
            has("Assigning: User_26 to task-7 considering the following:") && has(kExpectedConforms) &&
            has(kExpectedSeniority);
  return {ok, ok ? "task-7 -> User_26 with both findings" : "block was:\n" + block};
}

// Independent separation-of-concerns check: r already performed another task
// of the case whose (different) activity shares a group with the task's.
bool soc_blocked(const Graph& g, const Term& task, const Term& r) {
  auto a1 = g.object_of(task, vocab::kInstanceOf);
  auto c = g.object_of(task, vocab::kPartOf);
  if (!a1 || !c) return false;
  std::set<Term> groups;
  for (const auto& grp : g.objects_of(*a1, "inGroup")) groups.insert(grp);
  for (const auto& t2 : g.subjects_of(vocab::kPartOf, *c)) {
    if (t2 == task || !g.contains(Triple{t2, vocab::term(vocab::kPerformedBy), r})) continue;
    auto a2 = g.object_of(t2, vocab::kInstanceOf);
    if (!a2 || *a2 == *a1) continue;
    for (const auto& grp : g.objects_of(*a2, "inGroup"))
      if (groups.count(grp)) return true;
  }
  return false;
}

Outcome hard_constraints() {
  auto demo = kgalloc::testing::load_demo();
  std::mt19937_64 rng(9001);
  std::size_t blocked = 0, automatic = 0;
  for (int i = 0; i < kHardFixtures; ++i) {
    auto world = kgalloc::testing::random_world(rng, demo);
    RuleSet rules = kgalloc::testing::random_weights(rng, demo.rules);
    Reasoner reasoner(rules, demo.ontology);
    auto ranking = reasoner.rank(world.graph, world.task);
    std::set<Term> ineligible;
    for (const auto& a : ranking.ineligible) ineligible.insert(a.resource);
    for (const auto& r : ranking.available) {
      bool expected = soc_blocked(world.graph, world.task, r);
      if (expected != static_cast<bool>(ineligible.count(r)))
        return {false, "fixture " + std::to_string(i) + ": eligibility of " + r.text() + " disagrees with the oracle"};
      if (!expected) continue;
      ++blocked;
      try {
        reasoner.decide_human(world.graph, world.task, r);
        return {false, "fixture " + std::to_string(i) + ": human selection of blocked " + r.text() + " accepted"};
      } catch (const IneligibleSelection&) {
      }
    }
    if (ranking.eligible.empty()) continue;
    auto d = reasoner.decide_automatic(world.graph, world.task);
    ++automatic;
    if (soc_blocked(world.graph, world.task, d.chosen))
      return {false, "fixture " + std::to_string(i) + ": automatic mode chose blocked " + d.chosen.text()};
  }
  if (blocked == 0) return {false, "no fixture contained a hard violation"};
  return {true, std::to_string(blocked) + " blocked candidates rejected, " + std::to_string(automatic) +
                    " automatic choices clean"};
}

Outcome matcher_oracle() {
  std::mt19937_64 rng(500500);
  std::size_t nonempty = 0, total = 0;
  for (int i = 0; i < kOracleInstances; ++i) {
    auto inst = kgalloc::testing::random_instance(rng, kOracleMaxNodes);
    std::set<Term> nodes;
    for (const auto& t : inst.graph.triples()) {
      nodes.insert(t.subject);
      nodes.insert(t.object);
    }
    if (nodes.size() > static_cast<std::size_t>(kOracleMaxNodes) || inst.rule.atoms.size() > kOracleMaxAtoms)
      return {false, "instance " + std::to_string(i) + " exceeds the size bounds"};
    auto expected = kgalloc::testing::brute_force_matches(inst.rule, inst.graph, inst.ontology, inst.seed);
    auto actual = kgalloc::testing::bindings_of(evaluate(inst.rule, inst.graph, inst.ontology, inst.seed));
    if (actual != expected) return {false, "instance " + std::to_string(i) + " differs from enumeration"};
    nonempty += expected.empty() ? 0 : 1;
    total += expected.size();
  }
  return {true, std::to_string(kOracleInstances) + " instances equal, " + std::to_string(nonempty) +
                    " with matches, " + std::to_string(total) + " bindings"};
}

Outcome determinism() {
  auto a = g_work / "det_a";
  auto b = g_work / "det_b";
  std::string common = "simulate --scenario demo --seed 42 --mode auto --cases " + std::to_string(kDeterminismCases);
  if (run_cli(common + " --out \"" + a.string() + "\"") != 0 || run_cli(common + " --out \"" + b.string() + "\"") != 0)
    return {false, "simulate failed"};
  auto log_a = slurp(a / "events.csv"), log_b = slurp(b / "events.csv");
  auto j_a = slurp(a / "decisions.jsonl"), j_b = slurp(b / "decisions.jsonl");
  std::set<std::string> cases;
  for (const auto& r : parse_event_log(log_a).records) cases.insert(r.case_id);
  if (cases.size() < static_cast<std::size_t>(kDeterminismCases)) return {false, "run covered too few cases"};
  bool same = log_a == log_b && j_a == j_b && !j_a.empty();
  return {same, same ? std::to_string(lines_of(log_a).size() - 1) + " events and " +
                           std::to_string(lines_of(j_a).size()) + " decisions byte-identical"
                     : "outputs differ"};
}

Outcome score_algebra() {
  auto demo = kgalloc::testing::load_demo();
  std::mt19937_64 rng(31337);
  std::size_t checked = 0, choices = 0;
  for (int i = 0; i < kPerturbations; ++i) {
    auto world = kgalloc::testing::random_world(rng, demo);
    RuleSet rules = kgalloc::testing::random_weights(rng, demo.rules);
    Reasoner full(rules, demo.ontology);

    std::vector<std::size_t> soft;
    for (std::size_t k = 0; k < rules.rules.size(); ++k)
      if (rules.rules[k].severity == Severity::Soft) soft.push_back(k);
    const Rule removed = rules.rules[soft[rng() % soft.size()]];
    RuleSet without = rules;
    without.rules.erase(std::find_if(without.rules.begin(), without.rules.end(),
                                     [&](const Rule& r) { return r.id == removed.id; }));
    Reasoner reduced(without, demo.ontology);

    for (const auto& r : full.eligible_resources(world.graph, world.task)) {
      auto a = full.assess(world.graph, world.task, r);
      auto b = reduced.assess(world.graph, world.task, r);
      OverlayView hypo(world.graph, {Triple{world.task, vocab::term(vocab::kPerformedBy), r}});
      auto n = evaluate(removed, hypo, demo.ontology, Binding{{removed.task_var.name, world.task}, {removed.resource_var.name, r}}).size();
      double expected = static_cast<double>(n) * removed.score;
      if (a.eligible() != b.eligible() || std::abs((a.score - b.score) - expected) > kScoreTol)
        return {false, "perturbation " + std::to_string(i) + ": removing " + removed.id + " shifted " + r.text() +
                           " by " + std::to_string(a.score - b.score) + ", expected " + std::to_string(expected)};
      ++checked;
    }

    double c = std::exp(std::log(0.01) + (std::log(100.0) - std::log(0.01)) * std::uniform_real_distribution<>(0, 1)(rng));
    RuleSet scaled = rules;
    for (auto& r : scaled.rules)
      if (r.severity == Severity::Soft) r.score *= c;
    auto base = full.rank(world.graph, world.task);
    if (base.eligible.empty()) continue;
    auto s = Reasoner(scaled, demo.ontology).decide_automatic(world.graph, world.task);
    if (s.chosen != base.eligible.front().resource)
      return {false, "perturbation " + std::to_string(i) + ": scaling by " + std::to_string(c) + " changed the choice"};
    ++choices;
  }
  return {true, std::to_string(checked) + " additivity checks, " + std::to_string(choices) + " scaled choices stable"};
}

Outcome mining_round_trip() {
  auto dir = g_work / "mining";
  if (run_cli("simulate --scenario demo --seed 7 --mode auto --graph-out --cases " + std::to_string(kMiningCases) +
              " --out \"" + dir.string() + "\"") != 0)
    return {false, "simulate failed"};
  auto journal = dir / "permissions.jsonl";
  if (run_cli("mine --log \"" + (dir / "events.csv").string() + "\" --emit permissions --journal \"" +
              journal.string() + "\"") != 0)
    return {false, "mine permissions failed"};
  auto derived_list = ProposalStore::replay(journal.string()).get("p1").update.additions;
  std::set<Triple> derived(derived_list.begin(), derived_list.end());

  // Edges the run used, read from the final graph rather than the log.
  Graph final_graph = load_graph_file((dir / "final.graph").string());
  std::set<Triple> used;
  for (const auto& t : final_graph.lookup(std::nullopt, vocab::term(vocab::kPerformedBy))) {
    if (auto a = final_graph.object_of(t.subject, vocab::kInstanceOf))
      used.insert(Triple{*a, vocab::term(vocab::kCanBeExecutedBy), t.object});
  }
  if (used.empty()) return {false, "run exercised no permissions"};
  for (const auto& t : used)
    if (!derived.count(t)) return {false, "missing derived permission " + t.to_string()};

  // Engineered log: User_X handles LimitRaise 18 of 20 times, the others stay
  // below the threshold or below the observation floor.
  std::vector<EventRecord> records;
  int n = 0;
  auto add = [&](const std::string& r, const std::string& type, int count) {
    for (int i = 0; i < count; ++i, ++n)
      records.push_back({"case-" + std::to_string(n), "task-" + std::to_string(n), "W_Validate_application", r,
                         1000 + n * 10, 1005 + n * 10, type, "Car", 5000.0});
  };
  add("User_X", "LimitRaise", 18);
  add("User_X", "NewCredit", 2);
  add("User_Y", "LimitRaise", 10);
  add("User_Y", "NewCredit", 10);
  add("User_Z", "NewCredit", 14);
  add("User_Z", "LimitRaise", 6);
  add("User_W", "LimitRaise", 3);
  auto skew = dir / "skew.csv";
  save_event_log(skew.string(), rows_of(records));
  auto ej = dir / "expertise.jsonl";
  std::ostringstream thr;
  thr << kExpertiseThreshold;
  if (run_cli("mine --log \"" + skew.string() + "\" --emit expertise --attribute ApplicationType --threshold " +
              thr.str() + " --journal \"" + ej.string() + "\"") != 0)
    return {false, "mine expertise failed"};
  auto adds = ProposalStore::replay(ej.string()).get("p1").update.additions;
  bool one = adds.size() == 1 && adds[0] == make_triple("User_X", "expertFor", "LimitRaise");
  if (!one) return {false, "expected exactly User_X expertFor LimitRaise, got " + std::to_string(adds.size()) + " edges"};
  return {true, std::to_string(derived.size()) + " derived permissions cover " + std::to_string(used.size()) +
                    " used; one expertise edge at 0.8"};
}

Outcome knowledge_change() {
  auto sc = load_scenario(kgalloc::testing::data_path("demo/demo.scenario.json"));
  auto knowledge = load_knowledge(sc);
  auto weight = [&](const char* id) { return knowledge.rules.find(id)->score; };
  const double derived_shift = weight("seniority-sufficient") - weight("seniority-insufficient");
  Service service(std::make_unique<Simulator>(sc, std::move(knowledge)));
  auto call = [&](const std::string& m, const std::string& target, const json& body = nullptr) {
    auto r = service.handle(m, target, body.is_null() ? "" : body.dump());
    return std::make_pair(r.status, json::parse(r.body));
  };
  auto user83 = [&]() -> json {
    const json view = call("GET", "/decisions/d1").second;
    for (const auto& c : view["candidates"])
      if (c["resource"] == "User_83") return c;
    return nullptr;
  };
  call("POST", "/control", {{"mode", "human"}});
  call("POST", "/control", {{"action", "step"}});
  json before = user83();
  if (before.is_null()) return {false, "task-7 not pending"};

  call("POST", "/control", {{"action", "pause"}});
  auto proposed = call("POST", "/updates", {{"additions", {"User_83 seniority High"}},
                                            {"removals", {"User_83 seniority Medium"}},
                                            {"provenance", "promotion"}});
  auto accepted = call("POST", "/updates/" + proposed.second["id"].get<std::string>(), {{"verdict", "accept"}});
  if (accepted.first != 200 || accepted.second["status"] != "applied") return {false, "update was not applied"};
  call("POST", "/control", {{"action", "resume"}});
  json after = user83();

  auto rules_of = [](const json& c) {
    std::set<std::string> ids;
    for (const auto& f : c["findings"]) ids.insert(f["rule"]);
    return ids;
  };
  double shift = after["score"].get<double>() - before["score"].get<double>();
  bool ok = std::abs(derived_shift - kExpectedShift) <= kScoreTol && std::abs(shift - derived_shift) <= kScoreTol &&
            rules_of(after).count("seniority-sufficient") && !rules_of(after).count("seniority-insufficient") &&
            rules_of(before).count("seniority-insufficient");
  std::ostringstream detail;
  detail << "User_83 " << before["score"].get<double>() << " -> " << after["score"].get<double>() << " (shift " << shift
         << ", expected " << derived_shift << ")";
  return {ok, detail.str()};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: kgalloc_acceptance <kgalloc-cli>\n";
    return 2;
  }
  g_cli = argv[1];
  g_work = fs::temp_directory_path() / ("kgalloc_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(g_work);
  fs::create_directories(g_work);

  struct Criterion {
    const char* name;
    double limit_s;  // 0: no runtime bound
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> criteria = {
      {"demo-explanation-reproduction", kExplanationLimitS, explanation_reproduction},
      {"hard-constraint-suite", kHardSuiteLimitS, hard_constraints},
      {"matcher-oracle", kOracleLimitS, matcher_oracle},
      {"determinism", kDeterminismLimitS, determinism},
      {"score-algebra", 0, score_algebra},
      {"mining-round-trip", 0, mining_round_trip},
      {"run-time-knowledge-change", 0, knowledge_change},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_s > 0 && secs >= c.limit_s) {
      o.pass = false;
      o.detail += " (over the " + std::to_string(c.limit_s) + " s limit)";
    }
    char timing[64];
    std::snprintf(timing, sizeof timing, "%.3fs", secs);
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << " [" << timing
              << (c.limit_s > 0 ? " < " + std::to_string(static_cast<int>(c.limit_s)) + "s" : std::string()) << "] "
              << o.detail << std::endl;
    failures += o.pass ? 0 : 1;
  }
  fs::remove_all(g_work);
  std::cout << (failures ? "FAILED " : "ALL PASSED ") << criteria.size() - failures << "/" << criteria.size() << "\n";
  return failures ? 1 : 0;
}
