#include <doctest.h>

#include <json.hpp>

#include "kgalloc/error.hpp"
#include "kgalloc/proposals.hpp"
#include "kgalloc/simulator.hpp"
#include "kgalloc/vocab.hpp"
#include "test_support.hpp"

using namespace kgalloc;
using kgalloc::testing::data_path;
using kgalloc::testing::id;

namespace {

Scenario demo_scenario() { return load_scenario(data_path("demo/demo.scenario.json")); }

nlohmann::json demo_json() {
  return nlohmann::json::parse(kgalloc::testing::read_text(data_path("demo/demo.scenario.json")));
}

ErrorCode scenario_error(const nlohmann::json& j) {
  try {
    parse_scenario(j.dump(), data_path("demo"));
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

void step_checked(Simulator& sim) {
  sim.step();
  sim.check_invariants();
}

double score_of(const PendingDecisionView& v, const char* resource) {
  for (const auto& c : v.candidates)
    if (c.resource.text() == resource) return c.score;
  FAIL("candidate missing");
  return 0;
}

// One clerk allowed everywhere; validation and fraud assessment must differ.
Simulator soc_deadlock_fixture() {
  auto demo = kgalloc::testing::load_demo();
  Knowledge k{Graph{}, demo.ontology, demo.rules};
  for (const auto& t : demo.graph.triples()) {
    const auto& s = t.subject.text();
    if (s.rfind("User_", 0) == 0 || s.rfind("task-", 0) == 0 || s.rfind("case-", 0) == 0) continue;
    k.graph.add(t);
  }
  k.graph.add(make_triple("User_1", "type", "Resource"));
  k.graph.add(make_triple("User_1", "hasRole", "Clerk"));
  k.graph.add(make_triple("User_1", "seniority", "High"));
  Scenario sc = demo_scenario();
  sc.cases = 1;
  sc.initial_tasks.clear();
  sc.model.activities = {"W_Validate_application", "W_Assess_potential_fraud"};
  sc.model.flow = {{"start", {{"W_Validate_application", 1.0}}},
                   {"W_Validate_application", {{"W_Assess_potential_fraud", 1.0}}},
                   {"W_Assess_potential_fraud", {{"end", 1.0}}}};
  return Simulator(sc, std::move(k));
}

}  // namespace

TEST_CASE("scenario files") {
  SUBCASE("demo loads") {
    auto sc = demo_scenario();
    CHECK(sc.name == "demo");
    CHECK(sc.model.activities.size() == 5);
    CHECK(sc.initial_tasks.size() == 1);
    CHECK(sc.attributes.application_types.front().first == "LimitRaise");
  }
  SUBCASE("model errors") {
    auto j = demo_json();
    j["flow"]["W_Validate_application"][0]["p"] = 0.9;
    CHECK(scenario_error(j) == ErrorCode::InvalidModel);
    j = demo_json();
    j["flow"].erase("start");
    CHECK(scenario_error(j) == ErrorCode::InvalidModel);
    j = demo_json();
    j["flow"]["W_Handle_leads"][0]["to"] = "W_Nowhere";
    CHECK(scenario_error(j) == ErrorCode::InvalidModel);
    j = demo_json();
    j["flow"]["W_Call_after_offers"][0]["to"] = "end";
    CHECK(scenario_error(j) == ErrorCode::InvalidModel);  // validation and fraud now unreachable
    j = demo_json();
    j["activities"]["W_Handle_leads"]["max"] = 10;
    CHECK(scenario_error(j) == ErrorCode::InvalidModel);
    j = demo_json();
    j["flow"]["W_Assess_potential_fraud"][0]["to"] = "W_Handle_leads";
    j["flow"]["W_Validate_application"] = nlohmann::json::array({{{"to", "W_Assess_potential_fraud"}, {"p", 1.0}}});
    CHECK(scenario_error(j) == ErrorCode::InvalidModel);  // no path into end
    j = demo_json();
    j.erase("flow");
    CHECK(scenario_error(j) == ErrorCode::InvalidModel);
  }
  SUBCASE("syntax and lookup errors") {
    try {
      parse_scenario("{\"graph\": ", ".");
      FAIL("expected parse error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ParseError);
    }
    try {
      load_scenario("/nonexistent/x.scenario.json");
      FAIL("expected not-found");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NotFound);
      CHECK(std::string(e.what()).find("scenario not found") != std::string::npos);
    }
  }
  SUBCASE("name resolution") {
    CHECK(resolve_scenario_path("demo", "/data") == "/data/demo/demo.scenario.json");
    CHECK(resolve_scenario_path("runs/x.json", "/data") == "runs/x.json");
  }
}

TEST_CASE("generate_cases") {
  const auto sc = demo_scenario();
  CHECK(generate_cases(sc.attributes, sc.interarrival, 0, 42).empty());
  auto a = generate_cases(sc.attributes, sc.interarrival, 5, 42, 1000, 2);
  auto b = generate_cases(sc.attributes, sc.interarrival, 5, 42, 1000, 2);
  REQUIRE(a.size() == 5);
  CHECK(a.front().id == "case-2");
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].application_type == b[i].application_type);
    CHECK(a[i].loan_goal == b[i].loan_goal);
    CHECK(a[i].requested_amount == b[i].requested_amount);
    CHECK(a[i].arrival == b[i].arrival);
    CHECK(a[i].arrival > (i ? a[i - 1].arrival : 1000));
    CHECK(a[i].requested_amount >= sc.attributes.amount_min);
    CHECK(a[i].requested_amount <= sc.attributes.amount_max);
  }

  SUBCASE("forced attributes reach the graph") {
    Scenario forced = sc;
    forced.cases = 6;
    forced.initial_tasks.clear();
    forced.attributes.application_types = {{"LimitRaise", 1.0}};
    forced.attributes.loan_goals = {{"Car", 1.0}};
    Simulator sim(forced, load_knowledge(forced));
    sim.run();
    for (int n = 2; n <= 7; ++n) {
      Term c = Term::id("case-" + std::to_string(n));
      CHECK(sim.graph().contains(Triple{c, id("hasLoanGoal"), id("Car")}));
      CHECK(sim.graph().contains(Triple{c, id("hasApplicationType"), id("LimitRaise")}));
    }
    for (const auto& row : sim.log()) {
      CHECK(row.loan_goal == (row.case_id == "case-1" ? "Car" : "Car"));
      if (row.case_id != "case-1") CHECK(row.application_type == "LimitRaise");
    }
  }
}

TEST_CASE("step") {
  SUBCASE("automatic mode decides the fraud assessment") {
    Simulator sim(demo_scenario(), load_knowledge(demo_scenario()));
    auto rows = sim.step();
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].lifecycle == Lifecycle::Enable);
    CHECK(rows[1].lifecycle == Lifecycle::Start);
    CHECK(rows[1].task_id == "task-7");
    CHECK(rows[1].resource == "User_26");
    REQUIRE(sim.decisions().size() == 1);
    CHECK(sim.graph().contains(make_triple("task-7", "performedBy", "User_26")));
    CHECK(sim.graph().contains(make_triple("User_26", "busy", Term::boolean(true))));
  }
  SUBCASE("human mode parks the task") {
    Simulator sim(demo_scenario(), load_knowledge(demo_scenario()), DecisionMode::Human);
    sim.step();
    auto pending = sim.pending();
    REQUIRE(pending.size() == 1);
    CHECK(pending[0].id == "d1");
    CHECK(pending[0].task == "task-7");
    CHECK(pending[0].activity_label == "W_Assess potential fraud");
    REQUIRE(pending[0].candidates.size() == 3);
    CHECK(pending[0].candidates[0].resource == id("User_26"));
    CHECK(pending[0].candidates[1].resource == id("User_83"));
    CHECK_FALSE(pending[0].candidates[2].eligible());
    for (int i = 0; i < 20; ++i) sim.step();
    CHECK(sim.clock() > pending[0].created_at);
    CHECK(sim.tasks().at("task-7").state == TaskState::PendingDecision);
    CHECK(sim.pending().size() >= 1);
    sim.check_invariants();
  }
  SUBCASE("empty queue") {
    Scenario sc = demo_scenario();
    sc.cases = 0;
    sc.initial_tasks.clear();
    Simulator sim(sc, load_knowledge(sc));
    auto before = sim.clock();
    CHECK(sim.step().empty());
    CHECK(sim.clock() == before);
    CHECK(sim.idle());
  }
}

TEST_CASE("run") {
  SUBCASE("ten cases complete") {
    Scenario sc = demo_scenario();
    sc.cases = 10;
    sc.seed = 7;
    sc.initial_tasks.clear();
    Simulator sim(sc, load_knowledge(sc));
    auto report = sim.run();
    CHECK(report.finished);
    CHECK(report.stats.cases_completed == 10);
    CHECK(report.deadlocked.empty());
    sim.check_invariants();
  }
  SUBCASE("separation of concerns deadlock") {
    Simulator sim = soc_deadlock_fixture();
    auto report = sim.run();
    CHECK(report.finished);
    REQUIRE(report.deadlocked.size() == 1);
    CHECK(sim.tasks().at(report.deadlocked[0]).activity == "W_Assess_potential_fraud");
    CHECK(report.stats.enabled == report.stats.completed + report.stats.running + report.stats.pending +
                                      report.stats.waiting);
  }
  SUBCASE("deterministic") {
    Scenario sc = demo_scenario();
    sc.cases = 15;
    Simulator a(sc, load_knowledge(sc));
    Simulator b(sc, load_knowledge(sc));
    a.run();
    b.run();
    CHECK(a.event_log_csv() == b.event_log_csv());
    CHECK(a.decision_journal() == b.decision_journal());
    sc.seed = 43;
    Simulator c(sc, load_knowledge(sc));
    c.run();
    CHECK(c.event_log_csv() != a.event_log_csv());
  }
  SUBCASE("limits") {
    Scenario sc = demo_scenario();
    sc.cases = 10;
    Simulator sim(sc, load_knowledge(sc));
    auto report = sim.run(RunLimits{std::nullopt, 3});
    CHECK(report.stats.cases_completed == 3);
    CHECK_FALSE(report.finished);
    Simulator timed(sc, load_knowledge(sc));
    auto until = sc.start_time + 7200;
    timed.run(RunLimits{until, std::nullopt});
    CHECK(timed.clock() <= until);
    REQUIRE(timed.next_event_time());
    CHECK(*timed.next_event_time() > until);
  }
  SUBCASE("human mode needs a callback") {
    Simulator sim(demo_scenario(), load_knowledge(demo_scenario()), DecisionMode::Human);
    CHECK_THROWS_AS(sim.run(), Error);
  }
  SUBCASE("following the ranking by hand matches automatic mode") {
    Scenario sc = demo_scenario();
    sc.cases = 8;
    Simulator autom(sc, load_knowledge(sc));
    Simulator human(sc, load_knowledge(sc), DecisionMode::Human);
    autom.run();
    human.run({}, [](const PendingDecisionView& v) { return v.candidates.front().resource; });
    CHECK(human.event_log_csv() == autom.event_log_csv());
    for (const auto& d : human.decisions()) {
      CHECK(d.mode == DecisionMode::Human);
      CHECK_FALSE(d.divergent);
    }
  }
}

TEST_CASE("run invariants") {
  Scenario sc = demo_scenario();
  sc.cases = 25;
  Simulator sim(sc, load_knowledge(sc));
  while (!sim.idle()) step_checked(sim);
  auto s = sim.stats();
  CHECK(s.enabled == s.completed + s.running + s.pending + s.waiting);
  CHECK(s.completed == s.enabled);

  // Every completed task in the log is in the graph with matching timestamps.
  std::size_t completions = 0;
  std::map<std::string, std::int64_t> starts;
  for (const auto& row : sim.log()) {
    const Term task = Term::id(row.task_id);
    if (row.lifecycle == Lifecycle::Start) starts[row.task_id] = row.timestamp;
    if (row.lifecycle != Lifecycle::Complete) continue;
    ++completions;
    CHECK(sim.graph().contains(Triple{task, id("performedBy"), Term::id(row.resource)}));
    CHECK(sim.graph().contains(Triple{task, id("endedAt"), Term::integer(row.timestamp)}));
    CHECK(sim.graph().contains(Triple{task, id("startedAt"), Term::integer(starts.at(row.task_id))}));
  }
  CHECK(completions == s.completed);
  CHECK(sim.graph().lookup(std::nullopt, id("busy")).empty());
  // History aggregation: per-resource counts add up.
  std::int64_t total = 0;
  for (const auto& t : sim.graph().lookup(std::nullopt, id("completedTaskCount"))) total += t.object.as_integer();
  CHECK(total == static_cast<std::int64_t>(completions));
  // directlyFollowedBy links task-6 to task-7 in the seeded case.
  CHECK(sim.graph().contains(make_triple("task-6", "directlyFollowedBy", "task-7")));
}

TEST_CASE("pause, resume and mode switches") {
  SUBCASE("paused simulators do not move") {
    Simulator sim(demo_scenario(), load_knowledge(demo_scenario()));
    sim.resume();  // no-op
    CHECK_FALSE(sim.paused());
    sim.pause();
    CHECK(sim.step().empty());
    CHECK(sim.log().empty());
    sim.resume();
    CHECK_FALSE(sim.step().empty());
  }
  SUBCASE("switching to human mode parks later enablements") {
    Scenario sc = demo_scenario();
    sc.cases = 3;
    Simulator sim(sc, load_knowledge(sc));
    sim.step();
    CHECK(sim.pending().empty());
    sim.set_mode(DecisionMode::Human);
    while (!sim.idle() && sim.pending().empty()) sim.step();
    CHECK(sim.pending().size() == 1);
    // Back to automatic: the next step drains the queue first.
    sim.set_mode(DecisionMode::Automatic);
    sim.step();
    CHECK(sim.pending().empty());
    sim.check_invariants();
  }
  SUBCASE("block-all holds the clock") {
    Scenario sc = demo_scenario();
    sc.block_all = true;
    Simulator sim(sc, load_knowledge(sc), DecisionMode::Human);
    sim.step();
    auto clock = sim.clock();
    CHECK(sim.step().empty());
    CHECK(sim.clock() == clock);
    sim.resolve("d1", id("User_26"));
    CHECK_FALSE(sim.step().empty());
  }
}

TEST_CASE("human decisions") {
  Simulator sim(demo_scenario(), load_knowledge(demo_scenario()), DecisionMode::Human);
  sim.step();
  try {
    sim.resolve("d1", id("User_55"));
    FAIL("expected ineligible-selection");
  } catch (const IneligibleSelection& e) {
    REQUIRE(e.messages().size() == 1);
    CHECK(e.messages()[0] == "Assignment violates separation of concerns with activity 'W_Validate application'");
  }
  CHECK(sim.pending().size() == 1);
  auto d = sim.resolve("d1", id("User_83"));
  CHECK(d.divergent);
  CHECK(sim.tasks().at("task-7").resource == "User_83");
  try {
    sim.resolve("d1", id("User_26"));
    FAIL("expected already-decided");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AlreadyDecided);
  }
  try {
    sim.resolve("d42", id("User_26"));
    FAIL("expected unknown-id");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownId);
  }
}

TEST_CASE("knowledge changes while paused") {
  Simulator sim(demo_scenario(), load_knowledge(demo_scenario()), DecisionMode::Human);
  sim.step();
  const double before = score_of(sim.pending().at(0), "User_83");
  CHECK(before == -1.0);

  sim.pause();
  ProposalStore store;
  GraphUpdate u;
  u.removals = {make_triple("User_83", "seniority", "Medium")};
  u.additions = {make_triple("User_83", "seniority", "High")};
  u.provenance = "team lead: promotion";
  auto pid = store.propose(u, sim.graph(), sim.ontology()).id;
  store.review(pid, Verdict::Accept, std::nullopt, sim.graph(), sim.ontology());
  store.apply(pid, sim.graph());
  sim.resume();

  auto view = sim.pending().at(0);
  CHECK(score_of(view, "User_83") - before == doctest::Approx(4.0));
  for (const auto& c : view.candidates) {
    if (c.resource.text() != "User_83") continue;
    bool sufficient = false, insufficient = false;
    for (const auto& f : c.findings) {
      sufficient |= f.rule_id == "seniority-sufficient";
      insufficient |= f.rule_id == "seniority-insufficient";
    }
    CHECK(sufficient);
    CHECK_FALSE(insufficient);
  }
}
