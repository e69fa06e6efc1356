#include <doctest.h>

#include <algorithm>
#include <random>

#include "kgalloc/error.hpp"
#include "kgalloc/rules.hpp"
#include "matcher_oracle.hpp"
#include "test_support.hpp"

using namespace kgalloc;
using kgalloc::testing::id;

namespace {

const char* kSeniorityRule = R"(# risk class based seniority requirement
version 1
rule
  id: seniority-sufficient
  task-var: ?t
  resource-var: ?r
  pattern: ?t performedBy ?r
  pattern: ?r type Resource
  pattern: ?t partOf ?c
  pattern: ?c hasLoanGoal ?lg
  pattern: ?lg hasRiskClass ?rc
  pattern: ?rc minSeniority ?s2
  pattern: ?r seniority ?s1
  filter: scaleGreaterEq ?s1 ?s2 Seniority
  polarity: positive
  severity: soft
  score: 2.0
  message: Seniority '{s1}' is sufficient for risk class '{rc}' of loan goal '{lg}'
end
)";

std::string replace(std::string text, const std::string& from, const std::string& to) {
  auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

Ontology seniority_only() {
  Ontology o;
  o.add_scale({"Seniority", {id("Low"), id("Medium"), id("High")}});
  return o;
}

}  // namespace

TEST_CASE("parse_rules") {
  auto demo = kgalloc::testing::load_demo();
  SUBCASE("seniority requirement pattern") {
    auto set = parse_rules(kSeniorityRule, demo.ontology);
    REQUIRE(set.size() == 1);
    const Rule& r = set.rules[0];
    CHECK(r.atoms.size() == 7);
    REQUIRE(r.filters.size() == 1);
    CHECK(r.filters[0].op == FilterOp::ScaleGreaterEq);
    CHECK(r.filters[0].scale == "Seniority");
    CHECK(r.task_var.name == "t");
    CHECK(r.resource_var.name == "r");
    CHECK(r.score == 2.0);
  }
  SUBCASE("empty document") {
    CHECK(parse_rules("", demo.ontology).empty());
    CHECK(parse_rules("# only a comment\n\n", demo.ontology).empty());
  }
  SUBCASE("message with an unbound placeholder") {
    auto text = replace(kSeniorityRule, "loan goal '{lg}'", "loan goal '{x}'");
    try {
      parse_rules(text, demo.ontology);
      FAIL("expected parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("unknown scale") {
    auto text = replace(kSeniorityRule, "?s2 Seniority", "?s2 Rank");
    try {
      parse_rules(text, demo.ontology);
      FAIL("expected unknown-scale");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnknownScale);
    }
  }
  SUBCASE("focus variable in no atom") {
    auto text = replace(kSeniorityRule, "resource-var: ?r", "resource-var: ?who");
    try {
      parse_rules(text, demo.ontology);
      FAIL("expected unbound-focus-variable");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnboundFocusVariable);
    }
  }
  SUBCASE("unknown field with position") {
    auto text = replace(kSeniorityRule, "  polarity: positive", "  weight: 3");
    try {
      parse_rules(text, demo.ontology);
      FAIL("expected parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 15);
      CHECK(e.column() == 3);
    }
  }
  SUBCASE("malformed pattern and filter lines") {
    CHECK_THROWS_AS(parse_rules(replace(kSeniorityRule, "?t partOf ?c", "?t ?p ?c"), demo.ontology), ParseError);
    CHECK_THROWS_AS(parse_rules(replace(kSeniorityRule, "?t partOf ?c", "?t partOf"), demo.ontology), ParseError);
    CHECK_THROWS_AS(parse_rules(replace(kSeniorityRule, "scaleGreaterEq", "above"), demo.ontology), ParseError);
    CHECK_THROWS_AS(parse_rules(replace(kSeniorityRule, "end\n", ""), demo.ontology), ParseError);
    CHECK_THROWS_AS(parse_rules(replace(kSeniorityRule, "score: 2.0", "score: lots"), demo.ontology), ParseError);
  }
  SUBCASE("hard rules must be negative") {
    auto text = replace(kSeniorityRule, "severity: soft", "severity: hard");
    CHECK_THROWS_AS(parse_rules(text, demo.ontology), ParseError);
  }
  SUBCASE("duplicate ids") {
    std::string body = std::string(kSeniorityRule).substr(std::string(kSeniorityRule).find("rule\n"));
    CHECK_THROWS_AS(parse_rules(std::string(kSeniorityRule) + body, demo.ontology), ParseError);
  }
  SUBCASE("serialize/parse is a fixed point") {
    auto text = serialize_rules(demo.rules);
    auto again = parse_rules(text, demo.ontology);
    CHECK(serialize_rules(again) == text);
    CHECK(again.size() == demo.rules.size());
  }
}

TEST_CASE("evaluate on the demo") {
  auto demo = kgalloc::testing::load_demo();
  kgalloc::testing::add_task7(demo.graph);
  const Rule& sufficient = *demo.rules.find("seniority-sufficient");
  const Rule& insufficient = *demo.rules.find("seniority-insufficient");

  SUBCASE("User_26 satisfies the seniority requirement") {
    OverlayView view(demo.graph, {make_triple("task-7", "performedBy", "User_26")});
    auto matches = evaluate(sufficient, view, demo.ontology, {{"t", id("task-7")}, {"r", id("User_26")}});
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].message == "Seniority 'High' is sufficient for risk class 'High' of loan goal 'Car'");
    CHECK(matches[0].binding.at("rc") == id("RiskHigh"));
  }
  SUBCASE("User_83 matches only the negative twin") {
    OverlayView view(demo.graph, {make_triple("task-7", "performedBy", "User_83")});
    Binding seed{{"t", id("task-7")}, {"r", id("User_83")}};
    CHECK(evaluate(sufficient, view, demo.ontology, seed).empty());
    auto neg = evaluate(insufficient, view, demo.ontology, seed);
    REQUIRE(neg.size() == 1);
    CHECK(neg[0].message == "Seniority 'Medium' is insufficient for risk class 'High' of loan goal 'Car'");
  }
  SUBCASE("empty graph") {
    for (const auto& r : demo.rules.rules) CHECK(evaluate(r, Graph{}, demo.ontology).empty());
  }
  SUBCASE("separation of concerns finding names the grouped activity") {
    OverlayView view(demo.graph, {make_triple("task-7", "performedBy", "User_26")});
    auto ok = evaluate(*demo.rules.find("soc-conforms"), view, demo.ontology, {{"t", id("task-7")}, {"r", id("User_26")}});
    REQUIRE(ok.size() == 1);
    CHECK(ok[0].message == "Assignment conforms separation of concerns with activity 'W_Validate application'");
    OverlayView bad(demo.graph, {make_triple("task-7", "performedBy", "User_55")});
    auto violation =
        evaluate(*demo.rules.find("soc-violation"), bad, demo.ontology, {{"t", id("task-7")}, {"r", id("User_55")}});
    REQUIRE(violation.size() == 1);
    CHECK(violation[0].message == "Assignment violates separation of concerns with activity 'W_Validate application'");
  }
  SUBCASE("type atoms see subclasses") {
    demo.graph.remove(make_triple("User_26", "type", "Resource"));
    demo.graph.add(make_triple("User_26", "type", "Person"));
    OverlayView view(demo.graph, {make_triple("task-7", "performedBy", "User_26")});
    CHECK(evaluate(sufficient, view, demo.ontology, {{"t", id("task-7")}, {"r", id("User_26")}}).size() == 1);
  }
}

TEST_CASE("render_message") {
  Graph g;
  g.add(make_triple("RiskHigh", "label", Term::str("High")));
  g.add(make_triple("W_Validate_application", "label", Term::str("W_Validate application")));
  CHECK(render_message("Seniority '{s1}' is sufficient for risk class '{rc}' of loan goal '{lg}'",
                       {{"s1", id("High")}, {"rc", id("RiskHigh")}, {"lg", id("Car")}}, &g) ==
        "Seniority 'High' is sufficient for risk class 'High' of loan goal 'Car'");
  CHECK(render_message("no placeholders here", {}, &g) == "no placeholders here");
  CHECK(render_message("Assignment conforms separation of concerns with activity '{a}'",
                       {{"a", id("W_Validate_application")}}, &g) ==
        "Assignment conforms separation of concerns with activity 'W_Validate application'");
  CHECK(render_message("amount {x}", {{"x", Term::decimal(2.5)}}, &g) == "amount 2.5");
  try {
    render_message("{missing}", {}, &g);
    FAIL("expected unbound-placeholder");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnboundPlaceholder);
  }
}

TEST_CASE("compare_scale") {
  OrderedScale s{"Seniority", {id("Low"), id("Medium"), id("High")}};
  CHECK(compare_scale(s, id("High"), id("High")) == std::strong_ordering::equal);
  CHECK(compare_scale(s, id("Medium"), id("High")) == std::strong_ordering::less);
  for (const auto& level : s.levels) CHECK(compare_scale(s, level, level) == std::strong_ordering::equal);
  try {
    compare_scale(s, id("Senior"), id("High"));
    FAIL("expected not-on-scale");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotOnScale);
  }

  Ontology o = seniority_only();
  Filter ge{FilterOp::ScaleGreaterEq, Variable{"a"}, Variable{"b"}, "Seniority"};
  CHECK(filter_holds(ge, {{"a", id("High")}, {"b", id("High")}}, o));
  CHECK_FALSE(filter_holds(ge, {{"a", id("Medium")}, {"b", id("High")}}, o));
  CHECK_FALSE(filter_holds(ge, {{"a", id("Senior")}, {"b", id("High")}}, o));
}

TEST_CASE("evaluate agrees with brute-force enumeration") {
  std::mt19937_64 rng(20240601);
  for (int i = 0; i < 150; ++i) {
    auto inst = kgalloc::testing::random_instance(rng);
    auto expected = kgalloc::testing::brute_force_matches(inst.rule, inst.graph, inst.ontology, inst.seed);
    auto actual = kgalloc::testing::bindings_of(evaluate(inst.rule, inst.graph, inst.ontology, inst.seed));
    REQUIRE_MESSAGE(actual == expected, "instance " << i << "\n" << serialize_rules(RuleSet{{inst.rule}}));
  }
}

TEST_CASE("matcher properties") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 100; ++i) {
    auto inst = kgalloc::testing::random_instance(rng, 25);
    auto base = evaluate(inst.rule, inst.graph, inst.ontology, inst.seed);

    // determinism
    auto again = evaluate(inst.rule, inst.graph, inst.ontology, inst.seed);
    REQUIRE(kgalloc::testing::bindings_of(again) == kgalloc::testing::bindings_of(base));

    // seed consistency
    for (const auto& m : base) {
      for (const auto& [name, term] : inst.seed) {
        if (m.binding.count(name)) REQUIRE(m.binding.at(name) == term);
      }
      auto total = evaluate(inst.rule, inst.graph, inst.ontology, m.binding);
      REQUIRE(total.size() == 1);
    }

    // monotonicity: adding triples never removes a match
    Graph bigger = inst.graph;
    auto nodes = inst.graph.lookup();
    for (int k = 0; k < 10 && !nodes.empty(); ++k) {
      const auto& a = nodes[rng() % nodes.size()];
      const auto& b = nodes[rng() % nodes.size()];
      if (b.object.is_identifier() || a.object.is_literal())
        bigger.add(Triple{a.subject, b.predicate, b.object});
    }
    auto grown = kgalloc::testing::bindings_of(evaluate(inst.rule, bigger, inst.ontology, inst.seed));
    for (const auto& m : base) REQUIRE(std::binary_search(grown.begin(), grown.end(), m.binding));
  }
}
