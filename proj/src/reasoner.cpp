#include "kgalloc/reasoner.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "kgalloc/vocab.hpp"

namespace kgalloc {

bool scores_tie(double a, double b) {
  return std::abs(a - b) <= kScoreTolerance * std::max({1.0, std::abs(a), std::abs(b)});
}

std::string_view to_string(DecisionMode m) { return m == DecisionMode::Automatic ? "automatic" : "human"; }

std::vector<Assessment> Ranking::ordered() const {
  std::vector<Assessment> out = eligible;
  out.insert(out.end(), ineligible.begin(), ineligible.end());
  return out;
}

const Assessment& AllocationDecision::chosen_assessment() const {
  for (const auto& a : candidates)
    if (a.resource == chosen) return a;
  throw Error(ErrorCode::UnknownId, "decision for " + task.to_string() + " has no assessment of its chosen resource");
}

std::vector<Term> Reasoner::eligible_resources(const TripleSource& g, const Term& task) const {
  auto activity = g.object_of(task, vocab::kInstanceOf);
  if (!activity) throw Error(ErrorCode::UnknownTask, "unknown task " + task.to_string() + " (no instanceOf edge)");
  const Term role_type = vocab::term(vocab::kRole);
  const Term type = vocab::term(vocab::kType);
  std::set<Term> permitted;
  for (const auto& holder : g.objects_of(*activity, vocab::kCanBeExecutedBy)) {
    if (!holder.is_identifier()) continue;
    auto members = g.subjects_of(vocab::kHasRole, holder);
    bool is_role = !members.empty() || g.contains(Triple{holder, type, role_type});
    if (is_role) permitted.insert(members.begin(), members.end());
    else permitted.insert(holder);
  }
  const Term busy = Term::boolean(true);
  std::vector<Term> out;
  for (const auto& r : permitted)
    if (!g.contains(Triple{r, vocab::term(vocab::kBusy), busy})) out.push_back(r);
  return out;
}

Assessment Reasoner::assess(const TripleSource& g, const Term& task, const Term& resource) const {
  OverlayView view(g, {Triple{task, vocab::term(vocab::kPerformedBy), resource}});
  Assessment a{task, resource, {}, {}, 0.0};
  for (const auto& rule : rules_->rules) {
    Binding seed{{rule.task_var.name, task}, {rule.resource_var.name, resource}};
    for (auto& m : evaluate(rule, view, *ontology_, seed)) {
      Finding f{rule.id, rule.polarity, rule.severity, rule.severity == Severity::Soft ? rule.score : 0.0,
                std::move(m.message), std::move(m.binding)};
      if (rule.severity == Severity::Hard) {
        a.hard_violations.push_back(std::move(f));
      } else {
        a.score += f.score;
        a.findings.push_back(std::move(f));
      }
    }
  }
  return a;
}

Ranking Reasoner::rank(const TripleSource& g, const Term& task) const {
  Ranking r;
  r.task = task;
  r.available = eligible_resources(g, task);
  for (const auto& res : r.available) {
    auto a = assess(g, task, res);
    (a.eligible() ? r.eligible : r.ineligible).push_back(std::move(a));
  }
  // Scores that differ only by summation rounding count as ties, so the
  // choice does not depend on the order in which findings were added.
  auto& e = r.eligible;
  std::sort(e.begin(), e.end(), [](const Assessment& x, const Assessment& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.resource < y.resource;
  });
  for (std::size_t i = 0; i < e.size();) {
    std::size_t j = i + 1;
    while (j < e.size() && scores_tie(e[i].score, e[j].score)) ++j;
    std::sort(e.begin() + static_cast<std::ptrdiff_t>(i), e.begin() + static_cast<std::ptrdiff_t>(j),
              [](const Assessment& x, const Assessment& y) { return x.resource < y.resource; });
    i = j;
  }
  return r;
}

AllocationDecision Reasoner::make_decision(const TripleSource& g, const Term& task, const Ranking& ranking) const {
  AllocationDecision d;
  d.task = task;
  if (auto c = g.object_of(task, vocab::kPartOf)) d.case_id = display_label(g, *c);
  if (auto act = g.object_of(task, vocab::kInstanceOf)) d.activity_label = display_label(g, *act);
  d.available = ranking.available;
  d.candidates = ranking.ordered();
  return d;
}

AllocationDecision Reasoner::decide_automatic(const TripleSource& g, const Term& task, std::int64_t timestamp) const {
  Ranking ranking = rank(g, task);
  if (ranking.eligible.empty())
    throw Error(ErrorCode::NoEligibleResource, "no eligible resource for " + task.to_string());
  AllocationDecision d = make_decision(g, task, ranking);
  d.chosen = ranking.eligible.front().resource;
  d.mode = DecisionMode::Automatic;
  d.timestamp = timestamp;
  return d;
}

AllocationDecision Reasoner::decide_human(const TripleSource& g, const Term& task, const Term& selection,
                                          std::int64_t timestamp) const {
  Ranking ranking = rank(g, task);
  for (const auto& a : ranking.ineligible) {
    if (a.resource != selection) continue;
    std::vector<std::string> messages;
    for (const auto& v : a.hard_violations) messages.push_back(v.message);
    throw IneligibleSelection(selection.to_string() + " is not eligible for " + task.to_string(), std::move(messages));
  }
  auto it = std::find_if(ranking.eligible.begin(), ranking.eligible.end(),
                         [&](const Assessment& a) { return a.resource == selection; });
  if (it == ranking.eligible.end())
    throw IneligibleSelection(selection.to_string() + " is not available for " + task.to_string(),
                              {selection.to_string() + " is not permitted for this activity or is busy"});
  AllocationDecision d = make_decision(g, task, ranking);
  d.chosen = selection;
  d.mode = DecisionMode::Human;
  d.timestamp = timestamp;
  d.divergent = it != ranking.eligible.begin();
  return d;
}

std::string format_explanation(const AllocationDecision& d) {
  std::string out;
  if (!d.case_id.empty()) out += d.case_id + " ";
  out += d.task.to_string() + ": " + d.activity_label + "\n";
  out += "Resources Available: {";
  for (std::size_t i = 0; i < d.available.size(); ++i) {
    if (i) out += ", ";
    out += "'" + d.available[i].to_string() + "'";
  }
  out += "}\n";
  out += "Assigning: " + d.chosen.to_string() + " to " + d.task.to_string() + " considering the following:\n";
  for (const auto& f : d.chosen_assessment().findings) out += "    " + f.message + "\n";
  return out;
}

namespace {

using nlohmann::ordered_json;

ordered_json finding_json(const Finding& f) {
  return ordered_json{{"rule", f.rule_id},
                      {"polarity", to_string(f.polarity)},
                      {"severity", to_string(f.severity)},
                      {"score", f.score},
                      {"message", f.message}};
}

Finding finding_from(const ordered_json& j) {
  Finding f;
  f.rule_id = j.at("rule").get<std::string>();
  f.polarity = j.at("polarity").get<std::string>() == "negative" ? Polarity::Negative : Polarity::Positive;
  f.severity = j.at("severity").get<std::string>() == "hard" ? Severity::Hard : Severity::Soft;
  f.score = j.at("score").get<double>();
  f.message = j.at("message").get<std::string>();
  return f;
}

}  // namespace

std::string journal_line(const AllocationDecision& d) {
  ordered_json j;
  j["task"] = d.task.to_string();
  j["case"] = d.case_id;
  j["activity"] = d.activity_label;
  j["chosen"] = d.chosen.to_string();
  j["mode"] = to_string(d.mode);
  j["timestamp"] = d.timestamp;
  j["divergent"] = d.divergent;
  j["available"] = ordered_json::array();
  for (const auto& r : d.available) j["available"].push_back(r.to_string());
  j["candidates"] = ordered_json::array();
  for (const auto& a : d.candidates) {
    ordered_json c{{"resource", a.resource.to_string()}, {"score", a.score}, {"eligible", a.eligible()}};
    c["findings"] = ordered_json::array();
    for (const auto& f : a.findings) c["findings"].push_back(finding_json(f));
    c["violations"] = ordered_json::array();
    for (const auto& f : a.hard_violations) c["violations"].push_back(finding_json(f));
    j["candidates"].push_back(std::move(c));
  }
  return j.dump();
}

AllocationDecision parse_journal_line(std::string_view line) {
  try {
    auto j = ordered_json::parse(line);
    AllocationDecision d;
    d.task = parse_term(j.at("task").get<std::string>());
    d.case_id = j.at("case").get<std::string>();
    d.activity_label = j.at("activity").get<std::string>();
    d.chosen = parse_term(j.at("chosen").get<std::string>());
    d.mode = j.at("mode").get<std::string>() == "human" ? DecisionMode::Human : DecisionMode::Automatic;
    d.timestamp = j.at("timestamp").get<std::int64_t>();
    d.divergent = j.at("divergent").get<bool>();
    for (const auto& r : j.at("available")) d.available.push_back(parse_term(r.get<std::string>()));
    for (const auto& c : j.at("candidates")) {
      Assessment a;
      a.task = d.task;
      a.resource = parse_term(c.at("resource").get<std::string>());
      a.score = c.at("score").get<double>();
      for (const auto& f : c.at("findings")) a.findings.push_back(finding_from(f));
      for (const auto& f : c.at("violations")) a.hard_violations.push_back(finding_from(f));
      d.candidates.push_back(std::move(a));
    }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad journal line: ") + e.what());
  }
}

}  // namespace kgalloc
