#include "kgalloc/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <set>

#include "kgalloc/error.hpp"
#include "kgalloc/graph_io.hpp"
#include "text_util.hpp"

namespace kgalloc {

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::InvalidModel, msg); }

void check_duration(const Duration& d, const std::string& what) {
  if (d.min < 0 || d.max < d.min) invalid(what + ": need 0 <= min <= max");
}

Duration duration_from(const ordered_json& j, const std::string& what) {
  Duration d{j.at("min").get<std::int64_t>(), j.at("max").get<std::int64_t>()};
  check_duration(d, what);
  return d;
}

std::vector<std::pair<std::string, double>> weights_from(const ordered_json& j, const std::string& what) {
  std::vector<std::pair<std::string, double>> out;
  double total = 0;
  for (const auto& [k, v] : j.items()) {
    double w = v.get<double>();
    if (!(w >= 0) || !std::isfinite(w)) invalid(what + ": negative weight for " + k);
    total += w;
    out.emplace_back(k, w);
  }
  if (out.empty() || total <= 0) invalid(what + ": needs at least one positive weight");
  return out;
}

std::string resolve(const std::string& base_dir, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? p : (fs::path(base_dir) / path).lexically_normal().string();
}

}  // namespace

void ProcessModel::check() const {
  std::set<std::string> declared(activities.begin(), activities.end());
  if (declared.size() != activities.size()) invalid("duplicate activity");
  if (!flow.count(std::string(kFlowStart))) invalid("flow has no start");
  for (const auto& a : activities) {
    auto d = durations.find(a);
    if (d == durations.end()) invalid("no duration for " + a);
    check_duration(d->second, a);
    if (!flow.count(a)) invalid("activity " + a + " has no outgoing flow");
  }
  bool reaches_end = false;
  for (const auto& [from, branches] : flow) {
    if (from != kFlowStart && !declared.count(from)) invalid("flow from undeclared node " + from);
    if (branches.empty()) invalid("no branches from " + from);
    double sum = 0;
    for (const auto& b : branches) {
      if (b.to == kFlowEnd) reaches_end = true;
      else if (!declared.count(b.to)) invalid("flow into undeclared node " + b.to);
      if (!(b.p >= 0.0 && b.p <= 1.0)) invalid("branch probability out of range at " + from);
      sum += b.p;
    }
    if (std::abs(sum - 1.0) > 1e-9) invalid("branch probabilities at " + from + " sum to " + std::to_string(sum));
  }
  if (!reaches_end) invalid("flow never reaches end");

  std::set<std::string> seen{std::string(kFlowStart)};
  std::vector<std::string> stack{std::string(kFlowStart)};
  while (!stack.empty()) {
    auto n = stack.back();
    stack.pop_back();
    auto it = flow.find(n);
    if (it == flow.end()) continue;
    for (const auto& b : it->second)
      if (seen.insert(b.to).second) stack.push_back(b.to);
  }
  for (const auto& a : activities)
    if (!seen.count(a)) invalid("activity " + a + " is unreachable from start");
}

Scenario parse_scenario(std::string_view json_text, const std::string& base_dir) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const ordered_json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("scenario: ") + e.what());
  }
  Scenario s;
  try {
    if (j.value("version", 1) != 1) invalid("unsupported scenario version");
    s.name = j.value("name", std::string("scenario"));
    s.graph_path = resolve(base_dir, j.at("graph").get<std::string>());
    s.ontology_path = resolve(base_dir, j.at("ontology").get<std::string>());
    s.rules_path = resolve(base_dir, j.at("rules").get<std::string>());
    s.seed = j.value("seed", std::uint64_t{0});
    s.cases = j.value("cases", std::size_t{0});
    s.start_time = j.value("start_time", std::int64_t{0});
    s.block_all = j.value("block_all", false);
    if (j.contains("interarrival")) s.interarrival = duration_from(j["interarrival"], "interarrival");

    for (const auto& [name, d] : j.at("activities").items()) {
      s.model.activities.push_back(name);
      s.model.durations[name] = duration_from(d, name);
    }
    for (const auto& [from, branches] : j.at("flow").items()) {
      auto& out = s.model.flow[from];
      for (const auto& b : branches) out.push_back(Branch{b.at("to").get<std::string>(), b.value("p", 1.0)});
    }
    s.model.check();

    const auto& attrs = j.at("attributes");
    s.attributes.application_types = weights_from(attrs.at("application_type"), "application_type");
    s.attributes.loan_goals = weights_from(attrs.at("loan_goal"), "loan_goal");
    if (attrs.contains("requested_amount")) {
      s.attributes.amount_min = attrs["requested_amount"].at("min").get<double>();
      s.attributes.amount_max = attrs["requested_amount"].at("max").get<double>();
    }
    if (!(s.attributes.amount_min >= 0 && s.attributes.amount_max >= s.attributes.amount_min))
      invalid("requested_amount: need 0 <= min <= max");

    std::set<std::string> declared(s.model.activities.begin(), s.model.activities.end());
    for (const auto& t : j.value("initial_tasks", ordered_json::array())) {
      InitialTask it{t.at("case").get<std::string>(), t.at("task").get<std::string>(),
                     t.at("activity").get<std::string>(), t.value("at", std::int64_t{0})};
      if (!declared.count(it.activity)) invalid("initial task " + it.task_id + " has undeclared activity");
      if (it.at < 0) invalid("initial task " + it.task_id + " starts before the run");
      s.initial_tasks.push_back(std::move(it));
    }
  } catch (const ordered_json::exception& e) {
    invalid(std::string("scenario: ") + e.what());
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::NotFound, "scenario not found: " + path);
  return parse_scenario(detail::read_file(path), fs::path(path).parent_path().string());
}

std::string resolve_scenario_path(const std::string& name_or_path, const std::string& data_dir) {
  bool bare = name_or_path.find('/') == std::string::npos && name_or_path.find('.') == std::string::npos;
  if (bare && !fs::exists(name_or_path))
    return (fs::path(data_dir) / name_or_path / (name_or_path + ".scenario.json")).string();
  return name_or_path;
}

Knowledge load_knowledge(const Scenario& s) {
  Knowledge k;
  k.ontology = load_ontology_file(s.ontology_path);
  k.graph = load_graph_file(s.graph_path);
  k.rules = load_rules_file(s.rules_path, k.ontology);
  return k;
}

}  // namespace kgalloc
