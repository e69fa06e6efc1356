#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kgalloc/graph.hpp"
#include "kgalloc/ontology.hpp"
#include "kgalloc/rules.hpp"

namespace kgalloc {

inline constexpr std::string_view kFlowStart = "start";
inline constexpr std::string_view kFlowEnd = "end";

// Uniform integer seconds over [min, max]; fixed when min == max.
struct Duration {
  std::int64_t min = 0;
  std::int64_t max = 0;
};

struct Branch {
  std::string to;
  double p = 1.0;
};

// Activities connected by sequence and exclusive-choice edges. The pseudo
// nodes "start" and "end" delimit the flow.
struct ProcessModel {
  std::vector<std::string> activities;
  std::map<std::string, Duration> durations;
  std::map<std::string, std::vector<Branch>> flow;

  // Throws Error{InvalidModel}: missing start, no path into end, unknown
  // targets, unreachable activities, probabilities not summing to 1, bad
  // durations.
  void check() const;
};

// Categorical weights keep their file order, which fixes the draw order.
struct CaseAttributeConfig {
  std::vector<std::pair<std::string, double>> application_types;
  std::vector<std::pair<std::string, double>> loan_goals;
  double amount_min = 1000.0;
  double amount_max = 50000.0;
};

struct InitialTask {
  std::string case_id;
  std::string task_id;
  std::string activity;
  std::int64_t at = 0;  // seconds after start_time
};

struct Scenario {
  std::string name;
  std::string graph_path;  // resolved against the scenario file's directory
  std::string ontology_path;
  std::string rules_path;
  std::uint64_t seed = 0;
  std::size_t cases = 0;
  std::int64_t start_time = 0;
  Duration interarrival{600, 3600};
  ProcessModel model;
  CaseAttributeConfig attributes;
  std::vector<InitialTask> initial_tasks;
  bool block_all = false;
};

// Throws Error{ParseError} for malformed JSON, Error{InvalidModel} for
// content errors.
Scenario parse_scenario(std::string_view json_text, const std::string& base_dir = ".");

// Throws Error{NotFound} with "scenario not found" when the file is missing.
Scenario load_scenario(const std::string& path);

// A bare name ("demo") maps to <data_dir>/<name>/<name>.scenario.json; any
// other argument is taken as a path.
std::string resolve_scenario_path(const std::string& name_or_path, const std::string& data_dir);

struct Knowledge {
  Graph graph;
  Ontology ontology;
  RuleSet rules;
};

Knowledge load_knowledge(const Scenario& s);

}  // namespace kgalloc
