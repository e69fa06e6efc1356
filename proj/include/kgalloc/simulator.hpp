#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "kgalloc/event_log.hpp"
#include "kgalloc/reasoner.hpp"
#include "kgalloc/scenario.hpp"

namespace kgalloc {

struct CaseInstance {
  std::string id;
  std::string application_type;
  std::string loan_goal;
  double requested_amount = 0.0;
  std::int64_t arrival = 0;
};

// Arrivals start at `start_time` + one interarrival gap. Ids continue from
// `first_number` (case-<first_number>, ...). Deterministic for a fixed seed.
std::vector<CaseInstance> generate_cases(const CaseAttributeConfig& attributes, const Duration& interarrival,
                                         std::size_t count, std::uint64_t seed, std::int64_t start_time = 0,
                                         std::size_t first_number = 1);

enum class TaskState { Enabled, PendingDecision, Running, Completed };

std::string_view to_string(TaskState s);

struct TaskInstance {
  std::string id;
  std::string case_id;
  std::string activity;
  TaskState state = TaskState::Enabled;
  std::string resource;
  std::int64_t enabled_at = 0;
  std::int64_t started_at = 0;
  std::int64_t ended_at = 0;
};

struct PendingDecisionView {
  std::string id;
  std::string task;
  std::string case_id;
  std::string activity_label;
  std::vector<std::pair<std::string, std::string>> case_attributes;
  std::vector<Assessment> candidates;  // eligible by rank, then ineligible
  std::vector<Term> available;
  std::int64_t created_at = 0;
};

struct SimulationStats {
  std::size_t enabled = 0;
  std::size_t completed = 0;
  std::size_t running = 0;
  std::size_t pending = 0;
  std::size_t waiting = 0;  // enabled, no eligible resource yet
  std::size_t cases_started = 0;
  std::size_t cases_completed = 0;
  std::size_t decisions = 0;
};

struct RunLimits {
  std::optional<std::int64_t> until;      // stop before events later than this clock
  std::optional<std::size_t> cases;       // stop once this many cases completed
};

struct RunReport {
  SimulationStats stats;
  std::vector<std::string> deadlocked;  // waiting tasks with no event left to free them
  bool finished = false;                // event queue drained
};

using HumanCallback = std::function<Term(const PendingDecisionView&)>;

/// Discrete-event simulation of the process, owning its knowledge. The
/// simulator is the only writer to the graph while it runs; between steps
/// callers may edit graph() and rules() and the next assessment sees it.
class Simulator {
 public:
  Simulator(Scenario scenario, Knowledge knowledge, DecisionMode mode = DecisionMode::Automatic);
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  // Processes the earliest event. Returns the rows it appended to the log
  // (empty when paused, blocked or idle). In automatic mode pending
  // decisions are decided first.
  std::vector<EventRow> step();

  // Human mode needs `decide`. Returns when the queue is drained, a limit is
  // hit, or no further progress is possible.
  RunReport run(const RunLimits& limits = {}, const HumanCallback& decide = {});

  void pause() { paused_ = true; }
  void resume() { paused_ = false; }
  void set_mode(DecisionMode m) { mode_ = m; }
  bool paused() const { return paused_; }
  DecisionMode mode() const { return mode_; }
  std::int64_t clock() const { return clock_; }
  bool idle() const { return queue_.empty(); }
  std::optional<std::int64_t> next_event_time() const;

  std::vector<PendingDecisionView> pending() const;
  std::optional<PendingDecisionView> pending(const std::string& decision_id) const;

  // Throws Error{UnknownId}, Error{AlreadyDecided} or IneligibleSelection.
  AllocationDecision resolve(const std::string& decision_id, const Term& resource);

  Graph& graph() { return knowledge_.graph; }
  const Graph& graph() const { return knowledge_.graph; }
  RuleSet& rules() { return knowledge_.rules; }
  const Ontology& ontology() const { return knowledge_.ontology; }
  const Scenario& scenario() const { return scenario_; }
  Reasoner reasoner() const { return Reasoner(knowledge_.rules, knowledge_.ontology); }

  const std::vector<EventRow>& log() const { return log_; }
  const std::vector<AllocationDecision>& decisions() const { return decisions_; }
  const std::map<std::string, TaskInstance>& tasks() const { return tasks_; }
  std::vector<std::string> waiting() const;
  SimulationStats stats() const;

  std::string event_log_csv() const { return write_event_log(log_); }
  std::string decision_journal() const;
  std::string explanations(const std::string& case_id = {}) const;

  // Throws std::logic_error if a resource runs two tasks, a task's timestamps
  // are out of order, or the stats do not add up.
  void check_invariants() const;

 private:
  enum class EventKind { Arrival, Enable, Complete };
  struct Event {
    EventKind kind;
    std::string case_id;
    std::string activity;
    std::string task_id;
    std::size_t case_index = 0;
  };
  struct CaseState {
    std::string application_type;
    std::string loan_goal;
    double requested_amount = 0.0;
    std::string last_completed_task;
    bool completed = false;
  };

  void schedule(std::int64_t at, Event e);
  void handle_arrival(const Event& e);
  void handle_enable(const Event& e);
  void handle_complete(const Event& e);
  void try_allocate(const std::string& task_id);
  void start_task(const std::string& task_id, AllocationDecision d);
  void retry_waiting();
  void drain_pending_automatic();
  void route_after(const std::string& case_id, const std::string& from);
  PendingDecisionView view_of(const std::string& decision_id, const std::string& task_id,
                              std::int64_t created_at) const;
  EventRow row(const TaskInstance& t, Lifecycle l) const;
  CaseState& case_state(const std::string& case_id);
  std::string next_task_id();
  std::int64_t draw(const Duration& d);

  Scenario scenario_;
  Knowledge knowledge_;
  DecisionMode mode_;
  bool paused_ = false;
  std::int64_t clock_ = 0;
  std::mt19937_64 rng_;
  std::vector<CaseInstance> generated_;

  std::map<std::pair<std::int64_t, std::uint64_t>, Event> queue_;
  std::uint64_t seq_ = 0;
  std::size_t next_task_number_ = 1;
  std::size_t next_decision_number_ = 1;

  std::map<std::string, TaskInstance> tasks_;
  std::vector<std::string> task_order_;
  std::map<std::string, CaseState> cases_;
  std::vector<std::string> waiting_;                            // FIFO of task ids
  std::vector<std::pair<std::string, std::string>> pending_;    // (decision id, task id) FIFO
  std::map<std::string, std::int64_t> pending_since_;           // decision id -> created at
  std::set<std::string> resolved_;
  std::map<std::string, std::string> running_by_resource_;

  std::vector<EventRow> log_;
  std::vector<AllocationDecision> decisions_;
  std::size_t cases_started_ = 0;
  std::size_t cases_completed_ = 0;
};

}  // namespace kgalloc
