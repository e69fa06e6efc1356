#include "kgalloc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kgalloc/error.hpp"
#include "kgalloc/vocab.hpp"

namespace kgalloc {

namespace {

std::int64_t uniform_int(std::mt19937_64& rng, const Duration& d) {
  if (d.max <= d.min) return d.min;
  auto span = static_cast<std::uint64_t>(d.max - d.min) + 1;
  return d.min + static_cast<std::int64_t>(rng() % span);
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

const std::string& categorical(std::mt19937_64& rng, const std::vector<std::pair<std::string, double>>& weights) {
  double total = 0;
  for (const auto& [_, w] : weights) total += w;
  double u = unit(rng) * total;
  for (const auto& [value, w] : weights) {
    if (u < w) return value;
    u -= w;
  }
  return weights.back().first;
}

// Largest N among identifiers "<prefix>N".
std::size_t max_numbered(const Graph& g, std::string_view prefix) {
  std::size_t best = 0;
  for (const auto& t : g.triples()) {
    const std::string& s = t.subject.text();
    if (s.size() <= prefix.size() || s.compare(0, prefix.size(), prefix) != 0) continue;
    auto digits = s.substr(prefix.size());
    if (digits.find_first_not_of("0123456789") != std::string::npos || digits.size() > 9) continue;
    best = std::max<std::size_t>(best, std::stoul(digits));
  }
  return best;
}

Term tid(const std::string& s) { return Term::id(s); }

}  // namespace

std::vector<CaseInstance> generate_cases(const CaseAttributeConfig& attributes, const Duration& interarrival,
                                         std::size_t count, std::uint64_t seed, std::int64_t start_time,
                                         std::size_t first_number) {
  std::mt19937_64 rng(seed);
  std::vector<CaseInstance> out;
  std::int64_t t = start_time;
  for (std::size_t i = 0; i < count; ++i) {
    t += uniform_int(rng, interarrival);
    CaseInstance c;
    c.id = "case-" + std::to_string(first_number + i);
    c.application_type = categorical(rng, attributes.application_types);
    c.loan_goal = categorical(rng, attributes.loan_goals);
    c.requested_amount =
        std::round(attributes.amount_min + (attributes.amount_max - attributes.amount_min) * unit(rng));
    c.arrival = t;
    out.push_back(std::move(c));
  }
  return out;
}

std::string_view to_string(TaskState s) {
  switch (s) {
    case TaskState::Enabled: return "enabled";
    case TaskState::PendingDecision: return "pending-decision";
    case TaskState::Running: return "running";
    case TaskState::Completed: return "completed";
  }
  return "?";
}

Simulator::Simulator(Scenario scenario, Knowledge knowledge, DecisionMode mode)
    : scenario_(std::move(scenario)), knowledge_(std::move(knowledge)), mode_(mode), rng_(scenario_.seed) {
  scenario_.model.check();
  clock_ = scenario_.start_time;
  next_task_number_ = max_numbered(knowledge_.graph, "task-") + 1;
  for (const auto& it : scenario_.initial_tasks) {
    if (it.task_id.rfind("task-", 0) == 0 && it.task_id.size() > 5 &&
        it.task_id.find_first_not_of("0123456789", 5) == std::string::npos)
      next_task_number_ = std::max(next_task_number_, std::stoul(it.task_id.substr(5)) + 1);
    schedule(scenario_.start_time + it.at, Event{EventKind::Enable, it.case_id, it.activity, it.task_id});
  }
  std::size_t first_case = max_numbered(knowledge_.graph, "case-") + 1;
  for (const auto& it : scenario_.initial_tasks)
    if (it.case_id.rfind("case-", 0) == 0 && it.case_id.size() > 5 &&
        it.case_id.find_first_not_of("0123456789", 5) == std::string::npos)
      first_case = std::max(first_case, std::stoul(it.case_id.substr(5)) + 1);
  generated_ = generate_cases(scenario_.attributes, scenario_.interarrival, scenario_.cases,
                              scenario_.seed ^ 0x9E3779B97F4A7C15ULL, scenario_.start_time, first_case);
  for (std::size_t i = 0; i < generated_.size(); ++i) {
    Event e{EventKind::Arrival, generated_[i].id, {}, {}};
    e.case_index = i;
    schedule(generated_[i].arrival, std::move(e));
  }
}

void Simulator::schedule(std::int64_t at, Event e) { queue_.emplace(std::make_pair(at, seq_++), std::move(e)); }

std::optional<std::int64_t> Simulator::next_event_time() const {
  if (queue_.empty()) return std::nullopt;
  return queue_.begin()->first.first;
}

std::int64_t Simulator::draw(const Duration& d) { return uniform_int(rng_, d); }

std::string Simulator::next_task_id() { return "task-" + std::to_string(next_task_number_++); }

Simulator::CaseState& Simulator::case_state(const std::string& case_id) {
  auto it = cases_.find(case_id);
  if (it != cases_.end()) return it->second;
  // A case already in the graph (history from the scenario's knowledge).
  const Graph& g = knowledge_.graph;
  const Term c = tid(case_id);
  CaseState cs;
  if (auto v = g.object_of(c, vocab::kHasApplicationType)) cs.application_type = v->text();
  if (auto v = g.object_of(c, vocab::kHasLoanGoal)) cs.loan_goal = v->text();
  if (auto v = g.object_of(c, vocab::kRequestedAmount); v && !v->is_identifier()) cs.requested_amount = v->numeric_value();
  std::int64_t latest = 0;
  for (const auto& task : g.subjects_of(vocab::kPartOf, c)) {
    auto ended = g.object_of(task, vocab::kEndedAt);
    if (ended && ended->kind() == TermKind::Integer &&
        (cs.last_completed_task.empty() || ended->as_integer() > latest)) {
      latest = ended->as_integer();
      cs.last_completed_task = task.text();
    }
  }
  ++cases_started_;
  return cases_[case_id] = std::move(cs);
}

EventRow Simulator::row(const TaskInstance& t, Lifecycle l) const {
  const CaseState& cs = cases_.at(t.case_id);
  return EventRow{t.case_id,     t.id,          t.activity,
                  l == Lifecycle::Enable ? std::string() : t.resource,
                  l,             clock_,        cs.application_type,
                  cs.loan_goal,  cs.requested_amount};
}

std::vector<EventRow> Simulator::step() {
  if (paused_) return {};
  const std::size_t before = log_.size();
  if (mode_ == DecisionMode::Automatic) {
    drain_pending_automatic();
  } else if (scenario_.block_all && !pending_.empty()) {
    return {};
  }
  if (!queue_.empty()) {
    auto node = queue_.extract(queue_.begin());
    clock_ = node.key().first;
    const Event& e = node.mapped();
    switch (e.kind) {
      case EventKind::Arrival: handle_arrival(e); break;
      case EventKind::Enable: handle_enable(e); break;
      case EventKind::Complete: handle_complete(e); break;
    }
  }
  return {log_.begin() + static_cast<std::ptrdiff_t>(before), log_.end()};
}

void Simulator::handle_arrival(const Event& e) {
  const CaseInstance& c = generated_.at(e.case_index);
  Graph& g = knowledge_.graph;
  const Term id = tid(c.id);
  g.add(make_triple(id, vocab::kType, vocab::term(vocab::kCase)));
  g.add(make_triple(id, vocab::kHasApplicationType, tid(c.application_type)));
  g.add(make_triple(id, vocab::kHasLoanGoal, tid(c.loan_goal)));
  g.add(make_triple(id, vocab::kRequestedAmount, Term::decimal(c.requested_amount)));
  cases_[c.id] = CaseState{c.application_type, c.loan_goal, c.requested_amount, {}, false};
  ++cases_started_;
  route_after(c.id, std::string(kFlowStart));
}

void Simulator::handle_enable(const Event& e) {
  case_state(e.case_id);
  TaskInstance t;
  t.id = e.task_id.empty() ? next_task_id() : e.task_id;
  t.case_id = e.case_id;
  t.activity = e.activity;
  t.enabled_at = clock_;
  Graph& g = knowledge_.graph;
  const Term id = tid(t.id);
  g.add(make_triple(id, vocab::kType, vocab::term(vocab::kTask)));
  g.add(make_triple(id, vocab::kInstanceOf, tid(t.activity)));
  g.add(make_triple(id, vocab::kPartOf, tid(t.case_id)));
  g.add(make_triple(id, vocab::kEnabledAt, Term::integer(clock_)));
  log_.push_back(row(t, Lifecycle::Enable));
  task_order_.push_back(t.id);
  const std::string task_id = t.id;
  tasks_[task_id] = std::move(t);
  try_allocate(task_id);
}

void Simulator::handle_complete(const Event& e) {
  TaskInstance& t = tasks_.at(e.task_id);
  t.state = TaskState::Completed;
  t.ended_at = clock_;
  Graph& g = knowledge_.graph;
  const Term id = tid(t.id);
  const Term r = tid(t.resource);
  g.remove(make_triple(r, vocab::kBusy, Term::boolean(true)));
  g.add(make_triple(id, vocab::kEndedAt, Term::integer(clock_)));
  CaseState& cs = case_state(t.case_id);
  if (!cs.last_completed_task.empty())
    g.add(make_triple(tid(cs.last_completed_task), vocab::kDirectlyFollowedBy, id));
  cs.last_completed_task = t.id;

  std::int64_t done = 0;
  for (const auto& old : g.lookup(r, vocab::term(vocab::kCompletedTaskCount))) {
    if (old.object.kind() == TermKind::Integer) done = std::max(done, old.object.as_integer());
    g.remove(old);
  }
  g.add(make_triple(r, vocab::kCompletedTaskCount, Term::integer(done + 1)));
  running_by_resource_.erase(t.resource);
  log_.push_back(row(t, Lifecycle::Complete));

  const std::string case_id = t.case_id;
  const std::string activity = t.activity;
  retry_waiting();
  route_after(case_id, activity);
}

void Simulator::route_after(const std::string& case_id, const std::string& from) {
  const auto& branches = scenario_.model.flow.at(from);
  double u = unit(rng_);
  const Branch* chosen = &branches.back();
  for (const auto& b : branches) {
    if (u < b.p) {
      chosen = &b;
      break;
    }
    u -= b.p;
  }
  if (chosen->to == kFlowEnd) {
    CaseState& cs = case_state(case_id);
    if (!cs.completed) {
      cs.completed = true;
      ++cases_completed_;
    }
    return;
  }
  schedule(clock_, Event{EventKind::Enable, case_id, chosen->to, {}});
}

void Simulator::try_allocate(const std::string& task_id) {
  const Reasoner r = reasoner();
  const Term task = tid(task_id);
  auto ranking = r.rank(knowledge_.graph, task);
  auto waiting_it = std::find(waiting_.begin(), waiting_.end(), task_id);
  if (ranking.eligible.empty()) {
    tasks_.at(task_id).state = TaskState::Enabled;
    if (waiting_it == waiting_.end()) waiting_.push_back(task_id);
    return;
  }
  if (waiting_it != waiting_.end()) waiting_.erase(waiting_it);
  tasks_.at(task_id).state = TaskState::PendingDecision;
  if (mode_ == DecisionMode::Automatic) {
    start_task(task_id, r.decide_automatic(knowledge_.graph, task, clock_));
    return;
  }
  std::string id = "d" + std::to_string(next_decision_number_++);
  pending_.emplace_back(id, task_id);
  pending_since_[id] = clock_;
}

void Simulator::start_task(const std::string& task_id, AllocationDecision d) {
  TaskInstance& t = tasks_.at(task_id);
  const std::string resource = d.chosen.text();
  if (running_by_resource_.count(resource))
    throw std::logic_error("resource " + resource + " already runs " + running_by_resource_[resource]);
  running_by_resource_[resource] = task_id;
  t.state = TaskState::Running;
  t.resource = resource;
  t.started_at = clock_;
  Graph& g = knowledge_.graph;
  const Term id = tid(task_id);
  g.add(make_triple(id, vocab::kPerformedBy, d.chosen));
  g.add(make_triple(id, vocab::kStartedAt, Term::integer(clock_)));
  g.add(make_triple(d.chosen, vocab::kBusy, Term::boolean(true)));
  log_.push_back(row(t, Lifecycle::Start));
  decisions_.push_back(std::move(d));
  schedule(clock_ + draw(scenario_.model.durations.at(t.activity)), Event{EventKind::Complete, t.case_id, t.activity, task_id});
}

void Simulator::retry_waiting() {
  const auto snapshot = waiting_;
  for (const auto& id : snapshot) try_allocate(id);
}

void Simulator::drain_pending_automatic() {
  const auto snapshot = pending_;
  pending_.clear();
  const Reasoner r = reasoner();
  for (const auto& [decision_id, task_id] : snapshot) {
    pending_since_.erase(decision_id);
    resolved_.insert(decision_id);
    const Term task = tid(task_id);
    if (r.rank(knowledge_.graph, task).eligible.empty()) {
      tasks_.at(task_id).state = TaskState::Enabled;
      waiting_.push_back(task_id);
      continue;
    }
    start_task(task_id, r.decide_automatic(knowledge_.graph, task, clock_));
  }
}

PendingDecisionView Simulator::view_of(const std::string& decision_id, const std::string& task_id,
                                       std::int64_t created_at) const {
  const TaskInstance& t = tasks_.at(task_id);
  const CaseState& cs = cases_.at(t.case_id);
  auto ranking = reasoner().rank(knowledge_.graph, tid(task_id));
  PendingDecisionView v;
  v.id = decision_id;
  v.task = task_id;
  v.case_id = t.case_id;
  v.activity_label = display_label(knowledge_.graph, tid(t.activity));
  v.case_attributes = {{"ApplicationType", cs.application_type},
                       {"LoanGoal", cs.loan_goal},
                       {"RequestedAmount", Term::decimal(cs.requested_amount).to_string()}};
  v.case_attributes[2].second = v.case_attributes[2].second.substr(0, v.case_attributes[2].second.rfind("^^"));
  v.candidates = ranking.ordered();
  v.available = ranking.available;
  v.created_at = created_at;
  return v;
}

std::vector<PendingDecisionView> Simulator::pending() const {
  std::vector<PendingDecisionView> out;
  for (const auto& [id, task] : pending_) out.push_back(view_of(id, task, pending_since_.at(id)));
  return out;
}

std::optional<PendingDecisionView> Simulator::pending(const std::string& decision_id) const {
  for (const auto& [id, task] : pending_)
    if (id == decision_id) return view_of(id, task, pending_since_.at(id));
  return std::nullopt;
}

AllocationDecision Simulator::resolve(const std::string& decision_id, const Term& resource) {
  if (resolved_.count(decision_id)) throw Error(ErrorCode::AlreadyDecided, "decision " + decision_id + " already taken");
  auto it = std::find_if(pending_.begin(), pending_.end(), [&](const auto& p) { return p.first == decision_id; });
  if (it == pending_.end()) throw Error(ErrorCode::UnknownId, "unknown decision " + decision_id);
  const std::string task_id = it->second;
  AllocationDecision d = reasoner().decide_human(knowledge_.graph, tid(task_id), resource, clock_);
  pending_.erase(it);
  pending_since_.erase(decision_id);
  resolved_.insert(decision_id);
  start_task(task_id, d);
  return d;
}

RunReport Simulator::run(const RunLimits& limits, const HumanCallback& decide) {
  if (mode_ == DecisionMode::Human && !decide)
    throw Error(ErrorCode::InvalidArgument, "human mode needs a decision callback");
  while (!paused_) {
    if (limits.cases && cases_completed_ >= *limits.cases) break;
    if (mode_ == DecisionMode::Human && decide) {
      while (!pending_.empty()) {
        auto [id, task] = pending_.front();
        resolve(id, decide(view_of(id, task, pending_since_.at(id))));
      }
    }
    if (queue_.empty()) {
      if (mode_ == DecisionMode::Automatic) drain_pending_automatic();
      break;
    }
    if (limits.until && queue_.begin()->first.first > *limits.until) break;
    step();
  }
  RunReport report;
  report.stats = stats();
  report.finished = queue_.empty();
  if (report.finished) report.deadlocked = waiting_;
  return report;
}

std::vector<std::string> Simulator::waiting() const { return waiting_; }

SimulationStats Simulator::stats() const {
  SimulationStats s;
  s.enabled = tasks_.size();
  for (const auto& [_, t] : tasks_) {
    switch (t.state) {
      case TaskState::Enabled: ++s.waiting; break;
      case TaskState::PendingDecision: ++s.pending; break;
      case TaskState::Running: ++s.running; break;
      case TaskState::Completed: ++s.completed; break;
    }
  }
  s.cases_started = cases_started_;
  s.cases_completed = cases_completed_;
  s.decisions = decisions_.size();
  return s;
}

std::string Simulator::decision_journal() const {
  std::string out;
  for (const auto& d : decisions_) out += journal_line(d) + "\n";
  return out;
}

std::string Simulator::explanations(const std::string& case_id) const {
  std::string out;
  for (const auto& d : decisions_) {
    if (!case_id.empty() && d.case_id != case_id) continue;
    if (!out.empty()) out += "\n";
    out += format_explanation(d);
  }
  return out;
}

void Simulator::check_invariants() const {
  std::map<std::string, std::string> running;
  for (const auto& [id, t] : tasks_) {
    if (t.state == TaskState::Running && !running.emplace(t.resource, id).second)
      throw std::logic_error("resource " + t.resource + " runs two tasks");
    bool started = t.state == TaskState::Running || t.state == TaskState::Completed;
    if (started && t.started_at < t.enabled_at) throw std::logic_error(id + " started before it was enabled");
    if (t.state == TaskState::Completed && t.ended_at < t.started_at) throw std::logic_error(id + " ended before it started");
  }
  if (running != running_by_resource_) throw std::logic_error("running-resource table out of sync");
  auto s = stats();
  if (s.enabled != s.completed + s.running + s.pending + s.waiting) throw std::logic_error("task conservation broken");
  if (s.pending != pending_.size() || s.waiting != waiting_.size()) throw std::logic_error("queues out of sync");
  for (std::size_t i = 1; i < log_.size(); ++i)
    if (log_[i].timestamp < log_[i - 1].timestamp) throw std::logic_error("event log goes back in time");
}

}  // namespace kgalloc
