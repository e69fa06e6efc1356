#include "kgalloc/rules.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "kgalloc/error.hpp"
#include "text_util.hpp"

namespace kgalloc {

std::string_view to_string(FilterOp op) {
  switch (op) {
    case FilterOp::ScaleGreaterEq: return "scaleGreaterEq";
    case FilterOp::ScaleLess: return "scaleLess";
    case FilterOp::Eq: return "eq";
    case FilterOp::Neq: return "neq";
    case FilterOp::NumGreaterEq: return "numGreaterEq";
    case FilterOp::NumLess: return "numLess";
  }
  return "unknown";
}

std::string_view to_string(Polarity p) { return p == Polarity::Positive ? "positive" : "negative"; }
std::string_view to_string(Severity s) { return s == Severity::Hard ? "hard" : "soft"; }

namespace {

bool is_scale_op(FilterOp op) { return op == FilterOp::ScaleGreaterEq || op == FilterOp::ScaleLess; }

std::optional<FilterOp> parse_filter_op(std::string_view s) {
  for (auto op : {FilterOp::ScaleGreaterEq, FilterOp::ScaleLess, FilterOp::Eq, FilterOp::Neq,
                  FilterOp::NumGreaterEq, FilterOp::NumLess})
    if (to_string(op) == s) return op;
  return std::nullopt;
}

bool valid_var_name(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

void collect(const Slot& slot, std::set<Variable>& out) {
  if (auto* v = std::get_if<Variable>(&slot)) out.insert(*v);
}

std::set<Variable> atom_variables(const Rule& rule) {
  std::set<Variable> vars;
  for (const auto& a : rule.atoms) {
    collect(a.subject, vars);
    collect(a.object, vars);
  }
  return vars;
}

std::string slot_to_string(const Slot& s) {
  if (auto* v = std::get_if<Variable>(&s)) return "?" + v->name;
  return std::get<Term>(s).to_string();
}

}  // namespace

std::vector<Variable> Rule::variables() const {
  auto vars = atom_variables(*this);
  for (const auto& f : filters) {
    vars.insert(f.left);
    collect(f.right, vars);
  }
  return {vars.begin(), vars.end()};
}

const Rule* RuleSet::find(std::string_view id) const {
  for (const auto& r : rules)
    if (r.id == id) return &r;
  return nullptr;
}

std::vector<std::string> placeholders(std::string_view tmpl) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = tmpl.find('{', pos)) != std::string_view::npos) {
    auto close = tmpl.find('}', pos + 1);
    if (close == std::string_view::npos) break;
    out.emplace_back(tmpl.substr(pos + 1, close - pos - 1));
    pos = close + 1;
  }
  return out;
}

void check_rule(const Rule& rule, const Ontology& ontology) {
  auto fail = [&](ErrorCode code, const std::string& what) {
    throw Error(code, "rule '" + rule.id + "': " + what);
  };
  if (!is_valid_identifier(rule.id)) fail(ErrorCode::InvalidModel, "invalid id");
  if (rule.atoms.empty()) fail(ErrorCode::InvalidModel, "pattern has no atoms");
  auto vars = atom_variables(rule);
  if (!vars.count(rule.task_var)) fail(ErrorCode::UnboundFocusVariable, "task variable ?" + rule.task_var.name + " occurs in no atom");
  if (!vars.count(rule.resource_var))
    fail(ErrorCode::UnboundFocusVariable, "resource variable ?" + rule.resource_var.name + " occurs in no atom");
  for (const auto& a : rule.atoms) {
    if (!a.predicate.is_identifier()) fail(ErrorCode::InvalidModel, "predicate must be an identifier");
    if (auto* t = std::get_if<Term>(&a.subject); t && t->is_literal())
      fail(ErrorCode::InvalidModel, "literal in subject position");
  }
  for (const auto& f : rule.filters) {
    if (!vars.count(f.left)) fail(ErrorCode::InvalidModel, "filter variable ?" + f.left.name + " occurs in no atom");
    if (auto* v = std::get_if<Variable>(&f.right); v && !vars.count(*v))
      fail(ErrorCode::InvalidModel, "filter variable ?" + v->name + " occurs in no atom");
    if (is_scale_op(f.op)) {
      if (!f.scale) fail(ErrorCode::UnknownScale, std::string(to_string(f.op)) + " needs a scale");
      if (!ontology.find_scale(*f.scale)) fail(ErrorCode::UnknownScale, "unknown scale '" + *f.scale + "'");
    } else if (f.scale) {
      fail(ErrorCode::InvalidModel, std::string(to_string(f.op)) + " takes no scale");
    }
  }
  if (rule.severity == Severity::Hard && rule.polarity != Polarity::Negative)
    fail(ErrorCode::InvalidModel, "hard rules must be negative");
  if (!std::isfinite(rule.score)) fail(ErrorCode::InvalidModel, "score must be finite");
  if (rule.severity == Severity::Soft) {
    if (rule.polarity == Polarity::Positive && rule.score < 0)
      fail(ErrorCode::InvalidModel, "positive rules carry a score >= 0");
    if (rule.polarity == Polarity::Negative && rule.score > 0)
      fail(ErrorCode::InvalidModel, "negative rules carry a score <= 0");
  }
  auto all = rule.variables();
  for (const auto& name : placeholders(rule.message)) {
    if (!std::binary_search(all.begin(), all.end(), Variable{name}))
      fail(ErrorCode::UnboundPlaceholder, "message references unbound {" + name + "}");
  }
}

namespace {

class RuleParser {
 public:
  RuleParser(std::string_view text, const Ontology& ontology) : lines_(detail::split_lines(text)), ontology_(ontology) {}

  RuleSet run() {
    RuleSet set;
    std::set<std::string> ids;
    bool seen_content = false;
    for (line_ = 1; line_ <= lines_.size(); ++line_) {
      std::string_view raw = lines_[line_ - 1];
      auto toks = detail::tokenize(raw, line_);
      if (toks.empty()) continue;
      if (toks[0].text == "version") {
        if (seen_content || in_rule_) error(toks[0].column, "version must come first");
        if (toks.size() != 2 || toks[1].text != "1") error(toks[0].column, "unsupported rule format version");
        seen_content = true;
        continue;
      }
      seen_content = true;
      if (!in_rule_) {
        if (toks[0].text != "rule" || toks.size() != 1) error(toks[0].column, "expected 'rule'");
        begin_rule();
        continue;
      }
      if (toks[0].text == "end" && toks.size() == 1) {
        Rule rule = finish_rule();
        if (!ids.insert(rule.id).second) error(1, "duplicate rule id '" + rule.id + "'", start_line_);
        set.rules.push_back(std::move(rule));
        continue;
      }
      field(raw);
    }
    if (in_rule_) error(1, "missing 'end' for rule", start_line_);
    return set;
  }

 private:
  [[noreturn]] void error(std::size_t column, const std::string& msg, std::size_t line = 0) const {
    throw ParseError(line ? line : line_, column, msg);
  }

  void begin_rule() {
    in_rule_ = true;
    start_line_ = line_;
    rule_ = Rule{};
    seen_.clear();
  }

  void once(const std::string& key, std::size_t col) {
    if (!seen_.insert(key).second) error(col, "duplicate field '" + key + "'");
  }

  Slot parse_slot(const detail::Token& tok) {
    if (!tok.text.empty() && tok.text[0] == '?') {
      std::string name = tok.text.substr(1);
      if (!valid_var_name(name)) error(tok.column, "bad variable name '" + tok.text + "'");
      return Variable{name};
    }
    try {
      return parse_term(tok.text);
    } catch (const Error& e) {
      error(tok.column, e.what());
    }
  }

  Variable parse_var(const detail::Token& tok) {
    Slot s = parse_slot(tok);
    if (auto* v = std::get_if<Variable>(&s)) return *v;
    error(tok.column, "expected a variable, got '" + tok.text + "'");
  }

  void field(std::string_view raw) {
    auto colon = raw.find(':');
    auto key_start = raw.find_first_not_of(" \t");
    if (colon == std::string_view::npos) error(key_start + 1, "expected 'key: value'");
    std::string key(detail::trim(raw.substr(0, colon)));
    std::size_t value_offset = colon + 1;
    std::string_view value_raw = raw.substr(value_offset);
    auto lead = value_raw.find_first_not_of(" \t");
    std::size_t value_col = value_offset + (lead == std::string_view::npos ? 0 : lead) + 1;
    std::string value(detail::trim(value_raw));

    // Re-tokenize the value with columns relative to the full line.
    auto toks = detail::tokenize(value_raw, line_);
    for (auto& t : toks) t.column += value_offset;
    auto key_col = key_start + 1;

    if (key == "id") {
      once(key, key_col);
      if (toks.size() != 1 || !is_valid_identifier(value)) error(value_col, "expected a rule id");
      rule_.id = value;
    } else if (key == "task-var" || key == "resource-var") {
      once(key, key_col);
      if (toks.size() != 1) error(value_col, "expected one variable");
      (key == "task-var" ? rule_.task_var : rule_.resource_var) = parse_var(toks[0]);
    } else if (key == "pattern") {
      if (toks.size() != 3) error(value_col, "pattern needs exactly subject, predicate and object");
      Slot pred = parse_slot(toks[1]);
      auto* p = std::get_if<Term>(&pred);
      if (!p) error(toks[1].column, "predicate variables are not supported");
      if (!p->is_identifier()) error(toks[1].column, "predicate must be an identifier");
      Slot subj = parse_slot(toks[0]);
      if (auto* t = std::get_if<Term>(&subj); t && t->is_literal()) error(toks[0].column, "literal in subject position");
      rule_.atoms.push_back(PatternAtom{std::move(subj), *p, parse_slot(toks[2])});
    } else if (key == "filter") {
      if (toks.size() < 3 || toks.size() > 4) error(value_col, "filter needs: op ?left right [scale]");
      auto op = parse_filter_op(toks[0].text);
      if (!op) error(toks[0].column, "unknown filter op '" + toks[0].text + "'");
      Filter f;
      f.op = *op;
      f.left = parse_var(toks[1]);
      f.right = parse_slot(toks[2]);
      if (toks.size() == 4) {
        if (!is_scale_op(*op)) error(toks[3].column, "only scale ops take a scale");
        if (!ontology_.find_scale(toks[3].text))
          throw Error(ErrorCode::UnknownScale,
                      std::to_string(line_) + ":" + std::to_string(toks[3].column) + ": unknown scale '" + toks[3].text + "'");
        f.scale = toks[3].text;
      } else if (is_scale_op(*op)) {
        error(toks[0].column, std::string(to_string(*op)) + " needs a scale name");
      }
      rule_.filters.push_back(std::move(f));
    } else if (key == "polarity") {
      once(key, key_col);
      if (value == "positive") rule_.polarity = Polarity::Positive;
      else if (value == "negative") rule_.polarity = Polarity::Negative;
      else error(value_col, "polarity must be positive or negative");
    } else if (key == "severity") {
      once(key, key_col);
      if (value == "hard") rule_.severity = Severity::Hard;
      else if (value == "soft") rule_.severity = Severity::Soft;
      else error(value_col, "severity must be hard or soft");
    } else if (key == "score") {
      once(key, key_col);
      double v = 0;
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (value.empty() || ec != std::errc() || p != value.data() + value.size() || !std::isfinite(v))
        error(value_col, "score must be a decimal number");
      rule_.score = v;
    } else if (key == "message") {
      once(key, key_col);
      rule_.message = value;
    } else {
      error(key_col, "unknown field '" + key + "'");
    }
  }

  Rule finish_rule() {
    in_rule_ = false;
    for (const char* required : {"id", "task-var", "resource-var", "polarity", "severity", "message"}) {
      if (!seen_.count(required)) error(1, std::string("rule is missing '") + required + "'", start_line_);
    }
    if (rule_.atoms.empty()) error(1, "rule has no pattern", start_line_);
    if (rule_.severity == Severity::Soft && !seen_.count("score")) error(1, "soft rule needs a score", start_line_);
    if (rule_.severity == Severity::Hard) rule_.score = 0.0;
    try {
      check_rule(rule_, ontology_);
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::UnknownScale:
        case ErrorCode::UnboundFocusVariable:
          throw Error(e.code(), std::to_string(start_line_) + ":1: " + e.what());
        default:
          error(1, e.what(), start_line_);
      }
    }
    return std::move(rule_);
  }

  std::vector<std::string_view> lines_;
  const Ontology& ontology_;
  std::size_t line_ = 0;
  std::size_t start_line_ = 0;
  bool in_rule_ = false;
  Rule rule_;
  std::set<std::string> seen_;
};

}  // namespace

RuleSet parse_rules(std::string_view text, const Ontology& ontology) { return RuleParser(text, ontology).run(); }

RuleSet load_rules_file(const std::string& path, const Ontology& ontology) {
  return parse_rules(detail::read_file(path), ontology);
}

std::string serialize_rules(const RuleSet& rules) {
  std::ostringstream out;
  out << "version 1\n";
  for (const auto& r : rules.rules) {
    out << "\nrule\n";
    out << "  id: " << r.id << "\n";
    out << "  task-var: ?" << r.task_var.name << "\n";
    out << "  resource-var: ?" << r.resource_var.name << "\n";
    for (const auto& a : r.atoms)
      out << "  pattern: " << slot_to_string(a.subject) << " " << a.predicate.to_string() << " "
          << slot_to_string(a.object) << "\n";
    for (const auto& f : r.filters) {
      out << "  filter: " << to_string(f.op) << " ?" << f.left.name << " " << slot_to_string(f.right);
      if (f.scale) out << " " << *f.scale;
      out << "\n";
    }
    out << "  polarity: " << to_string(r.polarity) << "\n";
    out << "  severity: " << to_string(r.severity) << "\n";
    if (r.severity == Severity::Soft) {
      auto lit = Term::decimal(r.score).to_string();
      out << "  score: " << lit.substr(0, lit.rfind("^^")) << "\n";
    }
    out << "  message: " << r.message << "\n";
    out << "end\n";
  }
  return out.str();
}

}  // namespace kgalloc
