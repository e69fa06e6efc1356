#include "kgalloc/term.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

#include "kgalloc/error.hpp"

namespace kgalloc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedTerm: return "malformed-term";
    case ErrorCode::ParseError: return "parse-error";
    case ErrorCode::UnknownScale: return "unknown-scale";
    case ErrorCode::UnboundFocusVariable: return "unbound-focus-variable";
    case ErrorCode::UnboundPlaceholder: return "unbound-placeholder";
    case ErrorCode::NotOnScale: return "not-on-scale";
    case ErrorCode::NotAccepted: return "not-accepted";
    case ErrorCode::RemovalOfMissingTriple: return "removal-of-missing-triple";
    case ErrorCode::InvalidUpdate: return "invalid-update";
    case ErrorCode::InvalidTransition: return "invalid-transition";
    case ErrorCode::UnknownTask: return "unknown-task";
    case ErrorCode::UnknownId: return "unknown-id";
    case ErrorCode::NoEligibleResource: return "no-eligible-resource";
    case ErrorCode::IneligibleSelection: return "ineligible-selection";
    case ErrorCode::AlreadyDecided: return "already-decided";
    case ErrorCode::MissingColumn: return "missing-column";
    case ErrorCode::EmptyFile: return "empty-file";
    case ErrorCode::InvalidModel: return "invalid-model";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::NotFound: return "not-found";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

std::string_view to_string(TermKind kind) {
  switch (kind) {
    case TermKind::Identifier: return "identifier";
    case TermKind::String: return "string";
    case TermKind::Integer: return "int";
    case TermKind::Decimal: return "dec";
    case TermKind::Boolean: return "bool";
  }
  return "unknown";
}

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string format_decimal(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string out(buf, end);
  // Keep a decimal marker so the value reads back as a decimal, not an int.
  if (out.find_first_of(".eE") == std::string::npos) out += ".0";
  return out;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

[[noreturn]] void malformed(std::string_view token, std::string_view why) {
  throw Error(ErrorCode::MalformedTerm,
              "malformed term '" + std::string(token) + "': " + std::string(why));
}

}  // namespace

bool is_valid_identifier(std::string_view name) {
  if (name.empty()) return false;
  for (char c : name) {
    if (is_space(c)) return false;
  }
  return true;
}

Term Term::id(std::string name) {
  if (!is_valid_identifier(name)) malformed(name, "identifiers are non-empty and contain no whitespace");
  return Term(TermKind::Identifier, std::move(name));
}

Term Term::str(std::string text) { return Term(TermKind::String, std::move(text)); }

Term Term::integer(std::int64_t value) { return Term(TermKind::Integer, value); }

Term Term::decimal(double value) {
  if (!std::isfinite(value)) malformed(std::to_string(value), "decimal must be finite");
  if (value == 0.0) value = 0.0;  // fold -0.0
  return Term(TermKind::Decimal, value);
}

Term Term::boolean(bool value) { return Term(TermKind::Boolean, value); }

const std::string& Term::text() const {
  if (auto* s = std::get_if<std::string>(&value_)) return *s;
  throw Error(ErrorCode::MalformedTerm, "term " + to_string() + " carries no text");
}

std::int64_t Term::as_integer() const {
  if (kind_ != TermKind::Integer) throw Error(ErrorCode::MalformedTerm, to_string() + " is not an int");
  return std::get<std::int64_t>(value_);
}

double Term::as_decimal() const {
  if (kind_ != TermKind::Decimal) throw Error(ErrorCode::MalformedTerm, to_string() + " is not a dec");
  return std::get<double>(value_);
}

bool Term::as_boolean() const {
  if (kind_ != TermKind::Boolean) throw Error(ErrorCode::MalformedTerm, to_string() + " is not a bool");
  return std::get<bool>(value_);
}

double Term::numeric_value() const {
  if (kind_ == TermKind::Integer) return static_cast<double>(std::get<std::int64_t>(value_));
  if (kind_ == TermKind::Decimal) return std::get<double>(value_);
  throw Error(ErrorCode::MalformedTerm, to_string() + " is not numeric");
}

std::string Term::to_string() const {
  switch (kind_) {
    case TermKind::Identifier: return std::get<std::string>(value_);
    case TermKind::String: return quote(std::get<std::string>(value_));
    case TermKind::Integer: return std::to_string(std::get<std::int64_t>(value_)) + "^^int";
    case TermKind::Decimal: return format_decimal(std::get<double>(value_)) + "^^dec";
    case TermKind::Boolean: return std::get<bool>(value_) ? "true^^bool" : "false^^bool";
  }
  return {};
}

std::strong_ordering operator<=>(const Term& a, const Term& b) {
  if (auto c = a.kind_ <=> b.kind_; c != 0) return c;
  switch (a.kind_) {
    case TermKind::Identifier:
    case TermKind::String:
      return std::get<std::string>(a.value_) <=> std::get<std::string>(b.value_);
    case TermKind::Integer:
      return std::get<std::int64_t>(a.value_) <=> std::get<std::int64_t>(b.value_);
    case TermKind::Decimal: {
      double x = std::get<double>(a.value_), y = std::get<double>(b.value_);
      if (x < y) return std::strong_ordering::less;
      if (y < x) return std::strong_ordering::greater;
      return std::strong_ordering::equal;
    }
    case TermKind::Boolean:
      return std::get<bool>(a.value_) <=> std::get<bool>(b.value_);
  }
  return std::strong_ordering::equal;
}

Term parse_term(std::string_view token) {
  if (token.empty()) malformed(token, "empty token");
  if (token.front() == '"') {
    if (token.size() < 2 || token.back() != '"') malformed(token, "unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < token.size(); ++i) {
      char c = token[i];
      if (c == '"') malformed(token, "unescaped quote");
      if (c != '\\') {
        out += c;
        continue;
      }
      if (i + 2 >= token.size()) malformed(token, "dangling escape");
      char e = token[++i];
      switch (e) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        default: malformed(token, "unknown escape");
      }
    }
    return Term::str(std::move(out));
  }
  auto marker = token.rfind("^^");
  if (marker != std::string_view::npos) {
    std::string_view body = token.substr(0, marker);
    std::string_view kind = token.substr(marker + 2);
    const char* first = body.data();
    const char* last = body.data() + body.size();
    if (kind == "int") {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || p != last || body.empty()) malformed(token, "bad integer");
      return Term::integer(v);
    }
    if (kind == "dec") {
      double v = 0;
      auto [p, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || p != last || body.empty()) malformed(token, "bad decimal");
      return Term::decimal(v);
    }
    if (kind == "bool") {
      if (body == "true") return Term::boolean(true);
      if (body == "false") return Term::boolean(false);
      malformed(token, "bad boolean");
    }
    malformed(token, "unknown literal kind");
  }
  if (token.front() == '#' || token.front() == '?') malformed(token, "identifiers may not start with '#' or '?'");
  return Term::id(std::string(token));
}

std::string Triple::to_string() const {
  return subject.to_string() + " " + predicate.to_string() + " " + object.to_string();
}

std::strong_ordering operator<=>(const Triple& a, const Triple& b) {
  if (auto c = a.subject <=> b.subject; c != 0) return c;
  if (auto c = a.predicate <=> b.predicate; c != 0) return c;
  return a.object <=> b.object;
}

void check_well_formed(const Triple& t) {
  if (!t.subject.is_identifier())
    throw Error(ErrorCode::MalformedTerm, "literal in subject position: " + t.to_string());
  if (!t.predicate.is_identifier())
    throw Error(ErrorCode::MalformedTerm, "literal in predicate position: " + t.to_string());
}

Triple make_triple(std::string_view s, std::string_view p, Term o) {
  return Triple{Term::id(std::string(s)), Term::id(std::string(p)), std::move(o)};
}

Triple make_triple(std::string_view s, std::string_view p, std::string_view o) {
  return make_triple(s, p, Term::id(std::string(o)));
}

Triple make_triple(const Term& s, std::string_view p, Term o) {
  return Triple{s, Term::id(std::string(p)), std::move(o)};
}

}  // namespace kgalloc

std::size_t std::hash<kgalloc::Term>::operator()(const kgalloc::Term& t) const noexcept {
  std::size_t h = static_cast<std::size_t>(t.kind()) * 0x9e3779b97f4a7c15ULL;
  switch (t.kind()) {
    case kgalloc::TermKind::Identifier:
    case kgalloc::TermKind::String: return h ^ std::hash<std::string>{}(t.text());
    case kgalloc::TermKind::Integer: return h ^ std::hash<std::int64_t>{}(t.as_integer());
    case kgalloc::TermKind::Decimal: return h ^ std::hash<double>{}(t.as_decimal());
    case kgalloc::TermKind::Boolean: return h ^ std::hash<bool>{}(t.as_boolean());
  }
  return h;
}

std::size_t std::hash<kgalloc::Triple>::operator()(const kgalloc::Triple& t) const noexcept {
  std::hash<kgalloc::Term> h;
  std::size_t seed = h(t.subject);
  seed ^= h(t.predicate) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
  seed ^= h(t.object) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
  return seed;
}
