#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <variant>

namespace kgalloc {

enum class TermKind { Identifier, String, Integer, Decimal, Boolean };

std::string_view to_string(TermKind kind);

/// A node or edge label of the knowledge graph: either a bare identifier or a
/// typed literal. Identifiers are non-empty and contain no whitespace.
class Term {
 public:
  // An empty string literal.
  Term() : kind_(TermKind::String), value_(std::string()) {}

  static Term id(std::string name);
  static Term str(std::string text);
  static Term integer(std::int64_t value);
  static Term decimal(double value);
  static Term boolean(bool value);

  TermKind kind() const noexcept { return kind_; }
  bool is_identifier() const noexcept { return kind_ == TermKind::Identifier; }
  bool is_literal() const noexcept { return !is_identifier(); }
  bool is_numeric() const noexcept {
    return kind_ == TermKind::Integer || kind_ == TermKind::Decimal;
  }

  // Identifier name or string payload. Throws for other kinds.
  const std::string& text() const;
  std::int64_t as_integer() const;
  double as_decimal() const;
  bool as_boolean() const;
  double numeric_value() const;

  // Canonical file syntax: bare identifier, "str", 42^^int, 4.5^^dec, true^^bool.
  std::string to_string() const;

  friend bool operator==(const Term& a, const Term& b) = default;
  friend std::strong_ordering operator<=>(const Term& a, const Term& b);

 private:
  Term(TermKind kind, std::variant<std::string, std::int64_t, double, bool> value)
      : kind_(kind), value_(std::move(value)) {}

  TermKind kind_;
  std::variant<std::string, std::int64_t, double, bool> value_;
};

bool is_valid_identifier(std::string_view name);

// Parses one token in file syntax. Throws Error{MalformedTerm}.
Term parse_term(std::string_view token);

struct Triple {
  Term subject;
  Term predicate;
  Term object;

  std::string to_string() const;

  friend bool operator==(const Triple&, const Triple&) = default;
  friend std::strong_ordering operator<=>(const Triple& a, const Triple& b);
};

// Throws Error{MalformedTerm} unless subject and predicate are identifiers.
void check_well_formed(const Triple& t);

Triple make_triple(std::string_view s, std::string_view p, Term o);
Triple make_triple(std::string_view s, std::string_view p, std::string_view o);
Triple make_triple(const Term& s, std::string_view p, Term o);

// Predicates with built-in meaning.
namespace vocab {
inline constexpr std::string_view kType = "type";
inline constexpr std::string_view kLabel = "label";
}  // namespace vocab

}  // namespace kgalloc

template <>
struct std::hash<kgalloc::Term> {
  std::size_t operator()(const kgalloc::Term& t) const noexcept;
};

template <>
struct std::hash<kgalloc::Triple> {
  std::size_t operator()(const kgalloc::Triple& t) const noexcept;
};
