#pragma once

#include <string_view>

#include "kgalloc/term.hpp"

// Predicates and classes the reasoner, simulator and miners agree on.
namespace kgalloc::vocab {

inline constexpr std::string_view kInstanceOf = "instanceOf";
inline constexpr std::string_view kPartOf = "partOf";
inline constexpr std::string_view kPerformedBy = "performedBy";
inline constexpr std::string_view kCanBeExecutedBy = "canBeExecutedBy";
inline constexpr std::string_view kHasRole = "hasRole";
inline constexpr std::string_view kBusy = "busy";
inline constexpr std::string_view kSeniority = "seniority";
inline constexpr std::string_view kExpertFor = "expertFor";
inline constexpr std::string_view kHasApplicationType = "hasApplicationType";
inline constexpr std::string_view kHasLoanGoal = "hasLoanGoal";
inline constexpr std::string_view kRequestedAmount = "requestedAmount";
inline constexpr std::string_view kDirectlyFollowedBy = "directlyFollowedBy";
inline constexpr std::string_view kEnabledAt = "enabledAt";
inline constexpr std::string_view kStartedAt = "startedAt";
inline constexpr std::string_view kEndedAt = "endedAt";
inline constexpr std::string_view kCompletedTaskCount = "completedTaskCount";

inline constexpr std::string_view kTask = "Task";
inline constexpr std::string_view kCase = "Case";
inline constexpr std::string_view kRole = "Role";

inline Term term(std::string_view name) { return Term::id(std::string(name)); }

}  // namespace kgalloc::vocab
