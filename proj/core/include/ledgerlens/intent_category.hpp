#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace ledgerlens {

enum class Intent : int {
  BasicInfo = 0,
  Ranking = 1,
  Direction = 2,
  Summary = 3,
  ProblemSolving = 4,
  Diagnostics = 5,
  Performance = 6,
  Outliers = 7,
  Impact = 8,
};

inline constexpr std::size_t kIntentCount = 9;

inline constexpr std::array<Intent, kIntentCount> kAllIntents{
    Intent::BasicInfo,      Intent::Ranking,     Intent::Direction, Intent::Summary, Intent::ProblemSolving,
    Intent::Diagnostics,    Intent::Performance, Intent::Outliers,  Intent::Impact};

constexpr int code(Intent i) noexcept { return static_cast<int>(i); }

std::string_view to_string(Intent intent);
std::optional<Intent> intent_from_code(int code);
std::optional<Intent> intent_from_name(std::string_view name);

}  // namespace ledgerlens
