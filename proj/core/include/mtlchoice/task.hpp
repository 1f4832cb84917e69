#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace mtlchoice {

/// Which survey an observation comes from: revealed or stated preference.
enum class Task { RP, SP };

inline std::string_view to_string(Task task) { return task == Task::RP ? "rp" : "sp"; }

inline std::optional<Task> parse_task(std::string_view text) {
  if (text == "rp" || text == "RP") return Task::RP;
  if (text == "sp" || text == "SP") return Task::SP;
  return std::nullopt;
}

}  // namespace mtlchoice
