#pragma once

namespace persuasion {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace persuasion
