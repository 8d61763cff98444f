#pragma once

namespace cdens {

inline constexpr const char* version = "1.0.0";

} // namespace cdens
