#pragma once

namespace sing {

inline constexpr const char* version = "0.1.0";

}  // namespace sing
