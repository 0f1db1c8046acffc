#pragma once

namespace afvm {
inline constexpr const char* kVersion = "1.0.0";
}
