#pragma once

namespace gmclab {
inline constexpr const char* kVersion = "0.1.0";
}
