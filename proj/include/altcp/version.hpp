#pragma once

namespace altcp {
inline constexpr const char* kVersion = "0.1.0";
}
