#pragma once

namespace srw {
inline constexpr const char* kVersion = "0.1.0";
}
