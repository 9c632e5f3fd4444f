#pragma once

namespace xps {
inline constexpr const char* kVersion = "0.3.1";
}
