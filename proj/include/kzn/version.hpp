#pragma once

namespace kzn {

inline constexpr const char* kVersion = "0.1.0";

}
