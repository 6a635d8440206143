#pragma once

#include <string_view>

namespace fluidity {

std::string_view tool_version();

}  // namespace fluidity
