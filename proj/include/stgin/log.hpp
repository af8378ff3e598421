#pragma once

#include <string_view>

namespace stgin {

void log_info(std::string_view message);
void log_warning(std::string_view message);
void set_log_quiet(bool quiet);

}  // namespace stgin
