#pragma once

#include <string_view>

namespace fumo {

// Diagnostics go to stderr; machine-readable output never does.
void set_quiet(bool quiet);
bool is_quiet();

void log_info(std::string_view message);
void log_warn(std::string_view message);
void log_error(std::string_view message);

}  // namespace fumo
