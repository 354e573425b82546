#include "fumo/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace fumo {

namespace {

std::atomic<bool> g_quiet{false};
std::mutex g_log_mutex;

void emit(std::string_view level, std::string_view message) {
    std::lock_guard lock(g_log_mutex);
    std::cerr << "[fumo] " << level << ": " << message << '\n';
}

}  // namespace

void set_quiet(bool quiet) { g_quiet = quiet; }
bool is_quiet() { return g_quiet; }

void log_info(std::string_view message) {
    if (!g_quiet) emit("info", message);
}

void log_warn(std::string_view message) {
    if (!g_quiet) emit("warning", message);
}

void log_error(std::string_view message) { emit("error", message); }

}  // namespace fumo
