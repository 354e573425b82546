#pragma once

#include <stdexcept>
#include <string>

namespace fumo {

enum class ErrorCode {
    invalid_input,
    io_read,
    io_write,
    scorer_unavailable,
    protocol,
    fixture_incomplete,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool cond, const std::string& message) {
    if (!cond) {
        throw Error(ErrorCode::invalid_input, message);
    }
}

}  // namespace fumo
