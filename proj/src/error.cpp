#include "fumo/error.hpp"

namespace fumo {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_input: return "invalid input";
        case ErrorCode::io_read: return "read error";
        case ErrorCode::io_write: return "write error";
        case ErrorCode::scorer_unavailable: return "scorer unavailable";
        case ErrorCode::protocol: return "protocol error";
        case ErrorCode::fixture_incomplete: return "fixture incomplete";
    }
    return "unknown error";
}

}  // namespace fumo
