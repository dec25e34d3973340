#pragma once

#include <stdexcept>
#include <string>

namespace vinebot {

enum class ErrorCode {
    InvalidArgument,
    DegenerateGeometry,
    Unidentifiable,
    MountLeftBehind,
    Unsatisfiable,
    Parse,
    Io,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::DegenerateGeometry: return "degenerate geometry";
    case ErrorCode::Unidentifiable: return "unidentifiable parameters";
    case ErrorCode::MountLeftBehind: return "mount left behind";
    case ErrorCode::Unsatisfiable: return "unsatisfiable";
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::Io: return "i/o error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

#define VINEBOT_REQUIRE(cond, code, msg)                     \
    do {                                                     \
        if (!(cond)) throw ::vinebot::Error((code), (msg));  \
    } while (0)

} // namespace vinebot
