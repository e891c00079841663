#pragma once

#include <stdexcept>
#include <string>

namespace gapstat {

// Error taxonomy. The CLI maps kinds onto process exit codes:
// data/parse/config -> 2, artifact/version -> 3, numeric/fit -> 4.
enum class ErrorKind {
    parse,
    config,
    train,
    score,
    fit,
    state,
    eval,
    rca,
    io,
    version,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::version:
            return 3;
        case ErrorKind::fit:
        case ErrorKind::score:
            return 4;
        default:
            return 2;
    }
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what) {
    if (!ok) fail(kind, what);
}

}  // namespace gapstat
