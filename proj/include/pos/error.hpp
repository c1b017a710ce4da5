#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pos {

enum class ErrorKind {
    Domain,
    Configuration,
    Validation,
    Schema,
    Initialization,
    StuckChain,
    Convergence,
    Conditioning,
    InfeasibleCalibration,
    IllConditionedCalibration,
    Inestimable,
    Numerical,
    Io,
};

std::string_view to_string(ErrorKind kind);

// All library failures are reported through this type. `stage` is filled in
// by the pipeline when an error crosses a stage boundary.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& stage() const noexcept { return stage_; }
    void set_stage(std::string stage) { stage_ = std::move(stage); }

private:
    ErrorKind kind_;
    std::string stage_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) fail(kind, what);
}

}  // namespace pos
