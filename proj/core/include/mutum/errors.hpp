#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mutum {

/// Base class for every error raised by the simulator.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularPoint : public Error {
public:
    using Error::Error;
};

class InvalidTimestep : public Error {
public:
    using Error::Error;
};

class OutOfWorkspace : public Error {
public:
    using Error::Error;
};

class NoContact : public Error {
public:
    using Error::Error;
};

class TooFewSamples : public Error {
public:
    using Error::Error;
};

class OutOfDomain : public Error {
public:
    using Error::Error;
};

class OffCenterlineEnds : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Input text could not be parsed. `line`/`column` are 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column)
        : Error(what), line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// A parsed value violates an invariant; `invariant` names it.
class ValidationError : public Error {
public:
    ValidationError(std::string invariant, const std::string& detail)
        : Error(invariant + ": " + detail), invariant_(std::move(invariant)) {}

    const std::string& invariant() const noexcept { return invariant_; }

private:
    std::string invariant_;
};

class CalibrationInfeasible : public Error {
public:
    explicit CalibrationInfeasible(std::vector<std::string> violated)
        : Error(join(violated)), violated_(std::move(violated)) {}

    const std::vector<std::string>& violated() const noexcept { return violated_; }

private:
    static std::string join(const std::vector<std::string>& items) {
        std::string out = "calibration infeasible; unsatisfied anchors:";
        for (const auto& s : items) {
            out += "\n  - " + s;
        }
        return out;
    }

    std::vector<std::string> violated_;
};

class MalformedCommand : public Error {
public:
    using Error::Error;
};

class SessionTerminated : public Error {
public:
    using Error::Error;
};

/// Replay log could not be read; `line` is the 1-based offending line.
class ReplayError : public Error {
public:
    ReplayError(std::size_t line, const std::string& detail)
        : Error("replay log line " + std::to_string(line) + ": " + detail), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace mutum
