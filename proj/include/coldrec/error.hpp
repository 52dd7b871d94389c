#pragma once

#include <stdexcept>
#include <string>

namespace coldrec {

/// Coarse failure class; the CLI maps each to a process exit code.
enum class ErrorCategory {
    usage,      // bad flags or configuration (exit 1)
    data,       // malformed or inconsistent input files (exit 2)
    numerical,  // divergence, failed verification (exit 3)
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

/// Sizes or indices that do not agree (n_F, h, item/user ids).
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

/// A text input line that cannot be parsed. Carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : Error(ErrorCategory::data, file + ":" + std::to_string(line) + ": " + what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Input that parsed but holds nothing usable.
class EmptyDataError : public Error {
public:
    explicit EmptyDataError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

/// Binary container problems: wrong magic, version, or shape.
class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

class PipelineError : public Error {
public:
    explicit PipelineError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

class SplitError : public Error {
public:
    explicit SplitError(const std::string& what) : Error(ErrorCategory::data, what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorCategory::usage, what) {}
};

/// A parameter became NaN or infinite during training.
class DivergenceError : public Error {
public:
    explicit DivergenceError(const std::string& what) : Error(ErrorCategory::numerical, what) {}
};

/// Broken internal invariant, e.g. a workspace used after the model changed.
class InternalError : public Error {
public:
    explicit InternalError(const std::string& what) : Error(ErrorCategory::numerical, what) {}
};

}  // namespace coldrec
