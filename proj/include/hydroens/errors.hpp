#pragma once

#include <stdexcept>
#include <string>

namespace hydroens {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define HYDROENS_DEFINE_ERROR(Name)              \
    class Name : public Error {                  \
    public:                                      \
        using Error::Error;                      \
    }

HYDROENS_DEFINE_ERROR(AlignmentError);
HYDROENS_DEFINE_ERROR(RangeError);
HYDROENS_DEFINE_ERROR(InsufficientHistory);
HYDROENS_DEFINE_ERROR(ValidationError);
HYDROENS_DEFINE_ERROR(ConfigError);
HYDROENS_DEFINE_ERROR(DegenerateInput);
HYDROENS_DEFINE_ERROR(SolveError);
HYDROENS_DEFINE_ERROR(SchemaError);
HYDROENS_DEFINE_ERROR(TuneError);
HYDROENS_DEFINE_ERROR(ShapeError);

#undef HYDROENS_DEFINE_ERROR

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class ZeroNormError : public Error {
public:
    ZeroNormError(std::string model, int term = -1)
        : Error(term < 0 ? "zero l2-norm for model " + model
                         : "zero l2-norm for model " + model + " in term " + std::to_string(term)),
          model_(std::move(model)), term_(term) {}
    const std::string& model() const noexcept { return model_; }
    int term() const noexcept { return term_; }

private:
    std::string model_;
    int term_;
};

/// CSV problems carry the 1-based line number of the offending row.
class LineError : public Error {
public:
    LineError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class FormatError : public LineError {
public:
    using LineError::LineError;
};

class ParseError : public LineError {
public:
    using LineError::LineError;
};

/// Wraps a failure inside a pipeline stage with the stage name (and term id when known).
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what, int term = -1)
        : Error("[" + stage + (term >= 0 ? " term " + std::to_string(term) : std::string{}) + "] " + what),
          stage_(std::move(stage)), term_(term) {}
    const std::string& stage() const noexcept { return stage_; }
    int term() const noexcept { return term_; }

private:
    std::string stage_;
    int term_;
};

}  // namespace hydroens
