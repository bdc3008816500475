#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cnas {

// Base for every error raised by the library. Each subclass names one
// failure mode so callers can catch selectively.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define CNAS_DEFINE_ERROR(Name)                    \
    class Name : public Error {                    \
    public:                                        \
        using Error::Error;                        \
    }

CNAS_DEFINE_ERROR(InvalidSpace);
CNAS_DEFINE_ERROR(UnknownLevel);
CNAS_DEFINE_ERROR(SpaceTooLarge);
CNAS_DEFINE_ERROR(MalformedEncoding);
CNAS_DEFINE_ERROR(InvalidArch);
CNAS_DEFINE_ERROR(IncompatibleSpace);
CNAS_DEFINE_ERROR(ShapeMismatch);
CNAS_DEFINE_ERROR(NonFiniteLoss);
CNAS_DEFINE_ERROR(MissingTimeEntry);
CNAS_DEFINE_ERROR(MissingEntry);
CNAS_DEFINE_ERROR(NonPositiveEntry);
CNAS_DEFINE_ERROR(InsufficientData);
CNAS_DEFINE_ERROR(InfeasibleTarget);
CNAS_DEFINE_ERROR(RetriesExhausted);
CNAS_DEFINE_ERROR(TooFewSamples);
CNAS_DEFINE_ERROR(CheckpointError);
CNAS_DEFINE_ERROR(ConfigError);

#undef CNAS_DEFINE_ERROR

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace cnas
