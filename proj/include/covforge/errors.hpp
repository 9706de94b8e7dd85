#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace covforge {

// Compact number formatting for error messages.
inline std::string format_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// Base of every domain error raised by the library. Callers that only care
// about "the computation was refused" can catch this one type.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define COVFORGE_DEFINE_ERROR(Name)                                          \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& what) : Error(#Name, what) {}       \
    };

COVFORGE_DEFINE_ERROR(SingularJacobian)
COVFORGE_DEFINE_ERROR(DomainTooSmall)
COVFORGE_DEFINE_ERROR(KernelTooWide)
COVFORGE_DEFINE_ERROR(StepSizeTooLarge)
COVFORGE_DEFINE_ERROR(QuadratureUnderResolved)
COVFORGE_DEFINE_ERROR(NonMonotoneMap)
COVFORGE_DEFINE_ERROR(ResonantFrequency)
COVFORGE_DEFINE_ERROR(NotDivergenceFree)
COVFORGE_DEFINE_ERROR(AmplitudeTooLarge)
COVFORGE_DEFINE_ERROR(NormalizationFailure)

#undef COVFORGE_DEFINE_ERROR

} // namespace covforge
