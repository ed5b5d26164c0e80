#ifndef DLR_ERRORS_HPP
#define DLR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dlr {

enum class ErrorCode {
    InvalidCurve,
    InvalidDevice,
    EnergyExceedsFleet,
    NotDischargeSignal,
    NotRoundTripSignal,
    InfeasibleStep,
    InfeasibleSignal,
    ReservationViolated,
    AlignmentError,
    EmptyWindow,
    UndefinedStatistic,
    ParseError,
    FormatMismatch,
    InvalidArgument,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const { return code_; }
    const char* code_name() const { return error_code_name(code_); }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) { throw Error(code, what); }

} // namespace dlr

#endif
