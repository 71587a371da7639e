#pragma once

#include <boost/multiprecision/mpfr.hpp>
#include <boost/multiprecision/gmp.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mcf {

// Arbitrary-precision real (MPFR-backed, runtime precision) and exact integer.
using big_float = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>>;
using big_int   = boost::multiprecision::mpz_int;

// The working precision is process-wide: set it once per run before any
// big_float is created.  Variables keep the precision they were born with.
inline void set_precision_bits(unsigned bits) {
    if (bits < 64 || bits > 1u << 20)
        throw std::invalid_argument("precision_bits out of range [64, 2^20]");
    // boost stores decimal digits; round up so we never undershoot `bits`.
    unsigned digits10 = static_cast<unsigned>(bits * 0.30103) + 2;
    big_float::default_precision(digits10);
}

inline unsigned precision_decimal_digits() { return big_float::default_precision(); }

// Full-precision decimal string, locale-free, deterministic.
inline std::string to_decimal_string(const big_float& x) {
    return x.str(0, std::ios_base::scientific);
}

inline big_float parse_big_float(const std::string& s) { return big_float(s); }

enum class ErrorCode {
    invalid_argument,
    precision_exhausted,
    reduction_failure,
    parameter_singularity,
    rational_frequency,
    small_divisor,
    domain_shrink,
    mu_condition,
    analyticity_exhausted,
    elimination_failure,
    schedule_error,
    nondegeneracy,
    config_error,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::invalid_argument:      return "invalid-argument";
        case ErrorCode::precision_exhausted:   return "precision-exhausted";
        case ErrorCode::reduction_failure:     return "reduction-failure";
        case ErrorCode::parameter_singularity: return "parameter-singularity";
        case ErrorCode::rational_frequency:    return "rational-frequency";
        case ErrorCode::small_divisor:         return "small-divisor";
        case ErrorCode::domain_shrink:         return "domain-shrink";
        case ErrorCode::mu_condition:          return "mu-condition";
        case ErrorCode::analyticity_exhausted: return "analyticity-exhausted";
        case ErrorCode::elimination_failure:   return "elimination-failure";
        case ErrorCode::schedule_error:        return "schedule-error";
        case ErrorCode::nondegeneracy:         return "nondegeneracy";
        case ErrorCode::config_error:          return "config-error";
    }
    return "unknown";
}

class McfError : public std::runtime_error {
  public:
    McfError(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}
    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace mcf
