#pragma once

#include <gmpxx.h>

#include <string>

namespace persuade {

// Exact rational scalar. Canonical reduced form is maintained by GMP.
using Rat = mpq_class;

inline Rat rat(long num, long den = 1) {
    Rat r(num, den);
    r.canonicalize();
    return r;
}

// Parses "123", "-4/5" style text. Denominator must be positive and nonzero.
Rat parse_rat(const std::string& text);

// "num/den", or just "num" when the denominator is 1.
std::string rat_str(const Rat& x);

// Decimal expansion rounded half away from zero to `digits` fractional digits.
std::string rat_decimal(const Rat& x, int digits);

inline double rat_double(const Rat& x) { return x.get_d(); }

Rat rat_pow(const Rat& base, unsigned long exp);

inline Rat rat_abs(const Rat& x) { return x < 0 ? Rat(-x) : x; }

}  // namespace persuade
