#include "persuade/rational.hpp"

#include <cctype>

#include "persuade/errors.hpp"

namespace persuade {

namespace {

bool all_digits(const std::string& s, std::size_t from) {
    if (from >= s.size()) return false;
    for (std::size_t i = from; i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

bool valid_int(const std::string& s) {
    std::size_t from = (!s.empty() && (s[0] == '-' || s[0] == '+')) ? 1 : 0;
    return all_digits(s, from);
}

}  // namespace

Rat parse_rat(const std::string& text) {
    auto slash = text.find('/');
    if (slash == std::string::npos) {
        if (!valid_int(text))
            throw SolverError(Errc::ParseError, "not a rational: '" + text + "'");
        return Rat(mpz_class(text));
    }
    std::string num = text.substr(0, slash);
    std::string den = text.substr(slash + 1);
    if (!valid_int(num) || !all_digits(den, 0))
        throw SolverError(Errc::ParseError, "not a rational: '" + text + "'");
    mpz_class d(den);
    if (d == 0)
        throw SolverError(Errc::ParseError, "zero denominator in '" + text + "'");
    Rat r(mpz_class(num), d);
    r.canonicalize();
    return r;
}

std::string rat_str(const Rat& x) {
    if (x.get_den() == 1) return x.get_num().get_str();
    return x.get_num().get_str() + "/" + x.get_den().get_str();
}

std::string rat_decimal(const Rat& x, int digits) {
    if (digits < 0) digits = 0;
    bool neg = x < 0;
    Rat ax = rat_abs(x);
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(digits));
    // round(ax * 10^digits), half away from zero
    mpz_class num = ax.get_num() * scale;
    mpz_class den = ax.get_den();
    mpz_class q, r;
    mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    if (2 * r >= den) q += 1;
    std::string s = q.get_str();
    if (digits > 0) {
        if (s.size() <= static_cast<std::size_t>(digits))
            s.insert(0, static_cast<std::size_t>(digits) + 1 - s.size(), '0');
        s.insert(s.size() - static_cast<std::size_t>(digits), ".");
    }
    return neg && q != 0 ? "-" + s : s;
}

Rat rat_pow(const Rat& base, unsigned long exp) {
    Rat out;
    mpz_pow_ui(out.get_num_mpz_t(), base.get_num_mpz_t(), exp);
    mpz_pow_ui(out.get_den_mpz_t(), base.get_den_mpz_t(), exp);
    out.canonicalize();
    return out;
}

}  // namespace persuade
