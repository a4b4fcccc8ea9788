#pragma once

#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sfarg {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;

// Input that violates a documented precondition.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A computation could not meet its accuracy or consistency contract.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Neumaier's variant of Kahan summation.
class CompensatedSum {
public:
    CompensatedSum() = default;
    explicit CompensatedSum(double init) : sum_(init) {}

    void add(double x)
    {
        double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    CompensatedSum& operator+=(double x) { add(x); return *this; }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

class CompensatedComplexSum {
public:
    void add(cplx z) { re_.add(z.real()); im_.add(z.imag()); }
    CompensatedComplexSum& operator+=(cplx z) { add(z); return *this; }
    cplx value() const { return {re_.value(), im_.value()}; }

private:
    CompensatedSum re_, im_;
};

// 15 significant digits, the interchange format of every table and cache file.
inline std::string fmt15(double x)
{
    if (x == 0.0) return "0";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", x);
    return buf;
}

} // namespace sfarg
