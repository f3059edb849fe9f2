#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

namespace enclosure {

using cplx = std::complex<double>;

/// A complex number stored as its complex logarithm, so that factors such as
/// exp(2 z a) with |z| in the thousands neither overflow nor underflow.
/// Zero is represented by a logarithm with real part -inf.
class LogComplex {
public:
    LogComplex() : log_(-std::numeric_limits<double>::infinity(), 0.0) {}

    static LogComplex from_log(cplx l) {
        LogComplex r;
        r.log_ = l;
        return r;
    }
    static LogComplex from_value(cplx v) {
        if (v == cplx(0.0, 0.0)) return {};
        return from_log(std::log(v));
    }
    /// exp(phase) without evaluating it.
    static LogComplex exp(cplx phase) { return from_log(phase); }

    bool is_zero() const { return std::isinf(log_.real()) && log_.real() < 0; }
    cplx log() const { return log_; }
    double log_abs() const { return log_.real(); }
    double arg() const { return log_.imag(); }
    cplx value() const { return is_zero() ? cplx(0.0, 0.0) : std::exp(log_); }

    friend LogComplex operator*(LogComplex a, LogComplex b) {
        if (a.is_zero() || b.is_zero()) return {};
        return from_log(a.log_ + b.log_);
    }
    friend LogComplex operator/(LogComplex a, LogComplex b) {
        if (a.is_zero()) return {};
        return from_log(a.log_ - b.log_);
    }
    friend LogComplex operator*(LogComplex a, cplx b) { return a * from_value(b); }
    friend LogComplex operator*(cplx b, LogComplex a) { return a * from_value(b); }
    friend LogComplex operator-(LogComplex a) {
        if (a.is_zero()) return a;
        return from_log(a.log_ + cplx(0.0, std::numbers::pi));
    }
    friend LogComplex operator+(LogComplex a, LogComplex b) {
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        if (b.log_.real() > a.log_.real()) std::swap(a, b);
        cplx s = 1.0 + std::exp(b.log_ - a.log_);
        if (s == cplx(0.0, 0.0)) return {};
        return from_log(a.log_ + std::log(s));
    }
    friend LogComplex operator-(LogComplex a, LogComplex b) { return a + (-b); }

private:
    cplx log_;
};

} // namespace enclosure
