#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace enclosure {

/// Value together with its first and second derivative in x.
struct Jet {
    double v = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

/// Parsed arithmetic expression in one variable `x`.
///
/// Grammar: numbers, `x`, `+ - * / ^`, unary minus, parentheses and the
/// functions exp, log, sqrt. `^` is right-associative and binds tighter than
/// unary minus (`-x^2` is `-(x^2)`). Derivatives are propagated exactly
/// through the expression tree, so no finite differencing is involved.
class Expression {
public:
    static Expression parse(std::string_view text);

    double operator()(double x) const { return eval(x).v; }
    Jet eval(double x) const;

    const std::string& text() const { return text_; }

    struct Node;

private:
    std::shared_ptr<const Node> root_;
    std::string text_;
};

} // namespace enclosure
