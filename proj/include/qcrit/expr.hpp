#pragma once

#include <memory>
#include <string>

namespace qcrit {

/// Arithmetic over the node coordinates {x, y}: binary + - * / ^ (right
/// associative power), unary minus, sin cos exp log abs, min(a,b) max(a,b),
/// and the constants pi and e.  Parse errors name the offending position.
class Expr {
public:
    static Expr parse(const std::string& text);
    double eval(double x, double y) const;
    const std::string& text() const { return text_; }

    struct Node;

private:
    std::shared_ptr<const Node> root_;
    std::string text_;
};

}  // namespace qcrit
