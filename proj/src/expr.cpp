#include "qcrit/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "qcrit/common.hpp"

namespace qcrit {

struct Expr::Node {
    enum class Kind { Num, VarX, VarY, Neg, Add, Sub, Mul, Div, Pow, Fn1, Fn2 };
    enum class Fn { Sin, Cos, Exp, Log, Abs, Min, Max };

    Kind kind = Kind::Num;
    Fn fn = Fn::Sin;
    double value = 0.0;
    std::shared_ptr<const Node> a, b;
};

namespace {

using Node = Expr::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

NodePtr num(double v) {
    Node n;
    n.kind = Node::Kind::Num;
    n.value = v;
    return make(n);
}

NodePtr binary(Node::Kind k, NodePtr a, NodePtr b) {
    Node n;
    n.kind = k;
    n.a = std::move(a);
    n.b = std::move(b);
    return make(n);
}

struct Parser {
    const std::string& s;
    std::size_t pos = 0;

    explicit Parser(const std::string& text) : s(text) {}

    [[noreturn]] void fail(const std::string& msg) const {
        throw InvalidInput("expression: " + msg + " at position " + std::to_string(pos) +
                           " in '" + s + "'");
    }

    void skip_ws() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos < s.size() ? s[pos] : '\0';
    }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            if (eat('+'))
                lhs = binary(Node::Kind::Add, lhs, parse_term());
            else if (eat('-'))
                lhs = binary(Node::Kind::Sub, lhs, parse_term());
            else
                return lhs;
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_unary();
        for (;;) {
            if (eat('*'))
                lhs = binary(Node::Kind::Mul, lhs, parse_unary());
            else if (eat('/'))
                lhs = binary(Node::Kind::Div, lhs, parse_unary());
            else
                return lhs;
        }
    }

    NodePtr parse_unary() {
        if (eat('-')) {
            Node n;
            n.kind = Node::Kind::Neg;
            n.a = parse_unary();
            return make(n);
        }
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        if (eat('^')) return binary(Node::Kind::Pow, base, parse_unary());
        return base;
    }

    NodePtr parse_primary() {
        skip_ws();
        if (pos >= s.size()) fail("unexpected end of input");
        char c = s[pos];
        if (c == '(') {
            ++pos;
            NodePtr inner = parse_expr();
            if (!eat(')')) fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
        fail(std::string("unexpected character '") + c + "'");
    }

    NodePtr parse_number() {
        const char* begin = s.c_str() + pos;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) fail("malformed number");
        pos += static_cast<std::size_t>(end - begin);
        return num(v);
    }

    NodePtr parse_ident() {
        std::size_t start = pos;
        while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
            ++pos;
        std::string name = s.substr(start, pos - start);
        if (name == "x") {
            Node n;
            n.kind = Node::Kind::VarX;
            return make(n);
        }
        if (name == "y") {
            Node n;
            n.kind = Node::Kind::VarY;
            return make(n);
        }
        if (name == "pi") return num(3.14159265358979323846);
        if (name == "e") return num(2.71828182845904523536);

        Node::Fn fn;
        int arity = 1;
        if (name == "sin") fn = Node::Fn::Sin;
        else if (name == "cos") fn = Node::Fn::Cos;
        else if (name == "exp") fn = Node::Fn::Exp;
        else if (name == "log") fn = Node::Fn::Log;
        else if (name == "abs") fn = Node::Fn::Abs;
        else if (name == "min") { fn = Node::Fn::Min; arity = 2; }
        else if (name == "max") { fn = Node::Fn::Max; arity = 2; }
        else {
            pos = start;
            fail("unknown name '" + name + "'");
        }

        if (!eat('(')) fail("expected '(' after '" + name + "'");
        Node n;
        n.kind = arity == 1 ? Node::Kind::Fn1 : Node::Kind::Fn2;
        n.fn = fn;
        n.a = parse_expr();
        if (arity == 2) {
            if (!eat(',')) fail("expected ',' in '" + name + "'");
            n.b = parse_expr();
        }
        if (!eat(')')) fail("expected ')' after '" + name + "' arguments");
        return make(n);
    }
};

double eval_node(const Node& n, double x, double y) {
    switch (n.kind) {
        case Node::Kind::Num: return n.value;
        case Node::Kind::VarX: return x;
        case Node::Kind::VarY: return y;
        case Node::Kind::Neg: return -eval_node(*n.a, x, y);
        case Node::Kind::Add: return eval_node(*n.a, x, y) + eval_node(*n.b, x, y);
        case Node::Kind::Sub: return eval_node(*n.a, x, y) - eval_node(*n.b, x, y);
        case Node::Kind::Mul: return eval_node(*n.a, x, y) * eval_node(*n.b, x, y);
        case Node::Kind::Div: return eval_node(*n.a, x, y) / eval_node(*n.b, x, y);
        case Node::Kind::Pow: return std::pow(eval_node(*n.a, x, y), eval_node(*n.b, x, y));
        case Node::Kind::Fn1: {
            double a = eval_node(*n.a, x, y);
            switch (n.fn) {
                case Node::Fn::Sin: return std::sin(a);
                case Node::Fn::Cos: return std::cos(a);
                case Node::Fn::Exp: return std::exp(a);
                case Node::Fn::Log: return std::log(a);
                default: return std::fabs(a);
            }
        }
        default: {
            double a = eval_node(*n.a, x, y);
            double b = eval_node(*n.b, x, y);
            return n.fn == Node::Fn::Min ? std::min(a, b) : std::max(a, b);
        }
    }
}

}  // namespace

Expr Expr::parse(const std::string& text) {
    Parser p(text);
    Expr e;
    e.root_ = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("trailing input");
    e.text_ = text;
    return e;
}

double Expr::eval(double x, double y) const {
    if (!root_) throw InvalidInput("expression: evaluating an empty expression");
    return eval_node(*root_, x, y);
}

}  // namespace qcrit
