#include "rbsaddle/affine.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace rbs {

ThetaExpr::Ptr ThetaExpr::constant(double c) {
    return Ptr(new ThetaExpr(Kind::Const, c, 0, nullptr, nullptr));
}

ThetaExpr::Ptr ThetaExpr::coord(int i) {
    return Ptr(new ThetaExpr(Kind::Coord, 0.0, i, nullptr, nullptr));
}

ThetaExpr::Ptr ThetaExpr::add(Ptr a, Ptr b) {
    return Ptr(new ThetaExpr(Kind::Add, 0.0, 0, std::move(a), std::move(b)));
}

ThetaExpr::Ptr ThetaExpr::sub(Ptr a, Ptr b) {
    return Ptr(new ThetaExpr(Kind::Sub, 0.0, 0, std::move(a), std::move(b)));
}

ThetaExpr::Ptr ThetaExpr::mul(Ptr a, Ptr b) {
    return Ptr(new ThetaExpr(Kind::Mul, 0.0, 0, std::move(a), std::move(b)));
}

ThetaExpr::Ptr ThetaExpr::div(Ptr a, Ptr b) {
    return Ptr(new ThetaExpr(Kind::Div, 0.0, 0, std::move(a), std::move(b)));
}

double ThetaExpr::eval(const Vector& mu) const {
    switch (kind_) {
    case Kind::Const: return value_;
    case Kind::Coord:
        if (index_ < 0 || index_ >= mu.size())
            throw OutOfDomain("theta coordinate index out of range");
        return mu[index_];
    case Kind::Add: return lhs_->eval(mu) + rhs_->eval(mu);
    case Kind::Sub: return lhs_->eval(mu) - rhs_->eval(mu);
    case Kind::Mul: return lhs_->eval(mu) * rhs_->eval(mu);
    case Kind::Div: return lhs_->eval(mu) / rhs_->eval(mu);
    }
    return 0.0;
}

std::string ThetaExpr::serialize() const {
    std::ostringstream out;
    switch (kind_) {
    case Kind::Const: {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", value_);
        out << "(c " << buf << ")";
        break;
    }
    case Kind::Coord: out << "(m " << index_ << ")"; break;
    case Kind::Add: out << "(+ " << lhs_->serialize() << " " << rhs_->serialize() << ")"; break;
    case Kind::Sub: out << "(- " << lhs_->serialize() << " " << rhs_->serialize() << ")"; break;
    case Kind::Mul: out << "(* " << lhs_->serialize() << " " << rhs_->serialize() << ")"; break;
    case Kind::Div: out << "(/ " << lhs_->serialize() << " " << rhs_->serialize() << ")"; break;
    }
    return out.str();
}

namespace {

struct Parser {
    const std::string& text;
    size_t pos = 0;

    void skip() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    char peek() {
        skip();
        if (pos >= text.size()) throw Error("theta parse: unexpected end of input");
        return text[pos];
    }

    void expect(char c) {
        if (peek() != c) throw Error(std::string("theta parse: expected '") + c + "'");
        ++pos;
    }

    Theta node() {
        expect('(');
        skip();
        const char op = text[pos++];
        Theta result;
        switch (op) {
        case 'c': {
            skip();
            size_t end;
            const double v = std::stod(text.substr(pos), &end);
            pos += end;
            result = ThetaExpr::constant(v);
            break;
        }
        case 'm': {
            skip();
            size_t end;
            const int i = std::stoi(text.substr(pos), &end);
            pos += end;
            result = ThetaExpr::coord(i);
            break;
        }
        case '+':
        case '-':
        case '*':
        case '/': {
            // sequence the recursive calls explicitly: C++ does not fix the
            // evaluation order of function arguments
            Theta lhs = node();
            Theta rhs = node();
            if (op == '+') result = ThetaExpr::add(std::move(lhs), std::move(rhs));
            else if (op == '-') result = ThetaExpr::sub(std::move(lhs), std::move(rhs));
            else if (op == '*') result = ThetaExpr::mul(std::move(lhs), std::move(rhs));
            else result = ThetaExpr::div(std::move(lhs), std::move(rhs));
            break;
        }
        default: throw Error("theta parse: unknown operator");
        }
        expect(')');
        return result;
    }
};

} // namespace

ThetaExpr::Ptr ThetaExpr::parse(const std::string& text) {
    Parser p{text};
    Theta result = p.node();
    p.skip();
    if (p.pos != text.size()) throw Error("theta parse: trailing characters");
    return result;
}

} // namespace rbs
