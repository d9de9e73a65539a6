#pragma once

// Coordinate expression language: parser, AST, serializer and Jet2 evaluator.
//
// Grammar (standard precedence, ^ binds tightest and associates right):
//   expr    := term (('+'|'-') term)*
//   term    := factor (('*'|'/') factor)*
//   factor  := '-' factor | power
//   power   := primary ('^' factor)?
//   primary := number | coord | const | fn '(' expr (',' expr)? ')' | '(' expr ')'
// Functions: sin cos tan exp ln sqrt sinh cosh tanh abs pow. Constants: pi, e.
//
// The AST is an index-based arena so Expression is cheaply copyable and the
// nodes can carry source offsets for error messages.

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "varpath/jet.hpp"

namespace varpath {

struct ParseError : Error {
    ParseError(const std::string& msg, size_t offset)
        : Error(msg + " at offset " + std::to_string(offset)), offset(offset) {}
    size_t offset;
};

enum class NodeKind : uint8_t { Literal, Coord, Neg, Binary, Call };
enum class BinOp : uint8_t { Add, Sub, Mul, Div, Pow };
enum class Func : uint8_t { Sin, Cos, Tan, Exp, Ln, Sqrt, Sinh, Cosh, Tanh, Abs, Pow };

struct Node {
    NodeKind kind{};
    BinOp op{};
    Func fn{};
    double lit = 0.0;
    int coord = -1;
    int lhs = -1;
    int rhs = -1;
    bool varies = false;  // depends on at least one coordinate
};

class Expression;
Expression parse(const std::string& text, const std::vector<std::string>& coords);

class Expression {
public:
    Expression() = default;

    int dim() const { return dim_; }
    const std::set<int>& free_coords() const { return free_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    int root() const { return root_; }
    bool empty() const { return root_ < 0; }

    static Expression literal(int dim, double v) {
        Expression e;
        e.dim_ = dim;
        Node n;
        n.kind = NodeKind::Literal;
        n.lit = v;
        e.nodes_.push_back(n);
        e.root_ = 0;
        return e;
    }

    std::string str() const { return empty() ? std::string() : print(root_); }

    friend bool operator==(const Expression& a, const Expression& b) {
        if (a.dim_ != b.dim_) return false;
        if (a.empty() || b.empty()) return a.empty() == b.empty();
        return a.equal(a.root_, b, b.root_);
    }

    Jet2 evaluate(std::span<const double> x, int order) const {
        if (empty()) throw EvalError("empty expression");
        if (static_cast<int>(x.size()) != dim_)
            throw EvalError("point dimension " + std::to_string(x.size()) +
                            " does not match expression dimension " + std::to_string(dim_));
        return eval(root_, x, order);
    }

private:
    friend Expression parse(const std::string&, const std::vector<std::string>&);
    friend class Parser;

    Jet2 eval(int id, std::span<const double> x, int order) const {
        const Node& n = nodes_[id];
        const int dim = dim_;
        switch (n.kind) {
            case NodeKind::Literal:
                return Jet2::constant(dim, order, n.lit);
            case NodeKind::Coord:
                return Jet2::variable(dim, order, n.coord, x[n.coord]);
            case NodeKind::Neg:
                return -eval(n.lhs, x, order);
            case NodeKind::Binary: {
                if (n.op == BinOp::Pow) return eval_pow(n, x, order);
                Jet2 a = eval(n.lhs, x, order);
                Jet2 b = eval(n.rhs, x, order);
                try {
                    switch (n.op) {
                        case BinOp::Add: return a + b;
                        case BinOp::Sub: return a - b;
                        case BinOp::Mul: return a * b;
                        default: return a / b;
                    }
                } catch (const EvalError& err) {
                    rethrow(err, id);
                }
            }
            case NodeKind::Call: {
                if (n.fn == Func::Pow) return eval_pow(n, x, order);
                Jet2 a = eval(n.lhs, x, order);
                try {
                    switch (n.fn) {
                        case Func::Sin: return sin(a);
                        case Func::Cos: return cos(a);
                        case Func::Tan: return tan(a);
                        case Func::Exp: return exp(a);
                        case Func::Ln: return ln(a);
                        case Func::Sqrt: return sqrt(a);
                        case Func::Sinh: return sinh(a);
                        case Func::Cosh: return cosh(a);
                        case Func::Tanh: return tanh(a);
                        default: return abs(a);
                    }
                } catch (const EvalError& err) {
                    rethrow(err, id);
                }
            }
        }
        throw EvalError("corrupt expression node");
    }

    // A constant integer exponent selects repeated multiplication (valid for
    // negative bases). Constancy is structural (no free coordinates in the
    // exponent subtree) so the choice is independent of evaluation order.
    Jet2 eval_pow(const Node& n, std::span<const double> x, int order) const {
        Jet2 base = eval(n.lhs, x, order);
        if (!nodes_[n.rhs].varies) {
            double ev = eval(n.rhs, x, 0).value();
            double rounded = std::nearbyint(ev);
            if (ev == rounded && std::abs(ev) <= 64.0) {
                try {
                    return powi(base, static_cast<long long>(rounded));
                } catch (const EvalError& err) {
                    rethrow(err, node_id(n));
                }
            }
        }
        Jet2 expo = eval(n.rhs, x, order);
        try {
            return pow(base, expo);
        } catch (const EvalError& err) {
            rethrow(err, node_id(n));
        }
    }

    int node_id(const Node& n) const { return static_cast<int>(&n - nodes_.data()); }

    [[noreturn]] void rethrow(const EvalError& err, int id) const {
        throw EvalError(std::string(err.what()) + " in '" + print(id) + "'");
    }

    bool equal(int ia, const Expression& other, int ib) const {
        const Node& a = nodes_[ia];
        const Node& b = other.nodes_[ib];
        if (a.kind != b.kind) return false;
        switch (a.kind) {
            case NodeKind::Literal: return a.lit == b.lit;
            case NodeKind::Coord: return a.coord == b.coord;
            case NodeKind::Neg: return equal(a.lhs, other, b.lhs);
            case NodeKind::Binary:
                return a.op == b.op && equal(a.lhs, other, b.lhs) && equal(a.rhs, other, b.rhs);
            case NodeKind::Call:
                if (a.fn != b.fn) return false;
                if (!equal(a.lhs, other, b.lhs)) return false;
                return a.rhs < 0 ? b.rhs < 0 : (b.rhs >= 0 && equal(a.rhs, other, b.rhs));
        }
        return false;
    }

    static int precedence_of(const Node& n) {
        switch (n.kind) {
            case NodeKind::Binary:
                switch (n.op) {
                    case BinOp::Add:
                    case BinOp::Sub: return 1;
                    case BinOp::Mul:
                    case BinOp::Div: return 2;
                    default: return 4;  // Pow
                }
            case NodeKind::Neg: return 3;
            default: return 5;
        }
    }

    std::string print(int id) const {
        const Node& n = nodes_[id];
        switch (n.kind) {
            case NodeKind::Literal: return format_double(n.lit);
            case NodeKind::Coord: return coords_[n.coord];
            case NodeKind::Neg: {
                std::string inner = print(n.lhs);
                if (precedence_of(nodes_[n.lhs]) < 3) inner = "(" + inner + ")";
                return "-" + inner;
            }
            case NodeKind::Binary: {
                int p = precedence_of(n);
                std::string l = print(n.lhs);
                std::string r = print(n.rhs);
                // '-' and '/' need parens around same-precedence right operands;
                // '^' is right-associative so the left operand needs them instead.
                bool lp = precedence_of(nodes_[n.lhs]) < p ||
                          (n.op == BinOp::Pow && precedence_of(nodes_[n.lhs]) == p);
                bool rp = precedence_of(nodes_[n.rhs]) < p ||
                          ((n.op == BinOp::Sub || n.op == BinOp::Div) &&
                           precedence_of(nodes_[n.rhs]) == p);
                if (lp) l = "(" + l + ")";
                if (rp) r = "(" + r + ")";
                const char* op = n.op == BinOp::Add   ? " + "
                                 : n.op == BinOp::Sub ? " - "
                                 : n.op == BinOp::Mul ? "*"
                                 : n.op == BinOp::Div ? "/"
                                                      : "^";
                return l + op + r;
            }
            case NodeKind::Call: {
                static const char* names[] = {"sin",  "cos",  "tan",  "exp", "ln", "sqrt",
                                              "sinh", "cosh", "tanh", "abs", "pow"};
                std::string s = std::string(names[static_cast<int>(n.fn)]) + "(" + print(n.lhs);
                if (n.rhs >= 0) s += ", " + print(n.rhs);
                return s + ")";
            }
        }
        return {};
    }

    // shortest decimal form that parses back to the identical double
    static std::string format_double(double v) {
        char buf[40];
        for (int prec = 15; prec <= 17; ++prec) {
            std::snprintf(buf, sizeof buf, "%.*g", prec, v);
            if (std::strtod(buf, nullptr) == v) break;
        }
        return buf;
    }

    int dim_ = 0;
    int root_ = -1;
    std::vector<Node> nodes_;
    std::vector<std::string> coords_;
    std::set<int> free_;
};

namespace detail {

enum class Tok : uint8_t { Num, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
    Tok kind;
    size_t offset;
    std::string text;
    double value = 0.0;
};

inline std::vector<Token> lex(const std::string& s) {
    std::vector<Token> out;
    size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            ++i;
            continue;
        }
        size_t start = i;
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
            while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
            if (i < s.size() && s[i] == '.') {
                ++i;
                while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
            }
            if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
                size_t j = i + 1;
                if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
                if (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
                    i = j;
                    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
                }
            }
            Token t{Tok::Num, start, s.substr(start, i - start)};
            t.value = std::strtod(t.text.c_str(), nullptr);
            out.push_back(std::move(t));
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < s.size() &&
                   (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_'))
                ++i;
            out.push_back({Tok::Ident, start, s.substr(start, i - start)});
            continue;
        }
        Tok k;
        switch (c) {
            case '+': k = Tok::Plus; break;
            case '-': k = Tok::Minus; break;
            case '*': k = Tok::Star; break;
            case '/': k = Tok::Slash; break;
            case '^': k = Tok::Caret; break;
            case '(': k = Tok::LParen; break;
            case ')': k = Tok::RParen; break;
            case ',': k = Tok::Comma; break;
            default:
                throw ParseError(std::string("unexpected character '") + c + "'", start);
        }
        out.push_back({k, start, s.substr(start, 1)});
        ++i;
    }
    out.push_back({Tok::End, s.size(), ""});
    return out;
}

}  // namespace detail

class Parser {
public:
    Parser(const std::string& text, const std::vector<std::string>& coords)
        : toks_(detail::lex(text)) {
        expr_.dim_ = static_cast<int>(coords.size());
        expr_.coords_ = coords;
    }

    Expression run() {
        expr_.root_ = parse_expr();
        if (peek().kind != detail::Tok::End)
            throw ParseError("unexpected trailing input '" + peek().text + "'", peek().offset);
        for (const Node& n : expr_.nodes_)
            if (n.kind == NodeKind::Coord) expr_.free_.insert(n.coord);
        return std::move(expr_);
    }

private:
    using Tok = detail::Tok;

    const detail::Token& peek() const { return toks_[pos_]; }
    const detail::Token& advance() { return toks_[pos_++]; }
    bool accept(Tok k) {
        if (peek().kind != k) return false;
        ++pos_;
        return true;
    }
    void expect(Tok k, const char* what) {
        if (!accept(k))
            throw ParseError(std::string("expected ") + what + " before '" +
                                 (peek().kind == Tok::End ? "end of input" : peek().text) + "'",
                             peek().offset);
    }

    int add(Node n) {
        switch (n.kind) {
            case NodeKind::Literal: n.varies = false; break;
            case NodeKind::Coord: n.varies = true; break;
            default:
                n.varies = (n.lhs >= 0 && expr_.nodes_[n.lhs].varies) ||
                           (n.rhs >= 0 && expr_.nodes_[n.rhs].varies);
        }
        expr_.nodes_.push_back(n);
        return static_cast<int>(expr_.nodes_.size() - 1);
    }

    int parse_expr() {
        int lhs = parse_term();
        while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
            BinOp op = advance().kind == Tok::Plus ? BinOp::Add : BinOp::Sub;
            int rhs = parse_term();
            Node n;
            n.kind = NodeKind::Binary;
            n.op = op;
            n.lhs = lhs;
            n.rhs = rhs;
            lhs = add(n);
        }
        return lhs;
    }

    int parse_term() {
        int lhs = parse_factor();
        while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
            BinOp op = advance().kind == Tok::Star ? BinOp::Mul : BinOp::Div;
            int rhs = parse_factor();
            Node n;
            n.kind = NodeKind::Binary;
            n.op = op;
            n.lhs = lhs;
            n.rhs = rhs;
            lhs = add(n);
        }
        return lhs;
    }

    int parse_factor() {
        if (accept(Tok::Minus)) {
            Node n;
            n.kind = NodeKind::Neg;
            n.lhs = parse_factor();
            return add(n);
        }
        return parse_power();
    }

    int parse_power() {
        int base = parse_primary();
        if (accept(Tok::Caret)) {
            Node n;
            n.kind = NodeKind::Binary;
            n.op = BinOp::Pow;
            n.lhs = base;
            n.rhs = parse_factor();  // right-associative, allows -x in exponent
            return add(n);
        }
        return base;
    }

    int parse_primary() {
        const detail::Token& t = advance();
        switch (t.kind) {
            case Tok::Num: {
                Node n;
                n.kind = NodeKind::Literal;
                n.lit = t.value;
                return add(n);
            }
            case Tok::LParen: {
                int inner = parse_expr();
                expect(Tok::RParen, "')'");
                return inner;
            }
            case Tok::Ident: return parse_ident(t);
            default:
                throw ParseError("unexpected token '" +
                                     (t.kind == Tok::End ? "end of input" : t.text) + "'",
                                 t.offset);
        }
    }

    int parse_ident(const detail::Token& t) {
        // coordinates shadow constants and function names
        for (int c = 0; c < expr_.dim_; ++c)
            if (expr_.coords_[c] == t.text) {
                Node n;
                n.kind = NodeKind::Coord;
                n.coord = c;
                return add(n);
            }
        if (peek().kind == Tok::LParen) {
            static const std::pair<const char*, Func> fns[] = {
                {"sin", Func::Sin},   {"cos", Func::Cos},   {"tan", Func::Tan},
                {"exp", Func::Exp},   {"ln", Func::Ln},     {"sqrt", Func::Sqrt},
                {"sinh", Func::Sinh}, {"cosh", Func::Cosh}, {"tanh", Func::Tanh},
                {"abs", Func::Abs},   {"pow", Func::Pow}};
            for (auto [name, fn] : fns)
                if (t.text == name) return parse_call(t, fn);
            throw ParseError("unknown function '" + t.text + "'", t.offset);
        }
        if (t.text == "pi") {
            Node n;
            n.kind = NodeKind::Literal;
            n.lit = 3.14159265358979323846;
            return add(n);
        }
        if (t.text == "e") {
            Node n;
            n.kind = NodeKind::Literal;
            n.lit = 2.71828182845904523536;
            return add(n);
        }
        throw ParseError("unknown identifier '" + t.text + "'", t.offset);
    }

    int parse_call(const detail::Token& t, Func fn) {
        expect(Tok::LParen, "'('");
        int a = parse_expr();
        int b = -1;
        if (accept(Tok::Comma)) b = parse_expr();
        expect(Tok::RParen, "')'");
        const bool binary = fn == Func::Pow;
        if (binary != (b >= 0))
            throw ParseError("function '" + t.text + "' expects " + (binary ? "2" : "1") +
                                 (binary ? " arguments" : " argument"),
                             t.offset);
        if (fn == Func::Pow) {
            // pow(a, b) and a^b share one node form
            Node n;
            n.kind = NodeKind::Binary;
            n.op = BinOp::Pow;
            n.lhs = a;
            n.rhs = b;
            return add(n);
        }
        Node n;
        n.kind = NodeKind::Call;
        n.fn = fn;
        n.lhs = a;
        n.rhs = b;
        return add(n);
    }

    std::vector<detail::Token> toks_;
    size_t pos_ = 0;
    Expression expr_;
};

inline Expression parse(const std::string& text, const std::vector<std::string>& coords) {
    return Parser(text, coords).run();
}

inline Jet2 evaluate_jet(const Expression& e, std::span<const double> x, int order) {
    return e.evaluate(x, order);
}

}  // namespace varpath
