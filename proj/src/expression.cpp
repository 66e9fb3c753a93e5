#include "expression.hpp"

#include "error.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace stickysim {

namespace {

enum class Fn { exp_, log_, sqrt_, sin_, cos_, abs_ };

constexpr std::array<const char*, 6> kFnNames = {"exp", "log", "sqrt", "sin", "cos", "abs"};

const char* fn_name(Fn f) { return kFnNames[static_cast<int>(f)]; }

std::string fmt_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

struct Expression::Node {
    enum class Kind { number, var, neg, add, sub, mul, div, pow, call, piecewise };

    Kind kind;
    double value = 0.0;          // number
    Fn fn = Fn::exp_;            // call
    std::vector<std::shared_ptr<const Node>> kids;
    std::vector<double> breaks;  // piecewise
    std::uint32_t offset = 0;    // byte offset in the source text, 0 for built trees
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make_number(double v, std::uint32_t off = 0) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::number;
    n->value = v;
    n->offset = off;
    return n;
}

NodePtr make_var(std::uint32_t off = 0) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::var;
    n->offset = off;
    return n;
}

NodePtr make_node(Node::Kind kind, std::vector<NodePtr> kids, std::uint32_t off = 0) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->kids = std::move(kids);
    n->offset = off;
    return n;
}

NodePtr make_call(Fn fn, NodePtr arg, std::uint32_t off = 0) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::call;
    n->fn = fn;
    n->kids = {std::move(arg)};
    n->offset = off;
    return n;
}

NodePtr make_piecewise(std::vector<double> breaks, std::vector<NodePtr> pieces, std::uint32_t off = 0) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::piecewise;
    n->breaks = std::move(breaks);
    n->kids = std::move(pieces);
    n->offset = off;
    return n;
}

[[noreturn]] void eval_fail(const Node& n, const std::string& what) {
    fail(errc::numerical_failure, "evaluation error at byte " + std::to_string(n.offset) + ": " + what);
}

double eval_node(const Node& n, double x) {
    switch (n.kind) {
    case Node::Kind::number: return n.value;
    case Node::Kind::var: return x;
    case Node::Kind::neg: return -eval_node(*n.kids[0], x);
    case Node::Kind::add: return eval_node(*n.kids[0], x) + eval_node(*n.kids[1], x);
    case Node::Kind::sub: return eval_node(*n.kids[0], x) - eval_node(*n.kids[1], x);
    case Node::Kind::mul: return eval_node(*n.kids[0], x) * eval_node(*n.kids[1], x);
    case Node::Kind::div: {
        const double den = eval_node(*n.kids[1], x);
        if (den == 0.0) eval_fail(n, "division by zero");
        return eval_node(*n.kids[0], x) / den;
    }
    case Node::Kind::pow: {
        const double b = eval_node(*n.kids[0], x);
        const double e = eval_node(*n.kids[1], x);
        if (b == 0.0 && e < 0.0) eval_fail(n, "zero raised to a negative power");
        const double r = std::pow(b, e);
        if (std::isnan(r)) eval_fail(n, "invalid power");
        return r;
    }
    case Node::Kind::call: {
        const double a = eval_node(*n.kids[0], x);
        switch (n.fn) {
        case Fn::exp_: return std::exp(a);
        case Fn::log_:
            if (a <= 0.0) eval_fail(n, "log of a non-positive value");
            return std::log(a);
        case Fn::sqrt_:
            if (a < 0.0) eval_fail(n, "sqrt of a negative value");
            return std::sqrt(a);
        case Fn::sin_: return std::sin(a);
        case Fn::cos_: return std::cos(a);
        case Fn::abs_: return std::fabs(a);
        }
        eval_fail(n, "unknown function");
    }
    case Node::Kind::piecewise: {
        std::size_t i = 0;
        while (i < n.breaks.size() && x >= n.breaks[i]) ++i;
        return eval_node(*n.kids[i], x);
    }
    }
    eval_fail(n, "corrupt expression tree");
}

// ---- parser ----------------------------------------------------------

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    NodePtr run() {
        NodePtr e = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) err("unexpected trailing input");
        return e;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    [[noreturn]] void err(const std::string& what) const {
        fail(errc::invalid_argument,
             "syntax error at byte " + std::to_string(pos_) + ": " + what);
    }

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' ||
                                       text_[pos_] == '\n' || text_[pos_] == '\r'))
            ++pos_;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    bool consume(char c) {
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            const std::uint32_t off = static_cast<std::uint32_t>(pos_);
            if (consume('+'))
                lhs = make_node(Node::Kind::add, {lhs, parse_term()}, off);
            else if (consume('-'))
                lhs = make_node(Node::Kind::sub, {lhs, parse_term()}, off);
            else
                return lhs;
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_unary();
        for (;;) {
            const std::uint32_t off = static_cast<std::uint32_t>(pos_);
            if (consume('*'))
                lhs = make_node(Node::Kind::mul, {lhs, parse_unary()}, off);
            else if (consume('/'))
                lhs = make_node(Node::Kind::div, {lhs, parse_unary()}, off);
            else
                return lhs;
        }
    }

    NodePtr parse_unary() {
        const std::uint32_t off = static_cast<std::uint32_t>(pos_);
        if (consume('-')) return make_node(Node::Kind::neg, {parse_unary()}, off);
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        const std::uint32_t off = static_cast<std::uint32_t>(pos_);
        if (consume('^')) return make_node(Node::Kind::pow, {base, parse_unary()}, off);
        return base;
    }

    NodePtr parse_primary() {
        const char c = peek();
        const std::uint32_t off = static_cast<std::uint32_t>(pos_);
        if (c == '(') {
            ++pos_;
            NodePtr e = parse_expr();
            if (!consume(')')) err("expected ')'");
            return e;
        }
        if ((c >= '0' && c <= '9') || c == '.') return parse_number();
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) return parse_ident(off);
        err("expected a number, 'x', a function call or '('");
    }

    NodePtr parse_number() {
        skip_ws();
        const char* begin = text_.data() + pos_;
        char* end = nullptr;
        // the underlying buffer is NUL-terminated by callers holding std::string
        const double v = std::strtod(begin, &end);
        if (end == begin) err("malformed number");
        const std::uint32_t off = static_cast<std::uint32_t>(pos_);
        pos_ += static_cast<std::size_t>(end - begin);
        return make_number(v, off);
    }

    NodePtr parse_ident(std::uint32_t off) {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               ((text_[pos_] >= 'a' && text_[pos_] <= 'z') ||
                (text_[pos_] >= 'A' && text_[pos_] <= 'Z') ||
                (text_[pos_] >= '0' && text_[pos_] <= '9') || text_[pos_] == '_'))
            ++pos_;
        std::string name(text_.substr(start, pos_ - start));
        if (name == "x") return make_var(off);
        if (name == "pw") return parse_piecewise(off);
        for (std::size_t i = 0; i < kFnNames.size(); ++i) {
            if (name == kFnNames[i]) {
                if (!consume('(')) err("expected '(' after function name");
                NodePtr arg = parse_expr();
                if (!consume(')')) err("expected ')'");
                return make_call(static_cast<Fn>(i), arg, off);
            }
        }
        pos_ = start;
        err("unknown identifier '" + name + "'");
    }

    NodePtr parse_piecewise(std::uint32_t off) {
        if (!consume('(')) err("expected '(' after pw");
        std::vector<NodePtr> args;
        args.push_back(parse_expr());
        while (consume(',')) args.push_back(parse_expr());
        if (!consume(')')) err("expected ')'");
        if (args.size() < 3 || args.size() % 2 == 0)
            err("pw needs an odd number of arguments: pw(e0, b1, e1, ...)");
        std::vector<double> breaks;
        std::vector<NodePtr> pieces;
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (i % 2 == 0) {
                pieces.push_back(args[i]);
            } else {
                try {
                    breaks.push_back(eval_node(*args[i], 0.0));
                } catch (const Error&) {
                    err("pw breakpoints must be constant");
                }
                // reject variable-dependent breakpoints
                if (std::abs(eval_node(*args[i], 1.0) - breaks.back()) != 0.0)
                    err("pw breakpoints must be constant");
            }
        }
        for (std::size_t i = 1; i < breaks.size(); ++i)
            if (!(breaks[i] > breaks[i - 1])) err("pw breakpoints must be strictly increasing");
        return make_piecewise(std::move(breaks), std::move(pieces), off);
    }
};

// ---- printer ---------------------------------------------------------

int precedence(const Node& n) {
    switch (n.kind) {
    case Node::Kind::add:
    case Node::Kind::sub: return 1;
    case Node::Kind::mul:
    case Node::Kind::div: return 2;
    case Node::Kind::neg: return 3;
    case Node::Kind::pow: return 4;
    default: return 5;
    }
}

void print_node(const Node& n, std::string& out);

void print_child(const Node& child, int min_prec, std::string& out) {
    if (precedence(child) < min_prec) {
        out += '(';
        print_node(child, out);
        out += ')';
    } else {
        print_node(child, out);
    }
}

void print_node(const Node& n, std::string& out) {
    switch (n.kind) {
    case Node::Kind::number:
        out += fmt_number(n.value);
        return;
    case Node::Kind::var:
        out += 'x';
        return;
    case Node::Kind::neg:
        out += '-';
        print_child(*n.kids[0], 3, out);
        return;
    case Node::Kind::add:
        print_child(*n.kids[0], 1, out);
        out += '+';
        print_child(*n.kids[1], 2, out);
        return;
    case Node::Kind::sub:
        print_child(*n.kids[0], 1, out);
        out += '-';
        print_child(*n.kids[1], 2, out);
        return;
    case Node::Kind::mul:
        print_child(*n.kids[0], 2, out);
        out += '*';
        print_child(*n.kids[1], 3, out);
        return;
    case Node::Kind::div:
        print_child(*n.kids[0], 2, out);
        out += '/';
        print_child(*n.kids[1], 3, out);
        return;
    case Node::Kind::pow:
        print_child(*n.kids[0], 5, out);
        out += '^';
        print_child(*n.kids[1], 4, out);
        return;
    case Node::Kind::call:
        out += fn_name(n.fn);
        out += '(';
        print_node(*n.kids[0], out);
        out += ')';
        return;
    case Node::Kind::piecewise:
        out += "pw(";
        for (std::size_t i = 0; i < n.kids.size(); ++i) {
            if (i > 0) {
                out += ',';
                out += fmt_number(n.breaks[i - 1]);
                out += ',';
            }
            print_node(*n.kids[i], out);
        }
        out += ')';
        return;
    }
}

// ---- structural equality ---------------------------------------------

bool same_node(const Node& a, const Node& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
    case Node::Kind::number:
        return a.value == b.value || (std::isnan(a.value) && std::isnan(b.value));
    case Node::Kind::var: return true;
    case Node::Kind::call:
        if (a.fn != b.fn) return false;
        break;
    case Node::Kind::piecewise:
        if (a.breaks != b.breaks) return false;
        break;
    default: break;
    }
    if (a.kids.size() != b.kids.size()) return false;
    for (std::size_t i = 0; i < a.kids.size(); ++i)
        if (!same_node(*a.kids[i], *b.kids[i])) return false;
    return true;
}

// ---- simplification ---------------------------------------------------

bool is_number(const NodePtr& n, double v) {
    return n->kind == Node::Kind::number && n->value == v;
}

bool node_has_var(const Node& n) {
    if (n.kind == Node::Kind::var) return true;
    for (const auto& k : n.kids)
        if (node_has_var(*k)) return true;
    return false;
}

NodePtr simplify_node(const NodePtr& n);

NodePtr fold_if_constant(const NodePtr& n) {
    if (n->kind == Node::Kind::number || node_has_var(*n)) return n;
    try {
        return make_number(eval_node(*n, 0.0), n->offset);
    } catch (const Error&) {
        return n; // e.g. log(-1): keep the tree, fail at evaluation time
    }
}

NodePtr simplify_node(const NodePtr& n) {
    if (n->kind == Node::Kind::number || n->kind == Node::Kind::var) return n;

    std::vector<NodePtr> kids;
    kids.reserve(n->kids.size());
    for (const auto& k : n->kids) kids.push_back(simplify_node(k));

    switch (n->kind) {
    case Node::Kind::neg:
        if (kids[0]->kind == Node::Kind::number) return make_number(-kids[0]->value, n->offset);
        if (kids[0]->kind == Node::Kind::neg) return kids[0]->kids[0];
        break;
    case Node::Kind::add:
        if (is_number(kids[0], 0.0)) return kids[1];
        if (is_number(kids[1], 0.0)) return kids[0];
        break;
    case Node::Kind::sub:
        if (is_number(kids[1], 0.0)) return kids[0];
        if (is_number(kids[0], 0.0))
            return simplify_node(make_node(Node::Kind::neg, {kids[1]}, n->offset));
        break;
    case Node::Kind::mul:
        if (is_number(kids[0], 0.0) || is_number(kids[1], 0.0)) return make_number(0.0, n->offset);
        if (is_number(kids[0], 1.0)) return kids[1];
        if (is_number(kids[1], 1.0)) return kids[0];
        break;
    case Node::Kind::div:
        if (is_number(kids[0], 0.0) && !is_number(kids[1], 0.0)) return make_number(0.0, n->offset);
        if (is_number(kids[1], 1.0)) return kids[0];
        break;
    case Node::Kind::pow:
        if (is_number(kids[1], 1.0)) return kids[0];
        if (is_number(kids[1], 0.0)) return make_number(1.0, n->offset);
        break;
    default:
        break;
    }

    auto rebuilt = std::make_shared<Node>(*n);
    rebuilt->kids = std::move(kids);
    return fold_if_constant(rebuilt);
}

// ---- differentiation ---------------------------------------------------

NodePtr diff_node(const NodePtr& n);

NodePtr d_mul(NodePtr a, NodePtr b) { return make_node(Node::Kind::mul, {std::move(a), std::move(b)}); }
NodePtr d_div(NodePtr a, NodePtr b) { return make_node(Node::Kind::div, {std::move(a), std::move(b)}); }
NodePtr d_add(NodePtr a, NodePtr b) { return make_node(Node::Kind::add, {std::move(a), std::move(b)}); }
NodePtr d_sub(NodePtr a, NodePtr b) { return make_node(Node::Kind::sub, {std::move(a), std::move(b)}); }
NodePtr d_neg(NodePtr a) { return make_node(Node::Kind::neg, {std::move(a)}); }

NodePtr diff_node(const NodePtr& n) {
    switch (n->kind) {
    case Node::Kind::number: return make_number(0.0);
    case Node::Kind::var: return make_number(1.0);
    case Node::Kind::neg: return d_neg(diff_node(n->kids[0]));
    case Node::Kind::add: return d_add(diff_node(n->kids[0]), diff_node(n->kids[1]));
    case Node::Kind::sub: return d_sub(diff_node(n->kids[0]), diff_node(n->kids[1]));
    case Node::Kind::mul:
        return d_add(d_mul(diff_node(n->kids[0]), n->kids[1]),
                     d_mul(n->kids[0], diff_node(n->kids[1])));
    case Node::Kind::div:
        // (f/g)' = (f'g - fg')/g^2
        return d_div(d_sub(d_mul(diff_node(n->kids[0]), n->kids[1]),
                           d_mul(n->kids[0], diff_node(n->kids[1]))),
                     make_node(Node::Kind::pow, {n->kids[1], make_number(2.0)}));
    case Node::Kind::pow: {
        const NodePtr& f = n->kids[0];
        const NodePtr& g = n->kids[1];
        if (!node_has_var(*g)) {
            // n f^(n-1) f'
            NodePtr e = d_sub(g, make_number(1.0));
            return d_mul(d_mul(g, make_node(Node::Kind::pow, {f, e})), diff_node(f));
        }
        // f^g (g' log f + g f'/f)
        NodePtr t1 = d_mul(diff_node(g), make_call(Fn::log_, f));
        NodePtr t2 = d_div(d_mul(g, diff_node(f)), f);
        return d_mul(std::const_pointer_cast<const Node>(std::make_shared<Node>(*n)), d_add(t1, t2));
    }
    case Node::Kind::call: {
        const NodePtr& a = n->kids[0];
        NodePtr da = diff_node(a);
        switch (n->fn) {
        case Fn::exp_: return d_mul(make_call(Fn::exp_, a), da);
        case Fn::log_: return d_div(da, a);
        case Fn::sqrt_:
            return d_div(da, d_mul(make_number(2.0), make_call(Fn::sqrt_, a)));
        case Fn::sin_: return d_mul(make_call(Fn::cos_, a), da);
        case Fn::cos_: return d_neg(d_mul(make_call(Fn::sin_, a), da));
        case Fn::abs_:
            // sign(a) a' written as a/abs(a)*a'; undefined at a=0, as is |.|'
            return d_mul(d_div(a, make_call(Fn::abs_, a)), da);
        }
        break;
    }
    case Node::Kind::piecewise: {
        std::vector<NodePtr> dp;
        dp.reserve(n->kids.size());
        for (const auto& p : n->kids) dp.push_back(diff_node(p));
        return make_piecewise(n->breaks, std::move(dp));
    }
    }
    fail(errc::invalid_argument, "cannot differentiate corrupt expression tree");
}

} // namespace

// ---- Expression methods -------------------------------------------------

Expression Expression::parse(std::string_view text) {
    std::string owned(text); // guarantee NUL termination for strtod
    Parser p(owned);
    return Expression(p.run());
}

Expression Expression::number(double v) { return Expression(make_number(v)); }
Expression Expression::var() { return Expression(make_var()); }

double Expression::eval(double x) const {
    if (!root_) fail(errc::invalid_argument, "empty expression");
    return eval_node(*root_, x);
}

Expression Expression::derivative() const {
    if (!root_) fail(errc::invalid_argument, "empty expression");
    return Expression(simplify_node(diff_node(root_)));
}

Expression Expression::simplified() const {
    if (!root_) return {};
    return Expression(simplify_node(root_));
}

std::string Expression::str() const {
    if (!root_) return {};
    std::string out;
    print_node(*root_, out);
    return out;
}

std::optional<double> Expression::constant_value() const {
    if (!root_ || node_has_var(*root_)) return std::nullopt;
    try {
        return eval_node(*root_, 0.0);
    } catch (const Error&) {
        return std::nullopt;
    }
}

bool Expression::is_piecewise() const {
    return root_ && root_->kind == Node::Kind::piecewise;
}

const std::vector<double>& Expression::breakpoints() const {
    static const std::vector<double> empty;
    return is_piecewise() ? root_->breaks : empty;
}

std::size_t Expression::piece_count() const {
    return is_piecewise() ? root_->kids.size() : (root_ ? 1 : 0);
}

Expression Expression::piece(std::size_t i) const {
    if (!root_) fail(errc::invalid_argument, "empty expression");
    if (!is_piecewise()) {
        if (i != 0) fail(errc::invalid_argument, "piece index out of range");
        return *this;
    }
    if (i >= root_->kids.size()) fail(errc::invalid_argument, "piece index out of range");
    return Expression(root_->kids[i]);
}

bool Expression::same_tree(const Expression& other) const {
    if (!root_ || !other.root_) return root_ == other.root_;
    return same_node(*root_, *other.root_);
}

Expression operator+(const Expression& a, const Expression& b) {
    return Expression(simplify_node(make_node(Node::Kind::add, {a.root_, b.root_})));
}
Expression operator-(const Expression& a, const Expression& b) {
    return Expression(simplify_node(make_node(Node::Kind::sub, {a.root_, b.root_})));
}
Expression operator*(const Expression& a, const Expression& b) {
    return Expression(simplify_node(make_node(Node::Kind::mul, {a.root_, b.root_})));
}
Expression operator/(const Expression& a, const Expression& b) {
    return Expression(simplify_node(make_node(Node::Kind::div, {a.root_, b.root_})));
}
Expression operator-(const Expression& a) {
    return Expression(simplify_node(make_node(Node::Kind::neg, {a.root_})));
}

Expression Expression::pow(const Expression& base, const Expression& exponent) {
    return Expression(simplify_node(make_node(Node::Kind::pow, {base.root_, exponent.root_})));
}

Expression Expression::apply(const std::string& fn, const Expression& arg) {
    for (std::size_t i = 0; i < kFnNames.size(); ++i)
        if (fn == kFnNames[i])
            return Expression(simplify_node(make_call(static_cast<Fn>(i), arg.root_)));
    fail(errc::invalid_argument, "unknown function '" + fn + "'");
}

Expression Expression::piecewise(std::vector<double> breaks, std::vector<Expression> pieces) {
    if (pieces.size() != breaks.size() + 1)
        fail(errc::invalid_argument, "piecewise needs one more piece than breakpoints");
    std::vector<NodePtr> kids;
    kids.reserve(pieces.size());
    for (auto& p : pieces) kids.push_back(p.root_);
    return Expression(make_piecewise(std::move(breaks), std::move(kids)));
}

} // namespace stickysim
