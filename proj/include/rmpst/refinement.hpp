#pragma once

// Predicate language for refined protocols: 32-bit wrap-around integer
// arithmetic, comparison/boolean connectives, variable maps, and the
// `models` judgement (map |= refinement). The grammar kept here is one
// admissible instantiation; everything downstream only relies on the
// fv / substitute / eval interface, so the logic can be swapped out.

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace rmpst {

using Value = std::int32_t;
using VarName = std::string;

// "_" is the discard variable: it can be written (payloads nobody reads)
// but must never appear free in a refinement expression.
inline const VarName kDiscardVar = "_";

// Arithmetic over Z/2^32Z, signed interpretation for comparisons.
inline Value wrap_add(Value a, Value b) {
    return static_cast<Value>(static_cast<std::uint32_t>(a) + static_cast<std::uint32_t>(b));
}
inline Value wrap_sub(Value a, Value b) {
    return static_cast<Value>(static_cast<std::uint32_t>(a) - static_cast<std::uint32_t>(b));
}
inline Value wrap_mul(Value a, Value b) {
    return static_cast<Value>(static_cast<std::uint32_t>(a) * static_cast<std::uint32_t>(b));
}
// Total: x mod 0 = 0. Otherwise C truncated semantics on the signed values.
inline Value wrap_mod(Value a, Value b) {
    if (b == 0) return 0;
    if (a == std::numeric_limits<Value>::min() && b == -1) return 0;
    return a % b;
}
// Exponent is reinterpreted as an unsigned 32-bit count; square-and-multiply
// with wrap-around at every step.
inline Value wrap_pow(Value base, Value exponent) {
    std::uint32_t e = static_cast<std::uint32_t>(exponent);
    std::uint32_t b = static_cast<std::uint32_t>(base);
    std::uint32_t acc = 1;
    while (e != 0) {
        if (e & 1u) acc *= b;
        b *= b;
        e >>= 1u;
    }
    return static_cast<Value>(acc);
}

// ---------------------------------------------------------------------------
// Variable maps

class VarMap {
public:
    VarMap() = default;
    explicit VarMap(std::map<VarName, Value> entries) : entries_(std::move(entries)) {}

    static VarMap empty() { return VarMap{}; }

    std::optional<Value> lookup(const VarName& x) const {
        auto it = entries_.find(x);
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    bool contains(const VarName& x) const { return entries_.count(x) != 0; }

    VarMap update(const VarName& x, Value v) const {
        VarMap out = *this;
        out.entries_[x] = v;
        return out;
    }

    VarMap remove(const VarName& x) const {
        VarMap out = *this;
        out.entries_.erase(x);
        return out;
    }

    std::set<VarName> dom() const {
        std::set<VarName> d;
        for (const auto& [k, _] : entries_) d.insert(k);
        return d;
    }

    std::size_t size() const { return entries_.size(); }
    bool is_empty() const { return entries_.empty(); }

    const std::map<VarName, Value>& entries() const { return entries_; }

    // Defined iff domains are disjoint.
    static std::optional<VarMap> disjoint_union(const VarMap& a, const VarMap& b) {
        VarMap out = a;
        for (const auto& [k, v] : b.entries_) {
            if (out.entries_.count(k)) return std::nullopt;
            out.entries_[k] = v;
        }
        return out;
    }

    // a is a superset of b (same values on b's domain).
    static bool superset(const VarMap& a, const VarMap& b) {
        for (const auto& [k, v] : b.entries_) {
            auto got = a.lookup(k);
            if (!got || *got != v) return false;
        }
        return true;
    }

    bool operator==(const VarMap& other) const { return entries_ == other.entries_; }
    bool operator!=(const VarMap& other) const { return !(*this == other); }

    std::string to_string() const {
        std::ostringstream os;
        os << "{";
        bool first = true;
        for (const auto& [k, v] : entries_) {
            if (!first) os << ", ";
            first = false;
            os << k << " -> " << v;
        }
        os << "}";
        return os.str();
    }

private:
    std::map<VarName, Value> entries_;
};

// ---------------------------------------------------------------------------
// Expression trees. Integer-sorted terms and boolean-sorted refinements are
// kept apart so ill-sorted trees cannot be built. Nodes are immutable and
// shared; copying an expression is copying a pointer.

struct ArithExpr;
using ArithPtr = std::shared_ptr<const ArithExpr>;

enum class ArithOp { Add, Sub, Mul, Mod, Pow };

struct ArithExpr {
    struct Lit { Value value; };
    struct Var { VarName name; };
    struct Bin { ArithOp op; ArithPtr lhs, rhs; };
    std::variant<Lit, Var, Bin> node;
};

struct RefinementExpr;
using RefPtr = std::shared_ptr<const RefinementExpr>;

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

struct RefinementExpr {
    struct Top {};
    struct Bot {};
    struct Cmp { CmpOp op; ArithPtr lhs, rhs; };
    struct Not { RefPtr e; };
    struct And { RefPtr l, r; };
    struct Or { RefPtr l, r; };
    std::variant<Top, Bot, Cmp, Not, And, Or> node;
};

inline ArithPtr lit(Value v) { return std::make_shared<ArithExpr>(ArithExpr{ArithExpr::Lit{v}}); }
inline ArithPtr var(VarName x) { return std::make_shared<ArithExpr>(ArithExpr{ArithExpr::Var{std::move(x)}}); }
inline ArithPtr abin(ArithOp op, ArithPtr l, ArithPtr r) {
    return std::make_shared<ArithExpr>(ArithExpr{ArithExpr::Bin{op, std::move(l), std::move(r)}});
}
inline RefPtr top() { return std::make_shared<RefinementExpr>(RefinementExpr{RefinementExpr::Top{}}); }
inline RefPtr bot() { return std::make_shared<RefinementExpr>(RefinementExpr{RefinementExpr::Bot{}}); }
inline RefPtr cmp(CmpOp op, ArithPtr l, ArithPtr r) {
    return std::make_shared<RefinementExpr>(RefinementExpr{RefinementExpr::Cmp{op, std::move(l), std::move(r)}});
}
inline RefPtr rnot(RefPtr e) { return std::make_shared<RefinementExpr>(RefinementExpr{RefinementExpr::Not{std::move(e)}}); }
inline RefPtr rand_(RefPtr l, RefPtr r) {
    return std::make_shared<RefinementExpr>(RefinementExpr{RefinementExpr::And{std::move(l), std::move(r)}});
}
inline RefPtr ror_(RefPtr l, RefPtr r) {
    return std::make_shared<RefinementExpr>(RefinementExpr{RefinementExpr::Or{std::move(l), std::move(r)}});
}

inline bool arith_equal(const ArithPtr& a, const ArithPtr& b);
inline bool refinement_equal(const RefPtr& a, const RefPtr& b);

inline bool arith_equal(const ArithPtr& a, const ArithPtr& b) {
    if (a.get() == b.get()) return true;
    if (!a || !b) return false;
    if (a->node.index() != b->node.index()) return false;
    if (const auto* la = std::get_if<ArithExpr::Lit>(&a->node))
        return la->value == std::get<ArithExpr::Lit>(b->node).value;
    if (const auto* va = std::get_if<ArithExpr::Var>(&a->node))
        return va->name == std::get<ArithExpr::Var>(b->node).name;
    const auto& ba = std::get<ArithExpr::Bin>(a->node);
    const auto& bb = std::get<ArithExpr::Bin>(b->node);
    return ba.op == bb.op && arith_equal(ba.lhs, bb.lhs) && arith_equal(ba.rhs, bb.rhs);
}

inline bool refinement_equal(const RefPtr& a, const RefPtr& b) {
    if (a.get() == b.get()) return true;
    if (!a || !b) return false;
    if (a->node.index() != b->node.index()) return false;
    if (std::holds_alternative<RefinementExpr::Top>(a->node)) return true;
    if (std::holds_alternative<RefinementExpr::Bot>(a->node)) return true;
    if (const auto* ca = std::get_if<RefinementExpr::Cmp>(&a->node)) {
        const auto& cb = std::get<RefinementExpr::Cmp>(b->node);
        return ca->op == cb.op && arith_equal(ca->lhs, cb.lhs) && arith_equal(ca->rhs, cb.rhs);
    }
    if (const auto* na = std::get_if<RefinementExpr::Not>(&a->node))
        return refinement_equal(na->e, std::get<RefinementExpr::Not>(b->node).e);
    if (const auto* aa = std::get_if<RefinementExpr::And>(&a->node)) {
        const auto& ab = std::get<RefinementExpr::And>(b->node);
        return refinement_equal(aa->l, ab.l) && refinement_equal(aa->r, ab.r);
    }
    const auto& oa = std::get<RefinementExpr::Or>(a->node);
    const auto& ob = std::get<RefinementExpr::Or>(b->node);
    return refinement_equal(oa.l, ob.l) && refinement_equal(oa.r, ob.r);
}

inline bool is_top(const RefPtr& r) { return r && std::holds_alternative<RefinementExpr::Top>(r->node); }

// ---------------------------------------------------------------------------
// Free variables and substitution

inline void collect_fv(const ArithPtr& e, std::set<VarName>& out) {
    if (const auto* v = std::get_if<ArithExpr::Var>(&e->node)) {
        out.insert(v->name);
    } else if (const auto* b = std::get_if<ArithExpr::Bin>(&e->node)) {
        collect_fv(b->lhs, out);
        collect_fv(b->rhs, out);
    }
}

inline void collect_fv(const RefPtr& e, std::set<VarName>& out) {
    if (const auto* c = std::get_if<RefinementExpr::Cmp>(&e->node)) {
        collect_fv(c->lhs, out);
        collect_fv(c->rhs, out);
    } else if (const auto* n = std::get_if<RefinementExpr::Not>(&e->node)) {
        collect_fv(n->e, out);
    } else if (const auto* a = std::get_if<RefinementExpr::And>(&e->node)) {
        collect_fv(a->l, out);
        collect_fv(a->r, out);
    } else if (const auto* o = std::get_if<RefinementExpr::Or>(&e->node)) {
        collect_fv(o->l, out);
        collect_fv(o->r, out);
    }
}

inline std::set<VarName> fv(const RefPtr& e) {
    std::set<VarName> out;
    collect_fv(e, out);
    return out;
}

inline std::set<VarName> fv(const ArithPtr& e) {
    std::set<VarName> out;
    collect_fv(e, out);
    return out;
}

inline ArithPtr substitute(const ArithPtr& e, const VarMap& bindings) {
    if (const auto* v = std::get_if<ArithExpr::Var>(&e->node)) {
        if (auto val = bindings.lookup(v->name)) return lit(*val);
        return e;
    }
    if (const auto* b = std::get_if<ArithExpr::Bin>(&e->node)) {
        ArithPtr l = substitute(b->lhs, bindings);
        ArithPtr r = substitute(b->rhs, bindings);
        if (l.get() == b->lhs.get() && r.get() == b->rhs.get()) return e;
        return abin(b->op, std::move(l), std::move(r));
    }
    return e;
}

inline RefPtr substitute(const RefPtr& e, const VarMap& bindings) {
    if (const auto* c = std::get_if<RefinementExpr::Cmp>(&e->node)) {
        ArithPtr l = substitute(c->lhs, bindings);
        ArithPtr r = substitute(c->rhs, bindings);
        if (l.get() == c->lhs.get() && r.get() == c->rhs.get()) return e;
        return cmp(c->op, std::move(l), std::move(r));
    }
    if (const auto* n = std::get_if<RefinementExpr::Not>(&e->node)) {
        RefPtr inner = substitute(n->e, bindings);
        if (inner.get() == n->e.get()) return e;
        return rnot(std::move(inner));
    }
    if (const auto* a = std::get_if<RefinementExpr::And>(&e->node)) {
        RefPtr l = substitute(a->l, bindings);
        RefPtr r = substitute(a->r, bindings);
        if (l.get() == a->l.get() && r.get() == a->r.get()) return e;
        return rand_(std::move(l), std::move(r));
    }
    if (const auto* o = std::get_if<RefinementExpr::Or>(&e->node)) {
        RefPtr l = substitute(o->l, bindings);
        RefPtr r = substitute(o->r, bindings);
        if (l.get() == o->l.get() && r.get() == o->r.get()) return e;
        return ror_(std::move(l), std::move(r));
    }
    return e;
}

// ---------------------------------------------------------------------------
// Evaluation

class NotClosedError : public std::runtime_error {
public:
    explicit NotClosedError(const std::string& what) : std::runtime_error(what) {}
};

inline Value eval_arith_closed(const ArithPtr& e) {
    if (const auto* l = std::get_if<ArithExpr::Lit>(&e->node)) return l->value;
    if (const auto* v = std::get_if<ArithExpr::Var>(&e->node))
        throw NotClosedError("free variable '" + v->name + "' in refinement");
    const auto& b = std::get<ArithExpr::Bin>(e->node);
    Value l = eval_arith_closed(b.lhs);
    Value r = eval_arith_closed(b.rhs);
    switch (b.op) {
        case ArithOp::Add: return wrap_add(l, r);
        case ArithOp::Sub: return wrap_sub(l, r);
        case ArithOp::Mul: return wrap_mul(l, r);
        case ArithOp::Mod: return wrap_mod(l, r);
        case ArithOp::Pow: return wrap_pow(l, r);
    }
    return 0;
}

// Total on closed expressions; throws NotClosedError otherwise.
inline bool eval_closed(const RefPtr& e) {
    if (std::holds_alternative<RefinementExpr::Top>(e->node)) return true;
    if (std::holds_alternative<RefinementExpr::Bot>(e->node)) return false;
    if (const auto* c = std::get_if<RefinementExpr::Cmp>(&e->node)) {
        Value l = eval_arith_closed(c->lhs);
        Value r = eval_arith_closed(c->rhs);
        switch (c->op) {
            case CmpOp::Eq: return l == r;
            case CmpOp::Ne: return l != r;
            case CmpOp::Lt: return l < r;
            case CmpOp::Le: return l <= r;
            case CmpOp::Gt: return l > r;
            case CmpOp::Ge: return l >= r;
        }
        return false;
    }
    if (const auto* n = std::get_if<RefinementExpr::Not>(&e->node)) return !eval_closed(n->e);
    if (const auto* a = std::get_if<RefinementExpr::And>(&e->node))
        return eval_closed(a->l) && eval_closed(a->r);
    const auto& o = std::get<RefinementExpr::Or>(e->node);
    return eval_closed(o.l) || eval_closed(o.r);
}

// M |= r: r is closed under M and evaluates to true after substitution.
// A refinement that is not closed under M does not hold (the step that
// carries it simply cannot fire); no error is raised.
inline bool models(const VarMap& m, const RefPtr& e) {
    for (const VarName& x : fv(e)) {
        if (!m.contains(x)) return false;
    }
    return eval_closed(substitute(e, m));
}

// ---------------------------------------------------------------------------
// Textual syntax, shared with the protocol DSL:
//   true false  integers  identifiers  + - * % ^  = != < <= > >=  ! && ||  ( )
// Binding strength, loosest first: || , && , comparisons , + - , * % , ^ ,
// unary ! and -.

namespace detail {

inline int arith_prec(ArithOp op) {
    switch (op) {
        case ArithOp::Add:
        case ArithOp::Sub: return 1;
        case ArithOp::Mul:
        case ArithOp::Mod: return 2;
        case ArithOp::Pow: return 3;
    }
    return 0;
}

inline const char* arith_op_text(ArithOp op) {
    switch (op) {
        case ArithOp::Add: return "+";
        case ArithOp::Sub: return "-";
        case ArithOp::Mul: return "*";
        case ArithOp::Mod: return "%";
        case ArithOp::Pow: return "^";
    }
    return "?";
}

inline const char* cmp_op_text(CmpOp op) {
    switch (op) {
        case CmpOp::Eq: return "=";
        case CmpOp::Ne: return "!=";
        case CmpOp::Lt: return "<";
        case CmpOp::Le: return "<=";
        case CmpOp::Gt: return ">";
        case CmpOp::Ge: return ">=";
    }
    return "?";
}

inline void print_arith(std::ostream& os, const ArithPtr& e, int parent_prec) {
    if (const auto* l = std::get_if<ArithExpr::Lit>(&e->node)) {
        os << l->value;
        return;
    }
    if (const auto* v = std::get_if<ArithExpr::Var>(&e->node)) {
        os << v->name;
        return;
    }
    const auto& b = std::get<ArithExpr::Bin>(e->node);
    int prec = arith_prec(b.op);
    bool parens = prec < parent_prec;
    if (parens) os << "(";
    // ^ is right-associative; the others associate to the left.
    if (b.op == ArithOp::Pow) {
        print_arith(os, b.lhs, prec + 1);
        os << " " << arith_op_text(b.op) << " ";
        print_arith(os, b.rhs, prec);
    } else {
        print_arith(os, b.lhs, prec);
        os << " " << arith_op_text(b.op) << " ";
        print_arith(os, b.rhs, prec + 1);
    }
    if (parens) os << ")";
}

// Refinement precedence: Or=1, And=2, Cmp=3, Not=4.
inline void print_refinement(std::ostream& os, const RefPtr& e, int parent_prec) {
    if (std::holds_alternative<RefinementExpr::Top>(e->node)) {
        os << "true";
        return;
    }
    if (std::holds_alternative<RefinementExpr::Bot>(e->node)) {
        os << "false";
        return;
    }
    if (const auto* c = std::get_if<RefinementExpr::Cmp>(&e->node)) {
        bool parens = 3 < parent_prec;
        if (parens) os << "(";
        print_arith(os, c->lhs, 0);
        os << " " << cmp_op_text(c->op) << " ";
        print_arith(os, c->rhs, 0);
        if (parens) os << ")";
        return;
    }
    if (const auto* n = std::get_if<RefinementExpr::Not>(&e->node)) {
        os << "!";
        print_refinement(os, n->e, 5);
        return;
    }
    if (const auto* a = std::get_if<RefinementExpr::And>(&e->node)) {
        bool parens = 2 < parent_prec;
        if (parens) os << "(";
        print_refinement(os, a->l, 2);
        os << " && ";
        print_refinement(os, a->r, 3);
        if (parens) os << ")";
        return;
    }
    const auto& o = std::get<RefinementExpr::Or>(e->node);
    bool parens = 1 < parent_prec;
    if (parens) os << "(";
    print_refinement(os, o.l, 1);
    os << " || ";
    print_refinement(os, o.r, 2);
    if (parens) os << ")";
}

}  // namespace detail

inline std::string to_string(const ArithPtr& e) {
    std::ostringstream os;
    detail::print_arith(os, e, 0);
    return os.str();
}

inline std::string to_string(const RefPtr& e) {
    std::ostringstream os;
    detail::print_refinement(os, e, 0);
    return os.str();
}

// --- parser ----------------------------------------------------------------

struct RefinementParseError {
    std::size_t position = 0;
    std::string message;
};

namespace detail {

// The concrete syntax is parsed into an untyped tree first (so parentheses
// need no lookahead) and sorted into arithmetic/boolean afterwards.
class RefinementParser {
public:
    explicit RefinementParser(std::string_view text) : text_(text) {}

    RefPtr parse(RefinementParseError& err) {
        try {
            UNode u = parse_or();
            skip_ws();
            if (pos_ != text_.size()) fail(pos_, "trailing input after refinement");
            return to_bool(u);
        } catch (const LocalError& e) {
            err.position = e.position;
            err.message = e.message;
            return nullptr;
        }
    }

private:
    enum class UKind { Lit, Var, True, False, Neg, Not, Arith, Cmp, And, Or };
    struct UExpr;
    using UNode = std::shared_ptr<UExpr>;
    struct UExpr {
        UKind kind;
        std::size_t position = 0;
        Value value = 0;       // Lit
        std::string name;      // Var
        ArithOp aop{};         // Arith
        CmpOp cop{};           // Cmp
        UNode lhs, rhs;        // binary; unary uses lhs
    };

    struct LocalError {
        std::size_t position;
        std::string message;
    };

    [[noreturn]] static void fail(std::size_t pos, const std::string& msg) {
        throw LocalError{pos, msg};
    }

    UNode mk(UKind k) {
        auto n = std::make_shared<UExpr>();
        n->kind = k;
        n->position = pos_;
        return n;
    }

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' ||
                                       text_[pos_] == '\n' || text_[pos_] == '\r'))
            ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    bool eat2(char a, char b) {
        skip_ws();
        if (pos_ + 1 < text_.size() && text_[pos_] == a && text_[pos_ + 1] == b) {
            pos_ += 2;
            return true;
        }
        return false;
    }

    UNode parse_or() {
        UNode l = parse_and();
        while (eat2('|', '|')) {
            UNode n = mk(UKind::Or);
            n->lhs = l;
            n->rhs = parse_and();
            l = n;
        }
        return l;
    }

    UNode parse_and() {
        UNode l = parse_cmp();
        while (eat2('&', '&')) {
            UNode n = mk(UKind::And);
            n->lhs = l;
            n->rhs = parse_cmp();
            l = n;
        }
        return l;
    }

    UNode parse_cmp() {
        UNode l = parse_additive();
        skip_ws();
        CmpOp op;
        if (eat2('!', '=')) op = CmpOp::Ne;
        else if (eat2('<', '=')) op = CmpOp::Le;
        else if (eat2('>', '=')) op = CmpOp::Ge;
        else if (eat('=')) op = CmpOp::Eq;
        else if (pos_ < text_.size() && text_[pos_] == '<') { ++pos_; op = CmpOp::Lt; }
        else if (pos_ < text_.size() && text_[pos_] == '>') { ++pos_; op = CmpOp::Gt; }
        else return l;
        UNode n = mk(UKind::Cmp);
        n->cop = op;
        n->lhs = l;
        n->rhs = parse_additive();
        // Comparisons do not chain.
        skip_ws();
        if (pos_ < text_.size() &&
            (text_[pos_] == '<' || text_[pos_] == '>' || text_[pos_] == '=' ||
             (text_[pos_] == '!' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '=')))
            fail(pos_, "comparisons do not chain");
        return n;
    }

    UNode parse_additive() {
        UNode l = parse_multiplicative();
        while (true) {
            if (eat('+')) {
                UNode n = mk(UKind::Arith);
                n->aop = ArithOp::Add;
                n->lhs = l;
                n->rhs = parse_multiplicative();
                l = n;
            } else if (eat_minus()) {
                UNode n = mk(UKind::Arith);
                n->aop = ArithOp::Sub;
                n->lhs = l;
                n->rhs = parse_multiplicative();
                l = n;
            } else {
                return l;
            }
        }
    }

    bool eat_minus() {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '-') {
            ++pos_;
            return true;
        }
        return false;
    }

    UNode parse_multiplicative() {
        UNode l = parse_power();
        while (true) {
            if (eat('*')) {
                UNode n = mk(UKind::Arith);
                n->aop = ArithOp::Mul;
                n->lhs = l;
                n->rhs = parse_power();
                l = n;
            } else if (eat('%')) {
                UNode n = mk(UKind::Arith);
                n->aop = ArithOp::Mod;
                n->lhs = l;
                n->rhs = parse_power();
                l = n;
            } else {
                return l;
            }
        }
    }

    UNode parse_power() {
        UNode base = parse_unary();
        if (eat('^')) {
            UNode n = mk(UKind::Arith);
            n->aop = ArithOp::Pow;
            n->lhs = base;
            n->rhs = parse_power();  // right-assoc
            return n;
        }
        return base;
    }

    UNode parse_unary() {
        skip_ws();
        if (depth_ > 200) fail(pos_, "refinement nesting too deep");
        if (pos_ < text_.size() && text_[pos_] == '-') {
            ++pos_;
            ++depth_;
            UNode n = mk(UKind::Neg);
            n->lhs = parse_unary();
            --depth_;
            return n;
        }
        if (pos_ < text_.size() && text_[pos_] == '!' &&
            (pos_ + 1 >= text_.size() || text_[pos_ + 1] != '=')) {
            ++pos_;
            ++depth_;
            UNode n = mk(UKind::Not);
            n->lhs = parse_unary();
            --depth_;
            return n;
        }
        return parse_atom();
    }

    UNode parse_atom() {
        skip_ws();
        if (pos_ >= text_.size()) fail(pos_, "unexpected end of refinement");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            ++depth_;
            if (depth_ > 200) fail(pos_, "refinement nesting too deep");
            UNode inner = parse_or();
            --depth_;
            if (!eat(')')) fail(pos_, "expected ')'");
            return inner;
        }
        if (c >= '0' && c <= '9') {
            UNode n = mk(UKind::Lit);
            std::uint64_t acc = 0;
            while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') {
                acc = acc * 10 + static_cast<std::uint64_t>(text_[pos_] - '0');
                if (acc > 0xFFFFFFFFull) fail(pos_, "integer literal out of 32-bit range");
                ++pos_;
            }
            n->value = static_cast<Value>(static_cast<std::uint32_t>(acc));
            return n;
        }
        if (is_ident_start(c)) {
            std::size_t at = pos_;
            std::string name = lex_ident();
            if (name == "true") {
                UNode n = mk(UKind::True);
                n->position = at;
                return n;
            }
            if (name == "false") {
                UNode n = mk(UKind::False);
                n->position = at;
                return n;
            }
            if (name == kDiscardVar) fail(at, "'_' cannot appear in a refinement");
            UNode n = mk(UKind::Var);
            n->position = at;
            n->name = std::move(name);
            return n;
        }
        fail(pos_, std::string("unexpected character '") + c + "'");
    }

    static bool is_ident_start(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
    }
    static bool is_ident_char(char c) {
        return is_ident_start(c) || (c >= '0' && c <= '9');
    }

    std::string lex_ident() {
        std::string out;
        while (pos_ < text_.size() && is_ident_char(text_[pos_])) out.push_back(text_[pos_++]);
        return out;
    }

    static ArithPtr to_arith(const UNode& u) {
        switch (u->kind) {
            case UKind::Lit: return lit(u->value);
            case UKind::Var: return var(u->name);
            case UKind::Neg: {
                ArithPtr inner = to_arith(u->lhs);
                if (const auto* l = std::get_if<ArithExpr::Lit>(&inner->node))
                    return lit(wrap_sub(0, l->value));
                return abin(ArithOp::Sub, lit(0), inner);
            }
            case UKind::Arith: return abin(u->aop, to_arith(u->lhs), to_arith(u->rhs));
            default: fail(u->position, "expected an integer expression");
        }
    }

    static RefPtr to_bool(const UNode& u) {
        switch (u->kind) {
            case UKind::True: return top();
            case UKind::False: return bot();
            case UKind::Cmp: return cmp(u->cop, to_arith(u->lhs), to_arith(u->rhs));
            case UKind::Not: return rnot(to_bool(u->lhs));
            case UKind::And: return rand_(to_bool(u->lhs), to_bool(u->rhs));
            case UKind::Or: return ror_(to_bool(u->lhs), to_bool(u->rhs));
            default: fail(u->position, "expected a predicate, found an integer expression");
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int depth_ = 0;
};

}  // namespace detail

// Returns the parsed refinement, or nullptr with `err` filled in.
inline RefPtr parse_refinement(std::string_view text, RefinementParseError& err) {
    detail::RefinementParser parser(text);
    return parser.parse(err);
}

inline RefPtr parse_refinement_or_throw(std::string_view text) {
    RefinementParseError err;
    RefPtr r = parse_refinement(text, err);
    if (!r)
        throw std::runtime_error("refinement parse error at offset " +
                                 std::to_string(err.position) + ": " + err.message);
    return r;
}

}  // namespace rmpst
