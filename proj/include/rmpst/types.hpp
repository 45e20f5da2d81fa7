#pragma once

// Refined global and local session types: syntax trees, roles, projection
// with a naive merge, strip, occurrence checks, and the step/happens-before
// machinery on global types used by the elision analysis.

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "rmpst/refinement.hpp"
#include "rmpst/trace.hpp"

namespace rmpst {

enum class Sort { Int };

inline const char* sort_name(Sort) { return "int"; }

struct GlobalType;
using GlobalPtr = std::shared_ptr<const GlobalType>;

struct GBranch {
    std::string label;
    VarName payload_var;
    Sort sort = Sort::Int;
    RefPtr refinement;  // never null
    GlobalPtr cont;
};

struct GlobalType {
    struct Comm {
        Participant from, to;
        std::vector<GBranch> branches;  // nonempty, labels pairwise distinct
    };
    struct Rec {
        std::string var;
        GlobalPtr body;
    };
    struct RecVar {
        std::string var;
    };
    struct End {};
    std::variant<Comm, Rec, RecVar, End> node;
};

struct LocalType;
using LocalPtr = std::shared_ptr<const LocalType>;

struct LBranch {
    std::string label;
    VarName payload_var;
    Sort sort = Sort::Int;
    RefPtr refinement;
    LocalPtr cont;
};

struct LocalType {
    // IntChoice: this participant picks a label and sends to peer.
    // ExtChoice: peer picks and this participant receives.
    struct IntChoice {
        Participant peer;
        std::vector<LBranch> branches;
    };
    struct ExtChoice {
        Participant peer;
        std::vector<LBranch> branches;
    };
    struct Rec {
        std::string var;
        LocalPtr body;
    };
    struct RecVar {
        std::string var;
    };
    struct End {};
    std::variant<IntChoice, ExtChoice, Rec, RecVar, End> node;
};

// --- constructors ------------------------------------------------------------

inline GlobalPtr g_end() { return std::make_shared<GlobalType>(GlobalType{GlobalType::End{}}); }
inline GlobalPtr g_recvar(std::string t) {
    return std::make_shared<GlobalType>(GlobalType{GlobalType::RecVar{std::move(t)}});
}
inline GlobalPtr g_rec(std::string t, GlobalPtr body) {
    return std::make_shared<GlobalType>(GlobalType{GlobalType::Rec{std::move(t), std::move(body)}});
}
inline GlobalPtr g_comm(Participant from, Participant to, std::vector<GBranch> branches) {
    return std::make_shared<GlobalType>(
        GlobalType{GlobalType::Comm{std::move(from), std::move(to), std::move(branches)}});
}
// Single-branch communication.
inline GlobalPtr g_msg(Participant from, Participant to, std::string label, VarName var,
                       RefPtr refinement, GlobalPtr cont) {
    return g_comm(std::move(from), std::move(to),
                  {GBranch{std::move(label), std::move(var), Sort::Int, std::move(refinement),
                           std::move(cont)}});
}

inline LocalPtr l_end() { return std::make_shared<LocalType>(LocalType{LocalType::End{}}); }
inline LocalPtr l_recvar(std::string t) {
    return std::make_shared<LocalType>(LocalType{LocalType::RecVar{std::move(t)}});
}
inline LocalPtr l_rec(std::string t, LocalPtr body) {
    return std::make_shared<LocalType>(LocalType{LocalType::Rec{std::move(t), std::move(body)}});
}
inline LocalPtr l_int_choice(Participant peer, std::vector<LBranch> branches) {
    return std::make_shared<LocalType>(
        LocalType{LocalType::IntChoice{std::move(peer), std::move(branches)}});
}
inline LocalPtr l_ext_choice(Participant peer, std::vector<LBranch> branches) {
    return std::make_shared<LocalType>(
        LocalType{LocalType::ExtChoice{std::move(peer), std::move(branches)}});
}

// --- structural equality -----------------------------------------------------

inline bool global_equal(const GlobalPtr& a, const GlobalPtr& b) {
    if (a.get() == b.get()) return true;
    if (!a || !b) return false;
    if (a->node.index() != b->node.index()) return false;
    if (const auto* ca = std::get_if<GlobalType::Comm>(&a->node)) {
        const auto& cb = std::get<GlobalType::Comm>(b->node);
        if (ca->from != cb.from || ca->to != cb.to || ca->branches.size() != cb.branches.size())
            return false;
        for (std::size_t i = 0; i < ca->branches.size(); ++i) {
            const GBranch& x = ca->branches[i];
            const GBranch& y = cb.branches[i];
            if (x.label != y.label || x.payload_var != y.payload_var || x.sort != y.sort ||
                !refinement_equal(x.refinement, y.refinement) || !global_equal(x.cont, y.cont))
                return false;
        }
        return true;
    }
    if (const auto* ra = std::get_if<GlobalType::Rec>(&a->node)) {
        const auto& rb = std::get<GlobalType::Rec>(b->node);
        return ra->var == rb.var && global_equal(ra->body, rb.body);
    }
    if (const auto* va = std::get_if<GlobalType::RecVar>(&a->node))
        return va->var == std::get<GlobalType::RecVar>(b->node).var;
    return true;  // End
}

inline bool local_equal(const LocalPtr& a, const LocalPtr& b) {
    if (a.get() == b.get()) return true;
    if (!a || !b) return false;
    if (a->node.index() != b->node.index()) return false;
    auto branches_equal = [](const std::vector<LBranch>& xs, const std::vector<LBranch>& ys) {
        if (xs.size() != ys.size()) return false;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (xs[i].label != ys[i].label || xs[i].payload_var != ys[i].payload_var ||
                xs[i].sort != ys[i].sort ||
                !refinement_equal(xs[i].refinement, ys[i].refinement) ||
                !local_equal(xs[i].cont, ys[i].cont))
                return false;
        }
        return true;
    };
    if (const auto* ia = std::get_if<LocalType::IntChoice>(&a->node)) {
        const auto& ib = std::get<LocalType::IntChoice>(b->node);
        return ia->peer == ib.peer && branches_equal(ia->branches, ib.branches);
    }
    if (const auto* ea = std::get_if<LocalType::ExtChoice>(&a->node)) {
        const auto& eb = std::get<LocalType::ExtChoice>(b->node);
        return ea->peer == eb.peer && branches_equal(ea->branches, eb.branches);
    }
    if (const auto* ra = std::get_if<LocalType::Rec>(&a->node)) {
        const auto& rb = std::get<LocalType::Rec>(b->node);
        return ra->var == rb.var && local_equal(ra->body, rb.body);
    }
    if (const auto* va = std::get_if<LocalType::RecVar>(&a->node))
        return va->var == std::get<LocalType::RecVar>(b->node).var;
    return true;
}

// --- pretty printing ---------------------------------------------------------
// Global types print in a compact form the frontend parses back:
//   A->B l(x:int){x < 0}. A->B l2(y:int). end
//   A->B { more(x:int){x < n}. T, correct(x:int){x = n}. end }
//   rec T. ...      T (recursion variable)

namespace detail {

inline void print_global(std::ostream& os, const GlobalPtr& g);

inline void print_gbranch(std::ostream& os, const GBranch& b) {
    os << b.label << "(" << b.payload_var << ":" << sort_name(b.sort) << ")";
    if (!is_top(b.refinement)) os << "{" << rmpst::to_string(b.refinement) << "}";
    os << ". ";
    print_global(os, b.cont);
}

inline void print_global(std::ostream& os, const GlobalPtr& g) {
    if (std::holds_alternative<GlobalType::End>(g->node)) {
        os << "end";
        return;
    }
    if (const auto* v = std::get_if<GlobalType::RecVar>(&g->node)) {
        os << v->var;
        return;
    }
    if (const auto* r = std::get_if<GlobalType::Rec>(&g->node)) {
        os << "rec " << r->var << ". ";
        print_global(os, r->body);
        return;
    }
    const auto& c = std::get<GlobalType::Comm>(g->node);
    os << c.from << "->" << c.to << " ";
    if (c.branches.size() == 1) {
        print_gbranch(os, c.branches[0]);
    } else {
        os << "{ ";
        for (std::size_t i = 0; i < c.branches.size(); ++i) {
            if (i) os << ", ";
            print_gbranch(os, c.branches[i]);
        }
        os << " }";
    }
}

inline void print_local(std::ostream& os, const LocalPtr& l);

inline void print_lbranch(std::ostream& os, const LBranch& b) {
    os << b.label << "(" << b.payload_var << ":" << sort_name(b.sort) << ")";
    if (!is_top(b.refinement)) os << "{" << rmpst::to_string(b.refinement) << "}";
    os << ". ";
    print_local(os, b.cont);
}

inline void print_local(std::ostream& os, const LocalPtr& l) {
    if (std::holds_alternative<LocalType::End>(l->node)) {
        os << "end";
        return;
    }
    if (const auto* v = std::get_if<LocalType::RecVar>(&l->node)) {
        os << v->var;
        return;
    }
    if (const auto* r = std::get_if<LocalType::Rec>(&l->node)) {
        os << "rec " << r->var << ". ";
        print_local(os, r->body);
        return;
    }
    const LocalType::IntChoice* ic = std::get_if<LocalType::IntChoice>(&l->node);
    const LocalType::ExtChoice* ec = std::get_if<LocalType::ExtChoice>(&l->node);
    const Participant& peer = ic ? ic->peer : ec->peer;
    const auto& branches = ic ? ic->branches : ec->branches;
    os << peer << (ic ? "!" : "?");
    if (branches.size() == 1) {
        print_lbranch(os, branches[0]);
    } else {
        os << "{ ";
        for (std::size_t i = 0; i < branches.size(); ++i) {
            if (i) os << ", ";
            print_lbranch(os, branches[i]);
        }
        os << " }";
    }
}

}  // namespace detail

inline std::string to_string(const GlobalPtr& g) {
    std::ostringstream os;
    detail::print_global(os, g);
    return os.str();
}

inline std::string to_string(const LocalPtr& l) {
    std::ostringstream os;
    detail::print_local(os, l);
    return os.str();
}

// --- roles, recursion variables, well-formedness ------------------------------

inline void collect_roles(const GlobalPtr& g, std::set<Participant>& out) {
    if (const auto* c = std::get_if<GlobalType::Comm>(&g->node)) {
        out.insert(c->from);
        out.insert(c->to);
        for (const GBranch& b : c->branches) collect_roles(b.cont, out);
    } else if (const auto* r = std::get_if<GlobalType::Rec>(&g->node)) {
        collect_roles(r->body, out);
    }
}

inline std::set<Participant> roles(const GlobalPtr& g) {
    std::set<Participant> out;
    collect_roles(g, out);
    return out;
}

// Free recursion variables.
inline void collect_frv(const GlobalPtr& g, std::set<std::string> bound, std::set<std::string>& out) {
    if (const auto* c = std::get_if<GlobalType::Comm>(&g->node)) {
        for (const GBranch& b : c->branches) collect_frv(b.cont, bound, out);
    } else if (const auto* r = std::get_if<GlobalType::Rec>(&g->node)) {
        bound.insert(r->var);
        collect_frv(r->body, std::move(bound), out);
    } else if (const auto* v = std::get_if<GlobalType::RecVar>(&g->node)) {
        if (!bound.count(v->var)) out.insert(v->var);
    }
}

inline std::set<std::string> frv(const GlobalPtr& g) {
    std::set<std::string> out;
    collect_frv(g, {}, out);
    return out;
}

// Well-formedness of a closed global type: every recursion variable bound,
// binders pairwise distinct, sender != receiver, branch labels distinct
// within a choice, and no refinement mentioning the discard variable.
inline void collect_wellformed_issues(const GlobalPtr& g, std::set<std::string>& binders,
                                      std::set<std::string> in_scope,
                                      std::vector<std::string>& out) {
    if (const auto* c = std::get_if<GlobalType::Comm>(&g->node)) {
        if (c->from == c->to)
            out.push_back("communication from " + c->from + " to itself");
        if (c->branches.empty()) out.push_back("communication with no branches");
        std::set<std::string> labels;
        for (const GBranch& b : c->branches) {
            if (!labels.insert(b.label).second)
                out.push_back("duplicate branch label '" + b.label + "'");
            if (fv(b.refinement).count(kDiscardVar))
                out.push_back("refinement mentions the discard variable '_'");
            collect_wellformed_issues(b.cont, binders, in_scope, out);
        }
    } else if (const auto* r = std::get_if<GlobalType::Rec>(&g->node)) {
        if (!binders.insert(r->var).second)
            out.push_back("recursion binder '" + r->var + "' is not distinct");
        in_scope.insert(r->var);
        collect_wellformed_issues(r->body, binders, std::move(in_scope), out);
    } else if (const auto* v = std::get_if<GlobalType::RecVar>(&g->node)) {
        if (!in_scope.count(v->var))
            out.push_back("unbound recursion variable '" + v->var + "'");
    }
}

inline std::vector<std::string> wellformed_issues(const GlobalPtr& g) {
    std::vector<std::string> out;
    std::set<std::string> binders;
    collect_wellformed_issues(g, binders, {}, out);
    return out;
}

// --- strip and occurrence -----------------------------------------------------

inline LocalPtr strip(LocalPtr t) {
    while (const auto* r = std::get_if<LocalType::Rec>(&t->node)) t = r->body;
    return t;
}

inline GlobalPtr strip(GlobalPtr g) {
    while (const auto* r = std::get_if<GlobalType::Rec>(&g->node)) g = r->body;
    return g;
}

inline bool occurs_local(const LocalPtr& sub, const LocalPtr& t) {
    if (local_equal(sub, t)) return true;
    if (const auto* ic = std::get_if<LocalType::IntChoice>(&t->node)) {
        for (const LBranch& b : ic->branches)
            if (occurs_local(sub, b.cont)) return true;
        return false;
    }
    if (const auto* ec = std::get_if<LocalType::ExtChoice>(&t->node)) {
        for (const LBranch& b : ec->branches)
            if (occurs_local(sub, b.cont)) return true;
        return false;
    }
    if (const auto* r = std::get_if<LocalType::Rec>(&t->node)) return occurs_local(sub, r->body);
    return false;
}

inline bool occurs_global(const GlobalPtr& sub, const GlobalPtr& g) {
    if (global_equal(sub, g)) return true;
    if (const auto* c = std::get_if<GlobalType::Comm>(&g->node)) {
        for (const GBranch& b : c->branches)
            if (occurs_global(sub, b.cont)) return true;
        return false;
    }
    if (const auto* r = std::get_if<GlobalType::Rec>(&g->node)) return occurs_global(sub, r->body);
    return false;
}

// --- merge and projection ------------------------------------------------------

// Canonical renaming of recursion binders (pre-order), so merge compares
// types up to the names of binders.
inline LocalPtr alpha_normalise(const LocalPtr& t, std::map<std::string, std::string>& renaming,
                                int& counter) {
    if (const auto* ic = std::get_if<LocalType::IntChoice>(&t->node)) {
        std::vector<LBranch> bs;
        for (const LBranch& b : ic->branches)
            bs.push_back(LBranch{b.label, b.payload_var, b.sort, b.refinement,
                                 alpha_normalise(b.cont, renaming, counter)});
        return l_int_choice(ic->peer, std::move(bs));
    }
    if (const auto* ec = std::get_if<LocalType::ExtChoice>(&t->node)) {
        std::vector<LBranch> bs;
        for (const LBranch& b : ec->branches)
            bs.push_back(LBranch{b.label, b.payload_var, b.sort, b.refinement,
                                 alpha_normalise(b.cont, renaming, counter)});
        return l_ext_choice(ec->peer, std::move(bs));
    }
    if (const auto* r = std::get_if<LocalType::Rec>(&t->node)) {
        std::map<std::string, std::string> inner = renaming;
        std::string fresh = "%" + std::to_string(counter++);
        inner[r->var] = fresh;
        return l_rec(fresh, alpha_normalise(r->body, inner, counter));
    }
    if (const auto* v = std::get_if<LocalType::RecVar>(&t->node)) {
        auto it = renaming.find(v->var);
        return l_recvar(it == renaming.end() ? v->var : it->second);
    }
    return t;
}

inline LocalPtr alpha_normalise(const LocalPtr& t) {
    std::map<std::string, std::string> renaming;
    int counter = 0;
    return alpha_normalise(t, renaming, counter);
}

// Naive merge: defined only when all types are syntactically equal (up to
// binder names); the first element is returned.
inline std::optional<LocalPtr> merge(const std::vector<LocalPtr>& ls) {
    if (ls.empty()) return std::nullopt;
    LocalPtr base = alpha_normalise(ls[0]);
    for (std::size_t i = 1; i < ls.size(); ++i) {
        if (!local_equal(base, alpha_normalise(ls[i]))) return std::nullopt;
    }
    return ls[0];
}

// Where projected refinements land: on the emitting side (the default), on
// the receiving side, or on both.
enum class RefinementPlacement { SendSide, ReceiveSide, BothSides };

inline std::optional<LocalPtr> project(const GlobalPtr& g, const Participant& p,
                                       RefinementPlacement placement = RefinementPlacement::SendSide) {
    if (std::holds_alternative<GlobalType::End>(g->node)) return l_end();
    if (const auto* v = std::get_if<GlobalType::RecVar>(&g->node)) return l_recvar(v->var);
    if (const auto* r = std::get_if<GlobalType::Rec>(&g->node)) {
        std::set<std::string> body_frv = frv(r->body);
        body_frv.erase(r->var);
        if (roles(r->body).count(p) || !body_frv.empty()) {
            auto body = project(r->body, p, placement);
            if (!body) return std::nullopt;
            return l_rec(r->var, std::move(*body));
        }
        return l_end();
    }
    const auto& c = std::get<GlobalType::Comm>(g->node);
    if (c.from == p || c.to == p) {
        bool sending = c.from == p;
        std::vector<LBranch> bs;
        for (const GBranch& b : c.branches) {
            auto cont = project(b.cont, p, placement);
            if (!cont) return std::nullopt;
            RefPtr r_here;
            switch (placement) {
                case RefinementPlacement::SendSide: r_here = sending ? b.refinement : top(); break;
                case RefinementPlacement::ReceiveSide: r_here = sending ? top() : b.refinement; break;
                case RefinementPlacement::BothSides: r_here = b.refinement; break;
            }
            bs.push_back(LBranch{b.label, b.payload_var, b.sort, std::move(r_here), std::move(*cont)});
        }
        return sending ? l_int_choice(c.to, std::move(bs)) : l_ext_choice(c.from, std::move(bs));
    }
    // Uninvolved participant: merge the projected continuations.
    std::vector<LocalPtr> conts;
    for (const GBranch& b : c.branches) {
        auto cont = project(b.cont, p, placement);
        if (!cont) return std::nullopt;
        conts.push_back(std::move(*cont));
    }
    return merge(conts);
}

// --- steps, happens-before, well-defined steps ---------------------------------

// Communication nodes are addressed by the sequence of branch indices taken
// from the root; rec binders are transparent.
using NodePath = std::vector<int>;

inline std::string path_to_string(const NodePath& p) {
    std::ostringstream os;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i) os << "/";
        os << p[i];
    }
    return os.str();
}

inline bool is_strict_prefix(const NodePath& a, const NodePath& b) {
    if (a.size() >= b.size()) return false;
    return std::equal(a.begin(), a.end(), b.begin());
}

inline bool is_prefix(const NodePath& a, const NodePath& b) {
    if (a.size() > b.size()) return false;
    return std::equal(a.begin(), a.end(), b.begin());
}

struct CommNode {
    NodePath path;
    Participant from, to;
    std::vector<GBranch> branches;
};

inline void collect_comm_nodes(const GlobalPtr& g, NodePath path, std::vector<CommNode>& out) {
    if (const auto* c = std::get_if<GlobalType::Comm>(&g->node)) {
        out.push_back(CommNode{path, c->from, c->to, c->branches});
        for (std::size_t i = 0; i < c->branches.size(); ++i) {
            NodePath next = path;
            next.push_back(static_cast<int>(i));
            collect_comm_nodes(c->branches[i].cont, std::move(next), out);
        }
    } else if (const auto* r = std::get_if<GlobalType::Rec>(&g->node)) {
        collect_comm_nodes(r->body, std::move(path), out);
    }
}

inline std::vector<CommNode> comm_nodes(const GlobalPtr& g) {
    std::vector<CommNode> out;
    collect_comm_nodes(g, {}, out);
    return out;
}

// One branch of one communication node.
struct Step {
    NodePath node;
    int branch = 0;
    Participant from, to;
    std::string label;
    VarName payload_var;
    RefPtr refinement;

    std::string to_string() const {
        return from + "->" + to + " <" + label + ", " + payload_var + "> |= " +
               rmpst::to_string(refinement);
    }
};

inline std::vector<Step> steps_of(const GlobalPtr& g) {
    std::vector<Step> out;
    for (const CommNode& n : comm_nodes(g)) {
        for (std::size_t i = 0; i < n.branches.size(); ++i) {
            const GBranch& b = n.branches[i];
            out.push_back(Step{n.path, static_cast<int>(i), n.from, n.to, b.label, b.payload_var,
                               b.refinement});
        }
    }
    return out;
}

inline bool labels_unique(const GlobalPtr& g) {
    std::set<std::string> seen;
    for (const Step& s : steps_of(g))
        if (!seen.insert(s.label).second) return false;
    return true;
}

// Renames reused labels with a #k suffix so every label occurs once.
inline GlobalPtr uniquify_labels(const GlobalPtr& g, std::set<std::string>& seen) {
    if (const auto* c = std::get_if<GlobalType::Comm>(&g->node)) {
        std::vector<GBranch> bs;
        for (const GBranch& b : c->branches) {
            std::string label = b.label;
            int k = 2;
            while (!seen.insert(label).second) label = b.label + "#" + std::to_string(k++);
            bs.push_back(GBranch{std::move(label), b.payload_var, b.sort, b.refinement,
                                 uniquify_labels(b.cont, seen)});
        }
        return g_comm(c->from, c->to, std::move(bs));
    }
    if (const auto* r = std::get_if<GlobalType::Rec>(&g->node))
        return g_rec(r->var, uniquify_labels(r->body, seen));
    return g;
}

inline GlobalPtr uniquify_labels(const GlobalPtr& g) {
    std::set<std::string> seen;
    return uniquify_labels(g, seen);
}

// n1 <' n2: n2 sits inside one of n1's continuations and n2's sender took
// part in n1. happens_before is the transitive closure.
inline bool directly_before(const CommNode& n1, const CommNode& n2) {
    return is_strict_prefix(n1.path, n2.path) && (n2.from == n1.from || n2.from == n1.to);
}

inline bool happens_before(const GlobalPtr& g, const NodePath& a, const NodePath& b) {
    std::vector<CommNode> nodes = comm_nodes(g);
    auto index_of = [&](const NodePath& p) -> int {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].path == p) return static_cast<int>(i);
        return -1;
    };
    int ia = index_of(a);
    int ib = index_of(b);
    if (ia < 0 || ib < 0) return false;
    // DFS over the <' relation; every hop moves strictly deeper, so plain
    // reachability terminates.
    std::vector<int> stack = {ia};
    std::set<int> visited;
    while (!stack.empty()) {
        int cur = stack.back();
        stack.pop_back();
        if (!visited.insert(cur).second) continue;
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            if (static_cast<int>(j) == cur) continue;
            if (directly_before(nodes[cur], nodes[j])) {
                if (static_cast<int>(j) == ib) return true;
                stack.push_back(static_cast<int>(j));
            }
        }
    }
    return false;
}

// A step is well-defined when each free variable of its refinement is the
// payload of some earlier (happens-before) communication whose continuation
// leads to the step's node.
inline bool is_well_defined_step(const GlobalPtr& g, const Step& z) {
    std::set<VarName> needed = fv(z.refinement);
    if (needed.empty()) return true;
    std::vector<CommNode> nodes = comm_nodes(g);
    for (const VarName& x : needed) {
        bool found = false;
        for (const CommNode& n : nodes) {
            if (!happens_before(g, n.path, z.node)) continue;
            for (std::size_t i = 0; i < n.branches.size() && !found; ++i) {
                if (n.branches[i].payload_var != x) continue;
                NodePath branch_path = n.path;
                branch_path.push_back(static_cast<int>(i));
                if (is_prefix(branch_path, z.node)) found = true;
            }
            if (found) break;
        }
        if (!found) return false;
    }
    return true;
}

// Resolve a branch-index path to its communication node.
inline std::optional<CommNode> node_at(const GlobalPtr& g, const NodePath& path) {
    for (const CommNode& n : comm_nodes(g))
        if (n.path == path) return n;
    return std::nullopt;
}

inline std::optional<Step> find_step_by_label(const GlobalPtr& g, const std::string& label) {
    for (const Step& s : steps_of(g))
        if (s.label == label) return s;
    return std::nullopt;
}

}  // namespace rmpst
