#pragma once

// Static elision of redundant refinements: dependence between transitions,
// well-definedness checks (via the type or via bounded exploration), a
// bounded-domain entailment oracle, the RCS- and type-level transforms, and
// a bounded bisimulation checker used to validate them.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "rmpst/automata.hpp"
#include "rmpst/semantics.hpp"
#include "rmpst/types.hpp"

namespace rmpst {

// Identifies one transition inside one machine of an RCS.
struct TransitionRef {
    Participant participant;
    std::size_t index = 0;  // into machines.at(participant).transitions

    const Transition& resolve(const Rcs& rcs) const {
        return rcs.machines.at(participant).transitions.at(index);
    }
};

inline std::optional<TransitionRef> find_send_transition(const Rcs& rcs, const Participant& p,
                                                         const std::string& label) {
    auto it = rcs.machines.find(p);
    if (it == rcs.machines.end()) return std::nullopt;
    for (std::size_t i = 0; i < it->second.transitions.size(); ++i) {
        const Transition& t = it->second.transitions[i];
        if (t.action.dir == Direction::Send && t.action.label == label)
            return TransitionRef{p, i};
    }
    return std::nullopt;
}

// t depends on u when u's payload variable occurs free in t's refinement.
inline bool depends_on(const Rcs& rcs, const TransitionRef& t, const TransitionRef& u) {
    const Transition& tt = t.resolve(rcs);
    const Transition& tu = u.resolve(rcs);
    return fv(tt.action.refinement).count(tu.action.var) != 0;
}

inline bool is_self_independent(const Rcs& rcs, const TransitionRef& t) {
    const Transition& tt = t.resolve(rcs);
    return fv(tt.action.refinement).count(tt.action.var) == 0;
}

// All transitions of the system whose payload is x.
inline std::vector<TransitionRef> transitions_with_payload(const Rcs& rcs, const VarName& x) {
    std::vector<TransitionRef> out;
    for (const auto& [p, m] : rcs.machines)
        for (std::size_t i = 0; i < m.transitions.size(); ++i)
            if (m.transitions[i].action.var == x) out.push_back(TransitionRef{p, i});
    return out;
}

// ---------------------------------------------------------------------------
// Well-definedness of a transition: in every reachable configuration that
// exposes the transition's source state, the refinement's free variables
// are in the map.

enum class WellDefined { Yes, No, Unknown };

// Sound type-level route: a well-defined step of g yields a well-defined
// transition of rcs_of(g).
inline WellDefined is_well_defined_transition_type_level(const GlobalPtr& g,
                                                         const Rcs& rcs,
                                                         const TransitionRef& t) {
    const Transition& tt = t.resolve(rcs);
    if (fv(tt.action.refinement).empty()) return WellDefined::Yes;
    if (tt.action.dir != Direction::Send) return WellDefined::Unknown;
    for (const Step& z : steps_of(g)) {
        if (z.from == tt.action.sender && z.to == tt.action.receiver &&
            z.label == tt.action.label && z.payload_var == tt.action.var &&
            refinement_equal(z.refinement, tt.action.refinement)) {
            return is_well_defined_step(g, z) ? WellDefined::Yes : WellDefined::No;
        }
    }
    return WellDefined::Unknown;
}

// Exhaustive bounded route: check fv(r) against the map at every reachable
// configuration whose acting machine sits at the transition's source.
inline WellDefined is_well_defined_transition_bounded(const Rcs& rcs, const TransitionRef& t,
                                                      const ExploreParams& params) {
    const Transition& tt = t.resolve(rcs);
    std::set<VarName> need = fv(tt.action.refinement);
    if (need.empty()) return WellDefined::Yes;

    std::vector<Configuration> configs{initial_configuration(rcs)};
    std::set<std::string> seen{configs[0].key()};
    bool truncated = false;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const Configuration c = configs[i];
        if (c.states.at(t.participant) == tt.src) {
            for (const VarName& x : need)
                if (!c.global_map.contains(x)) return WellDefined::No;
        }
        if (configs.size() > 200000) {
            truncated = true;
            break;
        }
        for (const GlobalStep& s : enabled_centralised(rcs, c, params.value_domain)) {
            const SymbolicAction& a = s.transition.action;
            // The queue bound delimits the reachable fragment under scrutiny.
            if (a.dir == Direction::Send &&
                c.queues.length(a.sender, a.receiver) >=
                    static_cast<std::size_t>(params.max_queue_len))
                continue;
            Configuration next = apply_centralised(rcs, c, s);
            if (seen.insert(next.key()).second) configs.push_back(std::move(next));
        }
    }
    return truncated ? WellDefined::Unknown : WellDefined::Yes;
}

// ---------------------------------------------------------------------------
// Entailment, decided by enumeration over a finite value domain.

struct EntailmentResult {
    bool holds = false;
    std::optional<VarMap> witness;   // satisfies the antecedent, not the consequent
    bool consequent_not_closed = false;

    std::string describe() const {
        if (holds) return "entails";
        std::ostringstream os;
        os << "does not entail";
        if (witness) os << "; witness " << witness->to_string();
        if (consequent_not_closed) os << " (consequent has extra free variables)";
        return os.str();
    }
};

// antecedent => consequent over all assignments of their variables drawn
// from dom. Maps defining only the antecedent's variables falsify a
// consequent with extra free variables, so fv(consequent) must be covered
// by fv(antecedent) unless the antecedent is unsatisfiable over dom.
inline EntailmentResult entails(const RefPtr& antecedent, const RefPtr& consequent,
                                const std::vector<Value>& dom) {
    std::set<VarName> vars = fv(antecedent);
    std::set<VarName> cons_vars = fv(consequent);
    bool cons_covered = true;
    for (const VarName& x : cons_vars) cons_covered &= vars.count(x) != 0;
    for (const VarName& x : cons_vars) vars.insert(x);

    std::vector<VarName> order(vars.begin(), vars.end());
    std::vector<std::size_t> idx(order.size(), 0);

    EntailmentResult result;
    result.holds = true;
    if (order.empty()) {
        bool a = eval_closed(antecedent);
        bool c = eval_closed(consequent);
        if (a && !c) {
            result.holds = false;
            result.witness = VarMap::empty();
        }
        return result;
    }

    bool antecedent_satisfiable = false;
    while (true) {
        VarMap m;
        for (std::size_t i = 0; i < order.size(); ++i) m = m.update(order[i], dom[idx[i]]);
        if (models(m, antecedent)) {
            antecedent_satisfiable = true;
            if (!models(m, consequent)) {
                result.holds = false;
                result.witness = m;
                return result;
            }
        }
        // advance the odometer
        std::size_t i = 0;
        for (; i < order.size(); ++i) {
            if (++idx[i] < dom.size()) break;
            idx[i] = 0;
        }
        if (i == order.size()) break;
    }

    if (!cons_covered && antecedent_satisfiable) {
        // A map defined on fv(antecedent) alone satisfies it but leaves the
        // consequent open; report the first such assignment as the witness.
        std::set<VarName> ante_vars = fv(antecedent);
        std::vector<VarName> aorder(ante_vars.begin(), ante_vars.end());
        std::vector<std::size_t> aidx(aorder.size(), 0);
        while (true) {
            VarMap m;
            for (std::size_t i = 0; i < aorder.size(); ++i) m = m.update(aorder[i], dom[aidx[i]]);
            if (models(m, antecedent)) {
                result.holds = false;
                result.witness = m;
                result.consequent_not_closed = true;
                return result;
            }
            std::size_t i = 0;
            for (; i < aorder.size(); ++i) {
                if (++aidx[i] < dom.size()) break;
                aidx[i] = 0;
            }
            if (i == aorder.size()) break;
        }
    }
    return result;
}

inline void collect_constants(const ArithPtr& e, std::set<Value>& out) {
    if (const auto* l = std::get_if<ArithExpr::Lit>(&e->node)) {
        out.insert(l->value);
    } else if (const auto* b = std::get_if<ArithExpr::Bin>(&e->node)) {
        collect_constants(b->lhs, out);
        collect_constants(b->rhs, out);
    }
}

inline void collect_constants(const RefPtr& e, std::set<Value>& out) {
    if (const auto* c = std::get_if<RefinementExpr::Cmp>(&e->node)) {
        collect_constants(c->lhs, out);
        collect_constants(c->rhs, out);
    } else if (const auto* n = std::get_if<RefinementExpr::Not>(&e->node)) {
        collect_constants(n->e, out);
    } else if (const auto* a = std::get_if<RefinementExpr::And>(&e->node)) {
        collect_constants(a->l, out);
        collect_constants(a->r, out);
    } else if (const auto* o = std::get_if<RefinementExpr::Or>(&e->node)) {
        collect_constants(o->l, out);
        collect_constants(o->r, out);
    }
}

// Symmetric interval around the constants of both refinements, padded by 1.
// Complete for interval constraints; a semi-decision elsewhere.
inline std::vector<Value> default_entailment_domain(const RefPtr& a, const RefPtr& b) {
    std::set<Value> constants;
    collect_constants(a, constants);
    collect_constants(b, constants);
    Value bound = 1;
    for (Value c : constants) {
        Value mag = c < 0 ? (c == std::numeric_limits<Value>::min() ? std::numeric_limits<Value>::max()
                                                                    : -c)
                          : c;
        if (mag + 1 > bound) bound = mag + 1;
    }
    if (bound > 64) bound = 64;  // keep enumeration tractable
    std::vector<Value> dom;
    for (Value v = -bound; v <= bound; ++v) dom.push_back(v);
    return dom;
}

// ---------------------------------------------------------------------------
// Elision plans and transforms

struct GuardCheck {
    Participant participant;
    std::string label;
    RefPtr guard;  // refinement of a send that writes one of fv(target)
    EntailmentResult entailment;
};

struct ElisionPlan {
    std::string target_description;
    RefPtr target_refinement;
    bool already_top = false;
    bool self_independent = false;
    WellDefined well_defined = WellDefined::Unknown;
    std::vector<GuardCheck> guards;
    std::string reject_reason;  // empty when applicable

    bool applicable() const { return reject_reason.empty(); }

    std::string describe() const {
        std::ostringstream os;
        os << "target " << target_description << " with refinement "
           << rmpst::to_string(target_refinement) << "\n";
        os << "  self-independent: " << (self_independent ? "yes" : "no") << "\n";
        os << "  well-defined: "
           << (well_defined == WellDefined::Yes ? "yes"
                                                : well_defined == WellDefined::No ? "no" : "unknown")
           << "\n";
        for (const GuardCheck& g : guards)
            os << "  guard " << g.participant << "!" << g.label << " {" << rmpst::to_string(g.guard)
               << "}: " << g.entailment.describe() << "\n";
        os << (applicable() ? "  => applicable" : "  => rejected: " + reject_reason) << "\n";
        return os.str();
    }
};

struct Rejected {
    ElisionPlan plan;
};

namespace detail {

inline void fill_guard_checks(const Rcs& rcs, const RefPtr& target_refinement, ElisionPlan& plan,
                              const std::vector<Value>& dom,
                              const Transition* exclude = nullptr) {
    for (const VarName& x : fv(target_refinement)) {
        for (const auto& [p, m] : rcs.machines) {
            for (const Transition& t : m.transitions) {
                if (&t == exclude) continue;
                if (t.action.dir != Direction::Send || t.action.var != x) continue;
                GuardCheck g;
                g.participant = p;
                g.label = t.action.label;
                g.guard = t.action.refinement;
                g.entailment = entails(t.action.refinement, target_refinement, dom);
                plan.guards.push_back(std::move(g));
            }
        }
    }
}

}  // namespace detail

// Replace the refinement of one transition with true, unconditionally.
inline Rcs force_elide_rcs(const Rcs& rcs, const TransitionRef& t) {
    Rcs out = rcs;
    Transition& tt = out.machines.at(t.participant).transitions.at(t.index);
    tt.action.refinement = top();
    return out;
}

struct TypeLevelMode {
    GlobalPtr type;  // the RCS must be rcs_of(type)
};
struct BoundedMode {
    ExploreParams params;
};
using WellDefinedMode = std::variant<TypeLevelMode, BoundedMode>;

inline ElisionPlan plan_elide_rcs(const Rcs& rcs, const TransitionRef& t,
                                  const std::vector<Value>& dom, const WellDefinedMode& mode) {
    const Transition& tt = t.resolve(rcs);
    ElisionPlan plan;
    plan.target_description = t.participant + ": " + tt.action.to_string();
    plan.target_refinement = tt.action.refinement;

    if (is_top(tt.action.refinement)) {
        plan.already_top = true;
        plan.self_independent = true;
        plan.well_defined = WellDefined::Yes;
        return plan;
    }

    plan.self_independent = is_self_independent(rcs, t);
    if (const auto* tl = std::get_if<TypeLevelMode>(&mode))
        plan.well_defined = is_well_defined_transition_type_level(tl->type, rcs, t);
    else
        plan.well_defined = is_well_defined_transition_bounded(rcs, t,
                                                               std::get<BoundedMode>(mode).params);
    detail::fill_guard_checks(rcs, tt.action.refinement, plan, dom, &tt);

    if (!plan.self_independent) {
        plan.reject_reason = "target refinement mentions its own payload variable";
    } else if (plan.well_defined == WellDefined::No) {
        plan.reject_reason = "target transition is not well-defined";
    } else if (plan.well_defined == WellDefined::Unknown) {
        plan.reject_reason = "well-definedness could not be established within bounds";
    } else {
        for (const GuardCheck& g : plan.guards) {
            if (!g.entailment.holds) {
                plan.reject_reason = "guard of " + g.participant + "!" + g.label + " (" +
                                     rmpst::to_string(g.guard) + ") " + g.entailment.describe();
                break;
            }
        }
    }
    return plan;
}

inline std::variant<Rcs, Rejected> elide_rcs(const Rcs& rcs, const TransitionRef& t,
                                             const std::vector<Value>& dom,
                                             const WellDefinedMode& mode) {
    ElisionPlan plan = plan_elide_rcs(rcs, t, dom, mode);
    if (plan.already_top) return rcs;
    if (!plan.applicable()) return Rejected{std::move(plan)};
    return force_elide_rcs(rcs, t);
}

// ---------------------------------------------------------------------------
// Type-level elision: replace one branch's refinement with true when the
// branch is a well-defined, self-independent step and every step writing
// one of its refinement's variables entails it.

inline GlobalPtr replace_branch_refinement(const GlobalPtr& g, const NodePath& path, int branch,
                                           const RefPtr& refinement, NodePath prefix = {}) {
    if (const auto* r = std::get_if<GlobalType::Rec>(&g->node))
        return g_rec(r->var, replace_branch_refinement(r->body, path, branch, refinement, prefix));
    if (const auto* c = std::get_if<GlobalType::Comm>(&g->node)) {
        std::vector<GBranch> bs;
        for (std::size_t i = 0; i < c->branches.size(); ++i) {
            const GBranch& b = c->branches[i];
            if (prefix == path && static_cast<int>(i) == branch) {
                bs.push_back(GBranch{b.label, b.payload_var, b.sort, refinement, b.cont});
            } else {
                NodePath next = prefix;
                next.push_back(static_cast<int>(i));
                bs.push_back(GBranch{b.label, b.payload_var, b.sort, b.refinement,
                                     replace_branch_refinement(b.cont, path, branch, refinement,
                                                               std::move(next))});
            }
        }
        return g_comm(c->from, c->to, std::move(bs));
    }
    return g;
}

struct TypeElisionPlan {
    Step target;
    bool already_top = false;
    bool self_independent = false;
    bool well_defined = false;
    std::vector<GuardCheck> guards;
    std::string reject_reason;

    bool applicable() const { return reject_reason.empty(); }

    std::string describe() const {
        std::ostringstream os;
        os << "target step " << target.to_string() << "\n";
        os << "  self-independent: " << (self_independent ? "yes" : "no") << "\n";
        os << "  well-defined step: " << (well_defined ? "yes" : "no") << "\n";
        for (const GuardCheck& g : guards)
            os << "  guard step " << g.participant << "->" << g.label << " {"
               << rmpst::to_string(g.guard) << "}: " << g.entailment.describe() << "\n";
        os << (applicable() ? "  => applicable" : "  => rejected: " + reject_reason) << "\n";
        return os.str();
    }
};

inline TypeElisionPlan plan_elide_type(const GlobalPtr& g, const Step& z,
                                       const std::vector<Value>& dom) {
    TypeElisionPlan plan;
    plan.target = z;
    if (is_top(z.refinement)) {
        plan.already_top = true;
        plan.self_independent = true;
        plan.well_defined = true;
        return plan;
    }
    if (!labels_unique(g)) {
        plan.reject_reason = "labels are not uniquely used (rename or pass through uniquify)";
        return plan;
    }
    plan.self_independent = fv(z.refinement).count(z.payload_var) == 0;
    plan.well_defined = is_well_defined_step(g, z);

    for (const VarName& x : fv(z.refinement)) {
        for (const Step& w : steps_of(g)) {
            if (w.payload_var != x) continue;
            if (w.node == z.node && w.branch == z.branch) continue;
            GuardCheck gc;
            gc.participant = w.from;
            gc.label = w.label;
            gc.guard = w.refinement;
            gc.entailment = entails(w.refinement, z.refinement, dom);
            plan.guards.push_back(std::move(gc));
        }
    }

    if (!plan.self_independent) {
        plan.reject_reason = "step refinement mentions its own payload variable";
    } else if (!plan.well_defined) {
        plan.reject_reason = "step is not well-defined";
    } else {
        for (const GuardCheck& gc : plan.guards) {
            if (!gc.entailment.holds) {
                plan.reject_reason = "guard of " + gc.participant + "->" + gc.label + " (" +
                                     rmpst::to_string(gc.guard) + ") " + gc.entailment.describe();
                break;
            }
        }
    }
    return plan;
}

struct TypeRejected {
    TypeElisionPlan plan;
};

inline std::variant<GlobalPtr, TypeRejected> elide_type(const GlobalPtr& g, const Step& z,
                                                        const std::vector<Value>& dom) {
    TypeElisionPlan plan = plan_elide_type(g, z, dom);
    if (plan.already_top) return g;
    if (!plan.applicable()) return TypeRejected{std::move(plan)};
    return replace_branch_refinement(g, z.node, z.branch, top());
}

// ---------------------------------------------------------------------------
// Bounded bisimulation between two systems over the observable step labels
// (actions without their refinement annotations).

struct BisimulationVerdict {
    enum class Kind { Bisimilar, Counterexample, BoundExceeded };
    Kind kind = Kind::Bisimilar;
    bool truncated = false;
    std::vector<StepLabel> prefix;
    std::optional<StepLabel> failing;
    int failing_side = 0;  // 1: lhs stuck answering rhs, 2: rhs stuck answering lhs

    bool bisimilar() const { return kind == Kind::Bisimilar; }

    std::string describe() const {
        switch (kind) {
            case Kind::Bisimilar: return truncated ? "BISIMILAR (within bounds)" : "BISIMILAR";
            case Kind::BoundExceeded: return "BOUND EXCEEDED (inconclusive)";
            case Kind::Counterexample: {
                std::ostringstream os;
                os << "NOT BISIMILAR after [";
                for (std::size_t i = 0; i < prefix.size(); ++i) {
                    if (i) os << "; ";
                    os << prefix[i].to_string();
                }
                os << "]: side " << failing_side << " cannot match "
                   << (failing ? failing->to_string() : "?");
                return os.str();
            }
        }
        return "?";
    }
};

namespace detail {

struct BisimPair {
    int a = 0;
    int b = 0;
    int depth = 0;
    bool frontier = false;
    // obligations from either side: (side, label, candidate pair ids)
    struct Obligation {
        int side;  // 1: a moved, b must answer; 2: b moved, a must answer
        StepLabel label;
        std::vector<int> candidates;
    };
    std::vector<Obligation> obligations;
};

}  // namespace detail

inline BisimulationVerdict check_bisimulation(Lts& a, Lts& b, int depth_bound) {
    using Pair = detail::BisimPair;
    std::vector<Pair> pairs;
    std::map<std::pair<int, int>, int> index;

    auto intern = [&](int pa, int pb, int depth) {
        auto key = std::make_pair(pa, pb);
        auto it = index.find(key);
        if (it != index.end()) return it->second;
        Pair p;
        p.a = pa;
        p.b = pb;
        p.depth = depth;
        int id = static_cast<int>(pairs.size());
        pairs.push_back(std::move(p));
        index.emplace(key, id);
        return id;
    };

    BisimulationVerdict verdict;
    intern(a.initial_state(), b.initial_state(), 0);

    for (std::size_t i = 0; i < pairs.size(); ++i) {
        int depth = pairs[i].depth;
        if (depth >= depth_bound) {
            pairs[i].frontier = true;
            verdict.truncated = true;
            continue;
        }
        const auto& steps_a = a.successors(pairs[i].a);
        const auto& steps_b = b.successors(pairs[i].b);
        for (const auto& [lbl, na] : steps_a) {
            Pair::Obligation ob;
            ob.side = 1;
            ob.label = lbl;
            for (const auto& [lbl2, nb] : steps_b)
                if (lbl2 == lbl) ob.candidates.push_back(intern(na, nb, depth + 1));
            pairs[i].obligations.push_back(std::move(ob));
        }
        for (const auto& [lbl, nb] : steps_b) {
            Pair::Obligation ob;
            ob.side = 2;
            ob.label = lbl;
            for (const auto& [lbl2, na] : steps_a)
                if (lbl2 == lbl) ob.candidates.push_back(intern(na, nb, depth + 1));
            pairs[i].obligations.push_back(std::move(ob));
        }
    }

    std::vector<int> bad_seq(pairs.size(), -1);
    std::vector<int> witness_ob(pairs.size(), -1);
    int seq = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            if (bad_seq[i] >= 0 || pairs[i].frontier) continue;
            for (std::size_t ob = 0; ob < pairs[i].obligations.size(); ++ob) {
                bool some_good = false;
                for (int c : pairs[i].obligations[ob].candidates)
                    if (bad_seq[static_cast<std::size_t>(c)] < 0) {
                        some_good = true;
                        break;
                    }
                if (!some_good) {
                    bad_seq[i] = seq++;
                    witness_ob[i] = static_cast<int>(ob);
                    changed = true;
                    break;
                }
            }
        }
    }

    if (bad_seq[0] < 0) {
        verdict.kind = BisimulationVerdict::Kind::Bisimilar;
        return verdict;
    }
    verdict.kind = BisimulationVerdict::Kind::Counterexample;
    int cur = 0;
    while (true) {
        const Pair& p = pairs[static_cast<std::size_t>(cur)];
        const auto& ob = p.obligations[static_cast<std::size_t>(witness_ob[cur])];
        if (ob.candidates.empty()) {
            verdict.failing = ob.label;
            verdict.failing_side = ob.side == 1 ? 2 : 1;  // the answering side is stuck
            return verdict;
        }
        int next = ob.candidates.front();
        for (int c : ob.candidates)
            if (bad_seq[static_cast<std::size_t>(c)] < bad_seq[static_cast<std::size_t>(next)])
                next = c;
        verdict.prefix.push_back(ob.label);
        cur = next;
    }
}

inline BisimulationVerdict check_bisimulation(const Rcs& r1, const Rcs& r2,
                                              const ExploreParams& params) {
    auto lts1 = make_lts(r1, SemanticsKind::Centralised, params);
    auto lts2 = make_lts(r2, SemanticsKind::Centralised, params);
    return check_bisimulation(*lts1, *lts2, params.max_depth);
}

}  // namespace rmpst
