#pragma once

// Refined communicating finite state machines, their construction from local
// types, refined communicating systems, and the two configuration shapes
// (one shared variable map vs. one local map per participant).

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmpst/refinement.hpp"
#include "rmpst/trace.hpp"
#include "rmpst/types.hpp"

namespace rmpst {

struct SymbolicAction {
    Participant sender;
    Direction dir = Direction::Send;
    Participant receiver;
    std::string label;
    VarName var;
    RefPtr refinement;  // never null

    // The participant whose machine owns a transition with this action.
    const Participant& subject() const { return dir == Direction::Send ? sender : receiver; }
    const Participant& peer() const { return dir == Direction::Send ? receiver : sender; }

    std::string to_string() const {
        std::string s = sender + std::string(1, direction_char(dir)) + receiver + ":" + label +
                        "(" + var + ")";
        s += "[" + rmpst::to_string(refinement) + "]";
        return s;
    }
};

struct Transition {
    int src = 0;
    SymbolicAction action;
    int dst = 0;
};

struct Rcfsm {
    int initial = 0;
    std::vector<std::string> state_names;  // pretty-printed stripped subterm per state
    std::vector<Transition> transitions;

    int num_states() const { return static_cast<int>(state_names.size()); }

    std::vector<const Transition*> outgoing(int state) const {
        std::vector<const Transition*> out;
        for (const Transition& t : transitions)
            if (t.src == state) out.push_back(&t);
        return out;
    }
};

class UnboundRecVarError : public std::runtime_error {
public:
    explicit UnboundRecVarError(const std::string& var)
        : std::runtime_error("recursion variable '" + var + "' has no binder"), var(var) {}
    std::string var;
};

namespace detail {

inline const LocalPtr* find_rec_body(const LocalPtr& t, const std::string& var) {
    if (const auto* r = std::get_if<LocalType::Rec>(&t->node)) {
        if (r->var == var) return &r->body;
        return find_rec_body(r->body, var);
    }
    if (const auto* ic = std::get_if<LocalType::IntChoice>(&t->node)) {
        for (const LBranch& b : ic->branches)
            if (const LocalPtr* found = find_rec_body(b.cont, var)) return found;
        return nullptr;
    }
    if (const auto* ec = std::get_if<LocalType::ExtChoice>(&t->node)) {
        for (const LBranch& b : ec->branches)
            if (const LocalPtr* found = find_rec_body(b.cont, var)) return found;
        return nullptr;
    }
    return nullptr;
}

// strip, then resolve recursion variables through their binder in root,
// repeating for unguarded bodies like rec t. rec u. t.
inline LocalPtr resolve_state(LocalPtr t, const LocalPtr& root) {
    std::set<std::string> seen;
    t = strip(std::move(t));
    while (const auto* v = std::get_if<LocalType::RecVar>(&t->node)) {
        if (!seen.insert(v->var).second)
            throw std::runtime_error("unguarded recursion through '" + v->var + "'");
        const LocalPtr* body = find_rec_body(root, v->var);
        if (!body) throw UnboundRecVarError(v->var);
        t = strip(*body);
    }
    return t;
}

struct StateInterner {
    std::vector<LocalPtr> states;
    std::vector<std::string> names;
    std::map<std::string, int> index;

    int intern(const LocalPtr& t) {
        std::string key = rmpst::to_string(t);
        auto it = index.find(key);
        if (it != index.end()) return it->second;
        int id = static_cast<int>(states.size());
        states.push_back(t);
        names.push_back(std::move(key));
        index.emplace(names.back(), id);
        return id;
    }
};

inline void intern_states(const LocalPtr& t, StateInterner& interner) {
    if (const auto* r = std::get_if<LocalType::Rec>(&t->node)) {
        intern_states(r->body, interner);
        return;
    }
    if (std::holds_alternative<LocalType::RecVar>(t->node)) return;
    interner.intern(t);
    if (const auto* ic = std::get_if<LocalType::IntChoice>(&t->node)) {
        for (const LBranch& b : ic->branches) intern_states(b.cont, interner);
    } else if (const auto* ec = std::get_if<LocalType::ExtChoice>(&t->node)) {
        for (const LBranch& b : ec->branches) intern_states(b.cont, interner);
    }
}

}  // namespace detail

// The machine of a local type: states are the stripped subterms (recursion
// binders and variables excluded), transitions follow the branches with
// recursion variables resolved through their binder. Payload values stay
// symbolic; the semantics picks them when a transition fires.
inline Rcfsm rcfsm_of(const LocalPtr& l, const Participant& self) {
    detail::StateInterner interner;
    detail::intern_states(l, interner);

    Rcfsm m;
    m.state_names = interner.names;
    m.initial = interner.index.at(rmpst::to_string(detail::resolve_state(l, l)));

    for (std::size_t sid = 0; sid < interner.states.size(); ++sid) {
        const LocalPtr& state = interner.states[sid];
        const LocalType::IntChoice* ic = std::get_if<LocalType::IntChoice>(&state->node);
        const LocalType::ExtChoice* ec = std::get_if<LocalType::ExtChoice>(&state->node);
        if (!ic && !ec) continue;
        const Participant& peer = ic ? ic->peer : ec->peer;
        const auto& branches = ic ? ic->branches : ec->branches;
        for (const LBranch& b : branches) {
            LocalPtr target = detail::resolve_state(b.cont, l);
            int dst = interner.index.at(rmpst::to_string(target));
            SymbolicAction act;
            if (ic) {
                act.sender = self;
                act.dir = Direction::Send;
                act.receiver = peer;
            } else {
                act.sender = peer;
                act.dir = Direction::Receive;
                act.receiver = self;
            }
            act.label = b.label;
            act.var = b.payload_var;
            act.refinement = b.refinement;
            m.transitions.push_back(Transition{static_cast<int>(sid), std::move(act), dst});
        }
    }
    return m;
}

class ProjectionError : public std::runtime_error {
public:
    explicit ProjectionError(const Participant& p)
        : std::runtime_error("projection undefined for participant " + p), participant(p) {}
    Participant participant;
};

struct Rcs {
    std::map<Participant, Rcfsm> machines;

    std::vector<Participant> participants() const {
        std::vector<Participant> out;
        for (const auto& [p, _] : machines) out.push_back(p);
        return out;
    }
};

inline Rcs rcs_of(const GlobalPtr& g,
                  RefinementPlacement placement = RefinementPlacement::SendSide) {
    Rcs rcs;
    for (const Participant& p : roles(g)) {
        auto local = project(g, p, placement);
        if (!local) throw ProjectionError(p);
        rcs.machines.emplace(p, rcfsm_of(*local, p));
    }
    return rcs;
}

// ---------------------------------------------------------------------------
// Configurations

struct Configuration {
    std::map<Participant, int> states;
    Queues queues;
    VarMap global_map;

    bool operator==(const Configuration& o) const {
        return states == o.states && queues == o.queues && global_map == o.global_map;
    }

    std::string key() const {
        std::ostringstream os;
        for (const auto& [p, s] : states) os << p << "=" << s << ";";
        os << "|" << queues.to_string() << "|" << global_map.to_string();
        return os.str();
    }

    std::string to_string() const {
        std::ostringstream os;
        os << "<(";
        bool first = true;
        for (const auto& [p, s] : states) {
            if (!first) os << ", ";
            first = false;
            os << p << ":" << s;
        }
        os << "), " << queues.to_string() << ", " << global_map.to_string() << ">";
        return os.str();
    }
};

struct DecConfiguration {
    std::map<Participant, int> states;
    std::map<Participant, VarMap> local_maps;
    Queues queues;

    bool operator==(const DecConfiguration& o) const {
        return states == o.states && local_maps == o.local_maps && queues == o.queues;
    }

    std::string key() const {
        std::ostringstream os;
        for (const auto& [p, s] : states) {
            os << p << "=" << s << local_maps.at(p).to_string() << ";";
        }
        os << "|" << queues.to_string();
        return os.str();
    }

    std::string to_string() const {
        std::ostringstream os;
        os << "<(";
        bool first = true;
        for (const auto& [p, s] : states) {
            if (!first) os << ", ";
            first = false;
            os << "<" << p << ":" << s << ", " << local_maps.at(p).to_string() << ">";
        }
        os << "), " << queues.to_string() << ">";
        return os.str();
    }
};

inline Configuration initial_configuration(const Rcs& rcs) {
    Configuration c;
    for (const auto& [p, m] : rcs.machines) c.states[p] = m.initial;
    return c;
}

inline DecConfiguration initial_dec_configuration(const Rcs& rcs) {
    DecConfiguration c;
    for (const auto& [p, m] : rcs.machines) {
        c.states[p] = m.initial;
        c.local_maps[p] = VarMap::empty();
    }
    return c;
}

// Final iff no message is pending.
inline bool is_final(const Configuration& c) { return c.queues.is_empty(); }
inline bool is_final(const DecConfiguration& c) { return c.queues.is_empty(); }

// ---------------------------------------------------------------------------
// DOT output. States appear in interning order and transitions in
// construction order, so the output is byte-stable.

inline std::string emit_dot(const Rcfsm& m, const std::string& graph_name = "rcfsm") {
    std::ostringstream os;
    os << "digraph " << graph_name << " {\n";
    os << "  rankdir=LR;\n";
    os << "  node [shape=box, style=rounded];\n";
    for (int s = 0; s < m.num_states(); ++s)
        os << "  // q" << s << ": " << m.state_names[s] << "\n";
    os << "  __start [shape=point];\n";
    os << "  __start -> q" << m.initial << ";\n";
    for (int s = 0; s < m.num_states(); ++s) os << "  q" << s << " [label=\"" << s << "\"];\n";
    for (const Transition& t : m.transitions)
        os << "  q" << t.src << " -> q" << t.dst << " [label=\"" << t.action.to_string()
           << "\"];\n";
    os << "}\n";
    return os.str();
}

inline std::string emit_dot(const Rcs& rcs) {
    std::ostringstream os;
    os << "digraph rcs {\n";
    os << "  rankdir=LR;\n";
    os << "  node [shape=box, style=rounded];\n";
    int cluster = 0;
    for (const auto& [p, m] : rcs.machines) {
        std::string prefix = p + "_";
        os << "  subgraph cluster_" << cluster++ << " {\n";
        os << "    label=\"" << p << "\";\n";
        for (int s = 0; s < m.num_states(); ++s)
            os << "    // " << prefix << s << ": " << m.state_names[s] << "\n";
        os << "    " << prefix << "start [shape=point];\n";
        os << "    " << prefix << "start -> " << prefix << m.initial << ";\n";
        for (int s = 0; s < m.num_states(); ++s)
            os << "    " << prefix << s << " [label=\"" << s << "\"];\n";
        for (const Transition& t : m.transitions)
            os << "    " << prefix << t.src << " -> " << prefix << t.dst << " [label=\""
               << t.action.to_string() << "\"];\n";
        os << "  }\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace rmpst
