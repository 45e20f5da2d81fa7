#pragma once

// Static check for decentralised verification: build the graph of a global
// type, unroll each loop once so first iterations are distinguished, then
// run a small inference fixpoint that places every variable at a
// participant and reports duplication / free-variable violations.

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmpst/refinement.hpp"
#include "rmpst/types.hpp"

namespace rmpst {

struct GraphEdge {
    int src = 0;
    int dst = 0;
    Participant from, to;
    VarName var;
    std::set<VarName> ref_fv;
    bool visited = false;  // unrolling state

    std::string label_string() const {
        std::ostringstream os;
        os << "(" << from << ", " << to << ", " << var << ", {";
        bool first = true;
        for (const VarName& x : ref_fv) {
            if (!first) os << ", ";
            first = false;
            os << x;
        }
        os << "})";
        return os.str();
    }
};

struct TypeGraph {
    int initial = 0;
    std::vector<std::string> vertex_names;    // pretty form of the stripped subterm
    std::vector<std::string> vertex_origins;  // structural path of the original vertex
    std::vector<GraphEdge> edges;

    int num_vertices() const { return static_cast<int>(vertex_names.size()); }

    std::vector<int> out_edges(int v) const {
        std::vector<int> out;
        for (std::size_t i = 0; i < edges.size(); ++i)
            if (edges[i].src == v) out.push_back(static_cast<int>(i));
        return out;
    }
};

namespace detail {

inline const GlobalPtr* find_global_rec_body(const GlobalPtr& g, const std::string& var) {
    if (const auto* r = std::get_if<GlobalType::Rec>(&g->node)) {
        if (r->var == var) return &r->body;
        return find_global_rec_body(r->body, var);
    }
    if (const auto* c = std::get_if<GlobalType::Comm>(&g->node)) {
        for (const GBranch& b : c->branches)
            if (const GlobalPtr* found = find_global_rec_body(b.cont, var)) return found;
    }
    return nullptr;
}

inline GlobalPtr resolve_global_state(GlobalPtr g, const GlobalPtr& root) {
    std::set<std::string> seen;
    g = strip(std::move(g));
    while (const auto* v = std::get_if<GlobalType::RecVar>(&g->node)) {
        if (!seen.insert(v->var).second)
            throw std::runtime_error("unguarded recursion through '" + v->var + "'");
        const GlobalPtr* body = find_global_rec_body(root, v->var);
        if (!body) throw std::runtime_error("recursion variable '" + v->var + "' has no binder");
        g = strip(*body);
    }
    return g;
}

struct VertexInterner {
    std::vector<GlobalPtr> vertices;
    std::vector<std::string> names;
    std::vector<std::string> origins;
    std::map<std::string, int> index;

    int intern(const GlobalPtr& g, const NodePath& path) {
        std::string key = rmpst::to_string(g);
        auto it = index.find(key);
        if (it != index.end()) return it->second;
        int id = static_cast<int>(vertices.size());
        vertices.push_back(g);
        names.push_back(key);
        origins.push_back(path_to_string(path));
        index.emplace(std::move(key), id);
        return id;
    }
};

inline void intern_vertices(const GlobalPtr& g, NodePath path, VertexInterner& vi) {
    if (const auto* r = std::get_if<GlobalType::Rec>(&g->node)) {
        intern_vertices(r->body, std::move(path), vi);
        return;
    }
    if (std::holds_alternative<GlobalType::RecVar>(g->node)) return;
    vi.intern(g, path);
    if (const auto* c = std::get_if<GlobalType::Comm>(&g->node)) {
        for (std::size_t i = 0; i < c->branches.size(); ++i) {
            NodePath next = path;
            next.push_back(static_cast<int>(i));
            intern_vertices(c->branches[i].cont, std::move(next), vi);
        }
    }
}

}  // namespace detail

// Graph of a global type: vertices are the stripped subterms (rec binders
// and variables excluded), one edge per branch carrying (sender, receiver,
// payload variable, fv of the refinement). Branches with identical labels
// and targets collapse into a single edge.
inline TypeGraph type_graph(const GlobalPtr& g) {
    detail::VertexInterner vi;
    detail::intern_vertices(g, {}, vi);

    TypeGraph tg;
    tg.vertex_names = vi.names;
    tg.vertex_origins = vi.origins;
    tg.initial = vi.index.at(rmpst::to_string(detail::resolve_global_state(g, g)));

    std::set<std::string> seen_edges;
    for (std::size_t vid = 0; vid < vi.vertices.size(); ++vid) {
        const auto* c = std::get_if<GlobalType::Comm>(&vi.vertices[vid]->node);
        if (!c) continue;
        for (const GBranch& b : c->branches) {
            GlobalPtr target = detail::resolve_global_state(b.cont, g);
            int dst = vi.index.at(rmpst::to_string(target));
            GraphEdge e;
            e.src = static_cast<int>(vid);
            e.dst = dst;
            e.from = c->from;
            e.to = c->to;
            e.var = b.payload_var;
            e.ref_fv = fv(b.refinement);
            std::string key = std::to_string(e.src) + ">" + std::to_string(e.dst) + ":" +
                              e.label_string();
            if (seen_edges.insert(key).second) tg.edges.push_back(std::move(e));
        }
    }
    return tg;
}

// ---------------------------------------------------------------------------
// Recursion unrolling

namespace detail {

// Shortest-path depth from the initial vertex; unreachable vertices get -1.
inline std::vector<int> vertex_depths(const TypeGraph& g) {
    std::vector<int> depth(static_cast<std::size_t>(g.num_vertices()), -1);
    std::deque<int> queue;
    depth[static_cast<std::size_t>(g.initial)] = 0;
    queue.push_back(g.initial);
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (const GraphEdge& e : g.edges) {
            if (e.src != v) continue;
            if (depth[static_cast<std::size_t>(e.dst)] < 0) {
                depth[static_cast<std::size_t>(e.dst)] = depth[static_cast<std::size_t>(v)] + 1;
                queue.push_back(e.dst);
            }
        }
    }
    return depth;
}

}  // namespace detail

// Unrolls every loop once: while an unvisited backward edge remains, copy
// the continuation subgraph reachable through it (the copy of the edge is
// already marked visited), drop the edge and redirect it forward into the
// copy. Edge selection is deterministic: smallest (source depth, source id,
// edge position) first. Finally unreachable vertices are removed.
inline TypeGraph unroll(TypeGraph g) {
    const int vertex_cap = 100000;
    while (true) {
        std::vector<int> depth = detail::vertex_depths(g);
        int pick = -1;
        for (std::size_t i = 0; i < g.edges.size(); ++i) {
            const GraphEdge& e = g.edges[i];
            if (e.visited) continue;
            if (depth[static_cast<std::size_t>(e.src)] < 0) continue;  // unreachable
            if (depth[static_cast<std::size_t>(e.dst)] < 0) continue;
            bool backward = depth[static_cast<std::size_t>(e.src)] >=
                            depth[static_cast<std::size_t>(e.dst)];
            if (!backward) continue;
            if (pick < 0) {
                pick = static_cast<int>(i);
                continue;
            }
            const GraphEdge& best = g.edges[static_cast<std::size_t>(pick)];
            auto rank = [&](const GraphEdge& x, std::size_t idx) {
                return std::make_tuple(depth[static_cast<std::size_t>(x.src)], x.src,
                                       static_cast<int>(idx));
            };
            if (rank(e, i) < rank(best, static_cast<std::size_t>(pick)))
                pick = static_cast<int>(i);
        }
        if (pick < 0) break;

        GraphEdge chosen = g.edges[static_cast<std::size_t>(pick)];
        g.edges[static_cast<std::size_t>(pick)].visited = true;

        // Continuation: the subgraph reachable from the edge's destination.
        std::set<int> reach;
        std::deque<int> queue = {chosen.dst};
        while (!queue.empty()) {
            int v = queue.front();
            queue.pop_front();
            if (!reach.insert(v).second) continue;
            for (const GraphEdge& e : g.edges)
                if (e.src == v && !reach.count(e.dst)) queue.push_back(e.dst);
        }

        std::map<int, int> copy_of;
        for (int v : reach) {
            int nv = g.num_vertices();
            if (nv >= vertex_cap) throw std::runtime_error("unrolling exceeded the vertex cap");
            copy_of[v] = nv;
            g.vertex_names.push_back(g.vertex_names[static_cast<std::size_t>(v)]);
            g.vertex_origins.push_back(g.vertex_origins[static_cast<std::size_t>(v)]);
        }
        std::size_t existing = g.edges.size();
        for (std::size_t i = 0; i < existing; ++i) {
            const GraphEdge e = g.edges[i];
            if (!reach.count(e.src)) continue;
            GraphEdge copy = e;
            copy.src = copy_of.at(e.src);
            copy.dst = reach.count(e.dst) ? copy_of.at(e.dst) : e.dst;
            g.edges.push_back(std::move(copy));
        }

        // Replace the unrolled edge by a visited forward edge into the copy.
        GraphEdge redirect = chosen;
        redirect.dst = copy_of.at(chosen.dst);
        redirect.visited = true;
        g.edges[static_cast<std::size_t>(pick)] = std::move(redirect);
    }

    // Drop unreachable vertices and re-number.
    std::vector<int> depth = detail::vertex_depths(g);
    std::vector<int> remap(static_cast<std::size_t>(g.num_vertices()), -1);
    TypeGraph out;
    for (int v = 0; v < g.num_vertices(); ++v) {
        if (depth[static_cast<std::size_t>(v)] < 0) continue;
        remap[static_cast<std::size_t>(v)] = out.num_vertices();
        out.vertex_names.push_back(g.vertex_names[static_cast<std::size_t>(v)]);
        out.vertex_origins.push_back(g.vertex_origins[static_cast<std::size_t>(v)]);
    }
    out.initial = remap[static_cast<std::size_t>(g.initial)];
    for (const GraphEdge& e : g.edges) {
        if (remap[static_cast<std::size_t>(e.src)] < 0 || remap[static_cast<std::size_t>(e.dst)] < 0)
            continue;
        GraphEdge kept = e;
        kept.src = remap[static_cast<std::size_t>(e.src)];
        kept.dst = remap[static_cast<std::size_t>(e.dst)];
        out.edges.push_back(std::move(kept));
    }
    return out;
}

inline bool has_unvisited_backward_edge(const TypeGraph& g) {
    std::vector<int> depth = detail::vertex_depths(g);
    for (const GraphEdge& e : g.edges) {
        if (e.visited) continue;
        if (depth[static_cast<std::size_t>(e.src)] < 0) continue;
        if (depth[static_cast<std::size_t>(e.src)] >= depth[static_cast<std::size_t>(e.dst)])
            return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Localisation fixpoint

struct InFact {
    int state = 0;
    Participant participant;
    VarName var;

    bool operator<(const InFact& o) const {
        return std::tie(state, participant, var) < std::tie(o.state, o.participant, o.var);
    }
};

struct FvViolation {
    int state = 0;
    VarName var;
    Participant participant;  // sender that cannot access var
    std::string origin;       // structural path of the state's original vertex
};

struct DupViolation {
    int state = 0;
    VarName var;
    Participant p, q;  // two places that hold var at once
    std::string origin;
};

struct LocalisationReport {
    bool decentralisable = false;
    std::set<InFact> in_facts;
    std::vector<FvViolation> fv_violations;
    std::vector<DupViolation> dup_violations;
    int original_vertices = 0;
    int unrolled_vertices = 0;

    std::string describe() const {
        std::ostringstream os;
        if (decentralisable) {
            os << "decentralisable";
        } else {
            os << "not decentralisable:";
            for (const FvViolation& v : fv_violations)
                os << "\n  free variable: " << v.participant << " cannot access " << v.var
                   << " at state " << v.state << " (node " << v.origin << ")";
            for (const DupViolation& v : dup_violations)
                os << "\n  duplication: " << v.var << " held by " << v.p << " and " << v.q
                   << " at state " << v.state << " (node " << v.origin << ")";
        }
        return os.str();
    }
};

// Inference over an unrolled graph. In(s, p, x) means participant p can
// access x in state s:
//   In(s2, q, x) <- Send(_, _, x, q, s2)
//   In(s2, p, x) <- In(s1, p, x), Send(s1, p, y, _, s2), x != y
//   In(s2, r, x) <- In(s1, r, x), Send(s1, p, _, _, s2), p != r
// Violations, once In is closed:
//   NotVerifFV(s, x, p)    <- edge s->s2 by p with x free in its refinement,
//                             x not the payload, !In(s, p, x)
//   NotVerifDupl(s, x, p, q) <- In(s, p, x), In(s, q, x), p != q
//   NotVerifDupl(s, x, q, p) <- edge from s sends x by p while In(s, q, x),
//                             q != p (the variable would sit both in the
//                             queue and in q's map)
inline LocalisationReport localise(const TypeGraph& unrolled) {
    LocalisationReport report;
    report.unrolled_vertices = unrolled.num_vertices();

    // Discard payloads become per-edge fresh names ('%' cannot occur in a
    // user identifier) so they never alias a real variable; being
    // write-only they are also exempt from the duplication rules below.
    std::vector<GraphEdge> edges = unrolled.edges;
    int fresh = 0;
    for (GraphEdge& e : edges)
        if (e.var == kDiscardVar) e.var = "_%" + std::to_string(fresh++);
    auto is_discard = [](const VarName& x) { return x.rfind("_%", 0) == 0; };

    std::set<InFact> facts;
    // Seed: the payload lands at the receiver.
    for (const GraphEdge& e : edges) facts.insert(InFact{e.dst, e.to, e.var});

    // Frame rules to a fixpoint (semi-naive: only new facts are propagated).
    std::deque<InFact> work(facts.begin(), facts.end());
    while (!work.empty()) {
        InFact f = work.front();
        work.pop_front();
        for (const GraphEdge& e : edges) {
            if (e.src != f.state) continue;
            bool kept = (f.participant == e.from) ? (f.var != e.var) : true;
            if (!kept) continue;
            InFact g{e.dst, f.participant, f.var};
            if (facts.insert(g).second) work.push_back(g);
        }
    }
    report.in_facts = facts;

    auto origin_of = [&](int v) { return unrolled.vertex_origins[static_cast<std::size_t>(v)]; };

    for (const GraphEdge& e : edges) {
        for (const VarName& x : e.ref_fv) {
            if (x == e.var) continue;  // carried in the message itself
            if (!facts.count(InFact{e.src, e.from, x}))
                report.fv_violations.push_back(FvViolation{e.src, x, e.from, origin_of(e.src)});
        }
    }

    std::set<std::string> dup_seen;
    auto add_dup = [&](int state, const VarName& x, const Participant& p, const Participant& q) {
        std::string key = std::to_string(state) + "|" + x + "|" + p + "|" + q;
        if (dup_seen.insert(key).second)
            report.dup_violations.push_back(DupViolation{state, x, p, q, origin_of(state)});
    };

    for (const InFact& a : facts) {
        if (is_discard(a.var)) continue;
        for (const InFact& b : facts) {
            if (a.state == b.state && a.var == b.var && a.participant < b.participant)
                add_dup(a.state, a.var, a.participant, b.participant);
        }
    }
    // A send of x while someone else still holds x duplicates it in flight.
    for (const GraphEdge& e : edges) {
        if (is_discard(e.var)) continue;
        for (const InFact& f : facts) {
            if (f.state == e.src && f.var == e.var && f.participant != e.from)
                add_dup(e.src, e.var, f.participant, e.from);
        }
    }

    report.decentralisable = report.fv_violations.empty() && report.dup_violations.empty();
    return report;
}

// Convenience: graph, unroll, localise in one go.
inline LocalisationReport localise_type(const GlobalPtr& g) {
    TypeGraph tg = type_graph(g);
    TypeGraph un = unroll(tg);
    LocalisationReport report = localise(un);
    report.original_vertices = tg.num_vertices();
    return report;
}

// ---------------------------------------------------------------------------
// Output

inline std::string emit_dot(const TypeGraph& g, const std::string& graph_name = "type_graph") {
    std::ostringstream os;
    os << "digraph " << graph_name << " {\n";
    os << "  rankdir=LR;\n";
    os << "  node [shape=box, style=rounded];\n";
    for (int v = 0; v < g.num_vertices(); ++v)
        os << "  // v" << v << ": " << g.vertex_names[static_cast<std::size_t>(v)] << "\n";
    os << "  __start [shape=point];\n";
    os << "  __start -> v" << g.initial << ";\n";
    for (int v = 0; v < g.num_vertices(); ++v) os << "  v" << v << " [label=\"" << v << "\"];\n";
    for (const GraphEdge& e : g.edges) {
        os << "  v" << e.src << " -> v" << e.dst << " [label=\"" << e.label_string() << "\"";
        if (e.visited) os << ", style=dashed";
        os << "];\n";
    }
    os << "}\n";
    return os.str();
}

inline nlohmann::json facts_to_json(const LocalisationReport& report) {
    nlohmann::json arr = nlohmann::json::array();
    for (const InFact& f : report.in_facts)
        arr.push_back(nlohmann::json{{"state", f.state}, {"participant", f.participant},
                                     {"var", f.var}});
    return arr;
}

inline nlohmann::json report_to_json(const LocalisationReport& report) {
    nlohmann::json fv_arr = nlohmann::json::array();
    for (const FvViolation& v : report.fv_violations)
        fv_arr.push_back(nlohmann::json{{"state", v.state},
                                        {"var", v.var},
                                        {"participant", v.participant},
                                        {"node", v.origin}});
    nlohmann::json dup_arr = nlohmann::json::array();
    for (const DupViolation& v : report.dup_violations)
        dup_arr.push_back(nlohmann::json{
            {"state", v.state}, {"var", v.var}, {"p", v.p}, {"q", v.q}, {"node", v.origin}});
    return nlohmann::json{{"decentralisable", report.decentralisable},
                          {"not_verif_fv", fv_arr},
                          {"not_verif_dupl", dup_arr},
                          {"original_vertices", report.original_vertices},
                          {"unrolled_vertices", report.unrolled_vertices}};
}

}  // namespace rmpst
