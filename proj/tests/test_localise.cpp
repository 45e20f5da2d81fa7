#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fixtures.hpp"
#include "rmpst/localise.hpp"
#include "rmpst/semantics.hpp"

using namespace rmpst;

namespace {

bool has_fv_violation(const LocalisationReport& r, const Participant& p, const VarName& x) {
    for (const FvViolation& v : r.fv_violations)
        if (v.participant == p && v.var == x) return true;
    return false;
}

bool has_dup_violation(const LocalisationReport& r, const VarName& x) {
    for (const DupViolation& v : r.dup_violations)
        if (v.var == x) return true;
    return false;
}

// All label sequences of length up to k from the initial vertex.
std::set<std::string> label_paths(const TypeGraph& g, int k) {
    std::set<std::string> out;
    std::vector<std::pair<int, std::string>> frontier{{g.initial, ""}};
    for (int step = 0; step < k; ++step) {
        std::vector<std::pair<int, std::string>> next;
        for (const auto& [v, path] : frontier) {
            for (int ei : g.out_edges(v)) {
                const GraphEdge& e = g.edges[static_cast<std::size_t>(ei)];
                std::string extended = path + e.label_string() + ";";
                out.insert(extended);
                next.emplace_back(e.dst, extended);
            }
        }
        frontier = std::move(next);
    }
    return out;
}

}  // namespace

TEST_CASE("graph of the guessing game", "[localise]") {
    TypeGraph g = type_graph(fixtures::guessing_game_wildcard());
    CHECK(g.num_vertices() == 4);
    // More and Less collapse into one edge: same endpoints and label.
    CHECK(g.edges.size() == 4);

    std::set<std::string> labels;
    for (const GraphEdge& e : g.edges) labels.insert(e.label_string());
    CHECK(labels == std::set<std::string>{"(A, B, n, {})", "(C, B, x, {})",
                                          "(B, C, _, {n, x})"});
}

TEST_CASE("graph edge cases", "[localise]") {
    CHECK(type_graph(g_end()).num_vertices() == 1);
    CHECK(type_graph(g_end()).edges.empty());

    TypeGraph gs_graph = type_graph(fixtures::gs());
    CHECK(gs_graph.num_vertices() == 3);
    CHECK(gs_graph.edges.size() == 2);
}

TEST_CASE("unrolling the two-self-loop graph", "[localise]") {
    // rec T. A->B { l1(x). T, l2(y). T } has a single vertex with two
    // self-loops; fully unrolled it has six vertices and no unvisited
    // backward edge.
    std::vector<GBranch> branches;
    branches.push_back(GBranch{"l1", "x", Sort::Int, top(), g_recvar("T")});
    branches.push_back(GBranch{"l2", "y", Sort::Int, top(), g_recvar("T")});
    GlobalPtr g = g_rec("T", g_comm("A", "B", std::move(branches)));

    TypeGraph original = type_graph(g);
    CHECK(original.num_vertices() == 1);
    CHECK(original.edges.size() == 2);

    TypeGraph unrolled = unroll(original);
    CHECK(unrolled.num_vertices() == 6);
    CHECK_FALSE(has_unvisited_backward_edge(unrolled));
}

TEST_CASE("acyclic graphs are unchanged by unrolling", "[localise]") {
    TypeGraph g = type_graph(fixtures::gs());
    TypeGraph u = unroll(g);
    CHECK(u.num_vertices() == g.num_vertices());
    CHECK(u.edges.size() == g.edges.size());
}

TEST_CASE("unrolling leaves no unvisited backward edge on the corpus", "[localise]") {
    for (const char* name : {"guessing_game", "guessing_game_wildcard", "ping_pong",
                             "simple_auth", "both_branch_loop", "resend_loop"}) {
        INFO(name);
        TypeGraph u = unroll(type_graph(fixtures::load(name)));
        CHECK_FALSE(has_unvisited_backward_edge(u));
    }
}

TEST_CASE("unrolled graphs accept the same label paths", "[localise]") {
    for (const char* name : {"guessing_game", "ping_pong", "both_branch_loop"}) {
        INFO(name);
        TypeGraph g = type_graph(fixtures::load(name));
        TypeGraph u = unroll(g);
        // Unrolling must neither add nor drop bounded behaviours.
        CHECK(label_paths(g, 6) == label_paths(u, 6));
    }
}

TEST_CASE("localisation of the corpus", "[localise]") {
    // Accepted protocols.
    for (const char* name : {"guessing_game", "simple_adder", "ring_max", "three_buyers"}) {
        INFO(name);
        CHECK(localise_type(fixtures::load(name)).decentralisable);
    }

    // The both-branch loop reads the other branch's variable first.
    LocalisationReport both = localise_type(fixtures::load("both_branch_loop"));
    CHECK_FALSE(both.decentralisable);
    CHECK((has_fv_violation(both, "A", "y") || has_fv_violation(both, "A", "x")));

    // Gs: A cannot check x < 10 because x lives at B.
    LocalisationReport gs_report = localise_type(fixtures::gs());
    CHECK_FALSE(gs_report.decentralisable);
    CHECK(has_fv_violation(gs_report, "A", "x"));

    // The four-party counterexample: C lacks x.
    LocalisationReport fvr = localise_type(fixtures::load("fv_counterexample"));
    CHECK_FALSE(fvr.decentralisable);
    CHECK(has_fv_violation(fvr, "C", "x"));

    // Plain resend loop: x is at B when A sends it again.
    LocalisationReport resend = localise_type(fixtures::load("resend_loop"));
    CHECK_FALSE(resend.decentralisable);
    CHECK(has_dup_violation(resend, "x"));
    CHECK(resend.fv_violations.empty());

    // Wildcard hints keep x at B while C re-sends it.
    LocalisationReport wild = localise_type(fixtures::load("guessing_game_wildcard"));
    CHECK_FALSE(wild.decentralisable);
    CHECK(has_dup_violation(wild, "x"));
}

TEST_CASE("discard payloads never trigger duplication", "[localise]") {
    // rec T. A->B l(_). T resends only the discard; that is fine.
    GlobalPtr g = g_rec("T", g_msg("A", "B", "l", kDiscardVar, top(), g_recvar("T")));
    LocalisationReport report = localise_type(g);
    CHECK(report.decentralisable);
}

TEST_CASE("In facts of the guessing game", "[localise]") {
    TypeGraph u = unroll(type_graph(fixtures::load("guessing_game")));
    LocalisationReport report = localise(u);
    REQUIRE(report.decentralisable);
    // n settles at B right after the secret and stays there.
    bool n_at_b = false;
    for (const InFact& f : report.in_facts)
        if (f.participant == "B" && f.var == "n") n_at_b = true;
    CHECK(n_at_b);
    // x alternates: it is at C in some states and at B in others, never both
    // in the same state (that would be duplication).
    CHECK(report.dup_violations.empty());
}

TEST_CASE("static verdicts agree with bounded dynamic checking", "[localise]") {
    for (const char* name :
         {"guessing_game", "simple_adder", "ring_max", "three_buyers"}) {
        INFO(name);
        GlobalPtr g = fixtures::load(name);
        REQUIRE(localise_type(g).decentralisable);
        Rcs rcs = rcs_of(g);
        // Walk the bounded decentralised state space; no configuration may
        // violate either condition.
        ExploreParams params;
        params.value_domain = {0, 1, 2};
        params.max_queue_len = 3;
        std::vector<DecConfiguration> configs{initial_dec_configuration(rcs)};
        std::set<std::string> seen{configs[0].key()};
        for (std::size_t i = 0; i < configs.size() && i < 20000; ++i) {
            DecConfiguration c = configs[i];
            auto violation = check_dec_conditions(rcs, c);
            INFO(c.to_string());
            CHECK_FALSE(violation.has_value());
            for (const GlobalStep& s : enabled_decentralised(rcs, c, params.value_domain)) {
                const SymbolicAction& a = s.transition.action;
                if (a.dir == Direction::Send &&
                    c.queues.length(a.sender, a.receiver) >=
                        static_cast<std::size_t>(params.max_queue_len))
                    continue;
                DecConfiguration next = apply_decentralised(rcs, c, s);
                if (seen.insert(next.key()).second) configs.push_back(std::move(next));
            }
        }
    }
}

TEST_CASE("type graph DOT output", "[localise]") {
    TypeGraph g = type_graph(fixtures::guessing_game_wildcard());
    std::string dot = emit_dot(g);
    CHECK(dot.find("digraph") == 0);
    CHECK(dot.find("(B, C, _, {n, x})") != std::string::npos);
    CHECK(emit_dot(g) == dot);
}
