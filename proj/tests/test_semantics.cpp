#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "fixtures.hpp"
#include "rmpst/semantics.hpp"

using namespace rmpst;

namespace {

ExploreParams small_params() {
    ExploreParams p;
    p.value_domain = {0, 1, 2, 3, 4};
    p.max_depth = 10;
    p.max_queue_len = 4;
    return p;
}

// Drive the wildcard guessing game to <A2, B3, C2> with x = n = 5.
Configuration mid_game_configuration(const Rcs& rcs) {
    std::vector<ScriptEntry> script = {
        {"A", "Secret", 5}, {"B", "Secret", 5}, {"C", "Guess", 5}, {"B", "Guess", 5}};
    ExploreParams params;
    params.value_domain = {5};
    params.script = script;
    auto run = scripted_run_centralised(rcs, params);
    return run.configs.back();
}

std::set<std::string> trace_keys(const std::vector<ExploredRun<Configuration>>& runs) {
    std::set<std::string> keys;
    for (const auto& r : runs) keys.insert(to_string(r.trace));
    return keys;
}

}  // namespace

TEST_CASE("only the consistent hint is enabled", "[semantics]") {
    Rcs rcs = rcs_of(fixtures::guessing_game_wildcard());
    Configuration c = mid_game_configuration(rcs);
    REQUIRE(c.global_map == VarMap::empty().update("n", 5).update("x", 5));
    REQUIRE(c.queues.is_empty());

    std::vector<GlobalStep> steps = enabled_centralised(rcs, c, {0, 1, 2, 3, 4});
    REQUIRE(steps.size() == 1);
    CHECK(steps[0].participant == "B");
    CHECK(steps[0].transition.action.label == "Correct");
    CHECK(steps[0].transition.action.dir == Direction::Send);
}

TEST_CASE("send and receive application", "[semantics]") {
    Rcs rcs = rcs_of(fixtures::guessing_game_wildcard());
    Configuration c0 = initial_configuration(rcs);

    // A!Secret(5) is enabled for every domain value (tautology refinement).
    std::vector<GlobalStep> initial = enabled_centralised(rcs, c0, {0, 1, 2, 3, 4});
    std::size_t secret_sends = 0;
    for (const GlobalStep& s : initial)
        if (s.transition.action.label == "Secret") ++secret_sends;
    CHECK(secret_sends == 5);

    const GlobalStep* secret5 = nullptr;
    for (const GlobalStep& s : initial)
        if (s.transition.action.label == "Secret" && s.value == 5) secret5 = &s;
    // 5 is outside the configured domain above; use a wider one.
    std::vector<GlobalStep> wider = enabled_centralised(rcs, c0, {5});
    for (const GlobalStep& s : wider)
        if (s.transition.action.label == "Secret") secret5 = &s;
    REQUIRE(secret5 != nullptr);

    Configuration c1 = apply_centralised(rcs, c0, *secret5);
    CHECK(c1.global_map == VarMap::empty().update("n", 5));
    CHECK(c1.queues.length("A", "B") == 1);
    CHECK(c1.states.at("A") == secret5->transition.dst);
    CHECK(c1.states.at("B") == c0.states.at("B"));

    // Receiving pops the head and updates the map identically.
    std::vector<GlobalStep> after = enabled_centralised(rcs, c1, {5});
    const GlobalStep* recv = nullptr;
    for (const GlobalStep& s : after)
        if (s.transition.action.dir == Direction::Receive) recv = &s;
    REQUIRE(recv != nullptr);
    Configuration c2 = apply_centralised(rcs, c1, *recv);
    CHECK(c2.queues.is_empty());

    // Applying the receive twice is not possible.
    CHECK_THROWS_AS(apply_centralised(rcs, c2, *recv), StepNotEnabled);
}

TEST_CASE("receives only match the queue head", "[semantics]") {
    Rcs rcs = rcs_of(fixtures::gs());
    Configuration c0 = initial_configuration(rcs);
    std::vector<Value> dom = {-1};
    // Send both messages before any receive.
    auto send_l1 = enabled_centralised(rcs, c0, dom);
    REQUIRE_FALSE(send_l1.empty());
    Configuration c1 = apply_centralised(rcs, c0, send_l1[0]);
    auto next = enabled_centralised(rcs, c1, dom);
    const GlobalStep* send_l2 = nullptr;
    for (const GlobalStep& s : next)
        if (s.transition.action.label == "L2" && s.transition.action.dir == Direction::Send)
            send_l2 = &s;
    REQUIRE(send_l2 != nullptr);
    Configuration c2 = apply_centralised(rcs, c1, *send_l2);

    // B must receive L1 first; no enabled receive of L2 exists.
    auto receives = enabled_centralised(rcs, c2, dom);
    for (const GlobalStep& s : receives) {
        if (s.transition.action.dir == Direction::Receive)
            CHECK(s.transition.action.label == "L1");
    }
}

TEST_CASE("the full game replays as a scripted run", "[semantics]") {
    Rcs rcs = rcs_of(fixtures::guessing_game_wildcard());
    ExploreParams params;
    params.value_domain = {5};
    params.script = {{"A", "Secret", 5}, {"B", "Secret", 5}, {"C", "Guess", 5},
                     {"B", "Guess", 5},  {"B", "Correct", 0}, {"C", "Correct", 0}};
    auto run = scripted_run_centralised(rcs, params);
    REQUIRE(run.configs.size() == 7);
    CHECK(is_final(run.configs.back()));
    CHECK(run.configs.back().global_map ==
          VarMap::empty().update("n", 5).update("x", 5).update(kDiscardVar, 0));

    Trace t = trace_of_steps(run.steps);
    CHECK(is_valid_refined(t));
    // The extracted trace replays to the same final configuration.
    Run replay = replay_centralised(rcs, run.steps);
    CHECK(replay.configs.back() == run.configs.back());

    // Divergence is reported with its index.
    ExploreParams bad = params;
    bad.script.push_back({"C", "Correct", 0});
    try {
        scripted_run_centralised(rcs, bad);
        FAIL("expected ScriptDiverged");
    } catch (const ScriptDiverged& e) {
        CHECK(e.index == 6);
    }
}

TEST_CASE("trace of trivial runs", "[semantics]") {
    CHECK(trace_of_steps({}).empty());
    Run r;
    r.configs.push_back(initial_configuration(rcs_of(fixtures::gs())));
    CHECK(trace_of_run(r).empty());
}

TEST_CASE("decentralised maps track ownership", "[semantics]") {
    Rcs rcs = rcs_of(fixtures::guessing_game_wildcard());
    ExploreParams params;
    params.value_domain = {5};
    params.script = {{"A", "Secret", 5}, {"B", "Secret", 5}, {"C", "Guess", 5}, {"B", "Guess", 5}};
    auto run = scripted_run_decentralised(rcs, params);
    const DecConfiguration& mid = run.configs.back();
    CHECK(mid.local_maps.at("A").is_empty());  // sender forgot the secret
    CHECK(mid.local_maps.at("B") == VarMap::empty().update("n", 5).update("x", 5));
    CHECK(mid.local_maps.at("C").is_empty());

    // After B received the secret only: B = {n -> 5}.
    CHECK(run.configs[2].local_maps.at("B") == VarMap::empty().update("n", 5));

    // A send whose refinement needs a variable outside the local map is not
    // enabled: only Correct's x = n is closed under B's map... all hints are
    // closed here, but only Correct holds.
    std::vector<GlobalStep> steps = enabled_decentralised(rcs, mid, {0, 1, 2, 3, 4});
    REQUIRE(steps.size() == 1);
    CHECK(steps[0].transition.action.label == "Correct");
}

TEST_CASE("decentralised refinements need local variables", "[semantics]") {
    // In gs, A's second send is guarded by x < 10 but A no longer holds x.
    Rcs rcs = rcs_of(fixtures::gs());
    DecConfiguration c0 = initial_dec_configuration(rcs);
    std::vector<Value> dom = {-1};
    auto first = enabled_decentralised(rcs, c0, dom);
    REQUIRE(first.size() == 1);  // A!L1(-1)
    DecConfiguration c1 = apply_decentralised(rcs, c0, first[0]);
    CHECK(c1.local_maps.at("A").is_empty());
    for (const GlobalStep& s : enabled_decentralised(rcs, c1, dom))
        CHECK(s.transition.action.label != "L2");
}

TEST_CASE("exhaustive exploration", "[semantics]") {
    Rcs rcs = rcs_of(fixtures::guessing_game_wildcard());
    ExploreParams params;
    params.value_domain = {5};
    params.max_depth = 7;
    params.max_queue_len = 4;
    auto result = explore_centralised(rcs, params);

    // The canonical six-step run is among the explored final runs.
    std::vector<ScriptEntry> script = {{"A", "Secret", 5}, {"B", "Secret", 5}, {"C", "Guess", 5},
                                       {"B", "Guess", 5},  {"B", "Correct", 0}, {"C", "Correct", 0}};
    ExploreParams sparams;
    sparams.value_domain = {5};
    sparams.script = script;
    Trace canonical = scripted_run_centralised(rcs, sparams).trace;
    CHECK(trace_keys(result.final_runs).count(to_string(canonical)) == 1);

    // Depth 0 leaves only the empty trace.
    ExploreParams zero;
    zero.max_depth = 0;
    auto only_initial = explore_centralised(rcs, zero);
    REQUIRE(only_initial.final_runs.size() == 1);
    CHECK(only_initial.final_runs[0].trace.empty());
}

TEST_CASE("asynchrony lets the second send overtake", "[semantics]") {
    Rcs rcs = rcs_of(fixtures::gs());
    ExploreParams params;
    params.value_domain = {-1};
    params.max_depth = 4;
    auto result = explore_centralised(rcs, params);
    bool overtaking = false;
    for (const auto& run : result.final_runs) {
        long l2_send = -1, l1_recv = -1;
        for (std::size_t i = 0; i < run.trace.size(); ++i) {
            const Action& a = run.trace[i];
            if (a.dir == Direction::Send && a.msg.label == "L2") l2_send = static_cast<long>(i);
            if (a.dir == Direction::Receive && a.msg.label == "L1") l1_recv = static_cast<long>(i);
        }
        if (l2_send >= 0 && l1_recv >= 0 && l2_send < l1_recv) overtaking = true;
    }
    CHECK(overtaking);
}

TEST_CASE("every final trace of exploration is valid refined", "[semantics]") {
    for (const char* name : {"simple_adder", "gs", "ring_max"}) {
        Rcs rcs = rcs_of(fixtures::load(name));
        ExploreParams params = small_params();
        params.max_depth = 8;
        params.value_domain = {0, 1, 2};
        params.store_runs = false;
        auto result = explore_centralised(rcs, params);
        INFO(name);
        CHECK(!result.final_runs.empty());
        for (const auto& run : result.final_runs) CHECK(is_valid_refined(run.trace));
    }
}

TEST_CASE("random runs are valid on their final prefixes", "[semantics]") {
    Rcs rcs = rcs_of(fixtures::load("guessing_game"));
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        ExploreParams params = small_params();
        params.seed = seed;
        params.max_depth = 12;
        auto run = random_run_centralised(rcs, params);
        for (std::size_t i = 0; i < run.configs.size(); ++i) {
            if (!is_final(run.configs[i])) continue;
            Trace prefix(run.trace.begin(), run.trace.begin() + static_cast<long>(i));
            CHECK(is_valid_refined(prefix));
        }
    }
}

TEST_CASE("FIFO order along runs", "[semantics]") {
    Rcs rcs = rcs_of(fixtures::load("simple_adder"));
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ExploreParams params = small_params();
        params.seed = seed;
        auto run = random_run_centralised(rcs, params);
        std::map<std::pair<Participant, Participant>, std::vector<Message>> sent;
        std::map<std::pair<Participant, Participant>, std::size_t> delivered;
        for (const Action& a : run.trace) {
            auto chan = std::make_pair(a.sender, a.receiver);
            if (a.dir == Direction::Send) {
                sent[chan].push_back(a.msg);
            } else {
                std::size_t i = delivered[chan]++;
                REQUIRE(i < sent[chan].size());
                CHECK(sent[chan][i] == a.msg);
            }
        }
    }
}

TEST_CASE("centralised map dominates decentralised maps", "[semantics]") {
    // Mirror a random decentralised run in the centralised semantics and
    // compare maps at every point.
    Rcs rcs = rcs_of(fixtures::load("guessing_game"));
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ExploreParams params = small_params();
        params.seed = seed;
        auto drun = random_run_decentralised(rcs, params);
        Configuration c = initial_configuration(rcs);
        for (std::size_t i = 0; i < drun.steps.size(); ++i) {
            c = apply_centralised(rcs, c, drun.steps[i]);
            const DecConfiguration& d = drun.configs[i + 1];
            VarMap merged;
            bool disjoint = true;
            for (const auto& [p, m] : d.local_maps) {
                auto u = VarMap::disjoint_union(merged, m);
                if (!u) {
                    disjoint = false;
                    break;
                }
                merged = *u;
            }
            REQUIRE(disjoint);  // guessing_game is decentralisable
            CHECK(VarMap::superset(c.global_map, merged));
        }
    }
}

TEST_CASE("simulation basics", "[semantics]") {
    Rcs rcs = rcs_of(fixtures::load("simple_adder"));
    ExploreParams params = small_params();
    params.value_domain = {0, 1};
    params.max_depth = 8;

    // Any system simulates itself.
    SimulationVerdict self = check_simulation(rcs, SemanticsKind::Centralised,
                                              SemanticsKind::Centralised, params);
    CHECK(self.simulates());

    // Centralised simulates decentralised for a decentralisable protocol.
    SimulationVerdict cd = check_simulation(rcs, SemanticsKind::Centralised,
                                            SemanticsKind::Decentralised, params);
    CHECK(cd.simulates());
}

TEST_CASE("reverse simulation fails with a counterexample", "[semantics]") {
    Rcs rcs = rcs_of(fixtures::load("fv_counterexample"));
    ExploreParams params = small_params();
    params.value_domain = {0, 1};
    params.max_depth = 8;
    SimulationVerdict verdict = check_simulation(rcs, SemanticsKind::Decentralised,
                                                 SemanticsKind::Centralised, params);
    REQUIRE(verdict.kind == SimulationVerdict::Kind::Counterexample);
    REQUIRE(verdict.failing.has_value());
    CHECK(verdict.failing->label == "L2");
    CHECK(verdict.failing->dir == Direction::Send);
}

TEST_CASE("decentralised conditions checker", "[semantics]") {
    Rcs rcs = rcs_of(fixtures::load("guessing_game"));
    DecConfiguration c = initial_dec_configuration(rcs);
    CHECK_FALSE(check_dec_conditions(rcs, c).has_value());

    // Fabricate a duplicated variable.
    DecConfiguration dup = c;
    dup.local_maps["A"] = VarMap::empty().update("x", 1);
    dup.local_maps["B"] = VarMap::empty().update("x", 2);
    auto violation = check_dec_conditions(rcs, dup);
    REQUIRE(violation.has_value());
    CHECK(violation->clause == 1);
}

TEST_CASE("concurrent workers produce valid traces", "[semantics]") {
    for (const char* name : {"simple_adder", "ring_max", "guessing_game"}) {
        Rcs rcs = rcs_of(fixtures::load(name));
        ExploreParams params = small_params();
        params.max_depth = 60;
        params.seed = 11;
        ConcurrentRunResult result = run_concurrent(rcs, params);
        INFO(name);
        // The trace observed by the commit log is well-predicated from the
        // empty map; if the run drained its queues it is valid outright.
        QueueFold fold = ends_up_with_queue(result.trace, Queues::empty());
        CHECK(fold.defined());
        CHECK(is_well_predicated(result.trace, VarMap::empty()));
        if (fold.defined() && fold.queues->is_empty()) CHECK(is_valid_refined(result.trace));
    }
}
