#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fixtures.hpp"
#include "rmpst/frontend.hpp"

using namespace rmpst;

namespace {

const char* kGameSource = R"((*# RefinementTypes #*)
global protocol PlusMinus (role A, role B, role C) {
  Secret(n: int) from A to B;
  rec Loop {
    Guess(x: int) from C to B;
    choice at B {
      More(x: int {x < n}) from B to C;
      continue Loop;
    } or {
      Less(x: int {x > n}) from B to C;
      continue Loop;
    } or {
      Correct(x: int {x = n}) from B to C;
    }
  }
})";

bool has_error(const ParseResult& r, const std::string& needle) {
    for (const Diagnostic& d : r.diagnostics)
        if (d.message.find(needle) != std::string::npos) return true;
    return false;
}

GlobalPtr random_global(std::mt19937_64& rng, int depth, int& label_counter,
                        std::vector<std::string> binders) {
    static const std::vector<Participant> pool = {"A", "B", "C"};
    int kind = static_cast<int>(rng() % 10);
    if (depth <= 0 || kind < 2) {
        if (!binders.empty() && kind == 0) return g_recvar(binders[rng() % binders.size()]);
        return g_end();
    }
    if (kind == 2) {
        std::string binder = "T" + std::to_string(label_counter++);
        binders.push_back(binder);
        // Keep bodies guarded: a communication follows immediately.
        Participant from = pool[rng() % pool.size()];
        Participant to = pool[rng() % pool.size()];
        if (from == to) to = from == "A" ? "B" : "A";
        GBranch b{"l" + std::to_string(label_counter++), "x", Sort::Int, top(),
                  random_global(rng, depth - 1, label_counter, binders)};
        return g_rec(binder, g_comm(from, to, {std::move(b)}));
    }
    Participant from = pool[rng() % pool.size()];
    Participant to = pool[rng() % pool.size()];
    if (from == to) to = from == "A" ? "B" : "A";
    std::size_t nbranches = 1 + rng() % 3;
    std::vector<GBranch> branches;
    for (std::size_t i = 0; i < nbranches; ++i) {
        RefPtr r = top();
        switch (rng() % 3) {
            case 0: r = parse_refinement_or_throw("x < " + std::to_string(rng() % 7)); break;
            case 1: r = parse_refinement_or_throw("x = y && y >= 0"); break;
            default: break;
        }
        VarName payload = rng() % 5 == 0 ? kDiscardVar : VarName(1, static_cast<char>('x' + i));
        branches.push_back(GBranch{"l" + std::to_string(label_counter++), payload, Sort::Int, r,
                                   random_global(rng, depth - 1, label_counter, binders)});
    }
    return g_comm(from, to, std::move(branches));
}

}  // namespace

TEST_CASE("parsing the guessing game source", "[frontend]") {
    ParseResult result = parse(kGameSource);
    REQUIRE(result.ok());
    CHECK(result.protocol->name == "PlusMinus");
    CHECK(result.protocol->roles == std::vector<Participant>{"A", "B", "C"});

    GlobalPtr g = result.protocol->type;
    CHECK(to_string(g) ==
          "A->B Secret(n:int). rec Loop. C->B Guess(x:int). "
          "B->C { More(x:int){x < n}. Loop, Less(x:int){x > n}. Loop, "
          "Correct(x:int){x = n}. end }");
    CHECK(global_equal(g, fixtures::load("guessing_game")));
}

TEST_CASE("minimal protocols", "[frontend]") {
    ParseResult r = parse("global protocol P (role A, role B) { L(x: int) from A to B; }");
    REQUIRE(r.ok());
    CHECK(global_equal(r.protocol->type, g_msg("A", "B", "L", "x", top(), g_end())));

    // Payload-less message maps to the discard variable.
    ParseResult r2 = parse("global protocol P (role A, role B) { L() from A to B; }");
    REQUIRE(r2.ok());
    CHECK(global_equal(r2.protocol->type, g_msg("A", "B", "L", kDiscardVar, top(), g_end())));

    // Explicit discard payload with a refinement over other variables.
    ParseResult r3 = parse(
        "global protocol P (role A, role B) { K(n: int) from A to B; "
        "L(_: int {n > 0}) from B to A; }");
    REQUIRE(r3.ok());

    ParseResult r4 = parse("global protocol P (role A, role B) { }");
    REQUIRE(r4.ok());
    CHECK(global_equal(r4.protocol->type, g_end()));
}

TEST_CASE("frontend diagnostics", "[frontend]") {
    // choice-at sender mismatch
    ParseResult mismatch = parse(
        "global protocol P (role A, role B, role C) { choice at B { L(x: int) from C to A; } }");
    CHECK_FALSE(mismatch.ok());
    CHECK(has_error(mismatch, "choice at B"));

    // undeclared role
    ParseResult undeclared = parse("global protocol P (role A, role B) { L() from A to D; }");
    CHECK_FALSE(undeclared.ok());
    CHECK(has_error(undeclared, "not declared"));

    // unbound continue
    ParseResult unbound = parse("global protocol P (role A, role B) { continue T; }");
    CHECK_FALSE(unbound.ok());
    CHECK(has_error(unbound, "continue"));

    // continue not in tail position
    ParseResult nontail = parse(
        "global protocol P (role A, role B) { rec T { continue T; L() from A to B; } }");
    CHECK_FALSE(nontail.ok());
    CHECK(has_error(nontail, "last statement"));

    // duplicate branch labels
    ParseResult dup = parse(
        "global protocol P (role A, role B) { choice at A { L(x: int) from A to B; } or { "
        "L(y: int) from A to B; } }");
    CHECK_FALSE(dup.ok());
    CHECK(has_error(dup, "duplicate branch label"));

    // a role sending to itself
    ParseResult self = parse("global protocol P (role A, role B) { L() from A to A; }");
    CHECK_FALSE(self.ok());

    // refinements cannot read the discard variable
    ParseResult discard = parse(
        "global protocol P (role A, role B) { L(x: int {_ < 3}) from A to B; }");
    CHECK_FALSE(discard.ok());

    // unknown sort
    ParseResult sort = parse(
        "global protocol P (role A, role B) { L(x: bool) from A to B; }");
    CHECK_FALSE(sort.ok());
    CHECK(has_error(sort, "sort"));

    // spans stay within the source
    for (const ParseResult* r : {&mismatch, &undeclared, &unbound, &nontail, &dup}) {
        for (const Diagnostic& d : r->diagnostics) {
            CHECK(d.begin <= d.end);
        }
    }
}

TEST_CASE("compact type form parses", "[frontend]") {
    ParseResult r = parse("A->B L1(x:int){x < 0}. A->B L2(y:int){x < 10}. end");
    REQUIRE(r.ok());
    CHECK(global_equal(r.protocol->type, fixtures::gs()));

    ParseResult loop = parse("rec T. A->B l(x:int). T");
    REQUIRE(loop.ok());

    ParseResult bad = parse("A->A l(x:int). end");
    CHECK_FALSE(bad.ok());

    ParseResult unbound = parse("T");
    CHECK_FALSE(unbound.ok());
}

TEST_CASE("emit and re-parse is the identity on the corpus", "[frontend]") {
    for (const char* name :
         {"guessing_game", "guessing_game_wildcard", "simple_adder", "ping_pong", "simple_auth",
          "ring_max", "three_buyers", "gs", "three_party_counterexample", "fv_counterexample",
          "both_branch_loop", "resend_loop"}) {
        INFO(name);
        GlobalPtr g = fixtures::load(name);
        std::string emitted = emit_type(g);
        ParseResult back = parse(emitted);
        REQUIRE(back.ok());
        CHECK(global_equal(back.protocol->type, g));
        CHECK(emit_type(back.protocol->type) == emitted);
    }
    CHECK(emit_type(g_end()) == "end");
}

TEST_CASE("emit and re-parse on random global types", "[frontend]") {
    std::mt19937_64 rng(2024);
    for (int iter = 0; iter < 300; ++iter) {
        int labels = 0;
        GlobalPtr g = random_global(rng, 3, labels, {});
        if (!wellformed_issues(g).empty()) continue;
        std::string emitted = emit_type(g);
        ParseResult back = parse(emitted);
        INFO(emitted);
        REQUIRE(back.ok());
        CHECK(global_equal(back.protocol->type, g));
    }
}

TEST_CASE("parser survives mutated and random input", "[frontend]") {
    std::mt19937_64 rng(77);
    std::string base = kGameSource;
    for (int iter = 0; iter < 2000; ++iter) {
        std::string input;
        if (iter % 2 == 0) {
            // byte soup
            std::size_t len = rng() % 120;
            for (std::size_t i = 0; i < len; ++i)
                input.push_back(static_cast<char>(rng() % 256));
        } else {
            // mutate the valid source
            input = base;
            std::size_t edits = 1 + rng() % 6;
            for (std::size_t e = 0; e < edits && !input.empty(); ++e) {
                std::size_t at = rng() % input.size();
                switch (rng() % 3) {
                    case 0: input[at] = static_cast<char>(rng() % 256); break;
                    case 1: input.erase(at, 1); break;
                    default: input.insert(at, 1, static_cast<char>(rng() % 128)); break;
                }
            }
        }
        ParseResult r = parse(input);  // must not crash or throw
        if (!r.ok()) CHECK(!r.diagnostics.empty());
        for (const Diagnostic& d : r.diagnostics) CHECK(d.begin <= input.size() + 1);
    }
}
