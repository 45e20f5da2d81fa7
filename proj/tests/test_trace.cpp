#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fixtures.hpp"
#include "rmpst/trace.hpp"

using namespace rmpst;
using fixtures::correct_action;
using fixtures::correct_receive;
using fixtures::four_action_prefix;
using fixtures::more_action;

namespace {

// Random valid refined traces: a driver that keeps the queue/map pair
// consistent by construction. Refinements are chosen to hold.
Trace random_valid_trace(std::mt19937_64& rng, std::size_t target_len) {
    static const std::vector<Participant> parts = {"A", "B", "C", "D"};
    static const std::vector<std::string> labels = {"l1", "l2", "l3"};
    static const std::vector<VarName> vars = {"a", "b", "c"};

    Trace t;
    Queues queues;
    VarMap m;
    auto true_refinement = [&](const VarName& just_set, Value v) -> RefPtr {
        switch (rng() % 3) {
            case 0: return top();
            case 1: return cmp(CmpOp::Eq, var(just_set), lit(v));
            default: {
                // A comparison over an already-known variable.
                if (m.is_empty()) return top();
                auto it = m.entries().begin();
                std::advance(it, static_cast<long>(rng() % m.size()));
                return cmp(CmpOp::Le, lit(it->second), var(it->first));
            }
        }
    };

    while (t.size() < target_len) {
        bool do_receive = !queues.is_empty() && rng() % 2 == 0;
        if (do_receive) {
            // Pick a nonempty channel and consume its head.
            for (const auto& [chan, fifo] : queues.fifos()) {
                if (fifo.empty()) continue;
                Message head = fifo.front();
                VarMap updated = m.update(head.var, head.value);
                RefPtr r = true_refinement(head.var, head.value);
                if (!models(updated, r)) r = top();
                t.push_back(receive_action(chan.first, chan.second, head, r));
                queues = *queues.pop(chan.first, chan.second);
                m = updated;
                break;
            }
        } else {
            Participant from = parts[rng() % parts.size()];
            Participant to = parts[rng() % parts.size()];
            if (from == to) continue;
            Message msg{labels[rng() % labels.size()], vars[rng() % vars.size()],
                        static_cast<Value>(rng() % 9)};
            VarMap updated = m.update(msg.var, msg.value);
            RefPtr r = true_refinement(msg.var, msg.value);
            if (!models(updated, r)) r = top();
            t.push_back(send_action(from, to, msg, r));
            queues = queues.push(from, to, msg);
            m = updated;
        }
    }
    // Drain every queue so the trace ends well-queued.
    while (!queues.is_empty()) {
        for (const auto& [chan, fifo] : queues.fifos()) {
            if (fifo.empty()) continue;
            Message head = fifo.front();
            t.push_back(receive_action(chan.first, chan.second, head, top()));
            m = m.update(head.var, head.value);
            queues = *queues.pop(chan.first, chan.second);
            break;
        }
    }
    return t;
}

}  // namespace

TEST_CASE("trace ending up with queues", "[trace]") {
    Trace single{send_action("A", "B", Message{"Secret", "n", 5}, top())};
    QueueFold fold = ends_up_with_queue(single, Queues::empty());
    REQUIRE(fold.defined());
    CHECK(fold.queues->length("A", "B") == 1);
    CHECK(fold.queues->peek("A", "B") == Message{"Secret", "n", 5});

    Queues w = Queues::empty().push("A", "B", Message{"l", "x", 1});
    QueueFold idfold = ends_up_with_queue(Trace{}, w);
    REQUIRE(idfold.defined());
    CHECK(*idfold.queues == w);

    Trace bad{receive_action("A", "B", Message{"Secret", "n", 5}, top())};
    QueueFold badfold = ends_up_with_queue(bad, Queues::empty());
    CHECK_FALSE(badfold.defined());
    CHECK(badfold.failed_index == 0);
}

TEST_CASE("well-queued traces", "[trace]") {
    CHECK(is_well_queued(four_action_prefix()));

    Trace dangling = four_action_prefix();
    dangling.push_back(correct_action());  // sent but never received
    CHECK_FALSE(is_well_queued(dangling));

    CHECK(is_well_queued(Trace{}));
}

TEST_CASE("well-predicated traces", "[trace]") {
    Trace good = four_action_prefix();
    good.push_back(correct_action());
    CHECK(is_well_predicated(good, VarMap::empty()));

    Trace bad = four_action_prefix();
    bad.push_back(more_action());  // x > n fails under {x=5, n=5}
    PredicateFold fold = well_predicated_fold(bad, VarMap::empty());
    CHECK_FALSE(fold.ok);
    CHECK(fold.failed_index == 4);
    CHECK(fold.map_at_failure == VarMap::empty().update("n", 5).update("x", 5));

    CHECK(is_well_predicated(Trace{}, VarMap::empty().update("q", 1)));
}

TEST_CASE("valid refined traces", "[trace]") {
    Trace full = four_action_prefix();
    full.push_back(correct_action());
    full.push_back(correct_receive());
    CHECK(is_valid_refined(full));

    Trace unreceived = four_action_prefix();
    unreceived.push_back(correct_action());
    ValidityVerdict verdict = check_valid_refined(unreceived);
    CHECK_FALSE(verdict.valid);
    CHECK(verdict.failure == ValidityVerdict::Failure::NotWellQueued);

    CHECK(is_valid_refined(Trace{}));
}

TEST_CASE("trace ending up with map", "[trace]") {
    VarMap m = end_up_with_map(four_action_prefix(), VarMap::empty());
    CHECK(m == VarMap::empty().update("n", 5).update("x", 5));

    VarMap initial = VarMap::empty().update("k", 9);
    CHECK(end_up_with_map(Trace{}, initial) == initial);

    Trace twice{send_action("A", "B", Message{"l", "x", 1}, top()),
                receive_action("A", "B", Message{"l", "x", 1}, top())};
    CHECK(end_up_with_map(twice, VarMap::empty()) == VarMap::empty().update("x", 1));
}

TEST_CASE("concatenation lemmas on random splits", "[trace]") {
    std::mt19937_64 rng(99);
    for (int iter = 0; iter < 500; ++iter) {
        Trace t = random_valid_trace(rng, 2 + rng() % 10);
        REQUIRE(is_valid_refined(t));
        std::size_t split = rng() % (t.size() + 1);
        Trace t1(t.begin(), t.begin() + static_cast<long>(split));
        Trace t2(t.begin() + static_cast<long>(split), t.end());

        // Well-queued concatenation.
        QueueFold f1 = ends_up_with_queue(t1, Queues::empty());
        REQUIRE(f1.defined());
        QueueFold f2 = ends_up_with_queue(t2, *f1.queues);
        REQUIRE(f2.defined());
        QueueFold whole = ends_up_with_queue(t, Queues::empty());
        REQUIRE(whole.defined());
        CHECK(*whole.queues == *f2.queues);

        // Well-predicated concatenation.
        VarMap m1 = end_up_with_map(t1, VarMap::empty());
        CHECK(is_well_predicated(t1, VarMap::empty()));
        CHECK(is_well_predicated(t2, m1));
        CHECK(is_well_predicated(t, VarMap::empty()));
    }
}

TEST_CASE("receives follow matching sends per channel", "[trace]") {
    std::mt19937_64 rng(123);
    for (int iter = 0; iter < 200; ++iter) {
        Trace t = random_valid_trace(rng, 2 + rng() % 12);
        // Per channel, the receive sequence must be a prefix of the send
        // sequence of messages.
        std::map<std::pair<Participant, Participant>, std::vector<Message>> sent, received;
        for (const Action& a : t) {
            auto chan = std::make_pair(a.sender, a.receiver);
            if (a.dir == Direction::Send) {
                sent[chan].push_back(a.msg);
            } else {
                received[chan].push_back(a.msg);
                std::size_t i = received[chan].size() - 1;
                REQUIRE(i < sent[chan].size());
                CHECK(sent[chan][i] == received[chan][i]);
            }
        }
    }
}

TEST_CASE("trace JSON round-trip", "[trace]") {
    Trace t = four_action_prefix();
    t.push_back(correct_action());
    t.push_back(correct_receive());
    nlohmann::json j = to_json(t);
    Trace back = trace_from_json(j);
    REQUIRE(back.size() == t.size());
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(back[i] == t[i]);

    // A golden record pinning the wire format.
    nlohmann::json first = j[0];
    CHECK(first["from"] == "A");
    CHECK(first["dir"] == "!");
    CHECK(first["to"] == "B");
    CHECK(first["label"] == "Secret");
    CHECK(first["var"] == "n");
    CHECK(first["value"] == 5);
    CHECK(first["refinement"] == "true");
    CHECK(j[4]["refinement"] == "x = n");

    std::mt19937_64 rng(5);
    for (int iter = 0; iter < 100; ++iter) {
        Trace r = random_valid_trace(rng, 1 + rng() % 8);
        Trace rr = trace_from_json(to_json(r));
        REQUIRE(rr.size() == r.size());
        for (std::size_t i = 0; i < r.size(); ++i) CHECK(rr[i] == r[i]);
    }

    CHECK_THROWS(trace_from_json(nlohmann::json::parse("{\"not\":\"array\"}")));
    CHECK_THROWS(trace_from_json(nlohmann::json::parse(
        "[{\"from\":\"A\",\"dir\":\"x\",\"to\":\"B\",\"label\":\"l\",\"var\":\"v\","
        "\"value\":0,\"refinement\":\"true\"}]")));
}
