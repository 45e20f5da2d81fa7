#pragma once

// Shared fixtures: hand-built reference types and traces the suites check
// against, plus protocol-file loading.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "rmpst/frontend.hpp"
#include "rmpst/refinement.hpp"
#include "rmpst/trace.hpp"
#include "rmpst/types.hpp"

namespace fixtures {

using namespace rmpst;

inline std::string protocol_path(const std::string& name) {
    return std::string(RMPST_PROTOCOL_DIR) + "/" + name + ".rscr";
}

inline GlobalPtr load(const std::string& name) {
    std::ifstream in(protocol_path(name), std::ios::binary);
    if (!in) throw std::runtime_error("missing protocol " + name);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_or_throw(buffer.str());
}

inline RefPtr x_lt_n() { return cmp(CmpOp::Lt, var("x"), var("n")); }
inline RefPtr x_gt_n() { return cmp(CmpOp::Gt, var("x"), var("n")); }
inline RefPtr x_eq_n() { return cmp(CmpOp::Eq, var("x"), var("n")); }

// The guessing game in its formal shape: discard payloads on the hints.
inline GlobalPtr guessing_game_wildcard() {
    std::vector<GBranch> hints;
    hints.push_back(GBranch{"More", kDiscardVar, Sort::Int, x_lt_n(), g_recvar("T")});
    hints.push_back(GBranch{"Less", kDiscardVar, Sort::Int, x_gt_n(), g_recvar("T")});
    hints.push_back(GBranch{"Correct", kDiscardVar, Sort::Int, x_eq_n(), g_end()});
    GlobalPtr loop = g_rec("T", g_msg("C", "B", "Guess", "x", top(),
                                      g_comm("B", "C", std::move(hints))));
    return g_msg("A", "B", "Secret", "n", top(), loop);
}

// Gs: two sends where the second refinement is implied by the first.
inline GlobalPtr gs() {
    return g_msg("A", "B", "L1", "x", parse_refinement_or_throw("x < 0"),
                 g_msg("A", "B", "L2", "y", parse_refinement_or_throw("x < 10"), g_end()));
}

// The four-action prefix of the guessing game: secret and guess exchanged.
inline Trace four_action_prefix() {
    Trace t;
    t.push_back(send_action("A", "B", Message{"Secret", "n", 5}, top()));
    t.push_back(receive_action("A", "B", Message{"Secret", "n", 5}, top()));
    t.push_back(send_action("C", "B", Message{"Guess", "x", 5}, top()));
    t.push_back(receive_action("C", "B", Message{"Guess", "x", 5}, top()));
    return t;
}

inline Action more_action() {
    return send_action("B", "C", Message{"More", kDiscardVar, 0}, x_gt_n());
}

inline Action correct_action() {
    return send_action("B", "C", Message{"Correct", kDiscardVar, 0}, x_eq_n());
}

inline Action correct_receive() {
    return receive_action("B", "C", Message{"Correct", kDiscardVar, 0}, top());
}

}  // namespace fixtures
