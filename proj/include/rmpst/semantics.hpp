#pragma once

// Centralised and decentralised step relations over refined communicating
// systems, runs and their traces, bounded exploration (exhaustive, random,
// scripted), a bounded simulation checker, and a live concurrent runner.

#include <atomic>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "rmpst/automata.hpp"
#include "rmpst/refinement.hpp"
#include "rmpst/trace.hpp"

namespace rmpst {

// One fired transition of one machine together with the payload value the
// semantics chose for it.
struct GlobalStep {
    Participant participant;
    Transition transition;
    Value value = 0;

    Action action() const {
        const SymbolicAction& a = transition.action;
        return Action{a.sender, a.dir, a.receiver, Message{a.label, a.var, value}, a.refinement};
    }

    std::string to_string() const { return action().to_string(); }
};

// What a step looks like from the outside: the action without its
// refinement annotation. Refinements guard firing but are not observable,
// which is what makes elision candidates comparable at all.
struct StepLabel {
    Direction dir = Direction::Send;
    Participant sender, receiver;
    std::string label;
    VarName var;
    Value value = 0;

    bool operator==(const StepLabel& o) const {
        return dir == o.dir && sender == o.sender && receiver == o.receiver && label == o.label &&
               var == o.var && value == o.value;
    }
    bool operator<(const StepLabel& o) const {
        return std::tie(dir, sender, receiver, label, var, value) <
               std::tie(o.dir, o.sender, o.receiver, o.label, o.var, o.value);
    }

    std::string to_string() const {
        return sender + std::string(1, direction_char(dir)) + receiver + ":" + label + "(" + var +
               "," + std::to_string(value) + ")";
    }
};

inline StepLabel label_of(const GlobalStep& s) {
    const SymbolicAction& a = s.transition.action;
    return StepLabel{a.dir, a.sender, a.receiver, a.label, a.var, s.value};
}

class StepNotEnabled : public std::runtime_error {
public:
    explicit StepNotEnabled(const std::string& what) : std::runtime_error(what) {}
};

struct ScriptEntry {
    Participant participant;
    std::string label;
    Value value = 0;
};

struct ExploreParams {
    std::vector<Value> value_domain = {0, 1, 2, 3, 4};
    int max_depth = 12;
    int max_queue_len = 4;
    std::uint64_t seed = 0;
    std::vector<ScriptEntry> script;
    std::size_t max_runs = 5'000'000;  // safety valve for the exhaustive mode
    bool store_runs = true;            // keep full configuration sequences
};

namespace detail {

// Discard payloads carry a single canonical value; everything else ranges
// over the configured domain.
inline std::vector<Value> value_candidates(const VarName& var, const std::vector<Value>& domain) {
    if (var == kDiscardVar) return {0};
    return domain;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Centralised semantics (one shared map)

inline std::vector<GlobalStep> enabled_centralised(const Rcs& rcs, const Configuration& c,
                                                   const std::vector<Value>& domain) {
    std::vector<GlobalStep> out;
    for (const auto& [p, m] : rcs.machines) {
        int state = c.states.at(p);
        for (const Transition& t : m.transitions) {
            if (t.src != state) continue;
            const SymbolicAction& a = t.action;
            if (a.dir == Direction::Send) {
                for (Value v : detail::value_candidates(a.var, domain)) {
                    if (models(c.global_map.update(a.var, v), a.refinement))
                        out.push_back(GlobalStep{p, t, v});
                }
            } else {
                auto head = c.queues.peek(a.sender, a.receiver);
                if (!head || head->label != a.label || head->var != a.var) continue;
                if (models(c.global_map.update(a.var, head->value), a.refinement))
                    out.push_back(GlobalStep{p, t, head->value});
            }
        }
    }
    return out;
}

inline Configuration apply_centralised(const Rcs& rcs, const Configuration& c,
                                       const GlobalStep& s) {
    const SymbolicAction& a = s.transition.action;
    const Rcfsm& m = rcs.machines.at(s.participant);
    (void)m;
    if (c.states.at(s.participant) != s.transition.src)
        throw StepNotEnabled("machine of " + s.participant + " is not at the step's source state");
    if (!models(c.global_map.update(a.var, s.value), a.refinement))
        throw StepNotEnabled("refinement " + rmpst::to_string(a.refinement) + " does not hold");
    Configuration next = c;
    next.states[s.participant] = s.transition.dst;
    next.global_map = c.global_map.update(a.var, s.value);
    if (a.dir == Direction::Send) {
        next.queues = c.queues.push(a.sender, a.receiver, Message{a.label, a.var, s.value});
    } else {
        auto head = c.queues.peek(a.sender, a.receiver);
        if (!head || head->label != a.label || head->var != a.var || head->value != s.value)
            throw StepNotEnabled("message " + a.label + " is not at the head of the queue");
        next.queues = *c.queues.pop(a.sender, a.receiver);
    }
    return next;
}

// ---------------------------------------------------------------------------
// Decentralised semantics (one local map per participant; sending a
// variable erases it from the sender's map)

inline std::vector<GlobalStep> enabled_decentralised(const Rcs& rcs, const DecConfiguration& c,
                                                     const std::vector<Value>& domain) {
    std::vector<GlobalStep> out;
    for (const auto& [p, m] : rcs.machines) {
        int state = c.states.at(p);
        const VarMap& local = c.local_maps.at(p);
        for (const Transition& t : m.transitions) {
            if (t.src != state) continue;
            const SymbolicAction& a = t.action;
            if (a.dir == Direction::Send) {
                for (Value v : detail::value_candidates(a.var, domain)) {
                    if (models(local.update(a.var, v), a.refinement))
                        out.push_back(GlobalStep{p, t, v});
                }
            } else {
                auto head = c.queues.peek(a.sender, a.receiver);
                if (!head || head->label != a.label || head->var != a.var) continue;
                if (models(local.update(a.var, head->value), a.refinement))
                    out.push_back(GlobalStep{p, t, head->value});
            }
        }
    }
    return out;
}

inline DecConfiguration apply_decentralised(const Rcs& rcs, const DecConfiguration& c,
                                            const GlobalStep& s) {
    (void)rcs;
    const SymbolicAction& a = s.transition.action;
    const Participant& p = s.participant;
    if (c.states.at(p) != s.transition.src)
        throw StepNotEnabled("machine of " + p + " is not at the step's source state");
    const VarMap& local = c.local_maps.at(p);
    if (!models(local.update(a.var, s.value), a.refinement))
        throw StepNotEnabled("refinement " + rmpst::to_string(a.refinement) +
                             " does not hold locally at " + p);
    DecConfiguration next = c;
    next.states[p] = s.transition.dst;
    if (a.dir == Direction::Send) {
        next.local_maps[p] = local.remove(a.var);
        next.queues = c.queues.push(a.sender, a.receiver, Message{a.label, a.var, s.value});
    } else {
        auto head = c.queues.peek(a.sender, a.receiver);
        if (!head || head->label != a.label || head->var != a.var || head->value != s.value)
            throw StepNotEnabled("message " + a.label + " is not at the head of the queue");
        next.local_maps[p] = local.update(a.var, s.value);
        next.queues = *c.queues.pop(a.sender, a.receiver);
    }
    return next;
}

// ---------------------------------------------------------------------------
// Runs and traces

struct Run {
    std::vector<Configuration> configs;  // first is initial
    std::vector<GlobalStep> steps;       // configs.size() == steps.size() + 1
};

struct DecRun {
    std::vector<DecConfiguration> configs;
    std::vector<GlobalStep> steps;
};

inline Trace trace_of_steps(const std::vector<GlobalStep>& steps) {
    Trace t;
    for (const GlobalStep& s : steps) t.push_back(s.action());
    return t;
}

inline Trace trace_of_run(const Run& run) { return trace_of_steps(run.steps); }
inline Trace trace_of_run(const DecRun& run) { return trace_of_steps(run.steps); }

// Replay a step list from the initial configuration; throws StepNotEnabled
// on divergence. Used to re-validate extracted traces.
inline Run replay_centralised(const Rcs& rcs, const std::vector<GlobalStep>& steps) {
    Run run;
    run.configs.push_back(initial_configuration(rcs));
    for (const GlobalStep& s : steps) {
        run.configs.push_back(apply_centralised(rcs, run.configs.back(), s));
        run.steps.push_back(s);
    }
    return run;
}

// ---------------------------------------------------------------------------
// Bounded exploration

enum class SemanticsKind { Centralised, Decentralised };

class ScriptDiverged : public std::runtime_error {
public:
    ScriptDiverged(std::size_t index, const std::string& what)
        : std::runtime_error("script diverged at entry " + std::to_string(index) + ": " + what),
          index(index) {}
    std::size_t index;
};

template <typename Config>
struct ExploredRun {
    std::vector<Config> configs;  // empty when store_runs was off
    std::vector<GlobalStep> steps;
    Trace trace;
};

template <typename Config>
struct ExploreResult {
    std::vector<ExploredRun<Config>> final_runs;  // runs ending in a final configuration
    std::vector<ExploredRun<Config>> stuck_runs;  // maximal runs that end non-final
    bool queue_bound_hit = false;
    bool depth_bound_hit = false;
    std::size_t paths_explored = 0;
};

using CentralisedExplore = ExploreResult<Configuration>;
using DecentralisedExplore = ExploreResult<DecConfiguration>;

namespace detail {

template <typename Config, typename EnabledFn, typename ApplyFn>
class Explorer {
public:
    Explorer(const ExploreParams& params, EnabledFn enabled, ApplyFn apply)
        : params_(params), enabled_(std::move(enabled)), apply_(std::move(apply)) {}

    ExploreResult<Config> exhaustive(const Config& initial) {
        configs_.push_back(initial);
        visit(0);
        return std::move(result_);
    }

    ExploredRun<Config> random_run(const Config& initial, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        ExploredRun<Config> run;
        run.configs.push_back(initial);
        Config current = initial;
        for (int depth = 0; depth < params_.max_depth; ++depth) {
            auto [steps, bound_hit] = filtered_steps(current);
            (void)bound_hit;
            if (steps.empty()) break;
            const GlobalStep& pick = steps[rng() % steps.size()];
            current = apply_(current, pick);
            run.steps.push_back(pick);
            run.configs.push_back(current);
        }
        run.trace = trace_of_steps(run.steps);
        return run;
    }

    ExploredRun<Config> scripted_run(const Config& initial) {
        ExploredRun<Config> run;
        run.configs.push_back(initial);
        Config current = initial;
        for (std::size_t i = 0; i < params_.script.size(); ++i) {
            const ScriptEntry& entry = params_.script[i];
            auto [steps, bound_hit] = filtered_steps(current);
            (void)bound_hit;
            const GlobalStep* match = nullptr;
            for (const GlobalStep& s : steps) {
                if (s.participant == entry.participant && s.transition.action.label == entry.label &&
                    s.value == entry.value) {
                    match = &s;
                    break;
                }
            }
            if (!match)
                throw ScriptDiverged(i, "no enabled step " + entry.participant + " " + entry.label +
                                            "(" + std::to_string(entry.value) + ")");
            current = apply_(current, *match);
            run.steps.push_back(*match);
            run.configs.push_back(current);
        }
        run.trace = trace_of_steps(run.steps);
        return run;
    }

private:
    // Enabled steps minus those that would overflow a queue.
    std::pair<std::vector<GlobalStep>, bool> filtered_steps(const Config& c) {
        std::vector<GlobalStep> steps = enabled_(c);
        bool bound_hit = false;
        std::vector<GlobalStep> kept;
        for (GlobalStep& s : steps) {
            const SymbolicAction& a = s.transition.action;
            if (a.dir == Direction::Send &&
                c.queues.length(a.sender, a.receiver) >=
                    static_cast<std::size_t>(params_.max_queue_len)) {
                bound_hit = true;
                continue;
            }
            kept.push_back(std::move(s));
        }
        return {std::move(kept), bound_hit};
    }

    void record_run(bool final_here) {
        ExploredRun<Config> run;
        if (params_.store_runs) run.configs = configs_;
        run.steps = steps_;
        run.trace = trace_of_steps(steps_);
        auto& bucket = final_here ? result_.final_runs : result_.stuck_runs;
        bucket.push_back(std::move(run));
        if (result_.final_runs.size() + result_.stuck_runs.size() > params_.max_runs)
            throw std::runtime_error("exploration exceeded the run cap");
    }

    void visit(int depth) {
        ++result_.paths_explored;
        const Config& current = configs_.back();
        bool final_here = is_final(current);
        if (final_here) record_run(true);
        if (depth >= params_.max_depth) {
            auto [steps, bound_hit] = filtered_steps(current);
            result_.queue_bound_hit |= bound_hit;
            if (!steps.empty()) result_.depth_bound_hit = true;
            if (steps.empty() && !bound_hit && !final_here) record_run(false);
            return;
        }
        auto [steps, bound_hit] = filtered_steps(current);
        result_.queue_bound_hit |= bound_hit;
        if (steps.empty()) {
            if (!final_here && !bound_hit) record_run(false);
            return;
        }
        for (const GlobalStep& s : steps) {
            configs_.push_back(apply_(configs_.back(), s));
            steps_.push_back(s);
            visit(depth + 1);
            configs_.pop_back();
            steps_.pop_back();
        }
    }

    const ExploreParams& params_;
    EnabledFn enabled_;
    ApplyFn apply_;
    std::vector<Config> configs_;
    std::vector<GlobalStep> steps_;
    ExploreResult<Config> result_;
};

}  // namespace detail

inline CentralisedExplore explore_centralised(const Rcs& rcs, const ExploreParams& params) {
    auto enabled = [&](const Configuration& c) {
        return enabled_centralised(rcs, c, params.value_domain);
    };
    auto apply = [&](const Configuration& c, const GlobalStep& s) {
        return apply_centralised(rcs, c, s);
    };
    detail::Explorer<Configuration, decltype(enabled), decltype(apply)> ex(params, enabled, apply);
    return ex.exhaustive(initial_configuration(rcs));
}

inline DecentralisedExplore explore_decentralised(const Rcs& rcs, const ExploreParams& params) {
    auto enabled = [&](const DecConfiguration& c) {
        return enabled_decentralised(rcs, c, params.value_domain);
    };
    auto apply = [&](const DecConfiguration& c, const GlobalStep& s) {
        return apply_decentralised(rcs, c, s);
    };
    detail::Explorer<DecConfiguration, decltype(enabled), decltype(apply)> ex(params, enabled, apply);
    return ex.exhaustive(initial_dec_configuration(rcs));
}

inline ExploredRun<Configuration> random_run_centralised(const Rcs& rcs,
                                                         const ExploreParams& params) {
    auto enabled = [&](const Configuration& c) {
        return enabled_centralised(rcs, c, params.value_domain);
    };
    auto apply = [&](const Configuration& c, const GlobalStep& s) {
        return apply_centralised(rcs, c, s);
    };
    detail::Explorer<Configuration, decltype(enabled), decltype(apply)> ex(params, enabled, apply);
    return ex.random_run(initial_configuration(rcs), params.seed);
}

inline ExploredRun<DecConfiguration> random_run_decentralised(const Rcs& rcs,
                                                              const ExploreParams& params) {
    auto enabled = [&](const DecConfiguration& c) {
        return enabled_decentralised(rcs, c, params.value_domain);
    };
    auto apply = [&](const DecConfiguration& c, const GlobalStep& s) {
        return apply_decentralised(rcs, c, s);
    };
    detail::Explorer<DecConfiguration, decltype(enabled), decltype(apply)> ex(params, enabled, apply);
    return ex.random_run(initial_dec_configuration(rcs), params.seed);
}

inline ExploredRun<Configuration> scripted_run_centralised(const Rcs& rcs,
                                                           const ExploreParams& params) {
    auto enabled = [&](const Configuration& c) {
        return enabled_centralised(rcs, c, params.value_domain);
    };
    auto apply = [&](const Configuration& c, const GlobalStep& s) {
        return apply_centralised(rcs, c, s);
    };
    detail::Explorer<Configuration, decltype(enabled), decltype(apply)> ex(params, enabled, apply);
    return ex.scripted_run(initial_configuration(rcs));
}

inline ExploredRun<DecConfiguration> scripted_run_decentralised(const Rcs& rcs,
                                                                const ExploreParams& params) {
    auto enabled = [&](const DecConfiguration& c) {
        return enabled_decentralised(rcs, c, params.value_domain);
    };
    auto apply = [&](const DecConfiguration& c, const GlobalStep& s) {
        return apply_decentralised(rcs, c, s);
    };
    detail::Explorer<DecConfiguration, decltype(enabled), decltype(apply)> ex(params, enabled, apply);
    return ex.scripted_run(initial_dec_configuration(rcs));
}

// ---------------------------------------------------------------------------
// Labelled transition system view for simulation checking

class Lts {
public:
    virtual ~Lts() = default;
    virtual int initial_state() = 0;
    virtual const std::vector<std::pair<StepLabel, int>>& successors(int state) = 0;
};

namespace detail {

template <typename Config, typename EnabledFn, typename ApplyFn>
class MemoLts : public Lts {
public:
    MemoLts(Config initial, const ExploreParams& params, EnabledFn enabled, ApplyFn apply)
        : params_(params), enabled_(std::move(enabled)), apply_(std::move(apply)) {
        intern(std::move(initial));
    }

    int initial_state() override { return 0; }

    const std::vector<std::pair<StepLabel, int>>& successors(int state) override {
        if (succs_.count(state)) return succs_[state];
        const Config c = configs_[static_cast<std::size_t>(state)];
        std::vector<std::pair<StepLabel, int>> out;
        for (const GlobalStep& s : enabled_(c)) {
            const SymbolicAction& a = s.transition.action;
            if (a.dir == Direction::Send &&
                c.queues.length(a.sender, a.receiver) >=
                    static_cast<std::size_t>(params_.max_queue_len))
                continue;
            out.emplace_back(label_of(s), intern(apply_(c, s)));
        }
        return succs_[state] = std::move(out);
    }

private:
    int intern(Config c) {
        std::string key = c.key();
        auto it = index_.find(key);
        if (it != index_.end()) return it->second;
        int id = static_cast<int>(configs_.size());
        configs_.push_back(std::move(c));
        index_.emplace(std::move(key), id);
        return id;
    }

    ExploreParams params_;
    EnabledFn enabled_;
    ApplyFn apply_;
    std::vector<Config> configs_;
    std::map<std::string, int> index_;
    std::map<int, std::vector<std::pair<StepLabel, int>>> succs_;
};

}  // namespace detail

inline std::unique_ptr<Lts> make_lts(const Rcs& rcs, SemanticsKind kind,
                                     const ExploreParams& params) {
    if (kind == SemanticsKind::Centralised) {
        auto enabled = [&rcs, params](const Configuration& c) {
            return enabled_centralised(rcs, c, params.value_domain);
        };
        auto apply = [&rcs](const Configuration& c, const GlobalStep& s) {
            return apply_centralised(rcs, c, s);
        };
        return std::make_unique<detail::MemoLts<Configuration, decltype(enabled), decltype(apply)>>(
            initial_configuration(rcs), params, enabled, apply);
    }
    auto enabled = [&rcs, params](const DecConfiguration& c) {
        return enabled_decentralised(rcs, c, params.value_domain);
    };
    auto apply = [&rcs](const DecConfiguration& c, const GlobalStep& s) {
        return apply_decentralised(rcs, c, s);
    };
    return std::make_unique<detail::MemoLts<DecConfiguration, decltype(enabled), decltype(apply)>>(
        initial_dec_configuration(rcs), params, enabled, apply);
}

// ---------------------------------------------------------------------------
// Bounded simulation and bisimulation

struct SimulationVerdict {
    enum class Kind { Simulates, Counterexample, BoundExceeded };
    Kind kind = Kind::Simulates;
    bool truncated = false;              // the depth bound cut off the product
    std::vector<StepLabel> prefix;       // matched steps leading to the failure
    std::optional<StepLabel> failing;    // step the other side could not match
    std::size_t pairs_explored = 0;

    bool simulates() const { return kind == Kind::Simulates; }

    std::string describe() const {
        switch (kind) {
            case Kind::Simulates:
                return truncated ? "SIMULATES (within bounds)" : "SIMULATES";
            case Kind::BoundExceeded: return "BOUND EXCEEDED (inconclusive)";
            case Kind::Counterexample: {
                std::ostringstream os;
                os << "COUNTEREXAMPLE after [";
                for (std::size_t i = 0; i < prefix.size(); ++i) {
                    if (i) os << "; ";
                    os << prefix[i].to_string();
                }
                os << "]: step " << (failing ? failing->to_string() : "?") << " cannot be matched";
                return os.str();
            }
        }
        return "?";
    }
};

namespace detail {

struct ProductPair {
    int mover = 0;
    int mimic = 0;
    int depth = 0;
    bool frontier = false;  // sits at the depth bound; treated optimistically
    // One entry per mover step: its label and the surviving candidate pairs.
    std::vector<std::pair<StepLabel, std::vector<int>>> obligations;
    int parent = -1;
    StepLabel via;  // step taken from the parent
};

// Greatest simulation over the bounded reachable product: `mimic` must be
// able to answer every move of `mover`.
inline SimulationVerdict bounded_simulation(Lts& mimic, Lts& mover, int depth_bound) {
    std::vector<ProductPair> pairs;
    std::map<std::pair<int, int>, int> index;

    auto intern = [&](int mv, int mi, int depth, int parent, const StepLabel& via) {
        auto key = std::make_pair(mv, mi);
        auto it = index.find(key);
        if (it != index.end()) return it->second;
        ProductPair p;
        p.mover = mv;
        p.mimic = mi;
        p.depth = depth;
        p.parent = parent;
        p.via = via;
        int id = static_cast<int>(pairs.size());
        pairs.push_back(std::move(p));
        index.emplace(key, id);
        return id;
    };

    SimulationVerdict verdict;
    intern(mover.initial_state(), mimic.initial_state(), 0, -1, StepLabel{});

    // Breadth-first product expansion along matched moves.
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        int depth = pairs[i].depth;
        if (depth >= depth_bound) {
            pairs[i].frontier = true;
            verdict.truncated = true;
            continue;
        }
        const auto& mover_steps = mover.successors(pairs[i].mover);
        const auto& mimic_steps = mimic.successors(pairs[i].mimic);
        for (const auto& [lbl, mv_next] : mover_steps) {
            std::vector<int> candidates;
            for (const auto& [lbl2, mi_next] : mimic_steps) {
                if (lbl2 == lbl)
                    candidates.push_back(
                        intern(mv_next, mi_next, depth + 1, static_cast<int>(i), lbl));
            }
            pairs[i].obligations.emplace_back(lbl, std::move(candidates));
        }
    }
    verdict.pairs_explored = pairs.size();

    // Refine: a pair fails when some mover step has no surviving candidate.
    // bad_seq records marking order, witness_ob the obligation that failed;
    // following the witness towards earlier-marked candidates terminates.
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
                for (int c : pairs[i].obligations[ob].second)
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
        verdict.kind = SimulationVerdict::Kind::Simulates;
        return verdict;
    }

    // Build a distinguishing sequence: play the failing obligation at each
    // pair and let the mimic answer with the earliest-failing candidate.
    verdict.kind = SimulationVerdict::Kind::Counterexample;
    int cur = 0;
    while (true) {
        const ProductPair& p = pairs[static_cast<std::size_t>(cur)];
        const auto& ob = p.obligations[static_cast<std::size_t>(witness_ob[cur])];
        if (ob.second.empty()) {
            verdict.failing = ob.first;
            return verdict;
        }
        int next = ob.second.front();
        for (int c : ob.second)
            if (bad_seq[static_cast<std::size_t>(c)] < bad_seq[static_cast<std::size_t>(next)])
                next = c;
        verdict.prefix.push_back(ob.first);
        cur = next;
    }
}

}  // namespace detail

// Verdict SIMULATES means `lhs` can mimic every move of `rhs` within the
// bounded reachable product.
inline SimulationVerdict check_simulation(Lts& lhs, Lts& rhs, int depth_bound) {
    return detail::bounded_simulation(lhs, rhs, depth_bound);
}

inline SimulationVerdict check_simulation(const Rcs& rcs, SemanticsKind lhs_kind,
                                          SemanticsKind rhs_kind, const ExploreParams& params) {
    auto lhs = make_lts(rcs, lhs_kind, params);
    auto rhs = make_lts(rcs, rhs_kind, params);
    return check_simulation(*lhs, *rhs, params.max_depth);
}

// ---------------------------------------------------------------------------
// Conditions for decentralised verification, checked on one configuration.
// Clause 1: no variable sits in two places at once (maps or queued
// messages); the write-only discard variable is exempt. Clause 2: each
// refinement on an outgoing transition is closed under the acting
// participant's map extended with the payload.

struct ConditionViolation {
    int clause = 0;
    std::string description;
};

inline std::optional<ConditionViolation> check_dec_conditions(const Rcs& rcs,
                                                              const DecConfiguration& c) {
    std::map<VarName, std::vector<std::string>> locations;
    for (const auto& [p, m] : c.local_maps) {
        for (const auto& [x, _] : m.entries())
            if (x != kDiscardVar) locations[x].push_back("map of " + p);
    }
    for (const auto& [chan, fifo] : c.queues.fifos()) {
        for (const Message& msg : fifo)
            if (msg.var != kDiscardVar)
                locations[msg.var].push_back("queue " + chan.first + ">" + chan.second);
    }
    for (const auto& [x, locs] : locations) {
        if (locs.size() > 1) {
            std::string desc = "variable " + x + " duplicated across";
            for (const std::string& l : locs) desc += " [" + l + "]";
            return ConditionViolation{1, desc};
        }
    }
    for (const auto& [p, m] : rcs.machines) {
        int state = c.states.at(p);
        const VarMap& local = c.local_maps.at(p);
        for (const Transition& t : m.transitions) {
            if (t.src != state) continue;
            std::set<VarName> need = fv(t.action.refinement);
            for (const VarName& x : need) {
                if (x != t.action.var && !local.contains(x))
                    return ConditionViolation{
                        2, "refinement " + rmpst::to_string(t.action.refinement) + " at " + p +
                               " needs " + x + " which is not in its local map"};
            }
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Live concurrent execution: one worker thread per participant running the
// decentralised semantics. The queues are the only shared structure (one
// lock per FIFO; a participant is the only consumer of its incoming FIFOs
// and the only producer of its outgoing ones). Local maps stay confined to
// their worker. The commit log serialises the observed actions.

struct ConcurrentRunResult {
    Trace trace;
    bool completed = false;  // all workers went idle before the step budget
};

namespace detail {

struct SharedChannel {
    std::mutex mutex;
    std::deque<Message> fifo;
};

}  // namespace detail

inline ConcurrentRunResult run_concurrent(const Rcs& rcs, const ExploreParams& params) {
    std::vector<Participant> parts = rcs.participants();
    std::map<std::pair<Participant, Participant>, std::unique_ptr<detail::SharedChannel>> channels;
    for (const Participant& a : parts)
        for (const Participant& b : parts)
            if (a != b) channels[{a, b}] = std::make_unique<detail::SharedChannel>();

    std::mutex log_mutex;
    Trace log;

    // Progress monitor for termination detection.
    std::mutex monitor;
    std::condition_variable cv;
    std::uint64_t version = 0;
    int blocked = 0;
    int active = static_cast<int>(parts.size());
    bool done = false;
    std::atomic<int> budget{params.max_depth};

    // Workers that leave (budget spent) must not starve the all-blocked check.
    auto leave = [&] {
        std::lock_guard<std::mutex> lk(monitor);
        --active;
        if (blocked >= active) done = true;
        cv.notify_all();
    };

    auto worker = [&](const Participant& self, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        const Rcfsm& machine = rcs.machines.at(self);
        int state = machine.initial;
        VarMap local;

        while (true) {
            if (budget.load() <= 0) return leave();

            struct Candidate {
                const Transition* t;
                Value value;
            };
            std::vector<Candidate> candidates;
            for (const Transition& t : machine.transitions) {
                if (t.src != state) continue;
                const SymbolicAction& a = t.action;
                if (a.dir == Direction::Send) {
                    detail::SharedChannel& chan = *channels.at({a.sender, a.receiver});
                    {
                        std::lock_guard<std::mutex> lk(chan.mutex);
                        if (chan.fifo.size() >= static_cast<std::size_t>(params.max_queue_len))
                            continue;
                    }
                    for (Value v : detail::value_candidates(a.var, params.value_domain))
                        if (models(local.update(a.var, v), a.refinement))
                            candidates.push_back({&t, v});
                } else {
                    detail::SharedChannel& chan = *channels.at({a.sender, a.receiver});
                    std::optional<Message> head;
                    {
                        std::lock_guard<std::mutex> lk(chan.mutex);
                        if (!chan.fifo.empty()) head = chan.fifo.front();
                    }
                    if (head && head->label == a.label && head->var == a.var &&
                        models(local.update(a.var, head->value), a.refinement))
                        candidates.push_back({&t, head->value});
                }
            }

            if (candidates.empty()) {
                std::unique_lock<std::mutex> lk(monitor);
                std::uint64_t seen = version;
                ++blocked;
                if (blocked >= active) {
                    done = true;
                    --blocked;
                    --active;
                    cv.notify_all();
                    return;
                }
                cv.wait(lk, [&] { return done || version != seen; });
                --blocked;
                if (done) {
                    --active;
                    cv.notify_all();
                    return;
                }
                continue;
            }

            if (budget.fetch_sub(1) <= 0) return leave();
            const Candidate& pick = candidates[rng() % candidates.size()];
            const SymbolicAction& a = pick.t->action;
            // The queue operation and its log entry commit together, so the
            // observed trace is a linearisation of the run.
            {
                std::lock_guard<std::mutex> log_lk(log_mutex);
                detail::SharedChannel& chan = *channels.at({a.sender, a.receiver});
                std::lock_guard<std::mutex> chan_lk(chan.mutex);
                if (a.dir == Direction::Send) {
                    chan.fifo.push_back(Message{a.label, a.var, pick.value});
                    local = local.remove(a.var);
                } else {
                    chan.fifo.pop_front();  // single consumer: the head we saw
                    local = local.update(a.var, pick.value);
                }
                log.push_back(Action{a.sender, a.dir, a.receiver,
                                     Message{a.label, a.var, pick.value}, a.refinement});
            }
            state = pick.t->dst;
            {
                std::lock_guard<std::mutex> lk(monitor);
                ++version;
                cv.notify_all();
            }
        }
    };

    std::vector<std::thread> threads;
    std::uint64_t seed = params.seed;
    for (const Participant& p : parts) threads.emplace_back(worker, p, seed++);
    for (std::thread& t : threads) t.join();

    ConcurrentRunResult result;
    result.trace = std::move(log);
    result.completed = done;
    return result;
}

}  // namespace rmpst
