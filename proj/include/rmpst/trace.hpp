#pragma once

// Actions, traces and per-pair FIFO queues, plus the three validity
// judgements on traces: well-queued, well-predicated, valid refined.

#include <deque>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rmpst/refinement.hpp"

namespace rmpst {

using Participant = std::string;

struct Message {
    std::string label;
    VarName var;
    Value value = 0;

    bool operator==(const Message& o) const {
        return label == o.label && var == o.var && value == o.value;
    }
    bool operator!=(const Message& o) const { return !(*this == o); }

    std::string to_string() const {
        return label + "(" + var + "," + std::to_string(value) + ")";
    }
};

enum class Direction { Send, Receive };

inline char direction_char(Direction d) { return d == Direction::Send ? '!' : '?'; }

struct Action {
    Participant sender;
    Direction dir = Direction::Send;
    Participant receiver;
    Message msg;
    RefPtr refinement;  // never null

    bool operator==(const Action& o) const {
        return sender == o.sender && dir == o.dir && receiver == o.receiver && msg == o.msg &&
               refinement_equal(refinement, o.refinement);
    }

    std::string to_string() const {
        std::ostringstream os;
        os << sender << direction_char(dir) << receiver << ":" << msg.to_string();
        if (!is_top(refinement)) os << "{" << rmpst::to_string(refinement) << "}";
        return os.str();
    }
};

inline Action send_action(Participant from, Participant to, Message m, RefPtr r) {
    return Action{std::move(from), Direction::Send, std::move(to), std::move(m), std::move(r)};
}
inline Action receive_action(Participant from, Participant to, Message m, RefPtr r) {
    return Action{std::move(from), Direction::Receive, std::move(to), std::move(m), std::move(r)};
}

using Trace = std::vector<Action>;

inline std::string to_string(const Trace& t) {
    std::ostringstream os;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) os << " . ";
        os << t[i].to_string();
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Queues: one FIFO per ordered pair of distinct participants. Pairs not
// present behave as the empty FIFO, so the empty map is w_empty.

class Queues {
public:
    using Channel = std::pair<Participant, Participant>;

    static Queues empty() { return Queues{}; }

    bool is_empty() const {
        for (const auto& [_, fifo] : fifos_)
            if (!fifo.empty()) return false;
        return true;
    }

    Queues push(const Participant& from, const Participant& to, Message m) const {
        Queues out = *this;
        out.fifos_[{from, to}].push_back(std::move(m));
        return out;
    }

    std::optional<Message> peek(const Participant& from, const Participant& to) const {
        auto it = fifos_.find({from, to});
        if (it == fifos_.end() || it->second.empty()) return std::nullopt;
        return it->second.front();
    }

    // Defined iff peek is defined.
    std::optional<Queues> pop(const Participant& from, const Participant& to) const {
        auto it = fifos_.find({from, to});
        if (it == fifos_.end() || it->second.empty()) return std::nullopt;
        Queues out = *this;
        auto& fifo = out.fifos_[{from, to}];
        fifo.pop_front();
        if (fifo.empty()) out.fifos_.erase({from, to});
        return out;
    }

    std::size_t length(const Participant& from, const Participant& to) const {
        auto it = fifos_.find({from, to});
        return it == fifos_.end() ? 0 : it->second.size();
    }

    std::size_t total_messages() const {
        std::size_t n = 0;
        for (const auto& [_, fifo] : fifos_) n += fifo.size();
        return n;
    }

    const std::map<Channel, std::deque<Message>>& fifos() const { return fifos_; }

    bool operator==(const Queues& o) const { return fifos_ == o.fifos_; }
    bool operator!=(const Queues& o) const { return !(*this == o); }

    std::string to_string() const {
        std::ostringstream os;
        os << "{";
        bool first = true;
        for (const auto& [chan, fifo] : fifos_) {
            if (fifo.empty()) continue;
            if (!first) os << ", ";
            first = false;
            os << chan.first << ">" << chan.second << ": [";
            for (std::size_t i = 0; i < fifo.size(); ++i) {
                if (i) os << ", ";
                os << fifo[i].to_string();
            }
            os << "]";
        }
        os << "}";
        return os.str();
    }

private:
    std::map<Channel, std::deque<Message>> fifos_;
};

// ---------------------------------------------------------------------------
// Trace judgements

// Folding a trace over queues: sends push, receives pop the matching head.
// Undefined when a receive does not match; the witness index is reported.
struct QueueFold {
    std::optional<Queues> queues;        // final queues when defined
    std::size_t failed_index = 0;        // first offending action otherwise
    Queues queues_at_failure;

    bool defined() const { return queues.has_value(); }
};

inline QueueFold ends_up_with_queue(const Trace& t, Queues initial) {
    Queues w = std::move(initial);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const Action& a = t[i];
        if (a.dir == Direction::Send) {
            w = w.push(a.sender, a.receiver, a.msg);
        } else {
            auto head = w.peek(a.sender, a.receiver);
            if (!head || *head != a.msg) return QueueFold{std::nullopt, i, w};
            w = *w.pop(a.sender, a.receiver);
        }
    }
    return QueueFold{std::move(w), 0, Queues::empty()};
}

inline bool is_well_queued(const Trace& t) {
    QueueFold fold = ends_up_with_queue(t, Queues::empty());
    return fold.defined() && fold.queues->is_empty();
}

struct PredicateFold {
    bool ok = true;
    std::size_t failed_index = 0;  // first action whose refinement does not hold
    VarMap map_at_failure;         // map accumulated before that action
};

inline PredicateFold well_predicated_fold(const Trace& t, VarMap m) {
    for (std::size_t i = 0; i < t.size(); ++i) {
        const Action& a = t[i];
        VarMap updated = m.update(a.msg.var, a.msg.value);
        if (!models(updated, a.refinement)) return PredicateFold{false, i, std::move(m)};
        m = std::move(updated);
    }
    return PredicateFold{true, 0, VarMap::empty()};
}

inline bool is_well_predicated(const Trace& t, const VarMap& m) {
    return well_predicated_fold(t, m).ok;
}

inline VarMap end_up_with_map(const Trace& t, VarMap initial) {
    VarMap m = std::move(initial);
    for (const Action& a : t) m = m.update(a.msg.var, a.msg.value);
    return m;
}

struct ValidityVerdict {
    enum class Failure { None, NotWellQueued, NotWellPredicated };

    bool valid = true;
    Failure failure = Failure::None;
    std::size_t index = 0;
    Queues queues_at_failure;
    VarMap map_at_failure;

    std::string describe() const {
        if (valid) return "valid refined trace";
        std::ostringstream os;
        if (failure == Failure::NotWellQueued) {
            os << "not well-queued at action " << index << "; queues " << queues_at_failure.to_string();
        } else {
            os << "not well-predicated at action " << index << "; map " << map_at_failure.to_string();
        }
        return os.str();
    }
};

// Valid refined trace: well-queued w.r.t. the empty queue and well-predicated
// under the empty map. Both conjuncts are reported separately.
inline ValidityVerdict check_valid_refined(const Trace& t) {
    QueueFold qf = ends_up_with_queue(t, Queues::empty());
    if (!qf.defined()) {
        ValidityVerdict v;
        v.valid = false;
        v.failure = ValidityVerdict::Failure::NotWellQueued;
        v.index = qf.failed_index;
        v.queues_at_failure = qf.queues_at_failure;
        return v;
    }
    if (!qf.queues->is_empty()) {
        ValidityVerdict v;
        v.valid = false;
        v.failure = ValidityVerdict::Failure::NotWellQueued;
        v.index = t.size();
        v.queues_at_failure = *qf.queues;
        return v;
    }
    PredicateFold pf = well_predicated_fold(t, VarMap::empty());
    if (!pf.ok) {
        ValidityVerdict v;
        v.valid = false;
        v.failure = ValidityVerdict::Failure::NotWellPredicated;
        v.index = pf.failed_index;
        v.map_at_failure = pf.map_at_failure;
        return v;
    }
    return ValidityVerdict{};
}

inline bool is_valid_refined(const Trace& t) { return check_valid_refined(t).valid; }

// ---------------------------------------------------------------------------
// JSON serialisation. A trace is an array of
//   {"from", "dir", "to", "label", "var", "value", "refinement"}
// with the refinement in the shared textual syntax.

inline nlohmann::json to_json(const Action& a) {
    return nlohmann::json{{"from", a.sender},
                          {"dir", std::string(1, direction_char(a.dir))},
                          {"to", a.receiver},
                          {"label", a.msg.label},
                          {"var", a.msg.var},
                          {"value", a.msg.value},
                          {"refinement", rmpst::to_string(a.refinement)}};
}

inline nlohmann::json to_json(const Trace& t) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Action& a : t) arr.push_back(to_json(a));
    return arr;
}

inline Action action_from_json(const nlohmann::json& j) {
    Action a;
    a.sender = j.at("from").get<std::string>();
    std::string dir = j.at("dir").get<std::string>();
    if (dir == "!") a.dir = Direction::Send;
    else if (dir == "?") a.dir = Direction::Receive;
    else throw std::runtime_error("bad \"dir\" in trace JSON: " + dir);
    a.receiver = j.at("to").get<std::string>();
    if (a.sender == a.receiver)
        throw std::runtime_error("action sender and receiver must differ");
    a.msg.label = j.at("label").get<std::string>();
    a.msg.var = j.at("var").get<std::string>();
    a.msg.value = j.at("value").get<Value>();
    a.refinement = parse_refinement_or_throw(j.at("refinement").get<std::string>());
    return a;
}

inline Trace trace_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw std::runtime_error("trace JSON must be an array");
    Trace t;
    for (const auto& item : j) t.push_back(action_from_json(item));
    return t;
}

}  // namespace rmpst
