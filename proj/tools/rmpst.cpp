// Command-line surface: parse protocols, project them, build automata,
// simulate under either semantics, validate traces, run the localisation
// check, and apply refinement elision.
//
// Exit status: 0 on success / positive verdict, 1 on a negative verdict,
// 2 on usage or parse errors.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rmpst/automata.hpp"
#include "rmpst/elide.hpp"
#include "rmpst/frontend.hpp"
#include "rmpst/localise.hpp"
#include "rmpst/refinement.hpp"
#include "rmpst/semantics.hpp"
#include "rmpst/trace.hpp"
#include "rmpst/types.hpp"

namespace {

constexpr const char* kVersion = "rmpst 0.1.0";

int usage_error(const std::string& message) {
    std::cerr << "error: " << message << "\n";
    return 2;
}

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::optional<rmpst::GlobalPtr> load_protocol(const std::string& path) {
    auto source = read_file(path);
    if (!source) {
        std::cerr << "error: cannot read " << path << "\n";
        return std::nullopt;
    }
    rmpst::ParseResult result = rmpst::parse(*source);
    for (const rmpst::Diagnostic& d : result.diagnostics)
        std::cerr << path << ": " << d.to_string() << "\n";
    if (!result.ok()) return std::nullopt;
    return result.protocol->type;
}

bool parse_domain(const std::string& text, std::vector<rmpst::Value>& out) {
    std::size_t dots = text.find("..");
    if (dots == std::string::npos) return false;
    try {
        long lo = std::stol(text.substr(0, dots));
        long hi = std::stol(text.substr(dots + 2));
        if (lo > hi || hi - lo > 100000) return false;
        out.clear();
        for (long v = lo; v <= hi; ++v) out.push_back(static_cast<rmpst::Value>(v));
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

bool write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return true;
    }
    std::ofstream outf(path, std::ios::binary);
    if (!outf) {
        std::cerr << "error: cannot write " << path << "\n";
        return false;
    }
    outf << content;
    return true;
}

rmpst::RefinementPlacement placement_of(const std::string& name) {
    if (name == "receive") return rmpst::RefinementPlacement::ReceiveSide;
    if (name == "both") return rmpst::RefinementPlacement::BothSides;
    return rmpst::RefinementPlacement::SendSide;
}

void print_machine(const rmpst::Participant& p, const rmpst::Rcfsm& m) {
    std::cout << "machine " << p << " (" << m.num_states() << " states, initial q" << m.initial
              << ")\n";
    for (int s = 0; s < m.num_states(); ++s)
        std::cout << "  q" << s << " = " << m.state_names[static_cast<std::size_t>(s)] << "\n";
    for (const rmpst::Transition& t : m.transitions)
        std::cout << "  q" << t.src << " --" << t.action.to_string() << "--> q" << t.dst << "\n";
}

int cmd_parse(const std::string& file) {
    auto g = load_protocol(file);
    if (!g) return 2;
    std::cout << rmpst::emit_type(*g) << "\n";
    return 0;
}

int cmd_project(const std::string& file, const std::string& role, const std::string& placement) {
    auto g = load_protocol(file);
    if (!g) return 2;
    auto local = rmpst::project(*g, role, placement_of(placement));
    if (!local) {
        std::cerr << "projection undefined for " << role << "\n";
        return 1;
    }
    std::cout << rmpst::emit_type(*local) << "\n";
    return 0;
}

int cmd_automata(const std::string& file, const std::string& role, bool dot,
                 const std::string& dot_path) {
    auto g = load_protocol(file);
    if (!g) return 2;
    try {
        rmpst::Rcs rcs = rmpst::rcs_of(*g);
        if (dot) {
            std::string out;
            if (!role.empty()) {
                auto it = rcs.machines.find(role);
                if (it == rcs.machines.end()) return usage_error("unknown role " + role);
                out = rmpst::emit_dot(it->second, role);
            } else {
                out = rmpst::emit_dot(rcs);
            }
            return write_output(dot_path, out) ? 0 : 2;
        }
        if (!role.empty()) {
            auto it = rcs.machines.find(role);
            if (it == rcs.machines.end()) return usage_error("unknown role " + role);
            print_machine(role, it->second);
        } else {
            for (const auto& [p, m] : rcs.machines) print_machine(p, m);
        }
        return 0;
    } catch (const rmpst::ProjectionError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
}

int cmd_check_trace(const std::string& file) {
    auto source = read_file(file);
    if (!source) return usage_error("cannot read " + file);
    rmpst::Trace trace;
    try {
        trace = rmpst::trace_from_json(nlohmann::json::parse(*source));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    rmpst::ValidityVerdict verdict = rmpst::check_valid_refined(trace);
    std::cout << verdict.describe() << "\n";
    return verdict.valid ? 0 : 1;
}

int cmd_localise(const std::string& file, bool emit_dot_flag, const std::string& dot_path,
                 bool original, bool facts) {
    auto g = load_protocol(file);
    if (!g) return 2;
    rmpst::TypeGraph graph = rmpst::type_graph(*g);
    rmpst::TypeGraph unrolled = rmpst::unroll(graph);
    rmpst::LocalisationReport report = rmpst::localise(unrolled);
    report.original_vertices = graph.num_vertices();
    if (emit_dot_flag) {
        const rmpst::TypeGraph& which = original ? graph : unrolled;
        if (!write_output(dot_path, rmpst::emit_dot(which, original ? "type_graph" : "unrolled")))
            return 2;
        return report.decentralisable ? 0 : 1;
    }
    if (facts) {
        std::cout << rmpst::facts_to_json(report).dump(2) << "\n";
        return report.decentralisable ? 0 : 1;
    }
    std::cout << report.describe() << "\n";
    std::cerr << "graph: " << report.original_vertices << " states, unrolled: "
              << report.unrolled_vertices << " states\n";
    return report.decentralisable ? 0 : 1;
}

int cmd_simulate(const std::string& file, const std::string& semantics, const std::string& mode,
                 const std::string& domain, int depth, int queue_bound, std::uint64_t seed,
                 const std::string& script_path, bool dump_configs) {
    auto g = load_protocol(file);
    if (!g) return 2;

    rmpst::ExploreParams params;
    params.max_depth = depth;
    params.max_queue_len = queue_bound;
    params.seed = seed;
    if (!domain.empty() && !parse_domain(domain, params.value_domain))
        return usage_error("bad --domain, expected lo..hi");

    if (!script_path.empty()) {
        auto source = read_file(script_path);
        if (!source) return usage_error("cannot read " + script_path);
        try {
            nlohmann::json j = nlohmann::json::parse(*source);
            for (const auto& item : j)
                params.script.push_back(rmpst::ScriptEntry{
                    item.at("participant").get<std::string>(),
                    item.at("label").get<std::string>(), item.at("value").get<rmpst::Value>()});
        } catch (const std::exception& e) {
            return usage_error(std::string("bad script: ") + e.what());
        }
    }

    bool central = semantics != "decentral";
    rmpst::Rcs rcs;
    try {
        rcs = rmpst::rcs_of(*g);
    } catch (const rmpst::ProjectionError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }

    auto emit_one = [&](const rmpst::Trace& trace, const auto& configs) {
        if (!dump_configs) {
            std::cout << rmpst::to_json(trace).dump(2) << "\n";
            return;
        }
        // JSON lines: configurations and the actions between them.
        for (std::size_t i = 0; i < configs.size(); ++i) {
            std::cout << nlohmann::json{{"step", i}, {"config", configs[i].to_string()}}.dump()
                      << "\n";
            if (i < trace.size())
                std::cout << nlohmann::json{{"action", rmpst::to_json(trace[i])}}.dump() << "\n";
        }
    };

    try {
        if (mode == "exhaustive") {
            params.store_runs = false;
            nlohmann::json arr = nlohmann::json::array();
            std::size_t stuck = 0;
            bool queue_hit = false, depth_hit = false;
            if (central) {
                auto result = rmpst::explore_centralised(rcs, params);
                for (const auto& run : result.final_runs) arr.push_back(rmpst::to_json(run.trace));
                stuck = result.stuck_runs.size();
                queue_hit = result.queue_bound_hit;
                depth_hit = result.depth_bound_hit;
            } else {
                auto result = rmpst::explore_decentralised(rcs, params);
                for (const auto& run : result.final_runs) arr.push_back(rmpst::to_json(run.trace));
                stuck = result.stuck_runs.size();
                queue_hit = result.queue_bound_hit;
                depth_hit = result.depth_bound_hit;
            }
            std::cout << arr.dump(2) << "\n";
            std::cerr << arr.size() << " final runs, " << stuck << " stuck runs"
                      << (queue_hit ? ", queue bound hit" : "")
                      << (depth_hit ? ", depth bound hit" : "") << "\n";
            return 0;
        }
        if (mode == "random") {
            if (central) {
                auto run = rmpst::random_run_centralised(rcs, params);
                emit_one(run.trace, run.configs);
            } else {
                auto run = rmpst::random_run_decentralised(rcs, params);
                emit_one(run.trace, run.configs);
            }
            return 0;
        }
        if (mode == "script") {
            if (central) {
                auto run = rmpst::scripted_run_centralised(rcs, params);
                emit_one(run.trace, run.configs);
            } else {
                auto run = rmpst::scripted_run_decentralised(rcs, params);
                emit_one(run.trace, run.configs);
            }
            return 0;
        }
        if (mode == "concurrent") {
            rmpst::ConcurrentRunResult result = rmpst::run_concurrent(rcs, params);
            std::cout << rmpst::to_json(result.trace).dump(2) << "\n";
            std::cerr << (result.completed ? "completed" : "stopped at the step budget") << "\n";
            return 0;
        }
    } catch (const rmpst::ScriptDiverged& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return usage_error("unknown mode " + mode);
}

int cmd_elide(const std::string& file, const std::vector<std::string>& step_targets,
              const std::vector<std::string>& rcs_targets, const std::string& domain_text,
              bool force) {
    auto g = load_protocol(file);
    if (!g) return 2;
    if (step_targets.empty() && rcs_targets.empty())
        return usage_error("pass --target-step LABEL or --target P/LABEL");

    std::vector<rmpst::Value> domain;
    bool have_domain = !domain_text.empty();
    if (have_domain && !parse_domain(domain_text, domain))
        return usage_error("bad --domain, expected lo..hi");

    bool all_applied = true;

    // Type-level targets, applied in order with re-validation in between.
    rmpst::GlobalPtr current = *g;
    for (const std::string& target : step_targets) {
        if (!rmpst::labels_unique(current)) {
            std::cerr << "note: labels are reused; renaming them uniquely\n";
            current = rmpst::uniquify_labels(current);
        }
        std::string label = target;
        std::size_t slash = target.rfind('/');
        if (slash != std::string::npos) label = target.substr(slash + 1);
        auto step = rmpst::find_step_by_label(current, label);
        if (!step) {
            std::cerr << "no step labelled '" << label << "'\n";
            return usage_error("unknown target " + target);
        }
        std::vector<rmpst::Value> dom =
            have_domain ? domain : rmpst::default_entailment_domain(step->refinement, step->refinement);
        if (!have_domain) {
            // Include the guards' constants as well.
            rmpst::RefPtr all = step->refinement;
            for (const rmpst::Step& w : rmpst::steps_of(current))
                all = rmpst::rand_(all, w.refinement);
            dom = rmpst::default_entailment_domain(all, step->refinement);
        }
        rmpst::TypeElisionPlan plan = rmpst::plan_elide_type(current, *step, dom);
        std::cerr << plan.describe();
        if (plan.applicable() || plan.already_top) {
            current = rmpst::replace_branch_refinement(current, step->node, step->branch,
                                                       rmpst::top());
        } else if (force) {
            std::cerr << "forcing elision of a rejected target\n";
            current = rmpst::replace_branch_refinement(current, step->node, step->branch,
                                                       rmpst::top());
            all_applied = false;
        } else {
            all_applied = false;
        }
    }
    if (!step_targets.empty()) std::cout << rmpst::emit_type(current) << "\n";

    // Automata-level targets on the RCS of the (possibly rewritten) type.
    if (!rcs_targets.empty()) {
        rmpst::Rcs rcs;
        try {
            rcs = rmpst::rcs_of(current);
        } catch (const rmpst::ProjectionError& e) {
            std::cerr << e.what() << "\n";
            return 1;
        }
        for (const std::string& target : rcs_targets) {
            std::size_t slash = target.find('/');
            if (slash == std::string::npos)
                return usage_error("bad --target, expected PARTICIPANT/LABEL");
            std::string participant = target.substr(0, slash);
            std::string label = target.substr(slash + 1);
            auto tref = rmpst::find_send_transition(rcs, participant, label);
            if (!tref) {
                std::cerr << "no send transition " << participant << "!" << label << "\n";
                return usage_error("unknown target " + target);
            }
            const rmpst::Transition& tt = tref->resolve(rcs);
            std::vector<rmpst::Value> dom =
                have_domain ? domain
                            : rmpst::default_entailment_domain(tt.action.refinement,
                                                               tt.action.refinement);
            rmpst::ElisionPlan plan = rmpst::plan_elide_rcs(
                rcs, *tref, dom, rmpst::WellDefinedMode{rmpst::TypeLevelMode{current}});
            std::cerr << plan.describe();
            if (plan.applicable() || plan.already_top) {
                rcs = rmpst::force_elide_rcs(rcs, *tref);
            } else if (force) {
                std::cerr << "forcing elision of a rejected target\n";
                rcs = rmpst::force_elide_rcs(rcs, *tref);
                all_applied = false;
            } else {
                all_applied = false;
            }
        }
        for (const auto& [p, m] : rcs.machines) print_machine(p, m);
    }

    return all_applied ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Toolchain for refined multiparty protocols"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string file, role, placement = "send";
    std::string dot_path = "-";
    bool dot = false, original = false, facts = false;

    auto* parse_cmd = app.add_subcommand("parse", "Validate a protocol and print its type");
    parse_cmd->add_option("file", file, "protocol file")->required();

    auto* project_cmd = app.add_subcommand("project", "Project a protocol onto one role");
    project_cmd->add_option("file", file, "protocol file")->required();
    project_cmd->add_option("--role", role, "participant to project onto")->required();
    project_cmd->add_option("--placement", placement, "refinement placement: send|receive|both");

    auto* automata_cmd = app.add_subcommand("automata", "Build the communicating machines");
    automata_cmd->add_option("file", file, "protocol file")->required();
    automata_cmd->add_option("--role", role, "only this participant's machine");
    automata_cmd->add_flag("--dot", dot, "emit DOT instead of the textual listing");
    automata_cmd->add_option("--dot-out", dot_path, "DOT output path ('-' for stdout)");

    std::string semantics = "central", mode = "exhaustive", domain, script_path;
    int depth = 12, queue_bound = 4;
    std::uint64_t seed = 0;
    bool dump_configs = false;
    auto* simulate_cmd = app.add_subcommand("simulate", "Run or explore a protocol");
    simulate_cmd->add_option("file", file, "protocol file")->required();
    simulate_cmd->add_option("--semantics", semantics, "central|decentral");
    simulate_cmd->add_option("--mode", mode, "exhaustive|random|script|concurrent");
    simulate_cmd->add_option("--domain", domain, "send-value domain lo..hi (default 0..4)");
    simulate_cmd->add_option("--depth", depth, "step bound");
    simulate_cmd->add_option("--queue-bound", queue_bound, "per-FIFO length bound");
    simulate_cmd->add_option("--seed", seed, "PRNG seed for random mode");
    simulate_cmd->add_option("--script", script_path, "JSON step script for script mode");
    simulate_cmd->add_flag("--dump-configs", dump_configs, "dump per-step configurations");

    auto* check_cmd = app.add_subcommand("check-trace", "Validate a trace JSON file");
    check_cmd->add_option("file", file, "trace JSON")->required();

    auto* localise_cmd = app.add_subcommand("localise", "Check decentralised verifiability");
    localise_cmd->add_option("file", file, "protocol file")->required();
    localise_cmd->add_flag("--emit-dot", dot, "emit the graph as DOT");
    localise_cmd->add_option("--dot-out", dot_path, "DOT output path ('-' for stdout)");
    localise_cmd->add_flag("--original", original, "emit the graph before unrolling");
    localise_cmd->add_flag("--facts", facts, "dump the inferred In facts as JSON");

    std::vector<std::string> step_targets, rcs_targets;
    std::string elide_domain;
    bool force = false;
    auto* elide_cmd = app.add_subcommand("elide", "Remove redundant refinements");
    elide_cmd->add_option("file", file, "protocol file")->required();
    elide_cmd->add_option("--target-step", step_targets,
                          "type-level target: LABEL or PATH/LABEL (repeatable)");
    elide_cmd->add_option("--target", rcs_targets,
                          "automata-level target: PARTICIPANT/LABEL (repeatable)");
    elide_cmd->add_option("--domain", elide_domain, "entailment value domain lo..hi");
    elide_cmd->add_flag("--force", force, "apply the rewrite even when rejected");

    CLI11_PARSE(app, argc, argv);

    try {
        if (parse_cmd->parsed()) return cmd_parse(file);
        if (project_cmd->parsed()) return cmd_project(file, role, placement);
        if (automata_cmd->parsed()) return cmd_automata(file, role, dot, dot_path);
        if (simulate_cmd->parsed())
            return cmd_simulate(file, semantics, mode, domain, depth, queue_bound, seed,
                                script_path, dump_configs);
        if (check_cmd->parsed()) return cmd_check_trace(file);
        if (localise_cmd->parsed()) return cmd_localise(file, dot, dot_path, original, facts);
        if (elide_cmd->parsed())
            return cmd_elide(file, step_targets, rcs_targets, elide_domain, force);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return usage_error("no subcommand");
}
