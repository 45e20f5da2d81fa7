#pragma once

// Frontend for the protocol description language (.rscr) and the compact
// global-type form. Parsing never throws: malformed input of any shape
// yields diagnostics with byte spans. The refinement grammar is shared
// with rmpst/refinement.hpp.
//
//   global protocol PlusMinus (role A, role B, role C) {
//     Secret(n: int) from A to B;
//     rec Loop {
//       Guess(x: int) from C to B;
//       choice at B {
//         More(x: int {x < n}) from B to C;
//         continue Loop;
//       } or {
//         Less(x: int {x > n}) from B to C;
//         continue Loop;
//       } or {
//         Correct(x: int {x = n}) from B to C;
//       }
//     }
//   }
//
// The compact form is what types pretty-print to:
//   A->B l1(x:int){x < 0}. A->B l2(y:int). end
//   A->B { more(x:int){x < n}. T, correct(x:int){x = n}. end }

#include <algorithm>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "rmpst/refinement.hpp"
#include "rmpst/types.hpp"

namespace rmpst {

struct Diagnostic {
    enum class Severity { Error, Warning };
    Severity severity = Severity::Error;
    std::size_t begin = 0;  // byte span within the source
    std::size_t end = 0;
    std::string message;

    std::string to_string() const {
        std::ostringstream os;
        os << (severity == Severity::Error ? "error" : "warning") << " at " << begin << ".." << end
           << ": " << message;
        return os.str();
    }
};

struct Protocol {
    std::string name;                 // empty for the compact form
    std::vector<Participant> roles;   // declared roles (protocol form only)
    GlobalPtr type;
};

struct ParseResult {
    std::optional<Protocol> protocol;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return protocol.has_value(); }
};

namespace detail {

// Pragmas ((*# ... #*)) and // comments are blanked out in place so byte
// offsets in diagnostics keep pointing at the original source.
inline std::string blank_pragmas_and_comments(std::string_view source) {
    std::string out(source);
    std::size_t i = 0;
    while (i < out.size()) {
        if (out[i] == '(' && i + 2 < out.size() && out[i + 1] == '*' && out[i + 2] == '#') {
            std::size_t j = i;
            while (j + 2 < out.size() && !(out[j] == '#' && out[j + 1] == '*' && out[j + 2] == ')'))
                ++j;
            std::size_t stop = (j + 2 < out.size()) ? j + 3 : out.size();
            for (std::size_t k = i; k < stop; ++k)
                if (out[k] != '\n') out[k] = ' ';
            i = stop;
        } else if (out[i] == '/' && i + 1 < out.size() && out[i + 1] == '/') {
            while (i < out.size() && out[i] != '\n') out[i++] = ' ';
        } else {
            ++i;
        }
    }
    return out;
}

class ProtocolParser {
public:
    explicit ProtocolParser(std::string_view original)
        : text_(blank_pragmas_and_comments(original)) {}

    ParseResult run() {
        ParseResult result;
        skip_ws();
        bool protocol_form = lookahead_keyword("global");
        GlobalPtr type;
        if (protocol_form) {
            type = parse_protocol_form();
        } else {
            type = parse_global_type();
            skip_ws();
            if (ok_ && pos_ != text_.size()) error(pos_, pos_ + 1, "trailing input after type");
        }
        result.diagnostics = std::move(diagnostics_);
        if (ok_ && type) {
            for (const std::string& issue : wellformed_issues(type)) {
                result.diagnostics.push_back(
                    Diagnostic{Diagnostic::Severity::Error, 0, 0, issue});
                ok_ = false;
            }
        }
        if (ok_ && type) {
            Protocol p;
            p.name = name_;
            p.roles = roles_;
            p.type = type;
            result.protocol = std::move(p);
        }
        return result;
    }

private:
    // --- diagnostics ---------------------------------------------------------

    void error(std::size_t begin, std::size_t end, const std::string& message) {
        ok_ = false;
        if (diagnostics_.size() < 64)
            diagnostics_.push_back(Diagnostic{Diagnostic::Severity::Error, begin,
                                              std::min(end, text_.size()), message});
    }

    // --- lexing helpers ------------------------------------------------------

    static bool is_ident_start(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
    }
    static bool is_ident_char(char c) {
        return is_ident_start(c) || (c >= '0' && c <= '9') || c == '#';
    }

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' ||
                                       text_[pos_] == '\n' || text_[pos_] == '\r'))
            ++pos_;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    bool expect(char c, const char* what) {
        if (eat(c)) return true;
        error(pos_, pos_ + 1, std::string("expected '") + c + "' " + what);
        return false;
    }

    bool lookahead_keyword(const char* kw) {
        skip_ws();
        std::string_view k(kw);
        if (text_.compare(pos_, k.size(), k) != 0) return false;
        std::size_t after = pos_ + k.size();
        return after >= text_.size() || !is_ident_char(text_[after]);
    }

    bool eat_keyword(const char* kw) {
        if (!lookahead_keyword(kw)) return false;
        pos_ += std::string_view(kw).size();
        return true;
    }

    std::optional<std::string> lex_ident(const char* what) {
        skip_ws();
        if (pos_ >= text_.size() || !is_ident_start(text_[pos_])) {
            error(pos_, pos_ + 1, std::string("expected ") + what);
            return std::nullopt;
        }
        std::size_t begin = pos_;
        while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
        return std::string(text_.substr(begin, pos_ - begin));
    }

    // --- protocol form -------------------------------------------------------

    GlobalPtr parse_protocol_form() {
        if (!eat_keyword("global")) {
            error(pos_, pos_ + 1, "expected 'global protocol'");
            return nullptr;
        }
        if (!eat_keyword("protocol")) {
            error(pos_, pos_ + 1, "expected 'protocol' after 'global'");
            return nullptr;
        }
        auto name = lex_ident("protocol name");
        if (!name) return nullptr;
        name_ = *name;
        if (!expect('(', "before the role list")) return nullptr;
        while (true) {
            if (!eat_keyword("role")) {
                error(pos_, pos_ + 1, "expected 'role'");
                return nullptr;
            }
            auto role = lex_ident("role name");
            if (!role) return nullptr;
            if (std::find(roles_.begin(), roles_.end(), *role) != roles_.end())
                error(pos_, pos_, "role '" + *role + "' declared twice");
            else
                roles_.push_back(*role);
            if (eat(',')) continue;
            break;
        }
        if (!expect(')', "after the role list")) return nullptr;
        if (!expect('{', "to open the protocol body")) return nullptr;
        GlobalPtr body = parse_block();
        if (!ok_) return nullptr;
        skip_ws();
        if (pos_ != text_.size()) error(pos_, pos_ + 1, "trailing input after the protocol");
        return body;
    }

    // A block is a ';'-sequenced list of statements ending at '}'. Messages
    // sequence; rec / choice / continue close the block.
    GlobalPtr parse_block() {
        if (++depth_ > 300) {
            error(pos_, pos_ + 1, "nesting too deep");
            --depth_;
            return nullptr;
        }
        GlobalPtr result = parse_statements();
        --depth_;
        return result;
    }

    GlobalPtr parse_statements() {
        skip_ws();
        if (eat('}')) return g_end();
        if (!ok_) return nullptr;

        if (eat_keyword("rec")) {
            auto label = lex_ident("recursion label");
            if (!label) return nullptr;
            if (!rec_stack_insert(*label)) return nullptr;
            if (!expect('{', "to open the rec body")) return nullptr;
            GlobalPtr body = parse_block();
            rec_stack_.pop_back();
            if (!body) return nullptr;
            return finish_block(g_rec(*label, body), "rec");
        }

        if (eat_keyword("continue")) {
            std::size_t at = pos_;
            auto label = lex_ident("recursion label");
            if (!label) return nullptr;
            if (std::find(rec_stack_.begin(), rec_stack_.end(), *label) == rec_stack_.end())
                error(at, pos_, "'continue " + *label + "' is not inside 'rec " + *label + "'");
            if (!expect(';', "after continue")) return nullptr;
            skip_ws();
            if (!eat('}')) {
                error(pos_, pos_ + 1, "'continue' must be the last statement of its block");
                return nullptr;
            }
            return g_recvar(*label);
        }

        if (eat_keyword("choice")) {
            return parse_choice();
        }

        // Message statement: Label(payload) from P to Q;
        auto msg = parse_message_statement();
        if (!msg) return nullptr;
        GlobalPtr cont = parse_statements();
        if (!cont) return nullptr;
        auto [from, to, branch] = std::move(*msg);
        branch.cont = cont;
        return g_comm(from, to, {std::move(branch)});
    }

    // After a block-closing construct we must be at the end of the block.
    GlobalPtr finish_block(GlobalPtr g, const char* what) {
        skip_ws();
        if (!eat('}')) {
            error(pos_, pos_ + 1,
                  std::string("statements after a ") + what + " block are not supported");
            return nullptr;
        }
        return g;
    }

    bool rec_stack_insert(const std::string& label) {
        if (std::find(rec_stack_.begin(), rec_stack_.end(), label) != rec_stack_.end() ||
            all_rec_labels_.count(label)) {
            error(pos_, pos_, "recursion label '" + label + "' reused");
            return false;
        }
        rec_stack_.push_back(label);
        all_rec_labels_.insert(label);
        return true;
    }

    std::optional<std::tuple<Participant, Participant, GBranch>> parse_message_statement() {
        std::size_t at = pos_;
        auto label = lex_ident("message label");
        if (!label) return std::nullopt;
        if (!expect('(', "after the message label")) return std::nullopt;
        VarName payload = kDiscardVar;
        RefPtr refinement = top();
        skip_ws();
        if (!eat(')')) {
            auto var = lex_ident("payload variable");
            if (!var) return std::nullopt;
            payload = *var;
            if (!expect(':', "after the payload variable")) return std::nullopt;
            std::size_t sort_at = pos_;
            auto sort = lex_ident("payload sort");
            if (!sort) return std::nullopt;
            if (*sort != "int") {
                error(sort_at, pos_, "unknown sort '" + *sort + "' (only int is supported)");
                return std::nullopt;
            }
            skip_ws();
            if (eat('{')) {
                auto parsed = parse_refinement_braces();
                if (!parsed) return std::nullopt;
                refinement = *parsed;
            }
            if (!expect(')', "after the payload")) return std::nullopt;
        }
        if (!eat_keyword("from")) {
            error(pos_, pos_ + 1, "expected 'from'");
            return std::nullopt;
        }
        auto from = lex_ident("sender role");
        if (!from) return std::nullopt;
        if (!eat_keyword("to")) {
            error(pos_, pos_ + 1, "expected 'to'");
            return std::nullopt;
        }
        auto to = lex_ident("receiver role");
        if (!to) return std::nullopt;
        if (!expect(';', "after the message")) return std::nullopt;
        check_role_declared(*from, at);
        check_role_declared(*to, at);
        if (*from == *to) error(at, pos_, "a role cannot send to itself");
        GBranch branch{*label, payload, Sort::Int, refinement, nullptr};
        return std::make_tuple(*from, *to, std::move(branch));
    }

    void check_role_declared(const Participant& p, std::size_t at) {
        if (!roles_.empty() && std::find(roles_.begin(), roles_.end(), p) == roles_.end())
            error(at, pos_, "role '" + p + "' is not declared");
    }

    // The refinement text runs to the matching '}' (expressions contain no
    // braces); it is handed to the shared refinement parser.
    std::optional<RefPtr> parse_refinement_braces() {
        std::size_t begin = pos_;
        std::size_t close = text_.find('}', pos_);
        if (close == std::string::npos) {
            error(begin, text_.size(), "unterminated refinement");
            return std::nullopt;
        }
        std::string_view body = std::string_view(text_).substr(begin, close - begin);
        RefinementParseError err;
        RefPtr r = parse_refinement(body, err);
        if (!r) {
            error(begin + err.position, begin + err.position + 1, err.message);
            return std::nullopt;
        }
        pos_ = close + 1;
        return r;
    }

    GlobalPtr parse_choice() {
        if (!eat_keyword("at")) {
            error(pos_, pos_ + 1, "expected 'at' after 'choice'");
            return nullptr;
        }
        std::size_t at = pos_;
        auto chooser = lex_ident("choosing role");
        if (!chooser) return nullptr;
        check_role_declared(*chooser, at);
        if (!expect('{', "to open the first choice branch")) return nullptr;

        std::vector<GBranch> branches;
        std::optional<Participant> receiver;
        std::set<std::string> labels;
        while (true) {
            std::size_t branch_at = pos_;
            auto msg = parse_message_statement();
            if (!msg) return nullptr;
            auto [from, to, branch] = std::move(*msg);
            if (from != *chooser)
                error(branch_at, pos_,
                      "branch of 'choice at " + *chooser + "' starts with a message from " + from);
            if (receiver && to != *receiver)
                error(branch_at, pos_, "choice branches must share one receiver (" + *receiver +
                                           " vs " + to + ")");
            receiver = to;
            if (!labels.insert(branch.label).second)
                error(branch_at, pos_, "duplicate branch label '" + branch.label + "'");
            GlobalPtr cont = parse_statements();  // consumes the branch's '}'
            if (!cont) return nullptr;
            branch.cont = cont;
            branches.push_back(std::move(branch));
            if (eat_keyword("or")) {
                if (!expect('{', "to open the next choice branch")) return nullptr;
                continue;
            }
            break;
        }
        if (!ok_) return nullptr;
        return finish_block(g_comm(*chooser, receiver.value_or("?"), std::move(branches)),
                            "choice");
    }

    // --- compact global-type form ---------------------------------------------

    GlobalPtr parse_global_type() {
        if (++depth_ > 300) {
            error(pos_, pos_ + 1, "nesting too deep");
            --depth_;
            return nullptr;
        }
        GlobalPtr result = parse_global_type_inner();
        --depth_;
        return result;
    }

    GlobalPtr parse_global_type_inner() {
        skip_ws();
        if (eat_keyword("end")) return g_end();
        if (eat_keyword("rec")) {
            auto label = lex_ident("recursion binder");
            if (!label) return nullptr;
            if (!expect('.', "after the recursion binder")) return nullptr;
            GlobalPtr body = parse_global_type();
            if (!body) return nullptr;
            return g_rec(*label, body);
        }
        std::size_t at = pos_;
        auto first = lex_ident("participant or recursion variable");
        if (!first) return nullptr;
        skip_ws();
        if (!(pos_ + 1 < text_.size() && text_[pos_] == '-' && text_[pos_ + 1] == '>'))
            return g_recvar(*first);
        pos_ += 2;
        auto to = lex_ident("receiver");
        if (!to) return nullptr;
        if (*first == *to) error(at, pos_, "a participant cannot send to itself");

        std::vector<GBranch> branches;
        skip_ws();
        if (eat('{')) {
            while (true) {
                auto b = parse_compact_branch();
                if (!b) return nullptr;
                branches.push_back(std::move(*b));
                if (eat(',')) continue;
                break;
            }
            if (!expect('}', "to close the branch list")) return nullptr;
        } else {
            auto b = parse_compact_branch();
            if (!b) return nullptr;
            branches.push_back(std::move(*b));
        }
        return g_comm(*first, *to, std::move(branches));
    }

    std::optional<GBranch> parse_compact_branch() {
        auto label = lex_ident("branch label");
        if (!label) return std::nullopt;
        if (!expect('(', "after the branch label")) return std::nullopt;
        auto var = lex_ident("payload variable");
        if (!var) return std::nullopt;
        if (!expect(':', "after the payload variable")) return std::nullopt;
        std::size_t sort_at = pos_;
        auto sort = lex_ident("payload sort");
        if (!sort) return std::nullopt;
        if (*sort != "int") {
            error(sort_at, pos_, "unknown sort '" + *sort + "' (only int is supported)");
            return std::nullopt;
        }
        if (!expect(')', "after the payload")) return std::nullopt;
        RefPtr refinement = top();
        skip_ws();
        if (eat('{')) {
            auto parsed = parse_refinement_braces();
            if (!parsed) return std::nullopt;
            refinement = *parsed;
        }
        if (!expect('.', "before the continuation")) return std::nullopt;
        GlobalPtr cont = parse_global_type();
        if (!cont) return std::nullopt;
        return GBranch{*label, *var, Sort::Int, refinement, cont};
    }

    std::string text_;
    std::size_t pos_ = 0;
    int depth_ = 0;
    bool ok_ = true;
    std::string name_;
    std::vector<Participant> roles_;
    std::vector<std::string> rec_stack_;
    std::set<std::string> all_rec_labels_;
    std::vector<Diagnostic> diagnostics_;
};

}  // namespace detail

// Parses either a protocol file or a compact global type (detected by the
// leading 'global' keyword). Never throws.
inline ParseResult parse(std::string_view source) {
    detail::ProtocolParser parser(source);
    return parser.run();
}

inline GlobalPtr parse_or_throw(std::string_view source) {
    ParseResult r = parse(source);
    if (!r.ok()) {
        std::string msg = "parse failed:";
        for (const Diagnostic& d : r.diagnostics) msg += "\n  " + d.to_string();
        throw std::runtime_error(msg);
    }
    return r.protocol->type;
}

inline std::string emit_type(const GlobalPtr& g) { return to_string(g); }
inline std::string emit_type(const LocalPtr& l) { return to_string(l); }

}  // namespace rmpst
