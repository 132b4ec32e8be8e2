#include "scenfuse/scenario.hpp"

#include <algorithm>
#include <cctype>

#include "scenfuse/common.hpp"
#include "scenfuse/numfmt.hpp"

namespace scenfuse {

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Match: return "Match";
        case Verdict::NoMatch: return "NoMatch";
        default: return "Unknown";
    }
}

std::string_view to_string(UnknownPolicy p) {
    return p == UnknownPolicy::ExcludeFromNumerator ? "ExcludeFromNumerator" : "ExcludeFromBoth";
}

UnknownPolicy unknown_policy_from_string(std::string_view text) {
    if (text == "ExcludeFromNumerator") return UnknownPolicy::ExcludeFromNumerator;
    if (text == "ExcludeFromBoth") return UnknownPolicy::ExcludeFromBoth;
    fail_parse("BadUnknownPolicy", "unknown policy '" + std::string(text) + "'");
}

namespace detail {

struct ExprNode {
    enum class Kind { And, Or, Not, BoolVar, TextCmp, TextIn, NumCmp, NumIn };
    enum class NumOp { Lt, Le, Gt, Ge, Eq, Ne };

    Kind kind = Kind::BoolVar;
    std::vector<std::shared_ptr<const ExprNode>> children;
    std::string variable;
    bool abs_value = false;
    bool negated = false;  // TextCmp: != instead of =
    std::string text_rhs;
    std::set<std::string> text_set;
    NumOp num_op = NumOp::Eq;
    double num_rhs = 0.0;
    double num_lo = 0.0;
    double num_hi = 0.0;
};

}  // namespace detail

namespace {

using detail::ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;

struct Token {
    enum class Kind { Ident, Number, Punct, End };
    Kind kind = Kind::End;
    std::string text;
    size_t pos = 0;
};

class Tokenizer {
public:
    explicit Tokenizer(std::string_view text) : text_(text) { advance(); }

    const Token& peek() const { return current_; }
    Token take() {
        Token tok = current_;
        advance();
        return tok;
    }

private:
    void advance() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        current_.pos = pos_;
        if (pos_ >= text_.size()) {
            current_ = {Token::Kind::End, "", pos_};
            return;
        }
        char c = text_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                ++pos_;
            }
            current_ = {Token::Kind::Ident, std::string(text_.substr(start, pos_ - start)), start};
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            ((c == '-' || c == '+' || c == '.') && pos_ + 1 < text_.size() &&
             (std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) || text_[pos_ + 1] == '.'))) {
            size_t start = pos_;
            ++pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
                    ((text_[pos_] == '-' || text_[pos_] == '+') &&
                     (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E')))) {
                ++pos_;
            }
            current_ = {Token::Kind::Number, std::string(text_.substr(start, pos_ - start)), start};
            return;
        }
        if (c == '!' || c == '<' || c == '>') {
            if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '=') {
                current_ = {Token::Kind::Punct, std::string(text_.substr(pos_, 2)), pos_};
                pos_ += 2;
                return;
            }
        }
        current_ = {Token::Kind::Punct, std::string(1, c), pos_};
        ++pos_;
    }

    std::string_view text_;
    size_t pos_ = 0;
    Token current_;
};

[[noreturn]] void bad_expression(const Token& tok, const std::string& what) {
    fail_parse("BadExpression", what + " at position " + std::to_string(tok.pos) +
                                    (tok.text.empty() ? "" : " near '" + tok.text + "'"));
}

class Parser {
public:
    Parser(std::string_view text, const std::map<std::string, std::set<std::string>>& codesets)
        : tokens_(text), codesets_(codesets) {}

    NodePtr parse() {
        NodePtr expr = parse_or();
        if (tokens_.peek().kind != Token::Kind::End) {
            bad_expression(tokens_.peek(), "trailing input");
        }
        return expr;
    }

private:
    NodePtr parse_or() {
        NodePtr left = parse_and();
        while (is_keyword("or")) {
            tokens_.take();
            NodePtr right = parse_and();
            auto node = std::make_shared<ExprNode>();
            node->kind = ExprNode::Kind::Or;
            node->children = {left, right};
            left = node;
        }
        return left;
    }

    NodePtr parse_and() {
        NodePtr left = parse_not();
        while (is_keyword("and")) {
            tokens_.take();
            NodePtr right = parse_not();
            auto node = std::make_shared<ExprNode>();
            node->kind = ExprNode::Kind::And;
            node->children = {left, right};
            left = node;
        }
        return left;
    }

    NodePtr parse_not() {
        if (is_keyword("not")) {
            tokens_.take();
            auto node = std::make_shared<ExprNode>();
            node->kind = ExprNode::Kind::Not;
            node->children = {parse_not()};
            return node;
        }
        return parse_primary();
    }

    NodePtr parse_primary() {
        const Token& tok = tokens_.peek();
        if (tok.kind == Token::Kind::Punct && tok.text == "(") {
            tokens_.take();
            NodePtr inner = parse_or();
            expect_punct(")");
            return inner;
        }
        if (tok.kind == Token::Kind::Ident) {
            if (tok.text == "abs") return parse_abs_atom();
            return parse_ident_atom();
        }
        bad_expression(tok, "expected an atom");
    }

    NodePtr parse_abs_atom() {
        tokens_.take();  // abs
        expect_punct("(");
        Token var = expect_ident();
        expect_punct(")");
        return parse_numeric_tail(var.text, true);
    }

    NodePtr parse_ident_atom() {
        Token var = tokens_.take();
        const Token& next = tokens_.peek();
        if (next.kind == Token::Kind::Ident && next.text == "in") {
            tokens_.take();
            return parse_in_tail(var.text);
        }
        if (next.kind == Token::Kind::Punct &&
            (next.text == "=" || next.text == "!=" || next.text == "<" || next.text == "<=" ||
             next.text == ">" || next.text == ">=")) {
            if (next.text == "=" || next.text == "!=") {
                // Disambiguate on the right-hand side: a number means a numeric
                // comparison, an identifier means a code comparison.
                Token op = tokens_.take();
                const Token& rhs = tokens_.peek();
                if (rhs.kind == Token::Kind::Number) {
                    Token num = tokens_.take();
                    auto node = std::make_shared<ExprNode>();
                    node->kind = ExprNode::Kind::NumCmp;
                    node->variable = var.text;
                    node->num_op = op.text == "=" ? ExprNode::NumOp::Eq : ExprNode::NumOp::Ne;
                    node->num_rhs = require_double(num.text, "comparison value");
                    return node;
                }
                if (rhs.kind == Token::Kind::Ident) {
                    Token code = tokens_.take();
                    auto node = std::make_shared<ExprNode>();
                    node->kind = ExprNode::Kind::TextCmp;
                    node->variable = var.text;
                    node->negated = op.text == "!=";
                    node->text_rhs = code.text;
                    return node;
                }
                bad_expression(rhs, "expected a code or number");
            }
            return parse_numeric_tail(var.text, false);
        }
        // Bare identifier: boolean variable.
        auto node = std::make_shared<ExprNode>();
        node->kind = ExprNode::Kind::BoolVar;
        node->variable = var.text;
        return node;
    }

    NodePtr parse_numeric_tail(const std::string& variable, bool abs_value) {
        Token op = tokens_.take();
        if (op.kind == Token::Kind::Ident && op.text == "in") {
            NodePtr node = parse_interval(variable);
            const_cast<ExprNode*>(node.get())->abs_value = abs_value;
            return node;
        }
        if (op.kind != Token::Kind::Punct) bad_expression(op, "expected a comparison operator");
        ExprNode::NumOp num_op;
        if (op.text == "<") {
            num_op = ExprNode::NumOp::Lt;
        } else if (op.text == "<=") {
            num_op = ExprNode::NumOp::Le;
        } else if (op.text == ">") {
            num_op = ExprNode::NumOp::Gt;
        } else if (op.text == ">=") {
            num_op = ExprNode::NumOp::Ge;
        } else if (op.text == "=") {
            num_op = ExprNode::NumOp::Eq;
        } else if (op.text == "!=") {
            num_op = ExprNode::NumOp::Ne;
        } else {
            bad_expression(op, "expected a comparison operator");
        }
        Token num = expect_number();
        auto node = std::make_shared<ExprNode>();
        node->kind = ExprNode::Kind::NumCmp;
        node->variable = variable;
        node->abs_value = abs_value;
        node->num_op = num_op;
        node->num_rhs = require_double(num.text, "comparison value");
        return node;
    }

    NodePtr parse_in_tail(const std::string& variable) {
        const Token& open = tokens_.peek();
        if (open.kind == Token::Kind::Punct && open.text == "[") return parse_interval(variable);
        if (open.kind == Token::Kind::Punct && open.text == "{") {
            tokens_.take();
            auto node = std::make_shared<ExprNode>();
            node->kind = ExprNode::Kind::TextIn;
            node->variable = variable;
            for (;;) {
                const Token& item = tokens_.peek();
                if (item.kind != Token::Kind::Ident && item.kind != Token::Kind::Number) {
                    bad_expression(item, "expected a code");
                }
                node->text_set.insert(tokens_.take().text);
                const Token& sep = tokens_.peek();
                if (sep.kind == Token::Kind::Punct && sep.text == ",") {
                    tokens_.take();
                    continue;
                }
                expect_punct("}");
                break;
            }
            return node;
        }
        if (open.kind == Token::Kind::Punct && open.text == "@") {
            tokens_.take();
            Token name = expect_ident();
            auto it = codesets_.find(name.text);
            if (it == codesets_.end()) {
                fail_parse("UnknownCodeSet", "code-set '@" + name.text + "' is not defined");
            }
            auto node = std::make_shared<ExprNode>();
            node->kind = ExprNode::Kind::TextIn;
            node->variable = variable;
            node->text_set = it->second;
            return node;
        }
        bad_expression(open, "expected '{', '[' or '@'");
    }

    NodePtr parse_interval(const std::string& variable) {
        expect_punct("[");
        Token lo = expect_number();
        expect_punct(",");
        Token hi = expect_number();
        expect_punct("]");
        auto node = std::make_shared<ExprNode>();
        node->kind = ExprNode::Kind::NumIn;
        node->variable = variable;
        node->num_lo = require_double(lo.text, "interval bound");
        node->num_hi = require_double(hi.text, "interval bound");
        if (node->num_lo > node->num_hi) {
            fail_parse("BadExpression", "interval lower bound exceeds upper bound");
        }
        return node;
    }

    bool is_keyword(std::string_view word) const {
        const Token& tok = tokens_.peek();
        return tok.kind == Token::Kind::Ident && tok.text == word;
    }

    void expect_punct(const std::string& text) {
        Token tok = tokens_.take();
        if (tok.kind != Token::Kind::Punct || tok.text != text) {
            bad_expression(tok, "expected '" + text + "'");
        }
    }

    Token expect_ident() {
        Token tok = tokens_.take();
        if (tok.kind != Token::Kind::Ident) bad_expression(tok, "expected a name");
        return tok;
    }

    Token expect_number() {
        Token tok = tokens_.take();
        if (tok.kind != Token::Kind::Number) bad_expression(tok, "expected a number");
        return tok;
    }

    Tokenizer tokens_;
    const std::map<std::string, std::set<std::string>>& codesets_;
};

Verdict kleene_not(Verdict v) {
    if (v == Verdict::Match) return Verdict::NoMatch;
    if (v == Verdict::NoMatch) return Verdict::Match;
    return Verdict::Unknown;
}

Verdict from_bool(bool b) { return b ? Verdict::Match : Verdict::NoMatch; }

[[noreturn]] void undeclared(std::string_view variable) {
    fail_validation("UndeclaredVariable",
                    "variable '" + std::string(variable) + "' is not declared in this context");
}

Verdict eval_node(const ExprNode& node, const EvalContext& ctx) {
    using Kind = ExprNode::Kind;
    switch (node.kind) {
        case Kind::And: {
            Verdict acc = Verdict::Match;
            for (const auto& child : node.children) {
                Verdict v = eval_node(*child, ctx);
                if (v == Verdict::NoMatch) return Verdict::NoMatch;
                if (v == Verdict::Unknown) acc = Verdict::Unknown;
            }
            return acc;
        }
        case Kind::Or: {
            Verdict acc = Verdict::NoMatch;
            for (const auto& child : node.children) {
                Verdict v = eval_node(*child, ctx);
                if (v == Verdict::Match) return Verdict::Match;
                if (v == Verdict::Unknown) acc = Verdict::Unknown;
            }
            return acc;
        }
        case Kind::Not:
            return kleene_not(eval_node(*node.children.front(), ctx));
        case Kind::BoolVar: {
            bool value = false;
            switch (ctx.bool_value(node.variable, value)) {
                case EvalContext::Presence::Known: return from_bool(value);
                case EvalContext::Presence::Unknown: return Verdict::Unknown;
                default: undeclared(node.variable);
            }
        }
        case Kind::TextCmp: {
            std::string value;
            switch (ctx.text_value(node.variable, value)) {
                case EvalContext::Presence::Known:
                    return from_bool((value == node.text_rhs) != node.negated);
                case EvalContext::Presence::Unknown: return Verdict::Unknown;
                default: undeclared(node.variable);
            }
        }
        case Kind::TextIn: {
            std::string value;
            switch (ctx.text_value(node.variable, value)) {
                case EvalContext::Presence::Known: return from_bool(node.text_set.count(value) > 0);
                case EvalContext::Presence::Unknown: return Verdict::Unknown;
                default: undeclared(node.variable);
            }
        }
        case Kind::NumCmp:
        case Kind::NumIn: {
            double value = 0.0;
            switch (ctx.numeric_value(node.variable, value)) {
                case EvalContext::Presence::Known: break;
                case EvalContext::Presence::Unknown: return Verdict::Unknown;
                default: undeclared(node.variable);
            }
            if (node.abs_value) value = std::abs(value);
            if (node.kind == Kind::NumIn) {
                return from_bool(value >= node.num_lo && value <= node.num_hi);
            }
            switch (node.num_op) {
                case ExprNode::NumOp::Lt: return from_bool(value < node.num_rhs);
                case ExprNode::NumOp::Le: return from_bool(value <= node.num_rhs);
                case ExprNode::NumOp::Gt: return from_bool(value > node.num_rhs);
                case ExprNode::NumOp::Ge: return from_bool(value >= node.num_rhs);
                case ExprNode::NumOp::Eq: return from_bool(value == node.num_rhs);
                default: return from_bool(value != node.num_rhs);
            }
        }
    }
    fail_validation("BadExpression", "unreachable expression node");
}

void collect_variables(const ExprNode& node, std::set<std::string>& out) {
    if (!node.variable.empty()) out.insert(node.variable);
    for (const auto& child : node.children) collect_variables(*child, out);
}

}  // namespace

Predicate Predicate::parse(std::string_view text) { return parse(text, {}); }

Predicate Predicate::parse(std::string_view text,
                           const std::map<std::string, std::set<std::string>>& codesets) {
    if (trim(text).empty()) fail_parse("BadExpression", "empty predicate");
    Predicate predicate;
    predicate.root_ = Parser(text, codesets).parse();
    predicate.text_ = std::string(trim(text));
    return predicate;
}

Verdict Predicate::evaluate(const EvalContext& ctx) const {
    if (!root_) fail_validation("BadExpression", "evaluating an empty predicate");
    return eval_node(*root_, ctx);
}

std::set<std::string> Predicate::variables() const {
    std::set<std::string> out;
    if (root_) collect_variables(*root_, out);
    return out;
}

ScenarioDefinition ScenarioDefinition::from_config(const Config& cfg) {
    cfg.check_sections({"", "scenario", "codesets", "record", "event"});
    cfg.check_keys("scenario", {"name", "unknown_policy"});
    cfg.check_keys("record", {"predicate"});
    cfg.check_keys("event", {"predicate"});

    std::map<std::string, std::set<std::string>> codesets;
    for (const auto& entry : cfg.section("codesets").entries) {
        std::set<std::string> codes;
        for (auto& code : split_list(entry.value)) codes.insert(std::move(code));
        if (codes.empty()) {
            fail_validation("EmptyCodeSet", "code-set '" + entry.key + "' is empty");
        }
        codesets[entry.key] = std::move(codes);
    }

    ScenarioDefinition def;
    def.name = cfg.require("scenario", "name");
    if (auto policy = cfg.get("scenario", "unknown_policy")) {
        def.unknown_policy = unknown_policy_from_string(*policy);
    }
    def.record_predicate = Predicate::parse(cfg.require("record", "predicate"), codesets);
    if (cfg.has("event", "predicate")) {
        def.event_predicate = Predicate::parse(cfg.require("event", "predicate"), codesets);
    }
    return def;
}

ScenarioDefinition ScenarioDefinition::load(const std::string& path) {
    return from_config(Config::load(path));
}

namespace {

class RecordEvalContext : public EvalContext {
public:
    RecordEvalContext(const VehicleRecord& record, const DerivedFlags& flags, const RecordSchema& schema)
        : record_(record), flags_(flags), schema_(schema) {}

    Presence text_value(std::string_view variable, std::string& out) const override {
        if (variable == "junction") {
            if (flags_.junction == JunctionStatus::Unknown) return Presence::Unknown;
            out = std::string(to_string(flags_.junction));
            return Presence::Known;
        }
        if (variable == "turning") {
            if (flags_.turning == TurningStatus::Unknown) return Presence::Unknown;
            out = std::string(to_string(flags_.turning));
            return Presence::Known;
        }
        if (variable == "dataset") {
            out = std::string(to_string(record_.dataset_id));
            return Presence::Known;
        }
        if (variable == "severity") {
            out = std::string(to_string(record_.severity));
            return Presence::Known;
        }
        if (variable == "body_class") {
            out = std::string(to_string(record_.body_class));
            return Presence::Known;
        }
        if (variable == "case_id") {
            out = record_.case_id;
            return Presence::Known;
        }
        if (std::find(schema_.coded_variables.begin(), schema_.coded_variables.end(), variable) !=
            schema_.coded_variables.end()) {
            auto code = record_.code(variable);
            if (!code) return Presence::Unknown;
            out = std::string(*code);
            return Presence::Known;
        }
        return Presence::Undeclared;
    }

    Presence numeric_value(std::string_view variable, double& out) const override {
        if (variable == "model_year") {
            if (!record_.model_year) return Presence::Unknown;
            out = static_cast<double>(*record_.model_year);
            return Presence::Known;
        }
        if (variable == "calendar_year") {
            out = static_cast<double>(record_.calendar_year);
            return Presence::Known;
        }
        if (variable == "vehicle_index") {
            out = static_cast<double>(record_.vehicle_index);
            return Presence::Known;
        }
        if (variable == "sample_weight") {
            out = record_.sample_weight;
            return Presence::Known;
        }
        return Presence::Undeclared;
    }

    Presence bool_value(std::string_view variable, bool& out) const override {
        if (variable == "first_harmful_event") {
            out = record_.first_harmful_event_involved;
            return Presence::Known;
        }
        return Presence::Undeclared;
    }

private:
    const VehicleRecord& record_;
    const DerivedFlags& flags_;
    const RecordSchema& schema_;
};

class EventEvalContext : public EvalContext {
public:
    EventEvalContext(const TurnEvent& event, const TurnDetectParams& params)
        : event_(event), params_(params) {}

    Presence text_value(std::string_view variable, std::string& out) const override {
        if (variable == "direction") {
            out = std::string(to_string(event_.direction));
            return Presence::Known;
        }
        if (variable == "trip_id") {
            out = event_.trip_id;
            return Presence::Known;
        }
        return Presence::Undeclared;
    }

    Presence numeric_value(std::string_view variable, double& out) const override {
        if (variable == "net_yaw") {
            out = event_.net_yaw;
        } else if (variable == "gps_heading_change") {
            out = event_.gps_heading_change;
        } else if (variable == "segment_angle") {
            out = event_.segment_angle;
        } else if (variable == "mean_speed") {
            out = event_.mean_speed;
        } else if (variable == "max_abs_lat_accel") {
            out = event_.max_abs_lat_accel;
        } else if (variable == "duration") {
            out = event_.duration;
        } else if (variable == "junction_node") {
            out = static_cast<double>(event_.junction_node);
        } else if (variable == "start_idx") {
            out = static_cast<double>(event_.start_idx);
        } else if (variable == "end_idx") {
            out = static_cast<double>(event_.end_idx);
        } else {
            return Presence::Undeclared;
        }
        return Presence::Known;
    }

    Presence bool_value(std::string_view variable, bool& out) const override {
        if (variable == "passes_gates") {
            out = passes_gates(event_, params_);
            return Presence::Known;
        }
        return Presence::Undeclared;
    }

private:
    const TurnEvent& event_;
    const TurnDetectParams& params_;
};

}  // namespace

Verdict evaluate_record(const Predicate& predicate, const VehicleRecord& record, const DerivedFlags& flags,
                        const RecordSchema& schema) {
    return predicate.evaluate(RecordEvalContext(record, flags, schema));
}

Verdict evaluate_event(const Predicate& predicate, const TurnEvent& event, const TurnDetectParams& params) {
    return predicate.evaluate(EventEvalContext(event, params));
}

void validate_record_predicate(const Predicate& predicate, const RecordSchema& schema) {
    static const std::set<std::string> builtins = {
        "junction",      "turning",       "dataset",       "severity",
        "body_class",    "case_id",       "model_year",    "calendar_year",
        "vehicle_index", "sample_weight", "first_harmful_event"};
    for (const auto& variable : predicate.variables()) {
        if (builtins.count(variable)) continue;
        if (std::find(schema.coded_variables.begin(), schema.coded_variables.end(), variable) !=
            schema.coded_variables.end()) {
            continue;
        }
        undeclared(variable);
    }
}

namespace {

Proportions finish(Proportions p, UnknownPolicy policy, std::string_view what) {
    if (policy == UnknownPolicy::ExcludeFromBoth && p.denominator <= 0.0) {
        fail_validation("ZeroDenominator",
                        std::string(what) + ": every item evaluated Unknown under ExcludeFromBoth");
    }
    p.fraction = p.denominator > 0.0 ? p.numerator / p.denominator : 0.0;
    return p;
}

}  // namespace

Proportions record_proportions(const ScenarioDefinition& def, const std::vector<VehicleRecord>& records,
                               const std::vector<DerivedFlags>& flags, const RecordSchema& schema,
                               bool weighted) {
    if (records.empty()) fail_validation("EmptyDataset", "no records to evaluate");
    if (records.size() != flags.size()) {
        fail_validation("LengthMismatch", "records and derived flags differ in length");
    }
    Proportions p;
    for (size_t i = 0; i < records.size(); ++i) {
        double w = weighted ? records[i].sample_weight : 1.0;
        Verdict v = evaluate_record(def.record_predicate, records[i], flags[i], schema);
        if (v == Verdict::Match) {
            ++p.match_count;
            p.numerator += w;
            p.denominator += w;
        } else if (v == Verdict::NoMatch) {
            ++p.no_match_count;
            p.denominator += w;
        } else {
            ++p.unknown_count;
            if (def.unknown_policy == UnknownPolicy::ExcludeFromNumerator) p.denominator += w;
        }
    }
    return finish(p, def.unknown_policy, "record proportions");
}

Proportions event_proportions(const ScenarioDefinition& def, const std::vector<TurnEvent>& events,
                              const TurnDetectParams& params) {
    if (events.empty()) fail_validation("EmptyDataset", "no events to evaluate");
    if (def.event_predicate.empty()) {
        fail_validation("BadExpression", "scenario '" + def.name + "' has no event predicate");
    }
    Proportions p;
    for (const auto& event : events) {
        Verdict v = evaluate_event(def.event_predicate, event, params);
        if (v == Verdict::Match) {
            ++p.match_count;
            p.numerator += 1.0;
            p.denominator += 1.0;
        } else if (v == Verdict::NoMatch) {
            ++p.no_match_count;
            p.denominator += 1.0;
        } else {
            ++p.unknown_count;
            if (def.unknown_policy == UnknownPolicy::ExcludeFromNumerator) p.denominator += 1.0;
        }
    }
    return finish(p, def.unknown_policy, "event proportions");
}

}  // namespace scenfuse
