#include "worldcore/causal.hpp"

#include "worldcore/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace worldcore {

using nlohmann::json;

std::string_view to_string(Phase phase) noexcept {
    switch (phase) {
    case Phase::Pre: return "pre";
    case Phase::Act: return "act";
    case Phase::Post: return "post";
    }
    return "?";
}

namespace {

constexpr std::string_view kAlways = "(always)";

bool usable_feature_name(const std::string& name) {
    if (name.empty() || name == kAlways || name == "IF" || name == "AND" || name == "THEN") {
        return false;
    }
    return std::none_of(name.begin(), name.end(), [](char c) {
        return std::isspace(static_cast<unsigned char>(c)) || c == '[' || c == ']';
    });
}

}  // namespace

Terminology::Terminology(std::vector<Feature> features, const Schema& schema) : features_(std::move(features)) {
    std::set<std::string> names;
    for (std::size_t i = 0; i < features_.size(); ++i) {
        Feature& f = features_[i];
        f.id = static_cast<int>(i);
        const std::string loc = "terminology." + f.name;
        if (!usable_feature_name(f.name)) {
            fail(ErrorClass::ScenarioError, "terminology[" + std::to_string(i) + "]",
                 "feature names must be non-empty and contain no whitespace or brackets");
        }
        if (!names.insert(f.name).second) {
            fail(ErrorClass::ScenarioError, loc, "duplicate feature name");
        }
        const TypeOptions opt{schema.max_quantifier_depth, false};
        TypeScope scope;
        if (f.phase == Phase::Act) {
            const ActionDecl* action = schema.find_action(f.action);
            if (!action) {
                fail(ErrorClass::ScenarioError, loc, "act feature names undeclared action '" + f.action + "'");
            }
            for (const auto& p : action->params) {
                scope.emplace_back(p.name, p.domain);
            }
        }
        try {
            typecheck_predicate(f.predicate, schema, scope, opt);
        } catch (const Error& e) {
            fail(ErrorClass::ScenarioError, loc, e.reason());
        }
    }
}

const Feature& Terminology::at(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= features_.size()) {
        fail(ErrorClass::UnknownFeature, std::to_string(id), "no feature with this id");
    }
    return features_[static_cast<std::size_t>(id)];
}

std::optional<int> Terminology::find(const std::string& name) const {
    for (const auto& f : features_) {
        if (f.name == name) {
            return f.id;
        }
    }
    return std::nullopt;
}

std::vector<Phase> Terminology::phases() const {
    std::vector<Phase> out;
    out.reserve(features_.size());
    for (const auto& f : features_) {
        out.push_back(f.phase);
    }
    return out;
}

Terminology define_terminology(const json& doc, const Schema& schema) {
    if (doc.is_null()) {
        return Terminology({}, schema);
    }
    if (!doc.is_array()) {
        fail(ErrorClass::ScenarioError, "terminology", "terminology must be a list of features");
    }
    std::vector<Feature> features;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const json& f = doc[i];
        const std::string loc = "terminology[" + std::to_string(i) + "]";
        if (!f.is_object() || !f.contains("name") || !f["name"].is_string() || !f.contains("phase") ||
            !f["phase"].is_string()) {
            fail(ErrorClass::ScenarioError, loc, "feature needs string 'name' and 'phase'");
        }
        Feature feature;
        feature.name = f["name"].get<std::string>();
        const std::string phase = f["phase"].get<std::string>();
        const char* expr_key = "expr";
        if (phase == "pre") {
            feature.phase = Phase::Pre;
        } else if (phase == "post") {
            feature.phase = Phase::Post;
        } else if (phase == "act") {
            feature.phase = Phase::Act;
            if (!f.contains("action") || !f["action"].is_string()) {
                fail(ErrorClass::ScenarioError, loc, "act feature needs 'action'");
            }
            feature.action = f["action"].get<std::string>();
            expr_key = "when";
        } else {
            fail(ErrorClass::ScenarioError, loc, "phase must be pre, act or post");
        }
        if (f.contains(expr_key)) {
            if (!f[expr_key].is_string()) {
                fail(ErrorClass::ScenarioError, loc, std::string("'") + expr_key + "' must be predicate text");
            }
            try {
                feature.predicate = Expression::parse(f[expr_key].get<std::string>());
            } catch (const Error& e) {
                fail(ErrorClass::ScenarioError, "terminology." + feature.name, e.what());
            }
        } else if (feature.phase != Phase::Act) {
            fail(ErrorClass::ScenarioError, loc, "pre/post feature needs 'expr'");
        }
        features.push_back(std::move(feature));
    }
    return Terminology(std::move(features), schema);
}

std::vector<std::string> Case::true_names(const Terminology& terminology) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i]) {
            out.push_back(terminology.at(static_cast<int>(i)).name);
        }
    }
    return out;
}

Case build_case(const WorldState& pre, const Transaction& txn, const WorldState& post, const Terminology& terminology) {
    Case c;
    c.seq = txn.seq;
    c.truth.reserve(terminology.size());
    for (const auto& f : terminology.features()) {
        bool holds = false;
        switch (f.phase) {
        case Phase::Pre: holds = eval_predicate(pre, f.predicate); break;
        case Phase::Post: holds = eval_predicate(post, f.predicate); break;
        case Phase::Act:
            holds = txn.action == f.action && eval_predicate(pre, f.predicate, txn.args);
            break;
        }
        c.truth.push_back(holds);
    }
    return c;
}

Case case_from_names(std::uint64_t seq, const std::vector<std::string>& names, const Terminology& terminology) {
    Case c;
    c.seq = seq;
    c.truth.assign(terminology.size(), false);
    for (const auto& name : names) {
        auto id = terminology.find(name);
        if (!id) {
            fail(ErrorClass::UnknownFeature, name, "case names a feature outside the terminology");
        }
        c.truth[static_cast<std::size_t>(*id)] = true;
    }
    return c;
}

void LearnerConfig::validate() const {
    if (!(theta >= 0.0 && theta <= 1.0)) {
        fail(ErrorClass::ScenarioError, "learner.theta", "must lie in [0, 1]");
    }
    if (!(min_support > 0.0)) {
        fail(ErrorClass::ScenarioError, "learner.minSupport", "must be > 0");
    }
    if (max_premise < 1) {
        fail(ErrorClass::ScenarioError, "learner.Lmax", "must be >= 1");
    }
    if (!(gamma > 0.0 && gamma <= 1.0)) {
        fail(ErrorClass::ScenarioError, "learner.gamma", "must lie in (0, 1]");
    }
}

LearnerConfig learner_from_json(const json& doc) {
    LearnerConfig config;
    if (doc.is_null()) {
        return config;
    }
    if (!doc.is_object()) {
        fail(ErrorClass::ScenarioError, "learner", "learner section must be an object");
    }
    for (const auto& [key, value] : doc.items()) {
        if (key != "theta" && key != "minSupport" && key != "Lmax" && key != "gamma") {
            fail(ErrorClass::ScenarioError, "learner." + key, "unknown learner setting");
        }
    }
    try {
        config.theta = doc.value("theta", config.theta);
        config.min_support = doc.value("minSupport", config.min_support);
        config.max_premise = doc.value("Lmax", config.max_premise);
        config.gamma = doc.value("gamma", config.gamma);
    } catch (const json::exception& e) {
        fail(ErrorClass::ScenarioError, "learner", e.what());
    }
    config.validate();
    return config;
}

json learner_to_json(const LearnerConfig& config) {
    return {{"theta", config.theta},
            {"minSupport", config.min_support},
            {"Lmax", config.max_premise},
            {"gamma", config.gamma}};
}

double rule_probability(double count_both, double count_premise) {
    if (count_premise <= 0.0) {
        fail(ErrorClass::ZeroSupport, "", "premise never observed");
    }
    return count_both / count_premise;
}

double Rule::p() const { return rule_probability(count_both, count_premise); }

std::vector<Rule> RuleStore::rules() const {
    std::vector<Rule> out;
    out.reserve(cells.size());
    for (const auto& [key, counts] : cells) {
        out.push_back({key.premise, key.conclusion, counts.count_premise, counts.count_both});
    }
    return out;
}

std::optional<Rule> RuleStore::find(const RuleKey& key) const {
    auto it = cells.find(key);
    if (it == cells.end()) {
        return std::nullopt;
    }
    return Rule{key.premise, key.conclusion, it->second.count_premise, it->second.count_both};
}

bool rule_in_view(const RuleCounts& counts, const LearnerConfig& config) {
    return counts.count_premise > 0.0 && counts.count_premise >= config.min_support &&
           rule_probability(counts.count_both, counts.count_premise) >= config.theta;
}

bool view_order(const Rule& a, const Rule& b) {
    const double pa = a.p();
    const double pb = b.p();
    if (pa != pb) {
        return pa > pb;
    }
    if (a.count_premise != b.count_premise) {
        return a.count_premise > b.count_premise;
    }
    if (a.premise != b.premise) {
        return a.premise < b.premise;
    }
    return a.conclusion < b.conclusion;
}

std::vector<Rule> knowledge_view(const RuleStore& kb, const LearnerConfig& config,
                                 const std::optional<std::set<int>>& visible) {
    std::vector<Rule> out;
    for (const auto& [key, counts] : kb.cells) {
        if (!rule_in_view(counts, config)) {
            continue;
        }
        if (visible) {
            const bool all_visible =
                visible->count(key.conclusion) &&
                std::all_of(key.premise.begin(), key.premise.end(), [&](int id) { return visible->count(id) > 0; });
            if (!all_visible) {
                continue;
            }
        }
        out.push_back({key.premise, key.conclusion, counts.count_premise, counts.count_both});
    }
    std::sort(out.begin(), out.end(), view_order);
    return out;
}

std::string render_rule(const Rule& rule, const Terminology& terminology) {
    std::vector<int> premise = rule.premise;
    std::sort(premise.begin(), premise.end());
    std::string text = "IF ";
    if (premise.empty()) {
        text += kAlways;
    }
    for (std::size_t i = 0; i < premise.size(); ++i) {
        text += (i ? " AND " : "") + terminology.at(premise[i]).name;
    }
    text += " THEN " + terminology.at(rule.conclusion).name;
    char tail[96];
    std::snprintf(tail, sizeof tail, " [p = %.3f, support = %.1f]", rule.p(), rule.count_premise);
    return text + tail;
}

RenderedRule parse_rendered_rule(const std::string& line) {
    auto bad = [&](const char* why) -> RenderedRule { fail(ErrorClass::ParseError, line, why); };
    if (line.rfind("IF ", 0) != 0) {
        return bad("rule text must start with 'IF '");
    }
    const auto then_pos = line.find(" THEN ");
    const auto bracket = line.rfind(" [p = ");
    if (then_pos == std::string::npos || bracket == std::string::npos || bracket < then_pos || line.back() != ']') {
        return bad("rule text does not follow the IF ... THEN ... [p = ..., support = ...] template");
    }
    RenderedRule out;
    const std::string premise = line.substr(3, then_pos - 3);
    if (premise != kAlways) {
        std::size_t start = 0;
        while (true) {
            const auto sep = premise.find(" AND ", start);
            out.premise.push_back(premise.substr(start, sep - start));
            if (sep == std::string::npos) {
                break;
            }
            start = sep + 5;
        }
    }
    out.conclusion = line.substr(then_pos + 6, bracket - then_pos - 6);
    if (std::sscanf(line.c_str() + bracket, " [p = %lf, support = %lf]", &out.p, &out.support) != 2) {
        return bad("unreadable p/support");
    }
    return out;
}

json rules_to_json(const std::vector<Rule>& rules, const Terminology& terminology) {
    json out = json::array();
    for (const auto& r : rules) {
        json premise = json::array();
        std::vector<int> ids = r.premise;
        std::sort(ids.begin(), ids.end());
        for (int id : ids) {
            premise.push_back(terminology.at(id).name);
        }
        out.push_back({{"premise", std::move(premise)},
                       {"conclusion", terminology.at(r.conclusion).name},
                       {"premiseIds", ids},
                       {"conclusionId", r.conclusion},
                       {"p", r.p()},
                       {"countPremise", r.count_premise},
                       {"countBoth", r.count_both},
                       {"text", render_rule(r, terminology)}});
    }
    return out;
}

}  // namespace worldcore
