#pragma once

#include "worldcore/expr.hpp"
#include "worldcore/schema.hpp"
#include "worldcore/state.hpp"

#include <json.hpp>

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace worldcore {

enum class Phase : std::uint8_t { Pre, Act, Post };

std::string_view to_string(Phase phase) noexcept;

/// A named boolean observation over one transaction.
/// Pre/post features are closed predicates over the pre-/post-state; act features
/// match the action name and, optionally, a predicate over its arguments.
struct Feature {
    int id = 0;
    std::string name;
    Phase phase = Phase::Pre;
    Expression predicate;  // pre/post: over the state; act: over the action params
    std::string action;    // act only
};

/// The authored vocabulary learning is scoped to. Ids are dense from 0 in declaration order.
class Terminology {
public:
    Terminology() = default;
    /// Validates names and typechecks every predicate against `schema`.
    Terminology(std::vector<Feature> features, const Schema& schema);

    const std::vector<Feature>& features() const noexcept { return features_; }
    std::size_t size() const noexcept { return features_.size(); }
    const Feature& at(int id) const;
    std::optional<int> find(const std::string& name) const;
    std::vector<Phase> phases() const;

private:
    std::vector<Feature> features_;
};

/// "terminology" scenario section: [{"name", "phase", "expr"} | {"name", "phase": "act", "action", "when"?}].
Terminology define_terminology(const nlohmann::json& doc, const Schema& schema);

/// Truth vector of one committed transaction; the unit of learning.
struct Case {
    std::uint64_t seq = 0;
    std::vector<bool> truth;
    double weight = 1.0;

    std::vector<std::string> true_names(const Terminology& terminology) const;
};

/// Pre features read only `pre`, post features only `post`, act features only `txn`.
Case build_case(const WorldState& pre, const Transaction& txn, const WorldState& post, const Terminology& terminology);

/// Rebuilds a case from the names persisted in an event-log line.
/// Throws Error(UnknownFeature) on a name the terminology does not define.
Case case_from_names(std::uint64_t seq, const std::vector<std::string>& names, const Terminology& terminology);

struct LearnerConfig {
    double theta = 0.5;
    double min_support = 1.0;
    int max_premise = 2;
    double gamma = 1.0;

    /// Throws Error(ScenarioError) when a field is out of range.
    void validate() const;
};

/// "learner" scenario section: {"theta", "minSupport", "Lmax", "gamma"}.
LearnerConfig learner_from_json(const nlohmann::json& doc);
nlohmann::json learner_to_json(const LearnerConfig& config);

/// premise -> conclusion; premise ids ascending.
struct RuleKey {
    std::vector<int> premise;
    int conclusion = 0;

    auto operator<=>(const RuleKey&) const = default;
};

struct RuleCounts {
    double count_premise = 0.0;
    double count_both = 0.0;

    bool operator==(const RuleCounts&) const = default;
};

struct Rule {
    std::vector<int> premise;
    int conclusion = 0;
    double count_premise = 0.0;
    double count_both = 0.0;

    /// Derived on demand from the counts, never stored.
    double p() const;
};

/// Materialized (premise, conclusion) count cells, keyed deterministically.
struct RuleStore {
    std::vector<Phase> phases;  // per feature id; defines the terminology the store accepts
    std::map<RuleKey, RuleCounts> cells;

    RuleStore() = default;
    explicit RuleStore(const Terminology& terminology) : phases(terminology.phases()) {}

    std::vector<Rule> rules() const;
    std::optional<Rule> find(const RuleKey& key) const;
};

/// countBoth / countPremise. Throws Error(ZeroSupport) when countPremise is 0.
double rule_probability(double count_both, double count_premise);

/// True when the rule clears both the reliability threshold and the support gate.
bool rule_in_view(const RuleCounts& counts, const LearnerConfig& config);

/// Rules with p >= theta and countPremise >= minSupport whose every feature is visible,
/// ordered by p desc, countPremise desc, then feature ids.
std::vector<Rule> knowledge_view(const RuleStore& kb, const LearnerConfig& config,
                                 const std::optional<std::set<int>>& visible = std::nullopt);

/// Total order used by knowledge_view.
bool view_order(const Rule& a, const Rule& b);

/// `IF A AND B THEN C [p = 0.667, support = 3.0]`; an empty premise renders as `(always)`.
/// Throws Error(UnknownFeature).
std::string render_rule(const Rule& rule, const Terminology& terminology);

struct RenderedRule {
    std::vector<std::string> premise;
    std::string conclusion;
    double p = 0.0;
    double support = 0.0;
};

/// Inverse of render_rule's text template. Throws Error(ParseError).
RenderedRule parse_rendered_rule(const std::string& line);

/// Knowledge export: [{"premise": [names], "conclusion": name, "p", "countPremise", "countBoth", ...}].
nlohmann::json rules_to_json(const std::vector<Rule>& rules, const Terminology& terminology);

}  // namespace worldcore
