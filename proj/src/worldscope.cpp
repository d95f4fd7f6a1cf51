#include "worldcore/worldscope.hpp"

#include "worldcore/error.hpp"

#include <array>

namespace worldcore::worldscope {

using nlohmann::json;

std::string_view to_string(Condition c) noexcept {
    switch (c) {
    case Condition::ExplicitOntology: return "explicitOntology";
    case Condition::StructuralStability: return "structuralStability";
    case Condition::ExplicitNorms: return "explicitNorms";
    case Condition::ShareableState: return "shareableState";
    case Condition::BoundedSemanticGrowth: return "boundedSemanticGrowth";
    case Condition::DeliberationDominates: return "deliberationDominates";
    }
    return "?";
}

std::string_view to_string(Verdict v) noexcept {
    return v == Verdict::Appropriate ? "Appropriate" : "NotAppropriate";
}

std::string_view to_string(Archetype a) noexcept {
    switch (a) {
    case Archetype::TypeI: return "TypeI";
    case Archetype::TypeII: return "TypeII";
    case Archetype::TypeIII: return "TypeIII";
    case Archetype::TypeIV: return "TypeIV";
    case Archetype::TypeV: return "TypeV";
    case Archetype::Unclassified: return "Unclassified";
    }
    return "?";
}

namespace {

std::array<bool, 6> favorable(const WorldProfile& p) {
    return {p.ontological_explicitness == Explicitness::Explicit,
            p.structural_stability == Stability::Stable,
            p.normativity == Normativity::Normative,
            p.observability == Observability::StateAccessible,
            p.semantic_ambition == Ambition::Unambitious,
            p.perception_deliberation == Dominance::DeliberationDominant};
}

bool all_favorable(const WorldProfile& p) {
    for (bool f : favorable(p)) {
        if (!f) {
            return false;
        }
    }
    return true;
}

// Dimension key, favorable level, unfavorable level.
struct DimensionSpec {
    const char* key;
    const char* good;
    const char* bad;
};

constexpr std::array<DimensionSpec, 6> kDimensions = {{
    {"ontologicalExplicitness", "explicit", "implicit"},
    {"structuralStability", "stable", "fluid"},
    {"normativity", "normative", "nonNormative"},
    {"observability", "stateAccessible", "partiallyObservable"},
    {"semanticAmbition", "unambitious", "ambitious"},
    {"perceptionDeliberation", "deliberationDominant", "perceptionDominant"},
}};

}  // namespace

ApplicabilityReport assess_applicability(const WorldProfile& profile) {
    ApplicabilityReport report;
    const auto ok = favorable(profile);
    for (std::size_t i = 0; i < ok.size(); ++i) {
        if (!ok[i]) {
            report.failing_conditions.push_back(static_cast<Condition>(i + 1));
        }
    }
    report.verdict = report.failing_conditions.empty() ? Verdict::Appropriate : Verdict::NotAppropriate;
    report.archetype = classify_archetype(profile);
    return report;
}

Archetype classify_archetype(const WorldProfile& p) {
    if (all_favorable(p)) {
        return p.synthetic ? Archetype::TypeII : Archetype::TypeI;
    }
    const bool implicit = p.ontological_explicitness == Explicitness::Implicit;
    if (implicit && p.normativity == Normativity::NonNormative && p.semantic_ambition == Ambition::Ambitious) {
        return Archetype::TypeV;
    }
    if (implicit && p.structural_stability == Stability::Fluid &&
        p.perception_deliberation == Dominance::PerceptionDominant) {
        return Archetype::TypeIV;
    }
    if (!implicit && p.normativity == Normativity::Normative &&
        (p.observability == Observability::PartiallyObservable ||
         p.perception_deliberation == Dominance::PerceptionDominant)) {
        return Archetype::TypeIII;
    }
    return Archetype::Unclassified;
}

WorldProfile profile_from_json(const json& doc) {
    if (!doc.is_object()) {
        fail(ErrorClass::ScenarioError, "profile", "profile must be a JSON object");
    }
    std::array<bool, 6> good{};
    for (std::size_t i = 0; i < kDimensions.size(); ++i) {
        const auto& dim = kDimensions[i];
        if (!doc.contains(dim.key) || !doc[dim.key].is_string()) {
            fail(ErrorClass::ScenarioError, dim.key, "missing dimension level");
        }
        const auto level = doc[dim.key].get<std::string>();
        if (level != dim.good && level != dim.bad) {
            fail(ErrorClass::ScenarioError, dim.key,
                 "level must be '" + std::string(dim.good) + "' or '" + std::string(dim.bad) + "'");
        }
        good[i] = level == dim.good;
    }
    WorldProfile p;
    p.ontological_explicitness = good[0] ? Explicitness::Explicit : Explicitness::Implicit;
    p.structural_stability = good[1] ? Stability::Stable : Stability::Fluid;
    p.normativity = good[2] ? Normativity::Normative : Normativity::NonNormative;
    p.observability = good[3] ? Observability::StateAccessible : Observability::PartiallyObservable;
    p.semantic_ambition = good[4] ? Ambition::Unambitious : Ambition::Ambitious;
    p.perception_deliberation = good[5] ? Dominance::DeliberationDominant : Dominance::PerceptionDominant;
    if (doc.contains("synthetic")) {
        if (!doc["synthetic"].is_boolean()) {
            fail(ErrorClass::ScenarioError, "synthetic", "must be a boolean");
        }
        p.synthetic = doc["synthetic"].get<bool>();
    }
    return p;
}

json profile_to_json(const WorldProfile& profile) {
    json out = json::object();
    const auto ok = favorable(profile);
    for (std::size_t i = 0; i < kDimensions.size(); ++i) {
        out[kDimensions[i].key] = ok[i] ? kDimensions[i].good : kDimensions[i].bad;
    }
    out["synthetic"] = profile.synthetic;
    return out;
}

json report_to_json(const ApplicabilityReport& report) {
    json failing = json::array();
    for (auto c : report.failing_conditions) {
        failing.push_back({{"condition", static_cast<int>(c)}, {"name", std::string(to_string(c))}});
    }
    return {{"verdict", std::string(to_string(report.verdict))},
            {"failingConditions", std::move(failing)},
            {"archetype", std::string(to_string(report.archetype))}};
}

std::string report_to_text(const ApplicabilityReport& report) {
    std::string text = "verdict: " + std::string(to_string(report.verdict)) + "\n";
    text += "archetype: " + std::string(to_string(report.archetype)) + "\n";
    if (report.failing_conditions.empty()) {
        text += "failing conditions: none\n";
    }
    for (auto c : report.failing_conditions) {
        text += "failing condition " + std::to_string(static_cast<int>(c)) + ": " + std::string(to_string(c)) + "\n";
    }
    return text;
}

}  // namespace worldcore::worldscope
