#pragma once

#include <json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace worldcore::worldscope {

// Each dimension is binary; the first level listed is the favorable one.
enum class Explicitness : std::uint8_t { Explicit, Implicit };
enum class Stability : std::uint8_t { Stable, Fluid };
enum class Normativity : std::uint8_t { Normative, NonNormative };
enum class Observability : std::uint8_t { StateAccessible, PartiallyObservable };
enum class Ambition : std::uint8_t { Unambitious, Ambitious };
enum class Dominance : std::uint8_t { DeliberationDominant, PerceptionDominant };

struct WorldProfile {
    Explicitness ontological_explicitness = Explicitness::Explicit;
    Stability structural_stability = Stability::Stable;
    Normativity normativity = Normativity::Normative;
    Observability observability = Observability::StateAccessible;
    Ambition semantic_ambition = Ambition::Unambitious;
    Dominance perception_deliberation = Dominance::DeliberationDominant;
    /// Separates formal synthetic worlds (games, simulated economies) from institutional ones;
    /// the six dimensions alone do not.
    bool synthetic = false;
};

/// The six applicability conditions, in order.
enum class Condition : std::uint8_t {
    ExplicitOntology = 1,
    StructuralStability = 2,
    ExplicitNorms = 3,
    ShareableState = 4,
    BoundedSemanticGrowth = 5,
    DeliberationDominates = 6,
};

enum class Verdict : std::uint8_t { Appropriate, NotAppropriate };
enum class Archetype : std::uint8_t { TypeI, TypeII, TypeIII, TypeIV, TypeV, Unclassified };

struct ApplicabilityReport {
    Verdict verdict = Verdict::Appropriate;
    std::vector<Condition> failing_conditions;  // ascending
    Archetype archetype = Archetype::Unclassified;
};

std::string_view to_string(Condition c) noexcept;
std::string_view to_string(Verdict v) noexcept;
std::string_view to_string(Archetype a) noexcept;

/// A condition fails exactly when its dimension sits at the unfavorable level;
/// the verdict is their conjunction.
ApplicabilityReport assess_applicability(const WorldProfile& profile);

/// Rules are tried in the order I, II, V, IV, III, so a profile matching both IV and V is V.
Archetype classify_archetype(const WorldProfile& profile);

/// {"ontologicalExplicitness": "explicit"|"implicit", ..., "synthetic": bool}.
/// Missing dimensions or unknown levels throw Error(ScenarioError).
WorldProfile profile_from_json(const nlohmann::json& doc);
nlohmann::json profile_to_json(const WorldProfile& profile);

nlohmann::json report_to_json(const ApplicabilityReport& report);
std::string report_to_text(const ApplicabilityReport& report);

}  // namespace worldcore::worldscope
