#pragma once

#include "worldcore/causal.hpp"

#include <cstddef>
#include <vector>

namespace worldcore {

struct IngestResult {
    /// Rules whose in-view status (per the config at ingest time) flipped.
    std::vector<RuleKey> changed;
    /// (premise, conclusion) cells whose counts were incremented.
    std::size_t cells_written = 0;
};

/// Incremental update for one case: decay existing counts by gamma, then for every subset B
/// of the case's true pre/act features with |B| <= Lmax and every post feature c, add the
/// case weight to countPremise(B->c), and to countBoth(B->c) when c holds.
/// Cells are created on first increment. Throws Error(TerminologyMismatch).
IngestResult ingest_case(RuleStore& kb, const Case& c, const LearnerConfig& config);

/// Recomputes every count from scratch in one pass per cell, applying the same update law
/// (decay per case in order). This is the reference the incremental path is checked against.
RuleStore batch_learn(const std::vector<Case>& cases, const LearnerConfig& config, const std::vector<Phase>& phases);
RuleStore batch_learn(const std::vector<Case>& cases, const LearnerConfig& config, const Terminology& terminology);

/// Number of cells ingest_case writes for `c`: sum_{i<=Lmax} C(k, i) * |post features|,
/// k being the number of true pre/act features. Throws Error(DecayActive) when gamma < 1.
std::size_t locality_report(const RuleStore& kb, const Case& c, const LearnerConfig& config);

/// All subsets of `ids` (ascending) with at most `max_size` members, including the empty set.
std::vector<std::vector<int>> bounded_subsets(const std::vector<int>& ids, int max_size);

}  // namespace worldcore
