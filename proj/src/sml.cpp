#include "worldcore/sml.hpp"

#include "worldcore/error.hpp"

#include <algorithm>

namespace worldcore {

namespace {

void check_case(const Case& c, const std::vector<Phase>& phases) {
    if (c.truth.size() != phases.size()) {
        fail(ErrorClass::TerminologyMismatch, std::to_string(c.seq),
             "case has " + std::to_string(c.truth.size()) + " features, store expects " +
                 std::to_string(phases.size()));
    }
    if (!(c.weight > 0.0 && c.weight <= 1.0)) {
        fail(ErrorClass::TerminologyMismatch, std::to_string(c.seq), "case weight must lie in (0, 1]");
    }
}

std::vector<int> true_premise_features(const Case& c, const std::vector<Phase>& phases) {
    std::vector<int> out;
    for (std::size_t i = 0; i < phases.size(); ++i) {
        if (phases[i] != Phase::Post && c.truth[i]) {
            out.push_back(static_cast<int>(i));
        }
    }
    return out;
}

std::vector<int> post_features(const std::vector<Phase>& phases) {
    std::vector<int> out;
    for (std::size_t i = 0; i < phases.size(); ++i) {
        if (phases[i] == Phase::Post) {
            out.push_back(static_cast<int>(i));
        }
    }
    return out;
}

void extend_subsets(const std::vector<int>& ids, std::size_t from, int room, std::vector<int>& current,
                    std::vector<std::vector<int>>& out) {
    out.push_back(current);
    if (room == 0) {
        return;
    }
    for (std::size_t i = from; i < ids.size(); ++i) {
        current.push_back(ids[i]);
        extend_subsets(ids, i + 1, room - 1, current, out);
        current.pop_back();
    }
}

bool contains_all(const std::vector<bool>& truth, const std::vector<int>& premise) {
    return std::all_of(premise.begin(), premise.end(), [&](int id) { return truth[static_cast<std::size_t>(id)]; });
}

}  // namespace

std::vector<std::vector<int>> bounded_subsets(const std::vector<int>& ids, int max_size) {
    std::vector<std::vector<int>> out;
    std::vector<int> current;
    extend_subsets(ids, 0, std::max(max_size, 0), current, out);
    return out;
}

IngestResult ingest_case(RuleStore& kb, const Case& c, const LearnerConfig& config) {
    check_case(c, kb.phases);
    IngestResult result;

    // With decay every cell moves, so every cell may flip.
    std::map<RuleKey, bool> before;
    if (config.gamma < 1.0) {
        for (auto& [key, counts] : kb.cells) {
            before[key] = rule_in_view(counts, config);
            counts.count_premise *= config.gamma;
            counts.count_both *= config.gamma;
        }
    }

    const std::vector<int> posts = post_features(kb.phases);
    std::vector<RuleKey> touched;
    for (auto& premise : bounded_subsets(true_premise_features(c, kb.phases), config.max_premise)) {
        for (int conclusion : posts) {
            RuleKey key{premise, conclusion};
            auto [it, fresh] = kb.cells.try_emplace(key);
            if (config.gamma == 1.0) {
                before.emplace(key, !fresh && rule_in_view(it->second, config));
            }
            it->second.count_premise += c.weight;
            if (c.truth[static_cast<std::size_t>(conclusion)]) {
                it->second.count_both += c.weight;
            }
            ++result.cells_written;
            touched.push_back(std::move(key));
        }
    }

    for (const auto& [key, counts] : kb.cells) {
        auto prior = before.find(key);
        const bool was_in = prior != before.end() && prior->second;
        if (prior == before.end() && config.gamma == 1.0) {
            continue;  // untouched cell, counts unchanged
        }
        if (was_in != rule_in_view(counts, config)) {
            result.changed.push_back(key);
        }
    }
    return result;
}

RuleStore batch_learn(const std::vector<Case>& cases, const LearnerConfig& config, const std::vector<Phase>& phases) {
    RuleStore kb;
    kb.phases = phases;
    for (const auto& c : cases) {
        check_case(c, phases);
    }

    // Every cell some case would materialize.
    const std::vector<int> posts = post_features(phases);
    std::set<std::vector<int>> premises;
    for (const auto& c : cases) {
        for (auto& premise : bounded_subsets(true_premise_features(c, phases), config.max_premise)) {
            premises.insert(std::move(premise));
        }
    }

    for (const auto& premise : premises) {
        for (int conclusion : posts) {
            RuleCounts counts;
            for (const auto& c : cases) {
                counts.count_premise *= config.gamma;
                counts.count_both *= config.gamma;
                if (contains_all(c.truth, premise)) {
                    counts.count_premise += c.weight;
                    if (c.truth[static_cast<std::size_t>(conclusion)]) {
                        counts.count_both += c.weight;
                    }
                }
            }
            kb.cells.emplace(RuleKey{premise, conclusion}, counts);
        }
    }
    return kb;
}

RuleStore batch_learn(const std::vector<Case>& cases, const LearnerConfig& config, const Terminology& terminology) {
    return batch_learn(cases, config, terminology.phases());
}

std::size_t locality_report(const RuleStore& kb, const Case& c, const LearnerConfig& config) {
    if (config.gamma < 1.0) {
        fail(ErrorClass::DecayActive, "", "decay rescales every cell; locality is only defined for gamma = 1");
    }
    check_case(c, kb.phases);
    const auto k = static_cast<std::size_t>(true_premise_features(c, kb.phases).size());
    std::size_t subsets = 0;
    std::size_t binom = 1;  // C(k, i)
    for (std::size_t i = 0; i <= static_cast<std::size_t>(config.max_premise) && i <= k; ++i) {
        subsets += binom;
        binom = binom * (k - i) / (i + 1);
    }
    return subsets * post_features(kb.phases).size();
}

}  // namespace worldcore
