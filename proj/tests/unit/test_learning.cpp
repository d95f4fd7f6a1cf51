#include "fixtures.hpp"
#include "oracle.hpp"

#include "worldcore/causal.hpp"
#include "worldcore/sml.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace worldcore;
using fixtures::error_of;
using nlohmann::json;

namespace {

Case make_case(std::uint64_t seq, std::vector<bool> truth) {
    Case c;
    c.seq = seq;
    c.truth = std::move(truth);
    return c;
}

RuleStore store(std::vector<Phase> phases) {
    RuleStore kb;
    kb.phases = std::move(phases);
    return kb;
}

Schema bank() { return define_schema(fixtures::bank_schema_doc()); }

}  // namespace

TEST_SUITE("terminology") {
    TEST_CASE("feature ids are dense in declaration order") {
        const Scenario sc = fixtures::bank_scenario();
        const Terminology& t = sc.terminology;
        REQUIRE(t.size() == 6);
        for (int i = 0; i < 6; ++i) {
            CHECK(t.at(i).id == i);
        }
        CHECK(t.find("rich") == 5);
        CHECK_FALSE(t.find("poor"));
        CHECK(t.at(2).phase == Phase::Act);
    }

    TEST_CASE("invalid terminologies are rejected") {
        const Schema schema = bank();
        auto err = [&](const char* text) { return error_of([&] { define_terminology(json::parse(text), schema); }); };
        CHECK(err(R"([{"name": "x", "phase": "pre", "expr": "true"}, {"name": "x", "phase": "post", "expr": "true"}])") ==
              ErrorClass::ScenarioError);
        CHECK(err(R"([{"name": "x", "phase": "act", "action": "fly"}])") == ErrorClass::ScenarioError);
        CHECK(err(R"([{"name": "x", "phase": "pre", "expr": "1 + 1"}])") == ErrorClass::ScenarioError);
        CHECK(err(R"([{"name": "x", "phase": "pre", "expr": "a.balance > 0"}])") == ErrorClass::ScenarioError);
        CHECK(err(R"([{"name": "two words", "phase": "pre", "expr": "true"}])") == ErrorClass::ScenarioError);
        CHECK(err(R"([{"name": "AND", "phase": "pre", "expr": "true"}])") == ErrorClass::ScenarioError);
        CHECK(err(R"([{"name": "x", "phase": "during", "expr": "true"}])") == ErrorClass::ScenarioError);
        CHECK(err(R"([{"name": "x", "phase": "act", "action": "deposit", "when": "amount > a.nothing"}])") ==
              ErrorClass::ScenarioError);
    }
}

TEST_SUITE("buildCase") {
    TEST_CASE("examples") {
        const Schema schema = bank();
        const WorldState pre = init_state(schema, fixtures::bank_init_doc());
        AppliedAction dep =
            apply_action(pre, schema, "deposit", {{"a", std::string("bob")}, {"amount", std::int64_t{7}}});

        CHECK(build_case(pre, dep.txn, dep.state, Terminology{}).truth.empty());

        const Terminology t = define_terminology(json::parse(R"([
            {"name": "isDeposit", "phase": "act", "action": "deposit"},
            {"name": "isWithdraw", "phase": "act", "action": "withdraw"},
            {"name": "bigDeposit", "phase": "act", "action": "deposit", "when": "amount > 5"},
            {"name": "negative", "phase": "pre", "expr": "exists a:Account. a.balance < 0"},
            {"name": "emptyBefore", "phase": "pre", "expr": "exists a:Account. a.balance = 0"},
            {"name": "emptyAfter", "phase": "post", "expr": "exists a:Account. a.balance = 0"}
        ])"),
                                                     schema);
        const Case c = build_case(pre, dep.txn, dep.state, t);
        CHECK(c.truth == std::vector<bool>{true, false, true, false, true, false});
        CHECK(c.true_names(t) == std::vector<std::string>{"isDeposit", "bigDeposit", "emptyBefore"});
        CHECK(case_from_names(c.seq, c.true_names(t), t).truth == c.truth);
        CHECK(error_of([&] { case_from_names(1, {"unknown"}, t); }) == ErrorClass::UnknownFeature);
    }
}

TEST_SUITE("rules") {
    TEST_CASE("ruleProbability") {
        CHECK(rule_probability(0, 4) == 0.0);
        CHECK(rule_probability(4, 4) == 1.0);
        CHECK(rule_probability(2, 3) == 2.0 / 3.0);
        CHECK(error_of([] { rule_probability(0, 0); }) == ErrorClass::ZeroSupport);
    }

    TEST_CASE("knowledgeView threshold, support and visibility") {
        RuleStore kb = store({Phase::Pre, Phase::Post});
        kb.cells[{{0}, 1}] = {3.0, 2.0};
        LearnerConfig cfg;
        cfg.theta = 0.7;
        CHECK(knowledge_view(kb, cfg).empty());
        cfg.theta = 0.6;
        cfg.min_support = 1.0;
        auto view = knowledge_view(kb, cfg);
        REQUIRE(view.size() == 1);
        CHECK(view[0].premise == std::vector<int>{0});
        CHECK(view[0].p() == 2.0 / 3.0);
        CHECK(knowledge_view(kb, cfg, std::set<int>{0}).empty());
        CHECK(knowledge_view(kb, cfg, std::set<int>{0, 1}).size() == 1);
        cfg.min_support = 3.5;
        CHECK(knowledge_view(kb, cfg).empty());
    }

    TEST_CASE("knowledgeView ordering") {
        RuleStore kb = store({Phase::Pre, Phase::Pre, Phase::Post, Phase::Post});
        kb.cells[{{}, 2}] = {4, 2};
        kb.cells[{{0}, 2}] = {2, 2};
        kb.cells[{{1}, 2}] = {4, 4};
        kb.cells[{{0, 1}, 3}] = {4, 2};
        kb.cells[{{0}, 3}] = {4, 2};
        kb.cells[{{}, 3}] = {0, 0};
        LearnerConfig cfg;
        cfg.theta = 0.0;
        const auto view = knowledge_view(kb, cfg);
        std::vector<std::pair<std::vector<int>, int>> got;
        for (const auto& r : view) {
            got.emplace_back(r.premise, r.conclusion);
        }
        const std::vector<std::pair<std::vector<int>, int>> want = {
            {{1}, 2}, {{0}, 2}, {{}, 2}, {{0}, 3}, {{0, 1}, 3}};
        CHECK(got == want);
        CHECK(knowledge_view(kb, cfg).size() == view.size());
    }

    TEST_CASE("renderRule examples and round trip") {
        const Schema schema = define_schema(json::object());
        const Terminology t = define_terminology(json::parse(R"([
            {"name": "P", "phase": "pre", "expr": "true"},
            {"name": "R", "phase": "pre", "expr": "false"},
            {"name": "Q", "phase": "post", "expr": "true"}
        ])"),
                                                     schema);
        Rule r{{0}, 2, 3.0, 2.0};
        CHECK(render_rule(r, t) == "IF P THEN Q [p = 0.667, support = 3.0]");
        CHECK(render_rule(Rule{{}, 2, 4.0, 1.0}, t) == "IF (always) THEN Q [p = 0.250, support = 4.0]");
        CHECK(render_rule(Rule{{1, 0}, 2, 2.0, 2.0}, t) == "IF P AND R THEN Q [p = 1.000, support = 2.0]");
        CHECK(error_of([&] { render_rule(Rule{{9}, 2, 1.0, 1.0}, t); }) == ErrorClass::UnknownFeature);

        const RenderedRule back = parse_rendered_rule(render_rule(Rule{{0, 1}, 2, 3.0, 2.0}, t));
        CHECK(back.premise == std::vector<std::string>{"P", "R"});
        CHECK(back.conclusion == "Q");
        CHECK(back.p == doctest::Approx(0.667));
        CHECK(back.support == doctest::Approx(3.0));
        CHECK(parse_rendered_rule("IF (always) THEN Q [p = 0.250, support = 4.0]").premise.empty());
        CHECK(error_of([] { parse_rendered_rule("IF THEN"); }) == ErrorClass::ParseError);
    }

    TEST_CASE("rendering is injective over distinct rules") {
        const Scenario sc = fixtures::bank_scenario();
        RuleStore kb(sc.terminology);
        fixtures::Gen gen(5);
        for (int i = 0; i < 200; ++i) {
            Case c;
            c.seq = static_cast<std::uint64_t>(i + 1);
            for (std::size_t f = 0; f < sc.terminology.size(); ++f) {
                c.truth.push_back(gen.coin());
            }
            LearnerConfig cfg;
            cfg.max_premise = 3;
            ingest_case(kb, c, cfg);
        }
        std::set<std::string> seen;
        std::set<std::pair<std::vector<std::string>, std::string>> parsed;
        for (const auto& r : kb.rules()) {
            const std::string text = render_rule(r, sc.terminology);
            seen.insert(text);
            const RenderedRule back = parse_rendered_rule(text);
            parsed.emplace(back.premise, back.conclusion);
        }
        CHECK(seen.size() == kb.cells.size());
        CHECK(parsed.size() == kb.cells.size());
    }
}

TEST_SUITE("sml") {
    TEST_CASE("all-false case touches only the empty premise") {
        RuleStore kb = store({Phase::Pre, Phase::Act, Phase::Post, Phase::Post});
        LearnerConfig cfg;
        IngestResult r = ingest_case(kb, make_case(1, {false, false, false, false}), cfg);
        CHECK(r.cells_written == 2);
        REQUIRE(kb.cells.size() == 2);
        for (const auto& [key, counts] : kb.cells) {
            CHECK(key.premise.empty());
            CHECK(counts.count_premise == 1.0);
            CHECK(counts.count_both == 0.0);
        }
    }

    TEST_CASE("three cases give p = 2/3") {
        RuleStore kb = store({Phase::Pre, Phase::Post});
        LearnerConfig cfg;
        for (auto truth : {std::vector<bool>{true, true}, {true, false}, {true, true}}) {
            ingest_case(kb, make_case(kb.cells.size() + 1, truth), cfg);
        }
        const auto rule = kb.find({{0}, 1});
        REQUIRE(rule);
        CHECK(rule->count_premise == 3.0);
        CHECK(rule->count_both == 2.0);
        CHECK(rule->p() == 2.0 / 3.0);
    }

    TEST_CASE("planted frequency matches the batch oracle on 1000 cases") {
        std::mt19937_64 rng(42);
        std::vector<Case> cases;
        RuleStore kb = store({Phase::Pre, Phase::Post});
        LearnerConfig cfg;
        std::size_t p_true = 0;
        std::size_t both = 0;
        for (std::uint64_t i = 1; i <= 1000; ++i) {
            const bool p = (rng() >> 11) * 0x1.0p-53 < 0.5;
            const bool q = p ? (rng() >> 11) * 0x1.0p-53 < 0.8 : (rng() >> 11) * 0x1.0p-53 < 0.1;
            p_true += p;
            both += p && q;
            cases.push_back(make_case(i, {p, q}));
            ingest_case(kb, cases.back(), cfg);
        }
        const RuleStore batch = batch_learn(cases, cfg, kb.phases);
        CHECK(kb.cells == batch.cells);
        const auto rule = kb.find({{0}, 1});
        REQUIRE(rule);
        CHECK(rule->p() == static_cast<double>(both) / static_cast<double>(p_true));
    }

    TEST_CASE("batchLearn examples") {
        LearnerConfig cfg;
        CHECK(batch_learn({}, cfg, std::vector<Phase>{Phase::Pre, Phase::Post}).cells.empty());

        fixtures::Gen gen(9);
        for (int trial = 0; trial < 25; ++trial) {
            auto prob = oracle::random_problem(gen, 150, 1.0);
            const RuleStore kb = batch_learn(prob.cases, prob.config, prob.phases);
            CHECK(oracle::same_counts(kb, oracle::recount(prob.cases, prob.phases, prob.config.max_premise, 1.0), 0.0));
        }
        for (int trial = 0; trial < 25; ++trial) {
            auto prob = oracle::random_problem(gen, 150, 0.9);
            const RuleStore kb = batch_learn(prob.cases, prob.config, prob.phases);
            CHECK(oracle::same_counts(kb, oracle::recount(prob.cases, prob.phases, prob.config.max_premise, 0.9), 1e-9));
        }
    }

    TEST_CASE("incremental fold equals batch") {
        fixtures::Gen gen(77);
        for (int trial = 0; trial < 40; ++trial) {
            const double gamma = trial % 2 == 0 ? 1.0 : 0.95;
            auto prob = oracle::random_problem(gen, 200, gamma);
            RuleStore kb;
            kb.phases = prob.phases;
            for (const auto& c : prob.cases) {
                ingest_case(kb, c, prob.config);
            }
            const RuleStore batch = batch_learn(prob.cases, prob.config, prob.phases);
            if (gamma == 1.0) {
                CHECK(kb.cells == batch.cells);
            } else {
                CHECK(oracle::same_counts(kb, oracle::recount(prob.cases, prob.phases, prob.config.max_premise, gamma),
                                          1e-9));
            }
        }
    }

    TEST_CASE("order sensitivity") {
        fixtures::Gen gen(123);
        std::vector<Phase> phases = {Phase::Pre, Phase::Act, Phase::Pre, Phase::Post, Phase::Post};
        std::vector<Case> cases;
        for (std::uint64_t i = 1; i <= 60; ++i) {
            std::vector<bool> t;
            for (std::size_t f = 0; f < phases.size(); ++f) {
                t.push_back(gen.coin(i < 30 ? 0.8 : 0.2));
            }
            cases.push_back(make_case(i, t));
        }
        std::vector<Case> shuffled = cases;
        std::shuffle(shuffled.begin(), shuffled.end(), gen.engine());

        LearnerConfig flat;
        CHECK(batch_learn(cases, flat, phases).cells == batch_learn(shuffled, flat, phases).cells);

        LearnerConfig decayed;
        decayed.gamma = 0.9;
        std::vector<Case> reversed(cases.rbegin(), cases.rend());
        CHECK(batch_learn(cases, decayed, phases).cells != batch_learn(reversed, decayed, phases).cells);
    }

    TEST_CASE("locality examples") {
        LearnerConfig cfg;
        cfg.max_premise = 2;
        RuleStore three_post = store({Phase::Pre, Phase::Pre, Phase::Post, Phase::Post, Phase::Post});
        CHECK(locality_report(three_post, make_case(1, {false, false, false, false, false}), cfg) == 3);
        RuleStore one_post = store({Phase::Pre, Phase::Pre, Phase::Post});
        CHECK(locality_report(one_post, make_case(1, {true, true, false}), cfg) == 4);
        cfg.gamma = 0.5;
        CHECK(error_of([&] { locality_report(one_post, make_case(1, {true, true, false}), cfg); }) ==
              ErrorClass::DecayActive);
    }

    TEST_CASE("locality: exactly the predicted cells change") {
        fixtures::Gen gen(31);
        for (int trial = 0; trial < 30; ++trial) {
            auto prob = oracle::random_problem(gen, 80, 1.0);
            RuleStore kb;
            kb.phases = prob.phases;
            for (const auto& c : prob.cases) {
                std::size_t k = 0;
                std::size_t posts = 0;
                for (std::size_t f = 0; f < c.truth.size(); ++f) {
                    if (prob.phases[f] == Phase::Post) {
                        ++posts;
                    } else if (c.truth[f]) {
                        ++k;
                    }
                }
                std::size_t subsets = 0;
                std::size_t binom = 1;
                for (std::size_t i = 0; i <= std::min<std::size_t>(k, static_cast<std::size_t>(prob.config.max_premise));
                     ++i) {
                    subsets += binom;
                    binom = binom * (k - i) / (i + 1);
                }
                const std::size_t predicted = locality_report(kb, c, prob.config);
                CHECK(predicted == subsets * posts);

                const RuleStore before = kb;
                const IngestResult r = ingest_case(kb, c, prob.config);
                CHECK(r.cells_written == predicted);
                std::size_t differing = 0;
                for (const auto& [key, counts] : kb.cells) {
                    auto old = before.cells.find(key);
                    const bool changed = old == before.cells.end() || !(old->second == counts);
                    differing += changed;
                    if (changed) {
                        for (int f : key.premise) {
                            CHECK(c.truth[static_cast<std::size_t>(f)]);
                        }
                    }
                }
                CHECK(differing == predicted);
            }
        }
    }

    TEST_CASE("countPremise is non-decreasing at gamma = 1") {
        fixtures::Gen gen(64);
        auto prob = oracle::random_problem(gen, 300, 1.0);
        prob.config.max_premise = 3;
        RuleStore kb;
        kb.phases = prob.phases;
        for (const auto& c : prob.cases) {
            const RuleStore before = kb;
            ingest_case(kb, c, prob.config);
            for (const auto& [key, counts] : before.cells) {
                CHECK(kb.cells.at(key).count_premise >= counts.count_premise);
                CHECK(kb.cells.at(key).count_both <= kb.cells.at(key).count_premise);
            }
        }
    }

    TEST_CASE("changed rules report view flips") {
        RuleStore kb = store({Phase::Pre, Phase::Post});
        LearnerConfig cfg;
        cfg.theta = 0.6;
        cfg.min_support = 2;
        CHECK(ingest_case(kb, make_case(1, {true, true}), cfg).changed.empty());
        const auto in = ingest_case(kb, make_case(2, {true, true}), cfg).changed;
        CHECK(in == std::vector<RuleKey>{{{}, 1}, {{0}, 1}});
        ingest_case(kb, make_case(3, {true, false}), cfg);
        const auto out = ingest_case(kb, make_case(4, {true, false}), cfg).changed;
        CHECK(out == std::vector<RuleKey>{{{}, 1}, {{0}, 1}});
    }

    TEST_CASE("mismatched cases are rejected") {
        RuleStore kb = store({Phase::Pre, Phase::Post});
        LearnerConfig cfg;
        CHECK(error_of([&] { ingest_case(kb, make_case(1, {true}), cfg); }) == ErrorClass::TerminologyMismatch);
        CHECK(error_of([&] { batch_learn({make_case(1, {true, true, true})}, cfg, kb.phases); }) ==
              ErrorClass::TerminologyMismatch);
        CHECK(kb.cells.empty());
    }

    TEST_CASE("learner config validation") {
        auto err = [](const char* text) { return error_of([&] { learner_from_json(json::parse(text)); }); };
        CHECK(err(R"({"theta": 1.5})") == ErrorClass::ScenarioError);
        CHECK(err(R"({"minSupport": 0})") == ErrorClass::ScenarioError);
        CHECK(err(R"({"Lmax": 0})") == ErrorClass::ScenarioError);
        CHECK(err(R"({"gamma": 0})") == ErrorClass::ScenarioError);
        CHECK(err(R"({"gamma": 1.1})") == ErrorClass::ScenarioError);
        CHECK(err(R"({"theta": 0.5, "extra": 1})") == ErrorClass::ScenarioError);
        const LearnerConfig cfg = learner_from_json(json::parse(R"({"theta": 0.25, "Lmax": 3, "gamma": 0.5})"));
        CHECK(learner_from_json(learner_to_json(cfg)).theta == 0.25);
        CHECK(learner_from_json(learner_to_json(cfg)).max_premise == 3);
    }
}
