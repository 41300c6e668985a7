#pragma once

#include <psel/synth.hpp>
#include <psel/tensor.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace psel::test
{

using Dist = std::vector<double>;

/// Distribution grid from nested [t][x] -> distribution literals.
inline ScoreGrid grid(const std::vector<std::vector<Dist>>& rows)
{
    ScoreGrid g(rows.size(), rows.at(0).size(), rows.at(0).at(0).size());
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t x = 0; x < rows[t].size(); ++x)
            for (std::size_t y = 0; y < rows[t][x].size(); ++y)
                g(t, x, y) = rows[t][x][y];
    return g;
}

/// Single-token tensor whose softmax reproduces the given distributions (log-probs as logits).
inline ScoreTensor tensor_from_dists(const std::vector<std::vector<Dist>>& rows, std::vector<std::size_t> gold,
                                     Category category = Category::balanced)
{
    ScoreTensor t;
    t.dataset_id = "fixture";
    t.category = category;
    t.num_prompts = rows.size();
    t.num_instances = rows.at(0).size();
    t.num_choices = rows.at(0).at(0).size();
    for (std::size_t i = 0; i < t.num_prompts; ++i)
        t.prompt_ids.push_back("p" + std::to_string(i));
    t.gold_labels = std::move(gold);
    t.choice_token_logprobs.resize(t.num_prompts * t.num_instances * t.num_choices);
    for (std::size_t p = 0; p < t.num_prompts; ++p)
        for (std::size_t x = 0; x < t.num_instances; ++x)
            for (std::size_t y = 0; y < t.num_choices; ++y)
                t.choice_tokens(p, x, y) = {std::log(rows[p][x][y])};
    t.sequence_stats.emplace(t.num_prompts * t.num_instances, SequenceStat{-3.0, 4});
    return t;
}

/// Seeded member of the random tensor family used by the property suites.
inline ScoreTensor random_tensor(std::uint64_t seed, std::size_t max_prompts, std::size_t max_instances,
                                 std::size_t max_choices)
{
    std::mt19937_64 rng(seed * 7919 + 17);
    auto pick = [&rng](std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(rng() % (hi - lo + 1)); };
    SynthSpec s;
    s.seed = seed;
    s.num_prompts = pick(1, max_prompts);
    s.num_instances = pick(1, max_instances);
    s.num_choices = pick(2, max_choices);
    s.category = static_cast<Category>(pick(0, 2));
    s.noise = 0.25 * static_cast<double>(pick(0, 8));
    bool planted = false;
    for (std::size_t t = 0; t < s.num_prompts; ++t)
    {
        auto p = static_cast<PromptProfile>(pick(0, 3));
        if (p == PromptProfile::planted_best && planted)
            p = PromptProfile::uniform_noise;
        planted |= p == PromptProfile::planted_best;
        s.profiles.push_back(p);
    }
    return synth_tensor(s);
}

/// Two prompts over two choices: prompt 0 tracks the gold label, prompt 1 always answers the
/// same choice with near certainty. Gold labels are mixed.
inline ScoreTensor collapsed_fixture()
{
    SynthSpec s;
    s.num_prompts = 2;
    s.num_instances = 12;
    s.num_choices = 2;
    s.seed = 7;
    s.noise = 0.0;
    s.profiles = {PromptProfile::planted_best, PromptProfile::collapsed_overconfident};
    return synth_tensor(s);
}

/// 2 prompts x 4 instances x 2 choices. Prompt 0 answers (0, 1, 0, 0), prompt 1 answers (1, 1, 0, 1).
inline ScoreTensor label_bias_fixture()
{
    return tensor_from_dists({{{0.7, 0.3}, {0.2, 0.8}, {0.6, 0.4}, {0.9, 0.1}},
                              {{0.4, 0.6}, {0.3, 0.7}, {0.55, 0.45}, {0.1, 0.9}}},
                             {1, 1, 0, 1}, Category::dynamic);
}

} // namespace psel::test
