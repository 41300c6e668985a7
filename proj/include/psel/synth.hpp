#pragma once

// Deterministic synthetic score tensors with planted prompt behaviours, and the
// label-bias transform for dynamic datasets.

#include <psel/error.hpp>
#include <psel/tensor.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace psel
{

enum class PromptProfile
{
    /// p(gold) = planted_gold_probability on every instance.
    planted_best,
    /// p(c) = collapsed_probability for one fixed choice c, whatever the gold label.
    collapsed_overconfident,
    /// Gaussian logits with standard deviation `noise`; exactly uniform at noise = 0.
    uniform_noise,
    /// Noisy logits pushed toward choice 0; its presence makes every gold label 0.
    label_biased,
};

inline constexpr double planted_gold_probability = 0.92;
inline constexpr double collapsed_probability = 0.995;

constexpr std::string_view to_string(PromptProfile p)
{
    switch (p)
    {
    case PromptProfile::planted_best: return "planted_best";
    case PromptProfile::collapsed_overconfident: return "collapsed_overconfident";
    case PromptProfile::uniform_noise: return "uniform_noise";
    case PromptProfile::label_biased: return "label_biased";
    }
    return "?";
}

inline std::optional<PromptProfile> parse_profile(std::string_view s)
{
    for (auto p : {PromptProfile::planted_best, PromptProfile::collapsed_overconfident, PromptProfile::uniform_noise,
                   PromptProfile::label_biased})
        if (to_string(p) == s)
            return p;
    return std::nullopt;
}

struct SynthSpec
{
    std::size_t num_prompts = 4;
    std::size_t num_instances = 16;
    std::size_t num_choices = 2;
    std::uint64_t seed = 0;
    /// One per prompt; empty means all uniform_noise.
    std::vector<PromptProfile> profiles;
    double noise = 1.0;
    Category category = Category::balanced;
    std::string dataset_id = "synthetic";
    bool with_sequence_stats = true;
    bool with_content_free = true;
    bool with_domain = true;

    void validate() const
    {
        if (num_choices < 2)
            fail(ErrorKind::invalid_argument, "synth needs at least 2 choices");
        if (num_prompts == 0 || num_instances == 0)
            fail(ErrorKind::invalid_argument, "synth needs at least one prompt and one instance");
        if (!profiles.empty() && profiles.size() != num_prompts)
            fail(ErrorKind::invalid_argument, "synth: " + std::to_string(profiles.size()) + " profiles for "
                                                  + std::to_string(num_prompts) + " prompts");
        std::size_t planted = 0;
        for (auto p : profiles)
            planted += p == PromptProfile::planted_best;
        if (planted > 1)
            fail(ErrorKind::invalid_argument, "synth: at most one planted_best prompt");
        if (!(noise >= 0.0) || !std::isfinite(noise))
            fail(ErrorKind::invalid_argument, "synth: noise must be finite and >= 0");
    }
};

inline ScoreTensor synth_tensor(const SynthSpec& spec)
{
    spec.validate();
    const auto T = spec.num_prompts, X = spec.num_instances, Y = spec.num_choices;
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto uniform_index = [&rng](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

    std::vector<PromptProfile> profiles = spec.profiles;
    if (profiles.empty())
        profiles.assign(T, PromptProfile::uniform_noise);
    bool label_bias = false;
    for (auto p : profiles)
        label_bias |= p == PromptProfile::label_biased;

    ScoreTensor t;
    t.dataset_id = spec.dataset_id;
    t.category = spec.category;
    t.num_prompts = T;
    t.num_instances = X;
    t.num_choices = Y;
    for (std::size_t i = 0; i < T; ++i)
        t.prompt_ids.push_back("p" + std::to_string(i));
    t.gold_labels.resize(X);
    for (auto& g : t.gold_labels)
        g = label_bias ? 0 : uniform_index(Y);

    const auto agg = default_aggregation(spec.category);
    const double planted_other = std::log((1.0 - planted_gold_probability) / static_cast<double>(Y - 1)
                                          / planted_gold_probability);
    const double collapsed_other = std::log((1.0 - collapsed_probability) / static_cast<double>(Y - 1)
                                            / collapsed_probability);

    t.choice_token_logprobs.resize(T * X * Y);
    std::vector<double> target(Y);
    for (std::size_t ti = 0; ti < T; ++ti)
    {
        const std::size_t collapsed_choice = uniform_index(Y);
        for (std::size_t xi = 0; xi < X; ++xi)
        {
            // Target aggregated logits under the category's default aggregation.
            for (std::size_t y = 0; y < Y; ++y)
            {
                switch (profiles[ti])
                {
                case PromptProfile::planted_best:
                    target[y] = y == t.gold_labels[xi] ? 0.0 : planted_other;
                    break;
                case PromptProfile::collapsed_overconfident:
                    target[y] = y == collapsed_choice ? 0.0 : collapsed_other;
                    break;
                case PromptProfile::uniform_noise: target[y] = spec.noise * normal(rng); break;
                case PromptProfile::label_biased: target[y] = spec.noise * normal(rng) + (y == 0 ? 1.5 : 0.0); break;
                }
            }
            for (std::size_t y = 0; y < Y; ++y)
            {
                const std::size_t len = spec.category == Category::dynamic ? 3 + uniform_index(6) : 1 + uniform_index(3);
                const double base = agg == AggregationMode::sum_logprob ? target[y] / static_cast<double>(len)
                                                                        : target[y];
                // Zero-sum jitter moves the first token but keeps the mean and the sum.
                std::vector<double> jitter(len);
                double jmean = 0.0;
                for (auto& j : jitter)
                {
                    j = spec.noise * 0.5 * normal(rng);
                    jmean += j;
                }
                jmean /= static_cast<double>(len);
                auto& tokens = t.choice_token_logprobs[(ti * X + xi) * Y + y];
                tokens.resize(len);
                for (std::size_t k = 0; k < len; ++k)
                    tokens[k] = base + (len > 1 ? jitter[k] - jmean : 0.0);
            }
        }
    }

    if (spec.with_sequence_stats)
    {
        t.sequence_stats.emplace(T * X);
        std::uniform_real_distribution<double> per_token(0.5, 3.0);
        for (auto& s : *t.sequence_stats)
        {
            s.token_count = 4 + static_cast<std::int64_t>(uniform_index(20));
            s.sum_logprob = -static_cast<double>(s.token_count) * per_token(rng);
        }
    }
    if (spec.with_content_free)
    {
        t.content_free_logits.emplace(T * Y * content_free_inputs.size());
        for (auto& v : *t.content_free_logits)
            v = -1.0 + 0.5 * normal(rng);
    }
    if (spec.with_domain)
    {
        t.domain_logits.emplace(T * Y);
        for (auto& v : *t.domain_logits)
            v = -1.0 + 0.5 * normal(rng);
    }
    validate(t);
    return t;
}

/// Every gold label becomes index 0; only valid for dynamic-choice datasets.
inline ScoreTensor relabel_bias(ScoreTensor tensor)
{
    if (tensor.category != Category::dynamic)
        fail(ErrorKind::invalid_argument, "relabel_bias applies to dynamic datasets only, got category "
                                              + std::string(to_string(tensor.category)));
    std::fill(tensor.gold_labels.begin(), tensor.gold_labels.end(), 0);
    return tensor;
}

} // namespace psel
