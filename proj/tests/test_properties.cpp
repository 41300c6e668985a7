#include "fixtures.hpp"
#include "oracle.hpp"

#include <psel/evaluation.hpp>
#include <psel/selection.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace psel;

namespace
{

const char* calibration_name(CalibrationMethod m)
{
    switch (m)
    {
    case CalibrationMethod::none: return "none";
    case CalibrationMethod::cc: return "cc";
    case CalibrationMethod::pmi_dc: return "pmi_dc";
    case CalibrationMethod::cbm: return "cbm";
    }
    return "";
}

const char* scenario_name(CalibrationScenario s)
{
    switch (s)
    {
    case CalibrationScenario::none: return "none";
    case CalibrationScenario::answer_only: return "A";
    case CalibrationScenario::pss_only: return "P";
    case CalibrationScenario::both: return "PA";
    }
    return "";
}

void expect_grid_near(const ScoreGrid& g, const oracle::Cube& c, double tol)
{
    for (std::size_t t = 0; t < g.num_prompts(); ++t)
        for (std::size_t x = 0; x < g.num_instances(); ++x)
            for (std::size_t y = 0; y < g.num_choices(); ++y)
                EXPECT_NEAR(g(t, x, y), c[t][x][y], tol * std::max(1.0, std::abs(c[t][x][y])));
}

} // namespace

TEST(Properties, MatchesTheDirectFormulaOracle)
{
    for (std::uint64_t seed = 0; seed < 120; ++seed)
    {
        const auto t = test::random_tensor(seed, 3, 4, 3);
        for (auto cal : all_calibration_methods)
            for (auto sc : all_calibration_scenarios)
                for (auto name : method_names)
                {
                    const auto spec = method_by_name(name);
                    const auto s = select(t, spec, cal, sc);
                    const auto w = oracle::wire(t, calibration_name(cal), scenario_name(sc), s.aggregation);
                    const auto o = oracle::score(std::string(name), t, w.pss_dists);
                    ASSERT_EQ(s.outcome.instance_wise, o.instance_wise);
                    if (o.instance_wise)
                    {
                        EXPECT_EQ(s.outcome.instance_prompts, o.selected_per_instance) << name << " seed " << seed;
                        for (std::size_t x = 0; x < t.num_instances; ++x)
                            for (std::size_t i = 0; i < t.num_prompts; ++i)
                                EXPECT_NEAR(s.outcome.instance_scores[x * t.num_prompts + i], o.instance_pss[x][i],
                                            1e-9);
                    }
                    else
                    {
                        EXPECT_EQ(s.outcome.prompt, o.selected) << name << " seed " << seed;
                        for (std::size_t i = 0; i < t.num_prompts; ++i)
                            EXPECT_NEAR(s.outcome.prompt_scores[i], o.prompt_pss[i], 1e-9) << name;
                    }
                    for (std::size_t i = 0; i < t.num_prompts; ++i)
                        for (std::size_t x = 0; x < t.num_instances; ++x)
                            EXPECT_EQ(s.answers(i, x), oracle::first_max(w.answer_scores[i][x]))
                                << name << " seed " << seed << " " << calibration_name(cal) << " " << scenario_name(sc);
                }
    }
}

TEST(Properties, CalibratedScoresMatchTheOracle)
{
    for (std::uint64_t seed = 0; seed < 120; ++seed)
    {
        const auto t = test::random_tensor(seed, 3, 4, 3);
        for (auto agg : {AggregationMode::first_token, AggregationMode::mean_logprob, AggregationMode::sum_logprob})
        {
            expect_grid_near(calibrate_cc(t, agg).raw, oracle::cc_raw(t, agg), 1e-9);
            expect_grid_near(calibrate_pmi_dc(t, agg).raw, oracle::pmi_raw(t, agg), 1e-9);
            expect_grid_near(calibrate_cbm(t, agg).raw, oracle::cbm_raw(t, agg), 1e-9);
        }
    }
}

TEST(Properties, EntropiesAndScoresStayInRange)
{
    for (std::uint64_t seed = 0; seed < 60; ++seed)
    {
        const auto t = test::random_tensor(seed, 6, 12, 5);
        const double ln_y = std::log(static_cast<double>(t.num_choices));
        for (auto cal : all_calibration_methods)
        {
            const auto w = apply_scenario(t, cal, CalibrationScenario::both, default_aggregation(t.category));
            const auto& d = w.pss_distributions;
            for (bool oh : {false, true})
                for (double v : first_term(d, oh))
                {
                    EXPECT_GE(v, 0.0);
                    EXPECT_LE(v, ln_y + 1e-12);
                }
            for (double v : second_term(d).per_instance)
            {
                EXPECT_LE(v, 0.0);
                EXPECT_GE(v, -ln_y - 1e-12);
            }
        }
    }
}

TEST(Properties, PerPromptMetricsStayInRange)
{
    for (std::uint64_t seed = 0; seed < 60; ++seed)
    {
        const auto t = test::random_tensor(seed, 6, 12, 5);
        const auto answers = argmax_rows(answer_distributions(t, default_aggregation(t.category)));
        const auto m = per_prompt_metrics(answers, t.gold_labels, t.num_choices);
        for (std::size_t i = 0; i < t.num_prompts; ++i)
        {
            EXPECT_GE(m.accuracy[i], 0.0);
            EXPECT_LE(m.accuracy[i], 1.0);
            EXPECT_GE(m.macro_f1[i], 0.0);
            EXPECT_LE(m.macro_f1[i], 1.0);
        }
    }
}

TEST(Properties, ZpmAgreesWithTheEnsembleMean)
{
    // ZPM's pseudo-label is the argmax of the ensemble mean, the same marginal MI's first term averages.
    for (std::uint64_t seed = 0; seed < 40; ++seed)
    {
        const auto t = test::random_tensor(seed, 5, 6, 4);
        const auto p = answer_distributions(t, default_aggregation(t.category));
        const auto labels = zero_label_pseudo_labels(ZeroLabelVariant::zpm, p);
        for (std::size_t x = 0; x < t.num_instances; ++x)
        {
            std::vector<double> mean(t.num_choices, 0.0);
            for (std::size_t i = 0; i < t.num_prompts; ++i)
                for (std::size_t y = 0; y < t.num_choices; ++y)
                    mean[y] += p(i, x, y);
            EXPECT_EQ(labels[x], oracle::first_max(mean));
        }
    }
}
