#pragma once

// Direct-formula reference for every prompt selection score and calibrator.
// Written against the raw tensor fields with nested vectors and no shared code
// with the library's numeric paths (no max-shifted softmax, no grid types).

#include <psel/tensor.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace psel::oracle
{

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;       // [x][y]
using Cube = std::vector<Mat>;      // [t][x][y]

inline double agg(const std::vector<double>& tokens, AggregationMode mode)
{
    if (mode == AggregationMode::first_token)
        return tokens[0];
    double s = 0;
    for (double v : tokens)
        s += v;
    return mode == AggregationMode::sum_logprob ? s : s / tokens.size();
}

inline Vec plain_softmax(const Vec& l)
{
    double z = 0;
    for (double v : l)
        z += std::exp(v);
    Vec out;
    for (double v : l)
        out.push_back(std::exp(v) / z);
    return out;
}

inline double H(const Vec& q)
{
    double h = 0;
    for (double v : q)
        if (v > 0)
            h += -v * std::log(v);
    return h;
}

// First index within 1e-12 (relative, floor 1) of the largest value.
inline std::size_t first_max(const Vec& v)
{
    double top = v[0];
    for (double e : v)
        top = e > top ? e : top;
    const double scale = std::abs(top) > 1 ? std::abs(top) : 1;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!(v[i] < top - 1e-12 * scale))
            return i;
    return 0;
}

inline Cube logits(const ScoreTensor& T, AggregationMode mode)
{
    Cube c(T.num_prompts, Mat(T.num_instances, Vec(T.num_choices)));
    for (std::size_t t = 0; t < T.num_prompts; ++t)
        for (std::size_t x = 0; x < T.num_instances; ++x)
            for (std::size_t y = 0; y < T.num_choices; ++y)
                c[t][x][y] = agg(T.choice_token_logprobs[(t * T.num_instances + x) * T.num_choices + y], mode);
    return c;
}

inline Cube probs(const ScoreTensor& T, AggregationMode mode)
{
    Cube c = logits(T, mode);
    for (auto& m : c)
        for (auto& row : m)
            row = plain_softmax(row);
    return c;
}

inline Cube cc_raw(const ScoreTensor& T, AggregationMode mode)
{
    Cube p = probs(T, mode);
    const std::size_t Y = T.num_choices;
    for (std::size_t t = 0; t < T.num_prompts; ++t)
    {
        Vec pcf(Y, 0.0);
        for (std::size_t y = 0; y < Y; ++y)
        {
            for (std::size_t c = 0; c < 3; ++c)
                pcf[y] += std::exp((*T.content_free_logits)[(t * Y + y) * 3 + c]);
            pcf[y] /= 3.0;
        }
        double mean = 0;
        for (double v : pcf)
            mean += v / Y;
        for (auto& row : p[t])
            for (std::size_t y = 0; y < Y; ++y)
                row[y] = row[y] / (pcf[y] / mean);
    }
    return p;
}

inline Cube pmi_raw(const ScoreTensor& T, AggregationMode mode)
{
    Cube l = logits(T, mode);
    for (std::size_t t = 0; t < T.num_prompts; ++t)
        for (auto& row : l[t])
            for (std::size_t y = 0; y < T.num_choices; ++y)
                row[y] = std::log(std::exp(row[y]) / std::exp((*T.domain_logits)[t * T.num_choices + y]));
    return l;
}

inline Cube cbm_raw(const ScoreTensor& T, AggregationMode mode)
{
    Cube p = probs(T, mode);
    Cube out = p;
    for (std::size_t t = 0; t < T.num_prompts; ++t)
        for (std::size_t y = 0; y < T.num_choices; ++y)
        {
            double m = 0;
            for (std::size_t x = 0; x < T.num_instances; ++x)
                m += p[t][x][y];
            m /= T.num_instances;
            for (std::size_t x = 0; x < T.num_instances; ++x)
                out[t][x][y] = p[t][x][y] / m;
        }
    return out;
}

struct Wiring
{
    Cube answer_scores;
    Cube pss_dists;
};

/// calibration: "none", "cc", "pmi_dc", "cbm"; scenario: "none", "A", "P", "PA".
inline Wiring wire(const ScoreTensor& T, const std::string& calibration, const std::string& scenario,
                   AggregationMode mode)
{
    Cube p = probs(T, mode);
    if (calibration == "none" || scenario == "none")
        return {p, p};
    Cube raw = calibration == "cc" ? cc_raw(T, mode) : calibration == "pmi_dc" ? pmi_raw(T, mode) : cbm_raw(T, mode);
    Cube norm = raw;
    for (auto& m : norm)
        for (auto& row : m)
            row = plain_softmax(row);
    if (scenario == "A")
        return {raw, p};
    if (scenario == "P")
        return {p, norm};
    return {raw, norm};
}

struct Scores
{
    bool instance_wise = false;
    Vec prompt_pss;           // global methods
    Mat instance_pss;         // [x][t], instance-wise methods
    std::size_t selected = 0; // global methods
    std::vector<std::size_t> selected_per_instance;
};

inline Vec ge(const Cube& D, bool onehot)
{
    Vec out;
    for (const auto& m : D)
    {
        Vec mean(m[0].size(), 0.0);
        for (const auto& row : m)
        {
            if (onehot)
                mean[first_max(row)] += 1.0 / m.size();
            else
                for (std::size_t y = 0; y < row.size(); ++y)
                    mean[y] += row[y] / m.size();
        }
        out.push_back(H(mean));
    }
    return out;
}

inline Vec mdl_m(const Cube& D)
{
    Vec out;
    for (const auto& m : D)
    {
        double s = 0;
        for (const auto& row : m)
            s += H(row);
        out.push_back(-s / m.size());
    }
    return out;
}

inline Scores score(const std::string& method, const ScoreTensor& T, const Cube& D)
{
    Scores s;
    const std::size_t nT = D.size(), nX = D[0].size();
    auto global = [&](Vec v) {
        s.prompt_pss = v;
        s.selected = first_max(v);
    };
    auto instance = [&](const Vec& first) {
        s.instance_wise = true;
        s.instance_pss.assign(nX, Vec(nT));
        for (std::size_t x = 0; x < nX; ++x)
        {
            for (std::size_t t = 0; t < nT; ++t)
                s.instance_pss[x][t] = first[t] - H(D[t][x]);
            s.selected_per_instance.push_back(first_max(s.instance_pss[x]));
        }
    };
    if (method == "MI" || method == "MI_A")
    {
        Vec a = ge(D, false), b = mdl_m(D);
        for (std::size_t t = 0; t < nT; ++t)
            a[t] += b[t];
        global(a);
    }
    else if (method == "MI_AG")
    {
        Vec a = ge(D, true), b = mdl_m(D);
        for (std::size_t t = 0; t < nT; ++t)
            a[t] += b[t];
        global(a);
    }
    else if (method == "GE")
        global(ge(D, true));
    else if (method == "GE_M")
        global(ge(D, false));
    else if (method == "MDL_M")
        global(mdl_m(D));
    else if (method == "LE")
    {
        Vec v = mdl_m(D);
        for (double& e : v)
            e = -e;
        global(v);
    }
    else if (method == "MDL")
        instance(Vec(nT, 0.0));
    else if (method == "MI_AL")
        instance(ge(D, false));
    else if (method == "MI_AGL")
        instance(ge(D, true));
    else if (method == "ZLP" || method == "ZPM" || method == "ZMV")
    {
        Vec pss(nT, 0.0);
        for (std::size_t x = 0; x < nX; ++x)
        {
            Vec sxy(D[0][x].size(), 0.0);
            for (std::size_t t = 0; t < nT; ++t)
                for (std::size_t y = 0; y < sxy.size(); ++y)
                {
                    if (method == "ZLP")
                        sxy[y] += std::log(D[t][x][y]) / nT;
                    else if (method == "ZPM")
                        sxy[y] += D[t][x][y] / nT;
                    else
                        sxy[y] += first_max(D[t][x]) == y ? 1.0 : 0.0;
                }
            const auto label = first_max(sxy);
            for (std::size_t t = 0; t < nT; ++t)
                if (first_max(D[t][x]) == label)
                    pss[t] += 1;
        }
        global(pss);
    }
    else if (method == "PPL")
    {
        Vec pss(nT, 0.0);
        for (std::size_t t = 0; t < nT; ++t)
        {
            for (std::size_t x = 0; x < nX; ++x)
            {
                const auto& st = (*T.sequence_stats)[t * nX + x];
                const double px = std::pow(std::exp(st.sum_logprob), 1.0 / (st.token_count - 1));
                pss[t] += 1.0 / px;
            }
            pss[t] = -pss[t] / nX;
        }
        global(pss);
    }
    return s;
}

} // namespace psel::oracle
