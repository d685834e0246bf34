#pragma once

// Central finite-difference check of Denoiser::backward.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "ansfield/denoiser.hpp"

namespace gradcheck {

struct Result {
    std::string name;
    std::size_t checked = 0;
    double max_rel = 0.0;
    // entries at or above `flag` and how they fare with a 10x larger step
    std::size_t flagged = 0;
    double flagged_max_abs_grad = 0.0;
    double flagged_max_rel_coarse = 0.0;
};

struct Problem {
    ansfield::ValueArray z, img, weight;
    std::vector<int> t;
    std::vector<ansfield::TokenIds> text;
};

inline Problem make_problem(int side, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Problem p{ansfield::ValueArray({2, 1, std::size_t(side), std::size_t(side)}),
              ansfield::ValueArray({2, 3, std::size_t(side), std::size_t(side)}),
              ansfield::ValueArray({2, 1, std::size_t(side), std::size_t(side)}),
              {7, 63},
              {{0, 5, 20}, {}}};
    for (auto& v : p.z.values()) v = n(rng);
    for (auto& v : p.img.values()) v = n(rng);
    for (auto& v : p.weight.values()) v = n(rng);
    return p;
}

// loss = sum(weight * output); d loss / d output = weight.
// The two perturbed outputs are subtracted before weighting so the large
// common part of the loss cancels exactly instead of in the final sum.
inline double central_difference(ansfield::Denoiser& m, const Problem& p, double& param, double h) {
    const double keep = param;
    param = keep + h;
    const auto up = m.predict(p.z, p.t, &p.img, &p.text);
    param = keep - h;
    const auto down = m.predict(p.z, p.t, &p.img, &p.text);
    param = keep;
    double s = 0.0;
    for (std::size_t i = 0; i < up.size(); ++i) s += p.weight[i] * (up[i] - down[i]);
    return s / (2 * h);
}

inline double relative_error(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

/// max_per_array = 0 checks every entry; otherwise a seeded subset.
inline std::vector<Result> run(ansfield::Denoiser& m, const Problem& p, std::size_t max_per_array,
                               std::uint64_t seed = 1, double h = 1e-5, double flag = 1e-4) {
    ansfield::DenoiserTrace trace;
    m.forward(p.z, p.t, &p.img, &p.text, &trace);
    const auto grads = m.backward(trace, p.weight);
    std::mt19937_64 rng(seed);
    std::vector<Result> out;
    for (std::size_t a = 0; a < m.params().entries().size(); ++a) {
        auto& entry = m.params().entries()[a];
        const auto& g = grads.entries()[a].value;
        std::vector<std::size_t> idx(entry.value.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        if (max_per_array && idx.size() > max_per_array) {
            std::shuffle(idx.begin(), idx.end(), rng);
            idx.resize(max_per_array);
        }
        Result r{entry.name, idx.size(), 0.0};
        for (std::size_t i : idx) {
            const double rel = relative_error(g[i], central_difference(m, p, entry.value[i], h));
            r.max_rel = std::max(r.max_rel, rel);
            if (rel >= flag) {
                ++r.flagged;
                r.flagged_max_abs_grad = std::max(r.flagged_max_abs_grad, std::abs(g[i]));
                const double coarse = relative_error(g[i], central_difference(m, p, entry.value[i], 10 * h));
                r.flagged_max_rel_coarse = std::max(r.flagged_max_rel_coarse, coarse);
            }
        }
        out.push_back(r);
    }
    return out;
}

}  // namespace gradcheck
