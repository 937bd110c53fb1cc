// Gaussian naive Bayes with empirical class priors and a variance floor.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "spcd/model.hpp"

namespace spcd {

struct GaussianNb {
    double log_prior0 = 0.0;
    double log_prior1 = 0.0;
    std::vector<double> mean0, var0;
    std::vector<double> mean1, var1;

    // Posterior probability of class 1 via the log-likelihood ratio.
    double score(const std::vector<double>& row) const {
        if (row.size() != mean0.size()) throw std::invalid_argument("nb: width mismatch");
        double llr = log_prior1 - log_prior0;
        for (std::size_t j = 0; j < row.size(); ++j) {
            double d0 = row[j] - mean0[j];
            double d1 = row[j] - mean1[j];
            llr += 0.5 * (std::log(var0[j]) - std::log(var1[j]));
            llr += 0.5 * (d0 * d0 / var0[j] - d1 * d1 / var1[j]);
        }
        return 1.0 / (1.0 + std::exp(-llr));
    }
};

inline GaussianNb train_naive_bayes(const std::vector<std::vector<double>>& x,
                                    const std::vector<int>& y, const ModelParams& params) {
    std::size_t n = x.size(), d = x[0].size();
    std::size_t n1 = 0;
    for (int v : y) n1 += static_cast<std::size_t>(v);
    std::size_t n0 = n - n1;
    if (n0 == 0 || n1 == 0)
        throw std::invalid_argument("naive bayes: training data must contain both classes");

    GaussianNb nb;
    nb.log_prior0 = std::log(static_cast<double>(n0) / static_cast<double>(n));
    nb.log_prior1 = std::log(static_cast<double>(n1) / static_cast<double>(n));
    nb.mean0.assign(d, 0.0);
    nb.mean1.assign(d, 0.0);
    nb.var0.assign(d, 0.0);
    nb.var1.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto& m = y[i] ? nb.mean1 : nb.mean0;
        for (std::size_t j = 0; j < d; ++j) m[j] += x[i][j];
    }
    for (std::size_t j = 0; j < d; ++j) {
        nb.mean0[j] /= static_cast<double>(n0);
        nb.mean1[j] /= static_cast<double>(n1);
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto& m = y[i] ? nb.mean1 : nb.mean0;
        auto& v = y[i] ? nb.var1 : nb.var0;
        for (std::size_t j = 0; j < d; ++j) {
            double dx = x[i][j] - m[j];
            v[j] += dx * dx;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        nb.var0[j] = std::max(nb.var0[j] / static_cast<double>(n0), params.nb_var_floor);
        nb.var1[j] = std::max(nb.var1[j] / static_cast<double>(n1), params.nb_var_floor);
    }
    return nb;
}

}  // namespace spcd
