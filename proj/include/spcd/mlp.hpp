// Single-hidden-layer perceptron: ReLU hidden units, sigmoid output, binary
// cross-entropy, plain minibatch SGD with L2 weight decay. The loss/gradient
// is exposed as a free function so it can be checked against finite
// differences.
#pragma once

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "spcd/model.hpp"
#include "spcd/rng.hpp"

namespace spcd {

// Flat parameter layout: W1 (hidden x input, row-major), b1, W2, b2.
inline std::size_t mlp_param_count(int input, int hidden) {
    return static_cast<std::size_t>(hidden) * input + hidden + hidden + 1;
}

struct Mlp {
    int input = 0;
    int hidden = 0;
    std::vector<double> w;

    double logit(const std::vector<double>& row) const {
        if (static_cast<int>(row.size()) != input) throw std::invalid_argument("mlp: width mismatch");
        const double* w1 = w.data();
        const double* b1 = w1 + static_cast<std::size_t>(hidden) * input;
        const double* w2 = b1 + hidden;
        const double b2 = w2[hidden];
        double z = b2;
        for (int h = 0; h < hidden; ++h) {
            double a = b1[h];
            const double* wr = w1 + static_cast<std::size_t>(h) * input;
            for (int j = 0; j < input; ++j) a += wr[j] * row[j];
            if (a > 0.0) z += w2[h] * a;
        }
        return z;
    }

    double score(const std::vector<double>& row) const {
        return 1.0 / (1.0 + std::exp(-logit(row)));
    }
};

// Mean BCE over the batch plus (l2/2)*||weights||^2 (biases excluded), with
// the analytic gradient in the same flat layout.
inline std::pair<double, std::vector<double>> mlp_loss_grad(
    const std::vector<double>& w, int input, int hidden,
    const std::vector<std::vector<double>>& x, const std::vector<int>& y,
    const std::vector<std::size_t>& batch, double l2) {
    if (w.size() != mlp_param_count(input, hidden))
        throw std::invalid_argument("mlp: parameter count mismatch");
    if (batch.empty()) throw std::invalid_argument("mlp: empty batch");

    const std::size_t w1_off = 0;
    const std::size_t b1_off = static_cast<std::size_t>(hidden) * input;
    const std::size_t w2_off = b1_off + hidden;
    const std::size_t b2_off = w2_off + hidden;

    std::vector<double> grad(w.size(), 0.0);
    std::vector<double> pre(static_cast<std::size_t>(hidden));
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(batch.size());

    for (std::size_t i : batch) {
        const std::vector<double>& row = x[i];
        double z = w[b2_off];
        for (int h = 0; h < hidden; ++h) {
            double a = w[b1_off + h];
            const double* wr = w.data() + w1_off + static_cast<std::size_t>(h) * input;
            for (int j = 0; j < input; ++j) a += wr[j] * row[j];
            pre[static_cast<std::size_t>(h)] = a;
            if (a > 0.0) z += w[w2_off + h] * a;
        }
        double label = static_cast<double>(y[i]);
        loss += inv_n * (std::max(z, 0.0) - z * label + std::log1p(std::exp(-std::fabs(z))));
        double dz = inv_n * (1.0 / (1.0 + std::exp(-z)) - label);
        grad[b2_off] += dz;
        for (int h = 0; h < hidden; ++h) {
            double a = pre[static_cast<std::size_t>(h)];
            if (a > 0.0) grad[w2_off + h] += dz * a;
            double dpre = a > 0.0 ? dz * w[w2_off + h] : 0.0;
            if (dpre != 0.0) {
                grad[b1_off + h] += dpre;
                double* gr = grad.data() + w1_off + static_cast<std::size_t>(h) * input;
                for (int j = 0; j < input; ++j) gr[j] += dpre * row[j];
            }
        }
    }

    if (l2 > 0.0) {
        for (std::size_t k = w1_off; k < b1_off; ++k) {
            loss += 0.5 * l2 * w[k] * w[k];
            grad[k] += l2 * w[k];
        }
        for (std::size_t k = w2_off; k < b2_off; ++k) {
            loss += 0.5 * l2 * w[k] * w[k];
            grad[k] += l2 * w[k];
        }
    }
    return {loss, std::move(grad)};
}

inline Mlp train_mlp(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                     const ModelParams& params, TrainTrace* trace = nullptr) {
    const int d = static_cast<int>(x[0].size());
    const int hidden = params.mlp_hidden;

    Mlp net;
    net.input = d;
    net.hidden = hidden;
    net.w.assign(mlp_param_count(d, hidden), 0.0);
    Rng init_rng(derive_seed(params.seed, "mlp_init"));
    double lim1 = std::sqrt(6.0 / (d + hidden));
    double lim2 = std::sqrt(6.0 / (hidden + 1));
    std::size_t b1_off = static_cast<std::size_t>(hidden) * d;
    std::size_t w2_off = b1_off + hidden;
    std::size_t b2_off = w2_off + hidden;
    for (std::size_t k = 0; k < b1_off; ++k) net.w[k] = (2.0 * init_rng.next_double() - 1.0) * lim1;
    for (std::size_t k = w2_off; k < b2_off; ++k)
        net.w[k] = (2.0 * init_rng.next_double() - 1.0) * lim2;

    Rng shuffle_rng(derive_seed(params.seed, "mlp_shuffle"));
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < params.mlp_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(params.mlp_batch)) {
            std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(params.mlp_batch));
            std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(stop));
            auto [loss, grad] = mlp_loss_grad(net.w, d, hidden, x, y, batch, params.mlp_l2);
            if (!std::isfinite(loss))
                throw DivergenceError("mlp training diverged at epoch " + std::to_string(epoch));
            epoch_loss += loss * static_cast<double>(batch.size());
            seen += batch.size();
            for (std::size_t k = 0; k < net.w.size(); ++k) net.w[k] -= params.mlp_lr * grad[k];
        }
        if (trace) trace->epoch_losses.push_back(epoch_loss / static_cast<double>(seen));
    }
    return net;
}

}  // namespace spcd
