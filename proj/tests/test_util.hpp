#pragma once

#include "ijflow/nn.hpp"

#include <cmath>
#include <functional>

namespace ijflow::testutil {

inline bool rel_close(double a, double b, double tol) {
    return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

// Central finite differences of a scalar loss over every parameter of `net`,
// laid out layer by layer (weights row-major, then bias).
inline Gradients numeric_gradient(MlpNetwork& net, const std::function<double()>& loss,
                                  double step = 1e-5) {
    Gradients g = Gradients::zeros_like(net);
    for (size_t l = 0; l < net.num_layers(); ++l) {
        for (size_t i = 0; i < net.weights[l].data.size(); ++i) {
            double& p = net.weights[l].data[i];
            const double saved = p;
            p = saved + step;
            const double hi = loss();
            p = saved - step;
            const double lo = loss();
            p = saved;
            g.weights[l].data[i] = (hi - lo) / (2.0 * step);
        }
        for (size_t i = 0; i < net.biases[l].size(); ++i) {
            double& p = net.biases[l][i];
            const double saved = p;
            p = saved + step;
            const double hi = loss();
            p = saved - step;
            const double lo = loss();
            p = saved;
            g.biases[l][i] = (hi - lo) / (2.0 * step);
        }
    }
    return g;
}

// Largest violation of rel_close between analytic and numeric gradients.
inline double max_gradient_mismatch(const Gradients& analytic, const Gradients& numeric) {
    double worst = 0.0;
    for (size_t l = 0; l < analytic.weights.size(); ++l) {
        for (size_t i = 0; i < analytic.weights[l].data.size(); ++i) {
            const double a = analytic.weights[l].data[i];
            const double b = numeric.weights[l].data[i];
            worst = std::max(worst, std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)}));
        }
        for (size_t i = 0; i < analytic.biases[l].size(); ++i) {
            const double a = analytic.biases[l][i];
            const double b = numeric.biases[l][i];
            worst = std::max(worst, std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)}));
        }
    }
    return worst;
}

// Single-linear-layer network with the given weight matrix and zero bias.
inline MlpNetwork linear_net(const Matrix& w) {
    MlpNetwork net;
    net.layers.push_back({w.cols, w.rows, Activation::Linear});
    net.weights.push_back(w);
    net.biases.emplace_back(w.rows, 0.0);
    return net;
}

} // namespace ijflow::testutil
