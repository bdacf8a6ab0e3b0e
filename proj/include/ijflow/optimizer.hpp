#pragma once

#include "ijflow/nn.hpp"

namespace ijflow {

struct AdamState {
    std::vector<Matrix> m_w, v_w;
    std::vector<std::vector<double>> m_b, v_b;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_network(const MlpNetwork& net);
};

// Standard Adam update with bias correction. Throws on a non-finite gradient,
// naming the offending parameter tensor.
void adam_step(MlpNetwork& net, const Gradients& grads, AdamState& state, double lr,
               const std::string& net_name = "net");

} // namespace ijflow
