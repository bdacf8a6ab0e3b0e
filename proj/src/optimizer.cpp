#include "ijflow/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace ijflow {

AdamState AdamState::for_network(const MlpNetwork& net) {
    AdamState s;
    for (size_t l = 0; l < net.num_layers(); ++l) {
        s.m_w.emplace_back(net.weights[l].rows, net.weights[l].cols);
        s.v_w.emplace_back(net.weights[l].rows, net.weights[l].cols);
        s.m_b.emplace_back(net.biases[l].size(), 0.0);
        s.v_b.emplace_back(net.biases[l].size(), 0.0);
    }
    return s;
}

namespace {

void adam_update(double* p, const double* g, double* m, double* v, size_t count,
                 const AdamState& s, double lr, double bc1, double bc2, const std::string& name) {
    for (size_t i = 0; i < count; ++i) {
        if (!std::isfinite(g[i]))
            throw std::runtime_error("adam_step: non-finite gradient in " + name);
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + s.eps);
    }
}

} // namespace

void adam_step(MlpNetwork& net, const Gradients& grads, AdamState& state, double lr,
               const std::string& net_name) {
    if (grads.weights.size() != net.num_layers())
        throw std::invalid_argument("adam_step: gradient/network layer mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (size_t l = 0; l < net.num_layers(); ++l) {
        if (grads.weights[l].rows != net.weights[l].rows ||
            grads.weights[l].cols != net.weights[l].cols ||
            grads.biases[l].size() != net.biases[l].size())
            throw std::invalid_argument("adam_step: gradient shape mismatch at layer " +
                                        std::to_string(l));
        const std::string tag = net_name + " layer " + std::to_string(l);
        adam_update(net.weights[l].data.data(), grads.weights[l].data.data(),
                    state.m_w[l].data.data(), state.v_w[l].data.data(),
                    net.weights[l].data.size(), state, lr, bc1, bc2, tag + " weights");
        adam_update(net.biases[l].data(), grads.biases[l].data(), state.m_b[l].data(),
                    state.v_b[l].data(), net.biases[l].size(), state, lr, bc1, bc2,
                    tag + " biases");
    }
}

} // namespace ijflow
