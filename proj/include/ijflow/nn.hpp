#pragma once

#include "ijflow/matrix.hpp"
#include "ijflow/rng.hpp"

#include <string>
#include <vector>

namespace ijflow {

enum class Activation { Elu, Sigmoid, Linear };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct LayerSpec {
    int in_dim = 0;
    int out_dim = 0;
    Activation activation = Activation::Linear;
};

// MLP with per-layer weight (out_dim x in_dim) and bias. Immutable during
// forward/backward/jvp/vjp; the training driver mutates parameters between
// evaluations.
struct MlpNetwork {
    std::vector<LayerSpec> layers;
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    int input_dim() const { return layers.empty() ? 0 : layers.front().in_dim; }
    int output_dim() const { return layers.empty() ? 0 : layers.back().out_dim; }
    size_t num_layers() const { return layers.size(); }
    size_t param_count() const;
};

// He-style init: weights ~ N(0, 2/in_dim), biases zero.
MlpNetwork init_mlp(const std::vector<LayerSpec>& specs, RngState& rng);

// Convenience: dims {in, h1, ..., out} with `hidden` activation everywhere
// except the final layer, which uses `output`.
MlpNetwork make_mlp(const std::vector<int>& dims, Activation hidden, Activation output,
                    RngState& rng);

struct ForwardTrace {
    Matrix input;
    std::vector<Matrix> pre;   // per layer, batch x out_dim
    std::vector<Matrix> post;  // per layer, batch x out_dim
};

struct ForwardResult {
    Matrix output;
    ForwardTrace trace;
};

ForwardResult forward(const MlpNetwork& net, const Matrix& x);
std::vector<double> forward_vec(const MlpNetwork& net, const std::vector<double>& x);

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    static Gradients zeros_like(const MlpNetwork& net);
    void accumulate(const Gradients& other, double scale = 1.0);
    void scale(double s);
    bool all_finite() const;
};

struct BackwardResult {
    Gradients grads;
    Matrix dx;
};

// Reverse-mode gradients of <dY, Y> w.r.t. parameters and input.
BackwardResult backward(const MlpNetwork& net, const ForwardTrace& trace, const Matrix& dy);

struct JvpResult {
    std::vector<double> y;
    std::vector<double> jv;
};

// Forward-mode tangent propagation: (g(z), J_g(z) v).
JvpResult jvp(const MlpNetwork& net, const std::vector<double>& z, const std::vector<double>& v);

// J^T u via reverse mode.
std::vector<double> vjp(const MlpNetwork& net, const std::vector<double>& x,
                        const std::vector<double>& u);

// Column j = jvp(net, z, e_j). Exact oracle for the stochastic estimators.
Matrix full_jacobian(const MlpNetwork& net, const std::vector<double>& z);

// Batched primal+tangent forward pass; each row carries its own tangent.
struct JvpTrace {
    Matrix input, tangent_in;
    std::vector<Matrix> pre, post;    // primal
    std::vector<Matrix> tpre, tpost;  // tangent
};

struct JvpForwardResult {
    Matrix y;   // batch x out
    Matrix jv;  // batch x out
    JvpTrace trace;
};

JvpForwardResult jvp_forward(const MlpNetwork& net, const Matrix& z, const Matrix& v);

struct JvpBackwardResult {
    Gradients grads;
    Matrix dz;
};

// Reverse pass over the augmented (primal, tangent) computation: gradients of
// <dY, Y> + <dJv, Jv> w.r.t. parameters and the primal input.
JvpBackwardResult jvp_backward(const MlpNetwork& net, const JvpTrace& trace, const Matrix& dy,
                               const Matrix& djv);

} // namespace ijflow
