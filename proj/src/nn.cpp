#include "ijflow/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace ijflow {

namespace {

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double act_apply(Activation a, double x) {
    switch (a) {
        case Activation::Elu: return x > 0.0 ? x : std::expm1(x);
        case Activation::Sigmoid: return sigmoid(x);
        case Activation::Linear: return x;
    }
    return x;
}

// ELU derivative at exactly 0 is 1 (left/right limits agree).
inline double act_deriv(Activation a, double x) {
    switch (a) {
        case Activation::Elu: return x >= 0.0 ? 1.0 : std::exp(x);
        case Activation::Sigmoid: {
            const double s = sigmoid(x);
            return s * (1.0 - s);
        }
        case Activation::Linear: return 1.0;
    }
    return 1.0;
}

inline double act_second_deriv(Activation a, double x) {
    switch (a) {
        case Activation::Elu: return x >= 0.0 ? 0.0 : std::exp(x);
        case Activation::Sigmoid: {
            const double s = sigmoid(x);
            return s * (1.0 - s) * (1.0 - 2.0 * s);
        }
        case Activation::Linear: return 0.0;
    }
    return 0.0;
}

void check_specs(const std::vector<LayerSpec>& specs) {
    if (specs.empty()) throw std::invalid_argument("mlp: no layers");
    for (size_t i = 0; i < specs.size(); ++i) {
        if (specs[i].in_dim < 1 || specs[i].out_dim < 1)
            throw std::invalid_argument("mlp: layer dims must be >= 1");
        if (i > 0 && specs[i].in_dim != specs[i - 1].out_dim)
            throw std::invalid_argument("mlp: layer dims do not chain");
    }
}

Matrix add_bias_rows(Matrix m, const std::vector<double>& b) {
    for (int i = 0; i < m.rows; ++i) {
        double* r = m.row_ptr(i);
        for (int j = 0; j < m.cols; ++j) r[j] += b[j];
    }
    return m;
}

Matrix apply_elementwise(Activation a, const Matrix& m, double (*f)(Activation, double)) {
    Matrix out(m.rows, m.cols);
    for (size_t i = 0; i < m.data.size(); ++i) out.data[i] = f(a, m.data[i]);
    return out;
}

std::vector<double> colsum(const Matrix& m) {
    std::vector<double> s(m.cols, 0.0);
    for (int i = 0; i < m.rows; ++i) {
        const double* r = m.row_ptr(i);
        for (int j = 0; j < m.cols; ++j) s[j] += r[j];
    }
    return s;
}

} // namespace

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::Elu: return "elu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Linear: return "linear";
    }
    return "linear";
}

Activation activation_from_name(const std::string& name) {
    if (name == "elu") return Activation::Elu;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "linear") return Activation::Linear;
    throw std::invalid_argument("unknown activation: " + name);
}

size_t MlpNetwork::param_count() const {
    size_t n = 0;
    for (const auto& l : layers)
        n += static_cast<size_t>(l.in_dim) * l.out_dim + l.out_dim;
    return n;
}

MlpNetwork init_mlp(const std::vector<LayerSpec>& specs, RngState& rng) {
    check_specs(specs);
    MlpNetwork net;
    net.layers = specs;
    for (const auto& l : specs) {
        Matrix w(l.out_dim, l.in_dim);
        const double std = std::sqrt(2.0 / l.in_dim);
        for (double& v : w.data) v = std * rng.gauss();
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(l.out_dim, 0.0);
    }
    return net;
}

MlpNetwork make_mlp(const std::vector<int>& dims, Activation hidden, Activation output,
                    RngState& rng) {
    if (dims.size() < 2) throw std::invalid_argument("make_mlp: need at least in and out dims");
    std::vector<LayerSpec> specs;
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        const bool last = (i + 2 == dims.size());
        specs.push_back({dims[i], dims[i + 1], last ? output : hidden});
    }
    return init_mlp(specs, rng);
}

ForwardResult forward(const MlpNetwork& net, const Matrix& x) {
    if (x.cols != net.input_dim()) throw std::invalid_argument("forward: input dim mismatch");
    if (!x.all_finite()) throw std::invalid_argument("forward: non-finite input");
    ForwardResult r;
    r.trace.input = x;
    Matrix a = x;
    for (size_t l = 0; l < net.num_layers(); ++l) {
        Matrix pre = add_bias_rows(matmul(a, transpose(net.weights[l])), net.biases[l]);
        Matrix post = apply_elementwise(net.layers[l].activation, pre, act_apply);
        r.trace.pre.push_back(std::move(pre));
        a = post;
        r.trace.post.push_back(std::move(post));
    }
    r.output = r.trace.post.back();
    return r;
}

std::vector<double> forward_vec(const MlpNetwork& net, const std::vector<double>& x) {
    std::vector<double> a = x;
    for (size_t l = 0; l < net.num_layers(); ++l) {
        std::vector<double> pre = matvec(net.weights[l], a);
        const Activation act = net.layers[l].activation;
        for (size_t j = 0; j < pre.size(); ++j) pre[j] = act_apply(act, pre[j] + net.biases[l][j]);
        a = std::move(pre);
    }
    return a;
}

Gradients Gradients::zeros_like(const MlpNetwork& net) {
    Gradients g;
    for (size_t l = 0; l < net.num_layers(); ++l) {
        g.weights.emplace_back(net.weights[l].rows, net.weights[l].cols);
        g.biases.emplace_back(net.biases[l].size(), 0.0);
    }
    return g;
}

void Gradients::accumulate(const Gradients& other, double s) {
    for (size_t l = 0; l < weights.size(); ++l) {
        for (size_t i = 0; i < weights[l].data.size(); ++i)
            weights[l].data[i] += s * other.weights[l].data[i];
        for (size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += s * other.biases[l][i];
    }
}

void Gradients::scale(double s) {
    for (auto& w : weights)
        for (double& v : w.data) v *= s;
    for (auto& b : biases)
        for (double& v : b) v *= s;
}

bool Gradients::all_finite() const {
    for (const auto& w : weights)
        if (!w.all_finite()) return false;
    for (const auto& b : biases)
        for (double v : b)
            if (!std::isfinite(v)) return false;
    return true;
}

BackwardResult backward(const MlpNetwork& net, const ForwardTrace& trace, const Matrix& dy) {
    const size_t nl = net.num_layers();
    if (trace.pre.size() != nl || trace.post.size() != nl)
        throw std::invalid_argument("backward: trace/net mismatch");
    if (dy.rows != trace.post.back().rows || dy.cols != trace.post.back().cols)
        throw std::invalid_argument("backward: dY shape mismatch");

    BackwardResult r;
    r.grads = Gradients::zeros_like(net);
    Matrix dpost = dy;
    for (size_t li = nl; li-- > 0;) {
        const Activation act = net.layers[li].activation;
        const Matrix& pre = trace.pre[li];
        Matrix dpre(dpost.rows, dpost.cols);
        for (size_t i = 0; i < dpre.data.size(); ++i)
            dpre.data[i] = dpost.data[i] * act_deriv(act, pre.data[i]);
        const Matrix& a_prev = (li == 0) ? trace.input : trace.post[li - 1];
        r.grads.weights[li] = matmul(transpose(dpre), a_prev);
        r.grads.biases[li] = colsum(dpre);
        dpost = matmul(dpre, net.weights[li]);
    }
    r.dx = std::move(dpost);
    return r;
}

JvpResult jvp(const MlpNetwork& net, const std::vector<double>& z, const std::vector<double>& v) {
    if (static_cast<int>(z.size()) != net.input_dim() || z.size() != v.size())
        throw std::invalid_argument("jvp: dim mismatch");
    std::vector<double> a = z, t = v;
    for (size_t l = 0; l < net.num_layers(); ++l) {
        std::vector<double> s = matvec(net.weights[l], a);
        std::vector<double> ts = matvec(net.weights[l], t);
        const Activation act = net.layers[l].activation;
        for (size_t j = 0; j < s.size(); ++j) {
            const double pre = s[j] + net.biases[l][j];
            s[j] = act_apply(act, pre);
            ts[j] = act_deriv(act, pre) * ts[j];
        }
        a = std::move(s);
        t = std::move(ts);
    }
    for (double x : a)
        if (!std::isfinite(x)) throw std::runtime_error("jvp: non-finite primal output");
    for (double x : t)
        if (!std::isfinite(x)) throw std::runtime_error("jvp: non-finite tangent output");
    return {std::move(a), std::move(t)};
}

std::vector<double> vjp(const MlpNetwork& net, const std::vector<double>& x,
                        const std::vector<double>& u) {
    if (static_cast<int>(u.size()) != net.output_dim())
        throw std::invalid_argument("vjp: cotangent dim mismatch");
    Matrix xrow(1, static_cast<int>(x.size()));
    xrow.set_row(0, x);
    ForwardResult f = forward(net, xrow);
    Matrix urow(1, static_cast<int>(u.size()));
    urow.set_row(0, u);
    return backward(net, f.trace, urow).dx.row(0);
}

Matrix full_jacobian(const MlpNetwork& net, const std::vector<double>& z) {
    const int d = net.input_dim();
    const int out = net.output_dim();
    Matrix j(out, d);
    std::vector<double> e(d, 0.0);
    for (int col = 0; col < d; ++col) {
        e[col] = 1.0;
        JvpResult r = jvp(net, z, e);
        for (int i = 0; i < out; ++i) j(i, col) = r.jv[i];
        e[col] = 0.0;
    }
    return j;
}

JvpForwardResult jvp_forward(const MlpNetwork& net, const Matrix& z, const Matrix& v) {
    if (z.cols != net.input_dim() || v.cols != z.cols || v.rows != z.rows)
        throw std::invalid_argument("jvp_forward: shape mismatch");
    JvpForwardResult r;
    r.trace.input = z;
    r.trace.tangent_in = v;
    Matrix a = z, t = v;
    for (size_t l = 0; l < net.num_layers(); ++l) {
        const Matrix wt = transpose(net.weights[l]);
        Matrix pre = add_bias_rows(matmul(a, wt), net.biases[l]);
        Matrix tpre = matmul(t, wt);
        const Activation act = net.layers[l].activation;
        Matrix post(pre.rows, pre.cols), tpost(pre.rows, pre.cols);
        for (size_t i = 0; i < pre.data.size(); ++i) {
            post.data[i] = act_apply(act, pre.data[i]);
            tpost.data[i] = act_deriv(act, pre.data[i]) * tpre.data[i];
        }
        a = post;
        t = tpost;
        r.trace.pre.push_back(std::move(pre));
        r.trace.post.push_back(std::move(post));
        r.trace.tpre.push_back(std::move(tpre));
        r.trace.tpost.push_back(std::move(tpost));
    }
    r.y = a;
    r.jv = t;
    return r;
}

JvpBackwardResult jvp_backward(const MlpNetwork& net, const JvpTrace& trace, const Matrix& dy,
                               const Matrix& djv) {
    const size_t nl = net.num_layers();
    if (trace.pre.size() != nl) throw std::invalid_argument("jvp_backward: trace/net mismatch");

    JvpBackwardResult r;
    r.grads = Gradients::zeros_like(net);
    Matrix dpost = dy;
    Matrix dtpost = djv;
    for (size_t li = nl; li-- > 0;) {
        const Activation act = net.layers[li].activation;
        const Matrix& pre = trace.pre[li];
        const Matrix& tpre = trace.tpre[li];
        Matrix dpre(dpost.rows, dpost.cols), dtpre(dpost.rows, dpost.cols);
        for (size_t i = 0; i < dpre.data.size(); ++i) {
            const double d1 = act_deriv(act, pre.data[i]);
            const double d2 = act_second_deriv(act, pre.data[i]);
            dpre.data[i] = dpost.data[i] * d1 + dtpost.data[i] * d2 * tpre.data[i];
            dtpre.data[i] = dtpost.data[i] * d1;
        }
        const Matrix& a_prev = (li == 0) ? trace.input : trace.post[li - 1];
        const Matrix& t_prev = (li == 0) ? trace.tangent_in : trace.tpost[li - 1];
        r.grads.weights[li] = matmul(transpose(dpre), a_prev);
        Matrix wt = matmul(transpose(dtpre), t_prev);
        for (size_t i = 0; i < wt.data.size(); ++i) r.grads.weights[li].data[i] += wt.data[i];
        r.grads.biases[li] = colsum(dpre);
        dpost = matmul(dpre, net.weights[li]);
        dtpost = matmul(dtpre, net.weights[li]);
    }
    r.dz = std::move(dpost);
    return r;
}

} // namespace ijflow
