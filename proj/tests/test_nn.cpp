#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ijflow/nn.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace ijflow;
using namespace ijflow::testutil;

namespace {

MlpNetwork random_net(RngState& rng, const std::vector<int>& dims, Activation hidden,
                      Activation output) {
    return make_mlp(dims, hidden, output, rng);
}

std::vector<double> random_vec(RngState& rng, int n) { return gauss_sample(rng, n); }

} // namespace

TEST_CASE("init_mlp: shapes and determinism") {
    RngState a(3), b(3);
    const std::vector<LayerSpec> specs{{2, 3, Activation::Linear}};
    const MlpNetwork n1 = init_mlp(specs, a);
    CHECK(n1.weights[0].rows == 3);
    CHECK(n1.weights[0].cols == 2);
    CHECK(n1.biases[0].size() == 3);
    const MlpNetwork n2 = init_mlp(specs, b);
    CHECK(n1.weights[0].data == n2.weights[0].data);
}

TEST_CASE("init_mlp: rejects non-chaining dims") {
    RngState rng(1);
    CHECK_THROWS_AS(init_mlp({{2, 3, Activation::Elu}, {4, 2, Activation::Linear}}, rng),
                    std::invalid_argument);
}

TEST_CASE("init_mlp: weight variance close to 2/in_dim") {
    RngState rng(5);
    const int in_dim = 100, out_dim = 100; // 1e4 draws
    const MlpNetwork net = init_mlp({{in_dim, out_dim, Activation::Elu}}, rng);
    double mean = 0.0;
    for (double v : net.weights[0].data) mean += v;
    mean /= net.weights[0].data.size();
    double var = 0.0;
    for (double v : net.weights[0].data) var += (v - mean) * (v - mean);
    var /= net.weights[0].data.size();
    CHECK(std::fabs(var - 2.0 / in_dim) < 0.05 * (2.0 / in_dim));
}

TEST_CASE("forward: identity-weight linear net reproduces input") {
    MlpNetwork net = linear_net(Matrix::identity(3));
    Matrix x = Matrix::from_rows({{1.0, -2.0, 0.5}, {0.0, 4.0, -1.0}});
    const ForwardResult r = forward(net, x);
    for (size_t i = 0; i < x.data.size(); ++i) CHECK(r.output.data[i] == x.data[i]);
}

TEST_CASE("forward: ELU and sigmoid reference values") {
    MlpNetwork net = linear_net(Matrix::identity(1));
    net.layers[0].activation = Activation::Elu;
    Matrix x(1, 1);
    x(0, 0) = -1.0;
    CHECK(forward(net, x).output(0, 0) == doctest::Approx(std::exp(-1.0) - 1.0).epsilon(1e-12));
    net.layers[0].activation = Activation::Sigmoid;
    x(0, 0) = 0.0;
    CHECK(forward(net, x).output(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("forward: rejects non-finite input") {
    MlpNetwork net = linear_net(Matrix::identity(2));
    Matrix x(1, 2);
    x(0, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(forward(net, x), std::invalid_argument);
}

TEST_CASE("forward: batch rows equal single-row evaluation exactly") {
    RngState rng(31);
    const MlpNetwork net = random_net(rng, {5, 7, 3}, Activation::Elu, Activation::Sigmoid);
    Matrix x(6, 5);
    for (double& v : x.data) v = rng.gauss();
    const ForwardResult batch = forward(net, x);
    for (int i = 0; i < x.rows; ++i) {
        const std::vector<double> yi = forward_vec(net, x.row(i));
        for (int j = 0; j < 3; ++j) CHECK(batch.output(i, j) == yi[j]);
    }
}

TEST_CASE("backward: linear net with unit cotangent gives outer product") {
    RngState rng(33);
    Matrix w(3, 2);
    for (double& v : w.data) v = rng.gauss();
    MlpNetwork net = linear_net(w);
    Matrix x(1, 2);
    x(0, 0) = 0.7;
    x(0, 1) = -1.2;
    const ForwardResult f = forward(net, x);
    Matrix dy(1, 3);
    dy(0, 0) = 1.0; // e1
    const BackwardResult b = backward(net, f.trace, dy);
    CHECK(b.grads.weights[0](0, 0) == doctest::Approx(0.7));
    CHECK(b.grads.weights[0](0, 1) == doctest::Approx(-1.2));
    CHECK(b.grads.weights[0](1, 0) == 0.0);
    CHECK(b.grads.weights[0](2, 1) == 0.0);
}

TEST_CASE("backward: zero cotangent gives zero gradients") {
    RngState rng(35);
    const MlpNetwork net = random_net(rng, {4, 5, 2}, Activation::Elu, Activation::Linear);
    Matrix x(2, 4);
    for (double& v : x.data) v = rng.gauss();
    const ForwardResult f = forward(net, x);
    const BackwardResult b = backward(net, f.trace, Matrix(2, 2));
    for (const auto& w : b.grads.weights)
        for (double v : w.data) CHECK(v == 0.0);
}

TEST_CASE("backward: mismatched trace rejected") {
    RngState rng(36);
    const MlpNetwork net = random_net(rng, {3, 2}, Activation::Elu, Activation::Linear);
    Matrix x(1, 3);
    const ForwardResult f = forward(net, x);
    CHECK_THROWS_AS(backward(net, f.trace, Matrix(2, 2)), std::invalid_argument);
}

TEST_CASE("backward matches central finite differences for every activation") {
    RngState rng(37);
    const std::vector<std::vector<int>> shapes{{3, 4, 2}, {2, 5, 5, 3}, {4, 3, 3, 2, 2}, {5, 2}};
    const std::vector<Activation> acts{Activation::Elu, Activation::Sigmoid, Activation::Linear};
    for (int trial = 0; trial < 100; ++trial) {
        const auto& dims = shapes[trial % shapes.size()];
        const Activation hidden = acts[trial % acts.size()];
        const Activation out = acts[(trial + 1) % acts.size()];
        MlpNetwork net = random_net(rng, dims, hidden, out);
        Matrix x(1, dims.front());
        for (double& v : x.data) v = rng.gauss();
        Matrix dy(1, dims.back());
        for (double& v : dy.data) v = rng.gauss();

        const ForwardResult f = forward(net, x);
        const BackwardResult analytic = backward(net, f.trace, dy);
        const Gradients numeric = numeric_gradient(net, [&]() {
            const ForwardResult r = forward(net, x);
            double acc = 0.0;
            for (size_t i = 0; i < r.output.data.size(); ++i)
                acc += dy.data[i] * r.output.data[i];
            return acc;
        });
        CHECK(max_gradient_mismatch(analytic.grads, numeric) < 1e-4);
    }
}

TEST_CASE("jvp: linear net applies the matrix") {
    RngState rng(39);
    Matrix a(4, 2);
    for (double& v : a.data) v = rng.gauss();
    const MlpNetwork net = linear_net(a);
    const std::vector<double> z{0.3, -0.8};
    const std::vector<double> v{1.5, 0.25};
    const JvpResult r = jvp(net, z, v);
    const std::vector<double> av = matvec(a, v);
    for (int i = 0; i < 4; ++i) CHECK(r.jv[i] == doctest::Approx(av[i]).epsilon(1e-14));
}

TEST_CASE("jvp: matches central differences") {
    RngState rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const MlpNetwork net = random_net(rng, {3, 6, 4}, Activation::Elu, Activation::Linear);
        const std::vector<double> z = random_vec(rng, 3);
        const std::vector<double> v = random_vec(rng, 3);
        const JvpResult r = jvp(net, z, v);
        const double eps = 1e-5;
        std::vector<double> zp = z, zm = z;
        for (int j = 0; j < 3; ++j) {
            zp[j] += eps * v[j];
            zm[j] -= eps * v[j];
        }
        const std::vector<double> yp = forward_vec(net, zp);
        const std::vector<double> ym = forward_vec(net, zm);
        for (int i = 0; i < 4; ++i)
            CHECK(std::fabs(r.jv[i] - (yp[i] - ym[i]) / (2.0 * eps)) < 1e-5);
    }
}

TEST_CASE("jvp: zero tangent stays zero, and jvp is linear in v") {
    RngState rng(43);
    const MlpNetwork net = random_net(rng, {4, 5, 3}, Activation::Sigmoid, Activation::Linear);
    const std::vector<double> z = random_vec(rng, 4);
    const JvpResult zero = jvp(net, z, std::vector<double>(4, 0.0));
    for (double t : zero.jv) CHECK(t == 0.0);

    for (int trial = 0; trial < 20; ++trial) {
        const std::vector<double> v1 = random_vec(rng, 4);
        const std::vector<double> v2 = random_vec(rng, 4);
        const double a = rng.gauss(), b = rng.gauss();
        std::vector<double> combo(4);
        for (int j = 0; j < 4; ++j) combo[j] = a * v1[j] + b * v2[j];
        const JvpResult rc = jvp(net, z, combo);
        const JvpResult r1 = jvp(net, z, v1);
        const JvpResult r2 = jvp(net, z, v2);
        for (int i = 0; i < 3; ++i)
            CHECK(std::fabs(rc.jv[i] - (a * r1.jv[i] + b * r2.jv[i])) < 1e-10);
    }
}

TEST_CASE("vjp: linear net applies the transpose") {
    RngState rng(45);
    Matrix a(4, 2);
    for (double& v : a.data) v = rng.gauss();
    const MlpNetwork net = linear_net(a);
    const std::vector<double> x{0.2, 0.9};
    const std::vector<double> u{1.0, -2.0, 0.5, 0.0};
    const std::vector<double> jtu = vjp(net, x, u);
    const std::vector<double> expected = matvec_t(a, u);
    for (int j = 0; j < 2; ++j) CHECK(jtu[j] == doctest::Approx(expected[j]).epsilon(1e-14));
}

TEST_CASE("vjp: zero cotangent gives zero") {
    RngState rng(47);
    const MlpNetwork net = random_net(rng, {3, 4, 2}, Activation::Elu, Activation::Sigmoid);
    const std::vector<double> jtu = vjp(net, random_vec(rng, 3), std::vector<double>(2, 0.0));
    for (double v : jtu) CHECK(v == 0.0);
}

TEST_CASE("adjoint identity <u, Jv> = <J^T u, v> on 100 random triples") {
    RngState rng(49);
    for (int trial = 0; trial < 100; ++trial) {
        const MlpNetwork net = random_net(rng, {4, 6, 5}, Activation::Elu, Activation::Linear);
        const std::vector<double> z = random_vec(rng, 4);
        const std::vector<double> v = random_vec(rng, 4);
        const std::vector<double> u = random_vec(rng, 5);
        const JvpResult jr = jvp(net, z, v);
        const std::vector<double> jtu = vjp(net, z, u);
        CHECK(std::fabs(dot(u, jr.jv) - dot(jtu, v)) < 1e-10);
    }
}

TEST_CASE("full_jacobian: linear net returns its matrix") {
    RngState rng(51);
    Matrix a(5, 3);
    for (double& v : a.data) v = rng.gauss();
    const MlpNetwork net = linear_net(a);
    const Matrix j = full_jacobian(net, {0.1, 0.2, 0.3});
    for (size_t i = 0; i < a.data.size(); ++i)
        CHECK(j.data[i] == doctest::Approx(a.data[i]).epsilon(1e-14));
}

TEST_CASE("full_jacobian: matches entrywise central differences") {
    RngState rng(53);
    const MlpNetwork net = random_net(rng, {3, 7, 5}, Activation::Elu, Activation::Sigmoid);
    const std::vector<double> z = random_vec(rng, 3);
    const Matrix j = full_jacobian(net, z);
    const double eps = 1e-5;
    for (int col = 0; col < 3; ++col) {
        std::vector<double> zp = z, zm = z;
        zp[col] += eps;
        zm[col] -= eps;
        const std::vector<double> yp = forward_vec(net, zp);
        const std::vector<double> ym = forward_vec(net, zm);
        for (int row = 0; row < 5; ++row)
            CHECK(std::fabs(j(row, col) - (yp[row] - ym[row]) / (2.0 * eps)) < 1e-5);
    }
}

TEST_CASE("full_jacobian: Frobenius norm equals sum over basis tangents") {
    RngState rng(55);
    const MlpNetwork net = random_net(rng, {4, 6, 6}, Activation::Elu, Activation::Linear);
    const std::vector<double> z = random_vec(rng, 4);
    const Matrix j = full_jacobian(net, z);
    double frob_sq = 0.0;
    for (double v : j.data) frob_sq += v * v;
    double sum = 0.0;
    std::vector<double> e(4, 0.0);
    for (int col = 0; col < 4; ++col) {
        e[col] = 1.0;
        sum += sqnorm(jvp(net, z, e).jv);
        e[col] = 0.0;
    }
    CHECK(frob_sq == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("jvp_forward/jvp_backward: batch gradients of <dY,Y> + <dJv,Jv> match FD") {
    RngState rng(57);
    for (int trial = 0; trial < 10; ++trial) {
        MlpNetwork net = random_net(rng, {2, 5, 4}, Activation::Elu,
                                    trial % 2 ? Activation::Sigmoid : Activation::Linear);
        Matrix z(3, 2), v(3, 2), dy(3, 4), djv(3, 4);
        for (double& x : z.data) x = rng.gauss();
        for (double& x : v.data) x = rng.gauss();
        for (double& x : dy.data) x = rng.gauss();
        for (double& x : djv.data) x = rng.gauss();

        const JvpForwardResult f = jvp_forward(net, z, v);
        const JvpBackwardResult analytic = jvp_backward(net, f.trace, dy, djv);
        const Gradients numeric = numeric_gradient(net, [&]() {
            const JvpForwardResult r = jvp_forward(net, z, v);
            double acc = 0.0;
            for (size_t i = 0; i < r.y.data.size(); ++i)
                acc += dy.data[i] * r.y.data[i] + djv.data[i] * r.jv.data[i];
            return acc;
        });
        CHECK(max_gradient_mismatch(analytic.grads, numeric) < 1e-4);

        // gradient w.r.t. the primal input, same scalar
        for (int i = 0; i < z.rows; ++i)
            for (int j = 0; j < z.cols; ++j) {
                const double saved = z(i, j);
                const double step = 1e-5;
                z(i, j) = saved + step;
                const JvpForwardResult hi = jvp_forward(net, z, v);
                z(i, j) = saved - step;
                const JvpForwardResult lo = jvp_forward(net, z, v);
                z(i, j) = saved;
                double dhi = 0.0, dlo = 0.0;
                for (size_t t = 0; t < hi.y.data.size(); ++t) {
                    dhi += dy.data[t] * hi.y.data[t] + djv.data[t] * hi.jv.data[t];
                    dlo += dy.data[t] * lo.y.data[t] + djv.data[t] * lo.jv.data[t];
                }
                const double fd = (dhi - dlo) / (2.0 * step);
                CHECK(rel_close(analytic.dz(i, j), fd, 1e-4));
            }
    }
}

TEST_CASE("jvp_forward rows match single-example jvp exactly") {
    RngState rng(59);
    const MlpNetwork net = random_net(rng, {3, 8, 5}, Activation::Elu, Activation::Sigmoid);
    Matrix z(4, 3), v(4, 3);
    for (double& x : z.data) x = rng.gauss();
    for (double& x : v.data) x = rng.gauss();
    const JvpForwardResult batch = jvp_forward(net, z, v);
    for (int i = 0; i < 4; ++i) {
        const JvpResult single = jvp(net, z.row(i), v.row(i));
        for (int j = 0; j < 5; ++j) {
            CHECK(batch.y(i, j) == single.y[j]);
            CHECK(batch.jv(i, j) == single.jv[j]);
        }
    }
}
