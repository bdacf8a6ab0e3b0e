#include "ijflow/checkpoint.hpp"

#include "ijflow/linalg.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace ijflow {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are little-endian; byte swapping is not implemented");

void put_u32(std::string& out, std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    out.append(b, 4);
}

void put_doubles(std::string& out, const double* p, size_t count) {
    out.append(reinterpret_cast<const char*>(p), count * sizeof(double));
}

void put_network(std::string& out, const MlpNetwork& net) {
    for (size_t l = 0; l < net.num_layers(); ++l) {
        put_doubles(out, net.weights[l].data.data(), net.weights[l].data.size());
        put_doubles(out, net.biases[l].data(), net.biases[l].size());
    }
}

ordered_json layers_to_json(const MlpNetwork& net) {
    ordered_json arr = ordered_json::array();
    for (const auto& l : net.layers) {
        ordered_json spec;
        spec["in"] = l.in_dim;
        spec["out"] = l.out_dim;
        spec["act"] = activation_name(l.activation);
        arr.push_back(spec);
    }
    return arr;
}

MlpNetwork layers_from_json(const json& arr) {
    MlpNetwork net;
    for (const auto& spec : arr) {
        LayerSpec l;
        l.in_dim = spec.at("in").get<int>();
        l.out_dim = spec.at("out").get<int>();
        l.activation = activation_from_name(spec.at("act").get<std::string>());
        net.layers.push_back(l);
        net.weights.emplace_back(l.out_dim, l.in_dim);
        net.biases.emplace_back(l.out_dim, 0.0);
    }
    return net;
}

struct Reader {
    const std::string& buf;
    size_t pos = 0;

    void take_doubles(double* p, size_t count) {
        const size_t bytes = count * sizeof(double);
        if (pos + bytes > buf.size())
            throw std::runtime_error("checkpoint: truncated parameter blob at byte offset " +
                                     std::to_string(pos));
        std::memcpy(p, buf.data() + pos, bytes);
        pos += bytes;
    }
};

void take_network(Reader& r, MlpNetwork& net) {
    for (size_t l = 0; l < net.num_layers(); ++l) {
        r.take_doubles(net.weights[l].data.data(), net.weights[l].data.size());
        r.take_doubles(net.biases[l].data(), net.biases[l].size());
    }
}

} // namespace

void save_checkpoint(const std::string& path, const Checkpoint& cp) {
    ordered_json header;
    header["format"] = 1;
    header["encoder"] = layers_to_json(cp.encoder);
    header["decoder"] = layers_to_json(cp.decoder);
    header["train_config"] = cp.train_config;
    header["gaussian_prior"] = cp.gaussian_prior.has_value();
    header["gmm_k"] = cp.gmm_prior ? cp.gmm_prior->k : 0;
    header["prior_dim"] = cp.decoder.input_dim();
    const std::string header_str = header.dump();

    std::string out;
    out.reserve(header_str.size() + 1024);
    out.append("IJF1", 4);
    put_u32(out, static_cast<std::uint32_t>(header_str.size()));
    out.append(header_str);
    put_network(out, cp.encoder);
    put_network(out, cp.decoder);
    if (cp.gaussian_prior) {
        const GaussianStats& g = *cp.gaussian_prior;
        put_doubles(out, g.mean.data(), g.mean.size());
        put_doubles(out, g.covariance.data.data(), g.covariance.data.size());
    }
    if (cp.gmm_prior) {
        const GmmModel& m = *cp.gmm_prior;
        put_doubles(out, m.weights.data(), m.weights.size());
        for (const auto& c : m.components) {
            put_doubles(out, c.mean.data(), c.mean.size());
            put_doubles(out, c.covariance.data.data(), c.covariance.data.size());
        }
    }

    const std::filesystem::path target(path);
    const std::filesystem::path tmp = target.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("checkpoint: cannot write " + tmp.string());
        f.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!f) throw std::runtime_error("checkpoint: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 8 || buf.compare(0, 4, "IJF1") != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    std::uint32_t header_len = 0;
    std::memcpy(&header_len, buf.data() + 4, 4);
    if (8 + static_cast<size_t>(header_len) > buf.size())
        throw std::runtime_error("checkpoint: truncated header in " + path);

    json header;
    try {
        header = json::parse(buf.substr(8, header_len));
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("checkpoint: invalid header JSON: ") + e.what());
    }

    Checkpoint cp;
    cp.encoder = layers_from_json(header.at("encoder"));
    cp.decoder = layers_from_json(header.at("decoder"));
    cp.train_config = header.at("train_config");

    Reader r{buf, 8 + static_cast<size_t>(header_len)};
    take_network(r, cp.encoder);
    take_network(r, cp.decoder);

    const int d = cp.decoder.input_dim();
    if (header.at("gaussian_prior").get<bool>()) {
        GaussianStats g;
        g.mean.resize(d);
        g.covariance = Matrix(d, d);
        r.take_doubles(g.mean.data(), g.mean.size());
        r.take_doubles(g.covariance.data.data(), g.covariance.data.size());
        g.chol = cholesky_psd(g.covariance).l;
        cp.gaussian_prior = std::move(g);
    }
    const int gmm_k = header.at("gmm_k").get<int>();
    if (gmm_k > 0) {
        GmmModel m;
        m.k = gmm_k;
        m.weights.resize(gmm_k);
        r.take_doubles(m.weights.data(), m.weights.size());
        for (int c = 0; c < gmm_k; ++c) {
            GaussianStats g;
            g.mean.resize(d);
            g.covariance = Matrix(d, d);
            r.take_doubles(g.mean.data(), g.mean.size());
            r.take_doubles(g.covariance.data.data(), g.covariance.data.size());
            g.chol = cholesky_psd(g.covariance).l;
            m.components.push_back(std::move(g));
        }
        cp.gmm_prior = std::move(m);
    }
    return cp;
}

} // namespace ijflow
