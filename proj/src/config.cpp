#include "ijflow/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

namespace ijflow {

using nlohmann::json;
using nlohmann::ordered_json;

std::string objective_name(Objective o) {
    switch (o) {
        case Objective::InjFlowLn: return "injflow_ln";
        case Objective::InjFlow: return "injflow";
        case Objective::Ae: return "ae";
        case Objective::AeL2: return "ae_l2";
        case Objective::Cae: return "cae";
        case Objective::BetaVae: return "beta_vae";
    }
    return "injflow_ln";
}

Objective objective_from_name(const std::string& s) {
    if (s == "injflow_ln") return Objective::InjFlowLn;
    if (s == "injflow") return Objective::InjFlow;
    if (s == "ae") return Objective::Ae;
    if (s == "ae_l2") return Objective::AeL2;
    if (s == "cae") return Objective::Cae;
    if (s == "beta_vae") return Objective::BetaVae;
    throw ConfigError("unknown objective: " + s);
}

bool objective_is_flow(Objective o) {
    return o == Objective::InjFlowLn || o == Objective::InjFlow;
}

namespace {

void reject_unknown_keys(const json& doc, const std::set<std::string>& allowed,
                         const std::string& where) {
    std::string bad;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (!allowed.count(it.key())) {
            if (!bad.empty()) bad += ", ";
            bad += "\"" + it.key() + "\"";
        }
    }
    if (!bad.empty())
        throw ConfigError("unknown config key(s) in " + where + ": " + bad);
}

template <typename T>
T get_or(const json& doc, const char* key, T fallback) {
    if (!doc.contains(key)) return fallback;
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key \"") + key + "\" has the wrong type");
    }
}

} // namespace

DatasetSpec parse_dataset_spec(const json& doc) {
    if (!doc.is_object()) throw ConfigError("dataset spec must be a JSON object");
    reject_unknown_keys(doc,
                        {"kind", "seed", "n", "D", "d", "scale", "noise_std", "radius", "images",
                         "labels", "path", "meta"},
                        "dataset");
    DatasetSpec spec;
    spec.kind = get_or<std::string>(doc, "kind", spec.kind);
    if (spec.kind != "linear" && spec.kind != "circle" && spec.kind != "mnist" &&
        spec.kind != "csv")
        throw ConfigError("dataset kind must be linear, circle, mnist, or csv; got \"" +
                          spec.kind + "\"");
    spec.seed = get_or<std::uint64_t>(doc, "seed", spec.seed);
    spec.n = get_or<int>(doc, "n", spec.n);
    spec.dim = get_or<int>(doc, "D", spec.dim);
    spec.latent = get_or<int>(doc, "d", spec.latent);
    spec.scale = get_or<double>(doc, "scale", spec.scale);
    spec.noise_std = get_or<double>(doc, "noise_std", spec.noise_std);
    spec.radius = get_or<double>(doc, "radius", spec.radius);
    spec.images_path = get_or<std::string>(doc, "images", spec.images_path);
    spec.labels_path = get_or<std::string>(doc, "labels", spec.labels_path);
    spec.csv_path = get_or<std::string>(doc, "path", spec.csv_path);
    spec.meta_path = get_or<std::string>(doc, "meta", spec.meta_path);
    return spec;
}

ordered_json dataset_spec_to_json(const DatasetSpec& spec) {
    ordered_json j;
    j["kind"] = spec.kind;
    j["seed"] = spec.seed;
    if (spec.kind == "linear" || spec.kind == "circle") {
        j["n"] = spec.n;
        j["D"] = spec.dim;
        if (spec.kind == "linear") {
            j["d"] = spec.latent;
            j["scale"] = spec.scale;
        } else {
            j["radius"] = spec.radius;
        }
        j["noise_std"] = spec.noise_std;
    } else if (spec.kind == "mnist") {
        j["images"] = spec.images_path;
        if (!spec.labels_path.empty()) j["labels"] = spec.labels_path;
        j["n"] = spec.n;
    } else {
        j["path"] = spec.csv_path;
        if (!spec.meta_path.empty()) j["meta"] = spec.meta_path;
    }
    return j;
}

Dataset build_dataset(const DatasetSpec& spec) {
    if (spec.kind == "linear") {
        RngState rng(spec.seed);
        return gen_linear_manifold(rng, spec.n, spec.dim, spec.latent, spec.scale,
                                   spec.noise_std);
    }
    if (spec.kind == "circle") {
        RngState rng(spec.seed);
        return gen_circle_manifold(rng, spec.n, spec.dim, spec.radius, spec.noise_std);
    }
    if (spec.kind == "mnist") {
        if (spec.images_path.empty()) throw ConfigError("mnist dataset needs \"images\"");
        std::optional<std::string> labels;
        if (!spec.labels_path.empty()) labels = spec.labels_path;
        Dataset full = load_mnist_idx(spec.images_path, labels);
        if (spec.n > 0 && spec.n < full.n()) {
            // subset = first n after a seeded shuffle
            RngState rng(spec.seed);
            std::vector<int> perm(full.n());
            for (int i = 0; i < full.n(); ++i) perm[i] = i;
            for (int i = full.n() - 1; i > 0; --i) {
                const int j = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(i) + 1));
                std::swap(perm[i], perm[j]);
            }
            Dataset sub;
            sub.name = full.name;
            sub.image_rows = full.image_rows;
            sub.image_cols = full.image_cols;
            sub.x = Matrix(spec.n, full.dim());
            if (full.labels) sub.labels = std::vector<std::uint8_t>(spec.n);
            for (int i = 0; i < spec.n; ++i) {
                for (int j = 0; j < full.dim(); ++j) sub.x(i, j) = full.x(perm[i], j);
                if (full.labels) (*sub.labels)[i] = (*full.labels)[perm[i]];
            }
            return sub;
        }
        return full;
    }
    if (spec.kind == "csv") {
        if (spec.csv_path.empty()) throw ConfigError("csv dataset needs \"path\"");
        Dataset ds;
        ds.name = "csv";
        ds.x = load_dataset_csv(spec.csv_path);
        std::string meta = spec.meta_path;
        if (meta.empty()) {
            const std::string candidate =
                std::filesystem::path(spec.csv_path).replace_extension(".meta.json").string();
            if (std::filesystem::exists(candidate)) meta = candidate;
        }
        if (!meta.empty()) {
            std::ifstream in(meta);
            if (!in) throw ConfigError("cannot open dataset meta file " + meta);
            json j = json::parse(in);
            if (j.contains("A")) {
                std::vector<std::vector<double>> rows =
                    j.at("A").get<std::vector<std::vector<double>>>();
                ds.ground_truth = Matrix::from_rows(rows);
                ds.name = get_or<std::string>(j, "kind", ds.name);
            }
        }
        return ds;
    }
    throw ConfigError("unknown dataset kind: " + spec.kind);
}

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (total_iters < 0) throw ConfigError("total_iters must be >= 0");
    if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
    if (log_every < 1) throw ConfigError("log_every must be >= 1");
    for (int h : encoder_hidden)
        if (h < 1) throw ConfigError("encoder_hidden entries must be >= 1");
    for (int h : decoder_hidden)
        if (h < 1) throw ConfigError("decoder_hidden entries must be >= 1");
    if (decoder_output != "auto" && decoder_output != "sigmoid" && decoder_output != "linear")
        throw ConfigError("decoder_output must be auto, sigmoid, or linear");
    try {
        flow.validate();
        baseline.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

TrainConfig parse_train_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("train config must be a JSON object");
    reject_unknown_keys(doc,
                        {"objective", "seed", "learning_rate", "batch_size", "total_iters",
                         "latent_dim", "encoder_hidden", "decoder_hidden", "decoder_output",
                         "flow", "baseline", "dataset", "checkpoint_path", "metrics_path",
                         "log_every"},
                        "train config");
    TrainConfig cfg;
    cfg.objective = objective_from_name(get_or<std::string>(doc, "objective", "injflow_ln"));
    cfg.seed = get_or<std::uint64_t>(doc, "seed", cfg.seed);
    cfg.learning_rate = get_or<double>(doc, "learning_rate", cfg.learning_rate);
    cfg.batch_size = get_or<int>(doc, "batch_size", cfg.batch_size);
    cfg.total_iters = get_or<long>(doc, "total_iters", cfg.total_iters);
    cfg.latent_dim = get_or<int>(doc, "latent_dim", cfg.latent_dim);
    cfg.encoder_hidden = get_or<std::vector<int>>(doc, "encoder_hidden", cfg.encoder_hidden);
    cfg.decoder_hidden = get_or<std::vector<int>>(doc, "decoder_hidden", cfg.decoder_hidden);
    cfg.decoder_output = get_or<std::string>(doc, "decoder_output", cfg.decoder_output);
    cfg.checkpoint_path = get_or<std::string>(doc, "checkpoint_path", cfg.checkpoint_path);
    cfg.metrics_path = get_or<std::string>(doc, "metrics_path", cfg.metrics_path);
    cfg.log_every = get_or<long>(doc, "log_every", cfg.log_every);

    if (doc.contains("flow")) {
        const json& f = doc.at("flow");
        reject_unknown_keys(f,
                            {"w_prior", "lambda_fixed", "eta", "nu", "mu0", "mu_in0",
                             "mc_samples", "estimator", "fd_epsilon"},
                            "flow");
        cfg.flow.w_prior = get_or<double>(f, "w_prior", cfg.flow.w_prior);
        cfg.flow.lambda_fixed = get_or<double>(f, "lambda_fixed", cfg.flow.lambda_fixed);
        cfg.flow.eta = get_or<double>(f, "eta", cfg.flow.eta);
        cfg.flow.nu = get_or<double>(f, "nu", cfg.flow.nu);
        cfg.flow.mu0 = get_or<double>(f, "mu0", cfg.flow.mu0);
        cfg.flow.mu_in0 = get_or<double>(f, "mu_in0", cfg.flow.mu_in0);
        cfg.flow.mc_samples = get_or<int>(f, "mc_samples", cfg.flow.mc_samples);
        try {
            cfg.flow.estimator =
                estimator_from_name(get_or<std::string>(f, "estimator", "autodiff_jvp"));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        cfg.flow.fd_epsilon = get_or<double>(f, "fd_epsilon", cfg.flow.fd_epsilon);
    }
    cfg.flow.variant =
        (cfg.objective == Objective::InjFlow) ? FlowVariant::InjFlow : FlowVariant::InjFlowLn;

    if (doc.contains("baseline")) {
        const json& b = doc.at("baseline");
        reject_unknown_keys(b, {"l2_weight", "cae_weight", "vae_sigma"}, "baseline");
        cfg.baseline.l2_weight = get_or<double>(b, "l2_weight", cfg.baseline.l2_weight);
        cfg.baseline.cae_weight = get_or<double>(b, "cae_weight", cfg.baseline.cae_weight);
        cfg.baseline.vae_sigma = get_or<double>(b, "vae_sigma", cfg.baseline.vae_sigma);
    }
    switch (cfg.objective) {
        case Objective::Ae: cfg.baseline.kind = BaselineKind::Ae; break;
        case Objective::AeL2: cfg.baseline.kind = BaselineKind::AeL2; break;
        case Objective::Cae: cfg.baseline.kind = BaselineKind::Cae; break;
        case Objective::BetaVae: cfg.baseline.kind = BaselineKind::BetaVae; break;
        default: break;
    }

    if (doc.contains("dataset")) cfg.dataset = parse_dataset_spec(doc.at("dataset"));
    cfg.validate();
    return cfg;
}

TrainConfig load_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_train_config(doc);
}

ordered_json train_config_to_json(const TrainConfig& cfg) {
    ordered_json j;
    j["objective"] = objective_name(cfg.objective);
    j["seed"] = cfg.seed;
    j["learning_rate"] = cfg.learning_rate;
    j["batch_size"] = cfg.batch_size;
    j["total_iters"] = cfg.total_iters;
    j["latent_dim"] = cfg.latent_dim;
    j["encoder_hidden"] = cfg.encoder_hidden;
    j["decoder_hidden"] = cfg.decoder_hidden;
    j["decoder_output"] = cfg.decoder_output;
    ordered_json f;
    f["w_prior"] = cfg.flow.w_prior;
    f["lambda_fixed"] = cfg.flow.lambda_fixed;
    f["eta"] = cfg.flow.eta;
    f["nu"] = cfg.flow.nu;
    f["mu0"] = cfg.flow.mu0;
    f["mu_in0"] = cfg.flow.mu_in0;
    f["mc_samples"] = cfg.flow.mc_samples;
    f["estimator"] = estimator_name(cfg.flow.estimator);
    f["fd_epsilon"] = cfg.flow.fd_epsilon;
    j["flow"] = f;
    ordered_json b;
    b["l2_weight"] = cfg.baseline.l2_weight;
    b["cae_weight"] = cfg.baseline.cae_weight;
    b["vae_sigma"] = cfg.baseline.vae_sigma;
    j["baseline"] = b;
    j["dataset"] = dataset_spec_to_json(cfg.dataset);
    j["checkpoint_path"] = cfg.checkpoint_path;
    j["metrics_path"] = cfg.metrics_path;
    j["log_every"] = cfg.log_every;
    return j;
}

} // namespace ijflow
