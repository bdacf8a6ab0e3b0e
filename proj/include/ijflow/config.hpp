#pragma once

#include "ijflow/baselines.hpp"
#include "ijflow/data.hpp"
#include "ijflow/flow_objective.hpp"

#include <stdexcept>
#include <string>
#include <vector>

// vendored single-header nlohmann/json
#include "json.hpp"

namespace ijflow {

// Configuration / usage errors map to CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Objective { InjFlowLn, InjFlow, Ae, AeL2, Cae, BetaVae };

std::string objective_name(Objective o);
Objective objective_from_name(const std::string& s);
bool objective_is_flow(Objective o);

struct DatasetSpec {
    std::string kind = "linear"; // linear | circle | mnist | csv
    std::uint64_t seed = 0;      // generator / subset-shuffle seed
    int n = 4096;
    int dim = 8;        // ambient D (linear/circle)
    int latent = 2;     // manifold d (linear)
    double scale = 1.0;
    double noise_std = 0.0;
    double radius = 1.0;
    std::string images_path;  // mnist
    std::string labels_path;  // mnist, optional
    std::string csv_path;     // csv
    std::string meta_path;    // csv sidecar, optional
};

Dataset build_dataset(const DatasetSpec& spec);

struct TrainConfig {
    Objective objective = Objective::InjFlowLn;
    std::uint64_t seed = 0;
    double learning_rate = 1e-3;
    int batch_size = 128;
    long total_iters = 5000;
    int latent_dim = 16;
    std::vector<int> encoder_hidden{256, 128};
    std::vector<int> decoder_hidden{128, 256};
    std::string decoder_output = "auto"; // auto | sigmoid | linear
    FlowObjectiveConfig flow;
    BaselineConfig baseline;
    DatasetSpec dataset;
    std::string checkpoint_path;
    std::string metrics_path;
    long log_every = 100;

    void validate() const;
};

// Strict-schema parse: unknown keys are fatal and named in the error.
TrainConfig parse_train_config(const nlohmann::json& doc);
TrainConfig load_train_config(const std::string& path);

// Normalized echo with every field populated; deterministic key order.
nlohmann::ordered_json train_config_to_json(const TrainConfig& cfg);

nlohmann::ordered_json dataset_spec_to_json(const DatasetSpec& spec);
DatasetSpec parse_dataset_spec(const nlohmann::json& doc);

} // namespace ijflow
