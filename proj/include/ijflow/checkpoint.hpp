#pragma once

#include "ijflow/config.hpp"
#include "ijflow/prior_fit.hpp"

#include <optional>
#include <string>

namespace ijflow {

// Container: magic "IJF1", u32-LE length-prefixed UTF-8 JSON header, then
// little-endian f64 parameter blobs in declared layer order (weights
// row-major, then bias, encoder first), then optional prior blobs.
struct Checkpoint {
    MlpNetwork encoder;
    MlpNetwork decoder;
    nlohmann::ordered_json train_config; // normalized echo of the run config
    int image_rows = 0;                  // > 0 when trained on image data
    int image_cols = 0;
    std::optional<GaussianStats> gaussian_prior;
    std::optional<GmmModel> gmm_prior;
};

// Atomic: writes to a temp file in the same directory, then renames.
void save_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::string& path);

} // namespace ijflow
