#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "minflip/campaign.hpp"
#include "minflip/model.hpp"

namespace minflip {

// Shortest text form that parses back to the identical double ("nan"/"inf"
// included). Used for every CSV value the tool writes.
std::string format_double(double v);
double parse_double(const std::string& cell, std::size_t row, std::size_t col);
std::vector<std::string> split_csv_line(const std::string& line);

// Dataset CSV: header f0,...,f{d-1},label; labels strictly {0,1}; every
// value finite. Errors carry row/column diagnostics.
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& data, const std::filesystem::path& path);

// Feature-only CSV (same schema minus the label column) for adversarial
// matrices. Load-then-save round-trips bit-exactly in text form.
Matrix load_matrix_csv(const std::filesystem::path& path);
void save_adversarial(const Matrix& x_adv, const std::filesystem::path& path);

// Two Gaussian clusters at +/- margin * u for a random unit direction u,
// alternating labels, per-coordinate noise. Linearly separable whenever
// margin >= 4 * noise.
Dataset generate_synthetic(std::size_t n, std::size_t d, double margin, double noise,
                           std::uint64_t seed);

// Model JSON: input_dim, hidden_dims, hidden_activation and layers as
// {weights, bias}. Values survive a save/load round trip bit-exactly.
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

// Campaign checkpoint in the same JSON family, enough to resume mid-run.
void save_checkpoint(const CampaignState& state, const CampaignConfig& cfg,
                     const std::filesystem::path& path);
CampaignState load_checkpoint(const std::filesystem::path& path, const Dataset& data,
                              const CampaignConfig& cfg);

}  // namespace minflip
