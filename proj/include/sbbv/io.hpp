#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbbv/tape.hpp"

namespace sbbv {

inline constexpr const char* kToolVersion = "sbbv 1.0.0";

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Flat little-endian IEEE-754 double payload, tensors in manifest order.
void write_tensor_payload(const std::string& path, const std::vector<ParamTensor*>& tensors);
// Loads into existing tensors; shapes must match the manifest.
void read_tensor_payload(const std::string& path, const std::vector<ParamTensor*>& tensors);

// Same convention for a single matrix (signature files, centroids).
void write_matrix_payload(const std::string& path, const Matrix& m);
Matrix read_matrix_payload(const std::string& path, std::size_t rows, std::size_t cols);

// Weights file = <stem>.json manifest + <stem>.bin payload. The manifest
// records shapes, seed, config, and the payload hash; loaders verify the
// hash before trusting the payload.
void save_model(const std::string& stem, const nlohmann::json& meta,
                const std::vector<ParamTensor*>& tensors);
// Returns the manifest; verifies payload hash and tensor shapes.
nlohmann::json load_model(const std::string& stem, const std::vector<ParamTensor*>& tensors);
// Reads just the manifest (for provenance checks).
nlohmann::json load_manifest(const std::string& stem);

// Hash of the model payload file, used as the model version everywhere.
std::string model_hash(const std::string& stem);

}  // namespace sbbv
