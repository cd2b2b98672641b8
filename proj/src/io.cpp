#include "sbbv/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sbbv/errors.hpp"
#include "sbbv/hash.hpp"

static_assert(std::endian::native == std::endian::little,
              "payload format is little-endian; big-endian hosts are unsupported");

namespace sbbv {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << content;
}

void write_tensor_payload(const std::string& path, const std::vector<ParamTensor*>& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  for (const ParamTensor* p : tensors) {
    out.write(reinterpret_cast<const char*>(p->value.a.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
}

void read_tensor_payload(const std::string& path, const std::vector<ParamTensor*>& tensors) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("cannot open " + path);
  for (ParamTensor* p : tensors) {
    in.read(reinterpret_cast<char*>(p->value.a.data()),
            static_cast<std::streamsize>(p->value.size() * sizeof(double)));
    if (!in) throw HashMismatch("payload " + path + " is shorter than its manifest declares");
  }
}

void write_matrix_payload(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(m.a.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
}

Matrix read_matrix_payload(const std::string& path, std::size_t rows, std::size_t cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("cannot open " + path);
  Matrix m(rows, cols);
  in.read(reinterpret_cast<char*>(m.a.data()),
          static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!in) throw HashMismatch("payload " + path + " is shorter than expected");
  return m;
}

void save_model(const std::string& stem, const nlohmann::json& meta,
                const std::vector<ParamTensor*>& tensors) {
  write_tensor_payload(stem + ".bin", tensors);

  nlohmann::json manifest = meta;
  manifest["format"] = "sbbv-weights-v1";
  manifest["tool_version"] = kToolVersion;
  manifest["dtype"] = "f64le";
  nlohmann::json tens = nlohmann::json::array();
  for (const ParamTensor* p : tensors) {
    tens.push_back({{"name", p->name}, {"rows", p->value.rows}, {"cols", p->value.cols}});
  }
  manifest["tensors"] = tens;
  manifest["payload_hash"] = hash_file(stem + ".bin");
  write_text_file(stem + ".json", manifest.dump(2) + "\n");
}

nlohmann::json load_manifest(const std::string& stem) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_text_file(stem + ".json"));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigInvalid("manifest " + stem + ".json is not valid JSON: " + e.what());
  }
  if (manifest.value("format", "") != "sbbv-weights-v1")
    throw ConfigInvalid("manifest " + stem + ".json has unknown format");
  return manifest;
}

nlohmann::json load_model(const std::string& stem, const std::vector<ParamTensor*>& tensors) {
  nlohmann::json manifest = load_manifest(stem);
  const std::string actual = hash_file(stem + ".bin");
  const std::string expected = manifest.value("payload_hash", "");
  if (actual != expected)
    throw HashMismatch("payload " + stem + ".bin hash " + actual + " does not match manifest " +
                       expected + "; regenerate the artifact or fix the path");
  const auto& tens = manifest.at("tensors");
  if (tens.size() != tensors.size())
    throw ConfigInvalid("manifest " + stem + ".json declares " + std::to_string(tens.size()) +
                        " tensors, model expects " + std::to_string(tensors.size()));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& t = tens[i];
    if (t.at("name") != tensors[i]->name || t.at("rows") != tensors[i]->value.rows ||
        t.at("cols") != tensors[i]->value.cols)
      throw ConfigInvalid("tensor " + std::to_string(i) + " in " + stem +
                          ".json does not match the model architecture (" +
                          t.at("name").get<std::string>() + " vs " + tensors[i]->name + ")");
  }
  read_tensor_payload(stem + ".bin", tensors);
  return manifest;
}

std::string model_hash(const std::string& stem) { return hash_file(stem + ".bin"); }

}  // namespace sbbv
