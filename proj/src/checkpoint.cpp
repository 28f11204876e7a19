#include "videograph/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "json.hpp"
#include "videograph/errors.hpp"
#include "videograph/feature_file.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoint payloads assume a little-endian host");

namespace videograph {

namespace {

constexpr int kFormatVersion = 1;

struct Block {
  std::string name;
  Shape shape;
  std::vector<double>* target;  // where load writes
  std::span<const double> source;
};

std::size_t element_bytes(PayloadType t) { return t == PayloadType::kFloat32 ? 4 : 8; }

void append_values(std::vector<std::uint8_t>& out, std::span<const double> values, PayloadType type) {
  for (double v : values) {
    if (type == PayloadType::kFloat32) {
      const float f = static_cast<float>(v);
      const auto* p = reinterpret_cast<const std::uint8_t*>(&f);
      out.insert(out.end(), p, p + sizeof f);
    } else {
      const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
      out.insert(out.end(), p, p + sizeof v);
    }
  }
}

void read_values(std::span<const std::uint8_t> bytes, PayloadType type, std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (type == PayloadType::kFloat32) {
      float f;
      std::memcpy(&f, bytes.data() + i * 4, 4);
      out[i] = static_cast<double>(f);
    } else {
      std::memcpy(&out[i], bytes.data() + i * 8, 8);
    }
  }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

nlohmann::json record(const std::string& name, const Shape& shape, std::size_t offset) {
  return {{"name", name}, {"shape", shape}, {"offset", offset}};
}

}  // namespace

void save_checkpoint(const TrainingSession& session, const std::filesystem::path& dir, PayloadType type) {
  if (!session.model || !session.optimizer) throw std::logic_error("save_checkpoint: session has no model");
  Model& model = *session.model;
  const auto params = model.parameters();
  const auto& velocities = session.optimizer->velocities();
  if (velocities.size() != params.size()) throw std::logic_error("optimizer does not match the model parameters");

  std::vector<std::uint8_t> payload;
  nlohmann::json param_records = nlohmann::json::array(), velocity_records = nlohmann::json::array(),
                 buffer_records = nlohmann::json::array(), norms = nlohmann::json::array();
  for (const auto& p : params) {
    for (double v : p.tensor.data())
      if (!std::isfinite(v)) throw NumericError("parameter " + p.name + " is not finite");
    param_records.push_back(record(p.name, p.tensor.shape(), payload.size()));
    append_values(payload, p.tensor.data(), type);
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity_records.push_back(record(params[i].name, params[i].tensor.shape(), payload.size()));
    append_values(payload, velocities[i], type);
  }
  for (const auto& bn : model.batch_norms()) {
    const Shape shape{bn.state->channels()};
    buffer_records.push_back(record(bn.name + ".running_mean", shape, payload.size()));
    append_values(payload, bn.state->running_mean, type);
    buffer_records.push_back(record(bn.name + ".running_var", shape, payload.size()));
    append_values(payload, bn.state->running_var, type);
    norms.push_back({{"name", bn.name}, {"initialized", bn.state->initialized}});
  }

  nlohmann::json manifest{{"format_version", kFormatVersion},
                          {"dtype", type == PayloadType::kFloat32 ? "float32" : "float64"},
                          {"config", session.config},
                          {"epoch", session.epochs_done},
                          {"parameters", param_records},
                          {"velocities", velocity_records},
                          {"buffers", buffer_records},
                          {"batch_norms", norms},
                          {"payload_bytes", payload.size()},
                          {"crc32", crc32_of(payload)}};

  std::filesystem::create_directories(dir);
  const std::string text = manifest.dump(2) + "\n";
  write_file(dir / "manifest.json", std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  write_file(dir / "weights.bin", payload);
}

TrainingSession load_checkpoint(const std::filesystem::path& dir) {
  const auto manifest_bytes = read_file(dir / "manifest.json");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(manifest_bytes.begin(), manifest_bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest.json: ") + e.what());
  }

  try {
    const int version = manifest.at("format_version").get<int>();
    if (version != kFormatVersion) throw FormatError("unknown checkpoint format version " + std::to_string(version));
    const std::string dtype = manifest.at("dtype").get<std::string>();
    if (dtype != "float32" && dtype != "float64") throw FormatError("unknown payload dtype '" + dtype + "'");
    const PayloadType type = dtype == "float32" ? PayloadType::kFloat32 : PayloadType::kFloat64;
    const std::size_t esize = element_bytes(type);

    const auto payload = read_file(dir / "weights.bin");
    if (payload.size() != manifest.at("payload_bytes").get<std::size_t>()) {
      throw FormatError("weights.bin has " + std::to_string(payload.size()) + " bytes, manifest says " +
                        std::to_string(manifest.at("payload_bytes").get<std::size_t>()));
    }
    const auto expected_crc = manifest.at("crc32").get<std::uint32_t>();
    if (crc32_of(payload) != expected_crc) throw FormatError("weights.bin checksum mismatch");

    TrainingSession s;
    s.config = manifest.at("config").get<RunConfig>();
    s.epochs_done = manifest.at("epoch").get<std::size_t>();
    // k-means init needs data; its values are overwritten below anyway.
    VideoGraphConfig build = s.config.model;
    if (build.init == InitStrategy::kKMeans) build.init = InitStrategy::kRandom;
    s.model = make_model(build);

    // Records must tile the payload in order.
    std::size_t cursor = 0;
    std::map<std::string, std::pair<Shape, std::size_t>> params, velocities, buffers;
    auto index = [&](const char* key, auto& table) {
      for (const auto& r : manifest.at(key)) {
        const auto name = r.at("name").get<std::string>();
        const auto shape = r.at("shape").get<Shape>();
        const auto offset = r.at("offset").get<std::size_t>();
        if (offset != cursor) {
          throw FormatError(std::string(key) + " record '" + name + "' at offset " + std::to_string(offset) +
                            ", expected " + std::to_string(cursor));
        }
        cursor += shape_numel(shape) * esize;
        if (!table.emplace(name, std::make_pair(shape, offset)).second) {
          throw FormatError("duplicate " + std::string(key) + " record '" + name + "'");
        }
      }
    };
    index("parameters", params);
    index("velocities", velocities);
    index("buffers", buffers);
    if (cursor != payload.size()) {
      throw FormatError("records cover " + std::to_string(cursor) + " bytes of a " + std::to_string(payload.size()) +
                        "-byte payload");
    }

    auto fetch = [&](const auto& table, const std::string& kind, const std::string& name, const Shape& shape,
                     std::span<double> out) {
      const auto it = table.find(name);
      if (it == table.end()) throw FormatError("missing " + kind + " record '" + name + "'");
      if (it->second.first != shape) {
        throw FormatError(kind + " '" + name + "' has shape " + shape_to_string(it->second.first) +
                          " in the manifest, model expects " + shape_to_string(shape));
      }
      read_values(std::span(payload).subspan(it->second.second, out.size() * esize), type, out);
    };

    const auto model_params = s.model->parameters();
    std::vector<std::vector<double>> loaded_velocities;
    for (const auto& p : model_params) {
      Tensor t = p.tensor;
      fetch(params, "parameter", p.name, t.shape(), t.mutable_data());
      std::vector<double> v(t.numel());
      fetch(velocities, "velocity", p.name, t.shape(), v);
      loaded_velocities.push_back(std::move(v));
    }
    std::map<std::string, bool> initialized;
    for (const auto& n : manifest.at("batch_norms")) initialized[n.at("name").get<std::string>()] = n.at("initialized").get<bool>();
    for (const auto& bn : s.model->batch_norms()) {
      const Shape shape{bn.state->channels()};
      fetch(buffers, "buffer", bn.name + ".running_mean", shape, bn.state->running_mean);
      fetch(buffers, "buffer", bn.name + ".running_var", shape, bn.state->running_var);
      const auto it = initialized.find(bn.name);
      if (it == initialized.end()) throw FormatError("missing batch norm record '" + bn.name + "'");
      bn.state->initialized = it->second;
    }
    s.optimizer = std::make_unique<Sgd>(s.model->parameter_tensors(), s.config.optimizer);
    s.optimizer->velocities() = std::move(loaded_velocities);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest.json: ") + e.what());
  }
}

}  // namespace videograph
