#include "attnet/model.hpp"

#include <nlohmann/json.hpp>

#include "attnet/data_io.hpp"
#include "binio.hpp"

namespace attnet {

using nlohmann::json;

Matrix reconstruct(const AttractorModel& model, const Matrix& x_batch) {
  ForwardTrace trace = forward(model.params, model.arch, x_batch, /*with_head=*/false);
  return trace.activations.back();
}

namespace {

constexpr char kModelMagic[4] = {'A', 'T', 'N', 'W'};
constexpr std::uint32_t kModelVersion = 1;

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Softmax: return "softmax";
    case Activation::Identity: return "identity";
  }
  return "?";
}

Activation activation_from(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "softmax") return Activation::Softmax;
  if (s == "identity") return Activation::Identity;
  raise(Err::VersionUnsupported, "unknown activation '" + s + "' in model metadata");
}

void write_blob(binio::Writer& w, const double* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) w.f32(static_cast<float>(data[i]));
}

void read_blob(binio::Reader& r, double* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<double>(r.f32());
}

}  // namespace

void save_model(const AttractorModel& model, const std::string& path) {
  model.arch.validate();
  json meta;
  meta["widths"] = model.arch.layer_widths;
  std::vector<std::string> acts;
  for (Activation a : model.arch.activations) acts.emplace_back(activation_name(a));
  meta["activations"] = acts;
  meta["head_from"] = model.arch.head_from;
  meta["head_width"] = model.arch.head_width;
  meta["training_mode"] = model.training_mode_tag;
  meta["seed"] = model.seed;
  meta["alphas"] = model.alphas;

  binio::Writer w;
  w.raw(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(kModelMagic), 4));
  w.u32(kModelVersion);
  w.str(meta.dump());
  for (std::size_t k = 0; k < model.params.weights.size(); ++k) {
    write_blob(w, model.params.weights[k].data(), model.params.weights[k].size());
    write_blob(w, model.params.biases[k].data(), model.params.biases[k].size());
  }
  write_blob(w, model.params.head_weight.data(), model.params.head_weight.size());
  write_blob(w, model.params.head_bias.data(), model.params.head_bias.size());
  w.append_crc();
  write_file_bytes(path, w.bytes());
}

AttractorModel load_model(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  binio::Reader r(bytes);
  const auto magic = r.take(4);
  require(std::equal(magic.begin(), magic.end(), kModelMagic), Err::BadMagic,
          path + " is not a model file");
  const std::uint32_t version = r.u32();
  require(version == kModelVersion, Err::VersionUnsupported,
          "model format version " + std::to_string(version));

  json meta;
  try {
    meta = json::parse(r.str());
  } catch (const json::exception& e) {
    raise(Err::ChecksumMismatch, std::string("unreadable model metadata: ") + e.what());
  }

  AttractorModel model;
  try {
    model.arch.layer_widths = meta.at("widths").get<std::vector<std::size_t>>();
    for (const auto& s : meta.at("activations")) {
      model.arch.activations.push_back(activation_from(s.get<std::string>()));
    }
    model.arch.head_from = meta.at("head_from").get<std::size_t>();
    model.arch.head_width = meta.at("head_width").get<std::size_t>();
    model.training_mode_tag = meta.at("training_mode").get<std::string>();
    model.seed = meta.at("seed").get<std::uint64_t>();
    model.alphas = meta.at("alphas").get<std::array<double, 3>>();
  } catch (const json::exception& e) {
    raise(Err::VersionUnsupported, std::string("incomplete model metadata: ") + e.what());
  }
  model.arch.validate();

  model.params = NetParams::zeros_like(model.arch);
  for (std::size_t k = 0; k < model.params.weights.size(); ++k) {
    read_blob(r, model.params.weights[k].data(), model.params.weights[k].size());
    read_blob(r, model.params.biases[k].data(), model.params.biases[k].size());
  }
  read_blob(r, model.params.head_weight.data(), model.params.head_weight.size());
  read_blob(r, model.params.head_bias.data(), model.params.head_bias.size());
  require(r.remaining() == 4, Err::TruncatedFile, "model file has trailing or missing bytes");
  binio::check_crc(r);
  return model;
}

NetParams quantize_f32(const NetParams& params) {
  NetParams q = params;
  for_each_tensor(q, [](double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<double>(static_cast<float>(p[i]));
  });
  return q;
}

}  // namespace attnet
