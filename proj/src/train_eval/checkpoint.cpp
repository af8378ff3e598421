#include "stgin/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "stgin/errors.hpp"
#include "stgin/params.hpp"

namespace stgin {

namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kFormat = "stgin-checkpoint";
constexpr int kVersion = 1;

template <class D, class F>
void each_dim(D& d, F&& f) {
  f("nodes", d.nodes);
  f("input_len", d.input_len);
  f("horizon", d.horizon);
  f("externals", d.externals);
  f("fca_channels", d.fca_channels);
  f("fca_width", d.fca_width);
  f("gat_heads", d.gat_heads);
  f("leaky_slope", d.leaky_slope);
  f("d_model", d.d_model);
  f("heads", d.heads);
  f("encoder_layers", d.encoder_layers);
  f("replicas", d.replicas);
  f("decoder_layers", d.decoder_layers);
  f("token_len", d.token_len);
  f("c_factor", d.c_factor);
  f("ffn_multiplier", d.ffn_multiplier);
  f("shared_informer", d.shared_informer);
  f("use_graph", d.use_graph);
  f("step_minutes", d.step_minutes);
}

}  // namespace

std::vector<std::string> dims_mismatch(const StginDims& expected, const StginDims& found) {
  Json a, b;
  each_dim(expected, [&](const char* k, const auto& v) { a[k] = v; });
  each_dim(found, [&](const char* k, const auto& v) { b[k] = v; });
  std::vector<std::string> out;
  for (auto it = a.begin(); it != a.end(); ++it) {
    if (b[it.key()] != it.value()) out.push_back(it.key());
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const StginModel& model,
                     const NormStats& norm) {
  Json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  Json dims = Json::object();
  each_dim(model.dims, [&](const char* k, const auto& v) { dims[k] = v; });
  doc["dims"] = dims;
  doc["seed"] = model.seed;
  doc["normalization"] = {{"min", norm.min}, {"max", norm.max}};
  Json tensors = Json::array();
  params::visit(model.params, [&](const std::string& name, const Tensor& t) {
    tensors.push_back({{"name", name}, {"shape", t.shape()}, {"data", t.storage()}});
  });
  doc["tensors"] = std::move(tensors);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out << doc.dump(1) << '\n';
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  const std::string where = "checkpoint " + path.string() + ": ";
  Checkpoint ck;
  try {
    const Json doc = Json::parse(in);
    if (doc.value("format", std::string()) != kFormat) {
      throw CheckpointError(where + "not an stgin checkpoint");
    }
    if (doc.at("version").get<int>() != kVersion) {
      throw CheckpointError(where + "unsupported version " + doc.at("version").dump());
    }
    StginDims dims;
    const Json& jd = doc.at("dims");
    each_dim(dims, [&](const char* k, auto& v) { jd.at(k).get_to(v); });
    try {
      ck.model = init_params(dims, doc.at("seed").get<std::uint64_t>());
    } catch (const Error& e) {
      throw CheckpointError(where + "invalid dims: " + e.what());
    }
    ck.norm.min = doc.at("normalization").at("min").get<double>();
    ck.norm.max = doc.at("normalization").at("max").get<double>();

    const Json& tensors = doc.at("tensors");
    std::size_t i = 0;
    params::visit(ck.model.params, [&](const std::string& name, Tensor& t) {
      if (i >= tensors.size()) throw CheckpointError(where + "missing tensor " + name);
      const Json& jt = tensors[i++];
      if (jt.at("name").get<std::string>() != name) {
        throw CheckpointError(where + "expected tensor " + name + ", found " +
                              jt.at("name").get<std::string>());
      }
      Shape shape = jt.at("shape").get<Shape>();
      if (shape != t.shape()) {
        throw CheckpointError(where + "tensor " + name + " has shape " + shape_string(shape) +
                              ", model expects " + shape_string(t.shape()));
      }
      std::vector<double> data = jt.at("data").get<std::vector<double>>();
      if (data.size() != t.size()) throw CheckpointError(where + "tensor " + name + " size mismatch");
      t = Tensor(std::move(shape), std::move(data));
    });
    if (i != tensors.size()) throw CheckpointError(where + "unexpected extra tensors");
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(where + e.what());
  }
  return ck;
}

}  // namespace stgin
