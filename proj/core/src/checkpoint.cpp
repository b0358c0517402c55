#include "eatspeed/checkpoint.hpp"

#include "json.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace eatspeed {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'E', 'A', 'T', 'S', 'P', 'D', 'C', 'K'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

json config_json(const ModelConfig& c) {
  json j = {{"layers", c.layers},
            {"channels", c.channels},
            {"kernel_size", c.kernel_size},
            {"dropout", c.dropout},
            {"heads", c.heads},
            {"head_dim", c.head_dim},
            {"fcn_hidden", c.fcn_hidden},
            {"classes", c.classes},
            {"learning_rate", c.learning_rate},
            {"smoothing_tau", c.smoothing_tau},
            {"smoothing_lambda", c.smoothing_lambda},
            {"seed", c.seed},
            {"batch_size", c.batch_size},
            {"max_epochs", c.max_epochs},
            {"patience", c.patience},
            {"window_frames", c.window_frames}};
  j["class_weights"] = c.class_weights ? json(*c.class_weights) : json(nullptr);
  return j;
}

ModelConfig config_from(const json& j) {
  ModelConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "layers") c.layers = value.get<int>();
    else if (key == "channels") c.channels = value.get<int>();
    else if (key == "kernel_size") c.kernel_size = value.get<int>();
    else if (key == "dropout") c.dropout = value.get<double>();
    else if (key == "heads") c.heads = value.get<int>();
    else if (key == "head_dim") c.head_dim = value.get<int>();
    else if (key == "fcn_hidden") c.fcn_hidden = value.get<int>();
    else if (key == "classes") c.classes = value.get<int>();
    else if (key == "learning_rate") c.learning_rate = value.get<double>();
    else if (key == "smoothing_tau") c.smoothing_tau = value.get<double>();
    else if (key == "smoothing_lambda") c.smoothing_lambda = value.get<double>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "batch_size") c.batch_size = value.get<int>();
    else if (key == "max_epochs") c.max_epochs = value.get<int>();
    else if (key == "patience") c.patience = value.get<int>();
    else if (key == "window_frames") c.window_frames = value.get<int>();
    else if (key == "class_weights") {
      if (!value.is_null()) c.class_weights = value.get<std::array<double, kNumClasses>>();
    } else {
      throw Error("unknown model config key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

template <typename T>
void put(std::string& out, const T& value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw Error("checkpoint truncated");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

Network<float> Checkpoint::network() const {
  Network<float> net(config);
  auto& params = net.parameters();
  if (params.size() != weights.size()) throw Error("checkpoint tensor count does not match its config");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name != weights[i].name || params[i].value.rows() != weights[i].value.rows() ||
        params[i].value.cols() != weights[i].value.cols()) {
      throw Error("checkpoint tensor '" + weights[i].name + "' does not match the network layout");
    }
    params[i].value = weights[i].value;
  }
  return net;
}

Checkpoint Checkpoint::from_network(const Network<float>& net, const NormStats& norm, TrainingMetadata metadata) {
  Checkpoint ckpt;
  ckpt.config = net.config();
  ckpt.norm = norm;
  ckpt.metadata = std::move(metadata);
  for (const auto& p : net.parameters()) {
    ckpt.weights.push_back({p.name, p.value, RowMatrix<float>()});
  }
  return ckpt;
}

std::string model_config_to_json(const ModelConfig& config) { return config_json(config).dump(2); }

ModelConfig model_config_from_json(const std::string& text) { return config_from(json::parse(text)); }

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  json header;
  header["format"] = "eatspeed-checkpoint";
  header["version"] = {kCheckpointMajorVersion, kCheckpointMinorVersion};
  header["config"] = config_json(ckpt.config);
  header["norm"] = {{"mean", ckpt.norm.mean}, {"std", ckpt.norm.stddev}};
  header["metadata"] = {{"epochs_run", ckpt.metadata.epochs_run},
                        {"best_epoch", ckpt.metadata.best_epoch},
                        {"best_val_f1", ckpt.metadata.best_val_f1},
                        {"train_loss", ckpt.metadata.train_loss},
                        {"val_f1", ckpt.metadata.val_f1}};
  json tensors = json::array();
  std::uint64_t offset = 0;
  for (const auto& t : ckpt.weights) {
    tensors.push_back({{"name", t.name}, {"rows", t.value.rows()}, {"cols", t.value.cols()}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(t.value.size());
  }
  header["tensors"] = tensors;
  const std::string header_text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put(out, kCheckpointMajorVersion);
  put(out, kCheckpointMinorVersion);
  put(out, static_cast<std::uint64_t>(header_text.size()));
  out += header_text;
  for (const auto& t : ckpt.weights) {
    out.append(reinterpret_cast<const char*>(t.value.data()), static_cast<std::size_t>(t.value.size()) * sizeof(float));
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error("not an eatspeed checkpoint");
  }
  std::size_t pos = sizeof(kMagic);
  const auto major = take<std::uint32_t>(bytes, pos);
  take<std::uint32_t>(bytes, pos);
  if (major != kCheckpointMajorVersion) {
    throw Error("checkpoint major version " + std::to_string(major) + " is not supported");
  }
  const auto header_size = take<std::uint64_t>(bytes, pos);
  if (pos + header_size > bytes.size()) throw Error("checkpoint truncated");
  const json header = json::parse(bytes.substr(pos, header_size));
  pos += header_size;

  Checkpoint ckpt;
  ckpt.config = config_from(header.at("config"));
  ckpt.norm.mean = header.at("norm").at("mean").get<std::array<double, kNumChannels>>();
  ckpt.norm.stddev = header.at("norm").at("std").get<std::array<double, kNumChannels>>();
  const auto& meta = header.at("metadata");
  ckpt.metadata.epochs_run = meta.at("epochs_run").get<int>();
  ckpt.metadata.best_epoch = meta.at("best_epoch").get<int>();
  ckpt.metadata.best_val_f1 = meta.at("best_val_f1").get<double>();
  ckpt.metadata.train_loss = meta.at("train_loss").get<std::vector<double>>();
  ckpt.metadata.val_f1 = meta.at("val_f1").get<std::vector<double>>();
  const std::size_t data_begin = pos;
  for (const auto& t : header.at("tensors")) {
    const auto rows = t.at("rows").get<Eigen::Index>();
    const auto cols = t.at("cols").get<Eigen::Index>();
    const auto offset = t.at("offset").get<std::uint64_t>();
    const std::size_t begin = data_begin + offset * sizeof(float);
    const std::size_t size = static_cast<std::size_t>(rows * cols) * sizeof(float);
    if (begin + size > bytes.size()) throw Error("checkpoint truncated");
    RowMatrix<float> value(rows, cols);
    std::memcpy(value.data(), bytes.data() + begin, size);
    ckpt.weights.push_back({t.at("name").get<std::string>(), std::move(value), RowMatrix<float>()});
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write " + file.string());
  const auto bytes = serialize_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot open " + file.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_checkpoint(buffer.str());
}

}  // namespace eatspeed
