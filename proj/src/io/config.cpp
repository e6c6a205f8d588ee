#include "io/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/error.hpp"

namespace lnm {

using nlohmann::json;

namespace {

// Reads fields of one JSON object and rejects any key nobody asked for.
class ObjectReader {
public:
  ObjectReader(const json &j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object())
      throw ConfigError(path_ + ": expected an object");
  }

  bool has(const char *key) const { return j_.contains(key); }

  const json &child(const char *key) {
    seen_.insert(key);
    if (!j_.contains(key))
      throw ConfigError(at(key) + ": required field is missing");
    return j_.at(key);
  }

  template <class T> T get(const char *key, T fallback) {
    seen_.insert(key);
    if (!j_.contains(key))
      return fallback;
    return convert<T>(j_.at(key), at(key));
  }

  template <class T> T require(const char *key) { return convert<T>(child(key), at(key)); }

  std::string at(const char *key) const { return path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
  }

  template <class T> static T convert(const json &v, const std::string &where) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean())
        throw ConfigError(where + ": expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string())
        throw ConfigError(where + ": expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number())
        throw ConfigError(where + ": expected a number");
      return v.get<T>();
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                     v.get<std::int64_t>() < 0))
        throw ConfigError(where + ": expected a non-negative integer");
      return v.get<T>();
    } else {
      if (!v.is_number_integer())
        throw ConfigError(where + ": expected an integer");
      return v.get<T>();
    }
  }

private:
  const json &j_;
  std::string path_;
  std::set<std::string> seen_;
};

SurrogateKind parse_surrogate_kind(const std::string &s, const std::string &where) {
  if (s == "rectangle")
    return SurrogateKind::rectangle;
  if (s == "triangle")
    return SurrogateKind::triangle;
  throw ConfigError(where + ": surrogate kind must be \"rectangle\" or \"triangle\"");
}

const char *to_string(SurrogateKind k) {
  return k == SurrogateKind::rectangle ? "rectangle" : "triangle";
}

DatasetKind parse_dataset_kind(const std::string &s, const std::string &where) {
  if (s == "idx_images")
    return DatasetKind::idx_images;
  if (s == "synthetic_temporal")
    return DatasetKind::synthetic_temporal;
  if (s == "framed_events")
    return DatasetKind::framed_events;
  throw ConfigError(where +
                    ": dataset kind must be idx_images, synthetic_temporal or framed_events");
}

const char *to_string(DatasetKind k) {
  switch (k) {
  case DatasetKind::idx_images:
    return "idx_images";
  case DatasetKind::synthetic_temporal:
    return "synthetic_temporal";
  case DatasetKind::framed_events:
    return "framed_events";
  }
  return "?";
}

LayerSpec parse_layer(const json &j, const std::string &path) {
  ObjectReader r(j, path);
  LayerSpec l;
  l.kind = parse_layer_kind(r.require<std::string>("kind"));
  switch (l.kind) {
  case LayerKind::dense:
    l.units = r.require<std::size_t>("units");
    l.bias = r.get("bias", l.bias);
    break;
  case LayerKind::conv2d:
    l.filters = r.require<std::size_t>("filters");
    l.kernel = r.get("kernel", l.kernel);
    l.stride = r.get("stride", l.stride);
    l.padding = r.get("padding", l.padding);
    l.bias = r.get("bias", l.bias);
    break;
  case LayerKind::avgpool:
    l.pool = r.get("pool", l.pool);
    break;
  case LayerKind::spiking: {
    l.threshold = r.get("threshold", l.threshold);
    l.degree = r.get("degree", l.degree);
    l.lif_decay = r.get("lif_decay", l.lif_decay);
    if (r.has("surrogate")) {
      ObjectReader s(r.child("surrogate"), r.at("surrogate"));
      l.surrogate.kind =
          parse_surrogate_kind(s.get<std::string>("kind", "rectangle"), s.at("kind"));
      l.surrogate.width = s.get("width", l.surrogate.width);
      s.finish();
    }
    break;
  }
  case LayerKind::flatten:
  case LayerKind::decoder:
    break;
  }
  r.finish();
  return l;
}

NetworkSpec parse_network(const json &j) {
  ObjectReader r(j, "network");
  NetworkSpec spec;
  const json &shape = r.child("input_shape");
  if (!shape.is_array())
    throw ConfigError("network.input_shape: expected an array");
  for (std::size_t i = 0; i < shape.size(); ++i)
    spec.input_shape.push_back(
        ObjectReader::convert<std::size_t>(shape[i], "network.input_shape[" + std::to_string(i) + "]"));
  spec.timesteps = r.get("timesteps", spec.timesteps);
  spec.num_classes = r.require<std::size_t>("num_classes");
  const json &layers = r.child("layers");
  if (!layers.is_array())
    throw ConfigError("network.layers: expected an array");
  for (std::size_t i = 0; i < layers.size(); ++i)
    spec.layers.push_back(parse_layer(layers[i], "network.layers[" + std::to_string(i) + "]"));
  r.finish();
  infer_shapes(spec);
  return spec;
}

TrainConfig parse_train(const json &j) {
  ObjectReader r(j, "train");
  TrainConfig c;
  c.epochs = r.get("epochs", c.epochs);
  c.batch_size = r.get("batch_size", c.batch_size);
  c.lr_weights = r.get("lr_weights", c.lr_weights);
  c.lr_lnm = r.get("lr_lnm", c.lr_lnm);
  c.momentum = r.get("momentum", c.momentum);
  c.weight_decay = r.get("weight_decay", c.weight_decay);
  c.label_smoothing = r.get("label_smoothing", c.label_smoothing);
  c.warmup_epochs = r.get("warmup_epochs", c.warmup_epochs);
  c.scheduler = r.get("scheduler", c.scheduler);
  c.grad_clip = r.get("grad_clip", c.grad_clip);
  r.finish();
  validate(c);
  return c;
}

DatasetDescriptor parse_dataset(const json &j) {
  ObjectReader r(j, "dataset");
  DatasetDescriptor d;
  d.kind = parse_dataset_kind(r.require<std::string>("kind"), "dataset.kind");
  if (d.kind == DatasetKind::synthetic_temporal) {
    d.classes = r.get("classes", d.classes);
    d.train_samples = r.get("train_samples", d.train_samples);
    d.val_samples = r.get("val_samples", d.val_samples);
    d.noise = r.get("noise", d.noise);
    d.seed = r.get("seed", d.seed);
    if (d.classes < 2)
      throw ConfigError("dataset.classes must be >= 2");
    if (d.train_samples == 0)
      throw ConfigError("dataset.train_samples must be > 0");
    if (!(d.noise >= 0.0 && d.noise <= 1.0))
      throw ConfigError("dataset.noise must lie in [0, 1]");
  } else {
    d.train_images = r.require<std::string>("train_images");
    d.train_labels = r.require<std::string>("train_labels");
    d.val_images = r.get("val_images", d.val_images);
    d.val_labels = r.get("val_labels", d.val_labels);
    d.val_fraction = r.get("val_fraction", d.val_fraction);
    if (d.val_images.empty() != d.val_labels.empty())
      throw ConfigError("dataset: val_images and val_labels must be given together");
    if (!(d.val_fraction >= 0.0 && d.val_fraction < 1.0))
      throw ConfigError("dataset.val_fraction must lie in [0, 1)");
  }
  r.finish();
  return d;
}

} // namespace

RunConfig parse_run_config(const std::string &json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error &e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ObjectReader r(j, "config");
  RunConfig c;
  c.network = parse_network(r.child("network"));
  if (r.has("train"))
    c.train = parse_train(r.child("train"));
  c.dataset = parse_dataset(r.child("dataset"));
  c.output_dir = r.get("output_dir", c.output_dir);
  c.seed = r.get("seed", c.seed);
  c.train.seed = c.seed;
  c.checkpoint = r.get("checkpoint", c.checkpoint);
  if (r.has("energy")) {
    ObjectReader e(r.child("energy"), "config.energy");
    c.energy.e_ac = e.get("e_ac", c.energy.e_ac);
    c.energy.e_mac = e.get("e_mac", c.energy.e_mac);
    c.energy.lif_decay_is_mac = e.get("lif_decay_is_mac", c.energy.lif_decay_is_mac);
    c.energy.samples = e.get("samples", c.energy.samples);
    e.finish();
    if (!(c.energy.e_ac > 0.0) || !(c.energy.e_mac > 0.0))
      throw ConfigError("energy.e_ac and energy.e_mac must be > 0");
  }
  if (r.has("grad_check")) {
    ObjectReader g(r.child("grad_check"), "config.grad_check");
    c.grad_check.h = g.get("h", c.grad_check.h);
    c.grad_check.tol = g.get("tol", c.grad_check.tol);
    c.grad_check.batch = g.get("batch", c.grad_check.batch);
    c.grad_check.max_entries = g.get("max_entries", c.grad_check.max_entries);
    g.finish();
    if (!(c.grad_check.h >= 1e-7 && c.grad_check.h <= 1e-3))
      throw ConfigError("grad_check.h must lie in [1e-7, 1e-3]");
    if (!(c.grad_check.tol > 0.0) || c.grad_check.batch == 0)
      throw ConfigError("grad_check.tol and grad_check.batch must be > 0");
  }
  if (r.has("reduce")) {
    ObjectReader g(r.child("reduce"), "config.reduce");
    c.reduce.target_degree = g.get("target_degree", c.reduce.target_degree);
    c.reduce.samples = g.get("samples", c.reduce.samples);
    g.finish();
    if (c.reduce.target_degree < 1)
      throw ConfigError("reduce.target_degree must be >= 1");
    if (c.reduce.samples < 2)
      throw ConfigError("reduce.samples must be >= 2");
  }
  if (r.has("dump")) {
    ObjectReader g(r.child("dump"), "config.dump");
    c.dump.samples = g.get("samples", c.dump.samples);
    g.finish();
    if (c.dump.samples < 2)
      throw ConfigError("dump.samples must be >= 2");
  }
  r.finish();
  return c;
}

RunConfig load_run_config(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string to_json_text(const RunConfig &c) {
  json layers = json::array();
  for (const auto &l : c.network.layers) {
    json o{{"kind", to_string(l.kind)}};
    switch (l.kind) {
    case LayerKind::dense:
      o["units"] = l.units;
      o["bias"] = l.bias;
      break;
    case LayerKind::conv2d:
      o["filters"] = l.filters;
      o["kernel"] = l.kernel;
      o["stride"] = l.stride;
      o["padding"] = l.padding;
      o["bias"] = l.bias;
      break;
    case LayerKind::avgpool:
      o["pool"] = l.pool;
      break;
    case LayerKind::spiking:
      o["threshold"] = l.threshold;
      o["degree"] = l.degree;
      o["lif_decay"] = l.lif_decay;
      o["surrogate"] = {{"kind", to_string(l.surrogate.kind)}, {"width", l.surrogate.width}};
      break;
    case LayerKind::flatten:
    case LayerKind::decoder:
      break;
    }
    layers.push_back(std::move(o));
  }
  json network{{"input_shape", c.network.input_shape},
               {"timesteps", c.network.timesteps},
               {"num_classes", c.network.num_classes},
               {"layers", layers}};
  json train{{"epochs", c.train.epochs},
             {"batch_size", c.train.batch_size},
             {"lr_weights", c.train.lr_weights},
             {"lr_lnm", c.train.lr_lnm},
             {"momentum", c.train.momentum},
             {"weight_decay", c.train.weight_decay},
             {"label_smoothing", c.train.label_smoothing},
             {"warmup_epochs", c.train.warmup_epochs},
             {"scheduler", c.train.scheduler},
             {"grad_clip", c.train.grad_clip}};
  json dataset{{"kind", to_string(c.dataset.kind)}};
  if (c.dataset.kind == DatasetKind::synthetic_temporal) {
    dataset["classes"] = c.dataset.classes;
    dataset["train_samples"] = c.dataset.train_samples;
    dataset["val_samples"] = c.dataset.val_samples;
    dataset["noise"] = c.dataset.noise;
    dataset["seed"] = c.dataset.seed;
  } else {
    dataset["train_images"] = c.dataset.train_images;
    dataset["train_labels"] = c.dataset.train_labels;
    dataset["val_images"] = c.dataset.val_images;
    dataset["val_labels"] = c.dataset.val_labels;
    dataset["val_fraction"] = c.dataset.val_fraction;
  }
  json root{{"network", network},
            {"train", train},
            {"dataset", dataset},
            {"output_dir", c.output_dir},
            {"seed", c.seed},
            {"checkpoint", c.checkpoint},
            {"energy",
             {{"e_ac", c.energy.e_ac},
              {"e_mac", c.energy.e_mac},
              {"lif_decay_is_mac", c.energy.lif_decay_is_mac},
              {"samples", c.energy.samples}}},
            {"grad_check",
             {{"h", c.grad_check.h},
              {"tol", c.grad_check.tol},
              {"batch", c.grad_check.batch},
              {"max_entries", c.grad_check.max_entries}}},
            {"reduce", {{"target_degree", c.reduce.target_degree}, {"samples", c.reduce.samples}}},
            {"dump", {{"samples", c.dump.samples}}}};
  return root.dump(2) + "\n";
}

} // namespace lnm
