#include "seed/config.hpp"

#include <fstream>
#include <map>
#include <set>

#include "seed/error.hpp"

namespace seed {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorKind::InvalidConfig, msg); }

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.contains(key)) bad("unknown key '" + where + "." + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    const json& v = j.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) bad(where + "." + key + " must be a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) bad(where + "." + key + " must be an integer");
      if constexpr (std::is_unsigned_v<T>)
        if (!v.is_number_unsigned() && v.get<std::int64_t>() < 0) bad(where + "." + key + " must be non-negative");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) bad(where + "." + key + " must be a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) bad(where + "." + key + " must be a string");
    }
    out = v.get<T>();
  } catch (const json::exception& e) {
    bad(where + "." + key + ": " + e.what());
  }
}

std::string read_enum(const json& j, const char* key, const std::string& where, const std::string& fallback) {
  std::string v = fallback;
  read(j, key, v, where);
  return v;
}

}  // namespace

RunConfig parse_config(const json& j) {
  RunConfig cfg;
  only_keys(j, "config", {"seed", "scenario", "model", "training", "output"});
  read(j, "seed", cfg.seed, "config");

  if (j.contains("scenario")) {
    const json& s = j.at("scenario");
    only_keys(s, "scenario", {"source", "blobs", "idx", "split"});
    const std::string source = read_enum(s, "source", "scenario", "blobs");
    if (source == "blobs") cfg.scenario.source = ScenarioConfig::Source::Blobs;
    else if (source == "idx") cfg.scenario.source = ScenarioConfig::Source::Idx;
    else bad("scenario.source must be 'blobs' or 'idx'");

    if (s.contains("blobs")) {
      const json& b = s.at("blobs");
      only_keys(b, "scenario.blobs", {"classes", "input_dim", "spread", "cov_scale", "train_per_class", "test_per_class", "drift"});
      BlobSpec& spec = cfg.scenario.blobs;
      read(b, "classes", spec.classes, "scenario.blobs");
      read(b, "input_dim", spec.input_dim, "scenario.blobs");
      read(b, "spread", spec.spread, "scenario.blobs");
      read(b, "cov_scale", spec.cov_scale, "scenario.blobs");
      read(b, "train_per_class", spec.train_per_class, "scenario.blobs");
      read(b, "test_per_class", spec.test_per_class, "scenario.blobs");
      if (b.contains("drift")) {
        const json& d = b.at("drift");
        only_keys(d, "scenario.blobs.drift", {"group_size", "angle", "translation"});
        read(d, "group_size", spec.drift.group_size, "scenario.blobs.drift");
        read(d, "angle", spec.drift.angle, "scenario.blobs.drift");
        read(d, "translation", spec.drift.translation, "scenario.blobs.drift");
        if (spec.drift.group_size < 0) bad("scenario.blobs.drift.group_size must be >= 0");
      }
      if (spec.classes < 2) bad("scenario.blobs.classes must be >= 2");
      if (spec.input_dim == 0) bad("scenario.blobs.input_dim must be positive");
      if (!(spec.spread > 0.0)) bad("scenario.blobs.spread must be positive");
      if (!(spec.cov_scale > 0.0)) bad("scenario.blobs.cov_scale must be positive");
      if (spec.train_per_class < 2 || spec.test_per_class < 1) bad("scenario.blobs sample counts too small");
    }
    if (s.contains("idx")) {
      const json& x = s.at("idx");
      only_keys(x, "scenario.idx", {"train_images", "train_labels", "test_images", "test_labels", "max_train_per_class", "max_test_per_class"});
      IdxSource& idx = cfg.scenario.idx;
      read(x, "train_images", idx.train_images, "scenario.idx");
      read(x, "train_labels", idx.train_labels, "scenario.idx");
      read(x, "test_images", idx.test_images, "scenario.idx");
      read(x, "test_labels", idx.test_labels, "scenario.idx");
      read(x, "max_train_per_class", idx.max_train_per_class, "scenario.idx");
      read(x, "max_test_per_class", idx.max_test_per_class, "scenario.idx");
    }
    if (cfg.scenario.source == ScenarioConfig::Source::Idx &&
        (cfg.scenario.idx.train_images.empty() || cfg.scenario.idx.train_labels.empty() ||
         cfg.scenario.idx.test_images.empty() || cfg.scenario.idx.test_labels.empty()))
      bad("scenario.idx needs train/test image and label paths");
    if (s.contains("split")) {
      const json& sp = s.at("split");
      only_keys(sp, "scenario.split", {"type", "tasks", "first_fraction", "shuffle"});
      const std::string type = read_enum(sp, "type", "scenario.split", "equal");
      if (type == "equal") cfg.scenario.split.kind = TaskSplitSpec::Kind::Equal;
      else if (type == "large-first") cfg.scenario.split.kind = TaskSplitSpec::Kind::LargeFirst;
      else bad("scenario.split.type must be 'equal' or 'large-first'");
      read(sp, "tasks", cfg.scenario.split.tasks, "scenario.split");
      read(sp, "first_fraction", cfg.scenario.split.first_fraction, "scenario.split");
      read(sp, "shuffle", cfg.scenario.split.shuffle, "scenario.split");
      if (cfg.scenario.split.tasks < 1) bad("scenario.split.tasks must be >= 1");
    }
  }

  if (j.contains("model")) {
    const json& m = j.at("model");
    only_keys(m, "model", {"experts", "trunk_layers", "head_layers", "embed_dim", "activation", "final_relu"});
    read(m, "experts", cfg.experts, "model");
    read(m, "trunk_layers", cfg.model.trunk_layers, "model");
    read(m, "head_layers", cfg.model.head_layers, "model");
    read(m, "embed_dim", cfg.model.embed_dim, "model");
    read(m, "final_relu", cfg.model.final_relu, "model");
    const auto act = parse_activation(read_enum(m, "activation", "model", "relu"));
    if (!act) bad("model.activation must be relu, tanh or identity");
    cfg.model.activation = *act;
    if (cfg.experts < 1) bad("model.experts must be >= 1");
    if (cfg.model.embed_dim < 1) bad("model.embed_dim must be >= 1");
    for (auto w : cfg.model.trunk_layers)
      if (w == 0) bad("model.trunk_layers widths must be positive");
    for (auto w : cfg.model.head_layers)
      if (w == 0) bad("model.head_layers widths must be positive");
  }

  if (j.contains("training")) {
    const json& t = j.at("training");
    only_keys(t, "training", {"alpha", "tau", "epochs", "batch_size", "lr", "momentum", "weight_decay", "milestones",
                              "eps", "representation", "strategy", "joint_reference"});
    TrainConfig& tc = cfg.training;
    read(t, "alpha", tc.alpha, "training");
    read(t, "tau", tc.tau, "training");
    read(t, "epochs", tc.epochs, "training");
    read(t, "batch_size", tc.batch_size, "training");
    read(t, "lr", tc.lr, "training");
    read(t, "momentum", tc.momentum, "training");
    read(t, "weight_decay", tc.weight_decay, "training");
    read(t, "eps", tc.eps, "training");
    read(t, "joint_reference", cfg.joint_reference, "training");
    if (t.contains("milestones")) {
      const json& ms = t.at("milestones");
      if (!ms.is_array()) bad("training.milestones must be an array of [epoch, divisor]");
      tc.milestones.clear();
      for (const auto& m : ms) {
        if (!m.is_array() || m.size() != 2 || !m[0].is_number_integer() || !m[1].is_number())
          bad("training.milestones entries must be [epoch, divisor]");
        tc.milestones.emplace_back(m[0].get<int>(), m[1].get<double>());
      }
    }
    const auto mode = parse_representation(read_enum(t, "representation", "training", to_string(tc.mode)));
    if (!mode) bad("training.representation must be full, diag or prototype");
    tc.mode = *mode;
    const auto strategy = parse_strategy(read_enum(t, "strategy", "training", to_string(tc.strategy)));
    if (!strategy) bad("training.strategy must be kl-max, kl-min, random, round-robin or train-all");
    tc.strategy = *strategy;
    tc.validate();
  }

  if (j.contains("output")) {
    const json& o = j.at("output");
    only_keys(o, "output", {"out_dir", "trace"});
    read(o, "out_dir", cfg.output.out_dir, "output");
    read(o, "trace", cfg.output.trace, "output");
  }
  return cfg;
}

json to_json(const RunConfig& cfg) {
  const auto& s = cfg.scenario;
  json scenario = {
      {"source", s.source == ScenarioConfig::Source::Blobs ? "blobs" : "idx"},
      {"blobs",
       {{"classes", s.blobs.classes},
        {"input_dim", s.blobs.input_dim},
        {"spread", s.blobs.spread},
        {"cov_scale", s.blobs.cov_scale},
        {"train_per_class", s.blobs.train_per_class},
        {"test_per_class", s.blobs.test_per_class},
        {"drift", {{"group_size", s.blobs.drift.group_size}, {"angle", s.blobs.drift.angle}, {"translation", s.blobs.drift.translation}}}}},
      {"split",
       {{"type", s.split.kind == TaskSplitSpec::Kind::Equal ? "equal" : "large-first"},
        {"tasks", s.split.tasks},
        {"first_fraction", s.split.first_fraction},
        {"shuffle", s.split.shuffle}}}};
  if (s.source == ScenarioConfig::Source::Idx)
    scenario["idx"] = {{"train_images", s.idx.train_images}, {"train_labels", s.idx.train_labels},
                       {"test_images", s.idx.test_images},   {"test_labels", s.idx.test_labels},
                       {"max_train_per_class", s.idx.max_train_per_class},
                       {"max_test_per_class", s.idx.max_test_per_class}};
  json milestones = json::array();
  for (const auto& [e, d] : cfg.training.milestones) milestones.push_back({e, d});
  const auto& t = cfg.training;
  return {{"seed", cfg.seed},
          {"scenario", scenario},
          {"model",
           {{"experts", cfg.experts},
            {"trunk_layers", cfg.model.trunk_layers},
            {"head_layers", cfg.model.head_layers},
            {"embed_dim", cfg.model.embed_dim},
            {"activation", to_string(cfg.model.activation)},
            {"final_relu", cfg.model.final_relu}}},
          {"training",
           {{"alpha", t.alpha},
            {"tau", t.tau},
            {"epochs", t.epochs},
            {"batch_size", t.batch_size},
            {"lr", t.lr},
            {"momentum", t.momentum},
            {"weight_decay", t.weight_decay},
            {"milestones", milestones},
            {"eps", t.eps},
            {"representation", to_string(t.mode)},
            {"strategy", to_string(t.strategy)},
            {"joint_reference", cfg.joint_reference}}},
          {"output", {{"out_dir", cfg.output.out_dir}, {"trace", cfg.output.trace}}}};
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    bad(std::string("malformed config: ") + e.what());
  }
  return parse_config(j);
}

void apply_override(json& tree, const std::string& dotted_key, const std::string& value) {
  if (dotted_key.empty()) bad("empty override key");
  json* node = &tree;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted_key.find('.', start);
    const std::string part = dotted_key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) bad("malformed override key '" + dotted_key + "'");
    if (!node->is_object()) *node = json::object();
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  json parsed = json::parse(value, nullptr, false);
  *node = parsed.is_discarded() ? json(value) : parsed;
}

namespace {

Dataset cap_per_class(const Dataset& ds, int cap) {
  if (cap <= 0) return ds;
  Dataset out;
  out.input_dim = ds.input_dim;
  out.num_classes = ds.num_classes;
  std::map<int, int> counts;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (counts[ds.y[i]]++ < cap) {
      out.x.push_back(ds.x[i]);
      out.y.push_back(ds.y[i]);
    }
  return out;
}

void check_class_counts(const Dataset& ds, int min_count, const char* which) {
  std::vector<int> counts(static_cast<std::size_t>(ds.num_classes), 0);
  for (int y : ds.y) ++counts[static_cast<std::size_t>(y)];
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] < min_count)
      throw Error(ErrorKind::TooFewSamples, std::string(which) + " class " + std::to_string(c) + " has " +
                                                std::to_string(counts[c]) + " samples");
}

}  // namespace

TaskStream build_stream(RunConfig& cfg) {
  Dataset train;
  Dataset test;
  if (cfg.scenario.source == ScenarioConfig::Source::Blobs) {
    BlobSpec spec = cfg.scenario.blobs;
    spec.seed = Rng::substream(cfg.seed, "data").next();
    BlobData data = synth_blobs(spec);
    train = std::move(data.train);
    test = std::move(data.test);
  } else {
    const IdxSource& idx = cfg.scenario.idx;
    train = cap_per_class(load_idx(idx.train_images, idx.train_labels), idx.max_train_per_class);
    test = cap_per_class(load_idx(idx.test_images, idx.test_labels), idx.max_test_per_class);
    if (train.input_dim != test.input_dim) throw Error(ErrorKind::DimensionMismatch, "train vs test image size");
    const int classes = std::max(train.num_classes, test.num_classes);
    train.num_classes = test.num_classes = classes;
  }
  check_class_counts(train, 2, "train");
  check_class_counts(test, 1, "test");
  cfg.model.input_dim = train.input_dim;
  cfg.model.rng_seed = Rng::substream(cfg.seed, "init").next();

  TaskSplitSpec split = cfg.scenario.split;
  split.order_seed = Rng::substream(cfg.seed, "order").next();
  return {make_split(train, split), make_split(test, split)};
}

}  // namespace seed
