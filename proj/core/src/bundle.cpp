#include "lgi/bundle.hpp"

#include <charconv>
#include <sstream>

#include "lgi/errors.hpp"

namespace lgi {

namespace {

std::size_t attribute_size(const Checkpoint& ckpt, const std::string& key) {
  const auto it = ckpt.attributes.find(key);
  if (it == ckpt.attributes.end()) throw ConsistencyError("checkpoint attribute '" + key + "' is missing");
  std::size_t value = 0;
  const auto& s = it->second;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || end != s.data() + s.size() || value == 0) {
    throw ConsistencyError("checkpoint attribute '" + key + "' is not a positive integer: '" + s + "'");
  }
  return value;
}

bool lists_model(const Checkpoint& ckpt, const std::string& name) {
  const auto it = ckpt.attributes.find("models");
  if (it == ckpt.attributes.end()) return false;
  std::istringstream in(it->second);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == name) return true;
  }
  return false;
}

}  // namespace

pfc::Perception ModelBundle::perception() const {
  return {vision ? &*vision : nullptr, ips ? &*ips : nullptr};
}

Checkpoint to_checkpoint(const ModelBundle& bundle, StageMeta meta) {
  ParamList params;
  std::map<std::string, std::string> attrs;
  std::string models;
  const auto add_model = [&](const std::string& name) { models += (models.empty() ? "" : ",") + name; };
  if (bundle.vision) {
    const auto& c = bundle.vision->config();
    attrs["vision.hidden1"] = std::to_string(c.hidden1);
    attrs["vision.hidden2"] = std::to_string(c.hidden2);
    attrs["vision.v3"] = std::to_string(c.v3);
    attrs["vision.v4"] = std::to_string(c.v4);
    auto p = bundle.vision->params();
    params.insert(params.end(), p.begin(), p.end());
    add_model("vision");
  }
  if (bundle.ips) {
    attrs["ips.hidden"] = std::to_string(bundle.ips->hidden());
    auto p = bundle.ips->params();
    params.insert(params.end(), p.begin(), p.end());
    add_model("ips");
  }
  if (bundle.pfc) {
    const auto& c = bundle.pfc->config();
    attrs["pfc.v3"] = std::to_string(c.v3);
    attrs["pfc.v4"] = std::to_string(c.v4);
    attrs["pfc.hidden"] = std::to_string(c.hidden);
    auto p = bundle.pfc->params();
    params.insert(params.end(), p.begin(), p.end());
    add_model("pfc");
  }
  attrs["models"] = models;
  Checkpoint ckpt = Checkpoint::capture(params, std::move(meta));
  ckpt.attributes = std::move(attrs);
  return ckpt;
}

ModelBundle from_checkpoint(const Checkpoint& ckpt) {
  ModelBundle bundle;
  Rng scratch(0);
  if (lists_model(ckpt, "vision")) {
    vision::VisionConfig c;
    c.hidden1 = attribute_size(ckpt, "vision.hidden1");
    c.hidden2 = attribute_size(ckpt, "vision.hidden2");
    c.v3 = attribute_size(ckpt, "vision.v3");
    c.v4 = attribute_size(ckpt, "vision.v4");
    auto model = vision::VisionModel::init(c, scratch);
    ckpt.restore(model.params());
    model.freeze();
    bundle.vision = std::move(model);
  }
  if (lists_model(ckpt, "ips")) {
    auto model = language::IpsModel::init({.hidden = attribute_size(ckpt, "ips.hidden")}, scratch);
    ckpt.restore(model.params());
    model.freeze();
    bundle.ips = std::move(model);
  }
  if (lists_model(ckpt, "pfc")) {
    pfc::PfcConfig c;
    c.v3 = attribute_size(ckpt, "pfc.v3");
    c.v4 = attribute_size(ckpt, "pfc.v4");
    c.hidden = attribute_size(ckpt, "pfc.hidden");
    if (bundle.vision && (bundle.vision->config().v3 != c.v3 || bundle.vision->config().v4 != c.v4)) {
      throw ConsistencyError("checkpoint PFC input layout does not match its vision model");
    }
    auto model = pfc::PfcModel::init(c, scratch);
    ckpt.restore(model.params());
    bundle.pfc = std::move(model);
  }
  return bundle;
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path, StageMeta meta) {
  save_checkpoint(to_checkpoint(bundle, std::move(meta)), path);
}

ModelBundle load_bundle(const std::filesystem::path& path) { return from_checkpoint(load_checkpoint(path)); }

}  // namespace lgi
