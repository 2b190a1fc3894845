#include "lgi/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <type_traits>
#include <variant>

#include "lgi/errors.hpp"

namespace lgi {

namespace {

// Seeds (std::uint64_t) share the std::size_t slot.
static_assert(std::is_same_v<std::uint64_t, std::size_t>, "config slots assume a 64-bit size_t");
using Slot = std::variant<std::size_t*, double*, bool*, std::string*, std::vector<std::size_t>*>;

struct Entry {
  std::string key;
  Slot slot;
};

std::vector<Entry> bind(RunConfig& c) {
  return {
      {"seed", &c.seed},
      {"out_dir", &c.out_dir},
      {"data.source", &c.data.source},
      {"data.idx_images", &c.data.idx_images},
      {"data.idx_labels", &c.data.idx_labels},
      {"data.synthetic_count", &c.data.synthetic_count},
      {"data.synthetic_seed", &c.data.synthetic_seed},
      {"data.heldout_count", &c.data.heldout_count},
      {"data.heldout_seed", &c.data.heldout_seed},
      {"dims.image", &c.dims.image},
      {"dims.l0", &c.dims.l0},
      {"dims.l1", &c.dims.l1},
      {"dims.v3", &c.dims.v3},
      {"dims.v4", &c.dims.v4},
      {"dims.vision_hidden1", &c.dims.vision_hidden1},
      {"dims.vision_hidden2", &c.dims.vision_hidden2},
      {"dims.ips_hidden", &c.dims.ips_hidden},
      {"dims.pfc_hidden", &c.dims.pfc_hidden},
      {"dims.pfc_input", &c.dims.pfc_input},
      {"vision.steps", &c.vision.steps},
      {"vision.batch", &c.vision.batch},
      {"vision.learning_rate", &c.vision.learning_rate},
      {"vision.augment", &c.vision.augment},
      {"ips.steps", &c.ips.steps},
      {"ips.batch", &c.ips.batch},
      {"ips.learning_rate", &c.ips.learning_rate},
      {"ips.clip_norm", &c.ips.clip_norm},
      {"ips.prefix_probability", &c.ips.prefix_probability},
      {"pfc.batch", &c.pfc.batch},
      {"pfc.learning_rate", &c.pfc.learning_rate},
      {"pfc.clip_norm", &c.pfc.clip_norm},
      {"pfc.steps_per_stage", &c.pfc.steps_per_stage},
      {"pfc.stage_steps", &c.pfc.stage_steps},
      {"pfc.replay", &c.pfc.replay},
      {"pfc.criterion", &c.pfc.criterion},
      {"pfc.criterion_threshold", &c.pfc.criterion_threshold},
      {"pfc.eval_every", &c.pfc.eval_every},
      {"pfc.eval_episodes", &c.pfc.eval_episodes},
      {"pfc.stop_at_criterion", &c.pfc.stop_at_criterion},
      {"pfc.log_every", &c.pfc.log_every},
      {"eval.episodes", &c.eval.episodes},
      {"eval.seed", &c.eval.seed},
      {"eval.max_answer_steps", &c.eval.max_answer_steps},
      {"think.mode", &c.think.mode},
      {"think.noise", &c.think.noise},
      {"think.persistent_state", &c.think.persistent_state},
      {"think.max_completion", &c.think.max_completion},
      {"serve.host", &c.serve.host},
      {"serve.port", &c.serve.port},
      {"serve.checkpoint", &c.serve.checkpoint},
      {"serve.session_ttl_seconds", &c.serve.session_ttl_seconds},
      {"checkpoints.vision", &c.checkpoints.vision},
      {"checkpoints.ips", &c.checkpoints.ips},
      {"checkpoints.pfc", &c.checkpoints.pfc},
  };
}

std::string_view strip(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_unsigned(std::string_view key, std::string_view text) {
  T value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ConfigError("'" + std::string(key) + "' expects a non-negative integer, got '" + std::string(text) + "'");
  }
  return value;
}

double parse_real(std::string_view key, std::string_view text) {
  // std::from_chars for floating point is incomplete in older libstdc++.
  std::string s(text);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty() || !std::isfinite(value)) {
    throw ConfigError("'" + std::string(key) + "' expects a number, got '" + s + "'");
  }
  return value;
}

std::string parse_string(std::string_view key, std::string_view text) {
  if (text.size() >= 2 && text.front() == '"' && text.back() == '"') {
    std::string out;
    for (std::size_t i = 1; i + 1 < text.size(); ++i) {
      if (text[i] == '\\' && i + 2 < text.size()) {
        ++i;
        out.push_back(text[i] == 'n' ? '\n' : text[i]);
      } else {
        out.push_back(text[i]);
      }
    }
    return out;
  }
  if (text.find_first_of(" \t\"=[]") != std::string_view::npos) {
    throw ConfigError("'" + std::string(key) + "' expects a quoted string, got '" + std::string(text) + "'");
  }
  return std::string(text);
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out.push_back('\\');
    out.push_back(ch);
  }
  return out + "\"";
}

std::string format_real(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  std::string s = out.str();
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string format(const Slot& slot) {
  struct Visitor {
    std::string operator()(std::size_t* v) const { return std::to_string(*v); }
    std::string operator()(double* v) const { return format_real(*v); }
    std::string operator()(bool* v) const { return *v ? "true" : "false"; }
    std::string operator()(std::string* v) const { return quote(*v); }
    std::string operator()(std::vector<std::size_t>* v) const {
      std::string s = "[";
      for (std::size_t i = 0; i < v->size(); ++i) s += (i ? ", " : "") + std::to_string((*v)[i]);
      return s + "]";
    }
  };
  return std::visit(Visitor{}, slot);
}

void assign(const Entry& entry, std::string_view text) {
  const std::string& key = entry.key;
  struct Visitor {
    const std::string& key;
    std::string_view text;
    void operator()(std::size_t* v) const { *v = parse_unsigned<std::size_t>(key, text); }
    void operator()(double* v) const { *v = parse_real(key, text); }
    void operator()(bool* v) const {
      if (text == "true") {
        *v = true;
      } else if (text == "false") {
        *v = false;
      } else {
        throw ConfigError("'" + key + "' expects true or false, got '" + std::string(text) + "'");
      }
    }
    void operator()(std::string* v) const { *v = parse_string(key, text); }
    void operator()(std::vector<std::size_t>* v) const {
      if (text.size() < 2 || text.front() != '[' || text.back() != ']') {
        throw ConfigError("'" + key + "' expects an array like [1, 2, 3], got '" + std::string(text) + "'");
      }
      std::vector<std::size_t> out;
      std::string_view body = text.substr(1, text.size() - 2);
      while (!strip(body).empty()) {
        const auto comma = body.find(',');
        out.push_back(parse_unsigned<std::size_t>(key, strip(body.substr(0, comma))));
        body = comma == std::string_view::npos ? std::string_view{} : body.substr(comma + 1);
      }
      *v = std::move(out);
    }
  };
  std::visit(Visitor{key, text}, entry.slot);
}

std::string_view section_of(const std::string& key) {
  const auto dot = key.find('.');
  return dot == std::string::npos ? std::string_view{} : std::string_view(key).substr(0, dot);
}

}  // namespace

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  for (const auto& entry : bind(config)) {
    if (entry.key == key) {
      assign(entry, strip(value));
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void apply_config_text(RunConfig& config, std::string_view text) {
  std::string section;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    // Strip comments outside quoted strings.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line = line.substr(0, i);
        break;
      }
    }
    line = strip(line);
    if (line.empty()) continue;
    try {
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError("unterminated section header");
        section = std::string(strip(line.substr(1, line.size() - 2)));
        if (section.empty()) throw ConfigError("empty section name");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'");
      const std::string key = std::string(strip(line.substr(0, eq)));
      if (key.empty()) throw ConfigError("missing key before '='");
      set_config_value(config, section.empty() ? key : section + "." + key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    apply_config_text(config, text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string config_snapshot(const RunConfig& config) {
  RunConfig copy = config;
  std::ostringstream out;
  out << "# Resolved configuration (defaults, then file, then flags).\n";
  std::string_view current;
  for (const auto& entry : bind(copy)) {
    const std::string_view section = section_of(entry.key);
    if (section != current) {
      out << "\n[" << section << "]\n";
      current = section;
    }
    const std::string_view name = section.empty() ? std::string_view(entry.key) : std::string_view(entry.key).substr(section.size() + 1);
    out << name << " = " << format(entry.slot) << "\n";
  }
  return out.str();
}

std::vector<std::string> config_keys() {
  RunConfig scratch;
  std::vector<std::string> keys;
  for (const auto& e : bind(scratch)) keys.push_back(e.key);
  return keys;
}

void RunConfig::validate(bool check_paths) const {
  if (dims.image != kImagePixels) throw ConfigError("dims.image must be 784 (28x28 images)");
  if (dims.l0 != language::kCodeBits) throw ConfigError("dims.l0 must be 8 (one byte per symbol)");
  if (dims.l1 != 1) throw ConfigError("dims.l1 must be 1 (a scalar quantity)");
  if (dims.v3 == 0 || dims.v4 == 0 || dims.vision_hidden1 == 0 || dims.vision_hidden2 == 0 || dims.ips_hidden == 0 ||
      dims.pfc_hidden == 0) {
    throw ConfigError("layer sizes must be positive");
  }
  if (dims.pfc_input != dims.l0 + dims.l1 + dims.v3 + dims.v4) {
    throw ConfigError("dims.pfc_input is " + std::to_string(dims.pfc_input) + " but l0 + l1 + v3 + v4 = " +
                      std::to_string(dims.l0 + dims.l1 + dims.v3 + dims.v4));
  }
  if (data.source != "synthetic" && data.source != "idx") {
    throw ConfigError("data.source must be \"synthetic\" or \"idx\", got \"" + data.source + "\"");
  }
  if (data.source == "synthetic" && data.synthetic_count == 0) throw ConfigError("data.synthetic_count must be positive");
  if (data.source == "idx") {
    if (data.idx_images.empty() || data.idx_labels.empty()) {
      throw ConfigError("data.source = \"idx\" needs data.idx_images and data.idx_labels");
    }
    if (check_paths) {
      for (const auto& p : {data.idx_images, data.idx_labels}) {
        if (!std::filesystem::exists(p)) throw ConfigError("IDX file not found: " + p);
      }
    }
  }
  if (vision.batch == 0 || ips.batch == 0 || pfc.batch == 0) throw ConfigError("batch sizes must be positive");
  if (!(vision.learning_rate > 0) || !(ips.learning_rate > 0) || !(pfc.learning_rate > 0)) {
    throw ConfigError("learning rates must be positive");
  }
  if (vision.augment < 0 || vision.augment > 1) throw ConfigError("vision.augment must be in [0, 1]");
  if (ips.prefix_probability < 0 || ips.prefix_probability > 1) {
    throw ConfigError("ips.prefix_probability must be in [0, 1]");
  }
  if (pfc.replay < 0 || pfc.replay >= 1) throw ConfigError("pfc.replay must be in [0, 1)");
  if (pfc.stage_steps.size() > 7) throw ConfigError("pfc.stage_steps lists more than 7 stages");
  pfc::parse_criterion_kind(pfc.criterion);
  if (pfc.criterion != "none" && pfc.eval_every == 0) throw ConfigError("pfc.eval_every must be positive");
  pfc::parse_loop_mode(think.mode);
  if (think.noise < 0) throw ConfigError("think.noise must be non-negative");
  if (serve.port > 65535) throw ConfigError("serve.port must be at most 65535");
  if (serve.session_ttl_seconds == 0) throw ConfigError("serve.session_ttl_seconds must be positive");
}

namespace {

std::filesystem::path resolve(const std::string& explicit_path, const std::string& out_dir, const char* name) {
  return explicit_path.empty() ? std::filesystem::path(out_dir) / name : std::filesystem::path(explicit_path);
}

}  // namespace

std::filesystem::path RunConfig::vision_checkpoint() const { return resolve(checkpoints.vision, out_dir, "vision.ckpt"); }
std::filesystem::path RunConfig::ips_checkpoint() const { return resolve(checkpoints.ips, out_dir, "ips.ckpt"); }
std::filesystem::path RunConfig::pfc_checkpoint() const { return resolve(checkpoints.pfc, out_dir, "pfc.ckpt"); }

vision::AutoencoderConfig RunConfig::autoencoder_config() const {
  vision::AutoencoderConfig c;
  c.model = {dims.vision_hidden1, dims.vision_hidden2, dims.v3, dims.v4};
  c.steps = vision.steps;
  c.batch = vision.batch;
  c.adam.learning_rate = static_cast<float>(vision.learning_rate);
  c.seed = seed;
  c.augment_probability = static_cast<float>(vision.augment);
  return c;
}

language::IpsTrainConfig RunConfig::ips_config() const {
  language::IpsTrainConfig c;
  c.model.hidden = dims.ips_hidden;
  c.steps = ips.steps;
  c.batch = ips.batch;
  c.adam.learning_rate = static_cast<float>(ips.learning_rate);
  c.adam.clip_norm = static_cast<float>(ips.clip_norm);
  c.seed = seed;
  c.prefix_probability = static_cast<float>(ips.prefix_probability);
  return c;
}

pfc::PfcConfig RunConfig::pfc_config() const { return {dims.v3, dims.v4, dims.pfc_hidden}; }

pfc::TrainSettings RunConfig::pfc_settings() const {
  pfc::TrainSettings s;
  s.batch = pfc.batch;
  s.adam.learning_rate = static_cast<float>(pfc.learning_rate);
  s.adam.clip_norm = static_cast<float>(pfc.clip_norm);
  s.criterion.kind = pfc::parse_criterion_kind(pfc.criterion);
  s.criterion.threshold = pfc.criterion_threshold;
  s.criterion.eval_every = pfc.eval_every;
  s.criterion.eval_episodes = pfc.eval_episodes;
  s.criterion.stop_when_met = pfc.stop_at_criterion;
  s.log_every = pfc.log_every;
  return s;
}

pfc::StagePlan RunConfig::stage_plan() const {
  pfc::StagePlan plan = pfc::default_stage_plan(pfc.steps_per_stage);
  plan.replay = static_cast<float>(pfc.replay);
  plan.seed = seed;
  for (std::size_t i = 0; i < pfc.stage_steps.size() && i < plan.stages.size(); ++i) {
    if (pfc.stage_steps[i] != 0) plan.stages[i].steps = pfc.stage_steps[i];
  }
  return plan;
}

}  // namespace lgi
