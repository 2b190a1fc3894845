#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "lgi/bundle.hpp"
#include "lgi/config.hpp"
#include "lgi/episode.hpp"
#include "lgi/gateway.hpp"
#include "lgi/thinking.hpp"

namespace lgi::cli {

namespace fs = std::filesystem;
using language::Syntax;

namespace {

/// A required file, port or directory is unavailable (exit code 2).
class DependencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> sets;
  std::optional<int> stage;
  std::string mode;
  std::optional<int> syntax;
  std::optional<std::size_t> steps;
  std::string checkpoint;
  std::string script;
  std::size_t count = 100;
};

struct Io {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

RunConfig resolve_config(const Flags& flags) {
  RunConfig c;
  if (!flags.config.empty()) apply_config_file(c, flags.config);
  for (const auto& kv : flags.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_value(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (flags.seed) c.seed = *flags.seed;
  if (!flags.out.empty()) c.out_dir = flags.out;
  if (!flags.mode.empty()) c.think.mode = flags.mode;
  if (flags.stage && (*flags.stage < 1 || *flags.stage > 7)) throw ConfigError("--stage must be in 1..7");
  if (flags.syntax && (*flags.syntax < 1 || *flags.syntax > language::kSyntaxCount)) {
    throw ConfigError("--syntax must be in 1..8");
  }
  c.validate();
  return c;
}

fs::path prepare_out_dir(const RunConfig& c) {
  const fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DependencyError("cannot create output directory " + dir.string());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  try {
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  } catch (const std::exception& e) {
    throw DependencyError("cannot write " + path.string() + ": " + e.what());
  }
}

void write_snapshot(const RunConfig& c, const std::string& command) {
  write_text(prepare_out_dir(c) / (command + ".config.toml"), config_snapshot(c));
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct TrainingRow {
  std::size_t step = 0;
  std::string stage;
  double loss = NAN;
  double criterion = NAN;
};

std::string training_csv(const std::vector<TrainingRow>& rows) {
  std::string s = "step,stage,loss,criterion_value\n";
  for (const auto& r : rows) {
    s += std::to_string(r.step) + "," + r.stage + "," + csv_number(r.loss) + "," + csv_number(r.criterion) + "\n";
  }
  return s;
}

struct Pools {
  curriculum::DigitPool train;
  curriculum::DigitPool heldout;
};

Pools load_pools(const RunConfig& c) {
  if (c.data.source == "synthetic") {
    return {curriculum::synthetic_pool(c.data.synthetic_count, c.data.synthetic_seed),
            curriculum::synthetic_pool(c.data.heldout_count, c.data.heldout_seed)};
  }
  curriculum::DigitPool all;
  try {
    all = curriculum::load_idx(c.data.idx_images, c.data.idx_labels);
  } catch (const Error& e) {
    throw DependencyError(std::string("cannot load IDX data: ") + e.what());
  }
  const std::size_t held = std::min(c.data.heldout_count, all.size() / 2);
  const std::size_t split = all.size() - held;
  auto part = [&](std::size_t begin, std::size_t end) {
    std::vector<DigitImage> images(all.images().begin() + begin, all.images().begin() + end);
    std::vector<std::uint8_t> labels(all.labels().begin() + begin, all.labels().begin() + end);
    return curriculum::DigitPool(std::move(images), std::move(labels), curriculum::PoolSource::idx_file);
  };
  return {part(0, split), part(split, all.size())};
}

ModelBundle load_checkpoint_file(const fs::path& path, const char* what, const char* producer) {
  if (!fs::exists(path)) {
    throw DependencyError(std::string("missing ") + what + " checkpoint " + path.string() + " (run `lgi " + producer +
                          "` first)");
  }
  try {
    return load_bundle(path);
  } catch (const Error& e) {
    throw DependencyError("cannot load " + path.string() + ": " + e.what());
  }
}

void check_dims(const ModelBundle& b, const RunConfig& c) {
  auto mismatch = [](const std::string& what, std::size_t got, std::size_t want) {
    throw DependencyError("checkpoint/config mismatch: " + what + " is " + std::to_string(got) + " in the checkpoint but " +
                          std::to_string(want) + " in the config");
  };
  if (b.vision) {
    const auto& v = b.vision->config();
    if (v.hidden1 != c.dims.vision_hidden1) mismatch("vision_hidden1", v.hidden1, c.dims.vision_hidden1);
    if (v.hidden2 != c.dims.vision_hidden2) mismatch("vision_hidden2", v.hidden2, c.dims.vision_hidden2);
    if (v.v3 != c.dims.v3) mismatch("v3", v.v3, c.dims.v3);
    if (v.v4 != c.dims.v4) mismatch("v4", v.v4, c.dims.v4);
  }
  if (b.ips && b.ips->hidden() != c.dims.ips_hidden) mismatch("ips_hidden", b.ips->hidden(), c.dims.ips_hidden);
  if (b.pfc && b.pfc->config().hidden != c.dims.pfc_hidden) {
    mismatch("pfc_hidden", b.pfc->config().hidden, c.dims.pfc_hidden);
  }
}

ModelBundle load_trained(const RunConfig& c, const Flags& flags) {
  const fs::path path = flags.checkpoint.empty() ? c.pfc_checkpoint() : fs::path(flags.checkpoint);
  ModelBundle b = load_checkpoint_file(path, "trained", "train-pfc");
  if (!b.vision || !b.ips || !b.pfc) {
    throw DependencyError(path.string() + " does not hold all three models (vision, ips, pfc)");
  }
  check_dims(b, c);
  return b;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

int cmd_train_vision(const Flags& flags, Io io) {
  RunConfig c = resolve_config(flags);
  if (flags.steps) c.vision.steps = *flags.steps;
  write_snapshot(c, "train-vision");
  const auto pools = load_pools(c);
  io.err << "training autoencoder: " << pools.train.size() << " images, " << c.vision.steps << " steps\n";
  const auto t0 = std::chrono::steady_clock::now();
  vision::AutoencoderMetrics metrics;
  ModelBundle b;
  b.vision = vision::train_autoencoder(pools.train, c.autoencoder_config(), &metrics);
  const double heldout = vision::reconstruction_mse(pools.heldout.images(), *b.vision);

  std::vector<TrainingRow> rows;
  for (const auto& [step, loss] : metrics.loss_curve) rows.push_back({step, "vision", loss, NAN});
  rows.push_back({c.vision.steps, "vision", metrics.final_loss, heldout});
  write_text(fs::path(c.out_dir) / "train-vision.csv", training_csv(rows));
  save_bundle(b, c.vision_checkpoint(), {0, "vision", c.vision.steps, c.seed});
  io.out << "vision: final loss " << metrics.final_loss << ", held-out reconstruction MSE " << heldout << " ("
         << seconds_since(t0) << " s)\nwrote " << c.vision_checkpoint().string() << "\n";
  return kOk;
}

int cmd_train_ips(const Flags& flags, Io io) {
  RunConfig c = resolve_config(flags);
  if (flags.steps) c.ips.steps = *flags.steps;
  write_snapshot(c, "train-ips");
  io.err << "training IPS: " << c.ips.steps << " steps\n";
  const auto t0 = std::chrono::steady_clock::now();
  language::IpsMetrics metrics;
  ModelBundle b;
  b.ips = language::train_ips(c.ips_config(), &metrics);
  b.ips->freeze();
  Rng held_rng(c.data.heldout_seed);
  const double exact = language::ips_exact_rate(*b.ips, language::sample_quantity_examples(1000, 0.0f, held_rng));

  std::vector<TrainingRow> rows;
  for (const auto& [step, loss] : metrics.loss_curve) rows.push_back({step, "ips", loss, NAN});
  rows.push_back({c.ips.steps, "ips", metrics.final_loss, exact});
  write_text(fs::path(c.out_dir) / "train-ips.csv", training_csv(rows));
  save_bundle(b, c.ips_checkpoint(), {0, "ips", c.ips.steps, c.seed});
  io.out << "ips: final loss " << metrics.final_loss << ", held-out exact rate " << exact << " (" << seconds_since(t0)
         << " s)\nwrote " << c.ips_checkpoint().string() << "\n";
  return kOk;
}

int cmd_train_pfc(const Flags& flags, Io io) {
  RunConfig c = resolve_config(flags);
  pfc::StagePlan plan = c.stage_plan();
  if (flags.steps) {
    for (auto& s : plan.stages) s.steps = *flags.steps;
  }
  ModelBundle b;
  b.vision = load_checkpoint_file(c.vision_checkpoint(), "vision", "train-vision").vision;
  b.ips = load_checkpoint_file(c.ips_checkpoint(), "IPS", "train-ips").ips;
  if (!b.vision) throw DependencyError(c.vision_checkpoint().string() + " holds no vision model");
  if (!b.ips) throw DependencyError(c.ips_checkpoint().string() + " holds no IPS model");
  check_dims(b, c);
  write_snapshot(c, "train-pfc");

  if (flags.stage && *flags.stage > 1) {
    ModelBundle previous = load_checkpoint_file(c.pfc_checkpoint(), "PFC", "train-pfc --stage <earlier>");
    if (!previous.pfc) throw DependencyError(c.pfc_checkpoint().string() + " holds no PFC model");
    check_dims(previous, c);
    b.pfc = std::move(previous.pfc);
  } else {
    Rng rng(c.seed);
    b.pfc = pfc::PfcModel::init(c.pfc_config(), rng);
  }

  const auto pools = load_pools(c);
  const pfc::TrainContext context{b.perception(), &pools.train, &pools.heldout};
  const pfc::TrainSettings settings = c.pfc_settings();
  std::vector<TrainingRow> rows;
  std::vector<Syntax> seen;
  for (const auto& stage : plan.stages) {
    const bool selected = !flags.stage || *flags.stage == stage.id;
    if (selected) {
      io.err << "stage " << stage.id << " (" << stage.name << "): " << stage.steps << " steps\n";
      const auto t0 = std::chrono::steady_clock::now();
      const auto m = pfc::train_stage(*b.pfc, stage, seen, plan.replay, plan.stage_seed(stage.id), settings, context);
      std::map<std::size_t, TrainingRow> by_step;
      for (const auto& p : m.loss_curve) by_step[p.step] = {p.step, stage.name, p.loss, NAN};
      for (const auto& [step, value] : m.criterion_trace) {
        auto& row = by_step.try_emplace(step, TrainingRow{step, stage.name, NAN, NAN}).first->second;
        row.criterion = value;
      }
      for (auto& [step, row] : by_step) rows.push_back(row);

      const StageMeta meta{stage.id, stage.name, m.steps_run, plan.stage_seed(stage.id)};
      save_bundle(b, fs::path(c.out_dir) / ("pfc_stage" + std::to_string(stage.id) + ".ckpt"), meta);
      save_bundle(b, c.pfc_checkpoint(), meta);
      io.out << "stage " << stage.id << " " << stage.name << ": " << m.steps_run << " steps, loss " << m.initial_loss
             << " -> " << m.final_loss;
      if (settings.criterion.kind != pfc::CriterionKind::none) {
        io.out << ", steps to criterion "
               << (m.steps_to_criterion ? std::to_string(*m.steps_to_criterion) : std::string("not reached"));
      }
      io.out << " (" << seconds_since(t0) << " s)\n";
    }
    for (Syntax s : stage.syntaxes) seen.push_back(s);
  }
  write_text(fs::path(c.out_dir) / "train-pfc.csv", training_csv(rows));
  io.out << "wrote " << c.pfc_checkpoint().string() << "\n";
  return kOk;
}

int stage_of(Syntax s, const pfc::StagePlan& plan) {
  for (const auto& stage : plan.stages) {
    if (std::find(stage.syntaxes.begin(), stage.syntaxes.end(), s) != stage.syntaxes.end()) return stage.id;
  }
  return 0;
}

int cmd_eval(const Flags& flags, Io io) {
  const RunConfig c = resolve_config(flags);
  const ModelBundle b = load_trained(c, flags);
  write_snapshot(c, "eval");
  const auto pools = load_pools(c);
  const pfc::StagePlan plan = c.stage_plan();

  std::vector<Syntax> syntaxes;
  for (int id = 1; id <= language::kSyntaxCount; ++id) {
    const Syntax s = language::syntax_from_id(id);
    if (flags.syntax && *flags.syntax != id) continue;
    if (flags.stage && *flags.stage != stage_of(s, plan)) continue;
    syntaxes.push_back(s);
  }
  pfc::EvalOptions options;
  options.mode = pfc::parse_loop_mode(c.think.mode);
  options.max_answer_steps = c.eval.max_answer_steps;

  std::string csv = "stage,syntax,episodes,completion_accuracy,answer_accuracy,image_mse,image_correlation\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-5s %-16s %8s %10s %8s %9s %8s\n", "stage", "syntax", "episodes", "completion",
                "answer", "image_mse", "corr");
  io.out << line;
  auto cell = [](double v, const char* fmt) {
    char buf[32];
    if (!std::isfinite(v)) return std::string("-");
    std::snprintf(buf, sizeof buf, fmt, v);
    return std::string(buf);
  };
  for (Syntax s : syntaxes) {
    const auto m = pfc::evaluate_syntax(*b.pfc, s, c.eval.episodes, b.perception(), pools.heldout, c.eval.seed, options);
    const int stage = stage_of(s, plan);
    csv += std::to_string(stage) + "," + std::to_string(language::syntax_id(s)) + "," + std::to_string(m.episodes) + "," +
           csv_number(m.completion_accuracy) + "," + csv_number(m.answer_accuracy) + "," + csv_number(m.image_mse) + "," +
           csv_number(m.image_correlation) + "\n";
    const std::string name = std::to_string(language::syntax_id(s)) + " " + std::string(language::syntax_name(s));
    std::snprintf(line, sizeof line, "%-5d %-16s %8zu %10s %8s %9s %8s\n", stage, name.c_str(), m.episodes,
                  cell(m.completion_accuracy, "%.3f").c_str(), cell(m.answer_accuracy, "%.3f").c_str(),
                  cell(m.image_mse, "%.4f").c_str(), cell(m.image_correlation, "%.3f").c_str());
    io.out << line;
  }
  write_text(fs::path(c.out_dir) / "eval.csv", csv);
  return kOk;
}

thinking::SessionOptions session_options(const RunConfig& c) {
  thinking::SessionOptions o;
  o.mode = pfc::parse_loop_mode(c.think.mode);
  o.seed = c.seed;
  o.persistent_state = c.think.persistent_state;
  o.imagination_noise = static_cast<float>(c.think.noise);
  o.max_completion = c.think.max_completion;
  return o;
}

int cmd_think(const Flags& flags, Io io) {
  const RunConfig c = resolve_config(flags);
  const ModelBundle b = load_trained(c, flags);
  write_snapshot(c, "think");
  auto session = thinking::new_session(b, session_options(c));
  const fs::path dir = fs::path(c.out_dir) / "think";

  if (!flags.script.empty()) {
    std::ifstream file(flags.script, std::ios::binary);
    if (!file) throw ConfigError("cannot read script " + flags.script);
    std::ostringstream text;
    text << file.rdbuf();
    std::vector<thinking::ScriptIssue> issues;
    const auto commands = thinking::parse_script(text.str(), &issues);
    for (const auto& issue : issues) {
      io.err << flags.script << ":" << issue.line << ": skipped \"" << issue.text << "\": " << issue.message << "\n";
    }
    for (const auto& command : commands) {
      const auto result = session->issue(command);
      io.out << "> " << command << "\n";
      if (!result.completion.empty()) io.out << result.completion << "\n";
    }
    thinking::write_transcript(*session, dir);
    io.out << "transcript: " << (dir / "transcript.json").string() << " (" << session->transcript().size()
           << " records)\n";
    return kOk;
  }

  io.out << "lgi think (" << pfc::loop_mode_name(session->mode()) << " loop). Type a command, or quit.\n";
  std::string line;
  while (true) {
    io.out << "lgi> " << std::flush;
    if (!std::getline(io.in, line)) break;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (line == "quit" || line == "exit") break;
    try {
      const auto result = session->issue(line);
      const DigitImage shown = session->mode() == pfc::LoopMode::full
                                   ? session->image()
                                   : vision::decode(session->latents().v3, *b.vision);
      io.out << render_ascii(shown);
      if (!result.completion.empty()) io.out << result.completion << "\n";
    } catch (const CodecError& e) {
      io.out << "error: " << e.what() << "\n";
    } catch (const GrammarError& e) {
      io.out << "error: " << e.what() << "\n";
    }
  }
  io.out << "\n";
  thinking::write_transcript(*session, dir);
  return kOk;
}

int cmd_gen_data(const Flags& flags, Io io) {
  const RunConfig c = resolve_config(flags);
  write_snapshot(c, "gen-data");
  const auto pools = load_pools(c);
  for (int id = 1; id <= language::kSyntaxCount; ++id) {
    if (flags.syntax && *flags.syntax != id) continue;
    Rng rng(c.seed ^ (0xD1B54A32D192ED03ULL * static_cast<std::uint64_t>(id)));
    std::vector<curriculum::Episode> episodes;
    episodes.reserve(flags.count);
    for (std::size_t i = 0; i < flags.count; ++i) episodes.push_back(curriculum::make_episode(id, pools.train, rng));
    const fs::path path = fs::path(c.out_dir) / ("episodes_syntax" + std::to_string(id) + ".lgie");
    try {
      curriculum::write_episode_cache(episodes, path);
    } catch (const std::exception& e) {
      throw DependencyError("cannot write " + path.string() + ": " + e.what());
    }
    io.out << "wrote " << episodes.size() << " episodes to " << path.string() << "\n";
  }
  return kOk;
}

int cmd_serve(const Flags& flags, Io io) {
  const RunConfig c = resolve_config(flags);
  Flags resolved = flags;
  if (resolved.checkpoint.empty()) resolved.checkpoint = c.serve.checkpoint;
  ModelBundle b = load_trained(c, resolved);
  write_snapshot(c, "serve");
  gateway::Gateway server({c.serve.host, static_cast<int>(c.serve.port),
                           std::chrono::seconds(c.serve.session_ttl_seconds)});
  server.load_models(std::move(b));
  if (!server.bind()) {
    throw DependencyError("cannot listen on " + c.serve.host + ":" + std::to_string(c.serve.port));
  }
  io.out << "listening on http://" << c.serve.host << ":" << server.port() << std::endl;
  server.serve();
  return kOk;
}

int cmd_alphabet(Io io) {
  for (char ch : language::Alphabet::symbols()) {
    const auto code = language::Alphabet::code_of(ch);
    std::string bits;
    for (float v : code) bits.push_back(v > 0.5f ? '1' : '0');
    char line[64];
    std::snprintf(line, sizeof line, "%-6s 0x%02x %s\n", language::Alphabet::display(ch).c_str(),
                  language::Alphabet::byte_of(ch), bits.c_str());
    io.out << line;
  }
  return kOk;
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "TOML-style config file");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--set", f.sets, "Override a config key (key=value); repeatable");
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Language-guided imagination: training, evaluation and thinking sessions"};
  app.require_subcommand(1);
  Flags f;

  auto* tv = app.add_subcommand("train-vision", "Train the autoencoder");
  add_common(tv, f);
  tv->add_option("--steps", f.steps, "Training steps");

  auto* ti = app.add_subcommand("train-ips", "Train the quantity extractor");
  add_common(ti, f);
  ti->add_option("--steps", f.steps, "Training steps");

  auto* tp = app.add_subcommand("train-pfc", "Train the PFC through the stage plan");
  add_common(tp, f);
  tp->add_option("--stage", f.stage, "Run only this stage (1-7), continuing from the PFC checkpoint");
  tp->add_option("--steps", f.steps, "Steps for every stage");

  auto* ev = app.add_subcommand("eval", "Per-syntax metrics of a trained checkpoint");
  add_common(ev, f);
  ev->add_option("--checkpoint", f.checkpoint, "Checkpoint (default: <out>/pfc.ckpt)");
  ev->add_option("--syntax", f.syntax, "Only this syntax (1-8)");
  ev->add_option("--stage", f.stage, "Only the syntaxes of this stage (1-7)");
  ev->add_option("--mode", f.mode, "Imagination loop: full or shortcut");

  auto* th = app.add_subcommand("think", "Run a thinking session from a script or interactively");
  add_common(th, f);
  th->add_option("--checkpoint", f.checkpoint, "Checkpoint (default: <out>/pfc.ckpt)");
  th->add_option("--script", f.script, "Command script; interactive when omitted");
  th->add_option("--mode", f.mode, "Imagination loop: full or shortcut");

  auto* gd = app.add_subcommand("gen-data", "Write episode cache files");
  add_common(gd, f);
  gd->add_option("--syntax", f.syntax, "Only this syntax (1-8)");
  gd->add_option("--count", f.count, "Episodes per syntax");

  auto* sv = app.add_subcommand("serve", "Run the HTTP session gateway");
  add_common(sv, f);
  sv->add_option("--checkpoint", f.checkpoint, "Checkpoint (default: serve.checkpoint, then <out>/pfc.ckpt)");

  auto* al = app.add_subcommand("alphabet", "Print the symbol codes");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  const Io io{in, out, err};
  try {
    if (tv->parsed()) return cmd_train_vision(f, io);
    if (ti->parsed()) return cmd_train_ips(f, io);
    if (tp->parsed()) return cmd_train_pfc(f, io);
    if (ev->parsed()) return cmd_eval(f, io);
    if (th->parsed()) return cmd_think(f, io);
    if (gd->parsed()) return cmd_gen_data(f, io);
    if (sv->parsed()) return cmd_serve(f, io);
    if (al->parsed()) return cmd_alphabet(io);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DependencyError& e) {
    err << "error: " << e.what() << "\n";
    return kDependencyError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kDependencyError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInvariantError;
  }
  return kInvariantError;
}

}  // namespace lgi::cli
