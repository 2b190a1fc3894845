#include "lgi/thinking.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <json.hpp>

#include "lgi/grammar.hpp"

namespace lgi::thinking {

CommandKind classify_command(std::string_view text) {
  language::validate_text(text);
  if (text.empty()) throw GrammarError("empty command");
  if (text == kCloseEyes || text == kCloseEyes.substr(0, kCloseEyes.size() - 1)) return CommandKind::directive;
  try {
    language::parse_sentence(text);
    return CommandKind::sentence;
  } catch (const GrammarError&) {
    if (text.back() != '.' && language::is_sentence_prefix(text)) return CommandKind::answer_prefix;
    throw;
  }
}

Session::Session(pfc::Perception perception, std::unique_ptr<pfc::FramePredictor> predictor, SessionOptions options)
    : perception_(perception), predictor_(std::move(predictor)), options_(options), rng_(options.seed) {
  perception_.require();
  if (!predictor_) throw ContractError("session needs a frame predictor");
  close_eyes();
}

void Session::close_eyes() {
  image_ = DigitImage::blank();
  latents_ = vision::encode(image_, *perception_.vision);
  ++ops_.encode;
  predictor_->reset();
}

ThoughtResult Session::issue(std::string_view text) {
  std::unique_lock lock(busy_, std::try_to_lock);
  if (!lock.owns_lock()) throw SessionBusy();
  const CommandKind kind = classify_command(text);
  ThoughtResult result = run(text, kind);
  transcript_.push_back({transcript_.size(), std::string(text), result.completion, image_});
  return result;
}

ThoughtResult Session::run(std::string_view text, CommandKind kind) {
  ThoughtResult result;
  if (kind == CommandKind::directive) {
    close_eyes();
    result.image_after = image_;
    result.latents = latents_;
    return result;
  }

  const auto& vis = *perception_.vision;
  if (!options_.persistent_state) predictor_->reset();
  if (kind == CommandKind::answer_prefix) {
    pfc::FreeRunOptions run_options{options_.max_completion, options_.mode, '.', false};
    const auto run = pfc::free_run(*predictor_, perception_, text, latents_, run_options);
    ops_.encode += run.ops.encode;
    ops_.decode += run.ops.decode;
    ops_.v3_to_v4 += run.ops.v3_to_v4;
    fed_.append(text);
    result.completion = run.text('.');
    result.image_after = image_;
    result.latents = latents_;
    return result;
  }

  std::string sentence(text);
  if (sentence.back() != '.') sentence.push_back('.');
  language::IpsStream ips(*perception_.ips);
  pfc::PfcOutput last;
  for (char ch : sentence) {
    const auto code = language::Alphabet::code_of(ch);
    last = predictor_->step({code, ips.push(code), latents_.v3, latents_.v4});
  }
  fed_.append(sentence);

  std::vector<float> v3 = std::move(last.v3);
  if (options_.imagination_noise > 0.0f) {
    for (auto& v : v3) v = std::clamp(v + options_.imagination_noise * rng_.normal(), -0.999f, 0.999f);
  }
  if (options_.mode == LoopMode::full) {
    image_ = vision::decode(v3, vis);
    ++ops_.decode;
    latents_ = vision::encode(image_, vis);
    ++ops_.encode;
  } else {
    latents_.v4 = vision::v3_to_v4(v3, vis);
    ++ops_.v3_to_v4;
    latents_.v3 = std::move(v3);
  }
  result.image_after = image_;
  result.latents = latents_;
  return result;
}

const DigitImage& Session::refresh_image() {
  std::unique_lock lock(busy_, std::try_to_lock);
  if (!lock.owns_lock()) throw SessionBusy();
  image_ = vision::decode(latents_.v3, *perception_.vision);
  ++ops_.decode;
  return image_;
}

std::unique_ptr<Session> new_session(const ModelBundle& models, SessionOptions options) {
  if (!models.vision) throw ContractError("new_session: vision model missing");
  if (!models.ips) throw ContractError("new_session: IPS model missing");
  if (!models.pfc) throw ContractError("new_session: PFC model missing");
  return std::make_unique<Session>(models.perception(), std::make_unique<pfc::PfcPredictor>(*models.pfc), options);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  return s;
}

std::string_view trim_end(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n' || s.back() == '\t')) s.remove_suffix(1);
  // Spaces are significant in answer prefixes ("this is "), but not after a full stop.
  if (const auto dot = s.find_last_of('.'); dot != std::string_view::npos) {
    if (s.find_first_not_of(' ', dot + 1) == std::string_view::npos) s = s.substr(0, dot + 1);
  }
  return s;
}

}  // namespace

std::vector<std::string> parse_script(std::string_view script, std::vector<ScriptIssue>* issues) {
  std::vector<std::string> commands;
  std::size_t line_no = 0;
  while (!script.empty()) {
    const auto nl = script.find('\n');
    std::string_view line = script.substr(0, nl);
    script = nl == std::string_view::npos ? std::string_view{} : script.substr(nl + 1);
    ++line_no;
    line = trim_end(trim(line));
    if (line.empty() || line.front() == '#') continue;
    try {
      classify_command(line);
      commands.emplace_back(line);
    } catch (const Error& e) {
      if (issues) issues->push_back({line_no, std::string(line), e.what()});
    }
  }
  return commands;
}

std::vector<ThoughtResult> run_script(Session& session, const std::vector<std::string>& commands) {
  std::vector<ThoughtResult> results;
  results.reserve(commands.size());
  for (const auto& c : commands) results.push_back(session.issue(c));
  return results;
}

std::string frame_file_name(std::size_t index, std::string_view command) {
  std::string slug;
  for (char ch : command) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      slug.push_back(ch);
    } else if (!slug.empty() && slug.back() != '-') {
      slug.push_back('-');
    }
  }
  while (!slug.empty() && slug.back() == '-') slug.pop_back();
  if (slug.empty()) slug = "frame";
  char prefix[32];
  std::snprintf(prefix, sizeof prefix, "%02zu_", index);
  return prefix + slug + ".pgm";
}

std::string transcript_json(const Session& session) {
  nlohmann::ordered_json doc;
  doc["mode"] = std::string(pfc::loop_mode_name(session.mode()));
  doc["seed"] = session.options().seed;
  doc["persistent_state"] = session.options().persistent_state;
  doc["imagination_noise"] = session.options().imagination_noise;
  auto& records = doc["records"] = nlohmann::ordered_json::array();
  for (const auto& r : session.transcript()) {
    records.push_back({{"index", r.index},
                       {"command", r.command},
                       {"completion", r.completion},
                       {"frame", frame_file_name(r.index, r.command)}});
  }
  return doc.dump(2) + "\n";
}

void write_transcript(const Session& session, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& r : session.transcript()) write_pgm(r.image, dir / frame_file_name(r.index, r.command));
  const std::string json = transcript_json(session);
  write_file_bytes(dir / "transcript.json",
                   std::span(reinterpret_cast<const std::uint8_t*>(json.data()), json.size()));
}

}  // namespace lgi::thinking
