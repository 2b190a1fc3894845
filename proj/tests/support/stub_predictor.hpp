#pragma once

// Frame predictors with hand-written behaviour, for exercising the thinking
// loop, evaluation and the gateway independently of learning.

#include <condition_variable>
#include <mutex>
#include <string>

#include "lgi/grammar.hpp"
#include "lgi/language.hpp"
#include "lgi/pfc.hpp"
#include "lgi/transforms.hpp"
#include "lgi/vision.hpp"

namespace lgi::testing {

/// Carries out commands with the image-transform oracle instead of a learned
/// PFC. At the final '.' of a sentence it returns V3' = encode(T(image)).v3,
/// where image is the current imagined image and T the commanded transform;
/// after an answer prefix it spells the answer from the tracked digit and size.
class OracleStubPredictor final : public pfc::FramePredictor {
 public:
  OracleStubPredictor(const vision::VisionModel& vision, const curriculum::DigitPool& pool)
      : vision_(&vision), pool_(&pool), blank_v3_(vision::encode(DigitImage::blank(), vision).v3) {}

  void reset() override {
    fed_.clear();
    fresh_ = true;
  }

  pfc::PfcOutput step(const pfc::PfcInput& input) override {
    if (fresh_ && input.v3 == blank_v3_) {
      image_ = DigitImage::blank();
      digit_ = -1;
      size_.clear();
    }
    fresh_ = false;
    pfc::PfcOutput out{language::Alphabet::code_of(language::kPad), input.v3};
    fed_.push_back(language::textize(input.code));
    if (fed_.back() == '.') {
      apply(language::parse_sentence(fed_));
      out.v3 = vision::encode(image_, *vision_).v3;
      image_ = vision::decode(out.v3, *vision_);
      return out;
    }
    using language::Syntax;
    for (auto s : {Syntax::size_is_not, Syntax::size_is, Syntax::this_is}) {
      const std::string prefix = language::answer_prefix(s);
      if (!fed_.starts_with(prefix)) continue;
      const std::string answer = answer_for(s) + ".";
      const std::size_t at = fed_.size() - prefix.size();
      if (at < answer.size()) out.code = language::Alphabet::code_of(answer[at]);
      break;
    }
    return out;
  }

  const DigitImage& tracked_image() const { return image_; }
  int tracked_digit() const { return digit_; }

 private:
  void apply(const language::Command& c) {
    using language::Syntax;
    switch (c.syntax) {
      case Syntax::move_left: image_ = curriculum::shift(image_, -c.number); break;
      case Syntax::move_right: image_ = curriculum::shift(image_, c.number); break;
      case Syntax::give_me:
        image_ = pool_->image(pool_->indices_of(c.number).front());
        digit_ = c.number;
        size_.clear();
        break;
      case Syntax::resize:
        image_ = curriculum::scale(image_, c.word == "enlarge" ? curriculum::kEnlargeFactor : curriculum::kShrinkFactor);
        size_ = c.word == "enlarge" ? "big" : "small";
        break;
      case Syntax::rotate:
        image_ = curriculum::rotate(image_, c.number);
        if (c.number == 180 && (digit_ == 6 || digit_ == 9)) digit_ = 15 - digit_;
        break;
      default: break;
    }
  }

  std::string answer_for(language::Syntax s) const {
    if (s == language::Syntax::this_is) return digit_ < 0 ? "0" : std::to_string(digit_);
    const std::string size = size_.empty() ? "big" : size_;
    if (s == language::Syntax::size_is) return size;
    return std::string(curriculum::opposite_size(size));
  }

  const vision::VisionModel* vision_;
  const curriculum::DigitPool* pool_;
  std::vector<float> blank_v3_;
  DigitImage image_;
  int digit_ = -1;
  std::string size_;
  std::string fed_;
  bool fresh_ = true;
};

/// Echoes its input latents and emits pad; step() blocks while the gate is closed.
class GatedEchoPredictor final : public pfc::FramePredictor {
 public:
  struct Gate {
    std::mutex m;
    std::condition_variable cv;
    bool open = true;
    int waiting = 0;

    void close() {
      std::lock_guard l(m);
      open = false;
    }
    void release() {
      {
        std::lock_guard l(m);
        open = true;
      }
      cv.notify_all();
    }
    /// Blocks until some step() is parked at the gate.
    void wait_for_waiter() {
      std::unique_lock l(m);
      cv.wait(l, [this] { return waiting > 0; });
    }
  };

  explicit GatedEchoPredictor(Gate* gate = nullptr) : gate_(gate) {}

  void reset() override {}

  pfc::PfcOutput step(const pfc::PfcInput& input) override {
    if (gate_) {
      std::unique_lock l(gate_->m);
      ++gate_->waiting;
      gate_->cv.notify_all();
      gate_->cv.wait(l, [this] { return gate_->open; });
      --gate_->waiting;
    }
    return {language::Alphabet::code_of(language::kPad), input.v3};
  }

 private:
  Gate* gate_;
};

}  // namespace lgi::testing
