#include "lgi/transforms.hpp"

#include <cmath>

#include "lgi/errors.hpp"
#include "lgi/grammar.hpp"

namespace lgi::curriculum {

namespace {
constexpr int kSide = static_cast<int>(kImageSide);
constexpr int kLast = kSide - 1;
constexpr float kBandTolerance = 1e-6f;
}  // namespace

DigitImage shift(const DigitImage& img, int dx) {
  if (dx < -kSide || dx > kSide) throw RangeError("shift of " + std::to_string(dx) + " pixels exceeds 28");
  DigitImage out;
  for (int r = 0; r < kSide; ++r) {
    for (int c = 0; c < kSide; ++c) {
      const int src = c - dx;
      if (src >= 0 && src < kSide) out.at(r, c) = img.at(r, src);
    }
  }
  return out;
}

DigitImage rotate(const DigitImage& img, int degrees) {
  DigitImage out;
  for (int r = 0; r < kSide; ++r) {
    for (int c = 0; c < kSide; ++c) {
      const float v = img.at(r, c);
      switch (degrees) {
        case 90: out.at(kLast - c, r) = v; break;
        case 180: out.at(kLast - r, kLast - c) = v; break;
        case 270: out.at(c, kLast - r) = v; break;
        default: throw RangeError("rotation of " + std::to_string(degrees) + " degrees is not supported");
      }
    }
  }
  return out;
}

DigitImage scale(const DigitImage& img, float factor) {
  if (!(factor >= 0.4f && factor <= 2.0f)) throw RangeError("scale factor " + std::to_string(factor) + " outside [0.4, 2]");
  constexpr float kCentre = 13.5f;
  DigitImage out;
  for (int r = 0; r < kSide; ++r) {
    const int sr = static_cast<int>(std::floor(kCentre + (static_cast<float>(r) - kCentre) / factor + 0.5f));
    if (sr < 0 || sr > kLast) continue;
    for (int c = 0; c < kSide; ++c) {
      const int sc = static_cast<int>(std::floor(kCentre + (static_cast<float>(c) - kCentre) / factor + 0.5f));
      if (sc < 0 || sc > kLast) continue;
      out.at(r, c) = img.at(sr, sc);
    }
  }
  return out;
}

std::string_view size_label(float factor) {
  if (factor >= kBigBand[0] - kBandTolerance && factor <= kBigBand[1] + kBandTolerance) return "big";
  if (factor >= kSmallBand[0] - kBandTolerance && factor <= kSmallBand[1] + kBandTolerance) return "small";
  throw RangeError("scale factor " + std::to_string(factor) + " has no size label");
}

std::string_view opposite_size(std::string_view word) {
  if (word == "big") return "small";
  if (word == "small") return "big";
  throw RangeError("not a size word: " + std::string(word));
}

DigitImage random_curriculum_transform(const DigitImage& img, Rng& rng) {
  const float pick = rng.uniform();
  if (pick < 0.3f) return img;
  if (pick < 0.55f) return shift(img, rng.uniform_int(-language::kMaxMove, language::kMaxMove));
  if (pick < 0.7f) return rotate(img, language::kAngles[rng.uniform_int(0, 2)]);
  if (pick < 0.85f) {
    const bool big = rng.bernoulli(0.5f);
    return scale(img, big ? rng.uniform(kBigBand[0], kBigBand[1]) : rng.uniform(kSmallBand[0], kSmallBand[1]));
  }
  const DigitImage turned = rotate(img, language::kAngles[rng.uniform_int(0, 2)]);
  return scale(turned, rng.bernoulli(0.5f) ? kEnlargeFactor : kShrinkFactor);
}

}  // namespace lgi::curriculum
