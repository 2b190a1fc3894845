#pragma once

#include <string_view>

#include "lgi/image.hpp"
#include "lgi/rng.hpp"

namespace lgi::curriculum {

/// Horizontal translation by dx columns (negative = left). Content pushed past
/// the border is discarded and vacated columns are zero. |dx| <= 28.
DigitImage shift(const DigitImage& img, int dx);

/// Counter-clockwise rotation by 90, 180 or 270 degrees about the image centre.
/// 180 maps (r, c) to (27 - r, 27 - c).
DigitImage rotate(const DigitImage& img, int degrees);

/// Nearest-neighbour rescale about (13.5, 13.5), factor in [0.4, 2.0].
DigitImage scale(const DigitImage& img, float factor);

inline constexpr float kEnlargeFactor = 1.25f;
inline constexpr float kShrinkFactor = 0.8f;
inline constexpr float kBigBand[2] = {1.2f, 1.5f};
inline constexpr float kSmallBand[2] = {0.5f, 0.8f};

/// "big" for factors in [1.2, 1.5], "small" for [0.5, 0.8]; RangeError otherwise.
std::string_view size_label(float factor);
std::string_view opposite_size(std::string_view word);

/// Draws a transform from the same families the curriculum uses (shifts,
/// rotations, band scales, resize factors, and rotate+resize chains).
/// Used to show the autoencoder every kind of image the loop can imagine.
DigitImage random_curriculum_transform(const DigitImage& img, Rng& rng);

}  // namespace lgi::curriculum
