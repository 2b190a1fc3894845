#pragma once

#include "lgi/image.hpp"
#include "lgi/rng.hpp"

namespace lgi::testing {

/// Random image whose nonzero pixels lie in rows/cols [lo, hi].
inline DigitImage random_box_image(Rng& rng, int lo, int hi, float density = 0.4f) {
  DigitImage img;
  for (int r = lo; r <= hi; ++r) {
    for (int c = lo; c <= hi; ++c) {
      if (rng.bernoulli(density)) img.at(r, c) = rng.uniform(0.05f, 1.0f);
    }
  }
  return img;
}

/// Random image over the whole frame.
inline DigitImage random_image(Rng& rng) { return random_box_image(rng, 0, 27, 0.5f); }

/// Column extent (first, last lit column), or (-1, -1) for a blank image.
inline std::pair<int, int> column_extent(const DigitImage& img) {
  int first = -1, last = -1;
  for (int c = 0; c < 28; ++c) {
    for (int r = 0; r < 28; ++r) {
      if (img.at(r, c) > 0.0f) {
        if (first < 0) first = c;
        last = c;
        break;
      }
    }
  }
  return {first, last};
}

}  // namespace lgi::testing
