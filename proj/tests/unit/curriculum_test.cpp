#include <gtest/gtest.h>

#include <filesystem>

#include "generators.hpp"
#include "lgi/checkpoint.hpp"
#include "lgi/digits.hpp"
#include "lgi/episode.hpp"
#include "lgi/errors.hpp"
#include "lgi/transforms.hpp"
#include "oracles.hpp"

namespace lgi::curriculum {
namespace {

using language::Syntax;

DigitImage single_pixel(int r, int c) {
  DigitImage img;
  img.at(r, c) = 1.0f;
  return img;
}

TEST(Transforms, ShiftMovesColumns) {
  EXPECT_EQ(shift(single_pixel(10, 10), -3), single_pixel(10, 7));
  Rng rng(1);
  const auto img = testing::random_image(rng);
  EXPECT_EQ(shift(img, 0), img);
  EXPECT_EQ(shift(img, 28), DigitImage::blank());
  EXPECT_THROW(shift(img, 29), RangeError);
  EXPECT_THROW(shift(img, -29), RangeError);
}

TEST(Transforms, ShiftClipsInsteadOfWrapping) {
  const DigitImage img = single_pixel(5, 25);
  EXPECT_EQ(shift(img, 3), DigitImage::blank());
  EXPECT_EQ(shift(shift(img, 3), -3), DigitImage::blank());
}

TEST(Transforms, ShiftIsAdditiveAwayFromBorders) {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const auto img = testing::random_box_image(rng, 9, 18);
    const int a = rng.uniform_int(-4, 4), b = rng.uniform_int(-4, 4);
    ASSERT_EQ(shift(shift(img, a), b), shift(img, a + b)) << "a=" << a << " b=" << b;
  }
}

TEST(Transforms, RotateFormulas) {
  EXPECT_EQ(rotate(single_pixel(10, 7), 180), single_pixel(17, 20));
  // Counter-clockwise quarter turn: the top-right corner moves to the top-left.
  EXPECT_EQ(rotate(single_pixel(0, 27), 90), single_pixel(0, 0));
  EXPECT_EQ(rotate(single_pixel(0, 27), 270), single_pixel(27, 27));
  EXPECT_THROW(rotate(DigitImage{}, 45), RangeError);
}

TEST(Transforms, RotationAlgebra) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto img = testing::random_image(rng);
    ASSERT_EQ(rotate(rotate(img, 180), 180), img);
    ASSERT_EQ(rotate(rotate(rotate(rotate(img, 90), 90), 90), 90), img);
    ASSERT_EQ(rotate(rotate(img, 90), 90), rotate(img, 180));
    ASSERT_EQ(rotate(rotate(img, 90), 270), img);
  }
}

TEST(Transforms, ScaleIdentityAndRange) {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto img = testing::random_image(rng);
    ASSERT_EQ(scale(img, 1.0f), img);
  }
  EXPECT_THROW(scale(DigitImage{}, 0.3f), RangeError);
  EXPECT_THROW(scale(DigitImage{}, 2.1f), RangeError);
}

TEST(Transforms, ScaleDoublesCentredBlob) {
  DigitImage blob;
  for (int r = 12; r <= 15; ++r) {
    for (int c = 12; c <= 15; ++c) blob.at(r, c) = 1.0f;
  }
  const auto [first, last] = testing::column_extent(scale(blob, 2.0f));
  EXPECT_NEAR(last - first + 1, 8, 1);
}

TEST(Transforms, ShrunkConstantFieldStaysConstant) {
  DigitImage flat;
  flat.pixels.fill(0.5f);
  for (float f : {0.5f, 0.8f, 1.0f}) {
    const auto out = scale(flat, f);
    for (float v : out.pixels) ASSERT_TRUE(v == 0.0f || v == 0.5f);
    EXPECT_EQ(out.at(14, 14), 0.5f);
  }
}

TEST(Transforms, SizeLabels) {
  EXPECT_EQ(size_label(1.3f), "big");
  EXPECT_EQ(size_label(0.6f), "small");
  EXPECT_EQ(size_label(1.2f), "big");
  EXPECT_EQ(size_label(0.8f), "small");
  EXPECT_THROW(size_label(1.0f), RangeError);
  EXPECT_EQ(opposite_size("big"), "small");
  EXPECT_THROW(opposite_size("huge"), RangeError);
}

TEST(Glyphs, DeterministicInSeed) {
  Rng a(9), b(9);
  for (int d = 0; d < 10; ++d) EXPECT_EQ(synth_glyph(d, a), synth_glyph(d, b));
}

TEST(Glyphs, SupportInsideCentralBoxAndLit) {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    for (int d = 0; d < 10; ++d) {
      const auto img = synth_glyph(d, rng);
      ASSERT_TRUE(img.valid());
      EXPECT_GE(img.lit_pixels(), 30u) << "digit " << d;
      for (int r = 0; r < 28; ++r) {
        for (int c = 0; c < 28; ++c) {
          if (r < 4 || r > 23 || c < 4 || c > 23) {
            ASSERT_EQ(img.at(r, c), 0.0f);
          }
        }
      }
    }
  }
}

TEST(Glyphs, OneIsNarrowerThanZero) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto [z0, z1] = testing::column_extent(synth_glyph(0, rng));
    const auto [o0, o1] = testing::column_extent(synth_glyph(1, rng));
    EXPECT_LT(o1 - o0, z1 - z0);
  }
}

TEST(Glyphs, ClassesAreSeparable) {
  const auto train = synthetic_pool(2000, 1);
  const auto test = synthetic_pool(500, 2);
  const testing::NearestCentroid classifier(train);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) correct += classifier.predict(test.image(i)) == test.label(i);
  EXPECT_GT(static_cast<double>(correct) / test.size(), 0.9);
}

TEST(DigitPool, LabelsCycleAndIndex) {
  const auto pool = synthetic_pool(100, 3);
  EXPECT_EQ(pool.size(), 100u);
  EXPECT_EQ(pool.provenance(), PoolSource::synthetic);
  for (std::size_t i = 0; i < pool.size(); ++i) EXPECT_EQ(pool.label(i), static_cast<int>(i % 10));
  EXPECT_EQ(pool.indices_of(7).size(), 10u);
  Rng rng(1);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(pool.label(pool.sample_index_of(4, rng)), 4);
  EXPECT_EQ(pool.head(5).size(), 5u);
  const DigitPool only_ones({DigitImage{}}, {1}, PoolSource::synthetic);
  EXPECT_THROW(only_ones.sample_index_of(3, rng), RangeError);
}

TEST(Idx, RoundTripThroughFiles) {
  const auto pool = synthetic_pool(30, 4);
  const auto images = encode_idx_images(pool.images());
  const auto labels = encode_idx_labels(pool.labels());
  EXPECT_EQ(images[2], 0x08);
  EXPECT_EQ(images[3], 0x03);
  EXPECT_EQ(labels[3], 0x01);
  const auto dir = std::filesystem::temp_directory_path() / "lgi_idx_test";
  std::filesystem::create_directories(dir);
  write_file_bytes(dir / "img.idx", images);
  write_file_bytes(dir / "lbl.idx", labels);
  const auto loaded = load_idx(dir / "img.idx", dir / "lbl.idx");
  ASSERT_EQ(loaded.size(), 30u);
  EXPECT_EQ(loaded.provenance(), PoolSource::idx_file);
  for (std::size_t i = 0; i < 30; ++i) {
    EXPECT_EQ(loaded.label(i), pool.label(i));
    for (std::size_t p = 0; p < kImagePixels; ++p) {
      ASSERT_FLOAT_EQ(loaded.image(i).pixels[p], to_byte(pool.image(i).pixels[p]) / 255.0f);
    }
  }
  std::filesystem::remove_all(dir);
}

TEST(Idx, RejectsCorruptInput) {
  const auto pool = synthetic_pool(10, 5);
  auto images = encode_idx_images(pool.images());
  auto labels = encode_idx_labels(pool.labels());

  auto bad_magic = images;
  bad_magic[3] = 0x01;
  EXPECT_THROW(decode_idx(bad_magic, labels), FormatError);

  auto truncated = images;
  truncated.resize(truncated.size() - 10);
  EXPECT_THROW(decode_idx(truncated, labels), FormatError);

  const auto fewer = encode_idx_labels({1, 2, 3});
  EXPECT_THROW(decode_idx(images, fewer), ConsistencyError);

  auto bad_label = labels;
  bad_label.back() = 12;
  EXPECT_THROW(decode_idx(images, bad_label), Error);

  EXPECT_EQ(decode_idx(images, labels).label(7), 7);
}

TEST(Episodes, SchemaForEverySyntax) {
  const auto pool = synthetic_pool(200, 6);
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const int id = 1 + i % 8;
    const Episode ep = make_episode(id, pool, rng);
    ASSERT_EQ(language::syntax_id(ep.syntax), id);
    const std::string s = ep.sentence();
    ASSERT_EQ(ep.text_length(), s.size());
    ASSERT_EQ(ep.frames.back().symbol, kPadSymbol);
    const auto cmd = language::parse_sentence(s);
    ASSERT_EQ(cmd.syntax, ep.syntax);
    ASSERT_EQ(ep.outcome(), outcome_image(ep.params, pool));
    for (std::size_t t = 0; t < ep.text_length(); ++t) ASSERT_EQ(ep.frames[t].image, visible_image(ep.params, pool));
    switch (ep.syntax) {
      case Syntax::move_left:
        ASSERT_EQ(ep.outcome(), shift(pool.image(ep.params.source_index), -ep.params.amount));
        ASSERT_EQ(language::quantity_oracle(s), ep.params.amount);
        break;
      case Syntax::move_right:
        ASSERT_EQ(ep.outcome(), shift(pool.image(ep.params.source_index), ep.params.amount));
        ASSERT_EQ(language::quantity_oracle(s), ep.params.amount);
        break;
      case Syntax::this_is:
        ASSERT_EQ(cmd.number, ep.source_label);
        ASSERT_EQ(ep.outcome(), ep.frames.front().image);
        break;
      case Syntax::size_is:
        ASSERT_EQ(cmd.word, size_label(ep.params.scale_factor));
        break;
      case Syntax::size_is_not:
        ASSERT_EQ(cmd.word, opposite_size(size_label(ep.params.scale_factor)));
        break;
      case Syntax::give_me:
        ASSERT_EQ(ep.frames.front().image, DigitImage::blank());
        ASSERT_EQ(ep.source_label, ep.params.amount);
        ASSERT_EQ(language::quantity_oracle(s), ep.params.amount);
        break;
      case Syntax::resize:
        ASSERT_EQ(ep.outcome(), scale(pool.image(ep.params.source_index), ep.params.scale_factor));
        break;
      case Syntax::rotate:
        ASSERT_EQ(ep.outcome(), rotate(pool.image(ep.params.source_index), ep.params.amount));
        ASSERT_EQ(language::quantity_oracle(s), ep.params.amount);
        break;
    }
  }
}

TEST(Episodes, ExamplesFromParameters) {
  const auto pool = synthetic_pool(100, 8);
  EpisodeParams p{Syntax::move_left, 3, 12, 1.0f};
  const Episode ep = build_episode(p, pool);
  EXPECT_EQ(ep.sentence(), "move left 12.");
  EXPECT_EQ(ep.outcome(), shift(pool.image(3), -12));

  p = {Syntax::give_me, pool.indices_of(9).front(), 9, 1.0f};
  EXPECT_EQ(build_episode(p, pool).sentence(), "give me a 9.");

  p = {Syntax::size_is_not, 0, 0, 1.3f};
  EXPECT_EQ(build_episode(p, pool).sentence(), "the size is not small.");

  p = {Syntax::resize, 0, 0, kShrinkFactor};
  EXPECT_EQ(build_episode(p, pool).sentence(), "shrink.");

  Rng rng(1);
  EXPECT_THROW(make_episode(9, pool, rng), RangeError);
  EXPECT_THROW(make_episode(1, DigitPool{}, rng), ContractError);
}

TEST(Episodes, DeterministicInSeed) {
  const auto pool = synthetic_pool(100, 9);
  Rng a(3), b(3);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(make_episode(1 + i % 8, pool, a), make_episode(1 + i % 8, pool, b));
}

TEST(EpisodeCache, RoundTripAndMagic) {
  const auto pool = synthetic_pool(100, 10);
  Rng rng(4);
  std::vector<Episode> eps;
  for (int i = 0; i < 100; ++i) eps.push_back(make_episode(1, pool, rng));
  const auto bytes = encode_episodes(eps);
  ASSERT_GE(bytes.size(), 9u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "LGIE");
  EXPECT_EQ(bytes[4], kEpisodeCacheVersion);
  EXPECT_EQ(bytes[5] | bytes[6] << 8 | bytes[7] << 16 | bytes[8] << 24, 100);

  const auto back = decode_episodes(bytes);
  ASSERT_EQ(back.size(), eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    EXPECT_EQ(back[i].syntax, eps[i].syntax);
    EXPECT_EQ(back[i].frames, eps[i].frames);
    EXPECT_EQ(back[i].source_label, eps[i].source_label);
  }

  auto corrupt = bytes;
  corrupt[0] = 'X';
  EXPECT_THROW(decode_episodes(corrupt), FormatError);
  corrupt = bytes;
  corrupt.resize(corrupt.size() / 2);
  EXPECT_THROW(decode_episodes(corrupt), FormatError);
}

}  // namespace
}  // namespace lgi::curriculum
