#include "lgi/episode.hpp"

#include <bit>
#include <cstring>

#include "lgi/checkpoint.hpp"
#include "lgi/errors.hpp"
#include "lgi/transforms.hpp"

namespace lgi::curriculum {

using language::Command;

std::string Episode::sentence() const {
  std::string s;
  for (std::size_t t = 0; t < text_length(); ++t) s.push_back(frames[t].symbol);
  return s;
}

EpisodeParams sample_params(Syntax syntax, const DigitPool& pool, Rng& rng) {
  if (pool.empty()) throw ContractError("make_episode: digit pool is empty");
  EpisodeParams p;
  p.syntax = syntax;
  switch (syntax) {
    case Syntax::move_left:
    case Syntax::move_right:
      p.source_index = pool.sample_index(rng);
      p.amount = rng.uniform_int(0, language::kMaxMove);
      break;
    case Syntax::this_is:
      p.source_index = pool.sample_index(rng);
      break;
    case Syntax::size_is:
    case Syntax::size_is_not:
      p.source_index = pool.sample_index(rng);
      p.scale_factor = rng.bernoulli(0.5f) ? rng.uniform(kBigBand[0], kBigBand[1])
                                           : rng.uniform(kSmallBand[0], kSmallBand[1]);
      break;
    case Syntax::give_me:
      p.amount = rng.uniform_int(0, 9);
      p.source_index = pool.sample_index_of(p.amount, rng);
      break;
    case Syntax::resize:
      p.source_index = pool.sample_index(rng);
      p.scale_factor = rng.bernoulli(0.5f) ? kEnlargeFactor : kShrinkFactor;
      break;
    case Syntax::rotate:
      p.source_index = pool.sample_index(rng);
      p.amount = language::kAngles[rng.uniform_int(0, 2)];
      break;
  }
  return p;
}

std::string sentence_for(const EpisodeParams& p, const DigitPool& pool) {
  Command c{p.syntax, p.amount, {}};
  switch (p.syntax) {
    case Syntax::this_is:
      c.number = pool.label(p.source_index);
      break;
    case Syntax::size_is:
      c.word = std::string(size_label(p.scale_factor));
      break;
    case Syntax::size_is_not:
      c.word = std::string(opposite_size(size_label(p.scale_factor)));
      break;
    case Syntax::resize:
      if (p.scale_factor == kEnlargeFactor) {
        c.word = "enlarge";
      } else if (p.scale_factor == kShrinkFactor) {
        c.word = "shrink";
      } else {
        throw RangeError("resize factor must be 1.25 or 0.8");
      }
      break;
    default:
      break;
  }
  return language::render(c);
}

DigitImage visible_image(const EpisodeParams& p, const DigitPool& pool) {
  switch (p.syntax) {
    case Syntax::give_me:
      return DigitImage::blank();
    case Syntax::size_is:
    case Syntax::size_is_not:
      return scale(pool.image(p.source_index), p.scale_factor);
    default:
      return pool.image(p.source_index);
  }
}

DigitImage outcome_image(const EpisodeParams& p, const DigitPool& pool) {
  const DigitImage& src = pool.image(p.source_index);
  switch (p.syntax) {
    case Syntax::move_left: return shift(src, -p.amount);
    case Syntax::move_right: return shift(src, p.amount);
    case Syntax::this_is: return src;
    case Syntax::size_is:
    case Syntax::size_is_not: return scale(src, p.scale_factor);
    case Syntax::give_me: return src;
    case Syntax::resize: return scale(src, p.scale_factor);
    case Syntax::rotate: return rotate(src, p.amount);
  }
  throw ContractError("outcome_image: unknown syntax");
}

Episode build_episode(const EpisodeParams& params, const DigitPool& pool) {
  if (params.source_index >= pool.size()) throw RangeError("episode source index outside the pool");
  Episode ep;
  ep.syntax = params.syntax;
  ep.params = params;
  ep.source_label = pool.label(params.source_index);
  const std::string text = sentence_for(params, pool);
  const DigitImage visible = visible_image(params, pool);
  ep.frames.reserve(text.size() + 1);
  for (char ch : text) ep.frames.push_back({ch, visible});
  ep.frames.push_back({kPadSymbol, outcome_image(params, pool)});
  return ep;
}

Episode make_episode(Syntax syntax, const DigitPool& pool, Rng& rng) {
  return build_episode(sample_params(syntax, pool, rng), pool);
}

Episode make_episode(int syntax_id, const DigitPool& pool, Rng& rng) {
  return make_episode(language::syntax_from_id(syntax_id), pool, rng);
}

// ---------------------------------------------------------------------------
// Cache files

namespace {

constexpr char kMagic[4] = {'L', 'G', 'I', 'E'};
static_assert(std::endian::native == std::endian::little, "episode cache assumes a little-endian host");

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) const {
    if (pos_ + n > bytes_.size()) throw FormatError(std::string("episode cache truncated in ") + what, pos_);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  void floats(std::span<float> out, const char* what) {
    need(out.size_bytes(), what);
    std::memcpy(out.data(), bytes_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_episodes(std::span<const Episode> episodes) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(kEpisodeCacheVersion);
  put_u32(out, static_cast<std::uint32_t>(episodes.size()));
  for (const auto& ep : episodes) {
    out.push_back(static_cast<std::uint8_t>(language::syntax_id(ep.syntax)));
    out.push_back(static_cast<std::uint8_t>(ep.source_label));
    put_u32(out, static_cast<std::uint32_t>(ep.frames.size()));
    for (const auto& f : ep.frames) {
      out.push_back(static_cast<std::uint8_t>(f.symbol));
      const auto* raw = reinterpret_cast<const std::uint8_t*>(f.image.pixels.data());
      out.insert(out.end(), raw, raw + kImagePixels * sizeof(float));
    }
  }
  return out;
}

std::vector<Episode> decode_episodes(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  in.need(4, "magic");
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) throw FormatError("bad episode cache magic", 0);
  (void)in.u32("magic");
  const std::uint8_t version = in.u8("version");
  if (version != kEpisodeCacheVersion) throw FormatError("unsupported episode cache version", 4);
  const std::uint32_t count = in.u32("episode count");
  std::vector<Episode> episodes;
  episodes.reserve(count);
  for (std::uint32_t e = 0; e < count; ++e) {
    Episode ep;
    const std::size_t at = in.pos();
    const int id = in.u8("syntax id");
    if (id < 1 || id > language::kSyntaxCount) throw FormatError("episode syntax id out of range", at);
    ep.syntax = language::syntax_from_id(id);
    ep.params.syntax = ep.syntax;
    ep.source_label = in.u8("label");
    const std::uint32_t frames = in.u32("frame count");
    ep.frames.resize(frames);
    for (auto& f : ep.frames) {
      f.symbol = static_cast<char>(in.u8("frame symbol"));
      in.floats(f.image.pixels, "frame pixels");
    }
    episodes.push_back(std::move(ep));
  }
  if (!in.done()) throw FormatError("trailing bytes after episode cache", in.pos());
  return episodes;
}

void write_episode_cache(std::span<const Episode> episodes, const std::filesystem::path& path) {
  write_file_bytes(path, encode_episodes(episodes));
}

std::vector<Episode> read_episode_cache(const std::filesystem::path& path) {
  return decode_episodes(read_file_bytes(path));
}

}  // namespace lgi::curriculum
