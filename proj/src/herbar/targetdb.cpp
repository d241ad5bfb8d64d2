#include "herbar/targetdb.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace herbar {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'H', 'R', 'B', '1'};
constexpr std::size_t kHeaderSize = 16;
constexpr std::size_t kCrcSize = 4;
constexpr std::size_t kKeypointRecord = 17;

static_assert(std::endian::native == std::endian::little, "serializer assumes a little-endian host");

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_string16(const std::string& s) {
    if (s.size() > 0xFFFF) throw Error(ErrorCode::InvalidArgument, "string too long for database field");
    put(static_cast<std::uint16_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void put_bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t>& buffer() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

// Bounds-checked little-endian reader; running off the end throws TruncatedFile.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string16() {
    const auto n = get<std::uint16_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void get_bytes(std::span<std::uint8_t> out) {
    need(out.size());
    std::memcpy(out.data(), bytes_.data() + pos_, out.size());
    pos_ += out.size();
  }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }
  std::size_t position() const noexcept { return pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::TruncatedFile, "database file is truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

Target read_target(Reader& r) {
  Target t;
  t.id = r.get<std::uint32_t>();
  t.name = r.get_string16();
  t.image_width = static_cast<int>(r.get<std::uint32_t>());
  t.image_height = static_cast<int>(r.get<std::uint32_t>());
  const auto n = r.get<std::uint32_t>();
  t.features.width = t.image_width;
  t.features.height = t.image_height;
  t.features.keypoints.reserve(std::min<std::size_t>(n, 1u << 20));
  for (std::uint32_t i = 0; i < n; ++i) {
    Keypoint kp;
    kp.x = r.get<float>();
    kp.y = r.get<float>();
    kp.level = r.get<std::uint8_t>();
    kp.angle = r.get<float>();
    kp.score = r.get<float>();
    t.features.keypoints.push_back(kp);
  }
  t.features.descriptors.resize(n);
  for (auto& d : t.features.descriptors) r.get_bytes(d.bytes);
  t.content_id = r.get_string16();
  return t;
}

// Walks the target records without checksum verification.
std::vector<Target> read_targets(std::span<const std::uint8_t> payload, std::uint32_t count) {
  Reader r(payload);
  r.skip(kHeaderSize);
  std::vector<Target> targets;
  for (std::uint32_t i = 0; i < count; ++i) targets.push_back(read_target(r));
  if (r.position() != payload.size()) throw Error(ErrorCode::TruncatedFile, "database payload has trailing bytes");
  return targets;
}

}  // namespace

const Target* TargetDatabase::find(std::uint32_t id) const noexcept {
  auto it = std::lower_bound(targets_.begin(), targets_.end(), id,
                             [](const Target& t, std::uint32_t v) { return t.id < v; });
  return (it != targets_.end() && it->id == id) ? &*it : nullptr;
}

const Target* TargetDatabase::find_by_name(std::string_view name) const noexcept {
  auto it = std::find_if(targets_.begin(), targets_.end(), [&](const Target& t) { return t.name == name; });
  return it != targets_.end() ? &*it : nullptr;
}

void TargetDatabase::add(Target target) {
  if (target.name.empty()) throw Error(ErrorCode::InvalidArgument, "target name must be non-empty");
  if (!targets_.empty() && target.id <= targets_.back().id) {
    throw Error(ErrorCode::InvalidArgument, "target ids must be strictly increasing");
  }
  if (find_by_name(target.name)) throw Error(ErrorCode::DuplicateName, "duplicate target name: " + target.name);
  if (target.features.keypoints.size() != target.features.descriptors.size()) {
    throw Error(ErrorCode::InvalidArgument, "keypoint and descriptor counts differ");
  }
  targets_.push_back(std::move(target));
}

QualityRating rate_features(const FeatureSet& features, int image_width, int image_height) {
  constexpr int kGrid = 8;
  std::array<bool, kGrid * kGrid> occupied{};
  for (const Keypoint& kp : features.keypoints) {
    const int cx = std::clamp(static_cast<int>(kp.x * kGrid / image_width), 0, kGrid - 1);
    const int cy = std::clamp(static_cast<int>(kp.y * kGrid / image_height), 0, kGrid - 1);
    occupied[cy * kGrid + cx] = true;
  }
  QualityRating r;
  r.keypoint_count = static_cast<int>(features.size());
  r.spread = static_cast<double>(std::count(occupied.begin(), occupied.end(), true)) / (kGrid * kGrid);
  const int raw = r.keypoint_count / 100 + static_cast<int>(std::floor(r.spread * 4));
  r.stars = std::clamp(raw, 0, 5);
  return r;
}

Target register_target(const TargetDatabase& db, const std::string& name, const std::string& content_id,
                       const ColorImage& img, const RegisterParams& params) {
  if (name.empty()) throw Error(ErrorCode::InvalidArgument, "target name must be non-empty");
  if (img.width() < 64 || img.height() < 64) throw Error(ErrorCode::ImageTooSmall, "target image must be >= 64x64");
  if (db.find_by_name(name)) throw Error(ErrorCode::DuplicateName, "duplicate target name: " + name);

  Target t;
  t.id = db.next_id();
  t.name = name;
  t.content_id = content_id;
  t.image_width = img.width();
  t.image_height = img.height();
  t.features = extract(to_grayscale(img), params.extract);
  if (static_cast<int>(t.features.size()) < params.min_keypoints) {
    const QualityRating rating = rate_target(t);
    throw TooFewFeatures("target '" + name + "' has " + std::to_string(rating.keypoint_count) +
                             " keypoints, need " + std::to_string(params.min_keypoints),
                         rating);
  }
  return t;
}

std::vector<std::uint8_t> serialize_db(const TargetDatabase& db) {
  Writer w;
  w.put_bytes(kMagic);
  w.put(db.format_version());
  w.put(static_cast<std::uint32_t>(db.size()));
  w.put(std::uint32_t{0});
  for (const Target& t : db.targets()) {
    w.put(t.id);
    w.put_string16(t.name);
    w.put(static_cast<std::uint32_t>(t.image_width));
    w.put(static_cast<std::uint32_t>(t.image_height));
    w.put(static_cast<std::uint32_t>(t.features.size()));
    for (const Keypoint& kp : t.features.keypoints) {
      w.put(kp.x);
      w.put(kp.y);
      w.put(kp.level);
      w.put(kp.angle);
      w.put(kp.score);
    }
    for (const Descriptor& d : t.features.descriptors) w.put_bytes(d.bytes);
    w.put_string16(t.content_id);
  }
  w.put(crc32_of(w.buffer()));
  return std::move(w.buffer());
}

TargetDatabase deserialize_db(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size()) throw Error(ErrorCode::TruncatedFile, "database file is truncated");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw Error(ErrorCode::BadMagic, "not a target database");
  if (bytes.size() < kHeaderSize + kCrcSize) throw Error(ErrorCode::TruncatedFile, "database file is truncated");

  Reader header(bytes);
  header.skip(kMagic.size());
  const auto version = header.get<std::uint32_t>();
  if (version != kDbFormatVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "unsupported database version " + std::to_string(version));
  }
  const auto count = header.get<std::uint32_t>();

  const auto payload = bytes.first(bytes.size() - kCrcSize);
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + payload.size(), kCrcSize);
  if (crc32_of(payload) != stored) throw Error(ErrorCode::ChecksumMismatch, "database checksum mismatch");

  TargetDatabase db;
  for (Target& t : read_targets(payload, count)) db.add(std::move(t));
  return db;
}

void save_db(const TargetDatabase& db, const std::filesystem::path& path) {
  const auto bytes = serialize_db(db);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      std::filesystem::remove(tmp);
      throw Error(ErrorCode::Io, "failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(ErrorCode::Io, "cannot move database into place: " + ec.message());
  }
}

TargetDatabase load_db(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_db(bytes);
}

}  // namespace herbar
