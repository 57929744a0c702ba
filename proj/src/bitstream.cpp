#include "derd/bitstream.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

namespace derd {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'D', 'E', 'R', 'D'};
constexpr std::array<std::uint8_t, 4> kAuditMagic{'A', 'U', 'D', 'T'};

void putU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t u32(const char* field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::span<const std::uint8_t> take(std::size_t n, const char* field) {
    need(n, field);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  bool atEnd() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n, const char* field) const {
    if (bytes_.size() - pos_ < n)
      throw BitstreamError(std::string("truncated stream while reading ") + field, pos_);
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> Bitstream::serialize() const {
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  putU32(out, version);
  putU32(out, width);
  putU32(out, height);
  putU32(out, frameCount());
  putU32(out, objective_id);
  putU32(out, qp);
  for (const auto& p : payloads) {
    putU32(out, static_cast<std::uint32_t>(p.size()));
    out.insert(out.end(), p.begin(), p.end());
  }
  if (audit) {
    const std::string text = toJson(*audit).dump();
    out.insert(out.end(), kAuditMagic.begin(), kAuditMagic.end());
    putU32(out, static_cast<std::uint32_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
  }
  return out;
}

Bitstream Bitstream::parse(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.take(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) throw BitstreamError("bad magic", 0);
  Bitstream s;
  s.version = r.u32("version");
  if (s.version != kBitstreamVersion)
    throw BitstreamError("unsupported version " + std::to_string(s.version), 4);
  s.width = r.u32("width");
  s.height = r.u32("height");
  const std::uint32_t frames = r.u32("frame count");
  s.objective_id = r.u32("objective id");
  s.qp = r.u32("QP");
  if (s.objective_id > 2) throw BitstreamError("unknown objective id", 20);
  if (s.qp > 51) throw BitstreamError("QP outside [0, 51]", 24);
  if (s.width == 0 || s.height == 0 || s.width % 8 || s.height % 8 || s.width > 65536 || s.height > 65536)
    throw BitstreamError("invalid picture dimensions", 8);
  for (std::uint32_t f = 0; f < frames; ++f) {
    const std::uint32_t len = r.u32("payload length");
    const auto p = r.take(len, "payload");
    s.payloads.emplace_back(p.begin(), p.end());
  }
  if (!r.atEnd()) {
    const std::size_t at = r.pos();
    const auto tag = r.take(4, "section tag");
    if (!std::equal(tag.begin(), tag.end(), kAuditMagic.begin()))
      throw BitstreamError("unknown trailing section", at);
    const std::uint32_t len = r.u32("audit length");
    const auto text = r.take(len, "audit section");
    try {
      s.audit = countsFromJson(nlohmann::json::parse(text.begin(), text.end()));
    } catch (const std::exception& e) {
      throw BitstreamError(std::string("malformed audit section: ") + e.what(), at);
    }
    if (!r.atEnd()) throw BitstreamError("trailing bytes after audit section", r.pos());
  }
  return s;
}

bool Bitstream::sameCodedContent(const Bitstream& other) const {
  return version == other.version && width == other.width && height == other.height &&
         qp == other.qp && payloads == other.payloads && audit == other.audit;
}

void writeBitstream(const Bitstream& stream, const std::filesystem::path& path) {
  const auto bytes = stream.serialize();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

Bitstream readBitstream(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return Bitstream::parse(bytes);
}

}  // namespace derd
