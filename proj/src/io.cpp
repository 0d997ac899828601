#include "topoattn/io.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "topoattn/error.hpp"

namespace topoattn {

namespace {

class ByteCursor {
 public:
  explicit ByteCursor(std::span<const std::byte> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ >= bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  char peek() const { return static_cast<char>(bytes_[pos_]); }
  char next() { return static_cast<char>(bytes_[pos_++]); }
  std::span<const std::byte> rest() const { return bytes_.subspan(pos_); }

  // Netpbm header whitespace, including '#' comments running to end of line.
  void skip_space_and_comments() {
    while (!at_end()) {
      char c = peek();
      if (c == '#') {
        while (!at_end() && peek() != '\n' && peek() != '\r') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  // Reads an unsigned decimal integer; `what` names the field in diagnostics.
  std::uint64_t read_uint(const char* what) {
    skip_space_and_comments();
    if (at_end()) throw ParseError(std::string("unexpected end of file reading ") + what, pos_);
    if (!std::isdigit(static_cast<unsigned char>(peek()))) {
      throw ParseError(std::string("expected integer for ") + what, pos_);
    }
    std::uint64_t value = 0;
    const std::size_t start = pos_;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
      value = value * 10 + static_cast<std::uint64_t>(next() - '0');
      if (value > (std::uint64_t{1} << 40)) throw ParseError(std::string(what) + " too large", start);
    }
    return value;
  }

 private:
  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

void put_le32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_le32(const std::byte* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::to_integer<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

PgmImage parse_pgm(std::span<const std::byte> bytes) {
  ByteCursor cur(bytes);
  if (bytes.size() < 2 || cur.next() != 'P') throw ParseError("missing PGM magic", 0);
  const char kind = cur.next();
  if (kind != '2' && kind != '5') throw ParseError("unsupported PGM magic, expected P2 or P5", 1);

  PgmImage img;
  const std::size_t width_at = cur.offset();
  img.width = cur.read_uint("width");
  const std::size_t height_at = cur.offset();
  img.height = cur.read_uint("height");
  if (img.width == 0) throw ParseError("invalid width 0", width_at);
  if (img.height == 0) throw ParseError("invalid height 0", height_at);
  cur.skip_space_and_comments();
  const std::size_t maxval_at = cur.offset();
  const std::uint64_t maxval = cur.read_uint("maxval");
  if (maxval == 0 || maxval > 65535) throw ParseError("invalid maxval", maxval_at);
  img.maxval = static_cast<std::uint32_t>(maxval);

  const std::size_t count = img.width * img.height;
  img.samples.resize(count);

  if (kind == '5') {
    // Exactly one whitespace byte separates the header from the raster.
    if (cur.at_end() || !std::isspace(static_cast<unsigned char>(cur.peek()))) {
      throw ParseError("expected single whitespace after maxval", cur.offset());
    }
    cur.next();
    const std::size_t bytes_per_sample = img.maxval < 256 ? 1 : 2;
    if (cur.remaining() < count * bytes_per_sample) {
      throw ParseError("truncated payload: need " + std::to_string(count * bytes_per_sample) +
                           " bytes, have " + std::to_string(cur.remaining()),
                       cur.offset());
    }
    auto raster = cur.rest();
    for (std::size_t i = 0; i < count; ++i) {
      std::uint32_t s;
      if (bytes_per_sample == 1) {
        s = std::to_integer<std::uint32_t>(raster[i]);
      } else {
        s = (std::to_integer<std::uint32_t>(raster[2 * i]) << 8) |
            std::to_integer<std::uint32_t>(raster[2 * i + 1]);
      }
      if (s > img.maxval) {
        throw ParseError("sample exceeds maxval", cur.offset() + i * bytes_per_sample);
      }
      img.samples[i] = static_cast<std::uint16_t>(s);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      cur.skip_space_and_comments();
      if (cur.at_end()) {
        throw ParseError("truncated payload: got " + std::to_string(i) + " of " +
                             std::to_string(count) + " samples",
                         cur.offset());
      }
      const std::size_t at = cur.offset();
      const std::uint64_t s = cur.read_uint("sample");
      if (s > img.maxval) throw ParseError("sample exceeds maxval", at);
      img.samples[i] = static_cast<std::uint16_t>(s);
    }
  }
  return img;
}

GridMap load_pgm(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  const PgmImage img = parse_pgm(bytes);
  std::vector<float> values(img.samples.size());
  const double scale = static_cast<double>(img.maxval);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = static_cast<float>(img.samples[i] / scale);
  }
  return GridMap(img.width, img.height, std::move(values));
}

std::string encode_pgm(const LevelMap& levels) {
  std::string out = "P5\n" + std::to_string(levels.width()) + " " +
                    std::to_string(levels.height()) + "\n" +
                    std::to_string(levels.max_level()) + "\n";
  const bool wide = levels.max_level() >= 256;
  out.reserve(out.size() + levels.size() * (wide ? 2 : 1));
  for (Level l : levels.levels()) {
    if (wide) out.push_back(static_cast<char>((l >> 8) & 0xFF));
    out.push_back(static_cast<char>(l & 0xFF));
  }
  return out;
}

void save_pgm(const LevelMap& levels, const std::filesystem::path& path) {
  write_file_atomic(path, encode_pgm(levels));
}

RawTensor parse_tensor(std::span<const std::byte> bytes) {
  auto line_end = [&](std::size_t from) {
    for (std::size_t i = from; i < bytes.size(); ++i) {
      if (static_cast<char>(bytes[i]) == '\n') return i;
    }
    return bytes.size();
  };

  const std::size_t magic_end = line_end(0);
  const std::string magic(reinterpret_cast<const char*>(bytes.data()), magic_end);
  if (magic != "TNSR1") throw ParseError("bad magic", 0);
  if (magic_end == bytes.size()) throw ParseError("missing shape line", magic_end);

  const std::size_t shape_start = magic_end + 1;
  const std::size_t shape_end = line_end(shape_start);
  if (shape_end == bytes.size()) throw ParseError("unterminated shape line", shape_start);
  std::istringstream shape(std::string(reinterpret_cast<const char*>(bytes.data()) + shape_start,
                                       shape_end - shape_start));
  long long ndim = 0;
  if (!(shape >> ndim) || ndim < 1 || ndim > 8) throw ParseError("invalid ndim", shape_start);

  RawTensor t;
  std::size_t count = 1;
  for (long long i = 0; i < ndim; ++i) {
    long long d = 0;
    if (!(shape >> d) || d < 1) throw ParseError("invalid dimension", shape_start);
    t.dims.push_back(static_cast<std::size_t>(d));
    count *= static_cast<std::size_t>(d);
  }
  std::string trailing;
  if (shape >> trailing) throw ParseError("extra tokens in shape line", shape_start);

  const std::size_t payload_start = shape_end + 1;
  const std::size_t payload = bytes.size() - payload_start;
  if (payload != count * 4) {
    throw ParseError("payload size mismatch: header declares " + std::to_string(count) +
                         " floats, payload has " + std::to_string(payload) + " bytes",
                     payload_start);
  }
  t.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    t.data[i] = std::bit_cast<float>(get_le32(bytes.data() + payload_start + 4 * i));
  }
  return t;
}

std::string encode_tensor(const RawTensor& tensor) {
  std::string out = "TNSR1\n" + std::to_string(tensor.dims.size());
  for (std::size_t d : tensor.dims) out += " " + std::to_string(d);
  out += "\n";
  out.reserve(out.size() + 4 * tensor.data.size());
  for (float v : tensor.data) put_le32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

RawTensor read_tensor_file(const std::filesystem::path& path) {
  return parse_tensor(read_file(path));
}

void write_tensor_file(const RawTensor& tensor, const std::filesystem::path& path) {
  write_file_atomic(path, encode_tensor(tensor));
}

void save_tensor(const GridMap& grid, const std::filesystem::path& path) {
  RawTensor t{{grid.height(), grid.width()}, {grid.values().begin(), grid.values().end()}};
  write_tensor_file(t, path);
}

GridMap load_tensor(const std::filesystem::path& path) {
  RawTensor t = read_tensor_file(path);
  if (t.dims.size() != 2) {
    throw ParseError("expected a 2-D tensor, got ndim " + std::to_string(t.dims.size()), 6);
  }
  return GridMap(t.dims[1], t.dims[0], std::move(t.data));
}

void save_feature(const FeatureTensor& tensor, const std::filesystem::path& path) {
  RawTensor t{{tensor.height(), tensor.width(), tensor.channels()}, {}};
  t.data.reserve(tensor.size());
  for (double v : tensor.values()) t.data.push_back(static_cast<float>(v));
  write_tensor_file(t, path);
}

FeatureTensor load_feature(const std::filesystem::path& path) {
  RawTensor t = read_tensor_file(path);
  if (t.dims.size() != 3) {
    throw ParseError("expected a 3-D tensor, got ndim " + std::to_string(t.dims.size()), 6);
  }
  return FeatureTensor(t.dims[0], t.dims[1], t.dims[2], {t.data.begin(), t.data.end()});
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path.string());
  std::vector<std::byte> bytes(buf.size());
  std::memcpy(bytes.data(), buf.data(), buf.size());
  return bytes;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." +
         std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename onto " + path.string());
  }
}

}  // namespace topoattn
