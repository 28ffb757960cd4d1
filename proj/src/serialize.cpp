#include "onlab/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "onlab/error.hpp"

namespace onlab {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}

  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) fail(ErrorKind::FormatError, "truncated network file");
  }
  std::uint8_t u8() {
    need(1);
    return b_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * i);
    return std::bit_cast<double>(v);
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

constexpr char kMagic[4] = {'O', 'N', 'L', 'B'};

}  // namespace

std::vector<std::uint8_t> encode_network(const Network& net) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, kNetworkFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(net.depth()));
  for (const Layer& l : net.layers()) {
    put_u32(out, static_cast<std::uint32_t>(l.weight.cols()));
    put_u32(out, static_cast<std::uint32_t>(l.weight.rows()));
    out.push_back(l.has_relu ? 1 : 0);
    for (double w : l.weight.data()) put_f64(out, w);
    for (double b : l.bias) put_f64(out, b);
  }
  return out;
}

Network decode_network(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  r.need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) fail(ErrorKind::FormatError, "bad magic");
  for (int i = 0; i < 4; ++i) r.u8();
  const std::uint32_t version = r.u32();
  if (version != kNetworkFormatVersion)
    fail(ErrorKind::FormatError, "unsupported network format version " + std::to_string(version));
  const std::uint32_t count = r.u32();
  if (count == 0) fail(ErrorKind::FormatError, "network file has no layers");
  std::vector<Layer> layers;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t in = r.u32(), out = r.u32();
    const std::uint8_t relu = r.u8();
    if (relu > 1) fail(ErrorKind::FormatError, "bad has_relu flag");
    r.need(static_cast<std::size_t>(in) * out * 8 + static_cast<std::size_t>(out) * 8);
    Layer l{Mat(out, in), Vec(out), relu == 1};
    for (double& w : l.weight.data()) w = r.f64();
    for (double& b : l.bias) b = r.f64();
    layers.push_back(std::move(l));
  }
  if (!r.done()) fail(ErrorKind::FormatError, "trailing bytes after network");
  try {
    return Network(std::move(layers));
  } catch (const Error& e) {
    fail(ErrorKind::FormatError, std::string("invalid network: ") + e.what());
  }
}

void save_network(const Network& net, const std::string& path) {
  const auto bytes = encode_network(net);
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::IoError, "cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) fail(ErrorKind::IoError, "write failed for " + path);
}

Network load_network(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::IoError, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_network(bytes);
}

}  // namespace onlab
