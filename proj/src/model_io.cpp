// Binary framing shared by fingerprint ("FPFG") and detector ("FPDM") files:
// magic[4] | version u16 | kind u8 | channels u8 | width u32 | height u32 |
// n_fake u32 | n_real u32 | eps f64 | seed u64 | payload f64[]. All LE.
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "fpforge/detectors.hpp"
#include "fpforge/fingerprint.hpp"

namespace fpforge {

namespace {

constexpr std::uint16_t kFormatVersion = 1;
constexpr std::size_t kHeaderSize = 4 + 2 + 1 + 1 + 4 + 4 + 4 + 4 + 8 + 8;

struct Header {
  std::uint8_t kind = 0;
  Shape shape;
  std::uint32_t n_fake = 0;
  std::uint32_t n_real = 0;
  double eps = 0.0;
  std::uint64_t seed = 0;
};

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void raw(const char* text, std::size_t n) { bytes_.insert(bytes_.end(), text, text + n); }
  void f64s(std::span<const double> values) {
    for (double v : values) f64(v);
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(bytes_.data(), static_cast<std::streamsize>(bytes_.size()));
    if (!out) throw IoError("failed writing " + path.string());
  }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::vector<char> bytes_;
};

class Reader {
 public:
  Reader(std::vector<unsigned char> bytes, std::string name) : bytes_(std::move(bytes)), name_(std::move(name)) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(take(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
  std::uint64_t u64() { return take(8); }
  double f64() { return std::bit_cast<double>(take(8)); }
  std::vector<double> f64s(std::size_t n) {
    need(n * 8);
    std::vector<double> out(n);
    for (auto& v : out) v = f64();
    return out;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string out(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                    bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }
  void need(std::size_t n) const {
    if (remaining() < n) {
      throw FormatError(FormatError::Reason::truncated, name_ + ": file is truncated");
    }
  }
  const std::string& name() const { return name_; }

 private:
  std::uint64_t take(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{bytes_[pos_ + static_cast<std::size_t>(i)]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::vector<unsigned char> bytes_;
  std::size_t pos_ = 0;
  std::string name_;
};

Reader open_reader(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return Reader(std::move(bytes), path.string());
}

void write_header(Writer& w, const char* magic, const Header& h) {
  w.raw(magic, 4);
  w.u16(kFormatVersion);
  w.u8(h.kind);
  w.u8(static_cast<std::uint8_t>(h.shape.channels));
  w.u32(static_cast<std::uint32_t>(h.shape.width));
  w.u32(static_cast<std::uint32_t>(h.shape.height));
  w.u32(h.n_fake);
  w.u32(h.n_real);
  w.f64(h.eps);
  w.u64(h.seed);
}

Header read_header(Reader& r, const char* magic) {
  if (r.remaining() >= 4) {
    if (r.raw(4) != std::string(magic, 4)) {
      throw FormatError(FormatError::Reason::bad_magic, r.name() + ": expected magic " + std::string(magic, 4));
    }
  }
  r.need(kHeaderSize - 4);
  const std::uint16_t version = r.u16();
  if (version != kFormatVersion) {
    throw FormatError(FormatError::Reason::bad_version,
                      r.name() + ": unsupported format version " + std::to_string(version));
  }
  Header h;
  h.kind = r.u8();
  h.shape.channels = r.u8();
  h.shape.width = r.u32();
  h.shape.height = r.u32();
  h.n_fake = r.u32();
  h.n_real = r.u32();
  h.eps = r.f64();
  h.seed = r.u64();
  if (h.shape.width == 0 || h.shape.height == 0 || (h.shape.channels != 1 && h.shape.channels != 3)) {
    throw FormatError(FormatError::Reason::dimension_mismatch, r.name() + ": invalid dimensions " + h.shape.str());
  }
  return h;
}

void expect_end(const Reader& r) {
  if (r.remaining() != 0) {
    throw FormatError(FormatError::Reason::dimension_mismatch,
                      r.name() + ": " + std::to_string(r.remaining()) + " bytes beyond the declared dimensions");
  }
}

}  // namespace

void save_fingerprint(const Fingerprint& fp, const std::filesystem::path& path) {
  Writer w;
  write_header(w, "FPFG", {static_cast<std::uint8_t>(fp.kind), fp.shape(), fp.n_fake, fp.n_real, fp.eps, fp.seed});
  w.f64s(fp.values.values());
  w.save(path);
}

Fingerprint load_fingerprint(const std::filesystem::path& path) {
  Reader r = open_reader(path);
  const Header h = read_header(r, "FPFG");
  if (h.kind > static_cast<std::uint8_t>(FingerprintKind::regression)) {
    throw FormatError(FormatError::Reason::unsupported, path.string() + ": unknown fingerprint kind");
  }
  Fingerprint fp;
  fp.kind = static_cast<FingerprintKind>(h.kind);
  fp.values = Spectrum(h.shape, r.f64s(h.shape.size()));
  fp.n_fake = h.n_fake;
  fp.n_real = h.n_real;
  fp.eps = h.eps;
  fp.seed = h.seed;
  expect_end(r);
  return fp;
}

Fingerprint load_fingerprint(const std::filesystem::path& path, const Shape& expected) {
  Fingerprint fp = load_fingerprint(path);
  if (fp.shape() != expected) {
    throw FormatError(FormatError::Reason::dimension_mismatch,
                      path.string() + ": fingerprint is " + fp.shape().str() + ", expected " + expected.str());
  }
  return fp;
}

void save_detector(const DetectorModel& model, const std::filesystem::path& path) {
  Writer w;
  if (const auto* cosine = std::get_if<CosineModel>(&model)) {
    write_header(w, "FPDM", {0, cosine->fingerprint.shape(), cosine->n_fake, cosine->n_real, 0.0, 0});
    w.f64(cosine->threshold);
    w.f64s(cosine->fingerprint.values());
  } else {
    const auto& ridge = std::get<RidgeModel>(model);
    write_header(w, "FPDM", {1, ridge.shape, ridge.n_fake, ridge.n_real, ridge.eps, 0});
    w.f64(ridge.lambda);
    w.f64(ridge.bias);
    w.f64s(ridge.weights);
    w.f64s(ridge.standardizer.mean);
    w.f64s(ridge.standardizer.scale);
  }
  w.save(path);
}

DetectorModel load_detector(const std::filesystem::path& path) {
  Reader r = open_reader(path);
  const Header h = read_header(r, "FPDM");
  const std::size_t d = h.shape.size();
  if (h.kind == 0) {
    CosineModel model;
    model.threshold = r.f64();
    model.fingerprint = MagnitudeSpectrum(h.shape, r.f64s(d));
    model.n_fake = h.n_fake;
    model.n_real = h.n_real;
    expect_end(r);
    return model;
  }
  if (h.kind == 1) {
    RidgeModel model;
    model.shape = h.shape;
    model.eps = h.eps;
    model.lambda = r.f64();
    model.bias = r.f64();
    model.weights = r.f64s(d);
    model.standardizer.mean = r.f64s(d);
    model.standardizer.scale = r.f64s(d);
    model.n_fake = h.n_fake;
    model.n_real = h.n_real;
    expect_end(r);
    return model;
  }
  throw FormatError(FormatError::Reason::unsupported, path.string() + ": unknown detector kind");
}

}  // namespace fpforge
