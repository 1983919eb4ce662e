#include "opca/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "opca/errors.hpp"

namespace opca {

namespace {

constexpr std::array<char, 4> kMagic{'O', 'P', 'C', 'A'};

// Guards against absurd element counts in corrupted files before allocating.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

class Writer {
 public:
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void reals(std::span<const double> v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void raw(std::string_view s) { buf_.append(s); }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes, const char* where) : bytes_(bytes), where_(where) {}

  std::uint64_t u64() {
    const auto b = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
    return v;
  }
  std::uint32_t u32() {
    const auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::uint64_t count() {
    const std::uint64_t n = u64();
    if (n > kMaxElements) malformed("implausible element count");
    return n;
  }
  Vector reals() {
    const std::uint64_t n = count();
    if (n * 8 > bytes_.size()) truncated();
    Vector v(n);
    for (double& x : v) x = f64();
    return v;
  }
  template <class E>
  E enumeration(std::uint64_t max_value) {
    const std::uint64_t v = u64();
    if (v > max_value) malformed("enum value out of range");
    return static_cast<E>(v);
  }
  bool flag() { return enumeration<std::uint64_t>(1) != 0; }

  std::string_view take(std::size_t n) {
    if (n > bytes_.size()) truncated();
    const auto out = bytes_.substr(0, n);
    bytes_.remove_prefix(n);
    return out;
  }
  bool empty() const noexcept { return bytes_.empty(); }

  [[noreturn]] void truncated() const {
    reject(InputErrorKind::truncated, std::string("checkpoint truncated in ") + where_);
  }
  [[noreturn]] void malformed(const std::string& what) const {
    reject(InputErrorKind::malformed_header, std::string("checkpoint ") + where_ + ": " + what);
  }

 private:
  std::string_view bytes_;
  const char* where_;
};

// --- sections --------------------------------------------------------------

void write_moments(Writer& w, const AdamMoments& m) {
  w.u64(m.t);
  w.reals(m.m);
  w.reals(m.v);
}

AdamMoments read_moments(Reader& r) {
  AdamMoments m;
  m.t = r.u64();
  m.m = r.reals();
  m.v = r.reals();
  if (m.m.size() != m.v.size()) r.malformed("Adam moment lengths differ");
  return m;
}

void write_network(Writer& w, const MlpStack& net, const MlpAdamState& opt) {
  w.u64(net.layers.size());
  for (const auto& layer : net.layers) {
    w.u64(layer.weight.rows());
    w.u64(layer.weight.cols());
    w.u64(static_cast<std::uint64_t>(layer.activation));
    w.reals(layer.weight.entries());
    w.reals(layer.bias);
  }
  w.u64(opt.weight.size());
  for (const auto& m : opt.weight) write_moments(w, m);
  w.u64(opt.bias.size());
  for (const auto& m : opt.bias) write_moments(w, m);
}

void read_network(Reader& r, MlpStack& net, MlpAdamState& opt) {
  const std::uint64_t layers = r.count();
  for (std::uint64_t l = 0; l < layers; ++l) {
    const std::uint64_t rows = r.count();
    const std::uint64_t cols = r.count();
    DenseLayer layer;
    layer.activation = r.enumeration<Activation>(1);
    Vector w = r.reals();
    if (w.size() != rows * cols) r.malformed("weight size does not match its shape");
    layer.weight = DenseMatrix(rows, cols, std::move(w));
    layer.bias = r.reals();
    net.layers.push_back(std::move(layer));
  }
  const std::uint64_t nw = r.count();
  for (std::uint64_t i = 0; i < nw; ++i) opt.weight.push_back(read_moments(r));
  const std::uint64_t nb = r.count();
  for (std::uint64_t i = 0; i < nb; ++i) opt.bias.push_back(read_moments(r));
  if ((nw != 0 && nw != layers) || (nb != 0 && nb != layers)) r.malformed("optimizer state does not match layers");
}

void write_state(Writer& w, const OjaPcaState& s) {
  w.u64(s.basis.rows());
  w.u64(s.basis.cols());
  w.reals(s.basis.entries());
  w.f64(s.mean.gamma);
  w.u64(s.mean.step);
  w.reals(s.mean.mu);
  w.u64(s.steps_taken);
  w.u64(static_cast<std::uint64_t>(s.schedule.kind));
  w.f64(s.schedule.eta0);
  w.f64(s.schedule.decay);
  w.u64(s.ortho_period);
  w.f64(s.eps_ortho);
  w.u64(s.track_mean ? 1 : 0);
}

OjaPcaState read_state(Reader& r) {
  OjaPcaState s;
  const std::uint64_t rows = r.count();
  const std::uint64_t cols = r.count();
  Vector c = r.reals();
  if (c.size() != rows * cols) r.malformed("basis size does not match its shape");
  s.basis = DenseMatrix(rows, cols, std::move(c));
  s.mean.gamma = r.f64();
  s.mean.step = r.u64();
  s.mean.mu = r.reals();
  if (s.mean.mu.size() != rows) r.malformed("mean length does not match basis");
  s.steps_taken = r.u64();
  s.schedule.kind = r.enumeration<LearningRateSchedule::Kind>(1);
  s.schedule.eta0 = r.f64();
  s.schedule.decay = r.f64();
  s.ortho_period = r.u64();
  s.eps_ortho = r.f64();
  s.track_mean = r.flag();
  if (s.ortho_period == 0) r.malformed("ortho_period is zero");
  return s;
}

void write_section(Writer& out, Writer&& section) {
  const std::string payload = section.take();
  out.u64(payload.size());
  out.raw(payload);
}

Reader open_section(Reader& outer, const char* name) {
  const std::uint64_t n = outer.u64();
  return Reader(outer.take(n), name);
}

void finish(const Reader& r) {
  if (!r.empty()) r.malformed("trailing bytes");
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  const AutoencoderModel& m = ckpt.model;
  Writer out;
  out.raw(std::string_view(kMagic.data(), kMagic.size()));
  out.u32(kCheckpointVersion);

  Writer meta;
  for (std::uint64_t v : {m.image.channels, m.image.height, m.image.width, m.latent.channels, m.latent.height,
                          m.latent.width})
    meta.u64(v);
  write_section(out, std::move(meta));

  Writer enc;
  write_network(enc, m.encoder, m.encoder_opt);
  write_section(out, std::move(enc));

  Writer dec;
  write_network(dec, m.decoder, m.decoder_opt);
  write_section(out, std::move(dec));

  Writer layout;
  layout.u64(static_cast<std::uint64_t>(m.layout.mode()));
  layout.u64(static_cast<std::uint64_t>(m.layout.backward_mode()));
  layout.u64(m.layout.states().size());
  for (const auto& s : m.layout.states()) write_state(layout, s);
  write_section(out, std::move(layout));

  Writer rng;
  rng.u64(ckpt.rng_seed);
  rng.u64(ckpt.epochs_completed);
  write_section(out, std::move(rng));

  Writer step;
  step.u64(ckpt.step);
  write_section(out, std::move(step));
  return out.take();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  const std::string_view magic(kMagic.data(), kMagic.size());
  if (bytes.size() < magic.size()) {
    if (magic.substr(0, bytes.size()) == bytes && !bytes.empty()) reject(InputErrorKind::truncated, "checkpoint truncated in magic");
    reject(InputErrorKind::bad_magic, "not a checkpoint file (bad magic)");
  }
  if (bytes.substr(0, 4) != magic) reject(InputErrorKind::bad_magic, "not a checkpoint file (bad magic)");

  Reader top(bytes.substr(4), "header");
  const std::uint32_t version = top.u32();
  if (version != kCheckpointVersion) {
    reject(InputErrorKind::version_mismatch, "checkpoint version " + std::to_string(version) +
                                                 " is not supported (expected " +
                                                 std::to_string(kCheckpointVersion) + ")");
  }

  Checkpoint ckpt;
  AutoencoderModel& m = ckpt.model;

  Reader meta = open_section(top, "meta");
  m.image = {meta.count(), meta.count(), meta.count()};
  m.latent = {meta.count(), meta.count(), meta.count()};
  finish(meta);

  Reader enc = open_section(top, "encoder");
  read_network(enc, m.encoder, m.encoder_opt);
  finish(enc);

  Reader dec = open_section(top, "decoder");
  read_network(dec, m.decoder, m.decoder_opt);
  finish(dec);

  Reader lay = open_section(top, "layout");
  const auto mode = lay.enumeration<LayoutMode>(1);
  const auto backward = lay.enumeration<BackwardMode>(1);
  const std::uint64_t n_states = lay.count();
  std::vector<OjaPcaState> states;
  for (std::uint64_t i = 0; i < n_states; ++i) states.push_back(read_state(lay));
  finish(lay);

  Reader rng = open_section(top, "rng");
  ckpt.rng_seed = rng.u64();
  ckpt.epochs_completed = rng.u64();
  finish(rng);

  Reader step = open_section(top, "step");
  ckpt.step = step.u64();
  finish(step);
  finish(top);

  // Structural consistency; the layout constructor checks state shapes.
  try {
    m.layout = BottleneckLayout(mode, m.latent, std::move(states), backward);
    m.encoder.validate();
    m.decoder.validate();
  } catch (const InputError& e) {
    top.malformed(e.what());
  }
  if (m.encoder.input_dim() != m.image.size() || m.encoder.output_dim() != m.latent.size() ||
      m.decoder.input_dim() != m.latent.size() || m.decoder.output_dim() != m.image.size()) {
    top.malformed("network dimensions do not match the recorded shapes");
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = encode_checkpoint(ckpt);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) reject(InputErrorKind::io_failure, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) reject(InputErrorKind::io_failure, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) reject(InputErrorKind::io_failure, "cannot rename " + tmp.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) reject(InputErrorKind::missing_path, "cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint(buf.str());
}

}  // namespace opca
