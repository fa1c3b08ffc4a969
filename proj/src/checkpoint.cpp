#include "ape/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ape/error.hpp"

namespace ape {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

void put_string(std::ostream& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw DataError("truncated checkpoint");
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

std::string get_string(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n)) throw DataError("truncated checkpoint");
  return s;
}

const std::map<std::string, std::string>& require(const Checkpoint& c, const std::string& key) {
  if (!c.config.count(key)) throw DataError("checkpoint lacks config key " + key);
  return c.config;
}

int config_int(const Checkpoint& c, const std::string& key) {
  const auto& v = require(c, key).at(key);
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw DataError("bad integer for " + key);
  return out;
}

}  // namespace

const TensorRecord* Checkpoint::find(std::string_view name) const {
  for (const auto& r : records) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out.write(kCheckpointMagic, 4);
  put_u32(out, ckpt.version);
  std::string text;
  for (const auto& [k, v] : ckpt.config) text += k + " = " + v + "\n";
  put_string(out, text);
  put_u32(out, static_cast<std::uint32_t>(ckpt.vocab.size()));
  for (const auto& t : ckpt.vocab) put_string(out, t);
  put_u32(out, static_cast<std::uint32_t>(ckpt.records.size()));
  for (const auto& r : ckpt.records) {
    put_string(out, r.name);
    put_u32(out, r.rows);
    put_u32(out, r.cols);
    for (float f : r.data) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  if (!out) throw DataError("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0) throw DataError("not a checkpoint (bad magic)");
  Checkpoint c;
  c.version = get_u32(in);
  if (c.version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(c.version));

  std::istringstream text(get_string(in));
  std::string line;
  while (std::getline(text, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw DataError("malformed checkpoint config line");
    c.config[line.substr(0, eq)] = line.substr(eq + 3);
  }
  const std::uint32_t vocab_count = get_u32(in);
  c.vocab.reserve(vocab_count);
  for (std::uint32_t i = 0; i < vocab_count; ++i) c.vocab.push_back(get_string(in));
  const std::uint32_t record_count = get_u32(in);
  for (std::uint32_t i = 0; i < record_count; ++i) {
    TensorRecord r;
    r.name = get_string(in);
    r.rows = get_u32(in);
    r.cols = get_u32(in);
    r.data.resize(static_cast<std::size_t>(r.rows) * r.cols);
    for (auto& f : r.data) f = std::bit_cast<float>(get_u32(in));
    c.records.push_back(std::move(r));
  }
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return read_checkpoint(in);
}

TensorRecord to_record(std::string name, const Matrix& m) {
  TensorRecord r;
  r.name = std::move(name);
  r.rows = static_cast<std::uint32_t>(m.rows());
  r.cols = static_cast<std::uint32_t>(m.cols());
  r.data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.data.push_back(static_cast<float>(m(i, j)));
  }
  return r;
}

Matrix from_record(const TensorRecord& r) {
  Matrix m(r.rows, r.cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = static_cast<double>(r.data[k++]);
  }
  return m;
}

Checkpoint model_checkpoint(const Model& model, const Vocab& vocab) {
  Checkpoint c;
  const auto& cfg = model.config();
  c.config["model.d_h"] = std::to_string(cfg.d_model);
  c.config["model.d_s"] = std::to_string(cfg.d_shared);
  c.config["model.layers"] = std::to_string(cfg.layers);
  c.config["model.heads"] = std::to_string(cfg.heads);
  c.config["model.d_ff"] = std::to_string(cfg.d_ff);
  c.config["model.max_positions"] = std::to_string(cfg.max_positions);
  c.config["model.vocab_size"] = std::to_string(cfg.vocab_size);
  c.config["model.target_vocab_size"] = std::to_string(cfg.target_vocab_size);
  c.config["model.pos_classes"] = std::to_string(cfg.pos_classes);
  c.config["model.ner_classes"] = std::to_string(cfg.ner_classes);
  c.config["model.kt_classes"] = std::to_string(cfg.kt_classes);
  c.vocab = vocab.tokens();
  for (const auto& [name, p] : model.named_parameters()) c.records.push_back(to_record(name, p->value));
  return c;
}

ModelConfig model_config_from(const Checkpoint& ckpt) {
  ModelConfig cfg;
  cfg.d_model = config_int(ckpt, "model.d_h");
  cfg.d_shared = config_int(ckpt, "model.d_s");
  cfg.layers = config_int(ckpt, "model.layers");
  cfg.heads = config_int(ckpt, "model.heads");
  cfg.d_ff = config_int(ckpt, "model.d_ff");
  cfg.max_positions = config_int(ckpt, "model.max_positions");
  cfg.vocab_size = config_int(ckpt, "model.vocab_size");
  cfg.target_vocab_size = config_int(ckpt, "model.target_vocab_size");
  cfg.pos_classes = config_int(ckpt, "model.pos_classes");
  cfg.ner_classes = config_int(ckpt, "model.ner_classes");
  cfg.kt_classes = config_int(ckpt, "model.kt_classes");
  return cfg;
}

Model model_from(const Checkpoint& ckpt) {
  Model model(model_config_from(ckpt), 0);
  for (auto& [name, p] : model.named_parameters()) {
    const TensorRecord* r = ckpt.find(name);
    if (!r) throw DataError("checkpoint lacks parameter " + name);
    if (r->rows != p->value.rows() || r->cols != p->value.cols()) throw DataError("shape mismatch for " + name);
    p->value = from_record(*r);
  }
  return model;
}

Vocab vocab_from(const Checkpoint& ckpt) {
  const Vocab v = Vocab::from_tokens(ckpt.vocab);
  if (v.size() != ckpt.vocab.size()) throw DataError("checkpoint vocabulary has duplicates");
  return v;
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) throw DataError("bad number: " + std::string(text));
  return v;
}

}  // namespace ape
