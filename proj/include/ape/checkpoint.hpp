#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ape/model.hpp"
#include "ape/vocab.hpp"

namespace ape {

// Binary layout, all integers little-endian uint32:
//
//   "MTCK" | version | config_len | config text (key = value lines, sorted)
//   | vocab_count | { len | bytes }* | record_count
//   | { name_len | name | rows | cols | rows*cols float32 LE, row-major }*
inline constexpr char kCheckpointMagic[4] = {'M', 'T', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TensorRecord {
  std::string name;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<float> data;

  bool operator==(const TensorRecord&) const = default;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::map<std::string, std::string> config;
  Tokens vocab;
  std::vector<TensorRecord> records;

  const TensorRecord* find(std::string_view name) const;
  bool operator==(const Checkpoint&) const = default;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
// Throws DataError on a bad magic, unknown version or truncated input.
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

TensorRecord to_record(std::string name, const Matrix& m);
Matrix from_record(const TensorRecord& r);

// Model parameters plus its config (keys model.*) and the vocabulary.
Checkpoint model_checkpoint(const Model& model, const Vocab& vocab);
ModelConfig model_config_from(const Checkpoint& ckpt);
// Throws DataError when a parameter record is missing or mis-shaped.
Model model_from(const Checkpoint& ckpt);
Vocab vocab_from(const Checkpoint& ckpt);

// Shortest round-trip text form of a double.
std::string format_double(double v);
double parse_double(std::string_view text);

}  // namespace ape
