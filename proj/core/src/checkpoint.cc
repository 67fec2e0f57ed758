#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lexspec/encoder.h"
#include "lexspec/error.h"
#include "lexspec/report.h"

namespace lexspec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json config_to_json(const EncoderConfig& c) {
  return json{{"dim", c.dim},
              {"num_layers", c.num_layers},
              {"ffn_dim", c.ffn_dim},
              {"adapter_bottleneck", c.adapter_bottleneck},
              {"mode", std::string(to_string(c.mode))},
              {"max_sequence_length", c.max_sequence_length},
              {"self_attention_only", c.self_attention_only}};
}

EncoderConfig config_from_json(const json& j) {
  EncoderConfig c;
  try {
    c.dim = j.at("dim").get<std::size_t>();
    c.num_layers = j.at("num_layers").get<std::size_t>();
    c.ffn_dim = j.at("ffn_dim").get<std::size_t>();
    c.adapter_bottleneck = j.at("adapter_bottleneck").get<std::size_t>();
    c.mode = parse_fine_tune_mode(j.at("mode").get<std::string>());
    c.max_sequence_length = j.at("max_sequence_length").get<std::size_t>();
    c.self_attention_only = j.value("self_attention_only", false);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("checkpoint config: ") + e.what());
  }
  return c;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void put_le64(std::ostream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) {
    bytes[i] = static_cast<char>(bits & 0xFF);
    bits >>= 8;
  }
  out.write(bytes, 8);
}

double get_le64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const EncoderModel& model, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory " + dir.string());

  json manifest = json::array();
  std::ofstream weights(dir / "weights.bin", std::ios::binary);
  if (!weights) throw IoError("cannot write " + (dir / "weights.bin").string());
  for (const auto& nt : model.named_tensors()) {
    manifest.push_back({{"name", nt.name},
                        {"shape", {nt.tensor.rows(), nt.tensor.cols()}}});
    for (double v : nt.tensor.values()) put_le64(weights, v);
  }
  weights.close();
  if (!weights) throw IoError("write failed: " + (dir / "weights.bin").string());

  write_json_file(dir / "manifest.json", manifest);
  write_json_file(dir / "config.json", config_to_json(model.config()));
  save_vocabulary(model.vocabulary(), dir / "vocab.txt");
}

EncoderModel load_checkpoint(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("checkpoint directory not found: " + dir.string());
  const EncoderConfig config = config_from_json(read_json_file(dir / "config.json"));
  EncoderModel model(config, load_vocabulary(dir / "vocab.txt"));
  const json manifest = read_json_file(dir / "manifest.json");
  if (!manifest.is_array()) throw ValidationError("manifest.json must be an array");

  std::ifstream in(dir / "weights.bin", std::ios::binary);
  if (!in) throw IoError("cannot open " + (dir / "weights.bin").string());
  std::vector<unsigned char> blob((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());

  auto tensors = model.named_tensors();
  std::size_t offset = 0;
  std::size_t index = 0;
  for (const auto& entry : manifest) {
    const auto name = entry.at("name").get<std::string>();
    const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    if (index >= tensors.size() || tensors[index].name != name) {
      throw ValidationError("checkpoint: unknown or out-of-order manifest tensor '" + name + "'");
    }
    Tensor& t = tensors[index].tensor;
    if (shape.size() != 2 || shape[0] != t.rows() || shape[1] != t.cols()) {
      throw ValidationError("checkpoint: shape mismatch for '" + name + "', model expects " +
                            t.shape().str());
    }
    const std::size_t bytes = t.numel() * 8;
    if (offset + bytes > blob.size()) {
      throw ValidationError("checkpoint: weights.bin truncated at '" + name + "'");
    }
    auto values = t.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] = get_le64(blob.data() + offset + 8 * i);
    }
    offset += bytes;
    ++index;
  }
  if (index != tensors.size()) {
    throw ValidationError("checkpoint: manifest lacks tensor '" + tensors[index].name + "'");
  }
  if (offset != blob.size()) throw ValidationError("checkpoint: trailing bytes in weights.bin");
  return model;
}

std::size_t load_word_vectors(const fs::path& path, EncoderModel& model) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open word-vector file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": missing header");
  std::size_t count = 0, dim = 0;
  {
    std::istringstream hs(line);
    if (!(hs >> count >> dim)) {
      throw ValidationError(path.string() + ": header must be '<count> <dim>'");
    }
  }
  const std::size_t d = model.config().dim;
  if (dim != d) {
    throw ValidationError(path.string() + ": vector dimension " + std::to_string(dim) +
                          " does not match model dimension " + std::to_string(d));
  }
  auto table = model.embeddings().mutable_values();
  std::size_t rows = 0, overwritten = 0, lineno = 1;
  std::vector<double> buffer(d);
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    for (std::size_t i = 0; i < d; ++i) {
      if (!(ls >> buffer[i])) {
        throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(d) + " values");
      }
    }
    double extra;
    if (ls >> extra) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                            ": too many values");
    }
    ++rows;
    if (auto id = model.vocabulary().find(word);
        id && *id >= SubwordVocabulary::kReserved) {
      std::copy(buffer.begin(), buffer.end(),
                table.begin() + static_cast<std::ptrdiff_t>(*id * d));
      ++overwritten;
    }
  }
  if (rows != count) {
    throw ValidationError(path.string() + ": header announces " + std::to_string(count) +
                          " vectors, found " + std::to_string(rows));
  }
  return overwritten;
}

}  // namespace lexspec
