#include "grok/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace grok {

namespace {

using json = nlohmann::json;

void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  check(in.good(), Err::FileError, "truncated checkpoint: " + path);
  return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 |
         uint32_t(b[3]) << 24;
}

void put_f32_array(std::ostream& out, const float* data, size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data), std::streamsize(n * 4));
  } else {
    for (size_t i = 0; i < n; ++i) {
      uint32_t bits;
      std::memcpy(&bits, data + i, 4);
      put_u32(out, bits);
    }
  }
}

void get_f32_array(std::istream& in, float* data, size_t n, const std::string& path) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(data), std::streamsize(n * 4));
    check(in.good(), Err::FileError, "truncated checkpoint: " + path);
  } else {
    for (size_t i = 0; i < n; ++i) {
      uint32_t bits = get_u32(in, path);
      std::memcpy(data + i, &bits, 4);
    }
  }
}

json config_to_json(const ModelConfig& c) {
  return json{{"vocab_size", c.vocab_size},
              {"d_model", c.d_model},
              {"n_heads", c.n_heads},
              {"n_layers", c.n_layers},
              {"embed_mlp_depth", c.embed_mlp_depth},
              {"max_seq_len", c.max_seq_len},
              {"classifier_hidden", c.classifier_hidden}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.d_model = j.at("d_model").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.n_layers = j.at("n_layers").get<int>();
  c.embed_mlp_depth = j.at("embed_mlp_depth").get<int>();
  c.max_seq_len = j.at("max_seq_len").get<int>();
  c.classifier_hidden = j.at("classifier_hidden").get<int>();
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model,
                     const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  check(out.good(), Err::FileError, "cannot open for writing: " + path);
  out.write(kCheckpointMagic, 8);
  put_u32(out, kCheckpointVersion);
  put_u32(out, uint32_t(model.params().size()));
  for (const auto& p : model.params()) {
    put_u32(out, uint32_t(p.name.size()));
    out.write(p.name.data(), std::streamsize(p.name.size()));
    put_u32(out, uint32_t(p.tensor.rank()));
    for (int d = 0; d < p.tensor.rank(); ++d) put_u32(out, uint32_t(p.tensor.dim(d)));
    put_f32_array(out, p.tensor.data().data(), p.tensor.data().size());
  }
  check(out.good(), Err::FileError, "write failed: " + path);
  out.close();

  json sidecar{{"config", config_to_json(meta.config)},
               {"p", meta.p},
               {"task", meta.task},
               {"used_tokens", meta.used_tokens}};
  std::ofstream side(path + ".json");
  check(side.good(), Err::FileError, "cannot open for writing: " + path + ".json");
  side << sidecar.dump(2) << '\n';
  check(side.good(), Err::FileError, "write failed: " + path + ".json");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), Err::FileError, "cannot open: " + path);
  char magic[8];
  in.read(magic, 8);
  check(in.good() && std::memcmp(magic, kCheckpointMagic, 8) == 0, Err::FileError,
        "not a checkpoint file: " + path);
  uint32_t version = get_u32(in, path);
  check(version == kCheckpointVersion, Err::FileError,
        "unsupported checkpoint version " + std::to_string(version) + ": " + path);

  Checkpoint ckpt;
  uint32_t count = get_u32(in, path);
  ckpt.tensors.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    TensorBlob blob;
    uint32_t name_len = get_u32(in, path);
    check(name_len > 0 && name_len < 4096, Err::FileError,
          "corrupt tensor name in " + path);
    blob.name.resize(name_len);
    in.read(blob.name.data(), name_len);
    check(in.good(), Err::FileError, "truncated checkpoint: " + path);
    uint32_t rank = get_u32(in, path);
    check(rank <= 8, Err::FileError, "corrupt tensor rank in " + path);
    size_t numel = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      uint32_t dim = get_u32(in, path);
      blob.dims.push_back(long(dim));
      numel *= dim;
    }
    blob.data.resize(numel);
    get_f32_array(in, blob.data.data(), numel, path);
    ckpt.tensors.push_back(std::move(blob));
  }

  std::ifstream side(path + ".json");
  check(side.good(), Err::FileError, "missing checkpoint sidecar: " + path + ".json");
  json j = json::parse(side, nullptr, false);
  check(!j.is_discarded(), Err::ConfigParse, "bad JSON sidecar: " + path + ".json");
  ckpt.meta.config = config_from_json(j.at("config"));
  ckpt.meta.p = j.at("p").get<int>();
  ckpt.meta.task = j.at("task").get<std::string>();
  ckpt.meta.used_tokens = j.at("used_tokens").get<std::vector<int>>();
  return ckpt;
}

}  // namespace grok
