#include "grok/transfer.hpp"

#include <algorithm>

#include "grok/dataset.hpp"

namespace grok {

namespace {

// Whole-tensor copy with shape verification.
void copy_tensor(const Checkpoint& src, Model& dst, const std::string& name) {
  const TensorBlob* blob = src.find(name);
  check(blob != nullptr, Err::ConfigMismatch, "checkpoint lacks tensor " + name);
  auto& t = dst.param(name).tensor;
  check(blob->dims == std::vector<long>(t.shape().begin(), t.shape().end()),
        Err::ConfigMismatch, "shape mismatch on " + name);
  std::copy(blob->data.begin(), blob->data.end(), t.data().begin());
}

void copy_row(const TensorBlob& blob, nn::Tensor<float>& t, long row) {
  long width = t.size() / t.dim(0);
  std::copy_n(blob.data.begin() + row * width, width, t.data().begin() + row * width);
}

// Marks one leading-dim row frozen, creating the all-trainable mask on first use.
void freeze_row(Param<float>& p, long row) {
  if (p.row_mask.empty()) p.row_mask.assign(size_t(p.tensor.dim(0)), 1);
  p.row_mask[size_t(row)] = 0;
}

// token_table and pos_table rows shared by source and destination; per-row
// freezing so the remaining rows keep training.
void transfer_tables(const Checkpoint& src, Model& dst, bool freeze) {
  const TensorBlob* tok = src.find("token_table");
  const TensorBlob* pos = src.find("pos_table");
  check(tok && pos, Err::ConfigMismatch, "checkpoint lacks embedding tables");
  long d = dst.config().d_model;
  check(tok->dims.size() == 2 && tok->dims[1] == d, Err::ConfigMismatch,
        "token_table width differs from destination d_model");

  auto& tok_param = dst.param("token_table");
  long dst_rows = tok_param.tensor.dim(0);
  for (int id : src.meta.used_tokens) {
    check(id >= 0 && id < tok->dims[0] && id < dst_rows, Err::VocabMismatch,
          "used token id " + std::to_string(id) + " outside a vocabulary");
    copy_row(*tok, tok_param.tensor, id);
    if (freeze) freeze_row(tok_param, id);
  }

  auto& pos_param = dst.param("pos_table");
  long overlap = std::min(pos->dims[0], pos_param.tensor.dim(0));
  for (long r = 0; r < overlap; ++r) {
    copy_row(*pos, pos_param.tensor, r);
    if (freeze) freeze_row(pos_param, r);
  }
}

void transfer_embed_mlp(const Checkpoint& src, Model& dst, bool freeze) {
  for (int i = 0; i < dst.config().embed_mlp_depth; ++i) {
    std::string base = "embed.mlp." + std::to_string(i);
    copy_tensor(src, dst, base + ".w");
    copy_tensor(src, dst, base + ".b");
  }
  if (freeze && dst.config().embed_mlp_depth > 0) dst.set_frozen("embed.mlp.", true);
}

}  // namespace

TransferMode transfer_mode_by_name(const std::string& name) {
  if (name == "decoder_block") return TransferMode::decoder_block;
  if (name == "embedding") return TransferMode::embedding;
  if (name == "hybrid_embedding") return TransferMode::hybrid_embedding;
  fail(Err::ConfigParse, "unknown transfer mode: " + name);
}

const char* transfer_mode_name(TransferMode mode) {
  switch (mode) {
    case TransferMode::decoder_block: return "decoder_block";
    case TransferMode::embedding: return "embedding";
    case TransferMode::hybrid_embedding: return "hybrid_embedding";
  }
  return "?";
}

void transfer_decoder(const Checkpoint& src, Model& dst, bool freeze) {
  const auto& sc = src.meta.config;
  const auto& dc = dst.config();
  check(sc.d_model == dc.d_model && sc.n_heads == dc.n_heads &&
            sc.n_layers == dc.n_layers,
        Err::ConfigMismatch, "decoder transfer needs matching d_model/n_heads/n_layers");
  for (const auto& p : dst.params()) {
    if (p.name.rfind("decoder.", 0) == 0) copy_tensor(src, dst, p.name);
  }
  if (freeze) dst.set_frozen("decoder.", true);
}

void transfer_embedding(const Checkpoint& src, Model& dst, bool freeze) {
  int dst_p = dst.config().vocab_size - data::Vocab::kSpecialTokens;
  check(src.meta.p == dst_p, Err::VocabMismatch,
        "source modulus " + std::to_string(src.meta.p) + " differs from destination " +
            std::to_string(dst_p));
  check(src.meta.config.d_model == dst.config().d_model &&
            src.meta.config.embed_mlp_depth == dst.config().embed_mlp_depth,
        Err::ConfigMismatch, "embedding transfer needs matching widths");
  transfer_tables(src, dst, freeze);
  transfer_embed_mlp(src, dst, freeze);
}

void transfer_hybrid_embedding(const Checkpoint& src, Model& dst) {
  transfer_embedding(src, dst, true);
}

}  // namespace grok
