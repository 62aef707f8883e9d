#pragma once

#include <string>

#include "grok/checkpoint.hpp"
#include "grok/model.hpp"

// Weight-transfer procedures between tasks over the same modulus. The
// classifier never travels; it is specific to the target operation.
namespace grok {

enum class TransferMode { decoder_block, embedding, hybrid_embedding };

TransferMode transfer_mode_by_name(const std::string& name);
const char* transfer_mode_name(TransferMode mode);

// Copies every decoder-block tensor; embedding stack and classifier keep their
// fresh initialization. freeze locks the copied blocks.
void transfer_decoder(const Checkpoint& src, Model& dst, bool freeze);

// Copies the token rows the source task used, the embedding MLP, and the
// overlapping positional rows. freeze locks exactly what was copied (per row
// for the tables); positions beyond the source length stay trainable.
void transfer_embedding(const Checkpoint& src, Model& dst, bool freeze);

// Embedding transfer where copied rows are always frozen and rows for tokens
// the source never saw stay trainable, for prompts that introduce new tokens.
void transfer_hybrid_embedding(const Checkpoint& src, Model& dst);

}  // namespace grok
