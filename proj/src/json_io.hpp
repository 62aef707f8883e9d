#pragma once

// ADL to_json/from_json hooks shared by the sources that serialize configs
// and run records. Internal to src/, not part of the public headers, so the
// public API stays free of the json dependency.

#include <json.hpp>

#include "grok/model.hpp"
#include "grok/train.hpp"

namespace grok {

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"vocab_size", c.vocab_size},
                     {"d_model", c.d_model},
                     {"n_heads", c.n_heads},
                     {"n_layers", c.n_layers},
                     {"embed_mlp_depth", c.embed_mlp_depth},
                     {"max_seq_len", c.max_seq_len},
                     {"classifier_hidden", c.classifier_hidden}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  c.vocab_size = j.at("vocab_size").get<int>();
  c.d_model = j.at("d_model").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.n_layers = j.at("n_layers").get<int>();
  c.embed_mlp_depth = j.at("embed_mlp_depth").get<int>();
  c.max_seq_len = j.at("max_seq_len").get<int>();
  c.classifier_hidden = j.at("classifier_hidden").get<int>();
}

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"batch_size", c.batch_size},
                     {"lr", c.lr},
                     {"weight_decay", c.weight_decay},
                     {"beta1", c.beta1},
                     {"beta2", c.beta2},
                     {"eps", c.eps},
                     {"max_steps", c.max_steps},
                     {"eval_every", c.eval_every},
                     {"grok_threshold", c.grok_threshold},
                     {"seed", c.seed},
                     {"augment_commutative", c.augment_commutative},
                     {"stop_at_grok", c.stop_at_grok},
                     {"eval_batch", c.eval_batch}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.batch_size = j.at("batch_size").get<long>();
  c.lr = j.at("lr").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.eps = j.at("eps").get<double>();
  c.max_steps = j.at("max_steps").get<long>();
  c.eval_every = j.at("eval_every").get<long>();
  c.grok_threshold = j.at("grok_threshold").get<double>();
  c.seed = j.at("seed").get<uint64_t>();
  c.augment_commutative = j.at("augment_commutative").get<bool>();
  c.stop_at_grok = j.value("stop_at_grok", false);
  c.eval_batch = j.value("eval_batch", 4096L);
}

}  // namespace grok
