#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cloze/lm/ops.hpp"
#include "cloze/lm/safetensors.hpp"

namespace cloze::lm {

struct Gpt2Config {
  int n_layer = 12;
  int n_head = 12;
  int n_embd = 768;
  int n_positions = 1024;
  int vocab_size = 50257;
  double layer_norm_epsilon = 1e-5;
  int bos_token_id = 50256;

  static Gpt2Config from_json(const nlohmann::json& config);
};

/// GPT-2 decoder with the language-model head tied to the token embeddings.
template <typename Scalar>
class Gpt2 {
 public:
  static Gpt2 load(const SafeTensors& weights, const Gpt2Config& config);

  const Gpt2Config& config() const { return config_; }

  /// Final-layer-norm hidden states, one row per input token.
  Matrix<Scalar> hidden_states(std::span<const int> ids) const;
  /// Next-token logits for the listed positions (rows in the given order).
  Matrix<Scalar> logits_at(std::span<const int> ids, std::span<const int> positions) const;
  Matrix<Scalar> logits(std::span<const int> ids) const;

 private:
  struct Block {
    LayerNorm<Scalar> ln_1;
    Linear<Scalar> c_attn;
    Linear<Scalar> c_proj;
    LayerNorm<Scalar> ln_2;
    Linear<Scalar> c_fc;
    Linear<Scalar> mlp_proj;
  };

  Gpt2Config config_;
  Matrix<Scalar> wte_;  // vocab x d
  Matrix<Scalar> wpe_;  // positions x d
  std::vector<Block> blocks_;
  LayerNorm<Scalar> ln_f_;
};

enum class EncoderFlavor { kBert, kRoberta };

struct EncoderConfig {
  EncoderFlavor flavor = EncoderFlavor::kBert;
  int num_hidden_layers = 12;
  int num_attention_heads = 12;
  int hidden_size = 768;
  int intermediate_size = 3072;
  int max_position_embeddings = 512;
  int type_vocab_size = 2;
  int vocab_size = 30522;
  double layer_norm_eps = 1e-12;
  int pad_token_id = 0;

  static EncoderConfig from_json(const nlohmann::json& config);
};

/// BERT-style bidirectional encoder with its masked-LM head. RoBERTa differs
/// only in tensor names and in position ids starting after the padding index.
template <typename Scalar>
class MaskedEncoder {
 public:
  static MaskedEncoder load(const SafeTensors& weights, const EncoderConfig& config);

  const EncoderConfig& config() const { return config_; }

  Matrix<Scalar> hidden_states(std::span<const int> ids, std::span<const int> token_types) const;
  /// Vocabulary logits at the listed positions.
  Matrix<Scalar> logits_at(std::span<const int> ids, std::span<const int> token_types,
                           std::span<const int> positions) const;
  Matrix<Scalar> logits(std::span<const int> ids, std::span<const int> token_types) const;

 private:
  struct Block {
    Linear<Scalar> query, key, value, attn_out;
    LayerNorm<Scalar> attn_norm;
    Linear<Scalar> intermediate, output;
    LayerNorm<Scalar> output_norm;
  };

  EncoderConfig config_;
  Matrix<Scalar> word_embeddings_;
  Matrix<Scalar> position_embeddings_;
  Matrix<Scalar> type_embeddings_;
  LayerNorm<Scalar> embedding_norm_;
  std::vector<Block> blocks_;
  Linear<Scalar> head_transform_;
  LayerNorm<Scalar> head_norm_;
  Matrix<Scalar> decoder_;  // vocab x d
  RowVector<Scalar> decoder_bias_;
};

extern template class Gpt2<float>;
extern template class Gpt2<double>;
extern template class MaskedEncoder<float>;
extern template class MaskedEncoder<double>;

}  // namespace cloze::lm
