#include "cloze/lm/models.hpp"

#include <initializer_list>
#include <stdexcept>

#include <json.hpp>

#include "cloze/error.hpp"

namespace cloze::lm {

namespace {

// Checkpoints are saved with or without the base-model prefix; take the first
// name that exists.
std::string find_tensor(const SafeTensors& st, std::initializer_list<std::string> prefixes,
                        std::initializer_list<std::string> names) {
  for (const auto& n : names) {
    for (const auto& p : prefixes) {
      if (st.contains(p + n)) return p + n;
    }
  }
  throw ParseError("checkpoint is missing tensor " + *names.begin());
}

template <typename Scalar>
RowVector<Scalar> row(const SafeTensors& st, const std::string& name) {
  return st.vector<Scalar>(name).transpose();
}

// torch.nn.Linear stores (out, in); transposed to in x out.
template <typename Scalar>
Linear<Scalar> torch_linear(const SafeTensors& st, const std::string& prefix) {
  return Linear<Scalar>{st.matrix<Scalar>(prefix + ".weight").transpose(),
                        row<Scalar>(st, prefix + ".bias")};
}

// GPT-2 Conv1D already stores (in, out).
template <typename Scalar>
Linear<Scalar> conv1d(const SafeTensors& st, const std::string& prefix) {
  return Linear<Scalar>{st.matrix<Scalar>(prefix + ".weight"), row<Scalar>(st, prefix + ".bias")};
}

template <typename Scalar>
LayerNorm<Scalar> layer_norm(const SafeTensors& st, const std::string& prefix, double eps) {
  const bool legacy = !st.contains(prefix + ".weight") && st.contains(prefix + ".gamma");
  return LayerNorm<Scalar>{row<Scalar>(st, prefix + (legacy ? ".gamma" : ".weight")),
                           row<Scalar>(st, prefix + (legacy ? ".beta" : ".bias")),
                           static_cast<Scalar>(eps)};
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

}  // namespace

Gpt2Config Gpt2Config::from_json(const nlohmann::json& j) {
  Gpt2Config c;
  c.n_layer = get_or(j, "n_layer", c.n_layer);
  c.n_head = get_or(j, "n_head", c.n_head);
  c.n_embd = get_or(j, "n_embd", c.n_embd);
  c.n_positions = get_or(j, "n_positions", c.n_positions);
  c.vocab_size = get_or(j, "vocab_size", c.vocab_size);
  c.layer_norm_epsilon = get_or(j, "layer_norm_epsilon", c.layer_norm_epsilon);
  c.bos_token_id = get_or(j, "bos_token_id", c.bos_token_id);
  return c;
}

template <typename Scalar>
Gpt2<Scalar> Gpt2<Scalar>::load(const SafeTensors& st, const Gpt2Config& config) {
  Gpt2 m;
  m.config_ = config;
  const std::string p = st.contains("transformer.wte.weight") ? "transformer." : "";
  m.wte_ = st.matrix<Scalar>(p + "wte.weight");
  m.wpe_ = st.matrix<Scalar>(p + "wpe.weight");
  const double eps = config.layer_norm_epsilon;
  for (int i = 0; i < config.n_layer; ++i) {
    const std::string b = p + "h." + std::to_string(i) + ".";
    m.blocks_.push_back(Block{layer_norm<Scalar>(st, b + "ln_1", eps),
                              conv1d<Scalar>(st, b + "attn.c_attn"),
                              conv1d<Scalar>(st, b + "attn.c_proj"),
                              layer_norm<Scalar>(st, b + "ln_2", eps),
                              conv1d<Scalar>(st, b + "mlp.c_fc"),
                              conv1d<Scalar>(st, b + "mlp.c_proj")});
  }
  m.ln_f_ = layer_norm<Scalar>(st, p + "ln_f", eps);
  if (m.wte_.cols() != config.n_embd || config.n_embd % config.n_head != 0) {
    throw ParseError("gpt2: embedding width does not match config");
  }
  return m;
}

template <typename Scalar>
Matrix<Scalar> Gpt2<Scalar>::hidden_states(std::span<const int> ids) const {
  const auto t = static_cast<Eigen::Index>(ids.size());
  if (t == 0) throw std::invalid_argument("gpt2: empty input");
  if (t > wpe_.rows()) throw std::invalid_argument("gpt2: input longer than n_positions");
  const Eigen::Index d = wte_.cols();
  Matrix<Scalar> x(t, d);
  for (Eigen::Index i = 0; i < t; ++i) {
    if (ids[i] < 0 || ids[i] >= wte_.rows()) throw std::out_of_range("gpt2: token id out of range");
    x.row(i) = wte_.row(ids[i]) + wpe_.row(i);
  }
  for (const auto& b : blocks_) {
    const Matrix<Scalar> qkv = b.c_attn(b.ln_1(x));
    const Matrix<Scalar> a = attention<Scalar>(qkv.leftCols(d), qkv.middleCols(d, d),
                                               qkv.rightCols(d), config_.n_head, true);
    x += b.c_proj(a);
    const Matrix<Scalar> h = gelu_tanh(b.c_fc(b.ln_2(x)));
    x += b.mlp_proj(h);
  }
  return ln_f_(x);
}

template <typename Scalar>
Matrix<Scalar> Gpt2<Scalar>::logits_at(std::span<const int> ids,
                                       std::span<const int> positions) const {
  const Matrix<Scalar> h = hidden_states(ids);
  Matrix<Scalar> picked(static_cast<Eigen::Index>(positions.size()), h.cols());
  for (std::size_t i = 0; i < positions.size(); ++i) picked.row(i) = h.row(positions[i]);
  return picked * wte_.transpose();
}

template <typename Scalar>
Matrix<Scalar> Gpt2<Scalar>::logits(std::span<const int> ids) const {
  return hidden_states(ids) * wte_.transpose();
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) {
  EncoderConfig c;
  const auto type = get_or<std::string>(j, "model_type", "bert");
  c.flavor = type == "roberta" ? EncoderFlavor::kRoberta : EncoderFlavor::kBert;
  c.num_hidden_layers = get_or(j, "num_hidden_layers", c.num_hidden_layers);
  c.num_attention_heads = get_or(j, "num_attention_heads", c.num_attention_heads);
  c.hidden_size = get_or(j, "hidden_size", c.hidden_size);
  c.intermediate_size = get_or(j, "intermediate_size", c.intermediate_size);
  c.max_position_embeddings = get_or(j, "max_position_embeddings", c.max_position_embeddings);
  c.type_vocab_size = get_or(j, "type_vocab_size", c.type_vocab_size);
  c.vocab_size = get_or(j, "vocab_size", c.vocab_size);
  c.layer_norm_eps = get_or(j, "layer_norm_eps", c.layer_norm_eps);
  c.pad_token_id = get_or(j, "pad_token_id", c.flavor == EncoderFlavor::kRoberta ? 1 : 0);
  return c;
}

template <typename Scalar>
MaskedEncoder<Scalar> MaskedEncoder<Scalar>::load(const SafeTensors& st,
                                                  const EncoderConfig& config) {
  MaskedEncoder m;
  m.config_ = config;
  const bool roberta = config.flavor == EncoderFlavor::kRoberta;
  const std::string base = roberta ? "roberta." : "bert.";
  const std::string emb =
      find_tensor(st, {base, ""}, {"embeddings.word_embeddings.weight"});
  const std::string p = emb.substr(0, emb.size() - std::string("embeddings.word_embeddings.weight").size());
  const double eps = config.layer_norm_eps;

  m.word_embeddings_ = st.matrix<Scalar>(emb);
  m.position_embeddings_ = st.matrix<Scalar>(p + "embeddings.position_embeddings.weight");
  m.type_embeddings_ = st.matrix<Scalar>(p + "embeddings.token_type_embeddings.weight");
  m.embedding_norm_ = layer_norm<Scalar>(st, p + "embeddings.LayerNorm", eps);
  for (int i = 0; i < config.num_hidden_layers; ++i) {
    const std::string l = p + "encoder.layer." + std::to_string(i) + ".";
    m.blocks_.push_back(Block{torch_linear<Scalar>(st, l + "attention.self.query"),
                              torch_linear<Scalar>(st, l + "attention.self.key"),
                              torch_linear<Scalar>(st, l + "attention.self.value"),
                              torch_linear<Scalar>(st, l + "attention.output.dense"),
                              layer_norm<Scalar>(st, l + "attention.output.LayerNorm", eps),
                              torch_linear<Scalar>(st, l + "intermediate.dense"),
                              torch_linear<Scalar>(st, l + "output.dense"),
                              layer_norm<Scalar>(st, l + "output.LayerNorm", eps)});
  }
  const std::string head = roberta ? "lm_head." : "cls.predictions.";
  if (roberta) {
    m.head_transform_ = torch_linear<Scalar>(st, head + "dense");
    m.head_norm_ = layer_norm<Scalar>(st, head + "layer_norm", eps);
  } else {
    m.head_transform_ = torch_linear<Scalar>(st, head + "transform.dense");
    m.head_norm_ = layer_norm<Scalar>(st, head + "transform.LayerNorm", eps);
  }
  // The decoder is usually tied to the word embeddings and absent from the file.
  m.decoder_ = st.contains(head + "decoder.weight") ? st.matrix<Scalar>(head + "decoder.weight")
                                                    : m.word_embeddings_;
  m.decoder_bias_ = row<Scalar>(st, find_tensor(st, {head}, {"bias", "decoder.bias"}));
  if (m.word_embeddings_.cols() != config.hidden_size ||
      config.hidden_size % config.num_attention_heads != 0) {
    throw ParseError("encoder: embedding width does not match config");
  }
  return m;
}

template <typename Scalar>
Matrix<Scalar> MaskedEncoder<Scalar>::hidden_states(std::span<const int> ids,
                                                    std::span<const int> token_types) const {
  const auto t = static_cast<Eigen::Index>(ids.size());
  if (t == 0) throw std::invalid_argument("encoder: empty input");
  if (token_types.size() != ids.size()) {
    throw std::invalid_argument("encoder: token_types must match ids");
  }
  const Eigen::Index position_offset =
      config_.flavor == EncoderFlavor::kRoberta ? config_.pad_token_id + 1 : 0;
  if (t + position_offset > position_embeddings_.rows()) {
    throw std::invalid_argument("encoder: input longer than max_position_embeddings");
  }
  Matrix<Scalar> x(t, word_embeddings_.cols());
  for (Eigen::Index i = 0; i < t; ++i) {
    if (ids[i] < 0 || ids[i] >= word_embeddings_.rows()) {
      throw std::out_of_range("encoder: token id out of range");
    }
    if (token_types[i] < 0 || token_types[i] >= type_embeddings_.rows()) {
      throw std::out_of_range("encoder: token type out of range");
    }
    x.row(i) = word_embeddings_.row(ids[i]) + position_embeddings_.row(i + position_offset) +
               type_embeddings_.row(token_types[i]);
  }
  x = embedding_norm_(x);
  for (const auto& b : blocks_) {
    const Matrix<Scalar> a =
        attention<Scalar>(b.query(x), b.key(x), b.value(x), config_.num_attention_heads, false);
    x = b.attn_norm(x + b.attn_out(a));
    const Matrix<Scalar> h = gelu_erf(b.intermediate(x));
    x = b.output_norm(x + b.output(h));
  }
  return x;
}

template <typename Scalar>
Matrix<Scalar> MaskedEncoder<Scalar>::logits_at(std::span<const int> ids,
                                                std::span<const int> token_types,
                                                std::span<const int> positions) const {
  const Matrix<Scalar> h = hidden_states(ids, token_types);
  Matrix<Scalar> picked(static_cast<Eigen::Index>(positions.size()), h.cols());
  for (std::size_t i = 0; i < positions.size(); ++i) picked.row(i) = h.row(positions[i]);
  const Matrix<Scalar> transformed = head_norm_(gelu_erf(head_transform_(picked)));
  Matrix<Scalar> out = transformed * decoder_.transpose();
  out.rowwise() += decoder_bias_;
  return out;
}

template <typename Scalar>
Matrix<Scalar> MaskedEncoder<Scalar>::logits(std::span<const int> ids,
                                             std::span<const int> token_types) const {
  std::vector<int> all(ids.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return logits_at(ids, token_types, all);
}

template class Gpt2<float>;
template class Gpt2<double>;
template class MaskedEncoder<float>;
template class MaskedEncoder<double>;

}  // namespace cloze::lm
