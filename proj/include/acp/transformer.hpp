#ifndef ACP_TRANSFORMER_HPP_
#define ACP_TRANSFORMER_HPP_

#include <map>
#include <string>
#include <vector>

#include "acp/graph.hpp"
#include "acp/relation.hpp"
#include "acp/tensor.hpp"

namespace acp {

struct ModelConfig {
  std::size_t model_dim = 64;
  std::size_t heads = 4;
  std::size_t relation_layers = 2;  // relation-enhanced attention
  std::size_t vanilla_layers = 1;   // interaction modeling on node states
  std::size_t ffn_dim = 128;
  std::size_t gru_hidden = 32;
  std::size_t rel_emb_dim = 32;
  std::size_t max_len = 4;      // relation hops before a pair counts as disconnected
  std::size_t max_nodes = 128;
  bool scale_scores = true;     // 1/sqrt(head_dim) scaling of raw scores
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;
  std::size_t epochs = 50;
  std::size_t batch_size = 8;
  std::size_t patience = 10;
  std::string graph_type = "acp";  // acp | acf | cf | cp
  // Explanation aggregation: which relation layer (-1 = last) and how to
  // combine heads ("mean" or "max").
  int explain_layer = -1;
  std::string explain_heads = "mean";

  std::size_t head_dim() const { return model_dim / heads; }

  std::string to_text() const;  // key=value lines
  static ModelConfig from_text(const std::string& text);
};

// Pretrained word-embedding table, text layout: token then whitespace
// separated components, one entry per line.
class WordVectors {
 public:
  static WordVectors load(const std::string& text);
  static WordVectors random(const std::vector<std::string>& tokens, std::size_t dim,
                            std::uint64_t seed);

  std::size_t dim() const { return dim_; }
  bool contains(const std::string& token) const;
  // Lookup of a normalized label; unknown tokens fall back to the mean of
  // all known vectors.
  std::vector<double> lookup(const std::string& token) const;
  std::string to_text() const;
  mutable std::size_t oov_hits = 0;

  const std::map<std::string, std::vector<double>>& entries() const { return vecs_; }

 private:
  std::map<std::string, std::vector<double>> vecs_;
  std::vector<double> mean_;
  std::size_t dim_ = 0;
};

struct AttentionLayerParams {
  std::vector<Tensor> w_q, w_k, w_v;  // per head, (model_dim, head_dim)
  Tensor w_out;                       // (model_dim, model_dim)
  Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;
  Tensor ln1_gain, ln1_bias, ln2_gain, ln2_bias;

  static AttentionLayerParams init(const ModelConfig& cfg, Rng& rng);
  void collect(const std::string& prefix, std::vector<Parameter>& out);
};

struct GraphEncoderParams {
  Tensor position_table;  // (max_nodes, model_dim)
  std::vector<AttentionLayerParams> relation_layers;
  std::vector<AttentionLayerParams> vanilla_layers;
  RelationEncoderParams relation_encoder;

  static GraphEncoderParams init(const ModelConfig& cfg, std::size_t rel_vocab_size,
                                 Rng& rng);
  void collect(std::vector<Parameter>& out);
};

// Breadth-first order from the root, ties by node id; position of node i in
// storage order is structural, independent of storage permutation.
std::vector<std::size_t> bfs_positions(const IntegratedGraph& g);

// c_i = word_vector(normalized label) + position embedding.
Tensor init_node_embeddings(const IntegratedGraph& g, const WordVectors& words,
                            const Tensor& position_table, std::size_t max_nodes);

// Factored relation-enhanced scores for one head, scaled and row-softmaxed.
// When `relations` is null the vanilla dot-product score is produced.
Tensor relation_attention_scores(const Tensor& c, const RelationMatrices* relations,
                                 const AttentionLayerParams& params, std::size_t head,
                                 const ModelConfig& cfg);

// Full multi-head layer: attention, output projection, residual + layer
// norm, feed forward, residual + layer norm. Softmaxed per-head attention
// matrices are appended to *attention_out when provided.
Tensor attention_layer(const Tensor& c, const RelationMatrices* relations,
                       const AttentionLayerParams& params, const ModelConfig& cfg,
                       std::vector<Tensor>* attention_out = nullptr);

struct GraphEncoderOutput {
  Tensor node_states;   // (n, model_dim)
  Tensor graph_vector;  // (model_dim)
  // attention_maps[layer][head] is the (n, n) row-stochastic matrix;
  // relation layers first, then vanilla layers.
  std::vector<std::vector<Tensor>> attention_maps;
};

GraphEncoderOutput encode_graph(const IntegratedGraph& g,
                                const AllPairsRelations& pairs,
                                const GraphEncoderParams& params,
                                const WordVectors& words, const ModelConfig& cfg);

}  // namespace acp

#endif  // ACP_TRANSFORMER_HPP_
