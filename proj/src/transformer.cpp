#include "acp/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

namespace acp {

namespace {

template <typename T>
void set_field(std::map<std::string, std::string>& kv, const std::string& key, T& out) {
  auto it = kv.find(key);
  if (it == kv.end()) return;
  std::istringstream is(it->second);
  is >> out;
}

}  // namespace

std::string ModelConfig::to_text() const {
  std::ostringstream os;
  os << "model_dim=" << model_dim << "\n";
  os << "heads=" << heads << "\n";
  os << "relation_layers=" << relation_layers << "\n";
  os << "vanilla_layers=" << vanilla_layers << "\n";
  os << "ffn_dim=" << ffn_dim << "\n";
  os << "gru_hidden=" << gru_hidden << "\n";
  os << "rel_emb_dim=" << rel_emb_dim << "\n";
  os << "max_len=" << max_len << "\n";
  os << "max_nodes=" << max_nodes << "\n";
  os << "scale_scores=" << (scale_scores ? 1 : 0) << "\n";
  os << "seed=" << seed << "\n";
  os << "learning_rate=" << learning_rate << "\n";
  os << "epochs=" << epochs << "\n";
  os << "batch_size=" << batch_size << "\n";
  os << "patience=" << patience << "\n";
  os << "graph_type=" << graph_type << "\n";
  os << "explain_layer=" << explain_layer << "\n";
  os << "explain_heads=" << explain_heads << "\n";
  return os.str();
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  for (const std::string& line : split_char(text, '\n')) {
    if (line.empty() || line[0] == '#') continue;
    auto pos = line.find('=');
    if (pos == std::string::npos)
      throw std::runtime_error("bad config line: " + line);
    kv[line.substr(0, pos)] = line.substr(pos + 1);
  }
  ModelConfig cfg;
  set_field(kv, "model_dim", cfg.model_dim);
  set_field(kv, "heads", cfg.heads);
  set_field(kv, "relation_layers", cfg.relation_layers);
  set_field(kv, "vanilla_layers", cfg.vanilla_layers);
  set_field(kv, "ffn_dim", cfg.ffn_dim);
  set_field(kv, "gru_hidden", cfg.gru_hidden);
  set_field(kv, "rel_emb_dim", cfg.rel_emb_dim);
  set_field(kv, "max_len", cfg.max_len);
  set_field(kv, "max_nodes", cfg.max_nodes);
  int scale = 1;
  set_field(kv, "scale_scores", scale);
  cfg.scale_scores = scale != 0;
  set_field(kv, "seed", cfg.seed);
  set_field(kv, "learning_rate", cfg.learning_rate);
  set_field(kv, "epochs", cfg.epochs);
  set_field(kv, "batch_size", cfg.batch_size);
  set_field(kv, "patience", cfg.patience);
  set_field(kv, "graph_type", cfg.graph_type);
  set_field(kv, "explain_layer", cfg.explain_layer);
  set_field(kv, "explain_heads", cfg.explain_heads);
  if (cfg.model_dim % cfg.heads != 0)
    throw std::runtime_error("model_dim must be divisible by heads");
  return cfg;
}

WordVectors WordVectors::load(const std::string& text) {
  WordVectors wv;
  for (const std::string& line : split_char(text, '\n')) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string token;
    is >> token;
    std::vector<double> vec;
    double x;
    while (is >> x) vec.push_back(x);
    if (vec.empty()) throw std::runtime_error("word vector line without values");
    if (wv.dim_ == 0) wv.dim_ = vec.size();
    if (vec.size() != wv.dim_)
      throw std::runtime_error("inconsistent word vector dimension for " + token);
    wv.vecs_[token] = std::move(vec);
  }
  wv.mean_.assign(wv.dim_, 0.0);
  for (const auto& [tok, vec] : wv.vecs_)
    for (std::size_t i = 0; i < wv.dim_; ++i) wv.mean_[i] += vec[i];
  if (!wv.vecs_.empty())
    for (double& m : wv.mean_) m /= static_cast<double>(wv.vecs_.size());
  return wv;
}

WordVectors WordVectors::random(const std::vector<std::string>& tokens,
                                std::size_t dim, std::uint64_t seed) {
  WordVectors wv;
  wv.dim_ = dim;
  Rng rng(seed);
  double a = std::sqrt(3.0 / static_cast<double>(dim));  // unit expected norm
  for (const std::string& tok : tokens) {
    if (wv.vecs_.count(tok)) continue;
    std::vector<double> vec(dim);
    for (double& v : vec) v = uniform(rng, -a, a);
    wv.vecs_[tok] = std::move(vec);
  }
  wv.mean_.assign(dim, 0.0);
  for (const auto& [tok, vec] : wv.vecs_)
    for (std::size_t i = 0; i < dim; ++i) wv.mean_[i] += vec[i];
  if (!wv.vecs_.empty())
    for (double& m : wv.mean_) m /= static_cast<double>(wv.vecs_.size());
  return wv;
}

bool WordVectors::contains(const std::string& token) const {
  return vecs_.count(token) > 0;
}

std::vector<double> WordVectors::lookup(const std::string& token) const {
  auto it = vecs_.find(token);
  if (it != vecs_.end()) return it->second;
  ++oov_hits;
  return mean_;
}

std::string WordVectors::to_text() const {
  std::ostringstream os;
  os.precision(17);
  for (const auto& [tok, vec] : vecs_) {
    os << tok;
    for (double v : vec) os << ' ' << v;
    os << '\n';
  }
  return os.str();
}

AttentionLayerParams AttentionLayerParams::init(const ModelConfig& cfg, Rng& rng) {
  AttentionLayerParams p;
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    p.w_q.push_back(Tensor::glorot({cfg.model_dim, cfg.head_dim()}, rng));
    p.w_k.push_back(Tensor::glorot({cfg.model_dim, cfg.head_dim()}, rng));
    p.w_v.push_back(Tensor::glorot({cfg.model_dim, cfg.head_dim()}, rng));
  }
  p.w_out = Tensor::glorot({cfg.model_dim, cfg.model_dim}, rng);
  p.ffn_w1 = Tensor::glorot({cfg.model_dim, cfg.ffn_dim}, rng);
  p.ffn_b1 = Tensor::zeros({cfg.ffn_dim});
  p.ffn_w2 = Tensor::glorot({cfg.ffn_dim, cfg.model_dim}, rng);
  p.ffn_b2 = Tensor::zeros({cfg.model_dim});
  p.ln1_gain = Tensor::constant({cfg.model_dim}, 1.0);
  p.ln1_bias = Tensor::zeros({cfg.model_dim});
  p.ln2_gain = Tensor::constant({cfg.model_dim}, 1.0);
  p.ln2_bias = Tensor::zeros({cfg.model_dim});
  return p;
}

void AttentionLayerParams::collect(const std::string& prefix,
                                   std::vector<Parameter>& out) {
  for (std::size_t h = 0; h < w_q.size(); ++h) {
    out.push_back({prefix + ".h" + std::to_string(h) + ".w_q", w_q[h]});
    out.push_back({prefix + ".h" + std::to_string(h) + ".w_k", w_k[h]});
    out.push_back({prefix + ".h" + std::to_string(h) + ".w_v", w_v[h]});
  }
  out.push_back({prefix + ".w_out", w_out});
  out.push_back({prefix + ".ffn_w1", ffn_w1});
  out.push_back({prefix + ".ffn_b1", ffn_b1});
  out.push_back({prefix + ".ffn_w2", ffn_w2});
  out.push_back({prefix + ".ffn_b2", ffn_b2});
  out.push_back({prefix + ".ln1_gain", ln1_gain});
  out.push_back({prefix + ".ln1_bias", ln1_bias});
  out.push_back({prefix + ".ln2_gain", ln2_gain});
  out.push_back({prefix + ".ln2_bias", ln2_bias});
}

GraphEncoderParams GraphEncoderParams::init(const ModelConfig& cfg,
                                            std::size_t rel_vocab_size, Rng& rng) {
  GraphEncoderParams p;
  p.position_table = Tensor::glorot({cfg.max_nodes, cfg.model_dim}, rng);
  for (std::size_t l = 0; l < cfg.relation_layers; ++l)
    p.relation_layers.push_back(AttentionLayerParams::init(cfg, rng));
  for (std::size_t l = 0; l < cfg.vanilla_layers; ++l)
    p.vanilla_layers.push_back(AttentionLayerParams::init(cfg, rng));
  p.relation_encoder = RelationEncoderParams::init(
      rel_vocab_size, cfg.rel_emb_dim, cfg.gru_hidden, cfg.model_dim, rng);
  return p;
}

void GraphEncoderParams::collect(std::vector<Parameter>& out) {
  out.push_back({"positions", position_table});
  for (std::size_t l = 0; l < relation_layers.size(); ++l)
    relation_layers[l].collect("rel_layer" + std::to_string(l), out);
  for (std::size_t l = 0; l < vanilla_layers.size(); ++l)
    vanilla_layers[l].collect("van_layer" + std::to_string(l), out);
  relation_encoder.collect(out);
}

std::vector<std::size_t> bfs_positions(const IntegratedGraph& g) {
  std::size_t n = g.nodes.size();
  std::vector<std::vector<int>> adj(n);
  for (const GEdge& e : g.edges) {
    adj[e.src].push_back(e.dst);
    adj[e.dst].push_back(e.src);
  }
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  std::vector<std::size_t> pos(n, 0);
  std::vector<bool> seen(n, false);
  std::queue<int> q;
  q.push(g.root);
  seen[g.root] = true;
  std::size_t next = 0;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    pos[u] = next++;
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = true;
        q.push(v);
      }
  }
  // Disconnected nodes cannot occur in valid graphs; assign remaining
  // positions deterministically anyway.
  for (std::size_t i = 0; i < n; ++i)
    if (!seen[i]) pos[i] = next++;
  return pos;
}

Tensor init_node_embeddings(const IntegratedGraph& g, const WordVectors& words,
                            const Tensor& position_table, std::size_t max_nodes) {
  std::size_t n = g.nodes.size();
  if (n > max_nodes)
    throw std::invalid_argument("graph has " + std::to_string(n) +
                                " nodes, exceeding max_nodes=" +
                                std::to_string(max_nodes));
  std::size_t d = words.dim();
  std::vector<double> data(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> vec = words.lookup(normalize_concept(g.nodes[i].label));
    std::copy(vec.begin(), vec.end(), data.begin() + i * d);
  }
  Tensor word_part = Tensor::from({n, d}, std::move(data));
  return add(word_part, gather_rows(position_table, bfs_positions(g)));
}

Tensor relation_attention_scores(const Tensor& c, const RelationMatrices* relations,
                                 const AttentionLayerParams& params, std::size_t head,
                                 const ModelConfig& cfg) {
  std::size_t n = c.rows();
  Tensor q = matmul(c, params.w_q[head]);
  Tensor k = matmul(c, params.w_k[head]);
  Tensor scores;
  if (relations) {
    if (relations->fwd.rows() != n * n)
      throw std::invalid_argument("relation matrices incomplete: expected " +
                                  std::to_string(n * n) + " pair rows");
    Tensor a = matmul(relations->fwd, params.w_q[head]);
    Tensor b = matmul(relations->bwd, params.w_k[head]);
    scores = pairwise_bilinear_scores(q, k, a, b);
  } else {
    scores = matmul(q, transpose(k));
  }
  if (cfg.scale_scores)
    scores = affine(scores, 1.0 / std::sqrt(static_cast<double>(cfg.head_dim())), 0.0);
  return softmax_rows(scores);
}

Tensor attention_layer(const Tensor& c, const RelationMatrices* relations,
                       const AttentionLayerParams& params, const ModelConfig& cfg,
                       std::vector<Tensor>* attention_out) {
  std::vector<Tensor> head_outputs;
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    Tensor attn = relation_attention_scores(c, relations, params, h, cfg);
    if (attention_out) attention_out->push_back(attn);
    head_outputs.push_back(matmul(attn, matmul(c, params.w_v[h])));
  }
  Tensor combined = matmul(concat_cols(head_outputs), params.w_out);
  Tensor after_attn = layer_norm(add(c, combined), params.ln1_gain, params.ln1_bias);
  std::size_t n = c.rows();
  Tensor hidden = relu(add(matmul(after_attn, params.ffn_w1),
                           stack_rows(std::vector<Tensor>(n, params.ffn_b1))));
  Tensor ffn = add(matmul(hidden, params.ffn_w2),
                   stack_rows(std::vector<Tensor>(n, params.ffn_b2)));
  return layer_norm(add(after_attn, ffn), params.ln2_gain, params.ln2_bias);
}

GraphEncoderOutput encode_graph(const IntegratedGraph& g,
                                const AllPairsRelations& pairs,
                                const GraphEncoderParams& params,
                                const WordVectors& words, const ModelConfig& cfg) {
  GraphEncoderOutput out;
  Tensor c = init_node_embeddings(g, words, params.position_table, cfg.max_nodes);
  RelationMatrices relations = encode_all_pairs(pairs, params.relation_encoder);
  for (const AttentionLayerParams& layer : params.relation_layers) {
    std::vector<Tensor> maps;
    c = attention_layer(c, &relations, layer, cfg, &maps);
    out.attention_maps.push_back(std::move(maps));
  }
  for (const AttentionLayerParams& layer : params.vanilla_layers) {
    std::vector<Tensor> maps;
    c = attention_layer(c, nullptr, layer, cfg, &maps);
    out.attention_maps.push_back(std::move(maps));
  }
  out.node_states = c;
  out.graph_vector = sum_axis0(c);
  return out;
}

}  // namespace acp
