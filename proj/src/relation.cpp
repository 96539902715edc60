#include "acp/relation.hpp"

#include <algorithm>
#include <deque>
#include <queue>

namespace acp {

RelationVocab::RelationVocab() {
  add("<self>");
  add("<none>");
  add("<unk>");
}

std::size_t RelationVocab::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  std::size_t id = tokens_.size();
  tokens_.push_back(token);
  index_[token] = id;
  return id;
}

void RelationVocab::add_relation(const std::string& label) {
  add(label + "@fwd");
  add(label + "@rev");
}

std::size_t RelationVocab::lookup(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) {
    ++unk_hits;
    return kUnk;
  }
  return it->second;
}

std::string RelationVocab::to_text() const {
  std::string out;
  for (const std::string& t : tokens_) {
    out += t;
    out += '\n';
  }
  return out;
}

RelationVocab RelationVocab::from_text(const std::string& text) {
  RelationVocab vocab;
  std::size_t line_no = 0;
  for (const std::string& line : split_char(text, '\n')) {
    if (line.empty()) continue;
    if (line_no < 3) {
      const char* expected[] = {"<self>", "<none>", "<unk>"};
      if (line != expected[line_no])
        throw std::runtime_error("relation vocab: reserved token order violated");
    } else {
      vocab.add(line);
    }
    ++line_no;
  }
  return vocab;
}

std::vector<std::size_t> path_tokens(const RelationPath& path,
                                     const RelationVocab& vocab) {
  if (path.special == PathSpecial::kSelf) return {RelationVocab::kSelf};
  if (path.special == PathSpecial::kDisconnected) return {RelationVocab::kNone};
  std::vector<std::size_t> out;
  for (const PathStep& step : path.labels)
    out.push_back(vocab.lookup(step.label + (step.forward ? "@fwd" : "@rev")));
  return out;
}

GruCell GruCell::init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
  GruCell c;
  c.w_update = Tensor::glorot({input_dim, hidden_dim}, rng);
  c.u_update = Tensor::glorot({hidden_dim, hidden_dim}, rng);
  c.b_update = Tensor::zeros({hidden_dim});
  c.w_reset = Tensor::glorot({input_dim, hidden_dim}, rng);
  c.u_reset = Tensor::glorot({hidden_dim, hidden_dim}, rng);
  c.b_reset = Tensor::zeros({hidden_dim});
  c.w_cand = Tensor::glorot({input_dim, hidden_dim}, rng);
  c.u_cand = Tensor::glorot({hidden_dim, hidden_dim}, rng);
  c.b_cand = Tensor::zeros({hidden_dim});
  return c;
}

namespace {

// (d) vector times (d,h) matrix -> (h) vector.
Tensor vecmat(const Tensor& v, const Tensor& m) {
  return row(matmul(stack_rows({v}), m), 0);
}

}  // namespace

Tensor GruCell::step(const Tensor& x, const Tensor& h) const {
  Tensor z = sigmoid(add(add(vecmat(x, w_update), vecmat(h, u_update)), b_update));
  Tensor r = sigmoid(add(add(vecmat(x, w_reset), vecmat(h, u_reset)), b_reset));
  Tensor cand =
      tanh_t(add(add(vecmat(x, w_cand), vecmat(mul(r, h), u_cand)), b_cand));
  // h' = (1-z) * h + z * cand
  Tensor one_minus_z = affine(z, -1.0, 1.0);
  return add(mul(one_minus_z, h), mul(z, cand));
}

void GruCell::collect(const std::string& prefix, std::vector<Parameter>& out) {
  out.push_back({prefix + ".w_update", w_update});
  out.push_back({prefix + ".u_update", u_update});
  out.push_back({prefix + ".b_update", b_update});
  out.push_back({prefix + ".w_reset", w_reset});
  out.push_back({prefix + ".u_reset", u_reset});
  out.push_back({prefix + ".b_reset", b_reset});
  out.push_back({prefix + ".w_cand", w_cand});
  out.push_back({prefix + ".u_cand", u_cand});
  out.push_back({prefix + ".b_cand", b_cand});
}

RelationEncoderParams RelationEncoderParams::init(std::size_t vocab_size,
                                                  std::size_t input_dim,
                                                  std::size_t hidden_dim,
                                                  std::size_t model_dim, Rng& rng) {
  RelationEncoderParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.model_dim = model_dim;
  p.embeddings = Tensor::glorot({vocab_size, input_dim}, rng);
  p.forward_gru = GruCell::init(input_dim, hidden_dim, rng);
  p.backward_gru = GruCell::init(input_dim, hidden_dim, rng);
  p.w_split = Tensor::glorot({2 * model_dim, 2 * hidden_dim}, rng);
  return p;
}

void RelationEncoderParams::collect(std::vector<Parameter>& out) {
  out.push_back({"relenc.embeddings", embeddings});
  forward_gru.collect("relenc.fwd", out);
  backward_gru.collect("relenc.bwd", out);
  out.push_back({"relenc.w_split", w_split});
}

RelationPath shortest_path(const LeviGraph& levi, int i, int j,
                           std::size_t max_len) {
  if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= levi.concept_count ||
      static_cast<std::size_t>(j) >= levi.concept_count)
    throw std::invalid_argument("shortest_path endpoints must be concept nodes");
  RelationPath path;
  if (i == j) {
    path.special = PathSpecial::kSelf;
    path.concept_chain = {i};
    return path;
  }
  std::size_t total = levi.nodes.size();
  std::vector<std::vector<int>> adj(total);
  std::vector<int> rel_src(total, -1), rel_dst(total, -1);
  for (const auto& [u, v] : levi.arcs) {
    adj[u].push_back(v);
    adj[v].push_back(u);
    if (levi.nodes[v].is_relation) rel_src[v] = u;  // in-arc
    if (levi.nodes[u].is_relation) rel_dst[u] = v;  // out-arc
  }
  for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());

  std::vector<int> parent(total, -1);
  std::vector<int> dist(total, -1);
  std::queue<int> q;
  dist[i] = 0;
  q.push(i);
  std::size_t max_arcs = 2 * max_len;
  while (!q.empty() && dist[j] < 0) {
    int u = q.front();
    q.pop();
    if (static_cast<std::size_t>(dist[u]) >= max_arcs) continue;
    for (int v : adj[u])
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        parent[v] = u;
        q.push(v);
      }
  }
  if (dist[j] < 0) {
    path.special = PathSpecial::kDisconnected;
    return path;
  }
  // Walk back from j; every other node on the path is a relation node.
  std::vector<int> chain;
  for (int u = j; u != -1; u = parent[u]) chain.push_back(u);
  std::reverse(chain.begin(), chain.end());
  for (std::size_t t = 0; t < chain.size(); ++t) {
    if (t % 2 == 0) {
      path.concept_chain.push_back(chain[t]);
    } else {
      int r = chain[t];
      int prev = chain[t - 1];
      path.labels.push_back({levi.nodes[r].label, rel_src[r] == prev});
    }
  }
  path.length = path.labels.size();
  return path;
}

Tensor encode_path(const RelationPath& path, const RelationEncoderParams& params,
                   const RelationVocab& vocab) {
  std::vector<std::size_t> tokens = path_tokens(path, vocab);
  Tensor xs = gather_rows(params.embeddings, tokens);
  std::size_t n = tokens.size();
  Tensor hf = Tensor::zeros({params.hidden_dim});
  for (std::size_t t = 0; t < n; ++t)
    hf = params.forward_gru.step(row(xs, t), hf);
  Tensor hb = Tensor::zeros({params.hidden_dim});
  for (std::size_t t = n; t-- > 0;)
    hb = params.backward_gru.step(row(xs, t), hb);
  return concat_vecs({hf, hb});
}

std::pair<Tensor, Tensor> split_relation(const Tensor& r_ij, const Tensor& w_split) {
  if (w_split.shape().size() != 2 || w_split.cols() != r_ij.size() ||
      w_split.rows() % 2 != 0)
    throw std::invalid_argument("split_relation: W_r shape incompatible with r_ij");
  Tensor projected = vecmat(r_ij, transpose(w_split));
  std::size_t half = w_split.rows() / 2;
  return {slice_vec(projected, 0, half), slice_vec(projected, half, half)};
}

AllPairsRelations all_pairs_paths(const IntegratedGraph& g,
                                  const RelationVocab& vocab, std::size_t max_len) {
  AllPairsRelations out;
  out.n = g.nodes.size();
  LeviGraph levi = to_levi(g);
  std::map<std::vector<std::size_t>, std::size_t> seen;
  for (std::size_t i = 0; i < out.n; ++i)
    for (std::size_t j = 0; j < out.n; ++j) {
      RelationPath p = shortest_path(levi, static_cast<int>(i), static_cast<int>(j),
                                     max_len);
      std::vector<std::size_t> toks = path_tokens(p, vocab);
      auto [it, inserted] = seen.try_emplace(toks, out.unique_tokens.size());
      if (inserted) out.unique_tokens.push_back(toks);
      out.unique_index.push_back(it->second);
      out.paths.push_back(std::move(p));
    }
  return out;
}

RelationMatrices encode_all_pairs(const AllPairsRelations& pairs,
                                  const RelationEncoderParams& params) {
  std::vector<Tensor> encodings;
  for (const auto& tokens : pairs.unique_tokens) {
    Tensor xs = gather_rows(params.embeddings, tokens);
    Tensor hf = Tensor::zeros({params.hidden_dim});
    for (std::size_t t = 0; t < tokens.size(); ++t)
      hf = params.forward_gru.step(row(xs, t), hf);
    Tensor hb = Tensor::zeros({params.hidden_dim});
    for (std::size_t t = tokens.size(); t-- > 0;)
      hb = params.backward_gru.step(row(xs, t), hb);
    encodings.push_back(concat_vecs({hf, hb}));
  }
  Tensor stacked = stack_rows(encodings);                  // (U, 2h)
  Tensor projected = matmul(stacked, transpose(params.w_split));  // (U, 2m)
  Tensor fwd_u = slice_cols(projected, 0, params.model_dim);
  Tensor bwd_u = slice_cols(projected, params.model_dim, params.model_dim);
  RelationMatrices out;
  out.fwd = gather_rows(fwd_u, pairs.unique_index);
  out.bwd = gather_rows(bwd_u, pairs.unique_index);
  return out;
}

std::vector<RelationEncoding> all_pairs_relations(const IntegratedGraph& g,
                                                  const RelationEncoderParams& params,
                                                  const RelationVocab& vocab,
                                                  std::size_t max_len) {
  AllPairsRelations pairs = all_pairs_paths(g, vocab, max_len);
  std::vector<RelationEncoding> out;
  for (std::size_t p = 0; p < pairs.paths.size(); ++p) {
    RelationEncoding enc;
    enc.r_ij = encode_path(pairs.paths[p], params, vocab);
    auto [f, b] = split_relation(enc.r_ij, params.w_split);
    enc.r_fwd = f;
    enc.r_bwd = b;
    out.push_back(enc);
  }
  return out;
}

}  // namespace acp
