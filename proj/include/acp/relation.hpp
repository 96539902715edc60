#ifndef ACP_RELATION_HPP_
#define ACP_RELATION_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "acp/graph.hpp"
#include "acp/tensor.hpp"

namespace acp {

enum class PathSpecial { kNone, kSelf, kDisconnected };

struct PathStep {
  std::string label;
  bool forward;  // true when the edge was traversed head -> tail
};

// Shortest label sequence between two concept nodes of a Levi graph.
// labels empty iff special == kSelf; special == kDisconnected when no path
// exists within max_len relation hops.
struct RelationPath {
  std::vector<PathStep> labels;
  std::size_t length = 0;
  PathSpecial special = PathSpecial::kNone;
  // Concept nodes visited, endpoints included (labels.size() + 1 entries
  // for an ordinary path). Used when rendering explanations.
  std::vector<int> concept_chain;
};

// Relation-embedding vocabulary. Reserved tokens <self>, <none>, <unk>
// occupy rows 0..2; every other entry is "label@fwd" or "label@rev".
class RelationVocab {
 public:
  RelationVocab();
  std::size_t add(const std::string& token);       // idempotent
  void add_relation(const std::string& label);     // adds both directions
  std::size_t lookup(const std::string& token) const;  // <unk> when missing
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  mutable std::size_t unk_hits = 0;

  std::string to_text() const;  // one token per line, reserved first
  static RelationVocab from_text(const std::string& text);

  static constexpr std::size_t kSelf = 0;
  static constexpr std::size_t kNone = 1;
  static constexpr std::size_t kUnk = 2;

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t> index_;
};

// Token index sequence fed to the GRU for a path (or special marker).
std::vector<std::size_t> path_tokens(const RelationPath& path,
                                     const RelationVocab& vocab);

struct GruCell {
  Tensor w_update, u_update, b_update;
  Tensor w_reset, u_reset, b_reset;
  Tensor w_cand, u_cand, b_cand;

  static GruCell init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);
  // x: (input_dim), h: (hidden_dim) -> new hidden state.
  Tensor step(const Tensor& x, const Tensor& h) const;
  void collect(const std::string& prefix, std::vector<Parameter>& out);
};

struct RelationEncoderParams {
  Tensor embeddings;  // vocab x input_dim
  GruCell forward_gru;
  GruCell backward_gru;
  Tensor w_split;     // (2*model_dim) x (2*hidden_dim)
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t model_dim = 0;

  static RelationEncoderParams init(std::size_t vocab_size, std::size_t input_dim,
                                    std::size_t hidden_dim, std::size_t model_dim,
                                    Rng& rng);
  void collect(std::vector<Parameter>& out);
};

struct RelationEncoding {
  Tensor r_ij;   // (2*hidden_dim)
  Tensor r_fwd;  // (model_dim), first half of W_r r_ij
  Tensor r_bwd;  // (model_dim), second half
};

// BFS over the Levi graph treating arcs as bidirectional; ties broken by
// expanding the smallest node id first. i and j must be concept nodes.
RelationPath shortest_path(const LeviGraph& levi, int i, int j, std::size_t max_len);

// Bidirectional GRU over the path's relation-token embeddings; result is
// [forward final ; backward final].
Tensor encode_path(const RelationPath& path, const RelationEncoderParams& params,
                   const RelationVocab& vocab);

// Splits the projected relation vector into its two directional halves.
std::pair<Tensor, Tensor> split_relation(const Tensor& r_ij, const Tensor& w_split);

struct AllPairsRelations {
  std::size_t n = 0;
  std::vector<RelationPath> paths;     // n*n, i-major
  // Unique-path deduplication: pair (i,j) uses encoding unique_index[i*n+j].
  std::vector<std::size_t> unique_index;
  std::vector<std::vector<std::size_t>> unique_tokens;
};

// Path matrix over all concept-node pairs of the integrated graph.
AllPairsRelations all_pairs_paths(const IntegratedGraph& g,
                                  const RelationVocab& vocab, std::size_t max_len);

struct RelationMatrices {
  Tensor fwd;  // (n*n, model_dim)
  Tensor bwd;  // (n*n, model_dim)
};

// Encodes each unique path once and scatters into the (n*n) pair layout.
RelationMatrices encode_all_pairs(const AllPairsRelations& pairs,
                                  const RelationEncoderParams& params);

// Dense per-pair encodings (r_ij with split halves); convenience used by
// tests and the explanation exporter.
std::vector<RelationEncoding> all_pairs_relations(const IntegratedGraph& g,
                                                  const RelationEncoderParams& params,
                                                  const RelationVocab& vocab,
                                                  std::size_t max_len);

}  // namespace acp

#endif  // ACP_RELATION_HPP_
