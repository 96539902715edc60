#ifndef ACP_INTERPRET_HPP_
#define ACP_INTERPRET_HPP_

#include <string>
#include <vector>

#include "acp/qa.hpp"

namespace acp {

struct PathExplanation {
  std::string source;
  std::string target;
  double attention = 0.0;
  // Alternating concept and relation labels from source to target;
  // relation steps carry a direction suffix ("->" / "<-").
  std::vector<std::string> path;
};

// Attention map used for interpretation: the configured relation layer
// (explain_layer, -1 = last), heads combined by mean or max.
std::vector<std::vector<double>> aggregate_attention(const GraphEncoderOutput& output,
                                                     const ModelConfig& config);

// Top-k off-diagonal pairs by aggregated attention; ties broken by
// (source id, target id). k beyond the pair count returns all pairs.
std::vector<PathExplanation> top_paths(const GraphEncoderOutput& output,
                                       const IntegratedGraph& graph,
                                       const AllPairsRelations& pairs,
                                       const ModelConfig& config, std::size_t k);

std::string heatmap_to_csv(const GraphEncoderOutput& output,
                           const IntegratedGraph& graph, const ModelConfig& config);

std::string paths_to_json(const std::vector<PathExplanation>& paths);

// Writes heatmap.csv and paths.json into out_dir.
void export_heatmap(const GraphEncoderOutput& output, const IntegratedGraph& graph,
                    const AllPairsRelations& pairs, const ModelConfig& config,
                    std::size_t k, const std::string& out_dir);

}  // namespace acp

#endif  // ACP_INTERPRET_HPP_
