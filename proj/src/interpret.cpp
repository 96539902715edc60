#include "acp/interpret.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"

namespace acp {

std::vector<std::vector<double>> aggregate_attention(const GraphEncoderOutput& output,
                                                     const ModelConfig& config) {
  if (output.attention_maps.empty())
    throw std::invalid_argument("no attention maps retained");
  std::size_t n_rel = config.relation_layers;
  std::size_t layer;
  if (config.explain_layer < 0) {
    layer = n_rel > 0 ? n_rel - 1 : output.attention_maps.size() - 1;
  } else {
    layer = static_cast<std::size_t>(config.explain_layer);
    if (layer >= output.attention_maps.size())
      throw std::invalid_argument("explain_layer out of range");
  }
  const std::vector<Tensor>& heads = output.attention_maps[layer];
  std::size_t n = heads[0].rows();
  std::vector<std::vector<double>> agg(n, std::vector<double>(n, 0.0));
  bool use_max = config.explain_heads == "max";
  for (std::size_t h = 0; h < heads.size(); ++h) {
    const auto& v = heads[h].values();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double x = v[i * n + j];
        if (use_max)
          agg[i][j] = h == 0 ? x : std::max(agg[i][j], x);
        else
          agg[i][j] += x / static_cast<double>(heads.size());
      }
  }
  return agg;
}

namespace {

std::vector<std::string> render_path(const RelationPath& path,
                                     const IntegratedGraph& graph) {
  std::vector<std::string> out;
  if (path.special == PathSpecial::kDisconnected) return {"<none>"};
  for (std::size_t t = 0; t < path.concept_chain.size(); ++t) {
    out.push_back(graph.nodes[path.concept_chain[t]].label);
    if (t < path.labels.size())
      out.push_back(path.labels[t].label +
                    (path.labels[t].forward ? "->" : "<-"));
  }
  return out;
}

}  // namespace

std::vector<PathExplanation> top_paths(const GraphEncoderOutput& output,
                                       const IntegratedGraph& graph,
                                       const AllPairsRelations& pairs,
                                       const ModelConfig& config, std::size_t k) {
  auto agg = aggregate_attention(output, config);
  std::size_t n = agg.size();
  struct Entry {
    double weight;
    std::size_t i, j;
  };
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) entries.push_back({agg[i][j], i, j});
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  if (k < entries.size()) entries.resize(k);
  std::vector<PathExplanation> out;
  for (const Entry& e : entries) {
    PathExplanation pe;
    pe.source = graph.nodes[e.i].label;
    pe.target = graph.nodes[e.j].label;
    pe.attention = e.weight;
    pe.path = render_path(pairs.paths[e.i * n + e.j], graph);
    out.push_back(std::move(pe));
  }
  return out;
}

std::string heatmap_to_csv(const GraphEncoderOutput& output,
                           const IntegratedGraph& graph, const ModelConfig& config) {
  auto agg = aggregate_attention(output, config);
  std::size_t n = agg.size();
  std::string out = "source";
  for (std::size_t j = 0; j < n; ++j) out += "," + graph.nodes[j].label;
  out += "\n";
  char buf[64];
  for (std::size_t i = 0; i < n; ++i) {
    out += graph.nodes[i].label;
    for (std::size_t j = 0; j < n; ++j) {
      std::snprintf(buf, sizeof(buf), ",%.12f", agg[i][j]);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::string paths_to_json(const std::vector<PathExplanation>& paths) {
  nlohmann::json j = nlohmann::json::array();
  for (const PathExplanation& p : paths)
    j.push_back({{"source", p.source},
                 {"target", p.target},
                 {"attention", p.attention},
                 {"path", p.path}});
  return j.dump(2) + "\n";
}

void export_heatmap(const GraphEncoderOutput& output, const IntegratedGraph& graph,
                    const AllPairsRelations& pairs, const ModelConfig& config,
                    std::size_t k, const std::string& out_dir) {
  atomic_write(out_dir + "/heatmap.csv", heatmap_to_csv(output, graph, config));
  atomic_write(out_dir + "/paths.json",
               paths_to_json(top_paths(output, graph, pairs, config, k)));
}

}  // namespace acp
