#ifndef ACP_GRAPH_HPP_
#define ACP_GRAPH_HPP_

#include <set>
#include <string>
#include <vector>

#include "acp/amr.hpp"
#include "acp/store.hpp"

namespace acp {

enum class NodeOrigin { kAmr, kConceptNet, kToken, kRoot };
enum class EdgeOrigin { kAmr, kConceptNet, kTokenLink };

struct GNode {
  std::string label;
  NodeOrigin origin;
  bool frame = false;
};

struct GEdge {
  int src;
  int dst;
  std::string label;
  EdgeOrigin origin;
};

// Merged AMR + ConceptNet graph (any of the ACF/ACP/CF/CP variants).
// Connected from `root`; immutable once built.
struct IntegratedGraph {
  std::vector<GNode> nodes;
  std::vector<GEdge> edges;
  int root = 0;

  int find_node(const std::string& label, NodeOrigin origin) const;
  bool reachable_from_root() const;  // undirected traversal
};

// Edge-as-node form: concept nodes keep their IntegratedGraph index; every
// edge becomes a relation node with one in-arc and one out-arc.
struct LeviGraph {
  struct LNode {
    std::string label;
    bool is_relation;
  };
  std::vector<LNode> nodes;                  // concepts first, then relation nodes
  std::vector<std::pair<int, int>> arcs;     // src -> relation, relation -> dst
  std::size_t concept_count = 0;
};

struct BuildOptions {
  int expansion_hops = 1;  // 1-hop ConceptNet neighborhoods (2 for experiments)
  std::set<std::string> arg_roles = {":ARG0", ":ARG1"};
};

// Nodes incident to an :ARG0 or :ARG1 edge.
std::set<std::string> arg_endpoints(const AmrGraph& amr,
                                    const BuildOptions& opts = {});

IntegratedGraph build_acf(const AmrGraph& amr, const ConceptStore& store,
                          const BuildOptions& opts = {});
IntegratedGraph build_acp(const AmrGraph& amr, const ConceptStore& store,
                          const BuildOptions& opts = {});
IntegratedGraph build_cf(const std::vector<std::string>& tokens,
                         const ConceptStore& store, const BuildOptions& opts = {});
IntegratedGraph build_cp(const std::vector<std::string>& tokens, const AmrGraph& amr,
                         const ConceptStore& store, const BuildOptions& opts = {});

LeviGraph to_levi(const IntegratedGraph& g);

std::string graph_to_json(const IntegratedGraph& g);
IntegratedGraph graph_from_json(const std::string& text);

std::string origin_name(NodeOrigin o);
std::string origin_name(EdgeOrigin o);

}  // namespace acp

#endif  // ACP_GRAPH_HPP_
