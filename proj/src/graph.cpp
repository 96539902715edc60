#include "acp/graph.hpp"

#include <map>
#include <queue>

#include "json.hpp"

namespace acp {

int IntegratedGraph::find_node(const std::string& label, NodeOrigin origin) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].label == label && nodes[i].origin == origin)
      return static_cast<int>(i);
  return -1;
}

bool IntegratedGraph::reachable_from_root() const {
  if (nodes.empty()) return true;
  std::vector<std::vector<int>> adj(nodes.size());
  for (const GEdge& e : edges) {
    adj[e.src].push_back(e.dst);
    adj[e.dst].push_back(e.src);
  }
  std::vector<bool> seen(nodes.size(), false);
  std::queue<int> q;
  q.push(root);
  seen[root] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = true;
        ++count;
        q.push(v);
      }
  }
  return count == nodes.size();
}

std::set<std::string> arg_endpoints(const AmrGraph& amr, const BuildOptions& opts) {
  std::set<std::string> out;
  for (const AmrEdge& e : amr.edges)
    if (opts.arg_roles.count(e.label)) {
      out.insert(e.source);
      out.insert(e.target);
    }
  return out;
}

namespace {

class GraphAssembler {
 public:
  GraphAssembler(IntegratedGraph& g, const ConceptStore& store,
                 const BuildOptions& opts)
      : g_(g), store_(store), opts_(opts) {}

  int concept_node(const std::string& label) {
    auto it = cn_nodes_.find(label);
    if (it != cn_nodes_.end()) return it->second;
    int id = static_cast<int>(g_.nodes.size());
    g_.nodes.push_back({label, NodeOrigin::kConceptNet, false});
    cn_nodes_[label] = id;
    return id;
  }

  void add_edge(int src, int dst, const std::string& label, EdgeOrigin origin) {
    std::string key = std::to_string(src) + "|" + std::to_string(dst) + "|" + label;
    if (!edge_keys_.insert(key).second) return;
    g_.edges.push_back({src, dst, label, origin});
  }

  // Attach the 1-hop (or configured depth) ConceptNet neighborhood of the
  // given anchor node, matching on its normalized key. Assertion direction is
  // preserved: a tail match attaches with the anchor as target.
  void expand(int anchor, const std::string& key) {
    struct Item {
      int node;
      std::string key;
      int depth;
    };
    std::queue<Item> frontier;
    frontier.push({anchor, key, 0});
    while (!frontier.empty()) {
      Item item = frontier.front();
      frontier.pop();
      if (item.depth >= opts_.expansion_hops) continue;
      for (const Assertion& a : store_.neighbors(item.key)) {
        if (a.head == a.tail) continue;  // self loop, nothing to attach
        if (a.head == item.key) {
          int t = concept_node(a.tail);
          add_edge(item.node, t, a.relation, EdgeOrigin::kConceptNet);
          frontier.push({t, a.tail, item.depth + 1});
        }
        if (a.tail == item.key) {
          int h = concept_node(a.head);
          add_edge(h, item.node, a.relation, EdgeOrigin::kConceptNet);
          frontier.push({h, a.head, item.depth + 1});
        }
      }
    }
  }

 private:
  IntegratedGraph& g_;
  const ConceptStore& store_;
  const BuildOptions& opts_;
  std::map<std::string, int> cn_nodes_;
  std::set<std::string> edge_keys_;
};

IntegratedGraph amr_base(const AmrGraph& amr) {
  IntegratedGraph g;
  std::map<std::string, int> idx;
  for (const AmrNode& n : amr.nodes) {
    idx[n.id] = static_cast<int>(g.nodes.size());
    g.nodes.push_back({n.label, NodeOrigin::kAmr, n.is_frame});
  }
  for (const AmrEdge& e : amr.edges)
    g.edges.push_back({idx[e.source], idx[e.target], e.label, EdgeOrigin::kAmr});
  g.root = idx[amr.root];
  return g;
}

IntegratedGraph build_amr_cn(const AmrGraph& amr, const ConceptStore& store,
                             const BuildOptions& opts, bool pruned) {
  IntegratedGraph g = amr_base(amr);
  GraphAssembler asm_(g, store, opts);
  std::set<std::string> args = arg_endpoints(amr, opts);
  for (std::size_t i = 0; i < amr.nodes.size(); ++i) {
    const AmrNode& n = amr.nodes[i];
    if (pruned && (n.is_frame || !args.count(n.id))) continue;
    asm_.expand(static_cast<int>(i), normalize_concept(n.label));
  }
  return g;
}

IntegratedGraph build_token_graph(const std::vector<std::string>& tokens,
                                  const ConceptStore& store, const BuildOptions& opts,
                                  const std::set<std::string>* allowed_keys) {
  if (tokens.empty()) throw std::invalid_argument("token graph needs tokens");
  IntegratedGraph g;
  g.nodes.push_back({"root", NodeOrigin::kRoot, false});
  g.root = 0;
  GraphAssembler asm_(g, store, opts);
  std::map<std::string, int> token_nodes;
  for (const std::string& tok : tokens) {
    if (token_nodes.count(tok)) continue;
    int id = static_cast<int>(g.nodes.size());
    g.nodes.push_back({tok, NodeOrigin::kToken, false});
    token_nodes[tok] = id;
    asm_.add_edge(0, id, "token", EdgeOrigin::kTokenLink);
  }
  for (const std::string& tok : tokens) {
    std::string key = normalize_concept(tok);
    if (allowed_keys && !allowed_keys->count(key)) continue;
    asm_.expand(token_nodes[tok], key);
  }
  return g;
}

}  // namespace

IntegratedGraph build_acf(const AmrGraph& amr, const ConceptStore& store,
                          const BuildOptions& opts) {
  return build_amr_cn(amr, store, opts, /*pruned=*/false);
}

IntegratedGraph build_acp(const AmrGraph& amr, const ConceptStore& store,
                          const BuildOptions& opts) {
  return build_amr_cn(amr, store, opts, /*pruned=*/true);
}

IntegratedGraph build_cf(const std::vector<std::string>& tokens,
                         const ConceptStore& store, const BuildOptions& opts) {
  return build_token_graph(tokens, store, opts, nullptr);
}

IntegratedGraph build_cp(const std::vector<std::string>& tokens, const AmrGraph& amr,
                         const ConceptStore& store, const BuildOptions& opts) {
  std::set<std::string> keys;
  for (const std::string& id : arg_endpoints(amr, opts))
    keys.insert(normalize_concept(amr.find(id)->label));
  return build_token_graph(tokens, store, opts, &keys);
}

LeviGraph to_levi(const IntegratedGraph& g) {
  LeviGraph levi;
  levi.concept_count = g.nodes.size();
  for (const GNode& n : g.nodes) levi.nodes.push_back({n.label, false});
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    const GEdge& e = g.edges[k];
    int rel = static_cast<int>(levi.nodes.size());
    levi.nodes.push_back({e.label, true});
    levi.arcs.emplace_back(e.src, rel);
    levi.arcs.emplace_back(rel, e.dst);
  }
  return levi;
}

std::string origin_name(NodeOrigin o) {
  switch (o) {
    case NodeOrigin::kAmr: return "amr";
    case NodeOrigin::kConceptNet: return "conceptnet";
    case NodeOrigin::kToken: return "token";
    case NodeOrigin::kRoot: return "root";
  }
  return "amr";
}

std::string origin_name(EdgeOrigin o) {
  switch (o) {
    case EdgeOrigin::kAmr: return "amr";
    case EdgeOrigin::kConceptNet: return "conceptnet";
    case EdgeOrigin::kTokenLink: return "token-link";
  }
  return "amr";
}

namespace {

NodeOrigin node_origin_from(const std::string& s) {
  if (s == "amr") return NodeOrigin::kAmr;
  if (s == "conceptnet") return NodeOrigin::kConceptNet;
  if (s == "token") return NodeOrigin::kToken;
  if (s == "root") return NodeOrigin::kRoot;
  throw std::runtime_error("unknown node origin: " + s);
}

EdgeOrigin edge_origin_from(const std::string& s) {
  if (s == "amr") return EdgeOrigin::kAmr;
  if (s == "conceptnet") return EdgeOrigin::kConceptNet;
  if (s == "token-link") return EdgeOrigin::kTokenLink;
  throw std::runtime_error("unknown edge origin: " + s);
}

}  // namespace

std::string graph_to_json(const IntegratedGraph& g) {
  nlohmann::json j;
  j["version"] = 1;
  j["root"] = g.root;
  j["nodes"] = nlohmann::json::array();
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const GNode& n = g.nodes[i];
    j["nodes"].push_back({{"id", i},
                          {"label", n.label},
                          {"origin", origin_name(n.origin)},
                          {"frame", n.frame}});
  }
  j["edges"] = nlohmann::json::array();
  for (const GEdge& e : g.edges)
    j["edges"].push_back({{"src", e.src},
                          {"dst", e.dst},
                          {"label", e.label},
                          {"origin", origin_name(e.origin)}});
  return j.dump(2) + "\n";
}

IntegratedGraph graph_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (!j.contains("version") || j["version"].get<int>() != 1)
    throw std::runtime_error("unsupported graph json version");
  IntegratedGraph g;
  g.root = j["root"].get<int>();
  for (const auto& n : j["nodes"])
    g.nodes.push_back({n["label"].get<std::string>(),
                       node_origin_from(n["origin"].get<std::string>()),
                       n["frame"].get<bool>()});
  for (const auto& e : j["edges"])
    g.edges.push_back({e["src"].get<int>(), e["dst"].get<int>(),
                       e["label"].get<std::string>(),
                       edge_origin_from(e["origin"].get<std::string>())});
  return g;
}

}  // namespace acp
