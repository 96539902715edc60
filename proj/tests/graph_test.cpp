#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <set>

#include "acp/graph.hpp"
#include "acp/util.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace acp;

namespace {

std::set<std::string> node_labels(const IntegratedGraph& g) {
  std::set<std::string> out;
  for (const GNode& n : g.nodes) out.insert(n.label);
  return out;
}

std::set<std::string> cn_labels(const IntegratedGraph& g) {
  std::set<std::string> out;
  for (const GNode& n : g.nodes)
    if (n.origin == NodeOrigin::kConceptNet) out.insert(n.label);
  return out;
}

struct Fixture {
  AmrGraph amr;
  ConceptStore store;
  Fixture()
      : amr(parse_penman_corpus(testsupport::read_fixture("cable_question.penman")).at(0)),
        store(ConceptStore::from_text(
            testsupport::read_fixture("cable_question_store.tsv"))) {}
};

}  // namespace

TEST_CASE("arg endpoints of the cable question") {
  Fixture f;
  std::set<std::string> expected = {"r", "e", "c"};
  CHECK(arg_endpoints(f.amr) == expected);
}

TEST_CASE("pruned expansion keeps telegraphy and drops the rest") {
  Fixture f;
  IntegratedGraph acp_g = build_acp(f.amr, f.store);
  IntegratedGraph acf_g = build_acf(f.amr, f.store);

  std::set<std::string> pruned_away = {"living", "house", "game", "need"};
  CHECK(cn_labels(acp_g) == std::set<std::string>{"telegraphy"});
  std::set<std::string> acf_expected = {"telegraphy", "living", "house", "game",
                                        "need"};
  CHECK(cn_labels(acf_g) == acf_expected);
  for (const std::string& label : pruned_away)
    CHECK(acp_g.find_node(label, NodeOrigin::kConceptNet) == -1);
  CHECK(acp_g.reachable_from_root());
  CHECK(acf_g.reachable_from_root());
}

TEST_CASE("expansion preserves assertion direction") {
  Fixture f;
  IntegratedGraph g = build_acp(f.amr, f.store);
  int cable = g.find_node("cable", NodeOrigin::kAmr);
  int tele = g.find_node("telegraphy", NodeOrigin::kConceptNet);
  REQUIRE(cable >= 0);
  REQUIRE(tele >= 0);
  bool found = false;
  for (const GEdge& e : g.edges)
    if (e.src == cable && e.dst == tele && e.label == "HasContext" &&
        e.origin == EdgeOrigin::kConceptNet)
      found = true;
  CHECK(found);
}

TEST_CASE("token graphs get a synthetic root") {
  Fixture f;
  std::vector<std::string> tokens =
      tokenize_question("What home entertainment equipment requires cable?");
  IntegratedGraph cf = build_cf(tokens, f.store);
  IntegratedGraph cp = build_cp(tokens, f.amr, f.store);
  CHECK(cf.nodes[cf.root].origin == NodeOrigin::kRoot);
  CHECK(cp.nodes[cp.root].origin == NodeOrigin::kRoot);
  CHECK(cf.reachable_from_root());
  CHECK(cp.reachable_from_root());
  // Every token hangs off the root exactly once, duplicates collapsed.
  std::size_t token_edges = 0;
  for (const GEdge& e : cf.edges)
    if (e.origin == EdgeOrigin::kTokenLink) {
      CHECK(e.src == cf.root);
      ++token_edges;
    }
  std::set<std::string> unique_tokens(tokens.begin(), tokens.end());
  CHECK(token_edges == unique_tokens.size());
  // CP only expands tokens that are AMR argument concepts.
  CHECK(cn_labels(cp) == std::set<std::string>{"telegraphy"});
  std::set<std::string> cf_cn = cn_labels(cf);
  CHECK(cf_cn.count("living") == 1);
  CHECK(cf_cn.count("house") == 1);
}

TEST_CASE("levi transform counts and alternation") {
  Fixture f;
  IntegratedGraph g = build_acf(f.amr, f.store);
  LeviGraph levi = to_levi(g);
  CHECK(levi.nodes.size() == g.nodes.size() + g.edges.size());
  CHECK(levi.arcs.size() == 2 * g.edges.size());
  CHECK(levi.concept_count == g.nodes.size());
  for (const auto& [u, v] : levi.arcs) {
    // Every arc connects a concept node with a relation node.
    CHECK(levi.nodes[u].is_relation != levi.nodes[v].is_relation);
  }
}

TEST_CASE("variant properties on random fixtures") {
  Rng rng(99);
  std::vector<std::string> universe = {"boy",  "dog",   "house",  "water", "city",
                                       "book", "truth", "friend", "want",  "go",
                                       "see",  "help",  "run",    "say"};
  for (int iter = 0; iter < 500; ++iter) {
    CAPTURE(iter);
    AmrGraph amr = testsupport::random_amr(rng);
    ConceptStore store = testsupport::random_store(rng, 20, universe);
    IntegratedGraph acf_g = build_acf(amr, store);
    IntegratedGraph acp_g = build_acp(amr, store);

    // AMR preservation: the first |amr| nodes and amr edge count survive.
    REQUIRE(acf_g.nodes.size() >= amr.nodes.size());
    for (std::size_t i = 0; i < amr.nodes.size(); ++i) {
      CHECK(acf_g.nodes[i].label == amr.nodes[i].label);
      CHECK(acp_g.nodes[i].label == amr.nodes[i].label);
      CHECK(acf_g.nodes[i].origin == NodeOrigin::kAmr);
    }
    std::size_t amr_edges_acf = 0;
    for (const GEdge& e : acf_g.edges)
      if (e.origin == EdgeOrigin::kAmr) ++amr_edges_acf;
    CHECK(amr_edges_acf == amr.edges.size());

    // Containment: pruning never adds anything.
    std::set<std::string> acp_nodes = node_labels(acp_g);
    std::set<std::string> acf_nodes = node_labels(acf_g);
    for (const std::string& l : acp_nodes) CHECK(acf_nodes.count(l) == 1);
    CHECK(acp_g.edges.size() <= acf_g.edges.size());

    // Set-difference oracle: ACP ConceptNet labels are exactly the 1-hop
    // neighborhoods of non-frame argument endpoints.
    std::set<std::string> expected_cn;
    for (const std::string& id : arg_endpoints(amr)) {
      const AmrNode* n = amr.find(id);
      if (n->is_frame) continue;
      for (const Assertion& a : store.neighbors(normalize_concept(n->label))) {
        if (a.head == a.tail) continue;
        std::string other =
            a.head == normalize_concept(n->label) ? a.tail : a.head;
        expected_cn.insert(other);
      }
    }
    CHECK(cn_labels(acp_g) == expected_cn);

    // Frame exclusion: no ConceptNet edge touches a frame node in ACP.
    for (const GEdge& e : acp_g.edges)
      if (e.origin == EdgeOrigin::kConceptNet) {
        CHECK_FALSE(acp_g.nodes[e.src].frame);
        CHECK_FALSE(acp_g.nodes[e.dst].frame);
      }

    CHECK(acf_g.reachable_from_root());
    CHECK(acp_g.reachable_from_root());

    LeviGraph levi = to_levi(acf_g);
    CHECK(levi.nodes.size() == acf_g.nodes.size() + acf_g.edges.size());
    CHECK(levi.arcs.size() == 2 * acf_g.edges.size());

    // Token variants on the AMR labels as pseudo-question.
    std::vector<std::string> tokens;
    for (const AmrNode& n : amr.nodes) tokens.push_back(normalize_concept(n.label));
    IntegratedGraph cf = build_cf(tokens, store);
    IntegratedGraph cp = build_cp(tokens, amr, store);
    std::set<std::string> cf_nodes = node_labels(cf);
    for (const std::string& l : node_labels(cp)) CHECK(cf_nodes.count(l) == 1);
    CHECK(cp.edges.size() <= cf.edges.size());
    CHECK(cf.reachable_from_root());
    CHECK(cp.reachable_from_root());
  }
}

TEST_CASE("json round-trip") {
  Fixture f;
  IntegratedGraph g = build_acf(f.amr, f.store);
  IntegratedGraph again = graph_from_json(graph_to_json(g));
  REQUIRE(again.nodes.size() == g.nodes.size());
  REQUIRE(again.edges.size() == g.edges.size());
  CHECK(again.root == g.root);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    CHECK(again.nodes[i].label == g.nodes[i].label);
    CHECK(again.nodes[i].origin == g.nodes[i].origin);
    CHECK(again.nodes[i].frame == g.nodes[i].frame);
  }
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    CHECK(again.edges[i].src == g.edges[i].src);
    CHECK(again.edges[i].dst == g.edges[i].dst);
    CHECK(again.edges[i].label == g.edges[i].label);
  }
  CHECK(graph_to_json(again) == graph_to_json(g));
  CHECK_THROWS(graph_from_json("{\"version\": 2, \"root\": 0}"));
}
