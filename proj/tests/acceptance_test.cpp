// End-to-end acceptance suite. Each criterion prints one [PASS]/[FAIL]
// line; the exit code is the number of failed criteria. Criteria 9 and 10
// drive the installed CLI binary named by the ACP_CLI environment variable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "acp/amr.hpp"
#include "acp/graph.hpp"
#include "acp/interpret.hpp"
#include "acp/qa.hpp"
#include "acp/relation.hpp"
#include "acp/tensor.hpp"
#include "acp/transformer.hpp"
#include "acp/util.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace acp;

namespace {

int g_failures = 0;

struct Criterion {
  int number;
  std::string name;
  double limit_seconds;

  bool ok = true;
  std::ostringstream why;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      if (!ok) why << "; ";
      ok = false;
      why << what;
    }
  }

  void finish(double seconds) {
    if (limit_seconds > 0.0 && seconds > limit_seconds) {
      require(false, "took " + std::to_string(seconds) + "s, limit " +
                         std::to_string(limit_seconds) + "s");
    }
    std::printf("[%s] %2d %-36s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", number,
                name.c_str(), seconds, ok ? "" : " -- ",
                ok ? "" : why.str().c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
  }
};

void run_criterion(int number, const std::string& name, double limit_seconds,
                   const std::function<void(Criterion&)>& body) {
  Criterion c{number, name, limit_seconds};
  auto start = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.require(false, std::string("exception: ") + e.what());
  }
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  c.finish(secs);
}

std::set<std::string> cn_labels(const IntegratedGraph& g) {
  std::set<std::string> out;
  for (const GNode& n : g.nodes)
    if (n.origin == NodeOrigin::kConceptNet) out.insert(n.label);
  return out;
}

std::set<std::string> node_labels(const IntegratedGraph& g) {
  std::set<std::string> out;
  for (const GNode& n : g.nodes) out.insert(n.label);
  return out;
}

IntegratedGraph random_graph(Rng& rng, std::size_t max_nodes) {
  std::uniform_int_distribution<std::size_t> nd(1, max_nodes);
  std::size_t n = nd(rng);
  IntegratedGraph g;
  for (std::size_t i = 0; i < n; ++i)
    g.nodes.push_back({"c" + std::to_string(i), NodeOrigin::kAmr, false});
  static const std::vector<std::string> labels = {":ARG0", ":ARG1", "RelatedTo",
                                                  "AtLocation"};
  std::uniform_int_distribution<std::size_t> pe(0, 2 * max_nodes);
  std::size_t m = pe(rng);
  std::uniform_int_distribution<std::size_t> pn(0, n - 1);
  std::uniform_int_distribution<std::size_t> pl(0, labels.size() - 1);
  for (std::size_t e = 0; e < m; ++e) {
    int s = static_cast<int>(pn(rng)), t = static_cast<int>(pn(rng));
    if (s == t) continue;
    g.edges.push_back({s, t, labels[pl(rng)], EdgeOrigin::kAmr});
  }
  return g;
}

// ---- criteria 1-6: fixture, algebra, gradients, round-trip, oracles ----

void criterion_pruning_fixture(Criterion& c) {
  AmrGraph amr = parse_penman_corpus(
                     testsupport::read_fixture("cable_question.penman"))
                     .at(0);
  ConceptStore store = ConceptStore::from_text(
      testsupport::read_fixture("cable_question_store.tsv"));
  IntegratedGraph acp_g = build_acp(amr, store);
  IntegratedGraph acf_g = build_acf(amr, store);
  c.require(cn_labels(acp_g) == std::set<std::string>{"telegraphy"},
            "pruned graph concepts differ from {telegraphy}");
  std::set<std::string> full = {"telegraphy", "living", "house", "game", "need"};
  c.require(cn_labels(acf_g) == full, "full graph concepts wrong");
  for (const std::string& gone : {"living", "house", "game", "need"})
    c.require(acp_g.find_node(gone, NodeOrigin::kConceptNet) == -1,
              gone + " survived pruning");
}

void criterion_factored_attention(Criterion& c) {
  Rng rng(51);
  double worst = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    std::size_t n = 4, d = 6, hd = 3;
    Tensor cm = Tensor::glorot({n, d}, rng);
    Tensor wq = Tensor::glorot({d, hd}, rng);
    Tensor wk = Tensor::glorot({d, hd}, rng);
    Tensor rf = Tensor::glorot({n * n, hd}, rng);
    Tensor rb = Tensor::glorot({n * n, hd}, rng);
    Tensor s = pairwise_bilinear_scores(matmul(cm, wq), matmul(cm, wk), rf, rb);
    auto oracle = testsupport::four_term_expansion_oracle(
        cm.values(), wq.values(), wk.values(), rf.values(), rb.values(), n, d, hd);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        worst = std::max(worst, std::abs(s.values()[i * n + j] - oracle[i][j]));
  }
  c.require(worst < 1e-9,
            "factored vs expanded max diff " + std::to_string(worst));

  // Zero relation matrices reduce to the vanilla score bit for bit.
  std::size_t n = 5, d = 6, hd = 3;
  Tensor cm = Tensor::glorot({n, d}, rng);
  Tensor wq = Tensor::glorot({d, hd}, rng);
  Tensor wk = Tensor::glorot({d, hd}, rng);
  Tensor q = matmul(cm, wq), k = matmul(cm, wk);
  Tensor factored = pairwise_bilinear_scores(q, k, Tensor::zeros({n * n, hd}),
                                             Tensor::zeros({n * n, hd}));
  Tensor vanilla = matmul(q, transpose(k));
  for (std::size_t i = 0; i < n * n; ++i)
    c.require(factored.values()[i] == vanilla.values()[i],
              "zero-relation reduction not exact");
}

void criterion_gradients(Criterion& c) {
  const double h = 1e-5, tol = 1e-4;

  {  // GRU path encoder.
    Rng rng(29);
    RelationVocab vocab;
    vocab.add_relation(":ARG0");
    vocab.add_relation(":ARG1");
    RelationEncoderParams p = RelationEncoderParams::init(vocab.size(), 4, 3, 2, rng);
    RelationPath path;
    path.labels = {{":ARG0", true}, {":ARG1", false}, {":ARG0", true}};
    path.length = 3;
    Tensor probe = Tensor::glorot({6}, rng);
    std::vector<Parameter> params;
    p.collect(params);
    auto fn = [&]() { return sum_all(mul(encode_path(path, p, vocab), probe)); };
    GradCheckReport rep = grad_check(fn, params, h, tol);
    c.require(rep.passed, "path encoder max rel err " +
                              std::to_string(rep.max_rel_error));
  }

  {  // Relation split projection.
    Rng rng(41);
    RelationEncoderParams p = RelationEncoderParams::init(5, 4, 3, 2, rng);
    Tensor r = Tensor::glorot({6}, rng);
    Tensor pf = Tensor::glorot({2}, rng);
    Tensor pb = Tensor::glorot({2}, rng);
    std::vector<Parameter> params{{"w_split", p.w_split}, {"r", r}};
    auto fn = [&]() {
      auto [f, b] = split_relation(r, p.w_split);
      return add(sum_all(mul(f, pf)), sum_all(mul(b, pb)));
    };
    GradCheckReport rep = grad_check(fn, params, h, tol);
    c.require(rep.passed,
              "relation split max rel err " + std::to_string(rep.max_rel_error));
  }

  {  // Full attention layer.
    ModelConfig cfg;
    cfg.model_dim = 4;
    cfg.heads = 2;
    cfg.ffn_dim = 6;
    Rng rng(67);
    AttentionLayerParams layer = AttentionLayerParams::init(cfg, rng);
    std::size_t n = 3;
    Tensor cm = Tensor::glorot({n, cfg.model_dim}, rng);
    Tensor rf = Tensor::glorot({n * n, cfg.model_dim}, rng);
    Tensor rb = Tensor::glorot({n * n, cfg.model_dim}, rng);
    Tensor probe = Tensor::glorot({n, cfg.model_dim}, rng);
    std::vector<Parameter> params;
    layer.collect("layer", params);
    params.push_back({"c", cm});
    params.push_back({"rf", rf});
    params.push_back({"rb", rb});
    RelationMatrices rel{rf, rb};
    auto fn = [&]() {
      return sum_all(mul(attention_layer(cm, &rel, layer, cfg), probe));
    };
    GradCheckReport rep = grad_check(fn, params, h, tol);
    c.require(rep.passed, "attention layer max rel err " +
                              std::to_string(rep.max_rel_error));
  }

  {  // End-to-end loss on a two-instance batch, sampled entries.
    ModelConfig cfg;
    cfg.model_dim = 8;
    cfg.heads = 2;
    cfg.relation_layers = 1;
    cfg.vanilla_layers = 1;
    cfg.ffn_dim = 12;
    cfg.gru_hidden = 4;
    cfg.rel_emb_dim = 4;
    cfg.max_nodes = 64;
    cfg.max_len = 2;
    SyntheticCorpus corpus = build_synthetic_corpus(4, 10, 0);
    WordVectors wv = WordVectors::random(corpus.vocabulary, cfg.model_dim, 4);
    RelationVocab vocab;
    for (const auto& r : corpus.store.relation_vocab()) vocab.add_relation(r);
    vocab.add_relation(":ARG0");
    vocab.add_relation(":ARG1");
    ModelBundle bundle = ModelBundle::init(cfg, vocab, wv);
    PreparedInstance p1 = prepare_instance(corpus.train[0], corpus.store, bundle);
    PreparedInstance p2 = prepare_instance(corpus.train[1], corpus.store, bundle);
    std::vector<Parameter> params = bundle.parameters();
    auto fn = [&]() {
      return affine(add(instance_loss(p1, bundle), instance_loss(p2, bundle)),
                    0.5, 0.0);
    };
    GradCheckReport rep = grad_check(fn, params, h, tol, 4, 11);
    c.require(rep.passed,
              "end-to-end max rel err " + std::to_string(rep.max_rel_error));
  }
}

void criterion_round_trip(Criterion& c) {
  auto graphs =
      parse_penman_corpus(testsupport::read_fixture("corpus50.penman"));
  c.require(graphs.size() >= 50, "fixture corpus smaller than 50 graphs");
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    AmrGraph again = parse_penman(serialize_penman(graphs[i]));
    if (!testsupport::isomorphic(graphs[i], again)) {
      c.require(false, "fixture graph " + std::to_string(i) + " not isomorphic");
      return;
    }
  }
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    AmrGraph g = testsupport::random_amr(rng);
    AmrGraph again = parse_penman(serialize_penman(g));
    if (!testsupport::isomorphic(g, again)) {
      c.require(false, "random graph " + std::to_string(i) + " not isomorphic");
      return;
    }
  }
}

void criterion_shortest_path_oracle(Criterion& c) {
  Rng rng(17);
  for (int iter = 0; iter < 1000; ++iter) {
    IntegratedGraph g = random_graph(rng, 12);
    LeviGraph levi = to_levi(g);
    auto dist = testsupport::floyd_warshall(levi.nodes.size(), levi.arcs);
    std::size_t n = g.nodes.size(), max_len = 4;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        RelationPath p = shortest_path(levi, static_cast<int>(i),
                                       static_cast<int>(j), max_len);
        int d = dist[i][j];
        bool good;
        if (i == j) {
          good = p.special == PathSpecial::kSelf;
        } else if (d >= testsupport::kInf || d > static_cast<int>(2 * max_len)) {
          good = p.special == PathSpecial::kDisconnected;
        } else {
          good = p.special == PathSpecial::kNone &&
                 2 * p.length == static_cast<std::size_t>(d);
        }
        if (!good) {
          c.require(false, "mismatch on graph " + std::to_string(iter) +
                               " pair (" + std::to_string(i) + "," +
                               std::to_string(j) + ")");
          return;
        }
      }
  }
}

void criterion_variant_properties(Criterion& c) {
  Rng rng(99);
  std::vector<std::string> universe = {"boy",  "dog",   "house",  "water", "city",
                                       "book", "truth", "friend", "want",  "go",
                                       "see",  "help",  "run",    "say"};
  for (int iter = 0; iter < 500; ++iter) {
    AmrGraph amr = testsupport::random_amr(rng);
    ConceptStore store = testsupport::random_store(rng, 20, universe);
    IntegratedGraph acf_g = build_acf(amr, store);
    IntegratedGraph acp_g = build_acp(amr, store);
    auto fail = [&](const std::string& what) {
      c.require(false, what + " at fixture " + std::to_string(iter));
    };

    // AMR preservation in both variants.
    for (std::size_t i = 0; i < amr.nodes.size(); ++i)
      if (acf_g.nodes[i].label != amr.nodes[i].label ||
          acp_g.nodes[i].label != amr.nodes[i].label)
        return fail("amr node lost");

    // Containment ACP <= ACF.
    std::set<std::string> acf_nodes = node_labels(acf_g);
    for (const std::string& l : node_labels(acp_g))
      if (!acf_nodes.count(l)) return fail("pruned graph added node " + l);
    if (acp_g.edges.size() > acf_g.edges.size()) return fail("pruned edge excess");

    // Frame exclusion.
    for (const GEdge& e : acp_g.edges)
      if (e.origin == EdgeOrigin::kConceptNet &&
          (acp_g.nodes[e.src].frame || acp_g.nodes[e.dst].frame))
        return fail("frame node expanded");

    if (!acf_g.reachable_from_root() || !acp_g.reachable_from_root())
      return fail("root reachability broken");

    // Levi identities.
    LeviGraph levi = to_levi(acf_g);
    if (levi.nodes.size() != acf_g.nodes.size() + acf_g.edges.size() ||
        levi.arcs.size() != 2 * acf_g.edges.size())
      return fail("levi counts wrong");

    // Token variants: CP <= CF.
    std::vector<std::string> tokens;
    for (const AmrNode& n : amr.nodes) tokens.push_back(normalize_concept(n.label));
    IntegratedGraph cf = build_cf(tokens, store);
    IntegratedGraph cp = build_cp(tokens, amr, store);
    std::set<std::string> cf_nodes = node_labels(cf);
    for (const std::string& l : node_labels(cp))
      if (!cf_nodes.count(l)) return fail("cp added node " + l);
    if (!cf.reachable_from_root() || !cp.reachable_from_root())
      return fail("token graph root unreachable");
  }
}

// ---- criteria 7-8: learning and interpretability on the planted corpus ----

struct TrainedState {
  SyntheticCorpus corpus;
  ModelBundle bundle;
  bool trained = false;
};

void criterion_learning(Criterion& c, TrainedState& state) {
  state.corpus = build_synthetic_corpus(0, 200, 50);
  ModelConfig cfg;  // defaults: 50 epochs max
  c.require(cfg.epochs <= 50, "default epoch budget exceeds 50");
  WordVectors wv = WordVectors::random(state.corpus.vocabulary, cfg.model_dim, 0);
  auto train_set = state.corpus.train;
  TrainResult result =
      train(train_set, state.corpus.store, wv, cfg, &state.bundle);
  state.trained = true;
  EvalResult held_out =
      evaluate(state.corpus.test, state.corpus.store, state.bundle);
  c.require(held_out.accuracy >= 0.90,
            "held-out accuracy " + std::to_string(held_out.accuracy));
  c.require(!result.metrics.empty() && result.metrics.size() <= 50,
            "epoch count out of budget");

  // Untrained baseline on 1000 instances: candidate positions are uniform,
  // so a fixed untrained scorer must sit at chance level.
  SyntheticCorpus big = build_synthetic_corpus(1, 0, 1000);
  ModelConfig base_cfg;
  WordVectors base_wv =
      WordVectors::random(big.vocabulary, base_cfg.model_dim, 1);
  RelationVocab vocab;
  for (const auto& r : big.store.relation_vocab()) vocab.add_relation(r);
  vocab.add_relation(":ARG0");
  vocab.add_relation(":ARG1");
  ModelBundle untrained = ModelBundle::init(base_cfg, vocab, base_wv);
  EvalResult baseline = evaluate(big.test, big.store, untrained);
  c.require(std::abs(baseline.accuracy - 0.2) <= 0.05,
            "untrained baseline accuracy " + std::to_string(baseline.accuracy));
}

void criterion_interpretability(Criterion& c, TrainedState& state) {
  c.require(state.trained, "no trained model available");
  if (!state.trained) return;
  std::size_t correct = 0, planted_hits = 0;
  for (const QaInstance& inst : state.corpus.test) {
    PreparedInstance prep =
        prepare_instance(inst, state.corpus.store, state.bundle);
    ScoredInstance scored = score_candidates(prep, state.bundle);
    const auto& probs = scored.probabilities.values();
    int pred = 0;
    for (int i = 1; i < 5; ++i)
      if (probs[i] > probs[pred]) pred = i;
    if (pred != prep.gold) continue;
    ++correct;

    const auto& [subject, answer] = state.corpus.planted.at(inst.id);
    auto top3 = top_paths(scored.encoder_output, prep.graph, prep.pairs,
                          state.bundle.config, 3);
    for (const PathExplanation& p : top3)
      if ((p.source == subject && p.target == answer) ||
          (p.source == answer && p.target == subject)) {
        ++planted_hits;
        break;
      }

    // Exported heatmap rows stay row-stochastic.
    std::string csv =
        heatmap_to_csv(scored.encoder_output, prep.graph, state.bundle.config);
    auto lines = split_char(csv, '\n');
    for (std::size_t r = 1; r < lines.size(); ++r) {
      if (lines[r].empty()) continue;
      auto cells = split_char(lines[r], ',');
      double sum = 0.0;
      for (std::size_t i = 1; i < cells.size(); ++i) sum += std::stod(cells[i]);
      if (std::abs(sum - 1.0) >= 1e-9) {
        c.require(false, "heatmap row not stochastic for " + inst.id);
        return;
      }
    }
  }
  c.require(correct > 0, "no correctly answered held-out instances");
  double rate = correct ? static_cast<double>(planted_hits) /
                              static_cast<double>(correct)
                        : 0.0;
  c.require(rate >= 0.70, "planted pair in top-3 for " + std::to_string(rate) +
                              " of correct answers");
}

// ---- criteria 9-10: CLI behaviour ----

std::string cli_binary() {
  const char* cli = std::getenv("ACP_CLI");
  if (!cli) throw std::runtime_error("ACP_CLI not set");
  return cli;
}

void run_cli(const std::string& args) {
  std::string cmd = cli_binary() + " " + args;
  int rc = std::system(cmd.c_str());
  if (rc != 0)
    throw std::runtime_error("command failed (" + std::to_string(rc) +
                             "): " + cmd);
}

void criterion_role_statistics(Criterion& c) {
  fs::path dir = fs::temp_directory_path() / "acp_acceptance" / "stats";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::string txt = (dir / "stats.txt").string();
  std::string csv = (dir / "stats.csv").string();
  run_cli("stats --input " + testsupport::fixture_path("stats_small.penman") +
          " --csv " + csv + " > " + txt);

  // Hand counts for the three-graph fixture.
  std::map<std::string, std::size_t> expected = {
      {":ARG0", 4}, {":ARG1", 4}, {":ARG4", 1},
      {":mod", 1},  {":poss", 1}, {":time", 1}};
  std::map<std::string, std::size_t> got;
  std::size_t total = 0;
  auto lines = split_char(read_file(csv), '\n');
  c.require(!lines.empty() && lines[0] == "role,count,percent",
            "csv header wrong");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cells = split_char(lines[i], ',');
    if (cells.size() != 3) continue;
    got[cells[0]] = static_cast<std::size_t>(std::stoul(cells[1]));
    total += got[cells[0]];
  }
  c.require(got == expected, "role counts differ from hand counts");
  c.require(total == 12, "total count " + std::to_string(total));

  // Table layout: aligned role rows with percentages, ARG0/ARG1 at a third.
  std::string table = read_file(txt);
  c.require(table.find(":ARG0") != std::string::npos &&
                table.find("33.33%") != std::string::npos,
            "percentage table layout missing");
  c.require(table.find("total        12") != std::string::npos,
            "total line missing");
}

void criterion_determinism(Criterion& c) {
  fs::path dir = fs::temp_directory_path() / "acp_acceptance" / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::string syn = (dir / "syn").string();
  run_cli("gen-synthetic --seed 3 --n-train 30 --n-test 10 --out-dir " + syn +
          " > /dev/null");
  std::string inputs = " --questions " + syn + "/train.jsonl --amr " + syn +
                       "/amr.penman --store " + syn + "/store.tsv";
  for (const char* run : {"a", "b"}) {
    std::string out = (dir / run).string();
    run_cli("train" + inputs + " --vectors " + syn +
            "/vectors.txt --epochs 5 --out-dir " + out + " > /dev/null");
    run_cli("eval --model " + out + "/model.ckpt --questions " + syn +
            "/test.jsonl --amr " + syn + "/amr.penman --store " + syn +
            "/store.tsv --out " + out + "/predictions.csv > /dev/null");
    run_cli("explain --model " + out + "/model.ckpt --questions " + syn +
            "/test.jsonl --amr " + syn + "/amr.penman --store " + syn +
            "/store.tsv --question syn-30 --k 3 --out " + out + " > /dev/null");
  }
  for (const char* file : {"metrics.csv", "model.ckpt", "predictions.csv",
                           "heatmap.csv", "paths.json"}) {
    std::string a = read_file((dir / "a" / file).string());
    std::string b = read_file((dir / "b" / file).string());
    c.require(!a.empty(), std::string(file) + " empty");
    c.require(a == b, std::string(file) + " differs between identical runs");
  }
}

}  // namespace

int main() {
  TrainedState state;
  run_criterion(1, "pruning fixture exactness", 1.0, criterion_pruning_fixture);
  run_criterion(2, "factored attention identity", 5.0,
                criterion_factored_attention);
  run_criterion(3, "finite-difference gradient checks", 60.0,
                criterion_gradients);
  run_criterion(4, "penman round-trip isomorphism", 10.0, criterion_round_trip);
  run_criterion(5, "shortest-path oracle agreement", 10.0,
                criterion_shortest_path_oracle);
  run_criterion(6, "graph variant properties", 30.0,
                criterion_variant_properties);
  run_criterion(7, "desk-scale learning", 300.0,
                [&](Criterion& c) { criterion_learning(c, state); });
  run_criterion(8, "planted-path interpretability", 120.0,
                [&](Criterion& c) { criterion_interpretability(c, state); });
  run_criterion(9, "role statistics table", 30.0, criterion_role_statistics);
  run_criterion(10, "run determinism", 300.0, criterion_determinism);

  if (g_failures == 0)
    std::printf("all 10 criteria passed\n");
  else
    std::printf("%d criteria FAILED\n", g_failures);
  return g_failures;
}
