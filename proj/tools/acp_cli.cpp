// Command-line entry point wiring the library into reproducible workflows.

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "acp/amr.hpp"
#include "acp/graph.hpp"
#include "acp/interpret.hpp"
#include "acp/qa.hpp"
#include "acp/store.hpp"
#include "acp/util.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string must_read(const std::string& path) {
  if (!fs::exists(path)) {
    std::cerr << "error\tcli\tmissing file: " << path << "\n";
    std::exit(1);
  }
  return acp::read_file(path);
}

void write_run_config(const std::string& dir, const std::string& subcommand,
                      const acp::ModelConfig* cfg, const json& io) {
  json j;
  j["subcommand"] = subcommand;
  j["io"] = io;
  if (cfg) j["model_config"] = cfg->to_text();
  fs::create_directories(dir);
  acp::atomic_write(dir + "/run_config.json", j.dump(2) + "\n");
}

struct ConfigFlags {
  std::string config_path;
  acp::ModelConfig resolve(CLI::App* cmd) {
    acp::ModelConfig cfg;
    if (!config_path.empty()) cfg = acp::ModelConfig::from_text(must_read(config_path));
    auto maybe = [&](const std::string& flag, auto& field) {
      auto* opt = cmd->get_option_no_throw(flag);
      if (opt && opt->count() > 0) field = opt->as<std::decay_t<decltype(field)>>();
    };
    maybe("--seed", cfg.seed);
    maybe("--epochs", cfg.epochs);
    maybe("--lr", cfg.learning_rate);
    maybe("--graph-type", cfg.graph_type);
    maybe("--model-dim", cfg.model_dim);
    maybe("--heads", cfg.heads);
    maybe("--max-len", cfg.max_len);
    maybe("--batch-size", cfg.batch_size);
    maybe("--patience", cfg.patience);
    maybe("--explain-heads", cfg.explain_heads);
    maybe("--explain-layer", cfg.explain_layer);
    if (cfg.model_dim % cfg.heads != 0)
      throw std::runtime_error("model_dim must be divisible by heads");
    return cfg;
  }
};

void add_config_flags(CLI::App* cmd, ConfigFlags& flags) {
  cmd->add_option("--config", flags.config_path, "model config file (key=value lines)");
  cmd->add_option("--seed", "random seed");
  cmd->add_option("--epochs", "training epochs");
  cmd->add_option("--lr", "learning rate");
  cmd->add_option("--graph-type", "graph variant: acp|acf|cf|cp");
  cmd->add_option("--model-dim", "model dimension");
  cmd->add_option("--heads", "attention heads");
  cmd->add_option("--max-len", "max relation hops for shortest paths");
  cmd->add_option("--batch-size", "training batch size");
  cmd->add_option("--patience", "early stopping patience");
  cmd->add_option("--explain-heads", "attention aggregation over heads: mean|max");
  cmd->add_option("--explain-layer", "attention layer used for explanations");
}

std::vector<acp::QaInstance> load_corpus(const std::string& questions_path,
                                         const std::string& amr_path) {
  auto instances = acp::load_questions(must_read(questions_path));
  if (!amr_path.empty()) acp::attach_amr(instances, must_read(amr_path));
  return instances;
}

int cmd_ingest(const std::string& input, const std::string& lang,
               const std::string& out) {
  acp::IngestReport report;
  acp::ConceptStore store = acp::ingest_csv(must_read(input), lang, &report);
  acp::atomic_write(out, store.to_text());
  std::cout << "ingested " << report.accepted << " assertions ("
            << report.skipped_language << " filtered by language, "
            << report.skipped_malformed << " malformed, " << report.deduplicated
            << " duplicates)\n";
  return 0;
}

int cmd_parse_amr(const std::string& input, const std::string& out) {
  auto graphs = acp::parse_penman_corpus_with_ids(must_read(input));
  json j = json::array();
  for (const auto& [id, g] : graphs) {
    j.push_back({{"id", id},
                 {"root", g.root},
                 {"nodes", g.nodes.size()},
                 {"edges", g.edges.size()}});
    std::cout << id << ": " << g.nodes.size() << " nodes, " << g.edges.size()
              << " edges\n";
  }
  if (!out.empty()) acp::atomic_write(out, j.dump(2) + "\n");
  return 0;
}

int cmd_build_graph(const std::string& type, const std::string& amr_path,
                    const std::string& store_path, const std::string& question,
                    const std::string& out) {
  acp::ConceptStore store = acp::ConceptStore::from_text(must_read(store_path));
  acp::IntegratedGraph g;
  if (type == "acp" || type == "acf") {
    acp::AmrGraph amr = acp::parse_penman_corpus(must_read(amr_path)).at(0);
    g = type == "acp" ? acp::build_acp(amr, store) : acp::build_acf(amr, store);
  } else if (type == "cf" || type == "cp") {
    if (question.empty())
      throw std::runtime_error("--question is required for cf/cp graphs");
    auto tokens = acp::tokenize_question(question);
    if (type == "cf") {
      g = acp::build_cf(tokens, store);
    } else {
      acp::AmrGraph amr = acp::parse_penman_corpus(must_read(amr_path)).at(0);
      g = acp::build_cp(tokens, amr, store);
    }
  } else {
    throw std::runtime_error("unknown graph type: " + type);
  }
  acp::atomic_write(out, acp::graph_to_json(g));
  std::cout << type << " graph: " << g.nodes.size() << " nodes, " << g.edges.size()
            << " edges\n";
  return 0;
}

int cmd_stats(const std::string& input, const std::string& csv_out) {
  auto graphs = acp::parse_penman_corpus(must_read(input));
  acp::RelationStats stats = acp::corpus_role_stats(graphs);
  char buf[128];
  std::string csv = "role,count,percent\n";
  for (const auto& [role, count] : stats.counts) {
    double pct = stats.total ? 100.0 * static_cast<double>(count) /
                                   static_cast<double>(stats.total)
                             : 0.0;
    std::snprintf(buf, sizeof(buf), "%-12s %8zu  %6.2f%%\n", role.c_str(), count, pct);
    std::cout << buf;
    std::snprintf(buf, sizeof(buf), "%s,%zu,%.2f\n", role.c_str(), count, pct);
    csv += buf;
  }
  std::cout << "total        " << stats.total << "\n";
  if (!csv_out.empty()) acp::atomic_write(csv_out, csv);
  return 0;
}

int cmd_gen_synthetic(std::uint64_t seed, std::size_t n_train, std::size_t n_test,
                      std::size_t dim, const std::string& out_dir) {
  acp::SyntheticCorpus corpus = acp::build_synthetic_corpus(seed, n_train, n_test);
  fs::create_directories(out_dir);
  acp::atomic_write(out_dir + "/train.jsonl", acp::questions_to_jsonl(corpus.train));
  acp::atomic_write(out_dir + "/test.jsonl", acp::questions_to_jsonl(corpus.test));
  std::vector<acp::QaInstance> all = corpus.train;
  all.insert(all.end(), corpus.test.begin(), corpus.test.end());
  acp::atomic_write(out_dir + "/amr.penman", acp::corpus_amr_text(all));
  acp::atomic_write(out_dir + "/store.tsv", corpus.store.to_text());
  acp::WordVectors vectors = acp::WordVectors::random(corpus.vocabulary, dim, seed);
  acp::atomic_write(out_dir + "/vectors.txt", vectors.to_text());
  json planted = json::object();
  for (const auto& [id, pair] : corpus.planted)
    planted[id] = {pair.first, pair.second};
  acp::atomic_write(out_dir + "/planted.json", planted.dump(2) + "\n");
  write_run_config(out_dir, "gen-synthetic", nullptr,
                   {{"seed", seed}, {"n_train", n_train}, {"n_test", n_test}});
  std::cout << "wrote " << corpus.train.size() << " train / " << corpus.test.size()
            << " test instances to " << out_dir << "\n";
  return 0;
}

int cmd_train(CLI::App* cmd, ConfigFlags& flags, const std::string& questions,
              const std::string& amr, const std::string& store_path,
              const std::string& vectors_path, const std::string& dev_questions,
              const std::string& out_dir) {
  acp::ModelConfig cfg = flags.resolve(cmd);
  auto corpus = load_corpus(questions, amr);
  acp::ConceptStore store = acp::ConceptStore::from_text(must_read(store_path));
  acp::WordVectors words = acp::WordVectors::load(must_read(vectors_path));
  std::vector<acp::QaInstance> dev;
  if (!dev_questions.empty()) {
    dev = load_corpus(dev_questions, amr);
  }
  acp::ModelBundle bundle;
  acp::TrainResult result = acp::train(corpus, store, words, cfg, &bundle,
                                       dev.empty() ? nullptr : &dev);
  fs::create_directories(out_dir);
  bundle.save(out_dir + "/model.ckpt");
  acp::atomic_write(out_dir + "/metrics.csv", acp::metrics_to_csv(result.metrics));
  write_run_config(out_dir, "train", &cfg,
                   {{"questions", questions},
                    {"amr", amr},
                    {"store", store_path},
                    {"vectors", vectors_path}});
  std::cout << "best dev accuracy " << result.best_dev_accuracy << "\n";
  return 0;
}

int cmd_eval(const std::string& model, const std::string& questions,
             const std::string& amr, const std::string& store_path,
             const std::string& out, bool require_gold) {
  acp::ModelBundle bundle = acp::ModelBundle::load(model);
  auto corpus = load_corpus(questions, amr);
  acp::ConceptStore store = acp::ConceptStore::from_text(must_read(store_path));
  acp::EvalResult result = acp::evaluate(corpus, store, bundle, require_gold);
  acp::atomic_write(out, acp::predictions_to_csv(result));
  if (require_gold) std::cout << "accuracy " << result.accuracy << "\n";
  return 0;
}

int cmd_explain(const std::string& model, const std::string& questions,
                const std::string& amr, const std::string& store_path,
                const std::string& question_id, std::size_t k,
                const std::string& out_dir, int explain_layer,
                const std::string& explain_heads) {
  acp::ModelBundle bundle = acp::ModelBundle::load(model);
  if (explain_layer != -2) bundle.config.explain_layer = explain_layer;
  if (!explain_heads.empty()) bundle.config.explain_heads = explain_heads;
  auto corpus = load_corpus(questions, amr);
  acp::ConceptStore store = acp::ConceptStore::from_text(must_read(store_path));
  for (const acp::QaInstance& inst : corpus) {
    if (inst.id != question_id) continue;
    acp::PreparedInstance prep = acp::prepare_instance(inst, store, bundle);
    acp::ScoredInstance scored = acp::score_candidates(prep, bundle);
    fs::create_directories(out_dir);
    acp::export_heatmap(scored.encoder_output, prep.graph, prep.pairs, bundle.config,
                        k, out_dir);
    write_run_config(out_dir, "explain", &bundle.config,
                     {{"question", question_id}, {"k", k}});
    std::cout << "wrote heatmap.csv and paths.json to " << out_dir << "\n";
    return 0;
  }
  std::cerr << "error\tcli\tquestion id not found: " << question_id << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ACP graph construction, training, and explanation toolkit"};
  app.require_subcommand(1);

  // ingest-cn
  auto* ingest = app.add_subcommand("ingest-cn", "ingest a ConceptNet assertion dump");
  std::string in_path, lang = "en", out_path;
  ingest->add_option("--input", in_path, "assertion dump (tab separated)")->required();
  ingest->add_option("--lang", lang, "language filter");
  ingest->add_option("--out", out_path, "store output file")->required();

  // parse-amr
  auto* parse = app.add_subcommand("parse-amr", "parse and validate PENMAN graphs");
  std::string parse_in, parse_out;
  parse->add_option("--input", parse_in, "PENMAN file")->required();
  parse->add_option("--out", parse_out, "summary JSON output");

  // build-graph
  auto* build = app.add_subcommand("build-graph", "build an integrated graph variant");
  std::string g_type, g_amr, g_store, g_question, g_out;
  build->add_option("--type", g_type, "acp|acf|cf|cp")->required();
  build->add_option("--amr", g_amr, "PENMAN file (first graph used)");
  build->add_option("--store", g_store, "store file")->required();
  build->add_option("--question", g_question, "question text (cf/cp)");
  build->add_option("--out", g_out, "graph JSON output")->required();

  // stats
  auto* stats = app.add_subcommand("stats", "role statistics over a PENMAN corpus");
  std::string stats_in, stats_csv;
  stats->add_option("--input", stats_in, "PENMAN corpus")->required();
  stats->add_option("--csv", stats_csv, "also write CSV to this path");

  // gen-synthetic
  auto* gen = app.add_subcommand("gen-synthetic", "generate the planted-path corpus");
  std::uint64_t gen_seed = 0;
  std::size_t gen_train = 200, gen_test = 50, gen_dim = 64;
  std::string gen_out = "synthetic";
  gen->add_option("--seed", gen_seed, "corpus seed");
  gen->add_option("--n-train", gen_train, "training instances");
  gen->add_option("--n-test", gen_test, "test instances");
  gen->add_option("--dim", gen_dim, "word vector dimension");
  gen->add_option("--out-dir", gen_out, "output directory");

  // train
  auto* train_cmd = app.add_subcommand("train", "train the QA model");
  std::string t_q, t_amr, t_store, t_vec, t_dev, t_out = "run";
  train_cmd->add_option("--questions", t_q, "training questions jsonl")->required();
  train_cmd->add_option("--amr", t_amr, "stem AMR PENMAN file")->required();
  train_cmd->add_option("--store", t_store, "store file")->required();
  train_cmd->add_option("--vectors", t_vec, "word vector file")->required();
  train_cmd->add_option("--dev-questions", t_dev, "held-out dev questions jsonl");
  train_cmd->add_option("--out-dir", t_out, "output directory");
  ConfigFlags train_flags;
  add_config_flags(train_cmd, train_flags);

  // eval / predict
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  auto* pred_cmd = app.add_subcommand("predict", "predictions without gold labels");
  std::string e_model, e_q, e_amr, e_store, e_out = "predictions.csv";
  for (CLI::App* c : {eval_cmd, pred_cmd}) {
    c->add_option("--model", e_model, "checkpoint file")->required();
    c->add_option("--questions", e_q, "questions jsonl")->required();
    c->add_option("--amr", e_amr, "stem AMR PENMAN file")->required();
    c->add_option("--store", e_store, "store file")->required();
    c->add_option("--out", e_out, "predictions CSV path");
  }

  // explain
  auto* explain_cmd = app.add_subcommand("explain", "export attention paths/heatmap");
  std::string x_model, x_q, x_amr, x_store, x_id, x_out = "explanation";
  std::size_t x_k = 4;
  explain_cmd->add_option("--model", x_model, "checkpoint file")->required();
  explain_cmd->add_option("--questions", x_q, "questions jsonl")->required();
  explain_cmd->add_option("--amr", x_amr, "stem AMR PENMAN file")->required();
  explain_cmd->add_option("--store", x_store, "store file")->required();
  explain_cmd->add_option("--question", x_id, "question id")->required();
  explain_cmd->add_option("--k", x_k, "number of paths");
  explain_cmd->add_option("--out", x_out, "output directory");
  int x_layer = -2;  // -2 = keep the checkpoint's setting
  std::string x_heads;
  explain_cmd->add_option("--explain-layer", x_layer,
                          "override attention layer (-1 = last relation layer)");
  explain_cmd->add_option("--explain-heads", x_heads, "override head aggregation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*ingest) return cmd_ingest(in_path, lang, out_path);
    if (*parse) return cmd_parse_amr(parse_in, parse_out);
    if (*build) return cmd_build_graph(g_type, g_amr, g_store, g_question, g_out);
    if (*stats) return cmd_stats(stats_in, stats_csv);
    if (*gen) return cmd_gen_synthetic(gen_seed, gen_train, gen_test, gen_dim, gen_out);
    if (*train_cmd)
      return cmd_train(train_cmd, train_flags, t_q, t_amr, t_store, t_vec, t_dev, t_out);
    if (*eval_cmd) return cmd_eval(e_model, e_q, e_amr, e_store, e_out, true);
    if (*pred_cmd) return cmd_eval(e_model, e_q, e_amr, e_store, e_out, false);
    if (*explain_cmd)
      return cmd_explain(x_model, x_q, x_amr, x_store, x_id, x_k, x_out, x_layer,
                         x_heads);
  } catch (const std::exception& e) {
    std::cerr << "error\tcli\t" << e.what() << "\n";
    return 1;
  }
  return 2;
}
