#ifndef ACP_QA_HPP_
#define ACP_QA_HPP_

#include <optional>
#include <string>
#include <vector>

#include "acp/graph.hpp"
#include "acp/relation.hpp"
#include "acp/transformer.hpp"

namespace acp {

struct Candidate {
  std::string label;  // "a".."e"
  std::string text;
};

struct QaInstance {
  std::string id;
  std::string question;
  std::vector<Candidate> candidates;  // exactly 5
  std::optional<std::string> answer_key;
  AmrGraph amr;

  int gold_index() const;  // -1 when no answer key
};

// Line-delimited JSON records matching the public CommonsenseQA layout:
// {id, question:{stem, choices:[{label,text}]}, answerKey}.
std::vector<QaInstance> load_questions(const std::string& jsonl);
std::string questions_to_jsonl(const std::vector<QaInstance>& instances);

// Attaches stem AMR graphs from a "# ::id"-keyed PENMAN file.
void attach_amr(std::vector<QaInstance>& instances, const std::string& penman_text);

// Trainable model state. Checkpoints round-trip losslessly.
struct ModelBundle {
  ModelConfig config;
  RelationVocab vocab;
  WordVectors words;
  GraphEncoderParams encoder;
  Tensor cls_w;  // (3 * model_dim): [text ; graph ; text*graph] -> logit
  Tensor cls_b;  // scalar

  static ModelBundle init(const ModelConfig& config, const RelationVocab& vocab,
                          const WordVectors& words);
  std::vector<Parameter> parameters();

  std::string serialize() const;
  static ModelBundle deserialize(const std::string& bytes);
  void save(const std::string& path) const;
  static ModelBundle load(const std::string& path);
};

// Mean of word vectors over [CLS] + question tokens + [SEP] + candidate
// tokens. The stub stands in for a pretrained language encoder.
std::vector<double> encode_text(const std::string& question,
                                const std::string& candidate,
                                const WordVectors& words);

// Per-instance cached structure: built graph, all-pairs paths, candidate
// text vectors.
struct PreparedInstance {
  const QaInstance* instance = nullptr;
  IntegratedGraph graph;
  AllPairsRelations pairs;
  std::vector<std::vector<double>> text_vectors;  // 5 x dim
  int gold = -1;
};

PreparedInstance prepare_instance(const QaInstance& inst, const ConceptStore& store,
                                  const ModelBundle& bundle);

struct ScoredInstance {
  Tensor probabilities;  // (5)
  GraphEncoderOutput encoder_output;
};

ScoredInstance score_candidates(const PreparedInstance& prepared, ModelBundle& bundle);

Tensor instance_loss(const PreparedInstance& prepared, ModelBundle& bundle);

struct EpochMetrics {
  std::size_t epoch;
  double train_loss;
  double dev_accuracy;
};

struct TrainResult {
  std::vector<EpochMetrics> metrics;
  double best_dev_accuracy = 0.0;
};

// Builds the relation vocabulary from the training graphs, initializes the
// bundle, and optimizes with Adam. Early-stops on dev accuracy.
TrainResult train(std::vector<QaInstance>& corpus, const ConceptStore& store,
                  const WordVectors& words, const ModelConfig& config,
                  ModelBundle* out_bundle,
                  const std::vector<QaInstance>* dev_corpus = nullptr);

struct EvalResult {
  double accuracy = 0.0;
  struct Prediction {
    std::string id;
    std::string predicted;
    std::string gold;
  };
  std::vector<Prediction> predictions;
};

EvalResult evaluate(const std::vector<QaInstance>& corpus, const ConceptStore& store,
                    ModelBundle& bundle, bool require_gold = true);

std::string metrics_to_csv(const std::vector<EpochMetrics>& metrics);
std::string predictions_to_csv(const EvalResult& result);

// Planted-path synthetic corpus: the gold candidate is the one concept
// reachable from the question subject through an assertion that survives
// ACP pruning; two distractors are reachable only in the unpruned ACF graph.
struct SyntheticCorpus {
  std::vector<QaInstance> train;
  std::vector<QaInstance> test;
  ConceptStore store;
  std::vector<std::string> vocabulary;  // every surface token used
  // Planted pair per instance id: (subject label, answer label).
  std::map<std::string, std::pair<std::string, std::string>> planted;
};

SyntheticCorpus build_synthetic_corpus(std::uint64_t seed, std::size_t n_train,
                                       std::size_t n_test);

std::string corpus_amr_text(const std::vector<QaInstance>& instances);

}  // namespace acp

#endif  // ACP_QA_HPP_
