#include "acp/qa.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace acp {

int QaInstance::gold_index() const {
  if (!answer_key) return -1;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (candidates[i].label == *answer_key) return static_cast<int>(i);
  return -1;
}

std::vector<QaInstance> load_questions(const std::string& jsonl) {
  std::vector<QaInstance> out;
  for (const std::string& line : split_char(jsonl, '\n')) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    QaInstance inst;
    inst.id = j.at("id").get<std::string>();
    inst.question = j.at("question").at("stem").get<std::string>();
    for (const auto& c : j.at("question").at("choices"))
      inst.candidates.push_back(
          {c.at("label").get<std::string>(), c.at("text").get<std::string>()});
    if (inst.candidates.size() != 5)
      throw std::runtime_error("instance " + inst.id + " must have 5 candidates, has " +
                               std::to_string(inst.candidates.size()));
    if (j.contains("answerKey") && !j["answerKey"].is_null()) {
      inst.answer_key = j["answerKey"].get<std::string>();
      if (inst.gold_index() < 0)
        throw std::runtime_error("instance " + inst.id + " answer key not in a..e");
    }
    out.push_back(std::move(inst));
  }
  return out;
}

std::string questions_to_jsonl(const std::vector<QaInstance>& instances) {
  std::string out;
  for (const QaInstance& inst : instances) {
    nlohmann::json j;
    j["id"] = inst.id;
    j["question"]["stem"] = inst.question;
    j["question"]["choices"] = nlohmann::json::array();
    for (const Candidate& c : inst.candidates)
      j["question"]["choices"].push_back({{"label", c.label}, {"text", c.text}});
    if (inst.answer_key) j["answerKey"] = *inst.answer_key;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void attach_amr(std::vector<QaInstance>& instances, const std::string& penman_text) {
  std::map<std::string, AmrGraph> by_id;
  for (auto& [id, g] : parse_penman_corpus_with_ids(penman_text))
    by_id[id] = std::move(g);
  for (QaInstance& inst : instances) {
    auto it = by_id.find(inst.id);
    if (it == by_id.end())
      throw std::runtime_error("no AMR graph for instance " + inst.id);
    inst.amr = it->second;
  }
}

ModelBundle ModelBundle::init(const ModelConfig& config, const RelationVocab& vocab,
                              const WordVectors& words) {
  if (words.dim() != config.model_dim)
    throw std::invalid_argument("word vector dimension " +
                                std::to_string(words.dim()) +
                                " must equal model_dim " +
                                std::to_string(config.model_dim));
  ModelBundle b;
  b.config = config;
  b.vocab = vocab;
  b.words = words;
  Rng rng(config.seed);
  b.encoder = GraphEncoderParams::init(config, vocab.size(), rng);
  b.cls_w = Tensor::glorot({3 * config.model_dim}, rng);
  b.cls_b = Tensor::zeros({1});
  return b;
}

std::vector<Parameter> ModelBundle::parameters() {
  std::vector<Parameter> out;
  encoder.collect(out);
  out.push_back({"classifier.w", cls_w});
  out.push_back({"classifier.b", cls_b});
  return out;
}

namespace {

constexpr char kCheckpointMagic[] = "ACPCKPT1";

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t& pos) {
  if (pos + 8 > in.size()) throw std::runtime_error("truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += 8;
  return v;
}

void put_blob(std::string& out, const std::string& blob) {
  put_u64(out, blob.size());
  out += blob;
}

std::string get_blob(const std::string& in, std::size_t& pos) {
  std::uint64_t len = get_u64(in, pos);
  if (pos + len > in.size()) throw std::runtime_error("truncated checkpoint");
  std::string blob = in.substr(pos, len);
  pos += len;
  return blob;
}

}  // namespace

std::string ModelBundle::serialize() const {
  std::string out(kCheckpointMagic, 8);
  put_blob(out, config.to_text());
  put_blob(out, vocab.to_text());
  put_blob(out, words.to_text());
  std::vector<Parameter> params = const_cast<ModelBundle*>(this)->parameters();
  put_u64(out, params.size());
  for (const Parameter& p : params) {
    put_blob(out, p.name);
    put_u64(out, p.tensor.shape().size());
    for (std::size_t d : p.tensor.shape()) put_u64(out, d);
    const auto& vals = p.tensor.values();
    // Raw IEEE-754 doubles, little-endian byte order.
    std::string raw(reinterpret_cast<const char*>(vals.data()),
                    vals.size() * sizeof(double));
    out += raw;
  }
  return out;
}

ModelBundle ModelBundle::deserialize(const std::string& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0)
    throw std::runtime_error("not an ACPCKPT1 checkpoint");
  std::size_t pos = 8;
  ModelConfig config = ModelConfig::from_text(get_blob(bytes, pos));
  RelationVocab vocab = RelationVocab::from_text(get_blob(bytes, pos));
  WordVectors words = WordVectors::load(get_blob(bytes, pos));
  ModelBundle bundle = init(config, vocab, words);
  std::vector<Parameter> params = bundle.parameters();
  std::map<std::string, Parameter*> by_name;
  for (Parameter& p : params) by_name[p.name] = &p;
  std::uint64_t count = get_u64(bytes, pos);
  for (std::uint64_t k = 0; k < count; ++k) {
    std::string name = get_blob(bytes, pos);
    std::uint64_t ndim = get_u64(bytes, pos);
    std::vector<std::size_t> shape;
    for (std::uint64_t d = 0; d < ndim; ++d) shape.push_back(get_u64(bytes, pos));
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw std::runtime_error("checkpoint parameter unknown to this config: " + name);
    Parameter& p = *it->second;
    if (p.tensor.shape() != shape)
      throw std::runtime_error("checkpoint shape mismatch for " + name);
    std::size_t nbytes = p.tensor.size() * sizeof(double);
    if (pos + nbytes > bytes.size()) throw std::runtime_error("truncated checkpoint");
    std::memcpy(p.tensor.mutable_values().data(), bytes.data() + pos, nbytes);
    pos += nbytes;
  }
  return bundle;
}

void ModelBundle::save(const std::string& path) const {
  atomic_write(path, serialize());
}

ModelBundle ModelBundle::load(const std::string& path) {
  return deserialize(read_file(path));
}

std::vector<double> encode_text(const std::string& question,
                                const std::string& candidate,
                                const WordVectors& words) {
  std::vector<std::string> tokens{"<cls>"};
  for (auto& t : tokenize_question(question)) tokens.push_back(t);
  tokens.push_back("<sep>");
  for (auto& t : tokenize_question(candidate)) tokens.push_back(t);
  std::vector<double> sum(words.dim(), 0.0);
  std::size_t known = 0;
  for (const std::string& t : tokens) {
    if (!words.contains(t)) continue;
    const auto& v = words.entries().at(t);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += v[i];
    ++known;
  }
  if (known == 0) {
    ++words.oov_hits;
    return sum;  // all-OOV: zero vector
  }
  for (double& v : sum) v /= static_cast<double>(known);
  return sum;
}

namespace {

IntegratedGraph build_instance_graph(const QaInstance& inst, const ConceptStore& store,
                                     const ModelConfig& config) {
  BuildOptions opts;
  if (config.graph_type == "acp") return build_acp(inst.amr, store, opts);
  if (config.graph_type == "acf") return build_acf(inst.amr, store, opts);
  if (config.graph_type == "cf")
    return build_cf(tokenize_question(inst.question), store, opts);
  if (config.graph_type == "cp")
    return build_cp(tokenize_question(inst.question), inst.amr, store, opts);
  throw std::invalid_argument("unknown graph type: " + config.graph_type);
}

}  // namespace

PreparedInstance prepare_instance(const QaInstance& inst, const ConceptStore& store,
                                  const ModelBundle& bundle) {
  PreparedInstance prep;
  prep.instance = &inst;
  prep.graph = build_instance_graph(inst, store, bundle.config);
  prep.pairs = all_pairs_paths(prep.graph, bundle.vocab, bundle.config.max_len);
  for (const Candidate& c : inst.candidates)
    prep.text_vectors.push_back(encode_text(inst.question, c.text, bundle.words));
  prep.gold = inst.gold_index();
  return prep;
}

namespace {

Tensor candidate_logits(const PreparedInstance& prepared, ModelBundle& bundle,
                        const Tensor& graph_vec) {
  std::vector<Tensor> logits;
  for (const auto& tv : prepared.text_vectors) {
    Tensor text = Tensor::from({tv.size()}, tv);
    Tensor z = concat_vecs({text, graph_vec, mul(text, graph_vec)});
    logits.push_back(add(sum_all(mul(bundle.cls_w, z)), bundle.cls_b));
  }
  return concat_vecs(logits);
}

}  // namespace

ScoredInstance score_candidates(const PreparedInstance& prepared, ModelBundle& bundle) {
  ScoredInstance out;
  out.encoder_output = encode_graph(prepared.graph, prepared.pairs, bundle.encoder,
                                    bundle.words, bundle.config);
  out.probabilities =
      softmax_vec(candidate_logits(prepared, bundle, out.encoder_output.graph_vector));
  return out;
}

Tensor instance_loss(const PreparedInstance& prepared, ModelBundle& bundle) {
  if (prepared.gold < 0)
    throw std::invalid_argument("instance " + prepared.instance->id +
                                " has no answer key");
  GraphEncoderOutput enc = encode_graph(prepared.graph, prepared.pairs, bundle.encoder,
                                        bundle.words, bundle.config);
  Tensor logits = candidate_logits(prepared, bundle, enc.graph_vector);
  Tensor logp = log_softmax_vec(logits);
  return affine(slice_vec(logp, static_cast<std::size_t>(prepared.gold), 1), -1.0, 0.0);
}

namespace {

int argmax_probability(const Tensor& probs) {
  const auto& v = probs.values();
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

double accuracy_on(const std::vector<PreparedInstance>& prepared,
                   ModelBundle& bundle) {
  if (prepared.empty()) throw std::invalid_argument("accuracy of empty corpus");
  std::size_t correct = 0;
  for (const PreparedInstance& p : prepared) {
    ScoredInstance s = score_candidates(p, bundle);
    if (argmax_probability(s.probabilities) == p.gold) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(prepared.size());
}

}  // namespace

TrainResult train(std::vector<QaInstance>& corpus, const ConceptStore& store,
                  const WordVectors& words, const ModelConfig& config,
                  ModelBundle* out_bundle, const std::vector<QaInstance>* dev_corpus) {
  for (const QaInstance& inst : corpus)
    if (inst.gold_index() < 0)
      throw std::invalid_argument("training instance " + inst.id +
                                  " has no answer key");
  // Relation vocabulary from the training graphs, in deterministic order.
  RelationVocab vocab;
  for (const QaInstance& inst : corpus) {
    IntegratedGraph g = build_instance_graph(inst, store, config);
    for (const GEdge& e : g.edges) vocab.add_relation(e.label);
  }
  ModelBundle bundle = ModelBundle::init(config, vocab, words);
  std::vector<Parameter> params = bundle.parameters();

  std::vector<const QaInstance*> train_insts, dev_insts;
  Rng rng(config.seed + 1);
  if (dev_corpus) {
    for (const QaInstance& i : corpus) train_insts.push_back(&i);
    for (const QaInstance& i : *dev_corpus) dev_insts.push_back(&i);
  } else {
    std::vector<const QaInstance*> all;
    for (const QaInstance& i : corpus) all.push_back(&i);
    std::shuffle(all.begin(), all.end(), rng);
    std::size_t n_dev = std::max<std::size_t>(1, all.size() / 10);
    dev_insts.assign(all.begin(), all.begin() + n_dev);
    train_insts.assign(all.begin() + n_dev, all.end());
  }
  std::vector<PreparedInstance> train_prep, dev_prep;
  for (const QaInstance* i : train_insts)
    train_prep.push_back(prepare_instance(*i, store, bundle));
  for (const QaInstance* i : dev_insts)
    dev_prep.push_back(prepare_instance(*i, store, bundle));

  AdamState adam;
  TrainResult result;
  double best_dev = -1.0;
  std::size_t best_epoch = 0;
  std::string best_snapshot;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<std::size_t> order(train_prep.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t done = 0;
    while (done < order.size()) {
      std::size_t batch = std::min(config.batch_size, order.size() - done);
      zero_grads(params);
      for (std::size_t b = 0; b < batch; ++b) {
        Tensor loss = instance_loss(train_prep[order[done + b]], bundle);
        loss_sum += loss.item();
        backward(affine(loss, 1.0 / static_cast<double>(batch), 0.0));
      }
      adam_step(params, adam, config.learning_rate);
      done += batch;
    }
    double train_loss = loss_sum / static_cast<double>(train_prep.size());
    double dev_acc = accuracy_on(dev_prep, bundle);
    result.metrics.push_back({epoch, train_loss, dev_acc});
    log_line("info", "train",
             "epoch " + std::to_string(epoch) + " loss " + std::to_string(train_loss) +
                 " dev_acc " + std::to_string(dev_acc));
    if (dev_acc > best_dev) {
      best_dev = dev_acc;
      best_epoch = epoch;
      best_snapshot = bundle.serialize();
    }
    if (epoch - best_epoch >= config.patience) break;
  }
  result.best_dev_accuracy = best_dev;
  if (out_bundle) {
    *out_bundle =
        best_snapshot.empty() ? bundle : ModelBundle::deserialize(best_snapshot);
  }
  return result;
}

EvalResult evaluate(const std::vector<QaInstance>& corpus, const ConceptStore& store,
                    ModelBundle& bundle, bool require_gold) {
  if (corpus.empty()) throw std::invalid_argument("evaluate on empty corpus");
  EvalResult result;
  std::size_t correct = 0, with_gold = 0;
  for (const QaInstance& inst : corpus) {
    if (require_gold && inst.gold_index() < 0)
      throw std::invalid_argument("instance " + inst.id + " has no answer key");
    PreparedInstance prep = prepare_instance(inst, store, bundle);
    ScoredInstance s = score_candidates(prep, bundle);
    int pred = argmax_probability(s.probabilities);
    EvalResult::Prediction rec;
    rec.id = inst.id;
    rec.predicted = inst.candidates[pred].label;
    rec.gold = inst.answer_key.value_or("");
    result.predictions.push_back(rec);
    if (inst.gold_index() >= 0) {
      ++with_gold;
      if (pred == prep.gold) ++correct;
    }
  }
  if (require_gold)
    result.accuracy = static_cast<double>(correct) / static_cast<double>(with_gold);
  return result;
}

std::string metrics_to_csv(const std::vector<EpochMetrics>& metrics) {
  std::ostringstream os;
  os << "epoch,train_loss,dev_acc\n";
  char buf[64];
  for (const EpochMetrics& m : metrics) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9f,%.9f\n", m.epoch, m.train_loss,
                  m.dev_accuracy);
    os << buf;
  }
  return os.str();
}

std::string predictions_to_csv(const EvalResult& result) {
  std::string out = "id,predicted,gold\n";
  for (const auto& p : result.predictions)
    out += p.id + "," + p.predicted + "," + p.gold + "\n";
  return out;
}

namespace {

const std::vector<std::string>& modifier_pool() {
  static const std::vector<std::string> v{
      "sand",  "river",  "night",  "snow",   "stone",  "cloud", "iron",
      "amber", "shadow", "copper", "silver", "golden", "misty", "dusty",
      "pale",  "swift",  "lone",   "wild",   "quiet",  "proud", "young",
      "elder", "marsh",  "frost",  "ember",  "coral",  "moss",  "thorn",
      "birch", "cedar",  "maple",  "aspen",  "briar",  "fen",   "heath",
      "vale",  "crag",   "dune",   "gorge",  "tarn"};
  return v;
}

const std::vector<std::string>& animal_pool() {
  static const std::vector<std::string> v{
      "fox",    "owl",    "toad",   "crane",  "otter", "lynx",  "heron",
      "badger", "weasel", "viper",  "falcon", "stoat", "shrew", "plover",
      "gull",   "carp",   "eel",    "newt",   "vole",  "hare",  "moth",
      "wren",   "finch",  "skink",  "gecko"};
  return v;
}

const std::vector<std::string>& place_pool() {
  static const std::vector<std::string> v{
      "sea",      "reef",   "cave",    "nest",   "burrow", "meadow", "marsh",
      "forest",   "desert", "tundra",  "pond",   "creek",  "cliff",  "canyon",
      "thicket",  "grove",  "lagoon",  "swamp",  "prairie", "dune",  "glacier",
      "estuary",  "delta",  "ridge",   "hollow", "spring",  "gorge", "basin",
      "shoal",    "bluff"};
  return v;
}

const std::vector<std::string>& verb_pool() {
  static const std::vector<std::string> v{"require", "need",   "seek",  "want",
                                          "demand",  "prefer", "choose", "favor"};
  return v;
}

const std::vector<std::string>& decoy_pool() {
  static const std::vector<std::string> v{
      "lantern", "anvil",   "ledger", "spindle", "kettle",  "awl",     "bellows",
      "chisel",  "crate",   "easel",  "flask",   "gimlet",  "hamper",  "ingot",
      "jug",     "loom",    "mallet", "pulley",  "quill",   "rasp",    "satchel",
      "trowel",  "urn",     "vise",   "wicker",  "yoke",    "zither",  "ladle",
      "tongs",   "sieve"};
  return v;
}

std::string amr_for(const std::string& subject_key, const std::string& verb) {
  return "(r / " + verb + "-01\n"
         "   :ARG0 (s / " + subject_key + ")\n"
         "   :ARG1 (u / amr-unknown))";
}

}  // namespace

SyntheticCorpus build_synthetic_corpus(std::uint64_t seed, std::size_t n_train,
                                       std::size_t n_test) {
  std::size_t n = n_train + n_test;
  if (n < 10) throw std::invalid_argument("synthetic corpus needs at least 10 instances");
  const auto& mods = modifier_pool();
  const auto& animals = animal_pool();
  if (n > mods.size() * animals.size())
    throw std::invalid_argument("synthetic corpus limited to " +
                                std::to_string(mods.size() * animals.size()) +
                                " instances");
  Rng rng(seed);
  std::vector<std::pair<std::size_t, std::size_t>> combos;
  for (std::size_t m = 0; m < mods.size(); ++m)
    for (std::size_t a = 0; a < animals.size(); ++a) combos.emplace_back(m, a);
  std::shuffle(combos.begin(), combos.end(), rng);

  SyntheticCorpus corpus;
  std::set<std::string> vocab_set{"<cls>", "<sep>"};
  // Background noise assertions, never reachable from any question graph.
  const auto& decoys = decoy_pool();
  for (std::size_t i = 0; i + 1 < decoys.size(); i += 2)
    corpus.store.add({decoys[i], "RelatedTo", decoys[i + 1], 0.5});

  std::vector<QaInstance> instances;
  const std::vector<std::string> labels{"a", "b", "c", "d", "e"};
  for (std::size_t k = 0; k < n; ++k) {
    auto [mi, ai] = combos[k];
    std::string modifier = mods[mi], animal = animals[ai];
    std::string subject_key = modifier + "_" + animal;
    std::size_t vi = rng() % verb_pool().size();
    std::string verb = verb_pool()[vi];
    std::string answer = place_pool()[rng() % place_pool().size()];
    corpus.store.add({subject_key, "AtLocation", answer, 1.0});

    // Two decoy distractors drawn from the same place pool as the answers,
    // hung off the frame node: ACP prunes the frame expansion, so they are
    // reachable in ACF only. Sharing the answer pool keeps an untrained
    // scorer at chance level over the five candidates.
    std::set<std::string> used{answer};
    auto draw_place = [&]() {
      std::string p;
      do {
        p = place_pool()[rng() % place_pool().size()];
      } while (used.count(p));
      used.insert(p);
      return p;
    };
    std::string d1 = draw_place();
    std::string d2 = draw_place();
    corpus.store.add({verb, "RelatedTo", d1, 1.0});
    corpus.store.add({verb, "RelatedTo", d2, 1.0});
    std::vector<std::string> texts{answer, d1, d2};
    while (texts.size() < 5) {
      std::string p = place_pool()[rng() % place_pool().size()];
      if (used.insert(p).second) texts.push_back(p);
    }
    std::shuffle(texts.begin(), texts.end(), rng);

    QaInstance inst;
    inst.id = "syn-" + std::to_string(k);
    inst.question =
        "What does the " + modifier + " " + animal + " " + verb + "?";
    for (std::size_t c = 0; c < 5; ++c) {
      inst.candidates.push_back({labels[c], texts[c]});
      if (texts[c] == answer) inst.answer_key = labels[c];
    }
    inst.amr = parse_penman(amr_for(subject_key, verb));
    corpus.planted[inst.id] = {subject_key, answer};

    for (const std::string& t : tokenize_question(inst.question)) vocab_set.insert(t);
    for (const Candidate& c : inst.candidates) vocab_set.insert(c.text);
    vocab_set.insert(subject_key);
    vocab_set.insert("amr-unknown");
    vocab_set.insert(verb);
    instances.push_back(std::move(inst));
  }

  // Every planted path must survive ACP pruning; ACF-only decoys must not.
  for (const QaInstance& inst : instances) {
    IntegratedGraph acp = build_acp(inst.amr, corpus.store);
    const auto& [subject, answer] = corpus.planted.at(inst.id);
    if (acp.find_node(answer, NodeOrigin::kConceptNet) < 0)
      throw std::logic_error("planted path pruned for " + inst.id);
    for (const Candidate& c : inst.candidates)
      if (c.text != answer && acp.find_node(c.text, NodeOrigin::kConceptNet) >= 0)
        throw std::logic_error("distractor " + c.text + " reachable in ACP for " +
                               inst.id);
  }

  corpus.train.assign(instances.begin(), instances.begin() + n_train);
  corpus.test.assign(instances.begin() + n_train, instances.end());
  corpus.vocabulary.assign(vocab_set.begin(), vocab_set.end());
  return corpus;
}

std::string corpus_amr_text(const std::vector<QaInstance>& instances) {
  std::string out;
  for (const QaInstance& inst : instances) {
    out += "# ::id " + inst.id + "\n";
    out += serialize_penman(inst.amr);
    out += "\n\n";
  }
  return out;
}

}  // namespace acp
