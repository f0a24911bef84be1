#include "tpcl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "json.hpp"

namespace tpcl {

using json = nlohmann::json;

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

bool has_label(const Sample& s, int label) { return std::binary_search(s.answer.begin(), s.answer.end(), label); }

void check_shape(const ToyModel& model, const Sample& s) {
  if (static_cast<int>(s.features.size()) != model.features)
    throw ValidationError("feature-dimension mismatch: sample " + std::to_string(s.id) + " has " +
                          std::to_string(s.features.size()) + " features, model expects " +
                          std::to_string(model.features));
}

}  // namespace

ToyModel::ToyModel(int features_, int labels_)
    : features(features_),
      labels(labels_),
      weights(static_cast<std::size_t>(features_) * static_cast<std::size_t>(labels_), 0.0),
      bias(static_cast<std::size_t>(labels_), 0.0) {
  if (features_ < 0 || labels_ < 1) throw ValidationError("model needs >= 1 label and >= 0 features");
}

void ToyModel::logits(std::span<const double> x, std::span<double> out) const {
  const auto F = static_cast<std::size_t>(features);
  for (std::size_t k = 0; k < static_cast<std::size_t>(labels); ++k) {
    const double* w = weights.data() + k * F;
    double z = bias[k];
    for (std::size_t j = 0; j < F; ++j) z += w[j] * x[j];
    out[k] = z;
  }
}

int ToyModel::predict(std::span<const double> x) const {
  std::vector<double> z(static_cast<std::size_t>(labels));
  logits(x, z);
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

double sample_loss(const ToyModel& model, const Sample& sample) {
  check_shape(model, sample);
  std::vector<double> z(static_cast<std::size_t>(model.labels));
  model.logits(sample.features, z);
  double loss = 0.0;
  for (int k = 0; k < model.labels; ++k) {
    const double zk = z[static_cast<std::size_t>(k)];
    loss += softplus(zk) - (has_label(sample, k) ? zk : 0.0);
  }
  return loss / model.labels;
}

LossAndGradient loss_and_gradient(const ToyModel& model, std::span<const Sample* const> batch) {
  LossAndGradient out{0.0, ToyModel(model.features, model.labels)};
  if (batch.empty()) return out;
  const auto F = static_cast<std::size_t>(model.features);
  const auto K = static_cast<std::size_t>(model.labels);
  const double scale = 1.0 / (static_cast<double>(batch.size()) * static_cast<double>(K));
  std::vector<double> z(K);
  for (const Sample* s : batch) {
    check_shape(model, *s);
    model.logits(s->features, z);
    for (std::size_t k = 0; k < K; ++k) {
      const double y = has_label(*s, static_cast<int>(k)) ? 1.0 : 0.0;
      out.loss += (softplus(z[k]) - y * z[k]) * scale;
      const double g = (sigmoid(z[k]) - y) * scale;
      out.gradient.bias[k] += g;
      double* gw = out.gradient.weights.data() + k * F;
      for (std::size_t j = 0; j < F; ++j) gw[j] += g * s->features[j];
    }
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ValidationError("learning_rate must be finite and >= 0");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (passes_per_cycle < 1) throw ValidationError("passes_per_cycle must be >= 1");
}

double train_cycle(ToyModel& model, const Dataset& data, std::span<const std::size_t> indices,
                   const TrainConfig& cfg, int iteration, int cycle) {
  cfg.validate();
  if (indices.empty()) throw ValidationError("cannot train on an empty curriculum");
  std::vector<std::size_t> order(indices.begin(), indices.end());
  std::vector<const Sample*> batch;
  batch.reserve(static_cast<std::size_t>(cfg.batch_size));
  double loss_sum = 0.0;
  std::size_t batches = 0;
  for (int pass = 0; pass < cfg.passes_per_cycle; ++pass) {
    std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(iteration) * 1024 + static_cast<std::uint64_t>(pass),
                                 static_cast<std::uint64_t>(cycle)));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      batch.clear();
      const auto stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      for (std::size_t i = start; i < stop; ++i) batch.push_back(&data.samples[order[i]]);
      auto lg = loss_and_gradient(model, batch);
      if (!std::isfinite(lg.loss))
        throw Error("non-finite training loss at iteration " + std::to_string(iteration) + ", cycle " +
                    std::to_string(cycle) + "; lower the learning rate (currently " +
                    std::to_string(cfg.learning_rate) + ")");
      for (std::size_t i = 0; i < model.weights.size(); ++i)
        model.weights[i] -= cfg.learning_rate * lg.gradient.weights[i];
      for (std::size_t k = 0; k < model.bias.size(); ++k) model.bias[k] -= cfg.learning_rate * lg.gradient.bias[k];
      loss_sum += lg.loss;
      ++batches;
    }
  }
  return loss_sum / static_cast<double>(batches);
}

LossReport score_all(const ToyModel& model, const Dataset& data, int iteration, int cycle) {
  if (data.empty()) throw ValidationError("cannot score an empty dataset");
  LossReport report{iteration, cycle, {}};
  report.records.reserve(data.size());
  for (const auto& s : data.samples) report.records.push_back({s.id, s.task, sample_loss(model, s)});
  return report;
}

double vqa_score(int matching_annotators) {
  return std::min(static_cast<double>(std::max(matching_annotators, 0)) / 3.0, 1.0);
}

EvalResult evaluate(const ToyModel& model, const Dataset& split, const TypeLexicon& lexicon, std::string split_name) {
  EvalResult r;
  r.split = std::move(split_name);
  if (split.empty()) throw ValidationError("cannot evaluate on an empty split");
  std::array<std::size_t, 4> correct{};
  double score_sum = 0.0;
  bool has_counts = true;
  std::vector<double> z(static_cast<std::size_t>(model.labels));
  for (const auto& s : split.samples) {
    check_shape(model, s);
    model.logits(s.features, z);
    const int pred = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    const auto group = lexicon.contains(s.task) ? lexicon.at(s.task).group : CoarseGroup::Other;
    const auto g = static_cast<std::size_t>(group);
    ++r.group_count[g];
    auto it = std::lower_bound(s.answer.begin(), s.answer.end(), pred);
    const bool hit = it != s.answer.end() && *it == pred;
    if (hit) ++correct[g];
    if (s.answer_counts.empty()) {
      has_counts = false;
    } else if (hit) {
      score_sum += vqa_score(s.answer_counts[static_cast<std::size_t>(it - s.answer.begin())]);
    }
  }
  r.count = split.size();
  std::size_t total_correct = 0;
  for (std::size_t g = 0; g < 4; ++g) {
    total_correct += correct[g];
    r.group_accuracy[g] =
        r.group_count[g] ? static_cast<double>(correct[g]) / static_cast<double>(r.group_count[g]) : 0.0;
  }
  r.overall = static_cast<double>(total_correct) / static_cast<double>(r.count);
  if (has_counts) r.vqa_score = score_sum / static_cast<double>(r.count);
  return r;
}

std::string model_to_json(const ToyModel& model) {
  json body = {{"schema_version", kSchemaVersion},
               {"features", model.features},
               {"labels", model.labels},
               {"weights", model.weights},
               {"bias", model.bias}};
  body["checksum"] = checksum_hex(body.dump());
  return body.dump() + "\n";
}

ToyModel model_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("checkpoint: ") + e.what());
  }
  if (doc.value("schema_version", 0) != kSchemaVersion) throw IntegrityError("checkpoint: unsupported schema_version");
  const auto stored = doc.value("checksum", std::string{});
  doc.erase("checksum");
  if (stored != checksum_hex(doc.dump())) throw IntegrityError("checkpoint: checksum mismatch");
  ToyModel m(doc.at("features").get<int>(), doc.at("labels").get<int>());
  m.weights = doc.at("weights").get<std::vector<double>>();
  m.bias = doc.at("bias").get<std::vector<double>>();
  if (m.weights.size() != static_cast<std::size_t>(m.features) * static_cast<std::size_t>(m.labels) ||
      m.bias.size() != static_cast<std::size_t>(m.labels))
    throw ValidationError("checkpoint: weight shape does not match header");
  return m;
}

void save_model(const std::filesystem::path& path, const ToyModel& model) {
  write_file_atomic(path, model_to_json(model));
}

ToyModel load_model(const std::filesystem::path& path) { return model_from_json(read_file(path)); }

// ---------------------------------------------------------------------------
// EmbeddedTrainer
// ---------------------------------------------------------------------------

EmbeddedTrainer::EmbeddedTrainer(const Dataset& train, TrainConfig cfg, const TypeLexicon& lexicon)
    : train_(train), cfg_(cfg), lexicon_(lexicon), model_(train.feature_dim, std::max(train.num_labels, 1)) {
  cfg_.validate();
  position_.reserve(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) position_.emplace(train.samples[i].id, i);
}

void EmbeddedTrainer::attach_eval_split(std::string name, const Dataset& split) {
  eval_splits_.emplace_back(std::move(name), &split);
}

void EmbeddedTrainer::set_model(ToyModel model) {
  if (model.features != model_.features || model.labels != model_.labels)
    throw ValidationError("checkpoint shape does not match the dataset");
  model_ = std::move(model);
}

void EmbeddedTrainer::train(const CycleRequest& request) {
  std::vector<std::size_t> positions;
  positions.reserve(request.samples.size());
  for (SampleId id : request.samples) {
    auto it = position_.find(id);
    if (it == position_.end()) throw ValidationError("curriculum names unknown sample " + std::to_string(id));
    positions.push_back(it->second);
  }
  train_positions(positions, request.iteration, request.stage, request.cycle);
}

void EmbeddedTrainer::train_positions(std::span<const std::size_t> positions, int iteration, int stage, int cycle) {
  const auto t0 = std::chrono::steady_clock::now();
  const double loss = train_cycle(model_, train_, positions, cfg_, iteration, cycle);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& result : evaluate_all()) {
    metrics_.push_back({stage, cycle, result.split, result.overall, result.group_accuracy, loss, ms});
  }
}

LossReport EmbeddedTrainer::score(const CycleRequest& request) {
  return score_all(model_, train_, request.iteration, request.cycle);
}

std::vector<EvalResult> EmbeddedTrainer::evaluate_all() const {
  std::vector<EvalResult> out;
  for (const auto& [name, split] : eval_splits_) out.push_back(evaluate(model_, *split, lexicon_, name));
  return out;
}

}  // namespace tpcl
