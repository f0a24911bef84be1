#include <algorithm>
#include <cmath>
#include <random>

#include "tpcl/dataset.hpp"

namespace tpcl {

std::string to_string(PriorShift shift) { return shift == PriorShift::None ? "none" : "reversed"; }

PriorShift prior_shift_from_string(std::string_view name) {
  if (name == "none") return PriorShift::None;
  if (name == "reversed") return PriorShift::Reversed;
  throw ValidationError("unknown prior shift '" + std::string(name) + "'");
}

void SyntheticSpec::validate() const {
  if (num_tasks < 2) throw ValidationError("synthetic spec: num_tasks must be >= 2");
  if (labels_per_task < 2) throw ValidationError("synthetic spec: labels_per_task must be >= 2");
  if (samples_per_task < 1 || test_samples_per_task < 1)
    throw ValidationError("synthetic spec: sample counts must be positive");
  if (!(bias_strength >= 0.0 && bias_strength <= 1.0))
    throw ValidationError("synthetic spec: bias_strength must lie in [0, 1]");
  if (informative_dim() < 1)
    throw ValidationError("synthetic spec: feature_dim must exceed num_tasks + 1");
  if (!(informative_noise >= 0.0) || !(noise_spread >= 0.0 && noise_spread < 1.0))
    throw ValidationError("synthetic spec: noise parameters out of range");
}

namespace {

// Label prior of one task: the majority (local label 0) gets bias_strength,
// the rest share the remainder evenly. Reversal mirrors the vector so the
// training majority becomes the least likely answer.
std::vector<double> task_prior(const SyntheticSpec& spec, bool reversed) {
  const auto L = static_cast<std::size_t>(spec.labels_per_task);
  std::vector<double> prior(L, (1.0 - spec.bias_strength) / static_cast<double>(L - 1));
  prior[0] = spec.bias_strength;
  if (reversed) std::reverse(prior.begin(), prior.end());
  return prior;
}

int draw_local_label(const std::vector<double>& prior, std::mt19937_64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    acc += prior[i];
    if (u < acc) return static_cast<int>(i);
  }
  // Rounding residue: the last label with nonzero mass.
  for (std::size_t i = prior.size(); i-- > 0;)
    if (prior[i] > 0.0) return static_cast<int>(i);
  return 0;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const int T = spec.num_tasks;
  const int L = spec.labels_per_task;
  const int K = spec.informative_dim();

  // Label prototypes in the informative block, unit norm.
  std::mt19937_64 proto_rng(mix_seed(spec.seed, 0x70726f74));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> prototype(static_cast<std::size_t>(spec.num_labels()));
  for (auto& p : prototype) {
    p.resize(static_cast<std::size_t>(K));
    double norm = 0.0;
    for (auto& v : p) {
      v = gauss(proto_rng);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (auto& v : p) v /= norm;
  }

  auto task_noise = [&](int task) {
    const double t = T > 1 ? static_cast<double>(task) / (T - 1) : 0.0;
    return spec.informative_noise * (1.0 - spec.noise_spread + 2.0 * spec.noise_spread * t);
  };

  SyntheticData data;
  data.majority_label.resize(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) data.majority_label[static_cast<std::size_t>(t)] = t * L;

  const auto train_prior = task_prior(spec, false);
  const auto ood_prior = task_prior(spec, spec.prior_shift == PriorShift::Reversed);

  auto make_split = [&](std::uint64_t stream, int per_task, const std::vector<double>& prior,
                        bool spurious_correlated) {
    Dataset split;
    split.num_labels = spec.num_labels();
    split.feature_dim = spec.feature_dim;
    split.samples.reserve(static_cast<std::size_t>(T * per_task));
    SampleId next_id = 0;
    for (int t = 0; t < T; ++t) {
      std::mt19937_64 rng(mix_seed(spec.seed, stream, static_cast<std::uint64_t>(t)));
      const double sigma = task_noise(t);
      for (int i = 0; i < per_task; ++i) {
        const int local = draw_local_label(prior, rng);
        const int label = t * L + local;
        Sample s;
        s.id = next_id++;
        s.task = t;
        s.answer = {label};
        s.features.assign(static_cast<std::size_t>(spec.feature_dim), 0.0);
        s.features[static_cast<std::size_t>(t)] = 1.0;
        const auto& proto = prototype[static_cast<std::size_t>(label)];
        for (int k = 0; k < K; ++k)
          s.features[static_cast<std::size_t>(T + k)] = proto[static_cast<std::size_t>(k)] + sigma * gauss(rng);
        bool cue;
        if (spurious_correlated) {
          cue = local == 0;
        } else {
          cue = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < spec.bias_strength;
        }
        s.features.back() = cue ? spec.spurious_scale : 0.0;
        split.samples.push_back(std::move(s));
      }
    }
    return split;
  };

  data.train = make_split(1, spec.samples_per_task, train_prior, true);
  data.test_id = make_split(2, spec.test_samples_per_task, train_prior, true);
  data.test_ood = make_split(3, spec.test_samples_per_task, ood_prior, false);
  return data;
}

}  // namespace tpcl
