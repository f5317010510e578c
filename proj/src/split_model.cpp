#include "ovfl/split_model.hpp"

#include <cstring>
#include <string>

#include "ovfl/errors.hpp"
#include "ovfl/rng.hpp"

namespace ovfl {

SplitArch SplitArch::make(int feature_dim, const std::vector<int>& extractor_hidden,
                          int embedding_dim, const std::vector<int>& head_hidden,
                          int label_dim, int num_parties) {
  SplitArch arch;
  arch.num_parties = num_parties;
  arch.extractor_layers.push_back(feature_dim);
  for (int h : extractor_hidden) arch.extractor_layers.push_back(h);
  arch.extractor_layers.push_back(embedding_dim);
  arch.head_layers.push_back(embedding_dim * num_parties);
  for (int h : head_hidden) arch.head_layers.push_back(h);
  arch.head_layers.push_back(label_dim);
  return arch;
}

size_t SplitModel::param_count() const {
  size_t n = head.param_count();
  for (const auto& e : extractors) n += e.param_count();
  return n;
}

SplitModel init_split_model(const SplitArch& arch, std::uint64_t seed) {
  if (arch.num_parties < 1) throw ConfigError("split model needs at least one party");
  if (arch.head_layers.front() != arch.embedding_dim() * arch.num_parties)
    throw ConfigError("head input size " + std::to_string(arch.head_layers.front()) +
                      " != parties * embedding dim");
  SplitModel m;
  m.head = init_mlp(arch.head_layers, derive_seed(seed, 0));
  for (int k = 0; k < arch.num_parties; ++k)
    m.extractors.push_back(init_mlp(arch.extractor_layers, derive_seed(seed, 1 + k)));
  return m;
}

namespace {

size_t unflatten_mlp(MlpParams& p, const std::vector<double>& values, size_t at) {
  for (int i = 0; i < p.num_layers(); ++i) {
    auto& w = p.weights[i].data;
    std::copy(values.begin() + at, values.begin() + at + w.size(), w.begin());
    at += w.size();
    auto& b = p.biases[i];
    std::copy(values.begin() + at, values.begin() + at + b.size(), b.begin());
    at += b.size();
  }
  return at;
}

}  // namespace

std::vector<double> flatten(const SplitModel& model) {
  std::vector<double> out;
  out.reserve(model.param_count());
  flatten_into(model.head, out);
  for (const auto& e : model.extractors) flatten_into(e, out);
  return out;
}

void unflatten(SplitModel& model, const std::vector<double>& values) {
  if (values.size() != model.param_count())
    throw ShapeError("unflatten: expected " + std::to_string(model.param_count()) +
                     " values, got " + std::to_string(values.size()));
  size_t at = unflatten_mlp(model.head, values, 0);
  for (auto& e : model.extractors) at = unflatten_mlp(e, values, at);
}

std::vector<DenseMatrix> compute_embeddings(const SplitModel& model,
                                            const std::vector<DenseMatrix>& features) {
  if (features.size() != model.extractors.size())
    throw ShapeError("compute_embeddings: feature blocks " +
                     std::to_string(features.size()) + " != parties " +
                     std::to_string(model.extractors.size()));
  std::vector<DenseMatrix> embeddings;
  embeddings.reserve(features.size());
  for (size_t k = 0; k < features.size(); ++k)
    embeddings.push_back(forward(model.extractors[k], features[k]).output());
  return embeddings;
}

DenseMatrix split_forward(const SplitModel& model,
                          const std::vector<DenseMatrix>& features) {
  return forward(model.head, hstack(compute_embeddings(model, features))).output();
}

double split_loss(const SplitModel& model, const std::vector<DenseMatrix>& features,
                  const DenseMatrix& labels) {
  return mse_loss(split_forward(model, features), labels);
}

std::pair<SplitGrads, double> joint_grads(const SplitModel& model,
                                          const std::vector<DenseMatrix>& features,
                                          const DenseMatrix& labels) {
  const int parties = model.num_parties();
  std::vector<ActivationTape> tapes;
  tapes.reserve(parties);
  std::vector<DenseMatrix> embeddings;
  embeddings.reserve(parties);
  for (int k = 0; k < parties; ++k) {
    tapes.push_back(forward(model.extractors[k], features[k]));
    embeddings.push_back(tapes.back().output());
  }
  ActivationTape head_tape = forward(model.head, hstack(embeddings));
  const double loss = mse_loss(head_tape.output(), labels);
  auto [head_grads, concat_grad] = backward(model.head, head_tape,
                                            mse_grad(head_tape.output(), labels));
  const int emb = model.extractors.front().output_size();
  SplitGrads grads;
  grads.head = std::move(head_grads);
  grads.extractors.reserve(parties);
  for (int k = 0; k < parties; ++k) {
    DenseMatrix slot = slice_cols(concat_grad, k * emb, emb);
    grads.extractors.push_back(backward(model.extractors[k], tapes[k], slot).first);
  }
  return {std::move(grads), loss};
}

void joint_sgd_step(SplitModel& model, const std::vector<DenseMatrix>& features,
                    const DenseMatrix& labels, double eta) {
  // All gradients are taken at the same point before any update is applied.
  auto [grads, loss] = joint_grads(model, features, labels);
  (void)loss;
  sgd_step_inplace(model.head, grads.head, eta);
  for (int k = 0; k < model.num_parties(); ++k)
    sgd_step_inplace(model.extractors[k], grads.extractors[k], eta);
}

double max_param_abs_diff(const SplitModel& a, const SplitModel& b) {
  double worst = max_param_abs_diff(a.head, b.head);
  for (size_t k = 0; k < a.extractors.size(); ++k)
    worst = std::max(worst, max_param_abs_diff(a.extractors[k], b.extractors[k]));
  return worst;
}

bool params_bitwise_equal(const SplitModel& a, const SplitModel& b) {
  const auto fa = flatten(a);
  const auto fb = flatten(b);
  if (fa.size() != fb.size()) return false;
  return std::memcmp(fa.data(), fb.data(), fa.size() * sizeof(double)) == 0;
}

}  // namespace ovfl
