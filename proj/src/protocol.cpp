#include "ovfl/protocol.hpp"

#include <chrono>
#include <cmath>

#include "ovfl/errors.hpp"

namespace ovfl {

long long ModelRepresentation::uplink_bits() const {
  long long total = 0;
  for (long long b : embedding_bits) total += b;
  return total;
}

ModelRepresentation build_representation(const SplitModel& model,
                                         const std::vector<DenseMatrix>& train_features,
                                         const QuantizerSpec& quantizer) {
  ModelRepresentation rep;
  for (size_t k = 0; k < train_features.size(); ++k) {
    const DenseMatrix emb = forward(model.extractors[k], train_features[k]).output();
    QuantizedTensor q = quantize(quantizer, emb);
    rep.embeddings_q.push_back(std::move(q.reconstructed));
    rep.embedding_bits.push_back(bits_cost(q));
  }
  const std::vector<double> head_flat = flatten(model.head);
  QuantizedTensor qh = quantize(
      quantizer, DenseMatrix(1, static_cast<int>(head_flat.size()), head_flat));
  rep.head_q = model.head;
  // Reuse the head's layer layout for the reconstructed values.
  {
    SplitModel shell;
    shell.head = model.head;
    std::vector<double> values = qh.reconstructed.data;
    size_t at = 0;
    for (int i = 0; i < shell.head.num_layers(); ++i) {
      auto& w = shell.head.weights[i].data;
      std::copy(values.begin() + at, values.begin() + at + w.size(), w.begin());
      at += w.size();
      auto& b = shell.head.biases[i];
      std::copy(values.begin() + at, values.begin() + at + b.size(), b.begin());
      at += b.size();
    }
    rep.head_q = std::move(shell.head);
  }
  rep.head_bits = bits_cost(qh);
  return rep;
}

MlpParams partial_gradient(int party, const ModelRepresentation& rep,
                           const MlpParams& own_params,
                           const DenseMatrix* own_features,
                           const DenseMatrix& labels) {
  if (rep.embeddings_q.empty()) throw ConfigError("partial_gradient: empty representation");

  if (party == 0) {
    const DenseMatrix input = hstack(rep.embeddings_q);
    ActivationTape tape = forward(own_params, input);
    return backward(own_params, tape, mse_grad(tape.output(), labels)).first;
  }

  if (own_features == nullptr)
    throw ConfigError("partial_gradient: party " + std::to_string(party) +
                      " needs its own features");
  const int slot = party - 1;
  ActivationTape own_tape = forward(own_params, *own_features);
  std::vector<DenseMatrix> blocks = rep.embeddings_q;
  blocks[slot] = own_tape.output();
  ActivationTape head_tape = forward(rep.head_q, hstack(blocks));
  auto [head_grads, concat_grad] =
      backward(rep.head_q, head_tape, mse_grad(head_tape.output(), labels));
  (void)head_grads;
  const int emb = own_params.output_size();
  DenseMatrix slot_grad = slice_cols(concat_grad, slot * emb, emb);
  return backward(own_params, own_tape, slot_grad).first;
}

double evaluate(const SplitModel& model, const RoundDataset& data, EvalMode mode,
                const QuantizerSpec& quantizer) {
  if (data.test_rows <= 0) throw ShapeError("evaluate: no test rows");
  std::vector<DenseMatrix> embeddings =
      compute_embeddings(model, data.test_features());
  if (mode == EvalMode::quantized)
    for (auto& e : embeddings) e = quantize(quantizer, e).reconstructed;
  return mse_loss(forward(model.head, hstack(embeddings)).output(),
                  data.test_labels());
}

namespace {

void check_finite(double loss, int round, const char* which) {
  if (!std::isfinite(loss))
    throw DivergenceError(round, std::string(which) + " became non-finite at round " +
                                     std::to_string(round));
}

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

namespace {

// The clip bound is a trajectory-wide guarantee, so it applies to the
// initial parameters as well as to every post-step state.
void clip_model(SplitModel& model, const std::optional<double>& bound) {
  if (!bound) return;
  clip_params(model.head, *bound);
  for (auto& e : model.extractors) clip_params(e, *bound);
}

}  // namespace

OvflTrainer::OvflTrainer(SplitModel model, ProtocolConfig config)
    : model_(std::move(model)), config_(std::move(config)) {
  config_.quantizer.validate();
  if (config_.local_iterations < 1) throw ConfigError("E must be >= 1");
  if (config_.eta < 0) throw ConfigError("eta must be >= 0");
  clip_model(model_, config_.weight_clip);
}

RoundMetrics OvflTrainer::run_round(const RoundDataset& data, GradientTrace* trace) {
  const auto start = Clock::now();
  ++round_;
  const int parties = model_.num_parties();
  if (static_cast<int>(data.features.size()) != parties)
    throw ShapeError("run_round: feature blocks != extractor count");

  const std::vector<DenseMatrix> train_feats = data.train_features();
  const DenseMatrix train_labels = data.train_labels();

  RoundMetrics m;
  m.round = round_;
  m.train_loss_pre = split_loss(model_, train_feats, train_labels);
  check_finite(m.train_loss_pre, round_, "train loss");

  // One exchange per round: SUs uplink quantized embeddings, the server
  // broadcasts the frozen representation back to every SU.
  ModelRepresentation rep = build_representation(model_, train_feats, config_.quantizer);
  m.bits_up = rep.uplink_bits();
  m.bits_down = static_cast<long long>(parties) * rep.broadcast_bits();

  // Identity-path twin of the representation, only needed when probing.
  ModelRepresentation rep_plain;
  if (trace && trace->enabled()) {
    QuantizerSpec identity{QuantKind::identity, 32};
    rep_plain = build_representation(model_, train_feats, identity);
    trace->begin_round(parties + 1);
  }

  // Every party's E local steps read only the frozen representation plus its
  // own fresh parameters, so the party order cannot matter.
  SplitModel updated = model_;
  for (int party = 0; party <= parties; ++party) {
    MlpParams* own = party == 0 ? &updated.head : &updated.extractors[party - 1];
    const DenseMatrix* feats = party == 0 ? nullptr : &train_feats[party - 1];
    for (int tau = 0; tau < config_.local_iterations; ++tau) {
      MlpParams grads = partial_gradient(party, rep, *own, feats, train_labels);
      if (trace && trace->enabled()) {
        MlpParams plain = partial_gradient(party, rep_plain, *own, feats, train_labels);
        trace->observe_iteration(party, grads, plain, *own);
      }
      sgd_step_inplace(*own, grads, config_.eta);
      if (config_.weight_clip) clip_params(*own, *config_.weight_clip);
    }
  }
  model_ = std::move(updated);
  if (trace && trace->enabled()) {
    trace->end_round();
    trace->observe_model(model_);
  }

  m.test_loss = evaluate(model_, data, config_.eval_mode, config_.quantizer);
  check_finite(m.test_loss, round_, "test loss");
  m.wall_ms = ms_since(start);
  return m;
}

CcTrainer::CcTrainer(SplitModel model, ProtocolConfig config)
    : model_(std::move(model)), config_(std::move(config)) {
  if (config_.local_iterations < 1) throw ConfigError("E must be >= 1");
  clip_model(model_, config_.weight_clip);
}

RoundMetrics CcTrainer::run_round(const RoundDataset& data, GradientTrace* trace) {
  const auto start = Clock::now();
  ++round_;
  const std::vector<DenseMatrix> train_feats = data.train_features();
  const DenseMatrix train_labels = data.train_labels();

  RoundMetrics m;
  m.round = round_;
  m.train_loss_pre = split_loss(model_, train_feats, train_labels);
  check_finite(m.train_loss_pre, round_, "train loss");

  for (int e = 0; e < config_.local_iterations; ++e) {
    if (trace && trace->enabled()) {
      trace->begin_round(model_.num_parties() + 1);
      auto [grads, loss] = joint_grads(model_, train_feats, train_labels);
      (void)loss;
      trace->observe_iteration(0, grads.head, grads.head, model_.head);
      for (int k = 0; k < model_.num_parties(); ++k)
        trace->observe_iteration(k + 1, grads.extractors[k], grads.extractors[k],
                                 model_.extractors[k]);
      trace->end_round();
    }
    joint_sgd_step(model_, train_feats, train_labels, config_.eta);
    if (config_.weight_clip) {
      clip_params(model_.head, *config_.weight_clip);
      for (auto& e2 : model_.extractors) clip_params(e2, *config_.weight_clip);
    }
  }
  if (trace && trace->enabled()) trace->observe_model(model_);

  // Raw sensing data goes to the server: M rows x feature dim x 32 bits per SU.
  long long raw_bits = 0;
  for (const auto& f : train_feats)
    raw_bits += static_cast<long long>(f.rows) * f.cols * 32;
  m.bits_up = raw_bits;
  m.bits_down = 0;

  m.test_loss = evaluate(model_, data, EvalMode::full_precision, config_.quantizer);
  check_finite(m.test_loss, round_, "test loss");
  m.wall_ms = ms_since(start);
  return m;
}

LcTrainer::LcTrainer(SplitModel model, ProtocolConfig config, int freeze_after)
    : inner_(std::move(model), std::move(config)), freeze_after_(freeze_after) {
  if (freeze_after < 1) throw ConfigError("lc_freeze must be >= 1");
}

RoundMetrics LcTrainer::run_round(const RoundDataset& data, GradientTrace* trace) {
  if (inner_.round() < freeze_after_) return inner_.run_round(data, trace);

  const auto start = Clock::now();
  ++frozen_rounds_;
  RoundMetrics m;
  m.round = round();
  m.train_loss_pre = split_loss(inner_.model(), data.train_features(), data.train_labels());
  m.test_loss = evaluate(inner_.model(), data, inner_.config().eval_mode,
                         inner_.config().quantizer);
  check_finite(m.test_loss, m.round, "test loss");
  m.bits_up = 0;
  m.bits_down = 0;
  m.wall_ms = ms_since(start);
  return m;
}

std::unique_ptr<Trainer> make_trainer(const std::string& algorithm, SplitModel model,
                                      const ProtocolConfig& config, int lc_freeze) {
  if (algorithm == "ovfl")
    return std::make_unique<OvflTrainer>(std::move(model), config);
  if (algorithm == "cc") return std::make_unique<CcTrainer>(std::move(model), config);
  if (algorithm == "lc")
    return std::make_unique<LcTrainer>(std::move(model), config, lc_freeze);
  throw ConfigError("algorithm: unknown algorithm '" + algorithm + "'");
}

}  // namespace ovfl
