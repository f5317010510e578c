#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ovfl/environment.hpp"
#include "ovfl/probes.hpp"
#include "ovfl/quantizer.hpp"
#include "ovfl/split_model.hpp"

namespace ovfl {

enum class EvalMode { full_precision, quantized };

struct ProtocolConfig {
  int local_iterations = 1;  // E
  double eta = 1e-4;
  QuantizerSpec quantizer;
  EvalMode eval_mode = EvalMode::full_precision;
  std::optional<double> weight_clip;
};

struct RoundMetrics {
  int round = 0;
  double train_loss_pre = 0.0;  // loss at the round-start model, train rows
  double test_loss = 0.0;       // loss after the round's updates, test rows
  long long bits_up = 0;
  long long bits_down = 0;
  double wall_ms = 0.0;
};

/// The frozen round bundle every party trains against: quantized head model
/// plus all K quantized train-row embeddings. Built once per round; every
/// local iteration at every party reads this same object.
struct ModelRepresentation {
  MlpParams head_q;
  std::vector<DenseMatrix> embeddings_q;
  long long head_bits = 0;
  std::vector<long long> embedding_bits;

  long long uplink_bits() const;
  long long broadcast_bits() const { return head_bits + uplink_bits(); }
};

ModelRepresentation build_representation(const SplitModel& model,
                                         const std::vector<DenseMatrix>& train_features,
                                         const QuantizerSpec& quantizer);

/// Partial gradient of the round loss for one party against the frozen
/// representation. Party 0 is the server: gradient w.r.t. its own current
/// head read over the stale quantized embeddings. Party k >= 1 substitutes
/// its fresh embedding h_k(own_params) into slot k, forwards through the
/// quantized head, and chains the slot gradient back through its extractor.
MlpParams partial_gradient(int party, const ModelRepresentation& rep,
                           const MlpParams& own_params,
                           const DenseMatrix* own_features,
                           const DenseMatrix& labels);

/// Test-row loss. quantized mode passes the embeddings through the given
/// quantizer before the head.
double evaluate(const SplitModel& model, const RoundDataset& data, EvalMode mode,
                const QuantizerSpec& quantizer);

class Trainer {
 public:
  virtual ~Trainer() = default;
  virtual RoundMetrics run_round(const RoundDataset& data, GradientTrace* trace) = 0;
  RoundMetrics run_round(const RoundDataset& data) { return run_round(data, nullptr); }
  virtual const SplitModel& model() const = 0;
  virtual int round() const = 0;
};

/// The online split-training engine: embedding exchange, representation
/// broadcast, E local steps per party against the frozen representation.
class OvflTrainer : public Trainer {
 public:
  OvflTrainer(SplitModel model, ProtocolConfig config);
  using Trainer::run_round;
  RoundMetrics run_round(const RoundDataset& data, GradientTrace* trace) override;
  const SplitModel& model() const override { return model_; }
  int round() const override { return round_; }
  const ProtocolConfig& config() const { return config_; }

 private:
  SplitModel model_;
  ProtocolConfig config_;
  int round_ = 0;
};

/// Centralized baseline: the same architecture trained jointly on the raw
/// round features; uplink billed as raw feature transfer.
class CcTrainer : public Trainer {
 public:
  CcTrainer(SplitModel model, ProtocolConfig config);
  using Trainer::run_round;
  RoundMetrics run_round(const RoundDataset& data, GradientTrace* trace) override;
  const SplitModel& model() const override { return model_; }
  int round() const override { return round_; }

 private:
  SplitModel model_;
  ProtocolConfig config_;
  int round_ = 0;
};

/// Lazy baseline: trains like OvflTrainer until the freeze round, then only
/// evaluates with zero training communication.
class LcTrainer : public Trainer {
 public:
  LcTrainer(SplitModel model, ProtocolConfig config, int freeze_after);
  using Trainer::run_round;
  RoundMetrics run_round(const RoundDataset& data, GradientTrace* trace) override;
  const SplitModel& model() const override { return inner_.model(); }
  int round() const override { return inner_.round() + frozen_rounds_; }

 private:
  OvflTrainer inner_;
  int freeze_after_;
  int frozen_rounds_ = 0;
};

std::unique_ptr<Trainer> make_trainer(const std::string& algorithm, SplitModel model,
                                      const ProtocolConfig& config, int lc_freeze);

}  // namespace ovfl
