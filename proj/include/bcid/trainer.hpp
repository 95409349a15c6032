#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "bcid/assembly.hpp"
#include "bcid/errors.hpp"
#include "bcid/network.hpp"

namespace bcid {

struct TrainConfig {
  int epochs = 500;
  double lr_approximator = 1e-3;
  double lr_generator = 1e-3;
  double lr_discriminator = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  int width = kDefaultWidth;
  int blocks = kDefaultBlocks;
  /// Weight of the discriminator-scored feedback in the refine step.
  double feedback = 0.1;
  bool discriminator = true;
  bool resample_interior = false;
  int checkpoint_every = 50;
  std::string checkpoint_path;  ///< empty: checkpoints stay in memory
  double divergence_threshold = 1e6;
  int max_restarts = 3;

  void validate() const;
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct EpochRecord {
  int epoch = 0;
  double loss1 = 0.0;
  double loss2 = 0.0;
  double loss3 = kNaN;
  double l2_u = kNaN;
  double l2_eps = kNaN;
};

struct RunMetrics {
  std::vector<EpochRecord> history;
  double l2_u = kNaN;
  double l2_eps = kNaN;
  double l2_g = kNaN;
  double wall_seconds = 0.0;
  int restarts = 0;
  std::size_t duplicate_rows = 0;
  std::vector<std::string> warnings;
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step = 0;
};

AdamState adam_init(const std::vector<const Matrix*>& params);

/// Bias-corrected adaptive-moment update, in place.
void adam_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads, AdamState& state, double lr,
               double beta1, double beta2, double eps);

/// Everything needed to resume training exactly.
struct Checkpoint {
  int epoch = 0;  ///< number of completed epochs
  double lr_scale = 1.0;
  NetworkParams approximator;
  NetworkParams generator;
  DiscriminatorParams discriminator;
  AdamState adam1, adam2, adam3;
};

std::string serialize(const Checkpoint& cp);
Checkpoint deserialize_checkpoint(const std::string& text);
void save_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::string& path);

/// Raised when a loss turns non-finite or keeps diverging; carries the epoch,
/// the last checkpoint and the metrics recorded so far.
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(const std::string& what, int epoch, Checkpoint last, RunMetrics partial)
      : NumericError(what + " at epoch " + std::to_string(epoch)),
        epoch_(epoch),
        last_(std::move(last)),
        partial_(std::move(partial)) {}
  int epoch() const { return epoch_; }
  const Checkpoint& last_checkpoint() const { return last_; }
  const RunMetrics& partial_metrics() const { return partial_; }

 private:
  int epoch_;
  Checkpoint last_;
  RunMetrics partial_;
};

struct TrainResult {
  NetworkParams approximator;
  NetworkParams generator;
  DiscriminatorParams discriminator;
  RunMetrics metrics;
};

/// Called after every epoch; may fill l2 fields of the record.
using EpochMonitor = std::function<void(EpochRecord&, const NetworkParams& approximator, const NetworkParams& generator)>;

/// Alternating optimization: per epoch one approximator step on Loss1, one
/// generator step on Loss2, one discriminator step, then a refine step of the
/// first two networks with the discriminator-weighted feedback penalty.
TrainResult train(Assembler& assembler, const TrainConfig& cfg, const EpochMonitor& monitor = {},
                  const CollocationConfig* resample_config = nullptr);

}  // namespace bcid
