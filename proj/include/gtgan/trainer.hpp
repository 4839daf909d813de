#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtgan/model.hpp"
#include "gtgan/synth.hpp"

namespace gtgan {

/// Raised when a loss or gradient stops being finite.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(std::size_t step, const std::string& what)
      : std::runtime_error("non-finite value at step " + std::to_string(step) + ": " + what),
        step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

inline constexpr double kProbabilityClamp = 1e-7;

struct GanLosses {
  double loss_d = 0.0;
  double loss_g = 0.0;
};

/// loss_d = -mean log D(real) - mean log(1 - D(fake)),
/// loss_g = -mean log D(fake), probabilities clamped to [1e-7, 1 - 1e-7].
GanLosses gan_losses(std::span<const double> d_real, std::span<const double> d_fake);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;

  static AdamState zeros(std::size_t size) { return {std::vector<double>(size, 0.0), std::vector<double>(size, 0.0), 0}; }
};

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected ADAM update in place. Throws NonFiniteError (step =
/// state.t) on a non-finite gradient, leaving params and state untouched.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamHyper& hyper);

/// ADAM over every parameter of one network.
void adam_step(ModelParams& params, const ModelGrads& grads, AdamState& state,
               const AdamHyper& hyper);

enum class GeneratorLoss { non_saturating, minimax };

struct TrainConfig {
  std::size_t epochs = 10;
  /// Stop after this many generator updates; 0 means no cap.
  std::size_t max_generator_steps = 0;
  std::size_t batch_size = 8;
  double lr_generator = 1e-3;
  double lr_discriminator = 1e-3;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t d_steps_per_g_step = 1;
  std::uint64_t seed = 0;
  std::size_t noise_dim = 2;
  /// Checkpoint callback cadence in generator steps; 0 disables.
  std::size_t checkpoint_every = 0;
  GeneratorLoss generator_loss = GeneratorLoss::non_saturating;
  /// Weight of the mean squared error between translated and real targets
  /// added to the generator objective; 0 trains on the adversarial loss only.
  double reconstruction_weight = 0.0;
  /// Worker threads for per-sample passes inside a batch.
  unsigned threads = 1;

  void validate() const;
};

struct StepRecord {
  std::size_t step = 0;
  double loss_d = 0.0;
  double loss_g = 0.0;
  double d_real_mean = 0.0;
  double d_fake_mean = 0.0;

  bool operator==(const StepRecord&) const = default;
};

struct TrainHistory {
  std::vector<StepRecord> steps;

  /// step,loss_d,loss_g,d_real_mean,d_fake_mean with a header row.
  std::string to_csv() const;
  bool operator==(const TrainHistory&) const = default;
};

struct TrainResult {
  ModelParams translator;
  ModelParams discriminator;
  TrainHistory history;
};

using CheckpointCallback =
    std::function<void(std::size_t step, const ModelParams& translator, const ModelParams& discriminator)>;

/// Seeds for the two networks' initialisation derived from cfg.seed.
std::uint64_t translator_init_seed(std::uint64_t seed);
std::uint64_t discriminator_init_seed(std::uint64_t seed);

/// Standard-normal noise for one translator pass.
std::vector<double> sample_noise(const ArchSpec& arch, std::uint64_t seed);

/// Alternating adversarial training on the train split. `arch.noise_dim`
/// is overridden by cfg.noise_dim.
TrainResult train(const Dataset& dataset, const ArchSpec& arch, const TrainConfig& cfg,
                  const CheckpointCallback& on_checkpoint = {});

}  // namespace gtgan
