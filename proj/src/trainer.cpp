#include "gtgan/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "gtgan/parallel.hpp"
#include "gtgan/rng.hpp"

namespace gtgan {

namespace {

constexpr std::uint64_t kInitSalt = 0x1417;
constexpr std::uint64_t kShuffleSalt = 0x5f0c;
constexpr std::uint64_t kNoiseSalt = 0x7a3e;

double clamp_probability(double p) {
  return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

double mean(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Per-sample contribution computed by a worker.
struct SampleGrads {
  ModelGrads grads;
  double probability_real = 0.0;
  double probability_fake = 0.0;
};

ModelGrads reduce(std::vector<SampleGrads>& items, const ModelParams& like) {
  ModelGrads total = ModelGrads::zeros_like(like);
  for (const auto& item : items) total.add(item.grads);
  return total;
}

void check_finite(std::size_t step, double value, const char* what) {
  if (!std::isfinite(value)) throw NonFiniteError(step, what);
}

}  // namespace

GanLosses gan_losses(std::span<const double> d_real, std::span<const double> d_fake) {
  if (d_real.empty() || d_fake.empty()) throw std::invalid_argument("gan_losses needs non-empty batches");
  double real_term = 0.0;
  for (double p : d_real) real_term -= std::log(clamp_probability(p));
  double fake_term = 0.0;
  double gen_term = 0.0;
  for (double p : d_fake) {
    const double q = clamp_probability(p);
    fake_term -= std::log(1.0 - q);
    gen_term -= std::log(q);
  }
  const double nr = static_cast<double>(d_real.size());
  const double nf = static_cast<double>(d_fake.size());
  return {real_term / nr + fake_term / nf, gen_term / nf};
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamHyper& h) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step shape mismatch");
  }
  if (!(h.lr >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
  for (double g : grads) {
    if (!std::isfinite(g)) throw NonFiniteError(static_cast<std::size_t>(state.t), "gradient");
  }
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    state.m[k] = h.beta1 * state.m[k] + (1.0 - h.beta1) * g;
    state.v[k] = h.beta2 * state.v[k] + (1.0 - h.beta2) * g * g;
    const double m_hat = state.m[k] / correction1;
    const double v_hat = state.v[k] / correction2;
    params[k] -= h.lr * m_hat / (std::sqrt(v_hat) + h.epsilon);
  }
}

void adam_step(ModelParams& params, const ModelGrads& grads, AdamState& state,
               const AdamHyper& hyper) {
  std::vector<double> values = params.flatten();
  const std::vector<double> g = grads.flatten();
  if (state.m.empty() && state.t == 0) state = AdamState::zeros(values.size());
  adam_step(values, g, state, hyper);
  params.assign(values);
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(lr_generator >= 0.0) || !(lr_discriminator >= 0.0)) {
    throw std::invalid_argument("learning rates must be >= 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("adam betas must be in [0,1)");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("adam epsilon must be > 0");
  if (d_steps_per_g_step < 1) throw std::invalid_argument("d_steps_per_g_step must be >= 1");
  if (!(reconstruction_weight >= 0.0)) throw std::invalid_argument("reconstruction weight must be >= 0");
}

std::string TrainHistory::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "step,loss_d,loss_g,d_real_mean,d_fake_mean\n";
  for (const auto& r : steps) {
    out << r.step << ',' << r.loss_d << ',' << r.loss_g << ',' << r.d_real_mean << ','
        << r.d_fake_mean << '\n';
  }
  return out.str();
}

std::uint64_t translator_init_seed(std::uint64_t seed) { return derive_seed(seed, 0, kInitSalt); }
std::uint64_t discriminator_init_seed(std::uint64_t seed) { return derive_seed(seed, 1, kInitSalt); }

std::vector<double> sample_noise(const ArchSpec& arch, std::uint64_t seed) {
  std::vector<double> noise(arch.noise_dim * arch.n);
  if (noise.empty()) return noise;
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : noise) v = normal(rng);
  return noise;
}

TrainResult train(const Dataset& dataset, const ArchSpec& arch_in, const TrainConfig& cfg,
                  const CheckpointCallback& on_checkpoint) {
  cfg.validate();
  dataset.validate();
  ArchSpec arch = arch_in;
  arch.noise_dim = cfg.noise_dim;
  if (dataset.n != arch.n) {
    throw std::invalid_argument("dataset n=" + std::to_string(dataset.n) +
                                " does not match arch n=" + std::to_string(arch.n));
  }
  const auto train_idx = dataset.indices(Split::train);
  if (train_idx.empty()) throw std::invalid_argument("dataset has an empty train split");

  TrainResult result{init_params(arch, Role::translator, translator_init_seed(cfg.seed)),
                     init_params(arch, Role::discriminator, discriminator_init_seed(cfg.seed)),
                     {}};
  ModelParams& T = result.translator;
  ModelParams& D = result.discriminator;
  AdamState adam_t = AdamState::zeros(T.param_count());
  AdamState adam_d = AdamState::zeros(D.param_count());
  const AdamHyper hyper_t{cfg.lr_generator, cfg.beta1, cfg.beta2, cfg.epsilon};
  const AdamHyper hyper_d{cfg.lr_discriminator, cfg.beta1, cfg.beta2, cfg.epsilon};

  // Inputs and targets as tensors, once.
  std::vector<FeatureTensor> inputs, targets;
  for (const auto& pair : dataset.pairs) {
    inputs.push_back(FeatureTensor::from_graph(pair.input));
    targets.push_back(FeatureTensor::from_graph(pair.target));
  }

  std::size_t g_step = 0;
  std::uint64_t noise_counter = 0;
  auto next_noise_seed = [&] { return derive_seed(cfg.seed, noise_counter++, kNoiseSalt); };
  const bool capped = cfg.max_generator_steps > 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (capped && g_step >= cfg.max_generator_steps) break;
    std::vector<std::size_t> order = train_idx;
    Rng shuffle_rng(derive_seed(cfg.seed, epoch, kShuffleSalt));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      if (capped && g_step >= cfg.max_generator_steps) break;
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);
      const std::span<const std::size_t> batch(order.data() + start, count);
      const double inv = 1.0 / static_cast<double>(count);

      // Discriminator updates.
      std::vector<double> d_real(count), d_fake(count);
      for (std::size_t d_step = 0; d_step < cfg.d_steps_per_g_step; ++d_step) {
        std::vector<std::uint64_t> seeds(count);
        for (auto& s : seeds) s = next_noise_seed();
        std::vector<SampleGrads> items(count);
        parallel_for(count, cfg.threads, [&](std::size_t b) {
          const std::size_t idx = batch[b];
          const auto noise = sample_noise(arch, seeds[b]);
          const auto fake = translator_forward(T, inputs[idx], noise, false);
          const auto real = discriminator_forward(D, targets[idx], inputs[idx], true);
          const auto faked = discriminator_forward(D, fake.output, inputs[idx], true);
          // d/dz of -log sigmoid(z) and of -log(1 - sigmoid(z)).
          auto g_real = critic_backward(D, *real.cache, -(1.0 - real.probability) * inv);
          const auto g_fake = critic_backward(D, *faked.cache, faked.probability * inv);
          g_real.params.add(g_fake.params);
          items[b] = {std::move(g_real.params), real.probability, faked.probability};
        });
        for (std::size_t b = 0; b < count; ++b) {
          d_real[b] = items[b].probability_real;
          d_fake[b] = items[b].probability_fake;
        }
        const ModelGrads grads = reduce(items, D);
        adam_step(D, grads, adam_d, hyper_d);
      }

      // Generator update through the frozen discriminator.
      std::vector<std::uint64_t> seeds(count);
      for (auto& s : seeds) s = next_noise_seed();
      std::vector<SampleGrads> items(count);
      const double recon_scale =
          cfg.reconstruction_weight * 2.0 * inv / static_cast<double>(arch.n * arch.n);
      parallel_for(count, cfg.threads, [&](std::size_t b) {
        const std::size_t idx = batch[b];
        const auto noise = sample_noise(arch, seeds[b]);
        const auto fake = translator_forward(T, inputs[idx], noise, true);
        const auto judged = discriminator_forward(D, fake.output, inputs[idx], true);
        const double p = judged.probability;
        const double g_logit = cfg.generator_loss == GeneratorLoss::non_saturating
                                   ? -(1.0 - p) * inv  // -log D(fake)
                                   : -p * inv;         // log(1 - D(fake))
        const auto back = critic_backward(D, *judged.cache, g_logit);
        FeatureTensor grad_out = back.inputs[0];
        if (recon_scale > 0.0) {
          const auto& out = fake.output.data();
          const auto& tgt = targets[idx].data();
          auto& g = grad_out.data();
          for (std::size_t k = 0; k < g.size(); ++k) g[k] += recon_scale * (out[k] - tgt[k]);
        }
        items[b] = {translator_backward(T, *fake.cache, grad_out), 0.0, p};
      });
      std::vector<double> g_fake(count);
      for (std::size_t b = 0; b < count; ++b) g_fake[b] = items[b].probability_fake;
      const ModelGrads grads = reduce(items, T);
      adam_step(T, grads, adam_t, hyper_t);
      ++g_step;

      const GanLosses d_losses = gan_losses(d_real, d_fake);
      const GanLosses g_losses = gan_losses(d_real, g_fake);
      StepRecord rec{g_step, d_losses.loss_d, g_losses.loss_g, mean(d_real), mean(d_fake)};
      check_finite(g_step, rec.loss_d, "discriminator loss");
      check_finite(g_step, rec.loss_g, "generator loss");
      result.history.steps.push_back(rec);

      if (on_checkpoint && cfg.checkpoint_every > 0 && g_step % cfg.checkpoint_every == 0) {
        on_checkpoint(g_step, T, D);
      }
    }
  }
  return result;
}

}  // namespace gtgan
