#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dgd/assignment.hpp"
#include "dgd/penalty.hpp"

namespace dgd::diffusion {

using geometry::Polygon;

inline constexpr int kModelHorizon = 16;
inline constexpr int kDescriptorPoints = 8;
inline constexpr int kCheckpointSchema = 1;

/// Maps a region to the unit scale: centroid at the origin, farthest vertex
/// at distance 1.
struct RegionFrame {
  Vec2 center;
  double scale = 1.0;
  Vec2 to_local(const Vec2& p) const { return (p - center) / scale; }
  Vec2 to_world(const Vec2& p) const { return center + p * scale; }
};
RegionFrame region_frame(const Polygon& region);

/// Boundary points at equal arc-length spacing in the region frame, flattened.
Eigen::VectorXd region_descriptor(const Polygon& region);

/// Linear interpolation of a path to `n` points over its index parameter.
Path resample(const Path& path, int n);

struct TrainingSample {
  int region = 0;
  Path traj;
};

struct Dataset {
  std::vector<Polygon> regions;
  std::vector<TrainingSample> samples;
};

struct TrainingSetConfig {
  int horizon = kModelHorizon;
  double max_step = 0.1;
  double bezier_fraction = 0.5;
  double boundary_fraction = 0.3;  // endpoints drawn on the region boundary
};

/// Constant-speed straight lines and quadratic Béziers inside the regions.
Dataset make_training_set(const decomp::ConvexPartition& partition, int count, std::uint64_t seed,
                          const TrainingSetConfig& cfg = {});
Dataset make_training_set(const std::vector<Polygon>& regions, int count, std::uint64_t seed,
                          const TrainingSetConfig& cfg = {});

/// Cosine schedule, steps 1..T. sigma(t)^2 = 1 - alpha_bar(t).
struct NoiseSchedule {
  std::vector<double> beta;       // index t - 1
  std::vector<double> alpha_bar;  // index t - 1
  int steps() const { return int(beta.size()); }
  double sigma(int t) const;
};
NoiseSchedule cosine_schedule(int steps);

/// Fully connected SiLU denoiser for trajectories in the region frame,
/// conditioned on the diffusion step and region descriptor. The network output
/// is mixed with its input by noise-level dependent skip and output scales.
class ScoreModel {
 public:
  ScoreModel() = default;
  ScoreModel(int hidden, int layers, int steps, std::uint64_t seed);

  int horizon() const { return kModelHorizon; }
  int input_dim() const;
  int output_dim() const { return 2 * kModelHorizon; }
  const NoiseSchedule& schedule() const { return schedule_; }

  /// Columns are samples. Denoised trajectories.
  Eigen::MatrixXd denoise(const Eigen::MatrixXd& traj, const Eigen::MatrixXd& descriptor,
                          const std::vector<int>& t) const;
  /// Noise estimate (x - x0) / sigma_t; the score is its negation over sigma_t.
  Eigen::MatrixXd predict_noise(const Eigen::MatrixXd& traj, const Eigen::MatrixXd& descriptor,
                                const std::vector<int>& t) const;

  /// Denoised estimate of a kModelHorizon-point local-frame trajectory.
  Eigen::VectorXd predict_x0(const Eigen::VectorXd& traj, const Eigen::VectorXd& descriptor, int t) const;

  std::string to_json() const;
  static ScoreModel from_json(const std::string& text);
  void save(const std::string& path) const;
  static ScoreModel load(const std::string& path);

  // parameters, exposed for the optimizer
  std::vector<Eigen::MatrixXd> W;
  std::vector<Eigen::VectorXd> b;

 private:
  friend struct Trainer;
  Eigen::MatrixXd features(const Eigen::MatrixXd& traj, const Eigen::MatrixXd& descriptor,
                           const std::vector<int>& t) const;
  NoiseSchedule schedule_;
};

struct TrainConfig {
  int epochs = 30;
  double lr = 3e-4;
  int batch = 64;
  int hidden = 128;
  int layers = 3;
  int steps = 25;
  double holdout = 0.1;
  std::uint64_t seed = 0;
};

struct TrainReport {
  double initial_train_loss = 0.0;
  double initial_heldout_loss = 0.0;
  std::vector<double> train_loss;    // per epoch, on fixed noise draws
  std::vector<double> heldout_loss;  // per epoch, on fixed noise draws
};

/// Denoising score matching with Adam. Throws DivergedTraining on a
/// non-finite loss.
ScoreModel train_score(const Dataset& data, const TrainConfig& cfg, TrainReport* report = nullptr);

struct SamplerConfig {
  int steps = 25;
  double eta = 1.0;  // eps_t = 2 eta (sigma_t^2 - sigma_{t-1}^2)
  double guidance_weight = 1.0;
  bool warm_start = true;
  double warm_sigma = 0.3;  // warm starts begin at the first step with sigma_t >= this
  double temperature = 0.25;  // 1/sqrt(2) with eta = 1 is the ancestral sampler
  std::uint64_t seed = 0;
};

/// Guided annealed Langevin sampling of every segment of a subproblem, one
/// path per segment. Waypoints are projected into the region after every
/// step and segment endpoints are clamped.
std::vector<Path> sample_subproblem(const assign::Subproblem& sub, const ScoreModel& model,
                                    const SamplerConfig& cfg, std::span<const Obstacle> obstacles);

}  // namespace dgd::diffusion
